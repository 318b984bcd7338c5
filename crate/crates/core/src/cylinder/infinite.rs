//! Growing-`k` orchestration with regime dispatch.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::adjoint::{base_maxima, base_smallness_check, monotonicity_profile, BaseSmallness, MonotonicityProfile};
use super::stabilization::{fit_stabilization, StabilizationFit};
use super::{
    solve_truncated_dirichlet, solve_truncated_neumann, AdjointState, CompatibilityReport, Side, TruncatedProblem,
};
use crate::cell::{RegimeCase, RegimeTag};
use crate::coefficients::{verify_decay, verify_ellipticity, CoefficientModel, CoefficientTable, DecayReport};
use crate::discretize::{BaseCondition, Scheme};
use crate::error::{Error, Result};
use crate::geometry::{BoundaryKind, CrossSection, CylinderGrid};
use crate::linalg::SolveOptions;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct InfiniteOptions {
    /// Half lengths, strictly increasing.
    pub k_sequence: Vec<f64>,
    /// Reporting window `G_{-w}^w`.
    pub window: f64,
    pub cells_per_unit: usize,
    /// Successive-`k` sup difference on the window that counts as converged.
    pub tol: f64,
    /// Relative refusal threshold for the compatibility functional, in units
    /// of the `L¹` data norm.
    pub compat_tol: f64,
    pub scheme: Scheme,
    pub solver: SolveOptions,
    /// `(K⁻, K⁺)` prescribed in the two-parameter regime.
    pub limits: (f64, f64),
    /// Window whose mean is zero in Neumann truncations.
    pub anchor_window: (f64, f64),
}

impl Default for InfiniteOptions {
    fn default() -> Self {
        InfiniteOptions {
            k_sequence: vec![6.0, 8.0, 12.0, 16.0],
            window: 4.0,
            cells_per_unit: 64,
            tol: 1e-5,
            compat_tol: 1e-3,
            scheme: Scheme::Upwind,
            solver: SolveOptions::default(),
            limits: (0.0, 0.0),
            anchor_window: (0.0, 1.0),
        }
    }
}

impl InfiniteOptions {
    pub fn validate(&self) -> Result<()> {
        if self.k_sequence.is_empty() {
            return Err(Error::InvalidInput("k_sequence is empty".into()));
        }
        if self.k_sequence.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::InvalidInput("k_sequence must be strictly increasing".into()));
        }
        if !(self.window > 0.0) {
            return Err(Error::InvalidInput(format!("window must be positive, got {}", self.window)));
        }
        if let Some(&k) = self.k_sequence.iter().find(|&&k| k < self.window + 2.0) {
            return Err(Error::InvalidInput(format!(
                "k = {k} is shorter than the reporting window {} plus 2",
                self.window
            )));
        }
        if self.cells_per_unit == 0 {
            return Err(Error::InvalidInput("cells_per_unit must be positive".into()));
        }
        for (name, v) in [("tol", self.tol), ("compat_tol", self.compat_tol)] {
            if !(v > 0.0) {
                return Err(Error::InvalidInput(format!("{name} must be positive, got {v}")));
            }
        }
        self.solver.validate()
    }
}

/// One truncated solve.
#[derive(Debug, Clone, Serialize)]
pub struct KSolve {
    pub k: f64,
    /// Solution restricted to the reporting window.
    pub window_values: Vec<f64>,
    /// Sup difference to the previous `k` on the window.
    pub sup_change: Option<f64>,
    pub compatibility: Option<CompatibilityReport>,
    /// `(left, right)` base maxima of `p^k`, Neumann truncations only.
    pub base_maxima: Option<(f64, f64)>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct HypothesisFlags {
    /// Smallest sampled diffusion entry.
    pub min_diffusion: f64,
    pub data_decay: DecayReport,
    /// `‖(1 + x₁²) f‖_{L²} + ‖(1 + x₁²) g‖_{L²(Σ)}` on the last grid.
    pub m_norm: f64,
    /// A drift was classified as zero within tolerance.
    pub boundary_case: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct CylinderSolution {
    pub regime: RegimeCase,
    pub per_k: Vec<KSolve>,
    /// `x₁` and cross-section index of the window samples.
    pub window_x1: Vec<f64>,
    pub window_cross: Vec<usize>,
    pub converged: bool,
    pub convergence_history: Vec<f64>,
    /// Full solution on the last accepted `k`.
    pub final_k: f64,
    #[serde(skip)]
    pub final_grid: CylinderGrid,
    pub final_values: Vec<f64>,
    pub fit_left: Option<StabilizationFit>,
    pub fit_right: Option<StabilizationFit>,
    pub compatibility: Option<CompatibilityReport>,
    pub adjoint: Option<AdjointState>,
    pub monotonicity: Option<MonotonicityProfile>,
    pub base_smallness: Option<BaseSmallness>,
    pub hypotheses: HypothesisFlags,
}

impl CylinderSolution {
    pub fn k_minus(&self) -> Option<f64> {
        self.fit_left.as_ref().map(|f| f.limit)
    }

    pub fn k_plus(&self) -> Option<f64> {
        self.fit_right.as_ref().map(|f| f.limit)
    }

    pub fn gamma_minus(&self) -> Option<f64> {
        self.fit_left.as_ref().map(|f| f.gamma)
    }

    pub fn gamma_plus(&self) -> Option<f64> {
        self.fit_right.as_ref().map(|f| f.gamma)
    }
}

/// `‖(1 + x₁²) f‖_{L²(G)} + ‖(1 + x₁²) g‖_{L²(Σ)}` on a grid.
pub fn weighted_m_norm(grid: &CylinderGrid, table: &CoefficientTable) -> f64 {
    let mesh = grid.mesh();
    let w = |x: f64| 1.0 + x * x;
    let f_sq: f64 = (0..mesh.n_cells()).map(|c| (w(mesh.x1(c)) * table.f[c]).powi(2) * mesh.volumes[c]).sum();
    let g_sq: f64 = mesh
        .boundary_faces
        .iter()
        .zip(&table.g)
        .filter(|(face, _)| face.kind == BoundaryKind::Lateral)
        .map(|(face, g)| (w(face.center[0]) * g).powi(2) * face.area)
        .sum();
    f_sq.sqrt() + g_sq.sqrt()
}

struct Outcome {
    prob: TruncatedProblem,
    values: Vec<f64>,
    compatibility: Option<CompatibilityReport>,
    adjoint: Option<AdjointState>,
}

fn solve_one(
    model: &CoefficientModel,
    cs: &CrossSection,
    regime: &RegimeCase,
    opts: &InfiniteOptions,
    k: f64,
) -> Result<Outcome> {
    let n_cross = cs.n_cells();
    let bc = match regime.tag {
        RegimeTag::Compatibility => BaseCondition::conormal(),
        _ => BaseCondition::dirichlet(0.0, 0.0, n_cross),
    };
    let mut prob = TruncatedProblem::new(model, cs, k, opts.cells_per_unit, bc, opts.scheme, *regime, opts.solver)?;
    prob.anchor_window = opts.anchor_window;
    match regime.tag {
        RegimeTag::TwoParameter => {
            // limits carried by the homogeneous problem, data by the zero-base one
            let mut homogeneous = prob.clone();
            homogeneous.table.f.iter_mut().for_each(|v| *v = 0.0);
            homogeneous.table.g.iter_mut().for_each(|v| *v = 0.0);
            let (k_minus, k_plus) = opts.limits;
            let u_hom = solve_truncated_dirichlet(&homogeneous, k_minus, k_plus)?;
            let u_data = solve_truncated_dirichlet(&prob, 0.0, 0.0)?;
            let values = u_hom.iter().zip(&u_data).map(|(a, b)| a + b).collect();
            Ok(Outcome { prob, values, compatibility: None, adjoint: None })
        }
        RegimeTag::OneParameterLeft | RegimeTag::OneParameterRight => {
            let values = solve_truncated_dirichlet(&prob, 0.0, 0.0)?;
            Ok(Outcome { prob, values, compatibility: None, adjoint: None })
        }
        RegimeTag::Compatibility => {
            let (values, report, adjoint) = solve_truncated_neumann(&prob, opts.compat_tol)?;
            if !report.is_compatible() {
                return Err(Error::IncompatibleData(Box::new(report)));
            }
            Ok(Outcome { prob, values, compatibility: Some(report), adjoint: Some(adjoint) })
        }
    }
}

fn window_mean(values: &[f64], volumes: &[f64]) -> f64 {
    let mass: f64 = volumes.iter().sum();
    values.iter().zip(volumes).map(|(v, w)| v * w).sum::<f64>() / mass
}

/// Solves along the `k`-sequence with regime-appropriate truncations and
/// stops at the first `k` whose window change falls below `opts.tol`.
///
/// The truncated solves run concurrently; results are merged in `k` order,
/// so the outcome does not depend on scheduling. In one-parameter regimes the
/// solution is only defined up to a constant and window changes are measured
/// after aligning window means. Running out of `k` values is reported through
/// `converged = false`, not as an error.
pub fn solve_infinite(
    model: &CoefficientModel,
    cs: &CrossSection,
    regime: &RegimeCase,
    opts: &InfiniteOptions,
) -> Result<CylinderSolution> {
    opts.validate()?;
    let outcomes: Vec<Result<Outcome>> =
        opts.k_sequence.par_iter().map(|&k| solve_one(model, cs, regime, opts, k)).collect();

    let one_parameter = matches!(regime.tag, RegimeTag::OneParameterLeft | RegimeTag::OneParameterRight);
    let mut per_k: Vec<KSolve> = Vec::new();
    let mut history = Vec::new();
    let mut converged = false;
    let mut last: Option<Outcome> = None;
    let mut window_x1 = Vec::new();
    let mut window_cross = Vec::new();
    let mut window_volumes = Vec::new();
    for (k, outcome) in opts.k_sequence.iter().copied().zip(outcomes) {
        let outcome = outcome?;
        let mesh = outcome.prob.grid.mesh();
        let cells = mesh.cells_in_slab(-opts.window, opts.window);
        let mut window_values: Vec<f64> = cells.iter().map(|&c| outcome.values[c]).collect();
        if window_x1.is_empty() {
            window_x1 = cells.iter().map(|&c| mesh.x1(c)).collect();
            window_cross = cells.iter().map(|&c| mesh.cross_index(c)).collect();
            window_volumes = cells.iter().map(|&c| mesh.volumes[c]).collect();
        }
        if one_parameter {
            let mean = window_mean(&window_values, &window_volumes);
            window_values.iter_mut().for_each(|v| *v -= mean);
        }
        let sup_change = per_k.last().map(|prev: &KSolve| {
            prev.window_values.iter().zip(&window_values).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max)
        });
        let base = outcome.adjoint.as_ref().map(|a| base_maxima(a, &outcome.prob.grid));
        per_k.push(KSolve {
            k,
            window_values,
            sup_change,
            compatibility: outcome.compatibility.clone(),
            base_maxima: base,
        });
        last = Some(outcome);
        if let Some(change) = sup_change {
            history.push(change);
            log::info!("k = {k}: window change {change:e}");
            if change < opts.tol {
                converged = true;
                break;
            }
        }
    }
    let last = last.expect("k_sequence is non-empty");
    if !converged {
        log::warn!("k-sequence exhausted without reaching tolerance {:e}", opts.tol);
    }

    let grid = last.prob.grid.clone();
    let fit = |side| match fit_stabilization(&grid, &last.values, side) {
        Ok(f) => Some(f),
        Err(e) => {
            log::warn!("{e}");
            None
        }
    };
    let (fit_left, fit_right) = (fit(Side::Left), fit(Side::Right));

    let monotonicity = last.adjoint.as_ref().map(|a| monotonicity_profile(a, &grid));
    let base_smallness = (regime.tag == RegimeTag::Compatibility).then(|| {
        let maxima: Vec<(f64, f64, f64)> =
            per_k.iter().filter_map(|s| s.base_maxima.map(|(l, r)| (s.k, l, r))).collect();
        base_smallness_check(regime, &maxima)
    });
    let hypotheses = HypothesisFlags {
        min_diffusion: verify_ellipticity(&last.prob.table)?,
        data_decay: verify_decay(model, &grid)?,
        m_norm: weighted_m_norm(&grid, &last.prob.table),
        boundary_case: regime.boundary_case(),
    };
    Ok(CylinderSolution {
        regime: *regime,
        final_k: last.prob.k(),
        per_k,
        window_x1,
        window_cross,
        converged,
        convergence_history: history,
        final_grid: grid,
        final_values: last.values,
        fit_left,
        fit_right,
        compatibility: last.compatibility,
        adjoint: last.adjoint,
        monotonicity,
        base_smallness,
        hypotheses,
    })
}
