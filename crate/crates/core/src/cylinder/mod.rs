//! Truncated-cylinder problems on `G_{-k}^k` and the machinery built on them:
//! regime-dependent base conditions, the adjoint ground state, the
//! compatibility functional with its `r^k` correction, growing-`k`
//! orchestration and stabilization fits.

mod adjoint;
mod infinite;
mod semi;
mod stabilization;

pub use adjoint::{
    base_maxima, base_smallness_check, compatibility_residual, monotonicity_profile, solve_adjoint_truncated,
    AdjointState, BaseSmallness, MonotonicityProfile, TailFit,
};
pub use infinite::{solve_infinite, weighted_m_norm, CylinderSolution, HypothesisFlags, InfiniteOptions, KSolve};
pub use semi::{solve_semi_infinite, SemiCase, SemiInfiniteSolution};
pub use stabilization::{fit_stabilization, window_norms, StabilizationFit};

use serde::{Deserialize, Serialize};

use crate::cell::RegimeCase;
use crate::coefficients::{sample_on_grid, verify_ellipticity, CoefficientModel, CoefficientTable};
use crate::discretize::{assemble_primal, assemble_rhs, BaseCondition, BaseSide, DiscreteOperator, Scheme};
use crate::error::{Error, Result};
use crate::geometry::{build_cylinder_grid, BoundaryKind, CrossSection, CylinderGrid};
use crate::linalg::{solve_linear, Anchor, SolveOptions};

/// Half of the cylinder, `x₁ < 0` or `x₁ > 0`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Side {
    Left,
    Right,
}

impl Side {
    pub fn name(self) -> &'static str {
        match self {
            Side::Left => "left",
            Side::Right => "right",
        }
    }
}

/// One truncated problem on `G_{-k}^k`.
#[derive(Debug, Clone)]
pub struct TruncatedProblem {
    pub model: CoefficientModel,
    pub grid: CylinderGrid,
    pub table: CoefficientTable,
    pub bc: BaseCondition,
    pub scheme: Scheme,
    pub regime: RegimeCase,
    pub solver: SolveOptions,
    /// Window `G_lo^hi` whose mean is fixed to zero in pure-Neumann solves.
    pub anchor_window: (f64, f64),
}

impl TruncatedProblem {
    /// Builds the grid for `G_{-k}^k` with `cells_per_unit` axial cells per
    /// unit length, samples the model and checks ellipticity.
    #[allow(clippy::too_many_arguments)]
    pub fn new(
        model: &CoefficientModel,
        cs: &CrossSection,
        k: f64,
        cells_per_unit: usize,
        bc: BaseCondition,
        scheme: Scheme,
        regime: RegimeCase,
        solver: SolveOptions,
    ) -> Result<Self> {
        let cells = (2.0 * k * cells_per_unit as f64).round() as usize;
        let grid = build_cylinder_grid(k, cells, cs)?;
        let table = sample_on_grid(model, &grid)?;
        verify_ellipticity(&table)?;
        Ok(TruncatedProblem {
            model: model.clone(),
            grid,
            table,
            bc,
            scheme,
            regime,
            solver,
            anchor_window: (0.0, 1.0),
        })
    }

    pub fn k(&self) -> f64 {
        self.grid.half_length()
    }

    pub fn with_bc(&self, bc: BaseCondition) -> Self {
        TruncatedProblem { bc, ..self.clone() }
    }

    fn operator(&self, bc: &BaseCondition) -> Result<DiscreteOperator> {
        assemble_primal(self.grid.mesh(), &self.table, bc, self.scheme, self.scheme == Scheme::Upwind)
    }

    /// `Σ |f| vol + Σ |g| area`, the scale for compatibility tolerances.
    pub fn data_norm(&self) -> f64 {
        let mesh = self.grid.mesh();
        let interior: f64 = self.table.f.iter().zip(&mesh.volumes).map(|(f, v)| f.abs() * v).sum();
        let lateral: f64 = mesh
            .boundary_faces
            .iter()
            .zip(&self.table.g)
            .filter(|(face, _)| face.kind == BoundaryKind::Lateral)
            .map(|(face, g)| g.abs() * face.area)
            .sum();
        interior + lateral
    }
}

/// Solves `A u = f`, `B u = g` on the lateral boundary, `u = K∓` on the
/// bases `S_{∓k}`.
pub fn solve_truncated_dirichlet(prob: &TruncatedProblem, k_minus: f64, k_plus: f64) -> Result<Vec<f64>> {
    let both_dirichlet = matches!((&prob.bc.left, &prob.bc.right), (BaseSide::Dirichlet(_), BaseSide::Dirichlet(_)));
    if !both_dirichlet {
        return Err(Error::InvalidInput("Dirichlet truncation needs Dirichlet data on both bases".into()));
    }
    let bc = BaseCondition::dirichlet(k_minus, k_plus, prob.grid.mesh().n_cross);
    let op = prob.operator(&bc)?;
    let rhs = assemble_rhs(prob.grid.mesh(), &prob.table, &bc, prob.scheme)?;
    solve_linear(&op, &rhs, &prob.solver, None)
}

/// Discrete compatibility bookkeeping of one Neumann truncation.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CompatibilityReport {
    /// `Σ f p vol + Σ g p area` with `max p = 1`.
    pub functional: f64,
    /// Constant correction on `G_{-1}^1`; independent of the scale of `p`.
    pub r_k: f64,
    /// Functional of `(f + r^k χ, g)` against `p^k` with `∫ p^k = 1`.
    pub corrected_residual: f64,
    /// Refusal threshold for `|functional|`.
    pub tolerance: f64,
    /// `Σ |f| vol + Σ |g| area`.
    pub data_norm: f64,
}

impl CompatibilityReport {
    pub fn is_compatible(&self) -> bool {
        self.functional.abs() <= self.tolerance
    }
}

/// Conormal truncation with the `r^k` correction and the window anchor.
///
/// `p^k` comes from [`solve_adjoint_truncated`] rescaled to unit integral;
/// `r^k = -(Σ f p^k vol + Σ g p^k area) / Σ_{|x₁|<1} p^k vol` makes the
/// corrected data orthogonal to `p^k`, so the singular system is consistent.
/// `compat_tol` only sets [`CompatibilityReport::tolerance`]; the correction
/// is applied regardless.
pub fn solve_truncated_neumann(
    prob: &TruncatedProblem,
    compat_tol: f64,
) -> Result<(Vec<f64>, CompatibilityReport, AdjointState)> {
    if !prob.bc.is_pure_conormal() {
        return Err(Error::InvalidInput("Neumann truncation needs conormal data on both bases".into()));
    }
    let mesh = prob.grid.mesh();
    let adjoint = solve_adjoint_truncated(prob)?;
    let functional = compatibility_residual(&adjoint, &prob.grid, &prob.table);
    let p = &adjoint.p_integral;

    let support = mesh.cells_in_slab(-1.0, 1.0);
    let rhs0 = assemble_rhs(mesh, &prob.table, &prob.bc, prob.scheme)?;
    let functional_int: f64 = rhs0.iter().zip(p).zip(&mesh.volumes).map(|((r, p), v)| r * p * v).sum();
    let support_mass: f64 = support.iter().map(|&c| p[c] * mesh.volumes[c]).sum();
    let r_k = -functional_int / support_mass;
    let mut rhs = rhs0;
    for &c in &support {
        rhs[c] += r_k;
    }
    let corrected_residual: f64 = rhs.iter().zip(p).zip(&mesh.volumes).map(|((r, p), v)| r * p * v).sum();

    let data_norm = prob.data_norm();
    let report =
        CompatibilityReport { functional, r_k, corrected_residual, tolerance: compat_tol * data_norm, data_norm };

    let (lo, hi) = prob.anchor_window;
    let cells = mesh.cells_in_slab(lo, hi);
    if cells.is_empty() {
        return Err(Error::InvalidInput(format!("anchor window ({lo}, {hi}) contains no cells")));
    }
    let weights = cells.iter().map(|&c| mesh.volumes[c]).collect();
    let pin = p.iter().enumerate().fold((0, f64::MIN), |(bi, bv), (i, &v)| if v > bv { (i, v) } else { (bi, bv) }).0;
    let anchor = Anchor { cells, weights, value: 0.0, pin: Some(pin) };
    let op = prob.operator(&prob.bc)?;
    let u = solve_linear(&op, &rhs, &prob.solver, Some(&anchor))?;
    Ok((u, report, adjoint))
}
