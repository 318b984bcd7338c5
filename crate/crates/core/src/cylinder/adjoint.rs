//! Adjoint ground state on `G_{-k}^k` and its diagnostics.

use std::collections::BTreeMap;

use serde::Serialize;

use super::{Side, TruncatedProblem};
use crate::cell::{solve_cell_ground_state, Normalization, RegimeCase};
use crate::coefficients::CoefficientTable;
use crate::discretize::{assemble_primal, discrete_adjoint, BaseCondition, Scheme};
use crate::error::Result;
use crate::fit::least_squares_line;
use crate::geometry::{build_cell_grid, BoundaryKind, CylinderGrid, Zone};
use crate::linalg::{ground_state, norm_inf};

/// Relative sup distance accepted as periodic stabilization, in units of `h`.
const STABILIZATION_FACTOR: f64 = 10.0;

/// Behavior of the adjoint ground state on one side.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "kind")]
pub enum TailFit {
    /// `max_{x'} p(x₁, x') ≈ C e^{-δ |x₁|}`.
    ExponentialRate {
        delta: f64,
        r_squared: f64,
    },
    /// The outermost full period compared with the rescaled periodic cell
    /// ground state of that zone.
    PeriodicStabilization {
        reference: Vec<f64>,
        /// Sup distance relative to the tail maximum.
        distance: f64,
        tolerance: f64,
        stabilized: bool,
    },
    Unavailable {
        reason: String,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AdjointState {
    /// Ground state with `max p = 1`.
    pub p_values: Vec<f64>,
    /// Same vector with `Σ p vol = 1`.
    pub p_integral: Vec<f64>,
    pub normalization: Normalization,
    /// `‖A* p‖∞` for the max-normalized vector.
    pub residual: f64,
    pub iterations: usize,
    pub left: TailFit,
    pub right: TailFit,
}

impl AdjointState {
    pub fn tail(&self, side: Side) -> &TailFit {
        match side {
            Side::Left => &self.left,
            Side::Right => &self.right,
        }
    }
}

/// Positive kernel element of the discrete adjoint of the conormal
/// truncation, whatever base condition `prob` carries, with a tail analysis
/// per side: exponential rate where the regime drift on that side is
/// nonzero, comparison with the periodic cell ground state where it is zero.
pub fn solve_adjoint_truncated(prob: &TruncatedProblem) -> Result<AdjointState> {
    let mesh = prob.grid.mesh();
    let op =
        assemble_primal(mesh, &prob.table, &BaseCondition::conormal(), prob.scheme, prob.scheme == Scheme::Upwind)?;
    let adj = discrete_adjoint(&op)?;
    let gs = ground_state(&adj, &prob.solver)?;
    let mass: f64 = gs.vector.iter().zip(&mesh.volumes).map(|(p, v)| p * v).sum();
    let p_integral = gs.vector.iter().map(|p| p / mass).collect();
    let residual = norm_inf(&adj.apply(&gs.vector));
    let left = tail_fit(prob, &gs.vector, Side::Left, prob.regime.zero_flags.0)?;
    let right = tail_fit(prob, &gs.vector, Side::Right, prob.regime.zero_flags.1)?;
    Ok(AdjointState {
        p_values: gs.vector,
        p_integral,
        normalization: Normalization::MaxOne,
        residual,
        iterations: gs.iterations,
        left,
        right,
    })
}

fn tail_fit(prob: &TruncatedProblem, p: &[f64], side: Side, zero_drift: bool) -> Result<TailFit> {
    if zero_drift {
        periodic_stabilization(prob, p, side)
    } else {
        Ok(exponential_rate(&prob.grid, p, side))
    }
}

/// Cross-section maxima per axial slice: `(x₁, max)`.
fn slice_maxima(grid: &CylinderGrid, p: &[f64]) -> Vec<(f64, f64)> {
    let mesh = grid.mesh();
    (0..mesh.axial_cells)
        .map(|s| {
            let cells = s * mesh.n_cross..(s + 1) * mesh.n_cross;
            let max = cells.clone().map(|c| p[c]).fold(f64::MIN, f64::max);
            (mesh.x1(cells.start), max)
        })
        .collect()
}

/// Fit over the outer half of the side, leaving out the outermost window.
fn exponential_rate(grid: &CylinderGrid, p: &[f64], side: Side) -> TailFit {
    let k = grid.half_length();
    let points: Vec<(f64, f64)> = slice_maxima(grid, p)
        .into_iter()
        .filter(|&(x, _)| match side {
            Side::Left => x < 0.0,
            Side::Right => x > 0.0,
        })
        .map(|(x, m)| (x.abs(), m))
        .filter(|&(d, m)| d >= 0.5 * k && d <= k - 1.0 && m > 0.0)
        .map(|(d, m)| (d, m.ln()))
        .collect();
    match least_squares_line(&points) {
        Some(line) => TailFit::ExponentialRate { delta: -line.slope, r_squared: line.r_squared },
        None => TailFit::Unavailable { reason: format!("too few slices on the {} side to fit a rate", side.name()) },
    }
}

fn periodic_stabilization(prob: &TruncatedProblem, p: &[f64], side: Side) -> Result<TailFit> {
    let grid = &prob.grid;
    let mesh = grid.mesh();
    let cpu = grid.cells_per_unit();
    let (lo, hi, zone) = match side {
        Side::Left => (grid.x_lo, grid.x_lo + 1.0, Zone::Left),
        Side::Right => (grid.x_hi - 1.0, grid.x_hi, Zone::Right),
    };
    if Zone::of(0.5 * (lo + hi)) != zone {
        return Ok(TailFit::Unavailable { reason: format!("no full period inside the {} zone", side.name()) });
    }
    let cell_grid = build_cell_grid(cpu, &grid.cross_section)?;
    let reference = solve_cell_ground_state(zone, &prob.model, &cell_grid, prob.scheme)?;
    let tail = mesh.cells_in_slab(lo, hi);
    let matched: Vec<(usize, usize)> = tail
        .iter()
        .map(|&c| {
            let x = mesh.x1(c);
            let slot = (((x - x.floor()) * cpu as f64 - 0.5).round() as usize) % cpu;
            (c, slot * mesh.n_cross + mesh.cross_index(c))
        })
        .collect();
    let tail_mass: f64 = matched.iter().map(|&(c, _)| p[c] * mesh.volumes[c]).sum();
    let ref_mass: f64 = matched.iter().map(|&(c, r)| reference.values[r] * mesh.volumes[c]).sum();
    let scale = tail_mass / ref_mass;
    let tail_max = matched.iter().map(|&(c, _)| p[c]).fold(0.0, f64::max);
    let distance =
        matched.iter().map(|&(c, r)| (p[c] - scale * reference.values[r]).abs()).fold(0.0, f64::max) / tail_max;
    let tolerance = STABILIZATION_FACTOR * grid.h();
    Ok(TailFit::PeriodicStabilization {
        reference: reference.values,
        distance,
        tolerance,
        stabilized: distance <= tolerance,
    })
}

/// `Σ f p vol + Σ g p area` over the grid.
pub fn compatibility_residual(p: &AdjointState, grid: &CylinderGrid, table: &CoefficientTable) -> f64 {
    let mesh = grid.mesh();
    let interior: f64 = table.f.iter().zip(&p.p_values).zip(&mesh.volumes).map(|((f, p), v)| f * p * v).sum();
    let lateral: f64 = mesh
        .boundary_faces
        .iter()
        .zip(&table.g)
        .filter(|(face, _)| face.kind == BoundaryKind::Lateral)
        .map(|(face, g)| g * p.p_values[face.cell] * face.area)
        .sum();
    interior + lateral
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MonotonicityProfile {
    /// `max` over pairs `|z₁| > |y₁|` of `max_z p / min_y p`.
    pub beta_estimate: f64,
    /// `(|x₁|, cross-section max)` per bin, by increasing distance.
    pub profile: Vec<(f64, f64)>,
}

/// Empirical constant in `p(z) ≤ β p(y)` for `|z₁| > |y₁|`. Cells are binned
/// by `|x₁|`, so mirror slices share a bin.
pub fn monotonicity_profile(p: &AdjointState, grid: &CylinderGrid) -> MonotonicityProfile {
    let mesh = grid.mesh();
    let half_h = 0.5 * mesh.h;
    let mut bins: BTreeMap<i64, (f64, f64, f64)> = BTreeMap::new();
    for (c, &v) in p.p_values.iter().enumerate() {
        let d = mesh.x1(c).abs();
        let entry = bins.entry((d / half_h).round() as i64).or_insert((d, f64::MIN, f64::MAX));
        entry.1 = entry.1.max(v);
        entry.2 = entry.2.min(v);
    }
    let bins: Vec<(f64, f64, f64)> = bins.into_values().collect();
    let mut beta = f64::MIN;
    let mut outer_max = f64::MIN;
    for &(_, max, min) in bins.iter().rev() {
        if outer_max > f64::MIN {
            beta = beta.max(outer_max / min);
        }
        outer_max = outer_max.max(max);
    }
    if bins.len() < 2 {
        beta = 1.0;
    }
    MonotonicityProfile { beta_estimate: beta, profile: bins.iter().map(|&(d, max, _)| (d, max)).collect() }
}

/// Largest value of `p` in the slices touching `S_{-k}` and `S_k`.
pub fn base_maxima(p: &AdjointState, grid: &CylinderGrid) -> (f64, f64) {
    let mesh = grid.mesh();
    let side_max = |kind| mesh.base_faces(kind).map(|f| p.p_values[f.cell]).fold(0.0, f64::max);
    (side_max(BoundaryKind::BaseLeft), side_max(BoundaryKind::BaseRight))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BaseSmallness {
    /// Why the check did not apply, if it did not.
    pub skipped: Option<String>,
    /// `(k, left base max, right base max)`.
    pub maxima: Vec<(f64, f64, f64)>,
    pub rate_left: Option<f64>,
    pub rate_right: Option<f64>,
}

/// Decay rate of the base maxima of `p^k` along the `k`-sequence. Applies
/// only when both drifts are nonzero.
pub fn base_smallness_check(regime: &RegimeCase, maxima: &[(f64, f64, f64)]) -> BaseSmallness {
    let skipped = if regime.zero_flags.0 || regime.zero_flags.1 {
        Some("a drift is zero; base values need not be small".to_string())
    } else if maxima.len() < 2 {
        Some("need base maxima for at least two values of k".to_string())
    } else {
        None
    };
    if let Some(reason) = skipped {
        return BaseSmallness { skipped: Some(reason), maxima: maxima.to_vec(), rate_left: None, rate_right: None };
    }
    let rate = |pick: fn(&(f64, f64, f64)) -> f64| {
        let points: Vec<(f64, f64)> = maxima.iter().filter(|m| pick(m) > 0.0).map(|m| (m.0, pick(m).ln())).collect();
        least_squares_line(&points).map(|l| -l.slope)
    };
    BaseSmallness { skipped: None, maxima: maxima.to_vec(), rate_left: rate(|m| m.1), rate_right: rate(|m| m.2) }
}
