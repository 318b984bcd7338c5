//! Periodic adjoint cell problems, effective drifts and regime classification.
//!
//! Ground states are normalized by `∫_Y p = 1` before the drift is taken.
//! The kernel is only defined up to a positive factor; this choice makes a
//! constant drift `β` come out as exactly `β`.

use serde::{Deserialize, Serialize};

use crate::coefficients::{sample_on_cell, CoefficientModel, CoefficientTable};
use crate::discretize::{assemble_primal, discrete_adjoint, BaseCondition, Scheme};
use crate::error::{Error, Result};
use crate::geometry::{build_cell_grid, CellGrid, CrossSection, Zone};
use crate::linalg::{ground_state, norm_inf, SolveOptions};

/// Drifts smaller than this are rechecked on a refined cell grid.
const REFINE_BAND: f64 = 1e-2;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Normalization {
    /// `Σ p · vol = 1`.
    IntegralOne,
    /// `max p = 1`.
    MaxOne,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PeriodicGroundState {
    pub values: Vec<f64>,
    pub normalization: Normalization,
    /// `‖A* p‖∞` for the stored normalization.
    pub residual: f64,
    pub scheme: Scheme,
}

impl PeriodicGroundState {
    /// Copy rescaled to the requested normalization.
    pub fn normalized(&self, normalization: Normalization, volumes: &[f64]) -> Self {
        let scale = match normalization {
            Normalization::IntegralOne => self.values.iter().zip(volumes).map(|(p, v)| p * v).sum::<f64>(),
            Normalization::MaxOne => self.values.iter().copied().fold(0.0, f64::max),
        };
        PeriodicGroundState {
            values: self.values.iter().map(|p| p / scale).collect(),
            normalization,
            residual: self.residual / scale,
            scheme: self.scheme,
        }
    }
}

fn periodic_zone(zone: Zone) -> Result<()> {
    match zone {
        Zone::Middle => Err(Error::InvalidInput("the middle zone has no periodic cell problem".into())),
        _ => Ok(()),
    }
}

/// Positive kernel element of the adjoint cell operator on `T¹ × Q` with
/// conormal lateral boundary, normalized to unit integral.
pub fn solve_cell_ground_state(
    zone: Zone,
    model: &CoefficientModel,
    grid: &CellGrid,
    scheme: Scheme,
) -> Result<PeriodicGroundState> {
    periodic_zone(zone)?;
    let table = sample_on_cell(model, grid, zone)?;
    let op = assemble_primal(grid.mesh(), &table, &BaseCondition::conormal(), scheme, scheme == Scheme::Upwind)?;
    let adj = discrete_adjoint(&op)?;
    let gs = ground_state(&adj, &SolveOptions::default())?;
    let max_one =
        PeriodicGroundState { values: gs.vector, normalization: Normalization::MaxOne, residual: gs.residual, scheme };
    let out = max_one.normalized(Normalization::IntegralOne, &grid.mesh().volumes);
    let residual = norm_inf(&adj.apply(&out.values));
    Ok(PeriodicGroundState { residual, ..out })
}

/// Axial flux `a₁₁ ∂₁p + b₁ p` integrated over the cell.
///
/// The flux is evaluated on axial faces with the same convective value the
/// adjoint stencil uses (downwind for upwinding, the average for central
/// differences), so the discrete flux through every slice is the same
/// number and the sum is the exact discrete analogue of the integral.
pub fn effective_drift(ps: &PeriodicGroundState, zone: Zone, model: &CoefficientModel, grid: &CellGrid) -> Result<f64> {
    periodic_zone(zone)?;
    let table = sample_on_cell(model, grid, zone)?;
    Ok(drift_from_table(ps, grid, &table))
}

fn drift_from_table(ps: &PeriodicGroundState, grid: &CellGrid, table: &CoefficientTable) -> f64 {
    let mesh = grid.mesh();
    let p = ps.normalized(Normalization::IntegralOne, &mesh.volumes).values;
    let mut total = 0.0;
    for (idx, face) in mesh.interior_faces.iter().enumerate() {
        if face.axis != 0 {
            continue;
        }
        let (lo, hi) = (p[face.lo], p[face.hi]);
        let b = table.b_face[idx];
        let convected = match ps.scheme {
            Scheme::Upwind => {
                if b > 0.0 {
                    hi
                } else {
                    lo
                }
            }
            Scheme::Central => 0.5 * (lo + hi),
        };
        total += (table.a_face[idx] * (hi - lo) / face.distance + b * convected) * face.area * mesh.h;
    }
    total
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum RegimeTag {
    /// `b̄⁻ > 0`, `b̄⁺ < 0`: limits at both ends may be prescribed.
    TwoParameter,
    /// `b̄⁻ ≤ 0`, `b̄⁺ < 0`: unique up to an additive constant.
    OneParameterLeft,
    /// `b̄⁻ > 0`, `b̄⁺ ≥ 0`: unique up to an additive constant.
    OneParameterRight,
    /// `b̄⁻ ≤ 0`, `b̄⁺ ≥ 0`: solvable iff the data are orthogonal to the
    /// adjoint ground state.
    Compatibility,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RegimeCase {
    pub tag: RegimeTag,
    /// `(b̄⁻, b̄⁺)` as classified.
    pub drifts: (f64, f64),
    /// Whether each drift was treated as zero.
    pub zero_flags: (bool, bool),
    pub tolerance: f64,
}

impl RegimeCase {
    /// A drift sits on the zero boundary between two regimes.
    pub fn boundary_case(&self) -> bool {
        self.zero_flags.0 || self.zero_flags.1
    }
}

/// Classifies a drift pair; values within `eps_drift` of zero count as zero.
/// Zeros are owned by the inclusive inequalities, so `(0, 0)` is
/// `Compatibility` and `(+, 0)` is `OneParameterRight`.
///
/// # Panics
/// If `eps_drift` is not positive.
pub fn classify_regime(b_minus: f64, b_plus: f64, eps_drift: f64) -> RegimeCase {
    assert!(eps_drift > 0.0, "eps_drift must be positive, got {eps_drift}");
    let zero_flags = (b_minus.abs() <= eps_drift, b_plus.abs() <= eps_drift);
    let sign = |v: f64, zero: bool| if zero { 0.0 } else { v };
    let (m, p) = (sign(b_minus, zero_flags.0), sign(b_plus, zero_flags.1));
    let tag = if m <= 0.0 && p >= 0.0 {
        RegimeTag::Compatibility
    } else if m > 0.0 && p < 0.0 {
        RegimeTag::TwoParameter
    } else if p < 0.0 {
        RegimeTag::OneParameterLeft
    } else {
        RegimeTag::OneParameterRight
    };
    RegimeCase { tag, drifts: (b_minus, b_plus), zero_flags, tolerance: eps_drift }
}

/// Everything computed for one periodic zone.
#[derive(Debug, Clone)]
pub struct CellAnalysis {
    pub zone: Zone,
    pub grid: CellGrid,
    pub ground_state: PeriodicGroundState,
    /// Drift on the base grid.
    pub raw_drift: f64,
    /// Drift used for classification: the raw value, or the Richardson
    /// extrapolation from a 2x refined grid when the raw value is small.
    pub drift: f64,
    pub refined: bool,
}

/// Ground state and drift of one zone, with the near-zero recheck.
///
/// Upwinding perturbs the drift by `O(h)`, which can exceed `eps_drift` for
/// drifts that vanish in the limit. Small values are therefore recomputed on
/// a grid with twice the axial cells and extrapolated using the scheme order.
pub fn analyze_cell(
    zone: Zone,
    model: &CoefficientModel,
    cs: &CrossSection,
    axial_cells: usize,
    scheme: Scheme,
    eps_drift: f64,
) -> Result<CellAnalysis> {
    let grid = build_cell_grid(axial_cells, cs)?;
    let ground_state = solve_cell_ground_state(zone, model, &grid, scheme)?;
    let raw_drift = effective_drift(&ground_state, zone, model, &grid)?;
    let mut drift = raw_drift;
    let refined = raw_drift.abs() <= REFINE_BAND.max(100.0 * eps_drift);
    if refined {
        let fine = build_cell_grid(2 * axial_cells, cs)?;
        let fine_gs = solve_cell_ground_state(zone, model, &fine, scheme)?;
        let fine_drift = effective_drift(&fine_gs, zone, model, &fine)?;
        drift = match scheme {
            Scheme::Upwind => 2.0 * fine_drift - raw_drift,
            Scheme::Central => (4.0 * fine_drift - raw_drift) / 3.0,
        };
        log::debug!("{zone:?} drift {raw_drift:e} refined to {fine_drift:e}, extrapolated {drift:e}");
    }
    Ok(CellAnalysis { zone, grid, ground_state, raw_drift, drift, refined })
}

/// Both cell problems, solved concurrently, and the resulting regime.
pub fn regime_of_model(
    model: &CoefficientModel,
    cs: &CrossSection,
    axial_cells: usize,
    scheme: Scheme,
    eps_drift: f64,
) -> Result<(RegimeCase, CellAnalysis, CellAnalysis)> {
    if !(eps_drift > 0.0) {
        return Err(Error::InvalidInput(format!("eps_drift must be positive, got {eps_drift}")));
    }
    let (left, right) = rayon::join(
        || analyze_cell(Zone::Left, model, cs, axial_cells, scheme, eps_drift),
        || analyze_cell(Zone::Right, model, cs, axial_cells, scheme, eps_drift),
    );
    let (left, right) = (left?, right?);
    let case = classify_regime(left.drift, right.drift, eps_drift);
    Ok((case, left, right))
}
