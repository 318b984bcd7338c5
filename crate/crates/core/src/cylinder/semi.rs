//! Dirichlet problems on the half cylinder `G_0^k`.

use serde::Serialize;

use super::stabilization::{middle_third_rate, window_norms};
use super::Side;
use crate::cell::analyze_cell;
use crate::coefficients::{sample_on_grid, verify_ellipticity, CoefficientModel};
use crate::discretize::{assemble_primal, assemble_rhs, BaseCondition, BaseSide, Scheme};
use crate::error::{Error, Result};
use crate::geometry::{build_interval_grid, CrossSection, Zone};
use crate::linalg::{solve_linear, SolveOptions};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum SemiCase {
    /// `b̄ > 0`: the solution settles to a constant fixed by `φ`.
    PositiveDrift,
    /// `b̄ < 0`: the solution settles to the far value `K`.
    NegativeDrift,
    /// `b̄ = 0`: the solution stays close to a linear profile.
    ZeroDrift,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SemiInfiniteSolution {
    pub k: f64,
    pub x1: Vec<f64>,
    pub values: Vec<f64>,
    pub drift: f64,
    pub case: SemiCase,
    /// Fitted interior constant; `None` in the zero-drift case.
    pub constant: Option<f64>,
    /// Rate of approach to `constant` over the middle third of the windows.
    pub gamma: Option<f64>,
    /// Sup distance to `φ̄ + (K - φ̄) x₁/k`, zero-drift case only.
    pub linear_deviation: Option<f64>,
}

/// Solves on `(0, k) × Q` with `u = φ` on `S_0` and `u = K` on `S_k`.
///
/// The coefficients on `x₁ > 1` are the right periodic zone; `(0, 1)` may
/// carry a compact perturbation. The drift of the right zone selects what is
/// fitted. For positive drift the interior constant is read off the middle
/// window; it is a numerical estimate, not a closed form.
#[allow(clippy::too_many_arguments)]
pub fn solve_semi_infinite(
    model: &CoefficientModel,
    cs: &CrossSection,
    phi: &[f64],
    far_value: f64,
    k: f64,
    cells_per_unit: usize,
    scheme: Scheme,
    solver: &SolveOptions,
    eps_drift: f64,
) -> Result<SemiInfiniteSolution> {
    if !(k >= 4.0) {
        return Err(Error::InvalidInput(format!("semi-infinite solve needs k >= 4, got {k}")));
    }
    let cells = (k * cells_per_unit as f64).round() as usize;
    let grid = build_interval_grid(0.0, k, cells, cs)?;
    let mesh = grid.mesh();
    if phi.len() != mesh.n_cross {
        return Err(Error::InvalidInput(format!(
            "base data has {} values for {} cross-section cells",
            phi.len(),
            mesh.n_cross
        )));
    }
    let table = sample_on_grid(model, &grid)?;
    verify_ellipticity(&table)?;
    let bc =
        BaseCondition { left: BaseSide::Dirichlet(phi.to_vec()), right: BaseSide::constant(far_value, mesh.n_cross) };
    let op = assemble_primal(mesh, &table, &bc, scheme, scheme == Scheme::Upwind)?;
    let rhs = assemble_rhs(mesh, &table, &bc, scheme)?;
    let values = solve_linear(&op, &rhs, solver, None)?;

    let drift = analyze_cell(Zone::Right, model, cs, cells_per_unit, scheme, eps_drift)?.drift;
    let case = if drift > eps_drift {
        SemiCase::PositiveDrift
    } else if drift < -eps_drift {
        SemiCase::NegativeDrift
    } else {
        SemiCase::ZeroDrift
    };
    let x1: Vec<f64> = (0..mesh.n_cells()).map(|c| mesh.x1(c)).collect();
    let volumes = &mesh.volumes;

    let (constant, gamma, linear_deviation) = match case {
        SemiCase::PositiveDrift => {
            let mid = (0.5 * k).floor();
            let cells = mesh.cells_in_slab(mid, mid + 1.0);
            let mass: f64 = cells.iter().map(|&c| volumes[c]).sum();
            let c_inf = cells.iter().map(|&c| values[c] * volumes[c]).sum::<f64>() / mass;
            // approach to C from the S_0 side only: windows left of the middle
            let norms: Vec<(usize, f64)> = window_norms(&grid, &values, Side::Right, c_inf)
                .into_iter()
                .filter(|&(n, _)| (n as f64) < mid)
                .collect();
            (Some(c_inf), Some(middle_third_rate(&norms).unwrap_or(f64::INFINITY)), None)
        }
        SemiCase::NegativeDrift => {
            let norms = window_norms(&grid, &values, Side::Right, far_value);
            (Some(far_value), middle_third_rate(&norms), None)
        }
        SemiCase::ZeroDrift => {
            let total: f64 = (0..mesh.n_cross).map(|j| volumes[j]).sum();
            let phi_mean = (0..mesh.n_cross).map(|j| phi[j] * volumes[j]).sum::<f64>() / total;
            let deviation = x1
                .iter()
                .zip(&values)
                .map(|(&x, &v)| (v - (phi_mean + (far_value - phi_mean) * x / k)).abs())
                .fold(0.0, f64::max);
            (None, None, Some(deviation))
        }
    };
    Ok(SemiInfiniteSolution { k, x1, values, drift, case, constant, gamma, linear_deviation })
}
