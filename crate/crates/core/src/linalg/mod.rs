//! Linear solvers for the assembled operators and inverse power iteration
//! for the positive kernel element of a singular adjoint.

mod banded;
mod bicgstab;
mod sparse;

pub use banded::BandedLu;
pub use bicgstab::{bicgstab, KrylovOutcome};
pub use sparse::{dot, norm_inf, CsrMatrix};

use serde::{Deserialize, Serialize};

use crate::discretize::DiscreteOperator;
use crate::error::{Error, Result};

/// Banded storage above this many entries switches `Auto` to BiCGStab.
const BANDED_STORAGE_LIMIT: usize = 20_000_000;
const SHIFT_FACTOR: f64 = 1e-8;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SolveMethod {
    /// Banded LU unless the band storage is too large.
    #[default]
    Auto,
    #[serde(rename = "direct")]
    DirectBanded,
    Iterative,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SolveOptions {
    pub method: SolveMethod,
    pub tol: f64,
    pub max_iter: usize,
}

impl Default for SolveOptions {
    fn default() -> Self {
        SolveOptions { method: SolveMethod::Auto, tol: 1e-10, max_iter: 10_000 }
    }
}

impl SolveOptions {
    pub fn validate(&self) -> Result<()> {
        if !(self.tol > 0.0) {
            return Err(Error::InvalidInput(format!("solver tolerance must be positive, got {}", self.tol)));
        }
        Ok(())
    }
}

/// Fixes the free additive constant of a pure-Neumann system:
/// the volume-weighted mean of the solution over `cells` equals `value`.
#[derive(Debug, Clone, PartialEq)]
pub struct Anchor {
    pub cells: Vec<usize>,
    pub weights: Vec<f64>,
    pub value: f64,
    /// Equation replaced by the pinning row; defaults to the first anchor cell.
    /// Pick a cell where the left null vector is large.
    pub pin: Option<usize>,
}

impl Anchor {
    pub fn mean_of(&self, u: &[f64]) -> f64 {
        let total: f64 = self.weights.iter().sum();
        self.cells.iter().zip(&self.weights).map(|(&c, w)| w * u[c]).sum::<f64>() / total
    }
}

/// A factored (or iteration-ready) system `A x = b`.
enum Prepared {
    Banded { lu: BandedLu, order: Option<Vec<usize>> },
    Krylov { matrix: CsrMatrix, tol: f64, max_iter: usize },
}

impl Prepared {
    fn new(matrix: &CsrMatrix, order: Option<&[usize]>, opts: &SolveOptions) -> Result<Self> {
        let permuted = order.map(|o| matrix.permuted(o));
        let banded_matrix = permuted.as_ref().unwrap_or(matrix);
        let use_banded = match opts.method {
            SolveMethod::DirectBanded => true,
            SolveMethod::Iterative => false,
            SolveMethod::Auto => BandedLu::storage(banded_matrix) <= BANDED_STORAGE_LIMIT,
        };
        if use_banded {
            let lu = BandedLu::factor(banded_matrix).map_err(|_| Error::SingularWithoutAnchor)?;
            Ok(Prepared::Banded { lu, order: order.map(<[usize]>::to_vec) })
        } else {
            Ok(Prepared::Krylov { matrix: matrix.clone(), tol: opts.tol, max_iter: opts.max_iter })
        }
    }

    fn solve(&self, rhs: &[f64]) -> Result<Vec<f64>> {
        match self {
            Prepared::Banded { lu, order: None } => {
                let mut x = rhs.to_vec();
                lu.solve_in_place(&mut x);
                Ok(x)
            }
            Prepared::Banded { lu, order: Some(order) } => {
                let mut y: Vec<f64> = order.iter().map(|&i| rhs[i]).collect();
                lu.solve_in_place(&mut y);
                let mut x = vec![0.0; rhs.len()];
                for (p, &i) in order.iter().enumerate() {
                    x[i] = y[p];
                }
                Ok(x)
            }
            Prepared::Krylov { matrix, tol, max_iter } => {
                let mut x = vec![0.0; rhs.len()];
                let out = bicgstab(matrix, rhs, &mut x, *tol, *max_iter);
                if !out.converged {
                    return Err(Error::IterationLimitExceeded { max_iter: *max_iter, residual: out.residual });
                }
                Ok(x)
            }
        }
    }

    fn is_direct(&self) -> bool {
        matches!(self, Prepared::Banded { .. })
    }
}

/// Solves a square sparse system, with one step of iterative refinement on
/// the direct path.
pub fn solve_matrix(matrix: &CsrMatrix, order: Option<&[usize]>, rhs: &[f64], opts: &SolveOptions) -> Result<Vec<f64>> {
    opts.validate()?;
    let prepared = Prepared::new(matrix, order, opts)?;
    let mut x = prepared.solve(rhs)?;
    if prepared.is_direct() {
        let ax = matrix.matvec(&x);
        let r: Vec<f64> = rhs.iter().zip(&ax).map(|(b, a)| b - a).collect();
        let dx = prepared.solve(&r)?;
        for (xi, d) in x.iter_mut().zip(dx) {
            *xi += d;
        }
    }
    Ok(x)
}

/// Normwise backward error `‖b - A x‖∞ / (‖A‖∞ ‖x‖∞ + ‖b‖∞)`.
pub fn backward_error(matrix: &CsrMatrix, x: &[f64], rhs: &[f64]) -> f64 {
    let ax = matrix.matvec(x);
    let r = rhs.iter().zip(&ax).fold(0.0f64, |m, (b, a)| m.max((b - a).abs()));
    let denom = matrix.norm_inf() * norm_inf(x) + norm_inf(rhs);
    if denom == 0.0 {
        r
    } else {
        r / denom
    }
}

/// Solves `A x = rhs` for an assembled operator.
///
/// Pure-Neumann operators must come with an [`Anchor`]: the anchored system
/// replaces the pinned equation by `x_pin = 0` (the dropped equation is
/// implied by compatibility) and then shifts by the constant that meets the
/// anchor. The result is checked against `opts.tol` in backward-error form.
pub fn solve_linear(
    op: &DiscreteOperator,
    rhs: &[f64],
    opts: &SolveOptions,
    anchor: Option<&Anchor>,
) -> Result<Vec<f64>> {
    if rhs.len() != op.n() {
        return Err(Error::InvalidInput(format!("rhs has {} entries for {} unknowns", rhs.len(), op.n())));
    }
    let order = op.band_order.as_deref();
    let x = match anchor {
        None => {
            if op.is_pure_neumann() {
                return Err(Error::SingularWithoutAnchor);
            }
            solve_matrix(&op.matrix, order, rhs, opts)?
        }
        Some(anchor) => {
            if anchor.cells.is_empty() || anchor.cells.len() != anchor.weights.len() {
                return Err(Error::InvalidInput("anchor needs matching cells and weights".into()));
            }
            let scale = op.matrix.norm_inf();
            let row_sum = norm_inf(&op.matrix.row_sums());
            if row_sum > 1e-10 * scale {
                return Err(Error::AnchorKernelMismatch { row_sum });
            }
            let pin = anchor.pin.unwrap_or(anchor.cells[0]);
            let pinned = op.matrix.with_unit_row(pin);
            let mut b = rhs.to_vec();
            b[pin] = 0.0;
            let mut x = solve_matrix(&pinned, order, &b, opts)?;
            let shift = anchor.value - anchor.mean_of(&x);
            for xi in &mut x {
                *xi += shift;
            }
            x
        }
    };
    let err = backward_error(&op.matrix, &x, rhs);
    if !(err <= opts.tol) {
        return Err(Error::ResidualTooLarge { residual: err, tol: opts.tol });
    }
    Ok(x)
}

#[derive(Debug, Clone, PartialEq)]
pub struct GroundStateResult {
    /// Positive kernel vector with maximum entry 1.
    pub vector: Vec<f64>,
    /// `‖A* p‖∞` after normalization.
    pub residual: f64,
    pub iterations: usize,
}

/// Principal kernel vector of a singular adjoint by shifted inverse
/// iteration from the all-ones vector.
pub fn ground_state(adj: &DiscreteOperator, opts: &SolveOptions) -> Result<GroundStateResult> {
    ground_state_from(adj, opts, &vec![1.0; adj.n()])
}

/// Inverse iteration on `A* + σI`, `σ = 1e-8‖A*‖∞`, renormalized in max norm
/// each step; stops when successive iterates differ by less than `opts.tol`.
pub fn ground_state_from(adj: &DiscreteOperator, opts: &SolveOptions, initial: &[f64]) -> Result<GroundStateResult> {
    opts.validate()?;
    let n = adj.n();
    if initial.len() != n || norm_inf(initial) == 0.0 {
        return Err(Error::InvalidInput("initial vector must be nonzero with one entry per cell".into()));
    }
    let sigma = SHIFT_FACTOR * adj.matrix.norm_inf();
    let shifted = adj.matrix.shifted(sigma);
    let inner_opts = SolveOptions { tol: opts.tol * 1e-3, ..*opts };
    let prepared = Prepared::new(&shifted, adj.band_order.as_deref(), &inner_opts)?;

    let normalize = |v: &mut Vec<f64>| {
        let (idx, _) = v
            .iter()
            .enumerate()
            .fold((0, 0.0f64), |(bi, bv), (i, &x)| if x.abs() > bv { (i, x.abs()) } else { (bi, bv) });
        let s = v[idx];
        for x in v.iter_mut() {
            *x /= s;
        }
    };

    let mut x = initial.to_vec();
    normalize(&mut x);
    let mut iterations = 0;
    let mut converged = false;
    while iterations < opts.max_iter {
        iterations += 1;
        let mut y = prepared.solve(&x)?;
        normalize(&mut y);
        let diff = y.iter().zip(&x).fold(0.0f64, |m, (a, b)| m.max((a - b).abs()));
        x = y;
        if diff < opts.tol {
            converged = true;
            break;
        }
    }
    if !converged {
        return Err(Error::IterationLimitExceeded { max_iter: opts.max_iter, residual: f64::NAN });
    }
    if let Some((cell, &value)) = x.iter().enumerate().find(|(_, &v)| !(v > 0.0)) {
        return Err(Error::NonPositiveGroundState { cell, value });
    }
    let max = x.iter().copied().fold(0.0, f64::max);
    for v in &mut x {
        *v /= max;
    }
    let residual = norm_inf(&adj.apply(&x));
    Ok(GroundStateResult { vector: x, residual, iterations })
}
