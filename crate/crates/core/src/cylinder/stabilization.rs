//! Limits `K±` and rates `γ±` from unit-window norms of a solution.

use serde::Serialize;

use super::Side;
use crate::error::{Error, Result};
use crate::fit::least_squares_line;
use crate::geometry::CylinderGrid;

/// Window norms at or below this are treated as zero.
const NORM_FLOOR: f64 = 1e-12;
const MIN_WINDOWS: usize = 6;
/// Below this `R²` the tail is not log-linear.
const GOOD_FIT: f64 = 0.995;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StabilizationFit {
    pub side: Side,
    /// Mean over the outermost window.
    pub limit: f64,
    /// `+∞` when every window norm is below the floor.
    pub gamma: f64,
    /// Of the log-linear fit over all windows but the outermost.
    pub r_squared: f64,
    pub poor_fit: bool,
    /// `(n, ‖u - K‖_{L²})` by distance `n` from the origin.
    pub window_norms: Vec<(usize, f64)>,
}

/// Cells of the unit window at distance `n` on `side`: `(n, n+1)` on the
/// right, `(-n-1, -n)` on the left.
fn window_cells(grid: &CylinderGrid, side: Side, n: usize) -> Vec<usize> {
    let n = n as f64;
    match side {
        Side::Right => grid.mesh().cells_in_slab(n, n + 1.0),
        Side::Left => grid.mesh().cells_in_slab(-n - 1.0, -n),
    }
}

fn full_windows(grid: &CylinderGrid, side: Side) -> usize {
    let reach = match side {
        Side::Right => grid.x_hi,
        Side::Left => -grid.x_lo,
    };
    if reach <= 0.0 {
        0
    } else {
        (reach + 1e-9).floor() as usize
    }
}

/// `L²` norms of `u - reference` over the full unit windows of one side.
pub fn window_norms(grid: &CylinderGrid, values: &[f64], side: Side, reference: f64) -> Vec<(usize, f64)> {
    let volumes = &grid.mesh().volumes;
    (0..full_windows(grid, side))
        .map(|n| {
            let sq: f64 =
                window_cells(grid, side, n).iter().map(|&c| (values[c] - reference).powi(2) * volumes[c]).sum();
            (n, sq.sqrt())
        })
        .collect()
}

/// Rate from the windows with `⌈N/3⌉ ≤ n < ⌊2N/3⌋`; windows near the base
/// carry the truncation boundary layer.
pub(crate) fn middle_third_rate(norms: &[(usize, f64)]) -> Option<f64> {
    let count = norms.len();
    let lo = count.div_ceil(3);
    let hi = 2 * count / 3;
    let points: Vec<(f64, f64)> =
        norms.iter().filter(|&&(n, v)| n >= lo && n < hi && v > NORM_FLOOR).map(|&(n, v)| (n as f64, v.ln())).collect();
    least_squares_line(&points).map(|l| -l.slope)
}

/// Fits `‖u - K‖_{L²(G_n^{n+1})} ≈ C e^{-γ n}` on one side.
///
/// `K` is the mean over the outermost window. `γ` comes from the middle third
/// of the windows and the quality flag from all windows but the outermost.
pub fn fit_stabilization(grid: &CylinderGrid, values: &[f64], side: Side) -> Result<StabilizationFit> {
    let count = full_windows(grid, side);
    if count < MIN_WINDOWS {
        return Err(Error::InsufficientWindows { side: side.name(), needed: MIN_WINDOWS, found: count });
    }
    let outer = window_cells(grid, side, count - 1);
    let volumes = &grid.mesh().volumes;
    let mass: f64 = outer.iter().map(|&c| volumes[c]).sum();
    let limit = outer.iter().map(|&c| values[c] * volumes[c]).sum::<f64>() / mass;
    let norms = window_norms(grid, values, side, limit);

    let inner: Vec<(f64, f64)> =
        norms[..count - 1].iter().filter(|&&(_, v)| v > NORM_FLOOR).map(|&(n, v)| (n as f64, v.ln())).collect();
    // already at round-off from the fit windows outward: stabilized faster than any rate
    let settled = norms[count.div_ceil(3)..].iter().all(|&(_, v)| v <= NORM_FLOOR);
    if inner.is_empty() || settled {
        return Ok(StabilizationFit {
            side,
            limit,
            gamma: f64::INFINITY,
            r_squared: 1.0,
            poor_fit: false,
            window_norms: norms,
        });
    }
    let r_squared = least_squares_line(&inner).map_or(f64::NAN, |l| l.r_squared);
    let gamma = middle_third_rate(&norms).unwrap_or(f64::NAN);
    Ok(StabilizationFit {
        side,
        limit,
        gamma,
        r_squared,
        poor_fit: !(r_squared >= GOOD_FIT) || !gamma.is_finite(),
        window_norms: norms,
    })
}
