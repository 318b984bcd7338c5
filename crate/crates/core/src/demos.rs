//! Built-in one-dimensional configurations with closed-form answers.
//!
//! The reference examples are written as `v'' + β v' = φ`. The canonical
//! operator here is `-(a u')' + b u'`, so they are stored with `b = -β`
//! and `f = -φ`; the solution `u = v` is unchanged.

use crate::coefficients::{CoefficientModel, ScalarField, ZoneCoefficients, Zoned};

fn model_1d(b: Zoned<ScalarField>, f: Zoned<ScalarField>) -> CoefficientModel {
    let zones = Zoned {
        left: ZoneCoefficients::isotropic(1, b.left),
        middle: ZoneCoefficients::isotropic(1, b.middle),
        right: ZoneCoefficients::isotropic(1, b.right),
    };
    CoefficientModel::new(1, zones, f, None).expect("built-in model is valid")
}

/// `b = sign(x₁)`: drifts `b̄⁻ = -1`, `b̄⁺ = +1`, adjoint kernel `e^{-|x₁|}`.
fn outward_drift() -> Zoned<ScalarField> {
    Zoned { left: ScalarField::constant(-1.0), middle: ScalarField::sign(1.0), right: ScalarField::constant(1.0) }
}

/// Source `f = -χ_{(-1,1)}`, not orthogonal to the kernel: Dirichlet
/// truncations grow like `e^k`.
pub fn example1() -> CoefficientModel {
    model_1d(
        outward_drift(),
        Zoned {
            left: ScalarField::constant(0.0),
            middle: ScalarField::indicator(-1.0, 1.0, -1.0),
            right: ScalarField::constant(0.0),
        },
    )
}

/// Source `f = -sign(x₁) χ_{(-1,1)}`, odd and hence orthogonal to `e^{-|x₁|}`.
pub fn example2() -> CoefficientModel {
    model_1d(
        outward_drift(),
        Zoned { left: ScalarField::constant(0.0), middle: ScalarField::sign(-1.0), right: ScalarField::constant(0.0) },
    )
}

/// Bounded solution of the second configuration that vanishes at `+∞`.
pub fn example2_solution(x: f64) -> f64 {
    let e = (-1.0f64).exp();
    if x < -1.0 {
        2.0 * e
    } else if x < 0.0 {
        -x + e * (2.0 - (-x).exp())
    } else if x < 1.0 {
        -x + e * x.exp()
    } else {
        0.0
    }
}

/// `K⁻ - K⁺` of the second configuration.
pub fn example2_limit_gap() -> f64 {
    2.0 * (-1.0f64).exp()
}

/// `b = -sign(x₁)`, no data: drifts `b̄⁻ = +1`, `b̄⁺ = -1`.
pub fn two_parameter_toy() -> CoefficientModel {
    model_1d(
        Zoned { left: ScalarField::constant(1.0), middle: ScalarField::sign(-1.0), right: ScalarField::constant(-1.0) },
        Zoned::uniform(ScalarField::constant(0.0)),
    )
}

/// Solution of the toy problem with limits `∓1`.
pub fn two_parameter_solution(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 - (-x).exp()
    } else {
        x.exp() - 1.0
    }
}

/// Left drift `-1`, right drift `0`, linear in between.
pub fn mixed_drift() -> CoefficientModel {
    model_1d(
        Zoned {
            left: ScalarField::constant(-1.0),
            middle: ScalarField::tabulate(-1.0, 2.0, vec![-1.0, 0.0]),
            right: ScalarField::constant(0.0),
        },
        Zoned::uniform(ScalarField::constant(0.0)),
    )
}
