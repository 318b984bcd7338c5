//! Whole-pipeline checks through the public API only.

use cyldrift::cell::{regime_of_model, RegimeTag};
use cyldrift::coefficients::{CoefficientModel, ScalarField, ZoneCoefficients, Zoned};
use cyldrift::cylinder::{solve_infinite, solve_truncated_dirichlet, InfiniteOptions, TruncatedProblem};
use cyldrift::demos;
use cyldrift::discretize::{BaseCondition, Scheme};
use cyldrift::geometry::CrossSection;
use cyldrift::linalg::SolveOptions;
use cyldrift::Error;
use proptest::prelude::*;

const EPS: f64 = 1e-6;

/// 1D model with oscillating drifts `c± + s·sin(2πx₁)` and unit diffusion.
fn oscillating(c_minus: f64, c_plus: f64, s: f64) -> CoefficientModel {
    let b = |c: f64| ScalarField::fourier(&[(0, c, 0.0), (1, 0.0, s)]);
    let zones = Zoned {
        left: ZoneCoefficients::isotropic(1, b(c_minus)),
        middle: ZoneCoefficients::isotropic(1, ScalarField::constant(0.0)),
        right: ZoneCoefficients::isotropic(1, b(c_plus)),
    };
    CoefficientModel::new(1, zones, Zoned::uniform(ScalarField::constant(0.0)), None).unwrap()
}

#[test]
fn two_parameter_toy_matches_its_closed_form() {
    let model = demos::two_parameter_toy();
    let cs = CrossSection::point();
    let (case, _, _) = regime_of_model(&model, &cs, 64, Scheme::Upwind, EPS).unwrap();
    assert_eq!(case.tag, RegimeTag::TwoParameter);
    let opts = InfiniteOptions { limits: (-1.0, 1.0), ..InfiniteOptions::default() };
    let sol = solve_infinite(&model, &cs, &case, &opts).unwrap();
    assert!(sol.converged);
    let mesh = sol.final_grid.mesh();
    let err = sol
        .final_values
        .iter()
        .enumerate()
        .map(|(c, u)| (u - demos::two_parameter_solution(mesh.x1(c))).abs())
        .fold(0.0, f64::max);
    assert!(err <= 5.0 * sol.final_grid.h(), "{err}");
    assert!((sol.k_minus().unwrap() + 1.0).abs() < 1e-6);
    assert!((sol.k_plus().unwrap() - 1.0).abs() < 1e-6);
}

#[test]
fn mirroring_swaps_and_negates_the_drifts() {
    let cs = CrossSection::point();
    for scheme in [Scheme::Upwind, Scheme::Central] {
        let model = oscillating(-0.4, 0.9, 0.8);
        let (case, _, _) = regime_of_model(&model, &cs, 64, scheme, EPS).unwrap();
        let (mirror, _, _) = regime_of_model(&model.mirrored().unwrap(), &cs, 64, scheme, EPS).unwrap();
        let (m, p) = case.drifts;
        assert!((mirror.drifts.0 + p).abs() < 1e-10, "{scheme:?}: {:?} vs {:?}", case.drifts, mirror.drifts);
        assert!((mirror.drifts.1 + m).abs() < 1e-10, "{scheme:?}");
        assert_eq!(case.tag, RegimeTag::Compatibility);
        assert_eq!(mirror.tag, RegimeTag::Compatibility);
    }
}

#[test]
fn oscillation_lowers_the_drift_below_its_mean() {
    // an oscillating drift traps mass near its stable points, so the net drift falls below the mean
    let cs = CrossSection::point();
    let (flat, _, _) = regime_of_model(&oscillating(-0.5, 0.5, 0.0), &cs, 64, Scheme::Central, EPS).unwrap();
    let (wavy, _, _) = regime_of_model(&oscillating(-0.5, 0.5, 3.0), &cs, 64, Scheme::Central, EPS).unwrap();
    assert!((flat.drifts.1 - 0.5).abs() < 1e-10);
    assert!(wavy.drifts.1 > 0.0 && wavy.drifts.1 < 0.5, "{}", wavy.drifts.1);
    assert!((wavy.drifts.0 + wavy.drifts.1).abs() < 1e-10);
}

#[test]
fn non_elliptic_coefficients_are_rejected() {
    let zones =
        Zoned::uniform(ZoneCoefficients { a: vec![ScalarField::constant(-1.0)], b: vec![ScalarField::constant(0.0)] });
    let model = CoefficientModel::new(1, zones, Zoned::uniform(ScalarField::constant(0.0)), None).unwrap();
    let cs = CrossSection::point();
    let case = cyldrift::cell::classify_regime(-1.0, 1.0, EPS);
    let err = TruncatedProblem::new(
        &model,
        &cs,
        4.0,
        16,
        BaseCondition::conormal(),
        Scheme::Upwind,
        case,
        SolveOptions::default(),
    );
    assert!(matches!(err, Err(Error::NonElliptic { .. })), "{err:?}");
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    /// With no source the upwind solution stays between its base values.
    #[test]
    fn source_free_truncations_obey_the_maximum_principle(
        k_minus in -5.0f64..5.0,
        k_plus in -5.0f64..5.0,
        c in -2.0f64..2.0,
        s in 0.0f64..3.0,
    ) {
        let model = oscillating(-c, c, s);
        let cs = CrossSection::point();
        let case = cyldrift::cell::classify_regime(-c, c, EPS);
        let prob = TruncatedProblem::new(
            &model, &cs, 3.0, 16, BaseCondition::dirichlet(k_minus, k_plus, 1), Scheme::Upwind, case, SolveOptions::default(),
        ).unwrap();
        let u = solve_truncated_dirichlet(&prob, k_minus, k_plus).unwrap();
        let (lo, hi) = (k_minus.min(k_plus), k_minus.max(k_plus));
        let slack = 1e-9 * (1.0 + hi.abs().max(lo.abs()));
        for v in u {
            prop_assert!(v >= lo - slack && v <= hi + slack, "{v} outside [{lo}, {hi}]");
        }
    }
}
