//! Built-in configurations with closed-form answers.

use std::fmt::Write as _;
use std::time::Instant;

use anyhow::Result;

use cyldrift::cell::regime_of_model;
use cyldrift::cylinder::{
    solve_infinite, solve_truncated_dirichlet, solve_truncated_neumann, CylinderSolution, InfiniteOptions, TailFit,
    TruncatedProblem,
};
use cyldrift::demos;
use cyldrift::discretize::{BaseCondition, Scheme};
use cyldrift::geometry::CrossSection;
use cyldrift::linalg::SolveOptions;

use crate::bundle::{Drifts, ResultBundle};
use crate::config::RunConfig;

pub const CELLS_PER_UNIT: usize = 64;
const EPS_DRIFT: f64 = 1e-6;

#[derive(Debug, Clone)]
pub struct Example2Report {
    pub h: f64,
    pub final_k: f64,
    pub converged: bool,
    pub limit_gap: f64,
    pub sup_error: f64,
    pub delta_left: Option<f64>,
    pub delta_right: Option<f64>,
    pub functional: f64,
    pub seconds: f64,
    pub solution: CylinderSolution,
    pub bundle: ResultBundle,
}

fn delta(t: &TailFit) -> Option<f64> {
    match t {
        TailFit::ExponentialRate { delta, .. } => Some(*delta),
        _ => None,
    }
}

/// Compatibility-regime run on the odd source at `h = 1/64`, `k ∈ {6, 8}`.
pub fn run_example2() -> Result<Example2Report> {
    let start = Instant::now();
    let model = demos::example2();
    let cs = CrossSection::point();
    let (case, left, right) = regime_of_model(&model, &cs, CELLS_PER_UNIT, Scheme::Upwind, EPS_DRIFT)?;
    let mut config = RunConfig::from_model(&model, &cs);
    config.k_sequence = vec![6.0, 8.0];
    config.cells_per_unit = CELLS_PER_UNIT;
    let opts = config.infinite_options();
    let sol = solve_infinite(&model, &cs, &case, &opts)?;

    let mesh = sol.final_grid.mesh();
    let anchor = mesh.cells_in_slab(0.0, 1.0);
    let mass: f64 = anchor.iter().map(|&c| mesh.volumes[c]).sum();
    let shift = anchor.iter().map(|&c| demos::example2_solution(mesh.x1(c)) * mesh.volumes[c]).sum::<f64>() / mass;
    let sup_error = sol
        .final_values
        .iter()
        .enumerate()
        .map(|(c, u)| (u - (demos::example2_solution(mesh.x1(c)) - shift)).abs())
        .fold(0.0, f64::max);

    let limit_gap = match (sol.k_minus(), sol.k_plus()) {
        (Some(a), Some(b)) => a - b,
        _ => f64::NAN,
    };
    let adjoint = sol.adjoint.as_ref();
    let bundle = ResultBundle::new(&config, Drifts::new(&left, &right), false, &sol);
    Ok(Example2Report {
        h: sol.final_grid.h(),
        final_k: sol.final_k,
        converged: sol.converged,
        limit_gap,
        sup_error,
        delta_left: adjoint.and_then(|a| delta(&a.left)),
        delta_right: adjoint.and_then(|a| delta(&a.right)),
        functional: sol.compatibility.as_ref().map_or(f64::NAN, |c| c.functional),
        seconds: start.elapsed().as_secs_f64(),
        solution: sol,
        bundle,
    })
}

impl Example2Report {
    pub fn table(&self) -> String {
        let fmt = |v: Option<f64>| v.map_or("n/a".to_string(), |v| format!("{v:.6}"));
        let gap = demos::example2_limit_gap();
        let mut s = String::new();
        writeln!(s, "example2: h = {}, k = {}, converged = {}", self.h, self.final_k, self.converged).unwrap();
        writeln!(s, "{:<28} {:>14} {:>14} {:>12}", "quantity", "computed", "oracle", "error").unwrap();
        writeln!(s, "{:<28} {:>14.6} {:>14.6} {:>12.3e}", "K- - K+", self.limit_gap, gap, (self.limit_gap - gap).abs())
            .unwrap();
        writeln!(
            s,
            "{:<28} {:>14.3e} {:>14.3e} {:>12}",
            "sup |u - v| (mean aligned)",
            self.sup_error,
            5.0 * self.h,
            "<= bound"
        )
        .unwrap();
        for (name, d) in [("adjoint delta left", self.delta_left), ("adjoint delta right", self.delta_right)] {
            let err = d.map_or("n/a".to_string(), |d| format!("{:.3e}", (d - 1.0).abs()));
            writeln!(s, "{:<28} {:>14} {:>14.6} {:>12}", name, fmt(d), 1.0, err).unwrap();
        }
        writeln!(
            s,
            "{:<28} {:>14.3e} {:>14.6} {:>12.3e}",
            "compatibility functional",
            self.functional,
            0.0,
            self.functional.abs()
        )
        .unwrap();
        writeln!(s, "runtime {:.2} s", self.seconds).unwrap();
        s
    }
}

#[derive(Debug, Clone)]
pub struct Example1Report {
    /// `(k, ‖u_k‖_∞)` of zero-Dirichlet truncations.
    pub sup_norms: Vec<(f64, f64)>,
    pub ratios: Vec<f64>,
    /// Compatibility functional at the largest `k`; nonzero means no bounded
    /// solution.
    pub functional: f64,
    pub compatible: bool,
    pub seconds: f64,
}

/// Zero-Dirichlet truncations of the non-orthogonal source for `k = 4..8`.
pub fn run_example1() -> Result<Example1Report> {
    let start = Instant::now();
    let model = demos::example1();
    let cs = CrossSection::point();
    let (case, _, _) = regime_of_model(&model, &cs, CELLS_PER_UNIT, Scheme::Upwind, EPS_DRIFT)?;
    let solver = SolveOptions::default();
    let mut sup_norms = Vec::new();
    for k in 4..=8 {
        let k = k as f64;
        let prob = TruncatedProblem::new(
            &model,
            &cs,
            k,
            CELLS_PER_UNIT,
            BaseCondition::dirichlet(0.0, 0.0, 1),
            Scheme::Upwind,
            case,
            solver,
        )?;
        let u = solve_truncated_dirichlet(&prob, 0.0, 0.0)?;
        sup_norms.push((k, u.iter().fold(0.0f64, |m, v| m.max(v.abs()))));
    }
    let ratios = sup_norms.windows(2).map(|w| w[1].1 / w[0].1).collect();
    let prob = TruncatedProblem::new(
        &model,
        &cs,
        8.0,
        CELLS_PER_UNIT,
        BaseCondition::conormal(),
        Scheme::Upwind,
        case,
        solver,
    )?;
    let (_, report, _) = solve_truncated_neumann(&prob, InfiniteOptions::default().compat_tol)?;
    Ok(Example1Report {
        sup_norms,
        ratios,
        functional: report.functional,
        compatible: report.is_compatible(),
        seconds: start.elapsed().as_secs_f64(),
    })
}

impl Example1Report {
    pub fn table(&self) -> String {
        let mut s = String::new();
        writeln!(s, "example1: zero-Dirichlet truncations, h = 1/{CELLS_PER_UNIT}").unwrap();
        writeln!(s, "{:>4} {:>14} {:>10} {:>10}", "k", "sup |u_k|", "ratio", "oracle").unwrap();
        for (i, (k, n)) in self.sup_norms.iter().enumerate() {
            let ratio = if i == 0 { "-".to_string() } else { format!("{:.4}", self.ratios[i - 1]) };
            let oracle = if i == 0 { "-".to_string() } else { format!("{:.4}", std::f64::consts::E) };
            writeln!(s, "{k:>4} {n:>14.6e} {ratio:>10} {oracle:>10}").unwrap();
        }
        writeln!(
            s,
            "compatibility functional {:.6e} ({})",
            self.functional,
            if self.compatible { "compatible" } else { "incompatible: no bounded solution" }
        )
        .unwrap();
        writeln!(s, "runtime {:.2} s", self.seconds).unwrap();
        s
    }
}
