//! Subcommand dispatch and the exit-code contract.

use std::ffi::OsString;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use clap::{Parser, Subcommand, ValueEnum};
use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use cyldrift::cell::{regime_of_model, CellAnalysis, RegimeCase, RegimeTag};
use cyldrift::coefficients::CoefficientModel;
use cyldrift::cylinder::{
    base_maxima, monotonicity_profile, solve_adjoint_truncated, solve_infinite, solve_semi_infinite,
    solve_truncated_neumann, window_norms, Side, TruncatedProblem,
};
use cyldrift::discretize::{BaseCondition, Scheme};
use cyldrift::geometry::{CrossSection, Mesh};

use crate::bundle::{config_hash, Compatibility, Drifts, Metadata, Real, ResultBundle, TailSummary};
use crate::config::{parse_config, ConfigError, RunConfig};
use crate::demo::{run_example1, run_example2};
use crate::emit::{write_decay, write_json, write_profile, write_text, ProfileRow};

pub const EXIT_OK: i32 = 0;
pub const EXIT_OTHER: i32 = 1;
pub const EXIT_SCHEMA: i32 = 2;
pub const EXIT_SOLVER: i32 = 3;
pub const EXIT_INCOMPATIBLE: i32 = 4;
pub const EXIT_NOT_CONVERGED: i32 = 5;

#[derive(Debug, Error)]
#[error("not converged after k = {k}: last window change {last:e} exceeds tolerance {tol:e}")]
pub struct NotConverged {
    pub k: f64,
    pub last: f64,
    pub tol: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum SchemeArg {
    Upwind,
    Central,
}

impl From<SchemeArg> for Scheme {
    fn from(s: SchemeArg) -> Self {
        match s {
            SchemeArg::Upwind => Scheme::Upwind,
            SchemeArg::Central => Scheme::Central,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum DemoName {
    Example1,
    Example2,
}

/// Convection-diffusion in truncated cylinders with piecewise-periodic
/// coefficients.
#[derive(Debug, Parser)]
#[command(name = "cyldrift", version)]
struct Cli {
    /// JSON run configuration.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory; overrides `out_dir` of the config.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Worker threads.
    #[arg(long, global = true)]
    jobs: Option<usize>,
    #[arg(long, global = true, value_enum)]
    scheme: Option<SchemeArg>,
    /// Drifts within this distance of zero count as zero.
    #[arg(long = "eps-drift", global = true)]
    eps_drift: Option<f64>,
    /// Successive-k convergence tolerance.
    #[arg(long, global = true)]
    tol: Option<f64>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Periodic ground states of both tail zones, as CSV.
    Cell,
    /// Effective drifts of both tail zones.
    Drift,
    /// Regime tag from the effective drifts.
    Classify,
    /// Growing-k solve with result bundle and profile.
    Solve,
    /// Adjoint ground state on the largest k with tail fits.
    Adjoint,
    /// Compatibility functional of the data against the adjoint state.
    CheckCompat,
    /// Half-cylinder Dirichlet problem from the `semi` section.
    Semi,
    /// Built-in configurations against their closed forms.
    Demo {
        #[arg(value_enum)]
        which: DemoName,
    },
    /// One solve per value of the `sweep` section.
    Sweep,
}

impl Command {
    fn name(&self) -> &'static str {
        match self {
            Command::Cell => "cell",
            Command::Drift => "drift",
            Command::Classify => "classify",
            Command::Solve => "solve",
            Command::Adjoint => "adjoint",
            Command::CheckCompat => "check-compat",
            Command::Semi => "semi",
            Command::Demo { .. } => "demo",
            Command::Sweep => "sweep",
        }
    }
}

/// Maps an error chain onto the documented exit codes.
pub fn exit_code(err: &anyhow::Error) -> i32 {
    for cause in err.chain() {
        if cause.downcast_ref::<ConfigError>().is_some() {
            return EXIT_SCHEMA;
        }
        if cause.downcast_ref::<NotConverged>().is_some() {
            return EXIT_NOT_CONVERGED;
        }
        if let Some(e) = cause.downcast_ref::<cyldrift::Error>() {
            return match e {
                cyldrift::Error::IncompatibleData(_) => EXIT_INCOMPATIBLE,
                _ => EXIT_SOLVER,
            };
        }
    }
    EXIT_OTHER
}

/// Parses `argv` (program name first), runs and returns the exit code.
pub fn run_command<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return e.exit_code();
        }
    };
    match run(&cli) {
        Ok(()) => EXIT_OK,
        Err(e) => {
            eprintln!("error: {e:#}");
            exit_code(&e)
        }
    }
}

fn run(cli: &Cli) -> Result<()> {
    match cli.jobs {
        Some(0) => anyhow::bail!(ConfigError::Value { path: "--jobs".into(), message: "must be positive".into() }),
        Some(n) => {
            let pool = rayon::ThreadPoolBuilder::new().num_threads(n).build()?;
            pool.install(|| dispatch(cli))
        }
        None => dispatch(cli),
    }
}

fn dispatch(cli: &Cli) -> Result<()> {
    if let Command::Demo { which } = cli.command {
        return demo(cli, which);
    }
    let ctx = RunContext::load(cli)?;
    match cli.command {
        Command::Cell => cell(&ctx),
        Command::Drift => drift(&ctx),
        Command::Classify => classify(&ctx),
        Command::Solve => solve(&ctx),
        Command::Adjoint => adjoint(&ctx),
        Command::CheckCompat => check_compat(&ctx),
        Command::Semi => semi(&ctx),
        Command::Sweep => sweep(&ctx, cli),
        Command::Demo { .. } => unreachable!("handled above"),
    }
}

/// Loaded configuration plus everything derived from it.
struct RunContext {
    command: &'static str,
    config: RunConfig,
    model: CoefficientModel,
    out: PathBuf,
}

fn read_config(path: &Path) -> Result<String, ConfigError> {
    fs::read_to_string(path)
        .map_err(|e| ConfigError::Schema { path: String::new(), message: format!("{}: {e}", path.display()) })
}

fn apply_overrides(config: &mut RunConfig, cli: &Cli) -> Result<(), ConfigError> {
    if let Some(s) = cli.scheme {
        config.scheme = s.into();
    }
    if let Some(e) = cli.eps_drift {
        config.eps_drift = e;
    }
    if let Some(t) = cli.tol {
        config.tol = t;
    }
    config.validate().map(|_| ())
}

impl RunContext {
    fn load(cli: &Cli) -> Result<Self> {
        let path = cli.config.as_ref().ok_or_else(|| ConfigError::Schema {
            path: String::new(),
            message: format!("`{}` needs --config", cli.command.name()),
        })?;
        let mut config = parse_config(&read_config(path)?)?.config;
        apply_overrides(&mut config, cli)?;
        Ok(Self::from_config(config, cli.command.name(), cli.out.clone()))
    }

    fn from_config(config: RunConfig, command: &'static str, out: Option<PathBuf>) -> Self {
        let model = config.model().expect("validated config builds a model");
        let out = out.or_else(|| config.out_dir.as_ref().map(PathBuf::from)).unwrap_or_else(|| PathBuf::from("out"));
        RunContext { command, config, model, out }
    }

    fn cs(&self) -> &CrossSection {
        &self.config.cross_section
    }

    fn regime(&self) -> Result<(RegimeCase, CellAnalysis, CellAnalysis)> {
        let c = &self.config;
        let (mut case, left, right) = regime_of_model(&self.model, self.cs(), c.cells_per_unit, c.scheme, c.eps_drift)?;
        if let Some(tag) = c.regime {
            if tag != case.tag {
                log::warn!("regime forced to {tag:?}; drifts classify as {:?}", case.tag);
            }
            case.tag = tag;
        }
        Ok((case, left, right))
    }

    fn largest_k(&self) -> f64 {
        *self.config.k_sequence.last().expect("validated k_sequence is non-empty")
    }

    fn conormal_problem(&self, case: RegimeCase) -> Result<TruncatedProblem> {
        let c = &self.config;
        let mut prob = TruncatedProblem::new(
            &self.model,
            self.cs(),
            self.largest_k(),
            c.cells_per_unit,
            BaseCondition::conormal(),
            c.scheme,
            case,
            c.solver,
        )?;
        prob.anchor_window = c.anchor_window;
        Ok(prob)
    }

    fn path(&self, name: &str) -> PathBuf {
        self.out.join(name)
    }

    fn write_metadata(&self) -> Result<()> {
        write_json(&Metadata::new(config_hash(&self.config), self.command), &self.path("metadata.json"))
    }
}

fn profile_rows(mesh: &Mesh, values: &[f64]) -> Vec<ProfileRow> {
    values
        .iter()
        .enumerate()
        .map(|(c, &value)| ProfileRow { x1: mesh.x1(c), cross_index: mesh.cross_index(c), value })
        .collect()
}

fn cell(ctx: &RunContext) -> Result<()> {
    let (_, left, right) = ctx.regime()?;
    for analysis in [&left, &right] {
        let name = format!("cell_{}.csv", zone_name(analysis));
        write_profile(&profile_rows(analysis.grid.mesh(), &analysis.ground_state.values), &ctx.path(&name))?;
        println!(
            "{} zone: drift {:.16e}, residual {:.3e} -> {}",
            zone_name(analysis),
            analysis.drift,
            analysis.ground_state.residual,
            ctx.path(&name).display()
        );
    }
    ctx.write_metadata()
}

fn zone_name(a: &CellAnalysis) -> &'static str {
    match a.zone {
        cyldrift::geometry::Zone::Left => "left",
        cyldrift::geometry::Zone::Middle => "middle",
        cyldrift::geometry::Zone::Right => "right",
    }
}

fn drift(ctx: &RunContext) -> Result<()> {
    let (_, left, right) = ctx.regime()?;
    println!("b_minus {:.16e}", left.drift);
    println!("b_plus {:.16e}", right.drift);
    for a in [&left, &right] {
        if a.refined {
            log::info!("{} drift {:e} refined to {:e}", zone_name(a), a.raw_drift, a.drift);
        }
    }
    Ok(())
}

fn tag_name(tag: RegimeTag) -> &'static str {
    match tag {
        RegimeTag::TwoParameter => "TwoParameter",
        RegimeTag::OneParameterLeft => "OneParameterLeft",
        RegimeTag::OneParameterRight => "OneParameterRight",
        RegimeTag::Compatibility => "Compatibility",
    }
}

fn classify(ctx: &RunContext) -> Result<()> {
    let (case, _, _) = ctx.regime()?;
    let mut line = tag_name(case.tag).to_string();
    if case.boundary_case() {
        line.push_str(" boundary-case");
    }
    println!("{line}");
    Ok(())
}

/// Writes the bundle, the profile and the decay tables of one solve.
fn solve_into(ctx: &RunContext, out: &Path) -> Result<ResultBundle> {
    let (case, left, right) = ctx.regime()?;
    let sol = solve_infinite(&ctx.model, ctx.cs(), &case, &ctx.config.infinite_options())?;
    let bundle = ResultBundle::new(&ctx.config, Drifts::new(&left, &right), ctx.config.regime.is_some(), &sol);
    write_json(&bundle, &out.join("bundle.json"))?;
    write_profile(&profile_rows(sol.final_grid.mesh(), &sol.final_values), &out.join("profile.csv"))?;
    for (fit, name) in [(&sol.fit_left, "decay_minus.csv"), (&sol.fit_right, "decay_plus.csv")] {
        let norms = fit.as_ref().map_or(&[][..], |f| &f.window_norms[..]);
        write_decay(norms, &out.join(name))?;
    }
    if !sol.converged {
        return Err(NotConverged {
            k: sol.final_k,
            last: sol.convergence_history.last().copied().unwrap_or(f64::NAN),
            tol: ctx.config.tol,
        }
        .into());
    }
    Ok(bundle)
}

fn summary(b: &ResultBundle) -> String {
    let r = |v: Option<&crate::bundle::SideFit>, f: fn(&crate::bundle::SideFit) -> Real| {
        v.map_or("n/a".to_string(), |s| format!("{:.10}", f(s).0))
    };
    let mut s = String::new();
    writeln!(s, "regime {}{}", tag_name(b.regime.tag), if b.regime.boundary_case { " boundary-case" } else { "" })
        .unwrap();
    writeln!(s, "drifts b- {:.10} b+ {:.10}", b.drifts.minus.0, b.drifts.plus.0).unwrap();
    writeln!(s, "converged {} at k = {}", b.convergence.converged, b.convergence.final_k.0).unwrap();
    writeln!(s, "K- {} K+ {}", r(b.fit_minus.as_ref(), |f| f.limit), r(b.fit_plus.as_ref(), |f| f.limit)).unwrap();
    writeln!(s, "gamma- {} gamma+ {}", r(b.fit_minus.as_ref(), |f| f.gamma), r(b.fit_plus.as_ref(), |f| f.gamma))
        .unwrap();
    if let Some(c) = &b.compatibility {
        writeln!(s, "compatibility functional {:.6e}, r_k {:.6e}", c.functional.0, c.r_k.0).unwrap();
    }
    if b.hypotheses.hypothesis_violated {
        writeln!(s, "hypothesis-violated: data do not decay exponentially").unwrap();
    }
    s
}

fn solve(ctx: &RunContext) -> Result<()> {
    ctx.write_metadata()?;
    let bundle = solve_into(ctx, &ctx.out)?;
    print!("{}", summary(&bundle));
    Ok(())
}

#[derive(Serialize)]
struct AdjointSummary {
    k: Real,
    residual: Real,
    iterations: usize,
    left: TailSummary,
    right: TailSummary,
    monotonicity_beta: Real,
    base_max_left: Real,
    base_max_right: Real,
}

fn adjoint(ctx: &RunContext) -> Result<()> {
    let (case, _, _) = ctx.regime()?;
    let prob = ctx.conormal_problem(case)?;
    let adj = solve_adjoint_truncated(&prob)?;
    let grid = &prob.grid;
    write_profile(&profile_rows(grid.mesh(), &adj.p_values), &ctx.path("adjoint.csv"))?;
    write_decay(&window_norms(grid, &adj.p_values, Side::Left, 0.0), &ctx.path("adjoint_decay_left.csv"))?;
    write_decay(&window_norms(grid, &adj.p_values, Side::Right, 0.0), &ctx.path("adjoint_decay_right.csv"))?;
    let (l, r) = base_maxima(&adj, grid);
    let summary = AdjointSummary {
        k: Real(prob.k()),
        residual: Real(adj.residual),
        iterations: adj.iterations,
        left: TailSummary::from(&adj.left),
        right: TailSummary::from(&adj.right),
        monotonicity_beta: Real(monotonicity_profile(&adj, grid).beta_estimate),
        base_max_left: Real(l),
        base_max_right: Real(r),
    };
    write_json(&summary, &ctx.path("adjoint.json"))?;
    ctx.write_metadata()?;
    for (side, t) in [("left", &summary.left), ("right", &summary.right)] {
        let detail = match (t.delta, t.distance) {
            (Some(d), _) => format!("delta {:.6}", d.0),
            (_, Some(d)) => format!("distance {:.3e}", d.0),
            _ => t.reason.clone().unwrap_or_default(),
        };
        println!("{side}: {} {detail}", t.kind);
    }
    Ok(())
}

fn check_compat(ctx: &RunContext) -> Result<()> {
    let (case, _, _) = ctx.regime()?;
    if case.tag != RegimeTag::Compatibility {
        log::warn!("drifts classify as {:?}; the condition only constrains the compatibility regime", case.tag);
    }
    let prob = ctx.conormal_problem(case)?;
    let (_, report, _) = solve_truncated_neumann(&prob, ctx.config.compat_tol)?;
    write_json(&Compatibility::from(&report), &ctx.path("compatibility.json"))?;
    ctx.write_metadata()?;
    let verdict = if report.is_compatible() { "PASS" } else { "FAIL" };
    println!("functional {:.16e} tolerance {:.6e} {verdict}", report.functional, report.tolerance);
    if !report.is_compatible() {
        return Err(cyldrift::Error::IncompatibleData(Box::new(report)).into());
    }
    Ok(())
}

#[derive(Serialize)]
struct SemiSummary {
    k: Real,
    drift: Real,
    case: String,
    constant: Option<Real>,
    gamma: Option<Real>,
    linear_deviation: Option<Real>,
}

fn semi(ctx: &RunContext) -> Result<()> {
    let c = &ctx.config;
    let semi = c.semi.as_ref().ok_or_else(|| ConfigError::Value {
        path: "semi".into(),
        message: "the semi subcommand needs a `semi` section".into(),
    })?;
    let n = ctx.cs().n_cells();
    let phi = if semi.phi.len() == 1 { vec![semi.phi[0]; n] } else { semi.phi.clone() };
    let sol = solve_semi_infinite(
        &ctx.model,
        ctx.cs(),
        &phi,
        semi.far_value,
        semi.k,
        c.cells_per_unit,
        c.scheme,
        &c.solver,
        c.eps_drift,
    )?;
    let rows: Vec<ProfileRow> = sol
        .x1
        .iter()
        .zip(&sol.values)
        .enumerate()
        .map(|(i, (&x1, &value))| ProfileRow { x1, cross_index: i % n, value })
        .collect();
    write_profile(&rows, &ctx.path("semi.csv"))?;
    let summary = SemiSummary {
        k: Real(sol.k),
        drift: Real(sol.drift),
        case: format!("{:?}", sol.case),
        constant: sol.constant.map(Real),
        gamma: sol.gamma.map(Real),
        linear_deviation: sol.linear_deviation.map(Real),
    };
    write_json(&summary, &ctx.path("semi.json"))?;
    ctx.write_metadata()?;
    let show = |v: Option<f64>| v.map_or("n/a".to_string(), |v| format!("{v:.10}"));
    println!(
        "{} drift {:.10} constant {} gamma {} linear deviation {}",
        summary.case,
        sol.drift,
        show(sol.constant),
        show(sol.gamma),
        show(sol.linear_deviation)
    );
    Ok(())
}

fn sweep(ctx: &RunContext, cli: &Cli) -> Result<()> {
    let spec = ctx.config.sweep.clone().ok_or_else(|| ConfigError::Value {
        path: "sweep".into(),
        message: "the sweep subcommand needs a `sweep` section".into(),
    })?;
    let mut template: serde_json::Value = serde_json::from_str(&ctx.config.canonical_json())?;
    template.as_object_mut().expect("config is an object").remove("sweep");
    if template.pointer(&spec.parameter).is_none() {
        return Err(ConfigError::Value {
            path: "sweep.parameter".into(),
            message: format!("{} does not name a key of the configuration", spec.parameter),
        }
        .into());
    }
    let points: Vec<RunConfig> = spec
        .values
        .iter()
        .enumerate()
        .map(|(i, &v)| {
            let mut doc = template.clone();
            *doc.pointer_mut(&spec.parameter).expect("checked above") = serde_json::json!(v);
            let mut config = parse_config(&doc.to_string()).map_err(|e| match e {
                ConfigError::Schema { path, message } | ConfigError::Value { path, message } => {
                    ConfigError::Value { path: format!("sweep.values[{i}] -> {path}"), message }
                }
            })?;
            config.config.out_dir = None;
            apply_overrides(&mut config.config, cli)?;
            Ok(config.config)
        })
        .collect::<Result<_, ConfigError>>()?;

    let results: Vec<Result<ResultBundle>> = points
        .par_iter()
        .enumerate()
        .map(|(i, config)| {
            let point = RunContext::from_config(config.clone(), "solve", Some(ctx.out.join(format!("point_{i:03}"))));
            point.write_metadata()?;
            solve_into(&point, &point.out)
                .with_context(|| format!("sweep point {i} ({} = {})", spec.parameter, spec.values[i]))
        })
        .collect();

    let mut table = String::from("index,value,regime,converged,k_minus,k_plus,status\n");
    let mut first_error = None;
    for (i, (result, &v)) in results.into_iter().zip(&spec.values).enumerate() {
        match result {
            Ok(b) => {
                let limit = |f: &Option<crate::bundle::SideFit>| {
                    f.as_ref().map_or(String::new(), |f| crate::emit::float(f.limit.0))
                };
                writeln!(
                    table,
                    "{i},{},{},{},{},{},ok",
                    crate::emit::float(v),
                    tag_name(b.regime.tag),
                    b.convergence.converged,
                    limit(&b.fit_minus),
                    limit(&b.fit_plus)
                )
                .unwrap();
            }
            Err(e) => {
                writeln!(table, "{i},{},,,,,exit {}", crate::emit::float(v), exit_code(&e)).unwrap();
                eprintln!("error: {e:#}");
                first_error.get_or_insert(e);
            }
        }
    }
    write_text(&table, &ctx.path("sweep.csv"))?;
    ctx.write_metadata()?;
    println!("{} points -> {}", spec.values.len(), ctx.path("sweep.csv").display());
    first_error.map_or(Ok(()), Err)
}

fn demo(cli: &Cli, which: DemoName) -> Result<()> {
    match which {
        DemoName::Example1 => {
            let report = run_example1()?;
            print!("{}", report.table());
        }
        DemoName::Example2 => {
            let report = run_example2()?;
            print!("{}", report.table());
            if let Some(out) = &cli.out {
                write_json(&report.bundle, &out.join("bundle.json"))?;
                let sol = &report.solution;
                write_profile(&profile_rows(sol.final_grid.mesh(), &sol.final_values), &out.join("profile.csv"))?;
            }
        }
    }
    Ok(())
}
