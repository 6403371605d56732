//! The `degenlap` command line.
//!
//! Subcommands mirror the pipeline stages: `validate` checks the
//! configured weight and exponents against the standing hypotheses,
//! `psi` tabulates the collar barrier, `resolvent` applies the weighted
//! inverse once, `barriers` assembles the ordered pair at a given
//! lambda, `solve` runs the damped iteration between the barriers,
//! `sweep` repeats `solve` along a geometric lambda ladder, and
//! `verify` replays named certification scenarios.
//!
//! Exit codes: 0 success, 1 usage or configuration error, 2 solver
//! failure (divergence, lost brackets, no convergence), 3 certificate
//! failure (a hypothesis, threshold, or ordering check did not hold).
//!
//! Every run writes its tables as CSV (comma separated, `.` decimal
//! point, 17 significant digits), reports as pretty JSON, and a
//! manifest with the config snapshot and output digests. Reruns are
//! byte-identical except for the manifest's wall time. Set
//! `DEGENLAP_LOG=info` for progress notes on stderr.

use std::ffi::OsString;
use std::path::{Path, PathBuf};
use std::sync::OnceLock;

use clap::{Args, Parser, Subcommand};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::barriers::{
    boundary_amplitude, build_subsolution, build_supersolution, order_pair, solve_rho,
    NonlinearitySpec, SubsolutionParams,
};
use crate::comparison::build_psi;
use crate::config::RunConfig;
use crate::error::{Error, Result};
use crate::field::Mesh;
use crate::fixedpoint::{apriori_check, moser_ladder, solve_semipositone, SolveOptions};
use crate::geometry::DomainGeometry;
use crate::quadrature::{PrimitiveTable, QuadratureSpec};
use crate::report::RunWriter;
use crate::resolvent::{default_mesh, p_flux, solve, Problem, Rhs};
use crate::weights::{
    validate_b, validate_weight, weighted_distance, BFamily, CheckItem, CoefficientB,
    ExponentSet, ValidationReport, WeightProfile,
};

#[derive(Parser)]
#[command(
    name = "degenlap",
    version,
    about = "Dirichlet solver for boundary-degenerate weighted p-Laplacians"
)]
struct Cli {
    #[command(subcommand)]
    command: Cmd,
}

#[derive(Args)]
struct Common {
    /// Run configuration, TOML.
    #[arg(long, value_name = "FILE")]
    config: PathBuf,
    /// Output directory (default degenlap-out); table subcommands also
    /// accept a .csv file path.
    #[arg(long, value_name = "PATH")]
    out: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Cmd {
    /// Check the weight, exponent chain, and coefficient hypotheses.
    Validate {
        #[command(flatten)]
        common: Common,
    },
    /// Tabulate the distance-comparable collar barrier and its flux.
    Psi {
        #[command(flatten)]
        common: Common,
        /// Sample cells across the collar (default: configured mesh).
        #[arg(long)]
        mesh_cells: Option<usize>,
    },
    /// Apply the weighted resolvent to the configured coefficient.
    Resolvent {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        mesh_cells: Option<usize>,
    },
    /// Assemble the ordered sub/supersolution pair at one lambda.
    Barriers {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        lambda: f64,
        #[arg(long)]
        mesh_cells: Option<usize>,
    },
    /// Run the damped iteration between the barriers at one lambda.
    Solve {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        lambda: f64,
        /// Override the iteration stopping tolerance.
        #[arg(long)]
        tol: Option<f64>,
        #[arg(long)]
        mesh_cells: Option<usize>,
    },
    /// Solve along the ladder lambda_min * factor^k up to lambda_max.
    Sweep {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        lambda_min: f64,
        #[arg(long)]
        lambda_max: f64,
        #[arg(long, default_value_t = 2.0)]
        factor: f64,
        #[arg(long)]
        tol: Option<f64>,
        #[arg(long)]
        mesh_cells: Option<usize>,
    },
    /// Replay named certification scenarios and report every check.
    Verify {
        /// Optional config; its [verify] section lists default scenarios.
        #[arg(long, value_name = "FILE")]
        config: Option<PathBuf>,
        #[arg(long, value_name = "PATH")]
        out: Option<PathBuf>,
        /// Scenario name; repeatable. "all" expands to the full set.
        #[arg(long = "scenario", value_name = "NAME")]
        scenarios: Vec<String>,
    },
}

/// Parses `argv` and runs the selected subcommand, returning the
/// process exit code.
pub fn run<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    let outcome = match cli.command {
        Cmd::Validate { common } => cmd_validate(&common),
        Cmd::Psi { common, mesh_cells } => cmd_psi(&common, mesh_cells),
        Cmd::Resolvent { common, mesh_cells } => cmd_resolvent(&common, mesh_cells),
        Cmd::Barriers {
            common,
            lambda,
            mesh_cells,
        } => cmd_barriers(&common, lambda, mesh_cells),
        Cmd::Solve {
            common,
            lambda,
            tol,
            mesh_cells,
        } => cmd_solve(&common, lambda, tol, mesh_cells),
        Cmd::Sweep {
            common,
            lambda_min,
            lambda_max,
            factor,
            tol,
            mesh_cells,
        } => cmd_sweep(&common, lambda_min, lambda_max, factor, tol, mesh_cells),
        Cmd::Verify {
            config,
            out,
            scenarios,
        } => cmd_verify(config.as_deref(), &out, &scenarios),
    };
    match outcome {
        Ok(code) => code,
        Err(err) => {
            eprintln!("degenlap: {err}");
            exit_code(&err)
        }
    }
}

/// Maps an error to the documented exit code family.
fn exit_code(err: &Error) -> i32 {
    match err {
        Error::Config(_) | Error::Io(_) | Error::UnsupportedGeometry(_) => 1,
        Error::NonPositiveWeight { .. }
        | Error::InvalidExponents(_)
        | Error::InvalidNonlinearity(_)
        | Error::EnvelopeViolated { .. }
        | Error::MarginTooSmall { .. }
        | Error::SublinearityUnverifiable { .. }
        | Error::GeometryInadmissible { .. }
        | Error::BelowLambdaHatOne { .. }
        | Error::BelowLambdaStar { .. }
        | Error::EnvelopeFailure { .. }
        | Error::OrderingFailure { .. }
        | Error::UnorderedPair { .. }
        | Error::SandwichViolated { .. }
        | Error::MonotonicityViolated { .. } => 3,
        Error::OutOfCollar { .. }
        | Error::OutsideDomain { .. }
        | Error::DegenerateJacobian { .. }
        | Error::Divergent { .. }
        | Error::NaNEncountered { .. }
        | Error::BracketFailure { .. }
        | Error::FluxMismatch { .. }
        | Error::NoConvergence { .. } => 2,
    }
}

fn log_enabled() -> bool {
    static ON: OnceLock<bool> = OnceLock::new();
    *ON.get_or_init(|| {
        matches!(
            std::env::var("DEGENLAP_LOG").ok().as_deref(),
            Some("1") | Some("info") | Some("debug") | Some("trace")
        )
    })
}

fn log(msg: impl AsRef<str>) {
    if log_enabled() {
        eprintln!("degenlap: {}", msg.as_ref());
    }
}

/// Where a run writes: a directory, an optional rename for the primary
/// table, and the manifest file name.
struct OutTarget {
    dir: PathBuf,
    primary: Option<String>,
    stem: Option<String>,
    manifest: String,
}

impl OutTarget {
    /// Name for a secondary output, prefixed by the primary stem in
    /// file mode so siblings stay distinguishable.
    fn secondary(&self, default: &str) -> String {
        match &self.stem {
            Some(stem) => format!("{stem}.{default}"),
            None => default.to_string(),
        }
    }
}

fn resolve_out(out: &Option<PathBuf>, allow_file: bool) -> Result<OutTarget> {
    let Some(path) = out else {
        return Ok(OutTarget {
            dir: PathBuf::from("degenlap-out"),
            primary: None,
            stem: None,
            manifest: "manifest.json".into(),
        });
    };
    if path.extension().is_some_and(|e| e == "csv") {
        if !allow_file {
            return Err(Error::Config(format!(
                "--out {} names a file; this subcommand writes a directory",
                path.display()
            )));
        }
        let name = path
            .file_name()
            .and_then(|n| n.to_str())
            .ok_or_else(|| Error::Config(format!("--out {}: bad file name", path.display())))?
            .to_string();
        let stem = name.trim_end_matches(".csv").to_string();
        let dir = match path.parent() {
            Some(p) if !p.as_os_str().is_empty() => p.to_path_buf(),
            _ => PathBuf::from("."),
        };
        return Ok(OutTarget {
            dir,
            primary: Some(name),
            manifest: format!("{stem}.manifest.json"),
            stem: Some(stem),
        });
    }
    Ok(OutTarget {
        dir: path.clone(),
        primary: None,
        stem: None,
        manifest: "manifest.json".into(),
    })
}

fn writer_for(target: &OutTarget, subcommand: &str, snapshot: Option<String>) -> Result<RunWriter> {
    Ok(RunWriter::new(&target.dir, subcommand, snapshot)?.with_manifest_name(&target.manifest))
}

/// Default unit coefficient for runs without a `[b]` section.
fn unit_b() -> Result<CoefficientB> {
    CoefficientB::new(BFamily::Uniform { c: 1.0 }, 1.0, 1.0 + 1e-6)
}

// ---------------------------------------------------------------- validate

#[derive(Serialize)]
struct ValidationSummary {
    config: String,
    reports: Vec<ValidationReport>,
    passed: bool,
}

fn cmd_validate(common: &Common) -> Result<i32> {
    let (cfg, snapshot) = RunConfig::from_path(&common.config)?;
    let profile = cfg.weight_profile()?;
    let quad = cfg.quadrature();
    cfg.geometry()?;

    // The exponent chain is itself a hypothesis: when the constructor
    // rejects the cluster, validation still sweeps the weight checks
    // with the raw values so every violated assumption gets named.
    let e = &cfg.exponents;
    let n = e
        .n
        .ok_or_else(|| Error::Config("exponents: missing key N".into()))?;
    let s = e
        .s
        .ok_or_else(|| Error::Config("exponents: missing key s".into()))?;
    let q = e.q.unwrap_or(e.p);
    let (exps, chain) = match ExponentSet::new(e.p, n, s, q) {
        Ok(x) => {
            let detail = format!("p_s = {:.6}, p_s* = {:.6}", x.p_s, x.p_s_star);
            (x, item("exponent_chain", true, detail))
        }
        Err(err) => (
            ExponentSet {
                p: e.p,
                n,
                s,
                q,
                p_s: f64::NAN,
                p_s_star: f64::NAN,
            },
            item("exponent_chain", false, err.to_string()),
        ),
    };
    let chain_ok = chain.passed;
    let mut reports = vec![ValidationReport {
        subject: "exponents".into(),
        passed: chain_ok,
        items: vec![chain],
        rho1: None,
    }];

    reports.push(validate_weight(&profile, &exps, &quad)?);
    if chain_ok && cfg.b.is_some() {
        let b = cfg.coefficient_b()?;
        reports.push(validate_b(&b, &profile, &exps, &quad)?);
    }

    let passed = reports.iter().all(|r| r.passed);
    for report in &reports {
        for it in &report.items {
            let tag = if it.passed { "PASS" } else { "FAIL" };
            println!("[{tag}] {} / {}: {}", report.subject, it.name, it.detail);
            if !it.passed {
                eprintln!("degenlap: check failed: {}", it.detail);
            }
        }
    }
    println!("validation {}", if passed { "passed" } else { "failed" });

    let target = resolve_out(&common.out, false)?;
    let mut writer = writer_for(&target, "validate", Some(snapshot))?;
    let summary = ValidationSummary {
        config: common.config.display().to_string(),
        reports,
        passed,
    };
    writer.write_json("validation.json", &summary)?;
    writer.finish()?;
    Ok(if passed { 0 } else { 3 })
}

// --------------------------------------------------------------------- psi

#[derive(Serialize)]
struct PsiSummary {
    amplitude: f64,
    lambda: f64,
    rho0: f64,
    margin: f64,
    c_bound: f64,
    crude_bound: f64,
    flux_residual: f64,
}

fn cmd_psi(common: &Common, mesh_cells: Option<usize>) -> Result<i32> {
    let (cfg, snapshot) = RunConfig::from_path(&common.config)?;
    let profile = cfg.weight_profile()?;
    let p = cfg.p();
    let geom = cfg.geometry()?;
    let quad = cfg.quadrature();
    let psi = build_psi(&profile, p, &geom, cfg.psi.margin, &quad)?;
    log(format!(
        "psi: amplitude {:.6e}, c_bound {:.6e}",
        psi.amplitude, psi.c_bound
    ));

    // The flux table is rebuilt from the collar mass so the CSV column
    // reports e^{-Lambda y} (A - E(y)) rather than a finite difference.
    let spec = profile.apow_quad(p, &quad);
    let mass = PrimitiveTable::build(
        |t| (psi.lambda * t).exp() * profile.apow(p, t),
        psi.rho0,
        &spec,
    )?;
    let quotient_limit = psi.amplitude.powf(1.0 / (p - 1.0));
    let cells = mesh_cells.unwrap_or(cfg.mesh.cells);
    let sample = Mesh::boundary_layer(0.0, psi.rho0, cells, Some(psi.rho0), None)?;
    let mut rows = Vec::with_capacity(sample.nodes().len());
    for &y in sample.nodes() {
        let d = weighted_distance(&profile, p, y)?;
        let v = psi.eval(y);
        let quotient = if y == 0.0 { quotient_limit } else { v / d };
        let flux = (-psi.lambda * y).exp() * (psi.amplitude - mass.eval(y));
        rows.push(vec![y, d, v, quotient, flux]);
    }

    let target = resolve_out(&common.out, true)?;
    let mut writer = writer_for(&target, "psi", Some(snapshot))?;
    let name = target.primary.clone().unwrap_or_else(|| "psi.csv".into());
    writer.write_csv(&name, &["y", "d", "psi", "psi_over_d", "flux"], &rows)?;
    writer.write_json(
        &target.secondary("report.json"),
        &PsiSummary {
            amplitude: psi.amplitude,
            lambda: psi.lambda,
            rho0: psi.rho0,
            margin: psi.margin,
            c_bound: psi.c_bound,
            crude_bound: psi.crude_bound,
            flux_residual: psi.flux_residual,
        },
    )?;
    writer.finish()?;
    Ok(0)
}

// --------------------------------------------------------------- resolvent

fn cmd_resolvent(common: &Common, mesh_cells: Option<usize>) -> Result<i32> {
    let (cfg, snapshot) = RunConfig::from_path(&common.config)?;
    let problem = cfg.problem()?;
    let b = match cfg.b {
        Some(_) => cfg.coefficient_b()?,
        None => unit_b()?,
    };
    let cells = mesh_cells.unwrap_or(cfg.mesh.cells);
    let mesh = default_mesh(&problem, cells)?;
    let f = |_x: f64, d: f64| b.eval(d, &problem.weight, problem.p);
    let rhs = Rhs::Analytic {
        f: &f,
        gamma: b.gamma(&problem.weight, problem.p),
    };
    let (w, report) = solve(&problem, &rhs, &mesh)?;
    log(format!(
        "resolvent: flux constant {:.6e} after {} bisections",
        report.flux_constant, report.bisection_iterations
    ));

    let nodes = mesh.nodes();
    let vals = w.values();
    // Midpoint finite-difference flux per cell, averaged onto nodes;
    // a diagnostic column, not the solver's internal flux.
    let mut cell_flux = Vec::with_capacity(nodes.len() - 1);
    for i in 0..nodes.len() - 1 {
        let mid = 0.5 * (nodes[i] + nodes[i + 1]);
        let slope = (vals[i + 1] - vals[i]) / (nodes[i + 1] - nodes[i]);
        cell_flux.push(problem.weight.eval(problem.geometry.dist(mid)) * p_flux(slope, problem.p));
    }
    let mut rows = Vec::with_capacity(nodes.len());
    for (i, &x) in nodes.iter().enumerate() {
        let d = problem.geometry.dist(x);
        let flux = if i == 0 {
            cell_flux[0]
        } else if i == nodes.len() - 1 {
            cell_flux[i - 1]
        } else {
            0.5 * (cell_flux[i - 1] + cell_flux[i])
        };
        rows.push(vec![
            x,
            d,
            problem.weight.eval(d),
            b.eval(d, &problem.weight, problem.p),
            vals[i],
            flux,
        ]);
    }

    let target = resolve_out(&common.out, true)?;
    let mut writer = writer_for(&target, "resolvent", Some(snapshot))?;
    let name = target
        .primary
        .clone()
        .unwrap_or_else(|| "resolvent.csv".into());
    writer.write_csv(&name, &["coordinate", "dist", "a", "b", "w", "flux"], &rows)?;
    writer.write_json(&target.secondary("report.json"), &report)?;
    writer.finish()?;
    Ok(0)
}

// ---------------------------------------------------------------- barriers

#[derive(Serialize)]
struct ThresholdReport {
    lambda: f64,
    lambda_hat_one: f64,
    lambda_star: f64,
    lambda_zero: f64,
    rho_of_lambda: f64,
    m_of_lambda: f64,
    rho_hat: f64,
    plateau: f64,
    lower_residual: f64,
    upper_certificate: f64,
    psi_sup: f64,
    zeta_lambda: f64,
    epsilon: f64,
}

fn cmd_barriers(common: &Common, lambda: f64, mesh_cells: Option<usize>) -> Result<i32> {
    let (cfg, snapshot) = RunConfig::from_path(&common.config)?;
    let problem = cfg.problem()?;
    let b = cfg.coefficient_b()?;
    let spec = cfg.nonlinearity()?;
    let params = cfg.subsolution_params()?;
    let cells = mesh_cells.unwrap_or(cfg.mesh.cells);
    let mesh = default_mesh(&problem, cells)?;

    let sub = build_subsolution(&spec, &problem, &b, &params, lambda, &mesh)?;
    let sup = build_supersolution(&spec, &problem, &b, lambda, &mesh)?;
    let pair = order_pair(&sub, &sup, &spec, &params, &b, &problem, lambda)?;
    // The reported lambda_zero is the smallest ordering lambda, not the
    // one this pair was assembled at.
    let probe = crate::barriers::lambda_zero(&spec, &problem, &b, &params, &mesh)?;
    log(format!(
        "barriers: ordered at lambda {lambda:.6e}, lambda_zero {:.6e}",
        probe.thresholds.lambda_zero
    ));

    let nodes = pair.u_lower.mesh().nodes().to_vec();
    let lower_rows: Vec<Vec<f64>> = nodes
        .iter()
        .map(|&x| vec![x, problem.geometry.dist(x), pair.u_lower.eval(x)])
        .collect();
    let upper_rows: Vec<Vec<f64>> = nodes
        .iter()
        .map(|&x| vec![x, problem.geometry.dist(x), pair.u_upper.eval(x)])
        .collect();

    let target = resolve_out(&common.out, false)?;
    let mut writer = writer_for(&target, "barriers", Some(snapshot))?;
    let header = ["coordinate", "dist", "value"];
    writer.write_csv("u_lower.csv", &header, &lower_rows)?;
    writer.write_csv("u_upper.csv", &header, &upper_rows)?;
    writer.write_json(
        "thresholds.json",
        &ThresholdReport {
            lambda,
            lambda_hat_one: pair.thresholds.lambda_hat_one,
            lambda_star: pair.thresholds.lambda_star,
            lambda_zero: probe.thresholds.lambda_zero,
            rho_of_lambda: pair.thresholds.rho_of_lambda,
            m_of_lambda: pair.thresholds.m_of_lambda,
            rho_hat: sub.rho_hat,
            plateau: sub.plateau,
            lower_residual: pair.lower_residual,
            upper_certificate: pair.upper_certificate,
            psi_sup: sup.psi_sup,
            zeta_lambda: sup.zeta_lambda,
            epsilon: sup.epsilon,
        },
    )?;
    writer.finish()?;
    Ok(0)
}

// ------------------------------------------------------------- solve/sweep

#[derive(Serialize)]
struct SolveSummary {
    lambda: f64,
    lambda_hat_one: f64,
    lambda_star: f64,
    lambda_zero: f64,
    rho_of_lambda: f64,
    m_of_lambda: f64,
    iterations: usize,
    converged: bool,
    theta: f64,
    tol: f64,
    last_increment: f64,
    residual_weak: f64,
    sandwich_ok: bool,
    lower_residual: f64,
    upper_certificate: f64,
    apriori_ratio: f64,
    sup_norm: f64,
    interior_min: f64,
}

struct SolveParts {
    problem: Problem,
    b: CoefficientB,
    spec: NonlinearitySpec,
    params: SubsolutionParams,
}

fn solve_parts(cfg: &RunConfig) -> Result<SolveParts> {
    Ok(SolveParts {
        problem: cfg.problem()?,
        b: cfg.coefficient_b()?,
        spec: cfg.nonlinearity()?,
        params: cfg.subsolution_params()?,
    })
}

fn run_solve(
    parts: &SolveParts,
    lambda: f64,
    opts: &SolveOptions,
) -> Result<(Vec<Vec<f64>>, SolveSummary)> {
    let (u, pair, rep) =
        solve_semipositone(&parts.spec, &parts.problem, &parts.b, &parts.params, lambda, opts)?;
    let u = u.with_geom(parts.problem.geometry.clone());
    let apriori_ratio = apriori_check(&u, &parts.b, &parts.problem.weight);

    let nodes = u.mesh().nodes();
    let vals = u.values();
    let mut rows = Vec::with_capacity(nodes.len());
    let mut interior_min = f64::INFINITY;
    for (i, &x) in nodes.iter().enumerate() {
        let d = parts.problem.geometry.dist(x);
        if d > 0.0 {
            interior_min = interior_min.min(vals[i]);
        }
        rows.push(vec![
            x,
            d,
            vals[i],
            pair.u_lower.eval(x),
            pair.u_upper.eval(x),
        ]);
    }

    let summary = SolveSummary {
        lambda,
        lambda_hat_one: pair.thresholds.lambda_hat_one,
        lambda_star: pair.thresholds.lambda_star,
        lambda_zero: pair.thresholds.lambda_zero,
        rho_of_lambda: pair.thresholds.rho_of_lambda,
        m_of_lambda: pair.thresholds.m_of_lambda,
        iterations: rep.iterations,
        converged: rep.converged,
        theta: rep.theta,
        tol: rep.tol,
        last_increment: rep.increments.last().copied().unwrap_or(0.0),
        residual_weak: rep.residual_weak,
        sandwich_ok: rep.sandwich_ok,
        lower_residual: pair.lower_residual,
        upper_certificate: pair.upper_certificate,
        apriori_ratio,
        sup_norm: u.sup_norm(),
        interior_min,
    };
    Ok((rows, summary))
}

fn cmd_solve(
    common: &Common,
    lambda: f64,
    tol: Option<f64>,
    mesh_cells: Option<usize>,
) -> Result<i32> {
    let (cfg, snapshot) = RunConfig::from_path(&common.config)?;
    let parts = solve_parts(&cfg)?;
    let mut opts = cfg.solve_options();
    if let Some(cells) = mesh_cells {
        opts.mesh_cells = cells;
    }
    if let Some(t) = tol {
        opts.tol = Some(t);
    }
    let (rows, summary) = run_solve(&parts, lambda, &opts)?;
    println!(
        "solved at lambda {:.6e}: {} iterations, weak residual {:.3e}",
        lambda, summary.iterations, summary.residual_weak
    );

    let target = resolve_out(&common.out, true)?;
    let mut writer = writer_for(&target, "solve", Some(snapshot))?;
    let name = target
        .primary
        .clone()
        .unwrap_or_else(|| "solution.csv".into());
    writer.write_csv(
        &name,
        &["coordinate", "dist", "u", "u_lower", "u_upper"],
        &rows,
    )?;
    writer.write_json(&target.secondary("report.json"), &summary)?;
    writer.finish()?;
    Ok(0)
}

#[derive(Serialize)]
struct SweepEntry {
    index: usize,
    lambda: f64,
    dir: String,
    solved: bool,
    iterations: Option<usize>,
    error: Option<String>,
}

#[derive(Serialize)]
struct SweepSummary {
    lambda_min: f64,
    lambda_max: f64,
    factor: f64,
    solved: usize,
    entries: Vec<SweepEntry>,
}

fn cmd_sweep(
    common: &Common,
    lambda_min: f64,
    lambda_max: f64,
    factor: f64,
    tol: Option<f64>,
    mesh_cells: Option<usize>,
) -> Result<i32> {
    if !(lambda_min > 0.0 && lambda_max >= lambda_min) {
        return Err(Error::Config(format!(
            "sweep range [{lambda_min}, {lambda_max}] must be positive and ordered"
        )));
    }
    if !(factor > 1.0) || !factor.is_finite() {
        return Err(Error::Config(format!("factor = {factor} must exceed 1")));
    }
    let (cfg, snapshot) = RunConfig::from_path(&common.config)?;
    let parts = solve_parts(&cfg)?;
    let mut opts = cfg.solve_options();
    if let Some(cells) = mesh_cells {
        opts.mesh_cells = cells;
    }
    if let Some(t) = tol {
        opts.tol = Some(t);
    }

    let mut ladder = Vec::new();
    let mut lam = lambda_min;
    while lam <= lambda_max * (1.0 + 1e-12) {
        ladder.push(lam);
        if ladder.len() > 10_000 {
            return Err(Error::Config(
                "sweep ladder exceeds 10000 rungs; raise factor".into(),
            ));
        }
        lam *= factor;
    }

    let target = resolve_out(&common.out, false)?;
    let mut writer = writer_for(&target, "sweep", Some(snapshot))?;
    let mut entries = Vec::new();
    let mut last_err: Option<Error> = None;
    for (k, &lambda) in ladder.iter().enumerate() {
        let dir = format!("lambda_{k:03}");
        log(format!("sweep rung {k}: lambda {lambda:.6e}"));
        match run_solve(&parts, lambda, &opts) {
            Ok((rows, summary)) => {
                writer.write_csv(
                    &format!("{dir}/solution.csv"),
                    &["coordinate", "dist", "u", "u_lower", "u_upper"],
                    &rows,
                )?;
                writer.write_json(&format!("{dir}/report.json"), &summary)?;
                entries.push(SweepEntry {
                    index: k,
                    lambda,
                    dir,
                    solved: true,
                    iterations: Some(summary.iterations),
                    error: None,
                });
            }
            Err(err) => {
                println!("lambda {lambda:.6e}: {err}");
                entries.push(SweepEntry {
                    index: k,
                    lambda,
                    dir,
                    solved: false,
                    iterations: None,
                    error: Some(err.to_string()),
                });
                last_err = Some(err);
            }
        }
    }
    let solved = entries.iter().filter(|e| e.solved).count();
    writer.write_json(
        "sweep.json",
        &SweepSummary {
            lambda_min,
            lambda_max,
            factor,
            solved,
            entries,
        },
    )?;
    writer.finish()?;
    match (solved, last_err) {
        (0, Some(err)) => {
            eprintln!("degenlap: no rung solved; last failure: {err}");
            Ok(exit_code(&err))
        }
        _ => Ok(0),
    }
}

// ------------------------------------------------------------------ verify

/// One replayed scenario with its named checks.
#[derive(Debug, Clone, Serialize)]
pub struct ScenarioReport {
    pub name: String,
    pub checks: Vec<CheckItem>,
    pub passed: bool,
}

#[derive(Serialize)]
struct VerifySummary {
    scenarios: Vec<ScenarioReport>,
    passed: bool,
}

fn cmd_verify(config: Option<&Path>, out: &Option<PathBuf>, chosen: &[String]) -> Result<i32> {
    let (snapshot, from_config) = match config {
        Some(path) => {
            let (cfg, snap) = RunConfig::from_path(path)?;
            (Some(snap), cfg.verify.scenarios.clone())
        }
        None => (None, Vec::new()),
    };
    let mut names: Vec<String> = if chosen.is_empty() {
        from_config
    } else {
        chosen.to_vec()
    };
    if names.iter().any(|n| n == "all") {
        names = scenario_names().iter().map(|s| s.to_string()).collect();
    }
    if names.is_empty() {
        return Err(Error::Config(
            "no scenarios selected; pass --scenario or set [verify] scenarios".into(),
        ));
    }
    for name in &names {
        if !scenario_names().contains(&name.as_str()) {
            return Err(Error::Config(format!(
                "unknown scenario {name:?}; known: {}",
                scenario_names().join(", ")
            )));
        }
    }

    let mut reports = Vec::new();
    for name in &names {
        log(format!("scenario {name}"));
        let report = match run_scenario(name) {
            Ok(r) => r,
            Err(err) => ScenarioReport {
                name: name.clone(),
                checks: vec![item("execution", false, err.to_string())],
                passed: false,
            },
        };
        for it in &report.checks {
            let tag = if it.passed { "PASS" } else { "FAIL" };
            println!("[{tag}] {name} / {}: {}", it.name, it.detail);
        }
        reports.push(report);
    }
    let passed = reports.iter().all(|r| r.passed);
    println!(
        "verify: {}/{} scenarios passed",
        reports.iter().filter(|r| r.passed).count(),
        reports.len()
    );

    let target = resolve_out(out, false)?;
    let mut writer = writer_for(&target, "verify", snapshot)?;
    writer.write_json(
        "verify.json",
        &VerifySummary {
            scenarios: reports,
            passed,
        },
    )?;
    writer.finish()?;
    Ok(if passed { 0 } else { 3 })
}

// ---------------------------------------------------------------- scenarios

/// Names accepted by `verify --scenario`, in pipeline order.
pub fn scenario_names() -> &'static [&'static str] {
    &[
        "torsion-p2",
        "torsion-ball",
        "torsion-p3",
        "homogeneity",
        "comparison",
        "psi-envelope",
        "gluing",
        "rho-analytic",
        "subsolution-residual",
        "semipositone-model",
        "ball-inadmissible",
        "moser",
    ]
}

/// Replays one named scenario. Expected refusals count as passing
/// checks; an `Err` here means the scenario could not run at all.
pub fn run_scenario(name: &str) -> Result<ScenarioReport> {
    let checks = match name {
        "torsion-p2" => torsion_interval(2.0, 1e-8, |x| 0.5 * x * (1.0 - x))?,
        "torsion-ball" => torsion_ball()?,
        "torsion-p3" => torsion_interval(3.0, 1e-7, |x| {
            let c: f64 = 0.5;
            2.0 / 3.0 * (c.powf(1.5) - (c - x).abs().powf(1.5))
        })?,
        "homogeneity" => homogeneity()?,
        "comparison" => comparison_pairs()?,
        "psi-envelope" => psi_envelope()?,
        "gluing" => gluing_identities()?,
        "rho-analytic" => rho_analytic()?,
        "subsolution-residual" => subsolution_residual()?,
        "semipositone-model" => semipositone_model()?,
        "ball-inadmissible" => ball_inadmissible()?,
        "moser" => moser_and_apriori()?,
        other => {
            return Err(Error::Config(format!("unknown scenario {other:?}")));
        }
    };
    let passed = checks.iter().all(|c| c.passed);
    Ok(ScenarioReport {
        name: name.to_string(),
        checks,
        passed,
    })
}

fn item(name: &str, passed: bool, detail: String) -> CheckItem {
    CheckItem {
        name: name.into(),
        passed,
        detail,
    }
}

fn quad() -> QuadratureSpec {
    QuadratureSpec::default()
}

/// Interval torsion profile against a closed form at 10^4 cells.
fn torsion_interval(p: f64, tol: f64, exact: impl Fn(f64) -> f64) -> Result<Vec<CheckItem>> {
    let problem = Problem::new(
        DomainGeometry::interval(1.0)?,
        WeightProfile::uniform(1.0, 0.3)?,
        p,
        quad(),
    )?;
    let mesh = default_mesh(&problem, 10_000)?;
    let one = |_: f64, _: f64| 1.0;
    let (w, _) = solve(&problem, &Rhs::Analytic { f: &one, gamma: 0.0 }, &mesh)?;
    let mut err = 0.0_f64;
    for (&x, &v) in mesh.nodes().iter().zip(w.values()) {
        err = err.max((v - exact(x)).abs());
    }
    Ok(vec![item(
        "closed_form_sup_error",
        err <= tol,
        format!(
            "sup error {err:.3e} over {} nodes at p = {p} (tol {tol:.0e})",
            mesh.nodes().len()
        ),
    )])
}

/// Radial torsion profile on the unit ball in three dimensions.
fn torsion_ball() -> Result<Vec<CheckItem>> {
    let problem = Problem::new(
        DomainGeometry::ball(1.0, 3)?,
        WeightProfile::uniform(1.0, 0.3)?,
        2.0,
        quad(),
    )?;
    let mesh = default_mesh(&problem, 10_000)?;
    let one = |_: f64, _: f64| 1.0;
    let (w, _) = solve(&problem, &Rhs::Analytic { f: &one, gamma: 0.0 }, &mesh)?;
    let mut err = 0.0_f64;
    for (&r, &v) in mesh.nodes().iter().zip(w.values()) {
        err = err.max((v - (1.0 - r * r) / 6.0).abs());
    }
    Ok(vec![item(
        "closed_form_sup_error",
        err <= 1e-8,
        format!(
            "sup |w - (1-r^2)/6| = {err:.3e} over {} nodes (tol 1e-8)",
            mesh.nodes().len()
        ),
    )])
}

/// Drawn geometry/weight/exponent combination shared by the randomized
/// resolvent scenarios.
fn drawn_problem(rng: &mut ChaCha8Rng, k: usize) -> Result<Problem> {
    let p = 1.5 + 1.7 * rng.gen::<f64>();
    let geom = if k % 2 == 0 {
        DomainGeometry::interval(1.0 + rng.gen::<f64>())?
    } else {
        DomainGeometry::annulus(1.0, 2.0 + rng.gen::<f64>(), 3)?
    };
    let profile = if k % 4 < 2 {
        WeightProfile::uniform(0.5 + rng.gen::<f64>(), 0.3)?
    } else {
        WeightProfile::power(1.0, 0.8 * (p - 1.0) * rng.gen::<f64>(), 0.3)?
    };
    Problem::new(geom, profile, p, quad())
}

/// Resolvent homogeneity `L(t f) = t^{1/(p-1)} L(f)` over seeded draws.
fn homogeneity() -> Result<Vec<CheckItem>> {
    let mut rng = ChaCha8Rng::seed_from_u64(0x68_6f_6d_31);
    let mut worst = f64::NEG_INFINITY;
    for k in 0..20 {
        let problem = drawn_problem(&mut rng, k)?;
        let (lo, _hi) = problem.geometry.coords();
        let c0 = 0.5 + rng.gen::<f64>();
        let c1 = rng.gen::<f64>();
        let t = 10.0_f64.powf(-3.0 + 6.0 * rng.gen::<f64>());
        let base = move |x: f64, _: f64| c0 + c1 * (x - lo);
        let scaled = move |x: f64, _: f64| t * (c0 + c1 * (x - lo));
        let mesh = default_mesh(&problem, 500)?;
        let (w1, _) = solve(&problem, &Rhs::Analytic { f: &base, gamma: 0.0 }, &mesh)?;
        let (w2, _) = solve(&problem, &Rhs::Analytic { f: &scaled, gamma: 0.0 }, &mesh)?;
        let scale = t.powf(1.0 / (problem.p - 1.0));
        let denom = w2.sup_norm().max(1.0);
        for (&a, &b) in w1.values().iter().zip(w2.values()) {
            worst = worst.max((b - scale * a).abs() / denom);
        }
    }
    Ok(vec![item(
        "scaling_defect",
        worst <= 1e-9,
        format!("max relative defect {worst:.3e} over 20 seeded draws (tol 1e-9)"),
    )])
}

/// Resolvent monotonicity: a pointwise larger right-hand side yields a
/// nodally larger solution.
fn comparison_pairs() -> Result<Vec<CheckItem>> {
    let mut rng = ChaCha8Rng::seed_from_u64(0x63_6d_70_31);
    let mut worst = f64::NEG_INFINITY;
    for k in 0..20 {
        let problem = drawn_problem(&mut rng, k)?;
        let (lo, hi) = problem.geometry.coords();
        let c0 = 0.2 + rng.gen::<f64>();
        let c1 = rng.gen::<f64>();
        let c2 = 0.5 + rng.gen::<f64>();
        let center = lo + (hi - lo) * rng.gen::<f64>();
        let small = move |x: f64, _: f64| c0 + c1 * (x - lo);
        let large = move |x: f64, _: f64| {
            c0 + c1 * (x - lo) + c2 * (0.1 + (x - center) * (x - center))
        };
        let mesh = default_mesh(&problem, 400)?;
        let (w1, _) = solve(&problem, &Rhs::Analytic { f: &small, gamma: 0.0 }, &mesh)?;
        let (w2, _) = solve(&problem, &Rhs::Analytic { f: &large, gamma: 0.0 }, &mesh)?;
        let denom = w2.sup_norm().max(1.0);
        for (&a, &b) in w1.values().iter().zip(w2.values()) {
            worst = worst.max((a - b) / denom);
        }
    }
    Ok(vec![item(
        "ordering_defect",
        worst <= 1e-9,
        format!("max relative ordering excess {worst:.3e} over 20 seeded pairs (tol 1e-9)"),
    )])
}

/// Collar barrier pinched by the weighted distance across the weight
/// power / exponent grid, with the divergent combination refused.
fn psi_envelope() -> Result<Vec<CheckItem>> {
    let geom = DomainGeometry::ball(1.0, 3)?;
    let mut worst_env = f64::NEG_INFINITY;
    let mut worst_flux = f64::NEG_INFINITY;
    let mut checks = Vec::new();
    let mut combos = 0;
    for &alpha in &[0.0, 0.3, 0.6] {
        for &p in &[1.5, 2.0, 3.0] {
            let profile = if alpha == 0.0 {
                WeightProfile::uniform(1.0, 0.5)?
            } else {
                WeightProfile::power(1.0, alpha, 0.5)?
            };
            let result = build_psi(&profile, p, &geom, 0.5, &quad());
            if alpha == 0.6 && p == 1.5 {
                // a^{-1/(p-1)} = t^{-1.2} is not integrable: the
                // barrier must refuse instead of fabricating a table.
                let (refused, detail) = match result {
                    Err(Error::Divergent { detail }) => (true, detail),
                    Err(other) => (false, other.to_string()),
                    Ok(_) => (false, "barrier built despite divergent distance".into()),
                };
                checks.push(item(
                    "divergent_distance_refused",
                    refused,
                    format!("alpha 0.6, p 1.5: {detail}"),
                ));
                continue;
            }
            let psi = result?;
            combos += 1;
            let sample = Mesh::boundary_layer(0.0, psi.rho0, 1_000, Some(psi.rho0), None)?;
            for &y in sample.nodes() {
                if y == 0.0 {
                    continue;
                }
                let d = weighted_distance(&profile, p, y)?;
                let v = psi.eval(y);
                worst_env = worst_env
                    .max((v - psi.c_bound * d) / (psi.c_bound * d))
                    .max((d / psi.c_bound - v) / (d / psi.c_bound));
            }
            worst_flux = worst_flux.max(psi.flux_residual);
        }
    }
    checks.push(item(
        "two_sided_distance_bound",
        worst_env <= 1e-9,
        format!(
            "worst relative envelope excess {worst_env:.3e} over {combos} combinations at 1001 nodes"
        ),
    ));
    checks.push(item(
        "flux_identity",
        worst_flux <= 1e-8,
        format!("worst two-route flux residual {worst_flux:.3e} (tol 1e-8)"),
    ));
    Ok(checks)
}

/// Value and flux continuity of the glued distance-power branch.
fn gluing_identities() -> Result<Vec<CheckItem>> {
    let mut rng = ChaCha8Rng::seed_from_u64(0x9a_bd_01);
    let mut worst = f64::NEG_INFINITY;
    for k in 0..100 {
        let p = 1.6 + 1.9 * rng.gen::<f64>();
        let beta = 1.0 + (0.05 + 0.9 * rng.gen::<f64>()) / (p - 1.0);
        let rho = 0.05 + 0.4 * rng.gen::<f64>();
        let profile = if k % 2 == 0 {
            WeightProfile::uniform(0.5 + rng.gen::<f64>(), 0.5)?
        } else {
            WeightProfile::power(1.0, 0.8 * (p - 1.0) * rng.gen::<f64>(), 0.5)?
        };
        let (amp, coef) = boundary_amplitude(&profile, p, beta, rho)?;
        let d = weighted_distance(&profile, p, rho)?;
        let value_defect = (coef * d.powf(beta) - 1.0).abs();
        let flux_defect =
            ((coef * beta).powf(p - 1.0) * d.powf((beta - 1.0) * (p - 1.0)) / amp - 1.0).abs();
        worst = worst.max(value_defect).max(flux_defect);
    }
    Ok(vec![item(
        "value_and_flux_identities",
        worst <= 1e-12,
        format!("worst gluing identity defect {worst:.3e} over 100 seeded draws (tol 1e-12)"),
    )])
}

/// Gluing radius map on the flat analytic configuration, where the
/// minimizer, the threshold, and the radius all have closed forms.
fn rho_analytic() -> Result<Vec<CheckItem>> {
    let profile = WeightProfile::uniform(1.0, 0.5)?;
    let geom = DomainGeometry::interval(1.0)?;
    let params = SubsolutionParams::new(3.0, 1.5, 1.0, 1.2, None, 0.5, 1.0)?;
    let hat = solve_rho(&profile, &geom, &params, 3.0, 1e9, &quad())?;
    let mut checks = Vec::new();
    checks.push(item(
        "minimizer",
        (hat.rho_hat - 1.0 / 3.0).abs() <= 1e-6,
        format!("rho_hat = {:.12} vs 1/3 (tol 1e-6)", hat.rho_hat),
    ));
    let hat1_exact = 6046.6176;
    checks.push(item(
        "lambda_hat_one",
        (hat.lambda_hat_one - hat1_exact).abs() <= 1e-3 * hat1_exact,
        format!(
            "lambda_hat_one = {:.6} vs {hat1_exact} (rel tol 1e-3)",
            hat.lambda_hat_one
        ),
    ));
    // At lambda = 4 lambda_hat_one the radius solves
    // rho^2 (1/2 - rho) = beta^{p-1} / sqrt(lambda) on (rho_hat, 1/2).
    let lambda = 4.0 * hat.lambda_hat_one;
    let sol = solve_rho(&profile, &geom, &params, 3.0, lambda, &quad())?;
    let target = 1.44 / 155.52;
    let (mut lo, mut hi) = (1.0 / 3.0, 0.4999999);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid * mid * (0.5 - mid) - target > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let oracle = 0.5 * (lo + hi);
    checks.push(item(
        "radius_at_4x_threshold",
        (sol.rho - oracle).abs() <= 1e-8,
        format!("rho = {:.12} vs bisected {oracle:.12} (tol 1e-8)", sol.rho),
    ));
    Ok(checks)
}

/// Square-root model shared by the subsolution and end-to-end scenarios.
fn model_parts() -> Result<(Problem, NonlinearitySpec, SubsolutionParams, CoefficientB)> {
    let problem = Problem::new(
        DomainGeometry::interval(1.0)?,
        WeightProfile::uniform(1.0, 0.5)?,
        2.0,
        quad(),
    )?;
    let spec = NonlinearitySpec::new(
        |z: f64| z.max(0.0).sqrt() - 1.0,
        |z: f64| z.max(0.0).sqrt() - 1.0,
        1.0,
        0.5,
    )?;
    let params = SubsolutionParams::new(2.0, 0.5, 1.05, 1.5, None, 0.45, 1.0)?;
    Ok((problem, spec, params, unit_b()?))
}

/// Signed subsolution residual stays nonpositive up to roundoff for
/// every lambda at and above the flux threshold.
fn subsolution_residual() -> Result<Vec<CheckItem>> {
    let (problem, spec, params, b) = model_parts()?;
    let mesh = default_mesh(&problem, 600)?;
    let probe = crate::barriers::lambda_zero(&spec, &problem, &b, &params, &mesh)?;
    let star = probe.thresholds.lambda_star;
    let mut worst = f64::NEG_INFINITY;
    for factor in [1.0 + 1e-7, 2.0, 10.0] {
        let sub = build_subsolution(&spec, &problem, &b, &params, factor * star, &mesh)?;
        worst = worst.max(sub.residual);
    }
    Ok(vec![item(
        "signed_residual",
        worst <= 1e-8,
        format!(
            "worst signed residual {worst:.3e} at lambda/lambda_star in {{1+1e-7, 2, 10}} (tol 1e-8)"
        ),
    )])
}

/// End-to-end semipositone solve on the square-root model.
fn semipositone_model() -> Result<Vec<CheckItem>> {
    let (problem, spec, params, b) = model_parts()?;
    let mesh = default_mesh(&problem, 600)?;
    let probe = crate::barriers::lambda_zero(&spec, &problem, &b, &params, &mesh)?;
    let lambda_zero = probe.thresholds.lambda_zero;
    let mut checks = vec![item(
        "lambda_zero",
        lambda_zero.is_finite() && lambda_zero > 0.0,
        format!("lambda_zero = {lambda_zero:.12}"),
    )];

    let opts = SolveOptions {
        mesh_cells: 600,
        ..SolveOptions::default()
    };
    let (u, pair, rep) =
        solve_semipositone(&spec, &problem, &b, &params, 2.0 * lambda_zero, &opts)?;
    checks.push(item(
        "picard_converges",
        rep.converged && rep.iterations <= 200,
        format!(
            "converged = {} in {} iterations (cap 200)",
            rep.converged, rep.iterations
        ),
    ));

    let nodes = u.mesh().nodes();
    let vals = u.values();
    let mut sandwich_gap = f64::NEG_INFINITY;
    let mut positive = true;
    for (i, &x) in nodes.iter().enumerate() {
        sandwich_gap = sandwich_gap
            .max(pair.u_lower.eval(x) - vals[i])
            .max(vals[i] - pair.u_upper.eval(x));
        if x > 1.0 / 3.0 && x < 2.0 / 3.0 && vals[i] <= 0.0 {
            positive = false;
        }
    }
    checks.push(item(
        "sandwich",
        rep.sandwich_ok && sandwich_gap <= 1e-8,
        format!("max barrier violation {sandwich_gap:.3e} (tol 1e-8)"),
    ));
    checks.push(item(
        "interior_positivity",
        positive,
        "u > 0 on the middle third".into(),
    ));
    checks.push(item(
        "weak_residual",
        rep.residual_weak <= 1e-6,
        format!("weak residual {:.3e} (tol 1e-6)", rep.residual_weak),
    ));
    Ok(checks)
}

/// Curvature gate: the outward-curved collar is refused, the inner
/// collar of an annulus is accepted.
fn ball_inadmissible() -> Result<Vec<CheckItem>> {
    let params = SubsolutionParams::new(3.0, 1.5, 1.0, 1.2, None, 0.3, 1.0)?;
    let profile = WeightProfile::uniform(1.0, 0.3)?;
    let ball = DomainGeometry::ball(1.0, 3)?;
    let (refused, detail) = match solve_rho(&profile, &ball, &params, 3.0, 1e5, &quad()) {
        Err(err @ Error::GeometryInadmissible { .. }) => (true, err.to_string()),
        Err(other) => (false, other.to_string()),
        Ok(g) => (false, format!("accepted with rho = {:.6}", g.rho)),
    };
    let collar = DomainGeometry::inner_collar(1.0, 3, 0.5)?;
    let (accepted, detail2) = match solve_rho(&profile, &collar, &params, 3.0, 1e9, &quad()) {
        Ok(g) => (true, format!("accepted with rho = {:.6}", g.rho)),
        Err(err) => (false, err.to_string()),
    };
    Ok(vec![
        item("ball_refused", refused, format!("ball, N = 3: {detail}")),
        item(
            "annulus_inner_accepted",
            accepted,
            format!("inner collar, N = 3: {detail2}"),
        ),
    ])
}

/// Moser ladder against its closed form, plus the a priori ratio over
/// the torsion family.
fn moser_and_apriori() -> Result<Vec<CheckItem>> {
    let exps = ExponentSet::new(2.0, 3, 2.5, 2.0)?;
    let ladder = moser_ladder(exps.p, exps.p_s_star, 40)?;
    let ratio = exps.p_s_star / exps.p;
    let mut worst = f64::NEG_INFINITY;
    for (n, &eps) in ladder.epsilons.iter().enumerate() {
        let exact = ratio.powi(n as i32) - 1.0;
        worst = worst.max((eps - exact).abs() / (1.0 + exact));
    }
    let mut checks = vec![item(
        "ladder_closed_form",
        worst <= 1e-12,
        format!(
            "worst relative rung defect {worst:.3e} over {} rungs (tol 1e-12)",
            ladder.epsilons.len()
        ),
    )];
    let limit = exps.p_s_star / (exps.p_s_star - exps.p);
    checks.push(item(
        "exponent_sum_limit",
        (ladder.sum_limit - limit).abs() <= 1e-12 * limit,
        format!("sum limit {:.12} vs {limit:.12}", ladder.sum_limit),
    ));

    let b = unit_b()?;
    let mut worst_ratio = f64::NEG_INFINITY;
    for (geom, p) in [
        (DomainGeometry::interval(1.0)?, 2.0),
        (DomainGeometry::interval(1.0)?, 3.0),
        (DomainGeometry::ball(1.0, 3)?, 2.0),
    ] {
        let profile = WeightProfile::uniform(1.0, 0.3)?;
        let problem = Problem::new(geom, profile, p, quad())?;
        let mesh = default_mesh(&problem, 800)?;
        let f = |_: f64, d: f64| b.eval(d, &problem.weight, problem.p);
        let (u, _) = solve(&problem, &Rhs::Analytic { f: &f, gamma: 0.0 }, &mesh)?;
        let u = u.with_geom(problem.geometry.clone());
        worst_ratio = worst_ratio.max(apriori_check(&u, &b, &problem.weight));
    }
    checks.push(item(
        "apriori_ratio",
        worst_ratio < 10.0,
        format!("worst a priori ratio {worst_ratio:.6} over the torsion family (cap 10)"),
    ));
    Ok(checks)
}
