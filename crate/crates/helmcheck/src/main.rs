//! `helmcheck` — decide whether a second-order system is variational.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use helmcheck::catalog::{self, Candidate, CandidateKind, Problem};
use helmcheck::expr::PhasePoint;
use helmcheck::geom::{identity_battery, integrate_geodesic, SprayGeometry};
use helmcheck::helmholtz::{
    check_lagrangian, finsler_metrizability_check, form_homogeneity, hamel_check,
    helmholtz_residuals, homogeneous_check, multiplier_residuals, obstruction_rank,
    projective_metrizability_check, CheckReport, DEFAULT_TOL,
};
use helmcheck::report::{
    check_report_json, check_report_text, identities_json, identities_text, obstruction_json,
    obstruction_text, ReportConfig,
};

#[derive(Parser)]
#[command(name = "helmcheck", version, about = "Helmholtz-condition and metrizability checker for semisprays")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Check a candidate (1-form, Lagrangian, or Hamel function) against
    /// the variationality conditions for the problem's semispray.
    Check {
        #[command(flatten)]
        common: Common,
        /// Condition set for 1-form candidates.
        #[arg(long, value_enum, default_value_t = Mode::Auto)]
        mode: Mode,
    },
    /// Run the structure-identity battery for the problem's semispray.
    Identities {
        #[command(flatten)]
        common: Common,
    },
    /// Projective / Finsler metrizability checks for a 1-form candidate.
    Metrizability {
        #[command(flatten)]
        common: Common,
        #[arg(long, value_enum, default_value_t = Kind::Auto)]
        kind: Kind,
    },
    /// Rank of the linear obstruction system on symmetric multipliers.
    Obstruction {
        #[command(flatten)]
        common: Common,
        /// Highest covariant derivative of the Jacobi endomorphism to
        /// include (0, 1, or 2).
        #[arg(long, default_value_t = 2)]
        order: usize,
    },
    /// Integrate the geodesic equations with fixed-step RK4.
    Geodesics {
        #[command(flatten)]
        common: Common,
        /// Comma-separated initial base point, e.g. "1.0,2.0".
        #[arg(long)]
        x0: String,
        /// Comma-separated initial fiber point, e.g. "0.5,-1.0".
        #[arg(long)]
        y0: String,
        #[arg(long, default_value_t = 1e-3)]
        dt: f64,
        #[arg(long, default_value_t = 1000)]
        steps: usize,
    },
    /// List the built-in example problems.
    ListExamples,
}

#[derive(Args)]
struct Common {
    /// Name of a built-in problem.
    #[arg(long, conflicts_with = "file")]
    builtin: Option<String>,
    /// Path to a problem description in JSON.
    #[arg(long)]
    file: Option<PathBuf>,
    /// Candidate name (defaults to the problem's first candidate).
    #[arg(long)]
    candidate: Option<String>,
    /// Residual tolerance; a condition passes when
    /// max_abs <= tol * (1 + scale).
    #[arg(long, default_value_t = DEFAULT_TOL)]
    tol: f64,
    /// Number of sample points (at least 8).
    #[arg(long, default_value_t = 20)]
    samples: usize,
    /// Seed for the sample generator (defaults to the problem's seed).
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long, value_enum, default_value_t = Format::Text)]
    format: Format,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Text,
    Json,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Mode {
    /// Use the homogeneity-reduced condition set when the semispray is a
    /// spray and the form is homogeneous; fall back to the full set.
    Auto,
    /// Always check the full condition set.
    Full,
    /// Check via the multiplier-matrix formulation.
    Multiplier,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Kind {
    /// Pick by homogeneity degree: 0 -> projective, 1 -> finsler,
    /// otherwise the full condition set.
    Auto,
    Full,
    Projective,
    Finsler,
}

/// Exit 2 with a message on stderr.
fn usage_error(msg: &str) -> ExitCode {
    eprintln!("error: {msg}");
    ExitCode::from(2)
}

fn load(common: &Common) -> Result<Problem, String> {
    match (&common.builtin, &common.file) {
        (Some(name), None) => catalog::builtin(name).map_err(|e| e.to_string()),
        (None, Some(path)) => catalog::load_problem(path).map_err(|e| e.to_string()),
        _ => Err("exactly one of --builtin or --file is required".to_string()),
    }
}

struct Context {
    problem: Problem,
    geom: SprayGeometry,
    points: Vec<PhasePoint>,
    tol: f64,
    seed: u64,
    samples: usize,
    format: Format,
}

fn context(common: &Common) -> Result<Context, String> {
    if common.samples < 8 {
        return Err("--samples must be at least 8".to_string());
    }
    if !(common.tol.is_finite() && common.tol > 0.0) {
        return Err("--tol must be a positive number".to_string());
    }
    let problem = load(common)?;
    let seed = common.seed.unwrap_or(problem.seed);
    let points = problem.sampling.sample(seed, common.samples);
    if points.len() < common.samples {
        return Err("sampling box rejected too many points (zero-section guard)".to_string());
    }
    let geom = SprayGeometry::new(problem.spray.clone());
    Ok(Context {
        problem,
        geom,
        points,
        tol: common.tol,
        seed,
        samples: common.samples,
        format: common.format,
    })
}

fn pick_candidate<'a>(problem: &'a Problem, name: &Option<String>) -> Result<&'a Candidate, String> {
    match name {
        Some(n) => problem
            .candidate(n)
            .ok_or_else(|| format!("no candidate named {n:?} in problem {:?}", problem.name)),
        None => problem
            .candidates
            .first()
            .ok_or_else(|| format!("problem {:?} has no candidates", problem.name)),
    }
}

fn report_config(ctx: &Context, command: &str, candidate: Option<&str>) -> ReportConfig {
    ReportConfig {
        problem: ctx.problem.name.clone(),
        candidate: candidate.map(|s| s.to_string()),
        command: command.to_string(),
        tol: ctx.tol,
        samples: ctx.samples,
        seed: ctx.seed,
    }
}

fn emit_check(ctx: &Context, cfg: &ReportConfig, report: &CheckReport) -> ExitCode {
    match ctx.format {
        Format::Json => println!("{}", check_report_json(cfg, report)),
        Format::Text => print!("{}", check_report_text(cfg, report)),
    }
    if report.verdict {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(1)
    }
}

fn cmd_check(common: &Common, mode: Mode) -> ExitCode {
    let ctx = match context(common) {
        Ok(c) => c,
        Err(e) => return usage_error(&e),
    };
    let cand = match pick_candidate(&ctx.problem, &common.candidate) {
        Ok(c) => c,
        Err(e) => return usage_error(&e),
    };
    let cfg = report_config(&ctx, "check", Some(&cand.name));
    let result = match cand.kind {
        CandidateKind::OneForm => {
            let theta = cand.as_one_form(ctx.problem.n).unwrap();
            match mode {
                Mode::Full => helmholtz_residuals(&ctx.geom, &theta, &ctx.points, ctx.tol),
                Mode::Multiplier => multiplier_residuals(&ctx.geom, &theta, &ctx.points, ctx.tol)
                    .map(|(r, _)| r),
                Mode::Auto => {
                    match ctx.geom.semispray().is_spray(&ctx.points) {
                        Ok(true) if form_homogeneity(&theta, &ctx.points).is_ok() => {
                            homogeneous_check(&ctx.geom, &theta, &ctx.points, ctx.tol)
                        }
                        Ok(_) => helmholtz_residuals(&ctx.geom, &theta, &ctx.points, ctx.tol),
                        Err(e) => return usage_error(&e.to_string()),
                    }
                }
            }
        }
        CandidateKind::Lagrangian => {
            check_lagrangian(&ctx.geom, cand.as_scalar().unwrap(), &ctx.points, ctx.tol)
        }
        CandidateKind::ZeroHomogFunction => {
            hamel_check(&ctx.geom, cand.as_scalar().unwrap(), &ctx.points, ctx.tol)
        }
    };
    match result {
        Ok(report) => emit_check(&ctx, &cfg, &report),
        Err(e) => usage_error(&e.to_string()),
    }
}

fn cmd_identities(common: &Common) -> ExitCode {
    let ctx = match context(common) {
        Ok(c) => c,
        Err(e) => return usage_error(&e),
    };
    let cfg = report_config(&ctx, "identities", None);
    match identity_battery(&ctx.geom, &ctx.points, ctx.tol) {
        Ok((rows, verdict)) => {
            match ctx.format {
                Format::Json => println!("{}", identities_json(&cfg, &rows, verdict)),
                Format::Text => print!("{}", identities_text(&cfg, &rows, verdict)),
            }
            if verdict {
                ExitCode::SUCCESS
            } else {
                ExitCode::from(1)
            }
        }
        Err(e) => usage_error(&e.to_string()),
    }
}

fn cmd_metrizability(common: &Common, kind: Kind) -> ExitCode {
    let ctx = match context(common) {
        Ok(c) => c,
        Err(e) => return usage_error(&e),
    };
    let cand = match pick_candidate(&ctx.problem, &common.candidate) {
        Ok(c) => c,
        Err(e) => return usage_error(&e),
    };
    let theta = match cand.as_one_form(ctx.problem.n) {
        Some(t) => t,
        None => return usage_error("metrizability requires a one-form candidate"),
    };
    let cfg = report_config(&ctx, "metrizability", Some(&cand.name));
    let kind = if kind == Kind::Auto {
        match form_homogeneity(&theta, &ctx.points) {
            Ok(k) if k.num == 0 => Kind::Projective,
            Ok(k) if k.num == 1 && k.den == 1 => Kind::Finsler,
            _ => Kind::Full,
        }
    } else {
        kind
    };
    let result = match kind {
        Kind::Projective => projective_metrizability_check(&ctx.geom, &theta, &ctx.points, ctx.tol),
        Kind::Finsler => finsler_metrizability_check(&ctx.geom, &theta, &ctx.points, ctx.tol),
        _ => helmholtz_residuals(&ctx.geom, &theta, &ctx.points, ctx.tol),
    };
    match result {
        Ok(report) => emit_check(&ctx, &cfg, &report),
        Err(e) => usage_error(&e.to_string()),
    }
}

fn cmd_obstruction(common: &Common, order: usize) -> ExitCode {
    let ctx = match context(common) {
        Ok(c) => c,
        Err(e) => return usage_error(&e),
    };
    let cfg = report_config(&ctx, "obstruction", None);
    match obstruction_rank(&ctx.geom, &ctx.points, order) {
        Ok(reports) => {
            match ctx.format {
                Format::Json => println!("{}", obstruction_json(&cfg, &reports)),
                Format::Text => print!("{}", obstruction_text(&cfg, &reports)),
            }
            ExitCode::SUCCESS
        }
        Err(e) => usage_error(&e.to_string()),
    }
}

fn parse_coords(s: &str, n: usize, what: &str) -> Result<Vec<f64>, String> {
    let vals: Result<Vec<f64>, _> = s.split(',').map(|t| t.trim().parse::<f64>()).collect();
    match vals {
        Ok(v) if v.len() == n => Ok(v),
        Ok(v) => Err(format!("{what}: expected {n} coordinates, got {}", v.len())),
        Err(e) => Err(format!("{what}: {e}")),
    }
}

fn cmd_geodesics(common: &Common, x0: &str, y0: &str, dt: f64, steps: usize) -> ExitCode {
    let ctx = match context(common) {
        Ok(c) => c,
        Err(e) => return usage_error(&e),
    };
    let n = ctx.problem.n;
    let (x, y) = match (parse_coords(x0, n, "--x0"), parse_coords(y0, n, "--y0")) {
        (Ok(x), Ok(y)) => (x, y),
        (Err(e), _) | (_, Err(e)) => return usage_error(&e),
    };
    let y_min = ctx.problem.sampling.y_min;
    let start = match PhasePoint::new(x, y, y_min) {
        Ok(p) => p,
        Err(e) => return usage_error(&e.to_string()),
    };
    // If a Lagrangian candidate is available, tabulate it along the flow.
    let lagrangian = common
        .candidate
        .as_ref()
        .and_then(|name| ctx.problem.candidate(name))
        .filter(|c| c.kind == CandidateKind::Lagrangian)
        .map(|c| c.fields[0].clone());
    let traj = match integrate_geodesic(&ctx.problem.spray, &start, dt, steps, y_min)
    {
        Ok(t) => t,
        Err(e) => return usage_error(&e.to_string()),
    };
    match ctx.format {
        Format::Json => {
            let rows: Vec<serde_json::Value> = traj
                .times
                .iter()
                .zip(&traj.points)
                .map(|(t, p)| {
                    let mut row = serde_json::json!({ "t": t, "x": p.x, "y": p.y });
                    if let Some(l) = &lagrangian {
                        if let Ok(v) = l.eval(p) {
                            row["L"] = serde_json::json!(v);
                        }
                    }
                    row
                })
                .collect();
            println!(
                "{}",
                serde_json::json!({
                    "report_version": helmcheck::report::REPORT_VERSION,
                    "problem": ctx.problem.name,
                    "dt": dt,
                    "steps": steps,
                    "trajectory": rows,
                })
            );
        }
        Format::Text => {
            for (t, p) in traj.times.iter().zip(&traj.points) {
                let extra = lagrangian
                    .as_ref()
                    .and_then(|l| l.eval(p).ok())
                    .map(|v| format!("  L = {v:.12e}"))
                    .unwrap_or_default();
                println!("t = {t:<10.6} x = {:?}  y = {:?}{extra}", p.x, p.y);
            }
        }
    }
    ExitCode::SUCCESS
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match &cli.command {
        Command::Check { common, mode } => cmd_check(common, *mode),
        Command::Identities { common } => cmd_identities(common),
        Command::Metrizability { common, kind } => cmd_metrizability(common, *kind),
        Command::Obstruction { common, order } => cmd_obstruction(common, *order),
        Command::Geodesics {
            common,
            x0,
            y0,
            dt,
            steps,
        } => cmd_geodesics(common, x0, y0, *dt, *steps),
        Command::ListExamples => {
            for name in catalog::BUILTIN_NAMES {
                println!("{name}");
            }
            ExitCode::SUCCESS
        }
    }
}
