use std::fmt::Write as _;
use std::io::Write as _;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Duration;

use clap::{Args, Parser, Subcommand};
use firefront_core::artifacts::{self, REPORT_FILE, TRACE_FILE};
use firefront_core::estimation::generate_synthetic_measurements_with;
use firefront_core::metrics::{metric_report, SnapshotMetrics};
use firefront_core::scenario_file::{self, ScenarioSetup};
use firefront_core::spread::PARAM_NAMES;
use firefront_core::{estimate, simulate, Error, FrontSeries, ParamVector, Result};

const THREADS_VAR: &str = "FIREFRONT_THREADS";

#[derive(Debug, Parser)]
#[command(
    name = "firefront",
    version,
    about = "Level-set wildfire front simulation and rate-of-spread estimation"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Simulate a scenario and write its fronts.
    Simulate(SimulateArgs),
    /// Estimate the spread parameters from measured fronts.
    Estimate(EstimateArgs),
    /// Score a parameter vector against measured fronts.
    Evaluate(EvaluateArgs),
}

#[derive(Debug, Args)]
struct Common {
    /// Scenario file, or the name of a bundled scenario.
    scenario: String,
    /// Output directory.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Courant number of the solver.
    #[arg(long)]
    cfl: Option<f64>,
}

#[derive(Debug, Args)]
struct SimulateArgs {
    #[command(flatten)]
    common: Common,
    /// Eight comma-separated values `n,eps_a,eps_b,a_a,a_b,alpha,beta_a,beta_b`;
    /// defaults to the scenario's `[truth]`.
    #[arg(long, value_parser = parse_params)]
    params: Option<ParamVector>,
}

#[derive(Debug, Args)]
struct EstimateArgs {
    #[command(flatten)]
    common: Common,
    /// Directory of measured fronts; synthetic fronts from `[truth]` if absent.
    #[arg(long)]
    measured: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    max_iter: Option<usize>,
    #[arg(long)]
    max_evals: Option<usize>,
    #[arg(long)]
    budget_seconds: Option<f64>,
    /// Evaluate each poll set concurrently.
    #[arg(long)]
    parallel_poll: bool,
}

#[derive(Debug, Args)]
struct EvaluateArgs {
    #[command(flatten)]
    common: Common,
    #[arg(long, value_parser = parse_params)]
    params: Option<ParamVector>,
    /// Directory of measured fronts; synthetic fronts from `[truth]` if absent.
    #[arg(long)]
    measured: Option<PathBuf>,
}

fn parse_params(s: &str) -> std::result::Result<ParamVector, String> {
    let values = s
        .split(',')
        .map(|v| {
            v.trim()
                .parse::<f64>()
                .map_err(|_| format!("`{}` is not a number", v.trim()))
        })
        .collect::<std::result::Result<Vec<_>, _>>()?;
    ParamVector::from_slice(&values).map_err(|e| e.to_string())
}

fn load_setup(common: &Common) -> Result<ScenarioSetup> {
    let path = Path::new(&common.scenario);
    let mut setup = if path.is_file() {
        scenario_file::load(path)?
    } else if scenario_file::bundled_source(&common.scenario).is_some() {
        scenario_file::load_bundled(&common.scenario)?
    } else {
        let names: Vec<&str> = scenario_file::BUNDLED.iter().map(|(n, _)| *n).collect();
        return Err(Error::Scenario(format!(
            "`{}` is neither a file nor a bundled scenario ({})",
            common.scenario,
            names.join(", ")
        )));
    };
    if let Some(cfl) = common.cfl {
        setup.solver.cfl = cfl;
    }
    Ok(setup)
}

fn params_or_truth(params: Option<ParamVector>, setup: &ScenarioSetup) -> Result<ParamVector> {
    let p = params.or(setup.truth).ok_or_else(|| {
        Error::Scenario("no parameters: pass --params or add a `[truth]` section".into())
    })?;
    p.validate()?;
    Ok(p)
}

fn measurements(dir: Option<&Path>, setup: &ScenarioSetup) -> Result<FrontSeries> {
    match (dir, &setup.truth) {
        (Some(dir), _) => artifacts::read_front_rasters(dir),
        (None, Some(truth)) => {
            log::info!("no --measured directory, using synthetic fronts from `[truth]`");
            generate_synthetic_measurements_with(&setup.scenario, truth, &setup.solver)
        }
        (None, None) => Err(Error::Scenario(
            "no measurements: pass --measured or add a `[truth]` section".into(),
        )),
    }
}

fn fmt_params(p: &ParamVector) -> String {
    PARAM_NAMES
        .iter()
        .zip(p.to_array())
        .map(|(n, v)| format!("{n}={v:.6}"))
        .collect::<Vec<_>>()
        .join(" ")
}

fn fmt_time(t: f64) -> String {
    format!("{}", (t * 1e9).round() / 1e9)
}

fn fmt_opt(v: Option<f64>) -> String {
    v.map_or_else(|| "-".into(), |v| format!("{v:.4}"))
}

fn write_table(text: &mut String, rows: &[SnapshotMetrics]) {
    writeln!(
        text,
        "{:>12} {:>9} {:>7} {:>7} {:>7}",
        "time", "mismatch", "SSI", "JSC", "KS"
    )
    .unwrap();
    for r in rows {
        writeln!(
            text,
            "{:>12} {:>9} {:>7} {:>7} {:>7}",
            fmt_time(r.time),
            r.mismatch,
            fmt_opt(r.ssi),
            fmt_opt(r.jsc),
            fmt_opt(r.ks)
        )
        .unwrap();
    }
}

fn create_out(out: &Path) -> Result<()> {
    std::fs::create_dir_all(out).map_err(|source| Error::Io {
        path: out.to_path_buf(),
        source,
    })
}

fn run_simulate(args: SimulateArgs) -> Result<String> {
    let setup = load_setup(&args.common)?;
    let p = params_or_truth(args.params, &setup)?;
    let series = simulate(&setup.scenario, &p, &setup.solver)?;
    if let Some(out) = &args.common.out {
        artifacts::write_series(out, &series)?;
    }
    let cell_area = setup.scenario.grid.dx * setup.scenario.grid.dy;
    let mut text = String::new();
    writeln!(text, "scenario {}: {}", setup.scenario.name, fmt_params(&p)).unwrap();
    writeln!(text, "{:>12} {:>9} {:>12}", "time", "burnt", "area").unwrap();
    for s in series.snapshots() {
        let burnt = s.phi.burnt_count();
        writeln!(
            text,
            "{:>12} {:>9} {:>12.6}",
            fmt_time(s.time),
            burnt,
            burnt as f64 * cell_area
        )
        .unwrap();
    }
    Ok(text)
}

fn run_estimate(args: EstimateArgs) -> Result<String> {
    let setup = load_setup(&args.common)?;
    let measured = measurements(args.measured.as_deref(), &setup)?;
    let mut cfg = setup.search_config()?;
    if let Some(v) = args.seed {
        cfg.seed = v;
    }
    if let Some(v) = args.max_iter {
        cfg.max_iter = v;
    }
    if let Some(v) = args.max_evals {
        cfg.max_evals = Some(v);
    }
    if let Some(v) = args.budget_seconds {
        if !(v.is_finite() && v >= 0.0) {
            return Err(Error::InvalidParameter {
                name: "budget_seconds",
                reason: format!("must be a non-negative number, got {v}"),
            });
        }
        cfg.budget = Some(Duration::from_secs_f64(v));
    }
    cfg.parallel_poll |= args.parallel_poll;
    cfg.validate()?;

    let mut report = estimate(&setup.scenario, &measured, &cfg, &setup.solver)?;
    if let Some(truth) = &setup.truth {
        report = report.with_truth(truth)?;
    }
    if let Some(out) = &args.common.out {
        create_out(out)?;
        artifacts::write_trace(&out.join(TRACE_FILE), &report.trace)?;
        artifacts::write_json(&out.join(REPORT_FILE), &report)?;
    }
    let mut text = String::new();
    writeln!(text, "p_hat {}", fmt_params(&report.p_hat)).unwrap();
    writeln!(text, "J = {}  r = {:.6}", report.j_final, report.r).unwrap();
    if let Some(e) = report.e {
        writeln!(text, "e = {e:.6}").unwrap();
    }
    writeln!(
        text,
        "stop: {:?} after {} evaluations, {:.1} s",
        report.stop_reason, report.evaluations, report.wall_seconds
    )
    .unwrap();
    write_table(&mut text, &report.snapshots);
    Ok(text)
}

fn run_evaluate(args: EvaluateArgs) -> Result<String> {
    let setup = load_setup(&args.common)?;
    let p = params_or_truth(args.params, &setup)?;
    let measured = measurements(args.measured.as_deref(), &setup)?;
    let sim = simulate(&setup.scenario, &p, &setup.solver)?;
    let truth = setup.truth.as_ref().map(|t| (&p, t));
    let report = metric_report(&sim, &measured, truth)?;
    if let Some(out) = &args.common.out {
        create_out(out)?;
        artifacts::write_json(&out.join(REPORT_FILE), &report)?;
    }
    let mut text = String::new();
    writeln!(text, "params {}", fmt_params(&p)).unwrap();
    writeln!(text, "J = {}  r = {:.6}", report.j, report.r).unwrap();
    if let Some(e) = report.e {
        writeln!(text, "e = {e:.6}").unwrap();
    }
    write_table(&mut text, &report.snapshots);
    Ok(text)
}

fn init_threads() -> std::result::Result<(), String> {
    let Ok(raw) = std::env::var(THREADS_VAR) else {
        return Ok(());
    };
    let n: usize = raw
        .trim()
        .parse()
        .ok()
        .filter(|&n| n > 0)
        .ok_or_else(|| format!("{THREADS_VAR} must be a positive integer, got `{raw}`"))?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| e.to_string())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    if let Err(msg) = init_threads() {
        eprintln!("error: {msg}");
        return ExitCode::from(2);
    }
    let result = match cli.command {
        Command::Simulate(a) => run_simulate(a),
        Command::Estimate(a) => run_estimate(a),
        Command::Evaluate(a) => run_evaluate(a),
    };
    match result {
        Ok(text) => {
            let _ = std::io::stdout().lock().write_all(text.as_bytes());
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(if e.is_numerical() { 4 } else { 3 })
        }
    }
}
