//! Command-line driver: single runs, (α², t) sweeps, oracle cutoff checks,
//! and event detection on existing output files.

mod config;

use std::collections::HashMap;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use qcavity_core::error::Error as CoreError;
use qcavity_core::events::{
    detect_events, EventReport, EVENT_THRESHOLD_DEFAULT, HOLD_WINDOW_DEFAULT,
};
use qcavity_core::integrator::TimeGrid;
use qcavity_core::model::{InitialState, StateFamily};
use qcavity_core::oracle::{oracle_converged, OracleConfig};
use qcavity_core::sweep::{
    self, AlphaSqSpec, Engine, RunConfig, ALPHA_GRID_DEFAULT, CUTOFF_TOL_DEFAULT,
    DT_LAMBDA_DEFAULT, GAMMA_OVER_LAMBDA_DEFAULT, N_MAX_DEFAULT, SAMPLE_EVERY_DEFAULT,
};

/// Environment variable selecting the sweep worker-pool width
/// (default: all available cores).
const WORKERS_ENV: &str = "QCAVITY_WORKERS";

const EXIT_CONFIG: u8 = 2;
const EXIT_NUMERICAL: u8 = 3;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum EngineArg {
    Reduced,
    Oracle,
}

impl From<EngineArg> for Engine {
    fn from(e: EngineArg) -> Self {
        match e {
            EngineArg::Reduced => Engine::Reduced,
            EngineArg::Oracle => Engine::Oracle,
        }
    }
}

impl std::str::FromStr for EngineArg {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "reduced" => Ok(Self::Reduced),
            "oracle" => Ok(Self::Oracle),
            other => Err(format!("expected 'reduced' or 'oracle', got '{other}'")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum FamilyArg {
    Phi,
    Psi,
}

impl From<FamilyArg> for StateFamily {
    fn from(f: FamilyArg) -> Self {
        match f {
            FamilyArg::Phi => StateFamily::Phi,
            FamilyArg::Psi => StateFamily::Psi,
        }
    }
}

impl std::str::FromStr for FamilyArg {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "phi" => Ok(Self::Phi),
            "psi" => Ok(Self::Psi),
            other => Err(format!("expected 'phi' or 'psi', got '{other}'")),
        }
    }
}

/// Flags shared by `run`, `sweep`, and `oracle-check`; every flag falls back
/// to the config file, then to the built-in default.
#[derive(Debug, Args)]
struct PhysicsArgs {
    /// Dynamics engine: the reduced master equation or the joint-space
    /// truncated-Fock reference.
    #[arg(long, value_enum)]
    engine: Option<EngineArg>,
    /// Initial-state family.
    #[arg(long, value_enum)]
    family: Option<FamilyArg>,
    /// Cavity frequency ω in units of the coupling λ.
    #[arg(long)]
    omega_over_lambda: Option<f64>,
    /// Atomic frequency ω₀ in units of λ; omit for the resonant case ω₀ = ω.
    #[arg(long)]
    omega0_over_lambda: Option<f64>,
    /// Atomic decay constant γ in units of λ.
    #[arg(long)]
    gamma_over_lambda: Option<f64>,
    /// Phase of the β amplitude, radians.
    #[arg(long)]
    beta_phase: Option<f64>,
    /// Evolution horizon in λt.
    #[arg(long)]
    t_max_lambda: Option<f64>,
    /// Integrator step in λt.
    #[arg(long)]
    dt_lambda: Option<f64>,
    /// Snapshot stride in integrator steps.
    #[arg(long)]
    sample_every: Option<usize>,
    /// Photon-number cutoff (oracle engine only).
    #[arg(long)]
    n_max: Option<usize>,
    /// Divide each snapshot by its trace before computing concurrence
    /// (diagnostics still report the raw drift).
    #[arg(long, num_args = 0..=1, default_missing_value = "true")]
    renormalize_trace: Option<bool>,
    /// Output-only multiplier on the CSV time column.
    #[arg(long)]
    time_axis_scale: Option<f64>,
    /// Output file stem; `<stem>.csv` and `<stem>.json` are written.
    #[arg(long)]
    output_path: Option<String>,
}

#[derive(Debug, Args)]
struct EventArgs {
    /// Concurrence threshold separating dead from alive.
    #[arg(long)]
    threshold: Option<f64>,
    /// Time a curve must stay below threshold for a death to count, in λt.
    #[arg(long)]
    hold_window: Option<f64>,
}

#[derive(Debug, Parser)]
#[command(
    name = "qcavity",
    version,
    about = "Entanglement dynamics of two decaying qubits in a single-mode cavity, beyond the rotating-wave approximation"
)]
struct Cli {
    /// Key-value config file (`key = value`, same keys as the flags);
    /// command-line flags override file values.
    #[arg(long, global = true, value_name = "PATH")]
    config: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Evolve a single initial state and write the concurrence curve.
    Run {
        #[command(flatten)]
        physics: PhysicsArgs,
        #[command(flatten)]
        events: EventArgs,
        /// Initial-state parameter α² in [0, 1].
        #[arg(long)]
        alpha_sq: Option<f64>,
    },
    /// Sweep a grid of α² values and write the concurrence surface.
    Sweep {
        #[command(flatten)]
        physics: PhysicsArgs,
        #[command(flatten)]
        events: EventArgs,
        /// Number of α² grid points over [0, 1].
        #[arg(long)]
        alpha_sq_count: Option<usize>,
    },
    /// Rerun the oracle at n_max and n_max+2 and report the concurrence
    /// shift (photon-cutoff self-convergence).
    OracleCheck {
        #[command(flatten)]
        physics: PhysicsArgs,
        /// Initial-state parameter α² in [0, 1].
        #[arg(long)]
        alpha_sq: Option<f64>,
        /// Convergence tolerance on the concurrence shift.
        #[arg(long)]
        tolerance: Option<f64>,
    },
    /// Detect death/birth/revival events on a previously written CSV.
    Events {
        /// CSV file produced by `run` or `sweep`.
        #[arg(long)]
        input: PathBuf,
        #[command(flatten)]
        events: EventArgs,
        /// Write the JSON report here instead of stdout.
        #[arg(long)]
        output_path: Option<String>,
    },
}

fn main() -> ExitCode {
    env_logger::init();
    let cli = Cli::parse();

    if let Err(message) = init_worker_pool() {
        eprintln!("error: {message}");
        return ExitCode::from(EXIT_CONFIG);
    }

    let file_map = match &cli.config {
        Some(path) => match config::parse_config_file(path) {
            Ok(map) => map,
            Err(message) => {
                eprintln!("error: {message}");
                return ExitCode::from(EXIT_CONFIG);
            }
        },
        None => HashMap::new(),
    };

    let outcome = match cli.command {
        Command::Run {
            physics,
            events,
            alpha_sq,
        } => run_or_sweep(&file_map, physics, events, SweepKind::Single(alpha_sq)),
        Command::Sweep {
            physics,
            events,
            alpha_sq_count,
        } => run_or_sweep(&file_map, physics, events, SweepKind::Grid(alpha_sq_count)),
        Command::OracleCheck {
            physics,
            alpha_sq,
            tolerance,
        } => oracle_check(&file_map, physics, alpha_sq, tolerance),
        Command::Events {
            input,
            events,
            output_path,
        } => events_command(&file_map, &input, events, output_path),
    };

    match outcome {
        Ok(()) => ExitCode::SUCCESS,
        Err(CliError::Config(message)) => {
            eprintln!("error: {message}");
            ExitCode::from(EXIT_CONFIG)
        }
        Err(CliError::Core(err)) => {
            eprintln!("error: {err}");
            ExitCode::from(exit_code_for(&err))
        }
    }
}

enum CliError {
    Config(String),
    Core(CoreError),
}

impl From<CoreError> for CliError {
    fn from(err: CoreError) -> Self {
        CliError::Core(err)
    }
}

fn exit_code_for(err: &CoreError) -> u8 {
    match err {
        CoreError::NonFinite { .. } | CoreError::NegativeEigenvalue { .. } => EXIT_NUMERICAL,
        CoreError::RunAborted { source, .. } => exit_code_for(source),
        CoreError::Io(_) | CoreError::Serialization(_) => 1,
        _ => EXIT_CONFIG,
    }
}

fn init_worker_pool() -> Result<(), String> {
    let Ok(raw) = std::env::var(WORKERS_ENV) else {
        return Ok(());
    };
    let workers: usize = raw
        .parse()
        .map_err(|_| format!("{WORKERS_ENV} must be a positive integer, got '{raw}'"))?;
    if workers == 0 {
        return Err(format!("{WORKERS_ENV} must be at least 1"));
    }
    rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build_global()
        .map_err(|e| format!("cannot size worker pool: {e}"))
}

enum SweepKind {
    /// `run`: single α² (flag value, if given).
    Single(Option<f64>),
    /// `sweep`: grid point count (flag value, if given).
    Grid(Option<usize>),
}

/// Layered value resolution: CLI flag, then config file, then default.
fn resolve<T: std::str::FromStr + Copy>(
    flag: Option<T>,
    file: &HashMap<String, String>,
    key: &str,
    default: T,
) -> Result<T, CliError>
where
    T::Err: std::fmt::Display,
{
    if let Some(v) = flag {
        return Ok(v);
    }
    config::get_parsed::<T>(file, key)
        .map_err(CliError::Config)
        .map(|v| v.unwrap_or(default))
}

fn resolve_optional<T: std::str::FromStr + Copy>(
    flag: Option<T>,
    file: &HashMap<String, String>,
    key: &str,
) -> Result<Option<T>, CliError>
where
    T::Err: std::fmt::Display,
{
    if flag.is_some() {
        return Ok(flag);
    }
    config::get_parsed::<T>(file, key).map_err(CliError::Config)
}

fn build_config(
    file: &HashMap<String, String>,
    physics: &PhysicsArgs,
    alpha_sq: AlphaSqSpec,
    default_output: &str,
) -> Result<RunConfig, CliError> {
    let engine: EngineArg = resolve(physics.engine, file, "engine", EngineArg::Reduced)?;
    let family: FamilyArg = resolve(physics.family, file, "family", FamilyArg::Phi)?;
    let omega_over_lambda = resolve_optional(physics.omega_over_lambda, file, "omega-over-lambda")?
        .ok_or_else(|| {
            CliError::Config("omega-over-lambda is required (flag or config file)".into())
        })?;
    let t_max_lambda = resolve_optional(physics.t_max_lambda, file, "t-max-lambda")?
        .ok_or_else(|| {
            CliError::Config("t-max-lambda is required (flag or config file)".into())
        })?;

    let output_path = match &physics.output_path {
        Some(p) => p.clone(),
        None => file
            .get("output-path")
            .cloned()
            .unwrap_or_else(|| default_output.to_string()),
    };

    let config = RunConfig {
        engine: engine.into(),
        family: family.into(),
        omega_over_lambda,
        omega0_over_lambda: resolve_optional(
            physics.omega0_over_lambda,
            file,
            "omega0-over-lambda",
        )?,
        gamma_over_lambda: resolve(
            physics.gamma_over_lambda,
            file,
            "gamma-over-lambda",
            GAMMA_OVER_LAMBDA_DEFAULT,
        )?,
        alpha_sq,
        beta_phase: resolve(physics.beta_phase, file, "beta-phase", 0.0)?,
        t_max_lambda,
        dt_lambda: resolve(physics.dt_lambda, file, "dt-lambda", DT_LAMBDA_DEFAULT)?,
        sample_every: resolve(
            physics.sample_every,
            file,
            "sample-every",
            SAMPLE_EVERY_DEFAULT,
        )?,
        n_max: resolve(physics.n_max, file, "n-max", N_MAX_DEFAULT)?,
        renormalize_trace: resolve(
            physics.renormalize_trace,
            file,
            "renormalize-trace",
            false,
        )?,
        time_axis_scale: resolve(physics.time_axis_scale, file, "time-axis-scale", 1.0)?,
        output_path: Some(output_path),
    };
    config.validate()?;
    Ok(config)
}

fn print_run_header(config: &RunConfig) {
    let omega0 = config
        .omega0_over_lambda
        .unwrap_or(config.omega_over_lambda);
    eprintln!(
        "qcavity {}: engine={:?} family={:?} omega/lambda={} omega0/lambda={} gamma/lambda={} t_max={} dt={} n_max={} renormalize_trace={}",
        env!("CARGO_PKG_VERSION"),
        config.engine,
        config.family,
        config.omega_over_lambda,
        omega0,
        config.gamma_over_lambda,
        config.t_max_lambda,
        config.dt_lambda,
        config.n_max,
        config.renormalize_trace,
    );
}

fn run_or_sweep(
    file: &HashMap<String, String>,
    physics: PhysicsArgs,
    events: EventArgs,
    kind: SweepKind,
) -> Result<(), CliError> {
    let (alpha_spec, default_output) = match kind {
        SweepKind::Single(alpha_flag) => {
            let alpha = resolve(alpha_flag, file, "alpha-sq", 0.5)?;
            (AlphaSqSpec::Single(alpha), "qcavity-run")
        }
        SweepKind::Grid(count_flag) => {
            let count = resolve(count_flag, file, "alpha-sq-count", ALPHA_GRID_DEFAULT)?;
            (AlphaSqSpec::Grid { count }, "qcavity-sweep")
        }
    };
    let config = build_config(file, &physics, alpha_spec, default_output)?;
    let threshold = resolve(events.threshold, file, "threshold", EVENT_THRESHOLD_DEFAULT)?;
    let hold_window = resolve(events.hold_window, file, "hold-window", HOLD_WINDOW_DEFAULT)?;

    print_run_header(&config);
    let surface = sweep::run(&config)?;
    let reports = sweep::detect_surface_events(&surface, threshold, hold_window);

    let stem = PathBuf::from(config.output_path.as_deref().unwrap_or(default_output));
    let (csv_path, json_path) = sweep::emit(&surface, &reports, &config, &stem)?;

    println!("wrote {} and {}", csv_path.display(), json_path.display());
    println!(
        "diagnostics: max |Tr-1| = {:.3e}, max hermiticity defect = {:.3e}, min eigenvalue = {:.3e}, max raw concurrence = {:.6}",
        surface.diagnostics.max_trace_drift,
        surface.diagnostics.max_hermiticity_defect,
        surface.diagnostics.min_eigenvalue,
        surface.diagnostics.max_raw_concurrence,
    );
    if let Some(check) = &surface.cutoff_check {
        println!(
            "cutoff check: n_max {} vs {} shift = {:.3e} (tolerance {:.1e}) converged = {}",
            check.n_max,
            check.refined_n_max,
            check.max_concurrence_shift,
            check.tolerance,
            check.converged,
        );
    }
    summarize_events(&surface.alpha_sq_values, &reports);
    Ok(())
}

fn summarize_events(alpha_values: &[f64], reports: &[EventReport]) {
    if reports.len() <= 8 {
        for (alpha, report) in alpha_values.iter().zip(reports) {
            println!(
                "alpha_sq={alpha:.4}: death={:?} birth={:?} revivals={} terminal={:.3e}",
                report.death_time,
                report.birth_time,
                report.revivals.len(),
                report.terminal_value,
            );
        }
    } else {
        let deaths = reports.iter().filter(|r| r.death_time.is_some()).count();
        let births = reports.iter().filter(|r| r.birth_time.is_some()).count();
        let revived = reports.iter().filter(|r| !r.revivals.is_empty()).count();
        println!(
            "events over {} grid points: {deaths} deaths, {births} births, {revived} curves with revivals",
            reports.len()
        );
    }
}

fn oracle_check(
    file: &HashMap<String, String>,
    physics: PhysicsArgs,
    alpha_sq: Option<f64>,
    tolerance: Option<f64>,
) -> Result<(), CliError> {
    let alpha = resolve(alpha_sq, file, "alpha-sq", 0.5)?;
    let mut config = build_config(
        file,
        &physics,
        AlphaSqSpec::Single(alpha),
        "qcavity-oracle-check",
    )?;
    config.engine = Engine::Oracle;
    let tolerance = resolve(tolerance, file, "tolerance", CUTOFF_TOL_DEFAULT)?;
    if !tolerance.is_finite() || tolerance <= 0.0 {
        return Err(CliError::Config(format!(
            "tolerance must be positive, got {tolerance}"
        )));
    }

    print_run_header(&config);
    let params = config.params()?;
    let state = InitialState::from_alpha_sq(config.family, alpha, config.beta_phase)?;
    let grid = TimeGrid::to(config.t_max_lambda, config.dt_lambda)?;
    let oracle_cfg =
        OracleConfig::new(params, config.n_max, grid)?.with_sample_every(config.sample_every);
    let check = oracle_converged(&state, &oracle_cfg, tolerance)?;

    println!(
        "cutoff check: n_max {} vs {} shift = {:.6e} (tolerance {:.1e}) converged = {}",
        check.n_max,
        check.refined_n_max,
        check.max_concurrence_shift,
        check.tolerance,
        check.converged,
    );
    if let Some(stem) = &physics.output_path {
        let path = Path::new(stem).with_extension("json");
        let doc = serde_json::json!({
            "version": env!("CARGO_PKG_VERSION"),
            "config": config,
            "cutoff_check": check,
        });
        std::fs::write(&path, format!("{:#}\n", doc)).map_err(CoreError::from)?;
        println!("wrote {}", path.display());
    }
    Ok(())
}

/// Curves grouped from a run/sweep CSV, keyed by the alpha_sq column.
fn parse_run_csv(path: &Path) -> Result<Vec<(f64, Vec<f64>, Vec<f64>)>, CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
    let mut lines = text.lines();
    let header = lines
        .next()
        .ok_or_else(|| CliError::Config(format!("{} is empty", path.display())))?;
    let columns: Vec<&str> = header.split(',').collect();
    let col = |name: &str| -> Result<usize, CliError> {
        columns
            .iter()
            .position(|c| *c == name)
            .ok_or_else(|| CliError::Config(format!("missing CSV column '{name}'")))
    };
    let alpha_col = col("alpha_sq")?;
    let time_col = col("lambda_t")?;
    let conc_col = col("concurrence")?;

    let mut curves: Vec<(f64, Vec<f64>, Vec<f64>)> = Vec::new();
    for (lineno, line) in lines.enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        let parse = |idx: usize| -> Result<f64, CliError> {
            fields
                .get(idx)
                .and_then(|f| f.parse::<f64>().ok())
                .ok_or_else(|| {
                    CliError::Config(format!("line {}: malformed CSV row", lineno + 2))
                })
        };
        let alpha = parse(alpha_col)?;
        let time = parse(time_col)?;
        let concurrence = parse(conc_col)?;
        match curves.last_mut() {
            Some((a, times, values)) if *a == alpha => {
                times.push(time);
                values.push(concurrence);
            }
            _ => curves.push((alpha, vec![time], vec![concurrence])),
        }
    }
    if curves.is_empty() {
        return Err(CliError::Config(format!(
            "{} contains no data rows",
            path.display()
        )));
    }
    Ok(curves)
}

fn events_command(
    file: &HashMap<String, String>,
    input: &Path,
    events: EventArgs,
    output_path: Option<String>,
) -> Result<(), CliError> {
    let threshold = resolve(events.threshold, file, "threshold", EVENT_THRESHOLD_DEFAULT)?;
    let hold_window = resolve(events.hold_window, file, "hold-window", HOLD_WINDOW_DEFAULT)?;

    let curves = parse_run_csv(input)?;
    let reports: Vec<serde_json::Value> = curves
        .iter()
        .map(|(alpha, times, values)| {
            let report = detect_events(times, values, threshold, hold_window);
            serde_json::json!({ "alpha_sq": alpha, "events": report })
        })
        .collect();
    let doc = serde_json::json!({
        "input": input.display().to_string(),
        "threshold": threshold,
        "hold_window": hold_window,
        "reports": reports,
    });
    let rendered = format!("{:#}\n", doc);
    match output_path {
        Some(stem) => {
            let path = Path::new(&stem).with_extension("json");
            std::fs::write(&path, rendered).map_err(CoreError::from)?;
            println!("wrote {}", path.display());
        }
        None => print!("{rendered}"),
    }
    Ok(())
}
