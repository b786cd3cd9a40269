//! Command-line front end for the aoa3d library.
//!
//! Exit statuses: 0 success, 2 configuration error, 3 degenerate geometry,
//! 4 numerical failure, 5 I/O error.

use std::fs;
use std::io::Write as _;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde_json::json;

use aoa3d::bounds::crlb;
use aoa3d::config::load_sweep_config;
use aoa3d::estimators::{
    run_estimator, CisOptions, EstimatorKind, EstimatorSettings, Initializer, MleOptions,
    NoiseSpec, Problem, VarianceFormula,
};
use aoa3d::io::{parse_measurements, parse_scenario, write_measurements, write_scenario, AngleUnit};
use aoa3d::montecarlo::{
    convergence_study, from_db, generate_scenario, run_sweep, sample_measurements, stream_rng,
    to_db, InitKind, Stream, SweepConfig,
};
use aoa3d::report::{convergence_csv, convergence_json, fmt_sig, sweep_csv, sweep_json};
use aoa3d::{Error, Execution, PlaneSet, Point3};

#[derive(Parser, Debug)]
#[command(name = "aoa3d", version, about = "3-D angle-of-arrival source localization")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Draw a random scenario and noisy measurements.
    Simulate(SimulateArgs),
    /// Localize the source from a scenario file and a measurement file.
    Estimate(EstimateArgs),
    /// Print the Cramér-Rao bound of a scenario.
    Crlb(CrlbArgs),
    /// Monte Carlo MSE sweep over M and noise variance.
    Bench(SweepArgs),
    /// MSE of CIS against the iteration count.
    Convergence(ConvergenceArgs),
}

#[derive(Args, Debug)]
struct SimulateArgs {
    /// Number of UAVs.
    #[arg(long, default_value_t = 20)]
    m: usize,
    /// Half-width of the cube around the source, meters.
    #[arg(long, default_value_t = 25.0)]
    half_width: f64,
    /// Angle noise variance in dB (rad^2). Omit for noiseless measurements.
    #[arg(long, allow_hyphen_values = true)]
    sigma2_db: Option<f64>,
    /// Elevation variance in dB when it differs from the azimuth variance.
    #[arg(long, allow_hyphen_values = true)]
    sigma2_phi_db: Option<f64>,
    /// Source position "x,y,z" in meters.
    #[arg(long, default_value = "0,0,0", allow_hyphen_values = true)]
    source: String,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Scenario file to write.
    #[arg(long, default_value = "scenario.txt")]
    scenario: PathBuf,
    /// Measurement file to write.
    #[arg(long, default_value = "measurements.txt")]
    measurements: PathBuf,
    /// Write angles in radians instead of degrees.
    #[arg(long)]
    radians: bool,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum EstimatorArg {
    Cis,
    MsdLs,
    MsdTls,
    Ls,
    Mle,
}

impl From<EstimatorArg> for EstimatorKind {
    fn from(a: EstimatorArg) -> Self {
        match a {
            EstimatorArg::Cis => EstimatorKind::Cis,
            EstimatorArg::MsdLs => EstimatorKind::MsdLs,
            EstimatorArg::MsdTls => EstimatorKind::MsdTls,
            EstimatorArg::Ls => EstimatorKind::ConventionalLs,
            EstimatorArg::Mle => EstimatorKind::Mle,
        }
    }
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum InitArg {
    WarmLs,
    Random,
}

impl From<InitArg> for InitKind {
    fn from(a: InitArg) -> Self {
        match a {
            InitArg::WarmLs => InitKind::WarmLs,
            InitArg::Random => InitKind::Random,
        }
    }
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum FormulaArg {
    SquaredSum,
    MeanAbsolute,
}

#[derive(Clone, Copy, Debug, Default, ValueEnum)]
enum ReportFormat {
    #[default]
    Text,
    Json,
}

#[derive(Clone, Copy, Debug, Default, ValueEnum)]
enum TableFormat {
    #[default]
    Csv,
    Json,
}

#[derive(Args, Debug)]
struct EstimateArgs {
    #[arg(long)]
    scenario: PathBuf,
    #[arg(long)]
    measurements: PathBuf,
    #[arg(long, value_enum, default_value_t = EstimatorArg::Cis)]
    estimator: EstimatorArg,
    /// Measurement angles are in radians instead of degrees.
    #[arg(long)]
    radians: bool,
    /// Angle noise variance in dB used to weight the MLE.
    #[arg(long, allow_hyphen_values = true)]
    sigma2_db: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    sigma2_phi_db: Option<f64>,
    /// CIS starting point.
    #[arg(long, value_enum, default_value_t = InitArg::WarmLs)]
    init: InitArg,
    /// Cube half-width for the random CIS start, meters.
    #[arg(long, default_value_t = 25.0)]
    half_width: f64,
    #[arg(long)]
    max_iterations: Option<usize>,
    #[arg(long)]
    tolerance: Option<f64>,
    #[arg(long, value_enum, default_value_t = FormulaArg::SquaredSum)]
    variance_formula: FormulaArg,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, value_enum, default_value_t = ReportFormat::Text)]
    format: ReportFormat,
}

#[derive(Args, Debug)]
struct CrlbArgs {
    #[arg(long)]
    scenario: PathBuf,
    /// Angle noise variance in dB (rad^2).
    #[arg(long, allow_hyphen_values = true)]
    sigma2_db: f64,
    #[arg(long, allow_hyphen_values = true)]
    sigma2_phi_db: Option<f64>,
    #[arg(long, value_enum, default_value_t = ReportFormat::Text)]
    format: ReportFormat,
}

#[derive(Args, Debug)]
struct SweepArgs {
    /// Sweep configuration file (key = value lines).
    #[arg(long)]
    config: PathBuf,
    /// Output file; the table goes to standard output when omitted.
    #[arg(long)]
    output: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = TableFormat::Csv)]
    format: TableFormat,
    /// Overrides the seed in the configuration file.
    #[arg(long)]
    seed: Option<u64>,
    /// Worker threads for the trial loop.
    #[arg(long)]
    threads: Option<usize>,
    /// Run trials on the calling thread only.
    #[arg(long)]
    sequential: bool,
}

#[derive(Args, Debug)]
struct ConvergenceArgs {
    #[command(flatten)]
    sweep: SweepArgs,
    /// CIS starting point; defaults to the configuration's cis_init.
    #[arg(long, value_enum)]
    init: Option<InitArg>,
    /// Largest iteration count; defaults to the configuration's k_max.
    #[arg(long)]
    k_max: Option<usize>,
}

fn exit_status(e: &Error) -> u8 {
    match e {
        Error::InvalidConfig { .. }
        | Error::Parse { .. }
        | Error::InsufficientSensors(_)
        | Error::LengthMismatch { .. }
        | Error::InvalidElevation(_)
        | Error::EmptyInput(_)
        | Error::ZeroNoise(_) => 2,
        Error::DegenerateGeometry { .. }
        | Error::IdenticalPoints { .. }
        | Error::RankDeficient { .. }
        | Error::SingularFisher { .. }
        | Error::TangentSingularity { .. } => 3,
        Error::NonFinite(_) | Error::DegenerateTls(_) => 4,
        Error::Io(_) => 5,
    }
}

fn read(path: &Path) -> Result<String, Error> {
    fs::read_to_string(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))
}

fn write(path: &Path, contents: &str) -> Result<(), Error> {
    fs::write(path, contents).map_err(|e| Error::Io(format!("{}: {e}", path.display())))
}

fn parse_point(s: &str) -> Result<Point3, Error> {
    let v: Vec<f64> = s
        .split(',')
        .map(|t| t.trim().parse::<f64>())
        .collect::<Result<_, _>>()
        .map_err(|_| Error::InvalidConfig {
            field: "source".into(),
            message: format!("'{s}' is not x,y,z"),
        })?;
    match v.as_slice() {
        [x, y, z] => Ok(Point3::new(*x, *y, *z)),
        _ => Err(Error::InvalidConfig {
            field: "source".into(),
            message: format!("'{s}' is not x,y,z"),
        }),
    }
}

fn noise_from_db(sigma2_db: Option<f64>, sigma2_phi_db: Option<f64>) -> Result<NoiseSpec, Error> {
    let theta = sigma2_db.map(from_db).unwrap_or(0.0);
    let phi = sigma2_phi_db.map(from_db).unwrap_or(theta);
    NoiseSpec::new(theta, phi)
}

fn unit(radians: bool) -> AngleUnit {
    if radians {
        AngleUnit::Radians
    } else {
        AngleUnit::Degrees
    }
}

fn cmd_simulate(args: &SimulateArgs) -> Result<(), Error> {
    if args.m < 2 {
        return Err(Error::InvalidConfig {
            field: "m".into(),
            message: format!("M = {} but M >= 2 UAVs are required", args.m),
        });
    }
    let source = parse_point(&args.source)?;
    let noise = noise_from_db(args.sigma2_db, args.sigma2_phi_db)?;
    let scenario = generate_scenario(
        source,
        args.half_width,
        args.m,
        &mut stream_rng(args.seed, Stream::Scenario),
    )?;
    let meas = sample_measurements(
        &scenario,
        &noise,
        &mut stream_rng(args.seed, Stream::Measurements),
    )?;
    write(&args.scenario, &write_scenario(&scenario))?;
    write(&args.measurements, &write_measurements(&meas, unit(args.radians)))?;
    println!(
        "wrote {} UAVs to {} and measurements to {}",
        scenario.sensor_count(),
        args.scenario.display(),
        args.measurements.display()
    );
    Ok(())
}

fn cmd_estimate(args: &EstimateArgs) -> Result<(), Error> {
    let scenario = parse_scenario(&read(&args.scenario)?)?;
    let meas = parse_measurements(&read(&args.measurements)?, unit(args.radians))?;
    let planes = PlaneSet::build(&meas, &scenario.uavs)?;
    let weighting = match args.sigma2_db {
        Some(_) => noise_from_db(args.sigma2_db, args.sigma2_phi_db)?,
        None => NoiseSpec::equal(1.0)?,
    };
    let defaults = CisOptions::default();
    let initializer = match args.init {
        InitArg::WarmLs => Initializer::WarmStartLs,
        InitArg::Random => Initializer::RandomInCube {
            center: scenario.source,
            half_width: args.half_width,
        },
    };
    let settings = EstimatorSettings {
        cis: CisOptions {
            max_iterations: args.max_iterations.unwrap_or(defaults.max_iterations),
            position_tolerance: args.tolerance.unwrap_or(defaults.position_tolerance),
            initializer,
            variance_formula: match args.variance_formula {
                FormulaArg::SquaredSum => VarianceFormula::SquaredSum,
                FormulaArg::MeanAbsolute => VarianceFormula::MeanAbsolute,
            },
        },
        mle: MleOptions {
            max_iterations: args.max_iterations.unwrap_or(MleOptions::default().max_iterations),
            tolerance: args.tolerance.unwrap_or(MleOptions::default().tolerance),
        },
    };
    let problem = Problem {
        measurements: &meas,
        uavs: &scenario.uavs,
        planes: &planes,
        noise: weighting,
    };
    let kind = EstimatorKind::from(args.estimator);
    let mut rng = ChaCha8Rng::seed_from_u64(args.seed);
    let rep = run_estimator(kind, &problem, &settings, &mut rng)?;
    let error = rep.position.distance(&scenario.source);

    match args.format {
        ReportFormat::Text => {
            let p = rep.position;
            println!("estimator {kind}");
            println!("position {} {} {}", p.x, p.y, p.z);
            if let Some(r) = rep.radius {
                println!("radius {r}");
            }
            if let Some(s) = rep.sigma2_hat {
                println!("sigma2_hat {s}");
                println!("sigma2_hat_db {}", to_db(s));
            }
            println!("iterations {}", rep.iterations_used);
            println!("converged {}", rep.converged);
            println!("error_m {error}");
        }
        ReportFormat::Json => {
            let doc = json!({
                "estimator": kind.id(),
                "report": rep,
                "error_m": error,
            });
            println!("{}", serde_json::to_string_pretty(&doc).expect("serializable"));
        }
    }
    Ok(())
}

fn cmd_crlb(args: &CrlbArgs) -> Result<(), Error> {
    let scenario = parse_scenario(&read(&args.scenario)?)?;
    let noise = noise_from_db(Some(args.sigma2_db), args.sigma2_phi_db)?;
    let bound = crlb(&scenario.source, &scenario.uavs, &noise)?;
    match args.format {
        ReportFormat::Text => {
            println!("crlb_m2");
            for r in 0..3 {
                let row: Vec<String> = (0..3).map(|c| fmt_sig(bound.bound[(r, c)])).collect();
                println!("{}", row.join(" "));
            }
            println!("trace_m2 {}", fmt_sig(bound.trace));
            println!("trace_db {}", fmt_sig(bound.trace_db()));
        }
        ReportFormat::Json => {
            let rows: Vec<Vec<f64>> = (0..3)
                .map(|r| (0..3).map(|c| bound.bound[(r, c)]).collect())
                .collect();
            let doc = json!({ "bound_m2": rows, "trace_m2": bound.trace, "trace_db": bound.trace_db() });
            println!("{}", serde_json::to_string_pretty(&doc).expect("serializable"));
        }
    }
    Ok(())
}

fn load_config(args: &SweepArgs) -> Result<SweepConfig, Error> {
    let mut cfg = load_sweep_config(&args.config)?;
    if let Some(seed) = args.seed {
        cfg.seed = seed;
    }
    if args.sequential {
        cfg.execution = Execution::Sequential;
    }
    if args.threads == Some(0) {
        return Err(Error::InvalidConfig {
            field: "threads".into(),
            message: "must be >= 1".into(),
        });
    }
    Ok(cfg)
}

/// Runs `f` on a pool with the requested number of threads.
fn with_threads<T: Send>(threads: Option<usize>, f: impl FnOnce() -> T + Send) -> Result<T, Error> {
    #[cfg(feature = "parallel")]
    if let Some(n) = threads {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build()
            .map_err(|e| Error::InvalidConfig {
                field: "threads".into(),
                message: e.to_string(),
            })?;
        return Ok(pool.install(f));
    }
    #[cfg(not(feature = "parallel"))]
    let _ = threads;
    Ok(f())
}

fn emit(args: &SweepArgs, table: &str, summary: &[String]) -> Result<(), Error> {
    match &args.output {
        Some(path) => {
            write(path, table)?;
            let mut out = std::io::stdout().lock();
            for line in summary {
                let _ = writeln!(out, "{line}");
            }
        }
        None => {
            let mut err = std::io::stderr().lock();
            for line in summary {
                let _ = writeln!(err, "{line}");
            }
            print!("{table}");
        }
    }
    Ok(())
}

fn cmd_bench(args: &SweepArgs) -> Result<(), Error> {
    let cfg = load_config(args)?;
    let result = with_threads(args.threads, || run_sweep(&cfg))??;
    let summary: Vec<String> = result
        .rows
        .iter()
        .map(|r| {
            format!(
                "{:<8} M={:<4} sigma2={:>7.2} dB  mse={:>8.3} dB  crlb={:>8.3} dB  iters={:.2}  failures={}/{}",
                r.estimator.id(),
                r.m,
                r.sigma2_db,
                r.mse_db,
                r.crlb_trace_db,
                r.mean_iters,
                r.failures,
                r.trials
            )
        })
        .collect();
    let table = match args.format {
        TableFormat::Csv => sweep_csv(&result),
        TableFormat::Json => sweep_json(&result),
    };
    emit(args, &table, &summary)
}

fn cmd_convergence(args: &ConvergenceArgs) -> Result<(), Error> {
    let cfg = load_config(&args.sweep)?;
    let init = args.init.map(InitKind::from).unwrap_or(cfg.cis_init);
    let k_max = args.k_max.unwrap_or(cfg.k_max);
    let result = with_threads(args.sweep.threads, || convergence_study(&cfg, init, k_max))??;
    let summary: Vec<String> = result
        .rows
        .iter()
        .map(|r| {
            format!(
                "cis[{}] M={:<4} sigma2={:>7.2} dB  k={:<3} mse={:>8.3} dB  failures={}/{}",
                r.initializer.id(),
                r.m,
                r.sigma2_db,
                r.iteration,
                r.mse_db,
                r.failures,
                r.trials
            )
        })
        .collect();
    let table = match args.sweep.format {
        TableFormat::Csv => convergence_csv(&result),
        TableFormat::Json => convergence_json(&result),
    };
    emit(&args.sweep, &table, &summary)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Simulate(a) => cmd_simulate(a),
        Command::Estimate(a) => cmd_estimate(a),
        Command::Crlb(a) => cmd_crlb(a),
        Command::Bench(a) => cmd_bench(a),
        Command::Convergence(a) => cmd_convergence(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("aoa3d: {e}");
            ExitCode::from(exit_status(&e))
        }
    }
}
