//! `smoothcore` command-line interface.
//!
//! Exit codes: 0 on success, 1 when an estimate or grid cell failed,
//! 2 on usage or configuration errors.

use std::fs::File;
use std::io::{self, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use smoothcore::experiment::{
    bound_overlay, run_grid, scaling_regression, Axis, BuiltModel, ExperimentGrid, FunctionalKind, FunctionalSpec,
    ModelSpec, VarianceTable,
};
use smoothcore::model::simulate::{read_observations_csv, write_observations_csv};
use smoothcore::numeric::fmt_g17;
use smoothcore::oracle::{exact_hmm_smooth, kalman_smooth, path_space_asymptotic_variance, theory_bounds};
use smoothcore::rng::stream;
use smoothcore::{Error, Method, StateSpaceModel};

#[derive(Parser)]
#[command(name = "smoothcore", version, about = "Particle smoothing of additive functionals")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Simulate a hidden path and observations to CSV (`t,x_true,y`).
    Generate {
        #[command(flatten)]
        model: ModelArgs,
        /// Final time index; the sequence has T + 1 observations.
        #[arg(long = "T", alias = "horizon")]
        horizon: usize,
        #[arg(long)]
        seed: u64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// One smoothing estimate of the additive functional from an observation file.
    Smooth {
        #[arg(long)]
        method: Method,
        #[arg(long = "n")]
        n_particles: usize,
        #[arg(long)]
        seed: u64,
        #[arg(long)]
        data: PathBuf,
        #[command(flatten)]
        model: ModelArgs,
        #[command(flatten)]
        functional: FunctionalArgs,
        /// Record wall-clock seconds (output is then no longer reproducible byte for byte).
        #[arg(long)]
        timing: bool,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run an experiment grid from a JSON config and write its variance table.
    Experiment {
        #[arg(long)]
        config: PathBuf,
        /// Overrides the config's `out` field.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Worker threads; defaults to the available parallelism.
        #[arg(long, env = "SMOOTHCORE_THREADS")]
        threads: Option<usize>,
        #[arg(long)]
        timing: bool,
    },
    /// Scaling regressions and bound overlays for a variance table (JSON).
    Analyze {
        #[arg(long)]
        table: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Exact reference computations.
    #[command(subcommand)]
    Oracle(OracleCommand),
}

#[derive(Subcommand)]
enum OracleCommand {
    /// Kalman filter and RTS smoother (`t,filt_mean,filt_var,smooth_mean,smooth_var`).
    Kalman {
        #[arg(long)]
        phi: f64,
        #[arg(long)]
        sigma_u: f64,
        #[arg(long)]
        sigma_v: f64,
        #[arg(long)]
        data: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Exact smoothed value of the additive functional for a finite model.
    Hmm {
        #[arg(long)]
        model_file: PathBuf,
        #[arg(long)]
        data: PathBuf,
        #[command(flatten)]
        functional: FunctionalArgs,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Asymptotic variance of the path-space estimator of the state sum
    /// (models whose kernel ignores the source state).
    Gamma {
        #[command(flatten)]
        model: ModelArgs,
        #[arg(long)]
        data: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Bound shape factors Υ and Θ.
    Bounds {
        #[arg(long)]
        r: usize,
        #[arg(long = "T")]
        horizon: usize,
        #[arg(long = "N")]
        n_particles: usize,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum ModelKind {
    Lgm,
    Svm,
}

#[derive(Args)]
struct ModelArgs {
    /// Built-in model; use `--model-file` for finite chains.
    #[arg(long, conflicts_with = "model_file", required_unless_present = "model_file")]
    model: Option<ModelKind>,
    /// JSON model spec: `{"type": "lgm"|"svm"|"finite", "params": {...}}`.
    #[arg(long)]
    model_file: Option<PathBuf>,
    #[arg(long, allow_hyphen_values = true)]
    phi: Option<f64>,
    #[arg(long)]
    sigma_u: Option<f64>,
    #[arg(long)]
    sigma_v: Option<f64>,
    #[arg(long)]
    sigma: Option<f64>,
    #[arg(long)]
    beta: Option<f64>,
}

#[derive(Args)]
struct FunctionalArgs {
    /// `state_sum` (Σ x_t) or `lag_product` (Σ x_{t−1} x_t).
    #[arg(long, default_value = "state_sum")]
    functional: String,
}

impl FunctionalArgs {
    fn spec(&self) -> Result<FunctionalSpec, CliError> {
        match self.functional.as_str() {
            "state_sum" => Ok(FunctionalSpec { r: 0, kind: FunctionalKind::StateSum }),
            "lag_product" => Ok(FunctionalSpec { r: 1, kind: FunctionalKind::LagProduct }),
            other => Err(CliError::Usage(format!("--functional: unknown kind `{other}`"))),
        }
    }
}

#[derive(Debug)]
enum CliError {
    /// Bad arguments, config or input files.
    Usage(String),
    /// Failure while computing.
    Run(String),
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        match e {
            Error::Config(_) | Error::Io(_) | Error::InvalidParameter(_) => CliError::Usage(e.to_string()),
            other => CliError::Run(other.to_string()),
        }
    }
}

impl From<io::Error> for CliError {
    fn from(e: io::Error) -> Self {
        CliError::Usage(e.to_string())
    }
}

fn require(value: Option<f64>, flag: &str) -> Result<f64, CliError> {
    value.ok_or_else(|| CliError::Usage(format!("missing --{flag}")))
}

impl ModelArgs {
    fn spec(&self) -> Result<ModelSpec, CliError> {
        if let Some(path) = &self.model_file {
            let text = read_text(path)?;
            return serde_json::from_str(&text).map_err(|e| {
                CliError::Usage(format!("{}: line {} column {}: {e}", path.display(), e.line(), e.column()))
            });
        }
        match self.model {
            Some(ModelKind::Lgm) => Ok(ModelSpec::lgm(
                require(self.phi, "phi")?,
                require(self.sigma_u, "sigma-u")?,
                require(self.sigma_v, "sigma-v")?,
            )),
            Some(ModelKind::Svm) => {
                Ok(ModelSpec::svm(require(self.phi, "phi")?, require(self.sigma, "sigma")?, require(self.beta, "beta")?))
            }
            None => Err(CliError::Usage("one of --model or --model-file is required".into())),
        }
    }
}

fn read_text(path: &Path) -> Result<String, CliError> {
    std::fs::read_to_string(path).map_err(|e| CliError::Usage(format!("{}: {e}", path.display())))
}

fn read_observations(path: &Path) -> Result<Vec<f64>, CliError> {
    let file = File::open(path).map_err(|e| CliError::Usage(format!("{}: {e}", path.display())))?;
    read_observations_csv(BufReader::new(file))
        .map(|d| d.y)
        .map_err(|e| CliError::Usage(format!("{}: {e}", path.display())))
}

fn output(path: Option<&Path>) -> Result<Box<dyn Write>, CliError> {
    Ok(match path {
        Some(p) => Box::new(BufWriter::new(
            File::create(p).map_err(|e| CliError::Usage(format!("{}: {e}", p.display())))?,
        )),
        None => Box::new(BufWriter::new(io::stdout().lock())),
    })
}

fn write_json<T: Serialize>(path: Option<&Path>, value: &T) -> Result<(), CliError> {
    let mut out = output(path)?;
    serde_json::to_writer_pretty(&mut out, value).map_err(|e| CliError::Run(e.to_string()))?;
    writeln!(out)?;
    out.flush()?;
    Ok(())
}

#[derive(Serialize)]
struct Analysis {
    regressions: Vec<smoothcore::experiment::Regression>,
    overlays: Vec<smoothcore::experiment::OverlayRow>,
}

fn analyze(table: &VarianceTable) -> Analysis {
    let mut methods: Vec<Method> = table.rows.iter().map(|r| r.method).collect();
    methods.dedup();
    methods.sort_by_key(|m| m.id());
    methods.dedup();
    let mut regressions = Vec::new();
    let mut overlays = Vec::new();
    for &method in &methods {
        for axis in [Axis::T, Axis::N] {
            let mut fixed: Vec<usize> = table
                .rows
                .iter()
                .filter(|r| r.method == method)
                .map(|r| match axis {
                    Axis::T => r.n_particles,
                    Axis::N => r.horizon,
                })
                .collect();
            fixed.sort_unstable();
            fixed.dedup();
            for value in fixed {
                if let Ok(reg) = scaling_regression(table, method, axis, Some(value)) {
                    regressions.push(reg);
                }
            }
        }
        if let Ok(rows) = bound_overlay(table, method) {
            overlays.extend(rows);
        }
    }
    Analysis { regressions, overlays }
}

fn run(cli: Cli) -> Result<bool, CliError> {
    match cli.command {
        Command::Generate { model, horizon, seed, out } => {
            let data = model.spec()?.simulate(horizon, &mut stream(seed))?;
            let mut w = output(out.as_deref())?;
            write_observations_csv(&mut w, &data)?;
            w.flush()?;
        }
        Command::Smooth { method, n_particles, seed, data, model, functional, timing, out } => {
            if n_particles == 0 {
                return Err(CliError::Usage("--n must be positive".into()));
            }
            let y = read_observations(&data)?;
            let built = model.spec()?.build(&y)?;
            let mut estimate = built.estimate(method, functional.spec()?, n_particles, seed)?;
            if !timing {
                estimate.wall_seconds = None;
            }
            let mut w = output(out.as_deref())?;
            estimate.write_csv(&mut w)?;
            w.flush()?;
        }
        Command::Experiment { config, out, threads, timing } => {
            let text = read_text(&config)?;
            let grid = ExperimentGrid::from_json(&text)
                .map_err(|e| CliError::Usage(format!("{}: {e}", config.display())))?;
            let workers = match threads {
                Some(0) => return Err(CliError::Usage("--threads must be positive".into())),
                Some(n) => n,
                None => std::thread::available_parallelism().map(|n| n.get()).unwrap_or(1),
            };
            let outcome = run_grid(&grid, workers)?;
            let target = out.or_else(|| grid.out.as_ref().map(PathBuf::from));
            let mut w = output(target.as_deref())?;
            outcome.table.write_csv(&mut w, timing)?;
            w.flush()?;
            let mut ok = true;
            for row in outcome.table.rows.iter().filter(|r| r.failures > 0) {
                ok = false;
                eprintln!(
                    "failed: {} T={} N={}: {} of {} replicates ({})",
                    row.method,
                    row.horizon,
                    row.n_particles,
                    row.failures,
                    row.failures + row.replicates,
                    row.first_error.as_deref().unwrap_or("")
                );
            }
            return Ok(ok);
        }
        Command::Analyze { table, out } => {
            let file = File::open(&table).map_err(|e| CliError::Usage(format!("{}: {e}", table.display())))?;
            let parsed = VarianceTable::read_csv(BufReader::new(file))
                .map_err(|e| CliError::Usage(format!("{}: {e}", table.display())))?;
            write_json(out.as_deref(), &analyze(&parsed))?;
        }
        Command::Oracle(cmd) => oracle(cmd)?,
    }
    Ok(true)
}

fn oracle(cmd: OracleCommand) -> Result<(), CliError> {
    match cmd {
        OracleCommand::Kalman { phi, sigma_u, sigma_v, data, out } => {
            let result = kalman_smooth(phi, sigma_u, sigma_v, &read_observations(&data)?)?;
            let mut w = output(out.as_deref())?;
            result.write_csv(&mut w)?;
            w.flush()?;
        }
        OracleCommand::Hmm { model_file, data, functional, out } => {
            let spec = ModelArgs {
                model: None,
                model_file: Some(model_file),
                phi: None,
                sigma_u: None,
                sigma_v: None,
                sigma: None,
                beta: None,
            }
            .spec()?;
            let BuiltModel::Finite(model) = spec.build(&read_observations(&data)?)? else {
                return Err(CliError::Usage("oracle hmm needs a finite model".into()));
            };
            let f = functional.spec()?.build(model.horizon())?;
            let value = exact_hmm_smooth(&model, &f)?;
            let mut w = output(out.as_deref())?;
            writeln!(w, "value\n{}", fmt_g17(value))?;
            w.flush()?;
        }
        OracleCommand::Gamma { model, data, out } => {
            let built = model.spec()?.build(&read_observations(&data)?)?;
            let horizon = built.horizon();
            let gamma = match &built {
                BuiltModel::Lgm(m) => path_space_asymptotic_variance(m, &FunctionalSpec::default().build(horizon)?)?,
                BuiltModel::Svm(m) => path_space_asymptotic_variance(m, &FunctionalSpec::default().build(horizon)?)?,
                BuiltModel::Finite(m) => path_space_asymptotic_variance(m, &FunctionalSpec::default().build(horizon)?)?,
            };
            let mut w = output(out.as_deref())?;
            writeln!(w, "gamma\n{}", fmt_g17(gamma))?;
            w.flush()?;
        }
        OracleCommand::Bounds { r, horizon, n_particles } => {
            let b = theory_bounds(r, horizon, n_particles)?;
            println!("r,T,N,upsilon,theta\n{r},{horizon},{n_particles},{},{}", fmt_g17(b.upsilon), fmt_g17(b.theta));
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(CliError::Usage(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
        Err(CliError::Run(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
    }
}
