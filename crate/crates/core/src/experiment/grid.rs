use std::io::{BufRead, Write};
use std::time::Instant;

use rayon::prelude::*;

use super::config::{ExperimentGrid, FunctionalSpec};
use crate::error::{Error, Result};
use crate::filter::run_filter;
use crate::model::{
    bootstrap_proposal, AdditiveFunctional, FiniteHmm, LinearGaussian, StateSpaceModel, StochasticVolatility,
};
use crate::numeric::{fmt_g17, mean_and_variance};
use crate::rng::{derive_seed, stream};
use crate::smoother::{
    default_max_rejections, ffbs_backward_additive, ffbs_forward_additive, ffbsi_estimate,
    ffbsi_rejection_sample_paths, ffbsi_sample_paths, path_space_from_history, Method, SmoothingEstimate,
};

/// Component tag for observation-sequence seeds.
pub const DATA_STREAM: u64 = 0xDA7A;

/// A model with its observations bound, over any supported state type.
#[derive(Debug, Clone)]
pub enum BuiltModel {
    Lgm(LinearGaussian),
    Svm(StochasticVolatility),
    Finite(FiniteHmm),
}

impl BuiltModel {
    pub fn horizon(&self) -> usize {
        match self {
            BuiltModel::Lgm(m) => m.horizon(),
            BuiltModel::Svm(m) => m.horizon(),
            BuiltModel::Finite(m) => m.horizon(),
        }
    }

    /// One estimate with `n_particles` particles (and as many FFBSi paths),
    /// drawing everything from the stream keyed by `seed`.
    pub fn estimate(&self, method: Method, functional: FunctionalSpec, n_particles: usize, seed: u64) -> Result<SmoothingEstimate> {
        let horizon = self.horizon();
        match self {
            BuiltModel::Lgm(m) => run_method(m, &functional.build(horizon)?, method, n_particles, seed),
            BuiltModel::Svm(m) => run_method(m, &functional.build(horizon)?, method, n_particles, seed),
            BuiltModel::Finite(m) => run_method(m, &functional.build(horizon)?, method, n_particles, seed),
        }
    }
}

/// Bootstrap filter followed by `method`. FFBSi draws `n_particles` paths.
/// The returned estimate carries `seed` and the elapsed wall time.
pub fn run_method<M: StateSpaceModel>(
    model: &M,
    functional: &AdditiveFunctional<M::State>,
    method: Method,
    n_particles: usize,
    seed: u64,
) -> Result<SmoothingEstimate> {
    let start = Instant::now();
    let mut rng = stream(seed);
    let proposal = bootstrap_proposal(model);
    let history = run_filter(model, &proposal, n_particles, functional.horizon(), &mut rng)?;
    let mut estimate = match method {
        Method::FfbsBackward => ffbs_backward_additive(&history, model, functional)?,
        Method::FfbsForward => ffbs_forward_additive(&history, model, functional)?,
        Method::FfbsiDirect => {
            let paths = ffbsi_sample_paths(&history, model, n_particles, &mut rng)?;
            ffbsi_estimate(&paths, &history, functional)?
        }
        Method::FfbsiRejection => {
            let bounds = model
                .mixing_bounds()
                .ok_or_else(|| Error::UnsupportedModel("rejection sampling needs mixing bounds".into()))?;
            let (paths, _) =
                ffbsi_rejection_sample_paths(&history, model, n_particles, default_max_rejections(bounds), &mut rng)?;
            ffbsi_estimate(&paths, &history, functional)?
        }
        Method::PathSpace => path_space_from_history(&history, functional)?,
    };
    estimate.method = method;
    Ok(estimate.with_seed(seed).with_wall_seconds(start.elapsed().as_secs_f64()))
}

/// Summary of one `(method, T, N)` cell.
#[derive(Debug, Clone, PartialEq)]
pub struct VarianceRow {
    pub method: Method,
    pub horizon: usize,
    pub n_particles: usize,
    pub lag: usize,
    /// Unbiased (`n − 1`) variance over successful replicates.
    pub variance: f64,
    pub mean: f64,
    pub mean_wall_seconds: f64,
    /// Successful replicates.
    pub replicates: usize,
    pub failures: usize,
    pub first_error: Option<String>,
}

impl VarianceRow {
    /// Standard error of `mean`.
    pub fn standard_error(&self) -> f64 {
        (self.variance / self.replicates as f64).sqrt()
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct VarianceTable {
    pub rows: Vec<VarianceRow>,
}

impl VarianceTable {
    pub const CSV_HEADER: &'static str = "method,T,N,r,variance,mean,mean_wall_seconds,replicates";

    pub fn row(&self, method: Method, horizon: usize, n_particles: usize) -> Option<&VarianceRow> {
        self.rows
            .iter()
            .find(|r| r.method == method && r.horizon == horizon && r.n_particles == n_particles)
    }

    pub fn has_failures(&self) -> bool {
        self.rows.iter().any(|r| r.failures > 0)
    }

    /// Writes the table. Wall times are left empty unless `timing` is set,
    /// so that untimed output depends only on the configuration.
    pub fn write_csv<W: Write>(&self, mut out: W, timing: bool) -> Result<()> {
        writeln!(out, "{}", Self::CSV_HEADER)?;
        for r in &self.rows {
            let wall = if timing { fmt_g17(r.mean_wall_seconds) } else { String::new() };
            writeln!(
                out,
                "{},{},{},{},{},{},{},{}",
                r.method,
                r.horizon,
                r.n_particles,
                r.lag,
                fmt_g17(r.variance),
                fmt_g17(r.mean),
                wall,
                r.replicates
            )?;
        }
        Ok(())
    }

    pub fn read_csv<R: BufRead>(input: R) -> Result<Self> {
        let mut lines = input.lines();
        let header = lines.next().transpose()?.unwrap_or_default();
        if header.trim() != Self::CSV_HEADER {
            return Err(Error::Config(format!("line 1: expected header `{}`", Self::CSV_HEADER)));
        }
        let mut rows = Vec::new();
        for (k, line) in lines.enumerate() {
            let line = line?;
            if line.trim().is_empty() {
                continue;
            }
            let bad = |field: &str| Error::Config(format!("line {}: bad {field}", k + 2));
            let f: Vec<&str> = line.trim().split(',').collect();
            if f.len() != 8 {
                return Err(Error::Config(format!("line {}: expected 8 fields, found {}", k + 2, f.len())));
            }
            let num = |s: &str, name: &str| -> Result<f64> { s.parse().map_err(|_| bad(name)) };
            rows.push(VarianceRow {
                method: f[0].parse().map_err(|_| bad("method"))?,
                horizon: f[1].parse().map_err(|_| bad("T"))?,
                n_particles: f[2].parse().map_err(|_| bad("N"))?,
                lag: f[3].parse().map_err(|_| bad("r"))?,
                variance: num(f[4], "variance")?,
                mean: num(f[5], "mean")?,
                mean_wall_seconds: if f[6].is_empty() { f64::NAN } else { num(f[6], "mean_wall_seconds")? },
                replicates: f[7].parse().map_err(|_| bad("replicates"))?,
                failures: 0,
                first_error: None,
            });
        }
        Ok(VarianceTable { rows })
    }
}

/// Table plus the observation sequences it was conditioned on.
#[derive(Debug, Clone)]
pub struct GridOutcome {
    pub table: VarianceTable,
    /// `(T, y_{0:T})` per horizon, in grid order.
    pub observations: Vec<(usize, Vec<f64>)>,
}

struct Task {
    method: Method,
    horizon: usize,
    n_particles: usize,
    replicate: usize,
    model_slot: usize,
}

/// Runs every `(method, T, N, replicate)` on a pool of `workers` threads.
///
/// Output is independent of `workers`: each replicate owns a keyed stream
/// and results are gathered in grid order.
pub fn run_grid(grid: &ExperimentGrid, workers: usize) -> Result<GridOutcome> {
    grid.validate()?;
    let mut models = Vec::with_capacity(grid.t_values.len());
    let mut observations = Vec::with_capacity(grid.t_values.len());
    for &horizon in &grid.t_values {
        let mut rng = stream(derive_seed(grid.master_seed, &[DATA_STREAM, horizon as u64]));
        let data = grid.model.simulate(horizon, &mut rng)?;
        models.push(grid.model.build(&data.y)?);
        observations.push((horizon, data.y));
    }

    let mut tasks = Vec::new();
    for &method in &grid.methods {
        for (slot, &horizon) in grid.t_values.iter().enumerate() {
            for &n_particles in &grid.n_values {
                for replicate in 0..grid.replicates {
                    tasks.push(Task { method, horizon, n_particles, replicate, model_slot: slot });
                }
            }
        }
    }

    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers.max(1))
        .build()
        .map_err(|e| Error::Config(format!("thread pool: {e}")))?;
    let results: Vec<Result<SmoothingEstimate>> = pool.install(|| {
        tasks
            .par_iter()
            .map(|task| {
                let seed = derive_seed(
                    grid.master_seed,
                    &[task.horizon as u64, task.n_particles as u64, task.method.id(), task.replicate as u64],
                );
                models[task.model_slot].estimate(task.method, grid.functional, task.n_particles, seed)
            })
            .collect()
    });

    let mut rows = Vec::new();
    for (cell_tasks, cell_results) in tasks.chunks(grid.replicates).zip(results.chunks(grid.replicates)) {
        let first = &cell_tasks[0];
        let mut values = Vec::with_capacity(grid.replicates);
        let mut wall = 0.0;
        let mut failures = 0;
        let mut first_error = None;
        for r in cell_results {
            match r {
                Ok(e) => {
                    values.push(e.value);
                    wall += e.wall_seconds.unwrap_or(0.0);
                }
                Err(err) => {
                    failures += 1;
                    first_error.get_or_insert_with(|| err.to_string());
                }
            }
        }
        let (mean, variance) = mean_and_variance(&values);
        rows.push(VarianceRow {
            method: first.method,
            horizon: first.horizon,
            n_particles: first.n_particles,
            lag: grid.functional.r,
            variance,
            mean,
            mean_wall_seconds: if values.is_empty() { f64::NAN } else { wall / values.len() as f64 },
            replicates: values.len(),
            failures,
            first_error,
        });
    }
    Ok(GridOutcome { table: VarianceTable { rows }, observations })
}
