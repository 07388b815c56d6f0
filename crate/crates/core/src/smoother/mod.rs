//! Smoothed additive functionals from a stored forward pass.
//!
//! The backward kernel of the particle approximation is the row-stochastic
//! matrix `Λ_t(i, j) ∝ ω_t^j m(x_t^j, x_{t+1}^i)`. FFBS evaluates the
//! smoothing expectation under the backward chain exactly, FFBSi samples
//! index paths from it, and the path-space estimator ignores it and follows
//! the filter genealogy instead.

mod ffbs;
mod ffbsi;
mod path_space;

use std::fmt;
use std::io::Write;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::filter::ParticleHistory;
use crate::model::StateSpaceModel;
use crate::numeric::{fmt_g17, normalize_log_weights_into};

pub use ffbs::{ffbs_backward_additive, ffbs_forward_additive, ForwardAdditiveSmoother};
pub use ffbsi::{
    default_max_rejections, ffbsi_estimate, ffbsi_rejection_sample_paths, ffbsi_sample_paths, RejectionStats,
    Trajectories,
};
pub use path_space::{path_space_estimate, path_space_from_history};

/// Estimator identity.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    FfbsBackward,
    FfbsForward,
    FfbsiDirect,
    FfbsiRejection,
    PathSpace,
}

impl Method {
    pub const ALL: [Method; 5] = [
        Method::FfbsBackward,
        Method::FfbsForward,
        Method::FfbsiDirect,
        Method::FfbsiRejection,
        Method::PathSpace,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Method::FfbsBackward => "ffbs_backward",
            Method::FfbsForward => "ffbs_forward",
            Method::FfbsiDirect => "ffbsi_direct",
            Method::FfbsiRejection => "ffbsi_rejection",
            Method::PathSpace => "path_space",
        }
    }

    /// Stable numeric id used in seed derivation.
    pub fn id(self) -> u64 {
        match self {
            Method::FfbsBackward => 1,
            Method::FfbsForward => 2,
            Method::FfbsiDirect => 3,
            Method::FfbsiRejection => 4,
            Method::PathSpace => 5,
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "ffbs_backward" | "ffbs" => Ok(Method::FfbsBackward),
            "ffbs_forward" => Ok(Method::FfbsForward),
            "ffbsi_direct" | "ffbsi" => Ok(Method::FfbsiDirect),
            "ffbsi_rejection" => Ok(Method::FfbsiRejection),
            "path_space" => Ok(Method::PathSpace),
            other => Err(Error::Config(format!("unknown method `{other}`"))),
        }
    }
}

/// One estimate of `φ_{0:T|T}[S_{T,r}]`.
#[derive(Debug, Clone, PartialEq)]
pub struct SmoothingEstimate {
    pub method: Method,
    pub value: f64,
    pub n_particles: usize,
    pub horizon: usize,
    pub lag: usize,
    pub seed: Option<u64>,
    pub wall_seconds: Option<f64>,
}

impl SmoothingEstimate {
    pub fn new(method: Method, value: f64, n_particles: usize, horizon: usize, lag: usize) -> Self {
        SmoothingEstimate { method, value, n_particles, horizon, lag, seed: None, wall_seconds: None }
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = Some(seed);
        self
    }

    pub fn with_wall_seconds(mut self, secs: f64) -> Self {
        self.wall_seconds = Some(secs);
        self
    }

    pub const CSV_HEADER: &'static str = "method,T,N,r,seed,estimate,wall_seconds";

    /// `method,T,N,r,seed,estimate,wall_seconds`; absent fields are empty.
    pub fn csv_row(&self) -> String {
        format!(
            "{},{},{},{},{},{},{}",
            self.method,
            self.horizon,
            self.n_particles,
            self.lag,
            self.seed.map(|s| s.to_string()).unwrap_or_default(),
            fmt_g17(self.value),
            self.wall_seconds.map(fmt_g17).unwrap_or_default()
        )
    }

    pub fn write_csv<W: Write>(&self, mut out: W) -> Result<()> {
        writeln!(out, "{}", Self::CSV_HEADER)?;
        writeln!(out, "{}", self.csv_row())?;
        Ok(())
    }
}

/// Row `Λ_t(i, ·)` of the backward matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct BackwardMatrixRow {
    pub target_index: usize,
    pub probabilities: Vec<f64>,
}

/// `log ω^j + log m(x^j, target)` for every particle `j` of one time step.
pub(crate) fn backward_log_row<M: StateSpaceModel>(
    model: &M,
    positions: &[M::State],
    log_weights: &[f64],
    target: M::State,
    out: &mut Vec<f64>,
) {
    out.clear();
    out.extend(
        positions
            .iter()
            .zip(log_weights)
            .map(|(&xj, &lw)| lw + model.transition_log_density(xj, target)),
    );
}

/// Normalized `Λ_t(i, ·)` into `out`, reusing `scratch`.
pub(crate) fn backward_row_into<M: StateSpaceModel>(
    history: &ParticleHistory<M::State>,
    model: &M,
    t: usize,
    i: usize,
    scratch: &mut Vec<f64>,
    out: &mut Vec<f64>,
) -> Result<()> {
    let target = history.positions(t + 1)[i];
    backward_log_row(model, history.positions(t), history.log_weights(t), target, scratch);
    if normalize_log_weights_into(scratch, out) {
        Ok(())
    } else {
        Err(Error::DegenerateTransition { t, i })
    }
}

pub fn backward_row<M: StateSpaceModel>(
    history: &ParticleHistory<M::State>,
    model: &M,
    t: usize,
    i: usize,
) -> Result<BackwardMatrixRow> {
    if t >= history.horizon() {
        return Err(Error::OutOfRange { what: "time", index: t, bound: history.horizon() });
    }
    if i >= history.n_particles() {
        return Err(Error::OutOfRange { what: "particle", index: i, bound: history.n_particles() });
    }
    let mut scratch = Vec::new();
    let mut probabilities = Vec::new();
    backward_row_into(history, model, t, i, &mut scratch, &mut probabilities)?;
    Ok(BackwardMatrixRow { target_index: i, probabilities })
}

/// Targets at `t + 1` grouped so that members share one backward row.
/// Each group is `(representative, members)`.
pub(crate) fn target_groups<M: StateSpaceModel>(model: &M, xs: &[M::State]) -> Vec<(usize, Vec<usize>)> {
    let classes: Option<Vec<usize>> = xs.iter().map(|&x| model.state_class(x)).collect();
    match classes {
        Some(classes) => {
            let n_classes = classes.iter().copied().max().map_or(0, |c| c + 1);
            let mut groups: Vec<(usize, Vec<usize>)> = Vec::new();
            let mut slot = vec![usize::MAX; n_classes];
            for (i, &c) in classes.iter().enumerate() {
                if slot[c] == usize::MAX {
                    slot[c] = groups.len();
                    groups.push((i, Vec::new()));
                }
                groups[slot[c]].1.push(i);
            }
            groups
        }
        None => (0..xs.len()).map(|i| (i, vec![i])).collect(),
    }
}

pub(crate) fn check_functional_horizon(history_horizon: usize, functional_horizon: usize, lag: usize) -> Result<()> {
    if functional_horizon != history_horizon {
        return Err(Error::Mismatch(format!(
            "functional horizon {functional_horizon} differs from history horizon {history_horizon}"
        )));
    }
    if lag > history_horizon {
        return Err(Error::UnsupportedLag(lag));
    }
    Ok(())
}
