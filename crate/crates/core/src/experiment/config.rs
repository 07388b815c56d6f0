use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{
    make_finite_hmm, make_lgm, make_svm,
    simulate::{simulate_finite, simulate_lgm, simulate_svm, SimulatedData},
    AdditiveFunctional, StateValue,
};
use crate::smoother::Method;

use super::grid::BuiltModel;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LgmParams {
    pub phi: f64,
    pub sigma_u: f64,
    pub sigma_v: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SvmParams {
    pub phi: f64,
    pub sigma: f64,
    pub beta: f64,
}

/// Finite chain observed through Gaussian noise around per-state means.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FiniteParams {
    pub transition: Vec<Vec<f64>>,
    pub initial: Vec<f64>,
    pub means: Vec<f64>,
    pub sd: f64,
}

/// `{"type": ..., "params": {...}}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", content = "params", rename_all = "snake_case")]
pub enum ModelSpec {
    Lgm(LgmParams),
    Svm(SvmParams),
    Finite(FiniteParams),
}

impl ModelSpec {
    pub fn lgm(phi: f64, sigma_u: f64, sigma_v: f64) -> Self {
        ModelSpec::Lgm(LgmParams { phi, sigma_u, sigma_v })
    }

    pub fn svm(phi: f64, sigma: f64, beta: f64) -> Self {
        ModelSpec::Svm(SvmParams { phi, sigma, beta })
    }

    pub fn simulate<R: rand::Rng + ?Sized>(&self, horizon: usize, rng: &mut R) -> Result<SimulatedData> {
        match self {
            ModelSpec::Lgm(p) => simulate_lgm(p.phi, p.sigma_u, p.sigma_v, horizon, rng),
            ModelSpec::Svm(p) => simulate_svm(p.phi, p.sigma, p.beta, horizon, rng),
            ModelSpec::Finite(p) => simulate_finite(&p.transition, &p.initial, &p.means, p.sd, horizon, rng),
        }
    }

    /// Binds an observation sequence into a model.
    pub fn build(&self, observations: &[f64]) -> Result<BuiltModel> {
        match self {
            ModelSpec::Lgm(p) => Ok(BuiltModel::Lgm(make_lgm(p.phi, p.sigma_u, p.sigma_v, observations.to_vec())?)),
            ModelSpec::Svm(p) => Ok(BuiltModel::Svm(make_svm(p.phi, p.sigma, p.beta, observations.to_vec())?)),
            ModelSpec::Finite(p) => {
                if observations.is_empty() {
                    return Err(Error::InvalidParameter("observation sequence is empty".into()));
                }
                if p.sd.is_nan() || p.sd <= 0.0 || p.means.len() != p.transition.len() {
                    return Err(Error::InvalidParameter("finite model needs sd > 0 and one mean per state".into()));
                }
                let norm = 1.0 / (p.sd * (2.0 * std::f64::consts::PI).sqrt());
                let emission = |t: usize, k: usize| {
                    let z = (observations[t] - p.means[k]) / p.sd;
                    norm * (-0.5 * z * z).exp()
                };
                Ok(BuiltModel::Finite(make_finite_hmm(&p.transition, emission, &p.initial, observations.len() - 1)?))
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FunctionalKind {
    /// `h_t(x) = x`, lag 0.
    StateSum,
    /// `h_t(x_{t−1}, x_t) = x_{t−1} x_t`, lag 1.
    LagProduct,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FunctionalSpec {
    pub r: usize,
    pub kind: FunctionalKind,
}

impl Default for FunctionalSpec {
    fn default() -> Self {
        FunctionalSpec { r: 0, kind: FunctionalKind::StateSum }
    }
}

impl FunctionalSpec {
    pub fn validate(&self) -> Result<()> {
        let expected = match self.kind {
            FunctionalKind::StateSum => 0,
            FunctionalKind::LagProduct => 1,
        };
        if self.r != expected {
            return Err(Error::Config(format!("functional.r = {} does not match kind {:?} (lag {expected})", self.r, self.kind)));
        }
        Ok(())
    }

    pub fn build<S: StateValue>(&self, horizon: usize) -> Result<AdditiveFunctional<S>> {
        self.validate()?;
        match self.kind {
            FunctionalKind::StateSum => Ok(AdditiveFunctional::state_sum(horizon)),
            FunctionalKind::LagProduct => AdditiveFunctional::lag_product(horizon),
        }
    }
}

/// Experiment definition. The JSON form mirrors the fields one-for-one,
/// with `T`, `N` and `seed` as key names; unknown keys are rejected.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentGrid {
    pub model: ModelSpec,
    pub methods: Vec<Method>,
    #[serde(rename = "T")]
    pub t_values: Vec<usize>,
    #[serde(rename = "N")]
    pub n_values: Vec<usize>,
    pub replicates: usize,
    #[serde(rename = "seed")]
    pub master_seed: u64,
    #[serde(default)]
    pub functional: FunctionalSpec,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub out: Option<String>,
}

impl ExperimentGrid {
    /// Parses and validates a JSON document; errors carry line and column.
    pub fn from_json(text: &str) -> Result<Self> {
        let grid: ExperimentGrid =
            serde_json::from_str(text).map_err(|e| Error::Config(format!("line {} column {}: {e}", e.line(), e.column())))?;
        grid.validate()?;
        Ok(grid)
    }

    pub fn validate(&self) -> Result<()> {
        if self.replicates < 2 {
            return Err(Error::Config(format!("replicates: need at least 2, got {}", self.replicates)));
        }
        if self.methods.is_empty() {
            return Err(Error::Config("methods: at least one method is required".into()));
        }
        if self.t_values.is_empty() || self.t_values.contains(&0) {
            return Err(Error::Config("T: values must be positive and nonempty".into()));
        }
        if self.n_values.is_empty() || self.n_values.contains(&0) {
            return Err(Error::Config("N: values must be positive and nonempty".into()));
        }
        self.functional.validate()?;
        if let Some(&t) = self.t_values.iter().find(|&&t| t < self.functional.r) {
            return Err(Error::Config(format!("T: value {t} is below the functional lag")));
        }
        if self.methods.contains(&Method::FfbsiRejection) && !matches!(self.model, ModelSpec::Finite(_)) {
            return Err(Error::Config(
                "methods: ffbsi_rejection needs mixing bounds, which only finite models carry".into(),
            ));
        }
        if self.methods.contains(&Method::FfbsForward) && self.functional.r > 1 {
            return Err(Error::Config("methods: ffbs_forward supports lags 0 and 1 only".into()));
        }
        Ok(())
    }
}
