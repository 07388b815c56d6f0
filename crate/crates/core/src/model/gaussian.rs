use rand::Rng;
use rand_distr::StandardNormal;

use super::{MixingBounds, StateSpaceModel};
use crate::error::{Error, Result};

const HALF_LN_2PI: f64 = 0.918_938_533_204_672_8;

fn normal_log_density(x: f64, mean: f64, sd: f64) -> f64 {
    let z = (x - mean) / sd;
    -HALF_LN_2PI - sd.ln() - 0.5 * z * z
}

fn check_ar1(phi: f64, sigma: f64, name: &str) -> Result<()> {
    if !phi.is_finite() || phi.abs() >= 1.0 {
        return Err(Error::InvalidParameter(format!(
            "|phi| must be < 1 for a stationary initial law, got {phi}"
        )));
    }
    if !(sigma.is_finite() && sigma > 0.0) {
        return Err(Error::InvalidParameter(format!("{name} must be positive, got {sigma}")));
    }
    Ok(())
}

fn check_observations(y: &[f64]) -> Result<()> {
    if y.is_empty() {
        return Err(Error::InvalidParameter("observation sequence is empty".into()));
    }
    if let Some(t) = y.iter().position(|v| !v.is_finite()) {
        return Err(Error::InvalidParameter(format!("observation y_{t} is not finite")));
    }
    Ok(())
}

/// `X_{t+1} = φ X_t + σ_u U_t`, `Y_t = X_t + σ_v V_t`, `X_0 ~ N(0, σ_u²/(1−φ²))`.
#[derive(Debug, Clone)]
pub struct LinearGaussian {
    phi: f64,
    sigma_u: f64,
    sigma_v: f64,
    initial_sd: f64,
    observations: Vec<f64>,
    bounds: Option<MixingBounds>,
}

pub fn make_lgm(phi: f64, sigma_u: f64, sigma_v: f64, observations: Vec<f64>) -> Result<LinearGaussian> {
    LinearGaussian::new(phi, sigma_u, sigma_v, observations)
}

impl LinearGaussian {
    pub fn new(phi: f64, sigma_u: f64, sigma_v: f64, observations: Vec<f64>) -> Result<Self> {
        check_ar1(phi, sigma_u, "sigma_u")?;
        if !(sigma_v.is_finite() && sigma_v > 0.0) {
            return Err(Error::InvalidParameter(format!("sigma_v must be positive, got {sigma_v}")));
        }
        check_observations(&observations)?;
        Ok(LinearGaussian {
            phi,
            sigma_u,
            sigma_v,
            initial_sd: sigma_u / (1.0 - phi * phi).sqrt(),
            observations,
            bounds: None,
        })
    }

    /// Attaches caller-asserted mixing bounds. A Gaussian kernel has no
    /// positive lower bound on ℝ, so these are never inferred.
    pub fn with_mixing_bounds(mut self, bounds: MixingBounds) -> Self {
        self.bounds = Some(bounds);
        self
    }

    pub fn phi(&self) -> f64 {
        self.phi
    }

    pub fn sigma_u(&self) -> f64 {
        self.sigma_u
    }

    pub fn sigma_v(&self) -> f64 {
        self.sigma_v
    }

    pub fn initial_sd(&self) -> f64 {
        self.initial_sd
    }

    pub fn observations(&self) -> &[f64] {
        &self.observations
    }
}

impl StateSpaceModel for LinearGaussian {
    type State = f64;

    fn horizon(&self) -> usize {
        self.observations.len() - 1
    }

    fn sample_initial<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        self.initial_sd * rng.sample::<f64, _>(StandardNormal)
    }

    fn initial_log_density(&self, x: f64) -> f64 {
        normal_log_density(x, 0.0, self.initial_sd)
    }

    fn transition_log_density(&self, x: f64, x_next: f64) -> f64 {
        normal_log_density(x_next, self.phi * x, self.sigma_u)
    }

    fn sample_transition<R: Rng + ?Sized>(&self, x: f64, rng: &mut R) -> f64 {
        self.phi * x + self.sigma_u * rng.sample::<f64, _>(StandardNormal)
    }

    fn observation_log_density(&self, t: usize, x: f64) -> f64 {
        normal_log_density(self.observations[t], x, self.sigma_v)
    }

    fn mixing_bounds(&self) -> Option<&MixingBounds> {
        self.bounds.as_ref()
    }

    fn independent_kernel(&self) -> bool {
        self.phi == 0.0
    }
}

/// `X_{t+1} = φ X_t + σ U_{t+1}`, `Y_t = β e^{X_t/2} V_t`, `X_0 ~ N(0, σ²/(1−φ²))`.
#[derive(Debug, Clone)]
pub struct StochasticVolatility {
    phi: f64,
    sigma: f64,
    beta: f64,
    initial_sd: f64,
    observations: Vec<f64>,
    bounds: Option<MixingBounds>,
}

pub fn make_svm(phi: f64, sigma: f64, beta: f64, observations: Vec<f64>) -> Result<StochasticVolatility> {
    StochasticVolatility::new(phi, sigma, beta, observations)
}

impl StochasticVolatility {
    pub fn new(phi: f64, sigma: f64, beta: f64, observations: Vec<f64>) -> Result<Self> {
        check_ar1(phi, sigma, "sigma")?;
        if !(beta.is_finite() && beta > 0.0) {
            return Err(Error::InvalidParameter(format!("beta must be positive, got {beta}")));
        }
        check_observations(&observations)?;
        Ok(StochasticVolatility {
            phi,
            sigma,
            beta,
            initial_sd: sigma / (1.0 - phi * phi).sqrt(),
            observations,
            bounds: None,
        })
    }

    pub fn with_mixing_bounds(mut self, bounds: MixingBounds) -> Self {
        self.bounds = Some(bounds);
        self
    }

    pub fn phi(&self) -> f64 {
        self.phi
    }

    pub fn sigma(&self) -> f64 {
        self.sigma
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    pub fn observations(&self) -> &[f64] {
        &self.observations
    }
}

impl StateSpaceModel for StochasticVolatility {
    type State = f64;

    fn horizon(&self) -> usize {
        self.observations.len() - 1
    }

    fn sample_initial<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        self.initial_sd * rng.sample::<f64, _>(StandardNormal)
    }

    fn initial_log_density(&self, x: f64) -> f64 {
        normal_log_density(x, 0.0, self.initial_sd)
    }

    fn transition_log_density(&self, x: f64, x_next: f64) -> f64 {
        normal_log_density(x_next, self.phi * x, self.sigma)
    }

    fn sample_transition<R: Rng + ?Sized>(&self, x: f64, rng: &mut R) -> f64 {
        self.phi * x + self.sigma * rng.sample::<f64, _>(StandardNormal)
    }

    fn observation_log_density(&self, t: usize, x: f64) -> f64 {
        // N(y; 0, β² e^x), written without forming e^{x/2}
        let y = self.observations[t] / self.beta;
        -HALF_LN_2PI - self.beta.ln() - 0.5 * x - 0.5 * y * y * (-x).exp()
    }

    fn mixing_bounds(&self) -> Option<&MixingBounds> {
        self.bounds.as_ref()
    }

    fn independent_kernel(&self) -> bool {
        self.phi == 0.0
    }
}
