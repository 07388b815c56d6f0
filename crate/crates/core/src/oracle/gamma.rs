use crate::error::{Error, Result};
use crate::model::{AdditiveFunctional, FiniteHmm, LinearGaussian, StateSpaceModel, StochasticVolatility};
use crate::numeric::simpson;

/// Simpson panels used for continuous integrals.
pub const QUADRATURE_PANELS: usize = 10_000;
/// Half-width of the integration interval, in standard deviations.
pub const QUADRATURE_SDS: f64 = 10.0;

/// Integrals against the kernel and initial law of a model with `m(x, x′) = m(x′)`.
pub trait KernelIntegrals: StateSpaceModel {
    /// `∫ m(x′) f(x′) λ(dx′)`.
    fn integrate_kernel(&self, f: &dyn Fn(Self::State) -> f64) -> Result<f64>;

    /// `∫ χ(x) f(x) λ(dx)`.
    fn integrate_initial(&self, f: &dyn Fn(Self::State) -> f64) -> Result<f64>;
}

fn require_independent<M: StateSpaceModel>(model: &M) -> Result<()> {
    if model.independent_kernel() {
        Ok(())
    } else {
        Err(Error::UnsupportedModel("transition kernel depends on the source state".into()))
    }
}

impl KernelIntegrals for FiniteHmm {
    fn integrate_kernel(&self, f: &dyn Fn(usize) -> f64) -> Result<f64> {
        require_independent(self)?;
        Ok((0..self.n_states()).map(|j| self.transition(0, j) * f(j)).sum())
    }

    fn integrate_initial(&self, f: &dyn Fn(usize) -> f64) -> Result<f64> {
        Ok((0..self.n_states()).map(|j| self.initial()[j] * f(j)).sum())
    }
}

fn gaussian_integral<M: StateSpaceModel<State = f64>>(model: &M, sd: f64, density: impl Fn(f64) -> f64, f: &dyn Fn(f64) -> f64) -> f64 {
    let _ = model;
    let half = QUADRATURE_SDS * sd;
    simpson(|x| density(x) * f(x), -half, half, QUADRATURE_PANELS)
}

impl KernelIntegrals for LinearGaussian {
    fn integrate_kernel(&self, f: &dyn Fn(f64) -> f64) -> Result<f64> {
        require_independent(self)?;
        Ok(gaussian_integral(self, self.sigma_u(), |x| self.transition_log_density(0.0, x).exp(), f))
    }

    fn integrate_initial(&self, f: &dyn Fn(f64) -> f64) -> Result<f64> {
        Ok(gaussian_integral(self, self.initial_sd(), |x| self.initial_log_density(x).exp(), f))
    }
}

impl KernelIntegrals for StochasticVolatility {
    fn integrate_kernel(&self, f: &dyn Fn(f64) -> f64) -> Result<f64> {
        require_independent(self)?;
        Ok(gaussian_integral(self, self.sigma(), |x| self.transition_log_density(0.0, x).exp(), f))
    }

    fn integrate_initial(&self, f: &dyn Fn(f64) -> f64) -> Result<f64> {
        let sd = self.sigma() / (1.0 - self.phi() * self.phi()).sqrt();
        Ok(gaussian_integral(self, sd, |x| self.initial_log_density(x).exp(), f))
    }
}

/// Asymptotic variance `Γ_{0:T|T}[S_{T,0}]` of the bootstrap path-space
/// estimator when the kernel does not depend on the source state.
///
/// With `ν_0 = χ`, `ν_t = m` for `t ≥ 1`, `h̄_t = h_t − φ_t(h_t)` and
/// `φ_t(f) = ν_t(g_t f)/ν_t(g_t)`:
///
/// `Γ = Σ_{t=0}^{T} [ ν_t(g_t²)/ν_t(g_t)² · Σ_{s<t} φ_s(h̄_s²) + ν_t(g_t² h̄_t²)/ν_t(g_t)² ]`,
///
/// where the inner sum is empty at `t = 0`.
pub fn path_space_asymptotic_variance<M: KernelIntegrals>(
    model: &M,
    functional: &AdditiveFunctional<M::State>,
) -> Result<f64> {
    require_independent(model)?;
    if functional.lag() != 0 {
        return Err(Error::UnsupportedLag(functional.lag()));
    }
    let horizon = functional.horizon();
    if horizon > model.horizon() {
        return Err(Error::Mismatch("functional horizon exceeds the model's observations".into()));
    }
    let mut accumulated_centered = 0.0;
    let mut gamma = 0.0;
    for t in 0..=horizon {
        let g = |x: M::State| model.observation_log_density(t, x).exp();
        let h = |x: M::State| functional.term(t, &[x]);
        let integrate = |f: &dyn Fn(M::State) -> f64| {
            if t == 0 {
                model.integrate_initial(f)
            } else {
                model.integrate_kernel(f)
            }
        };
        let mass = integrate(&|x| g(x))?;
        let filtered_mean = integrate(&|x| g(x) * h(x))? / mass;
        let centered_sq = |x: M::State| {
            let d = h(x) - filtered_mean;
            d * d
        };
        let second_moment = integrate(&|x| g(x) * g(x))? / (mass * mass);
        let own = integrate(&|x| g(x) * g(x) * centered_sq(x))? / (mass * mass);
        gamma += second_moment * accumulated_centered + own;
        accumulated_centered += integrate(&|x| g(x) * centered_sq(x))? / mass;
    }
    Ok(gamma)
}
