//! State-space models, auxiliary proposals and additive functionals.
//!
//! All densities are natural-log values with respect to one reference
//! measure per model: Lebesgue measure for the Gaussian models, counting
//! measure for finite chains. Observations are bound into a model when it is
//! built, so `observation_log_density(t, x)` is `log g(x, y_t)`.

mod bootstrap;
mod finite;
mod functional;
mod gaussian;
pub mod simulate;

use std::fmt::Debug;

use rand::Rng;

use crate::error::{Error, Result};

pub use bootstrap::{bootstrap_proposal, log_incremental_weight, log_initial_weight, Bootstrap};
pub use finite::{make_finite_hmm, make_independent_hmm, FiniteHmm};
pub use functional::AdditiveFunctional;
pub use gaussian::{make_lgm, make_svm, LinearGaussian, StochasticVolatility};

/// A particle state. Continuous models use `f64`, finite chains `usize`.
pub trait StateValue: Copy + Debug + PartialEq + Send + Sync + 'static {
    /// Real value used by additive functionals and CSV dumps.
    fn value(&self) -> f64;
}

impl StateValue for f64 {
    fn value(&self) -> f64 {
        *self
    }
}

impl StateValue for usize {
    fn value(&self) -> f64 {
        *self as f64
    }
}

/// Strong mixing constants: `σ₋ ≤ m(x, x′) ≤ σ₊` and `∫ M(x, dx′) g_t(x′) ≥ c₋`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MixingBounds {
    pub sigma_minus: f64,
    pub sigma_plus: f64,
    pub c_minus: f64,
}

impl MixingBounds {
    /// Requires `0 < σ₋ ≤ σ₊` and `c₋ > 0`. Equality is allowed so that
    /// constant kernels (including single-state chains) are representable.
    pub fn new(sigma_minus: f64, sigma_plus: f64, c_minus: f64) -> Result<Self> {
        let finite = sigma_minus.is_finite() && sigma_plus.is_finite() && c_minus.is_finite();
        if !finite || sigma_minus <= 0.0 || sigma_plus < sigma_minus || c_minus <= 0.0 {
            return Err(Error::InvalidParameter(format!(
                "mixing bounds need 0 < sigma_minus <= sigma_plus and c_minus > 0, \
                 got ({sigma_minus}, {sigma_plus}, {c_minus})"
            )));
        }
        Ok(MixingBounds {
            sigma_minus,
            sigma_plus,
            c_minus,
        })
    }

    /// `ρ = 1 − σ₋/σ₊`.
    pub fn rho(&self) -> f64 {
        1.0 - self.sigma_minus / self.sigma_plus
    }
}

/// Hidden Markov model with observations `y_0..=y_T` already bound in.
///
/// Implementations are immutable; samplers draw from the caller's generator.
pub trait StateSpaceModel: Send + Sync {
    type State: StateValue;

    /// Index `T` of the last observation.
    fn horizon(&self) -> usize;

    fn sample_initial<R: Rng + ?Sized>(&self, rng: &mut R) -> Self::State;

    /// `log dχ/dλ(x)`.
    fn initial_log_density(&self, x: Self::State) -> f64;

    /// `log m(x, x′)`.
    fn transition_log_density(&self, x: Self::State, x_next: Self::State) -> f64;

    fn sample_transition<R: Rng + ?Sized>(&self, x: Self::State, rng: &mut R) -> Self::State;

    /// `log g_t(x)`.
    fn observation_log_density(&self, t: usize, x: Self::State) -> f64;

    fn mixing_bounds(&self) -> Option<&MixingBounds> {
        None
    }

    /// True when `m(x, x′)` does not depend on `x`.
    fn independent_kernel(&self) -> bool {
        false
    }

    /// Small-integer label of a state on a finite space. Two states with the
    /// same label are interchangeable in every density, which lets the
    /// smoothers reuse backward-kernel rows.
    fn state_class(&self, _x: Self::State) -> Option<usize> {
        None
    }
}

/// Auxiliary particle filter ingredients: adjustment multipliers `ϑ_t`,
/// proposal kernels `p_t` and the initial instrumental law `ρ₀`.
///
/// The proposal must charge every point where `m(x, ·) g_t(·)` is positive.
pub trait AuxiliaryProposal<S: StateValue>: Send + Sync {
    /// `log ϑ_t(x)`.
    fn adjustment_log_weight(&self, t: usize, x: S) -> f64;

    /// `log p_t(x, x′)`.
    fn proposal_log_density(&self, t: usize, x: S, x_next: S) -> f64;

    fn sample_proposal<R: Rng + ?Sized>(&self, t: usize, x: S, rng: &mut R) -> S;

    /// `log dρ₀/dλ(x)`.
    fn initial_instrumental_log_density(&self, x: S) -> f64;

    fn sample_initial_instrumental<R: Rng + ?Sized>(&self, rng: &mut R) -> S;
}
