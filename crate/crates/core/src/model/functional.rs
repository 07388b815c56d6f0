use std::fmt;
use std::sync::Arc;

use super::StateValue;
use crate::error::{Error, Result};

type Term<S> = Arc<dyn Fn(usize, &[S]) -> f64 + Send + Sync>;

/// `S_{T,r}(x_{0:T}) = Σ_{t=r}^{T} h_t(x_{t−r:t})`.
///
/// Each term receives `t` and the window `x_{t−r..=t}`, oldest state first.
#[derive(Clone)]
pub struct AdditiveFunctional<S> {
    lag: usize,
    horizon: usize,
    term: Term<S>,
    oscillation: Option<Vec<f64>>,
}

impl<S> fmt::Debug for AdditiveFunctional<S> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("AdditiveFunctional")
            .field("lag", &self.lag)
            .field("horizon", &self.horizon)
            .field("oscillation", &self.oscillation)
            .finish_non_exhaustive()
    }
}

impl<S: StateValue> AdditiveFunctional<S> {
    pub fn new<F>(lag: usize, horizon: usize, term: F) -> Result<Self>
    where
        F: Fn(usize, &[S]) -> f64 + Send + Sync + 'static,
    {
        if lag > horizon {
            return Err(Error::InvalidParameter(format!("lag r = {lag} exceeds horizon T = {horizon}")));
        }
        Ok(AdditiveFunctional {
            lag,
            horizon,
            term: Arc::new(term),
            oscillation: None,
        })
    }

    /// `h_t(x) = x`, i.e. `I_T = Σ_t x_t`.
    pub fn state_sum(horizon: usize) -> Self {
        Self::new(0, horizon, |_, w: &[S]| w[0].value()).expect("lag 0")
    }

    /// `h_t(x_{t−1}, x_t) = x_{t−1} x_t`.
    pub fn lag_product(horizon: usize) -> Result<Self> {
        Self::new(1, horizon, |_, w: &[S]| w[0].value() * w[1].value())
    }

    /// `h_t ≡ c`.
    pub fn constant(c: f64, lag: usize, horizon: usize) -> Result<Self> {
        Self::new(lag, horizon, move |_, _: &[S]| c)?.with_oscillation(vec![0.0; horizon - lag + 1])
    }

    /// Declares `osc(h_t)` for `t = r..=T`; only used by bound overlays.
    pub fn with_oscillation(mut self, osc: Vec<f64>) -> Result<Self> {
        if osc.len() != self.n_terms() {
            return Err(Error::Mismatch(format!(
                "{} oscillation bounds for {} terms",
                osc.len(),
                self.n_terms()
            )));
        }
        if osc.iter().any(|o| !(o.is_finite() && *o >= 0.0)) {
            return Err(Error::InvalidParameter("oscillation bounds must be finite and nonnegative".into()));
        }
        self.oscillation = Some(osc);
        Ok(self)
    }

    pub fn lag(&self) -> usize {
        self.lag
    }

    pub fn horizon(&self) -> usize {
        self.horizon
    }

    pub fn n_terms(&self) -> usize {
        self.horizon - self.lag + 1
    }

    pub fn oscillation(&self) -> Option<&[f64]> {
        self.oscillation.as_deref()
    }

    /// `h_t(window)`; `window.len()` must be `r + 1`.
    #[inline]
    pub fn term(&self, t: usize, window: &[S]) -> f64 {
        debug_assert!(t >= self.lag && t <= self.horizon);
        debug_assert_eq!(window.len(), self.lag + 1);
        (self.term)(t, window)
    }

    /// `S_{T,r}` along a full path `x_{0:T}`.
    pub fn evaluate_path(&self, path: &[S]) -> f64 {
        debug_assert_eq!(path.len(), self.horizon + 1);
        (self.lag..=self.horizon)
            .map(|t| self.term(t, &path[t - self.lag..=t]))
            .sum()
    }
}
