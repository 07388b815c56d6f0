use rand::Rng;

use super::{check_functional_horizon, Method, SmoothingEstimate};
use crate::error::{Error, Result};
use crate::filter::{run_filter, ParticleHistory};
use crate::model::{AdditiveFunctional, AuxiliaryProposal, StateSpaceModel, StateValue};

/// Path-space estimate: each particle carries the running sum of `h_t`
/// along its own genealogy, and the final weights average those sums.
pub fn path_space_from_history<S: StateValue>(
    history: &ParticleHistory<S>,
    functional: &AdditiveFunctional<S>,
) -> Result<SmoothingEstimate> {
    let horizon = history.horizon();
    let lag = functional.lag();
    check_functional_horizon(horizon, functional.horizon(), lag)?;
    let n = history.n_particles();
    let width = lag + 1;

    // windows hold the last `lag + 1` ancestral states of each particle, oldest first
    let mut windows: Vec<S> = Vec::with_capacity(n * width);
    let mut sums = vec![0.0; n];
    for &x in history.positions(0) {
        windows.extend(std::iter::repeat_n(x, width));
    }
    if lag == 0 {
        for (s, w) in sums.iter_mut().zip(windows.chunks_exact(width)) {
            *s = functional.term(0, w);
        }
    }
    let mut next_windows = windows.clone();
    let mut next_sums = vec![0.0; n];
    for t in 1..=horizon {
        let anc = history.ancestors(t);
        for (l, (&a, &x)) in anc.iter().zip(history.positions(t)).enumerate() {
            let dst = &mut next_windows[l * width..(l + 1) * width];
            dst[..lag].copy_from_slice(&windows[a * width + 1..(a + 1) * width]);
            dst[lag] = x;
            next_sums[l] = sums[a] + if t >= lag { functional.term(t, dst) } else { 0.0 };
        }
        std::mem::swap(&mut windows, &mut next_windows);
        std::mem::swap(&mut sums, &mut next_sums);
    }
    let w = history.normalized_weights(horizon)?;
    let value = w.iter().zip(&sums).map(|(p, s)| p * s).sum();
    Ok(SmoothingEstimate::new(Method::PathSpace, value, n, horizon, lag))
}

/// Runs the filter over the functional's horizon, then the path-space estimate.
pub fn path_space_estimate<M, P, R>(
    model: &M,
    proposal: &P,
    functional: &AdditiveFunctional<M::State>,
    n_particles: usize,
    rng: &mut R,
) -> Result<SmoothingEstimate>
where
    M: StateSpaceModel,
    P: AuxiliaryProposal<M::State>,
    R: Rng + ?Sized,
{
    if functional.horizon() > model.horizon() {
        return Err(Error::Mismatch("functional horizon exceeds the model's observations".into()));
    }
    let history = run_filter(model, proposal, n_particles, functional.horizon(), rng)?;
    path_space_from_history(&history, functional)
}
