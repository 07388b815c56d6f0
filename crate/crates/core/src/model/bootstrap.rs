use rand::Rng;

use super::{AuxiliaryProposal, StateSpaceModel};

/// Bootstrap proposal: `p_t = m`, `ϑ_t ≡ 1`, `ρ₀ = χ`.
#[derive(Debug)]
pub struct Bootstrap<'a, M> {
    model: &'a M,
}

impl<M> Clone for Bootstrap<'_, M> {
    fn clone(&self) -> Self {
        *self
    }
}

impl<M> Copy for Bootstrap<'_, M> {}

pub fn bootstrap_proposal<M: StateSpaceModel>(model: &M) -> Bootstrap<'_, M> {
    Bootstrap { model }
}

impl<M: StateSpaceModel> AuxiliaryProposal<M::State> for Bootstrap<'_, M> {
    fn adjustment_log_weight(&self, _t: usize, _x: M::State) -> f64 {
        0.0
    }

    fn proposal_log_density(&self, _t: usize, x: M::State, x_next: M::State) -> f64 {
        self.model.transition_log_density(x, x_next)
    }

    fn sample_proposal<R: Rng + ?Sized>(&self, _t: usize, x: M::State, rng: &mut R) -> M::State {
        self.model.sample_transition(x, rng)
    }

    fn initial_instrumental_log_density(&self, x: M::State) -> f64 {
        self.model.initial_log_density(x)
    }

    fn sample_initial_instrumental<R: Rng + ?Sized>(&self, rng: &mut R) -> M::State {
        self.model.sample_initial(rng)
    }
}

/// `log ω₀(x) = log dχ/dρ₀(x) + log g₀(x)`.
pub fn log_initial_weight<M, P>(model: &M, proposal: &P, x: M::State) -> f64
where
    M: StateSpaceModel,
    P: AuxiliaryProposal<M::State>,
{
    let ratio = model.initial_log_density(x) - proposal.initial_instrumental_log_density(x);
    model.observation_log_density(0, x) + ratio
}

/// `log ω_t(x, x′) = log m(x, x′) + log g_t(x′) − log ϑ_t(x) − log p_t(x, x′)`.
///
/// The kernel ratio is formed first so that `p = m` cancels exactly.
pub fn log_incremental_weight<M, P>(
    model: &M,
    proposal: &P,
    t: usize,
    x: M::State,
    x_next: M::State,
) -> f64
where
    M: StateSpaceModel,
    P: AuxiliaryProposal<M::State>,
{
    let kernel_ratio =
        model.transition_log_density(x, x_next) - proposal.proposal_log_density(t, x, x_next);
    model.observation_log_density(t, x_next) + kernel_ratio - proposal.adjustment_log_weight(t, x)
}
