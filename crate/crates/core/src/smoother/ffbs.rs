use std::collections::btree_map::{BTreeMap, Entry};

use super::{backward_log_row, backward_row_into, check_functional_horizon, target_groups, Method, SmoothingEstimate};
use crate::error::{Error, Result};
use crate::filter::ParticleHistory;
use crate::model::{AdditiveFunctional, StateSpaceModel};
use crate::numeric::normalize_log_weights_into;

/// FFBS estimate of `φ_{0:T|T}[S_{T,r}]` by a backward pass over the stored history.
///
/// The backward chain starts from the normalized final weights; its marginal
/// at each `t` is pushed one step back through `Λ_{t−1}`. Term `h_t` is
/// averaged over the joint law of `(J_{t−r}, …, J_t)`. For `r ≤ 1` no
/// backward matrix is materialized; larger lags enumerate index blocks of
/// size `N^{r+1}` and are meant for small problems.
pub fn ffbs_backward_additive<M: StateSpaceModel>(
    history: &ParticleHistory<M::State>,
    model: &M,
    functional: &AdditiveFunctional<M::State>,
) -> Result<SmoothingEstimate> {
    let horizon = history.horizon();
    let lag = functional.lag();
    check_functional_horizon(horizon, functional.horizon(), lag)?;
    let value = if lag <= 1 {
        backward_low_lag(history, model, functional)?
    } else {
        backward_enumerated(history, model, functional)?
    };
    Ok(SmoothingEstimate::new(Method::FfbsBackward, value, history.n_particles(), horizon, lag))
}

fn backward_low_lag<M: StateSpaceModel>(
    history: &ParticleHistory<M::State>,
    model: &M,
    functional: &AdditiveFunctional<M::State>,
) -> Result<f64> {
    let n = history.n_particles();
    let lag = functional.lag();
    let mut marginal = history.normalized_weights(history.horizon())?;
    let mut next = vec![0.0; n];
    let (mut scratch, mut row) = (Vec::with_capacity(n), Vec::with_capacity(n));
    let mut total = 0.0;
    for t in (0..=history.horizon()).rev() {
        if lag == 0 {
            total += history
                .positions(t)
                .iter()
                .zip(&marginal)
                .map(|(&x, &p)| if p > 0.0 { p * functional.term(t, &[x]) } else { 0.0 })
                .sum::<f64>();
        }
        if t == 0 {
            break;
        }
        let prev_x = history.positions(t - 1);
        next.iter_mut().for_each(|v| *v = 0.0);
        for (rep, members) in target_groups(model, history.positions(t)) {
            let mass: f64 = members.iter().map(|&i| marginal[i]).sum();
            if mass == 0.0 {
                continue;
            }
            backward_row_into(history, model, t - 1, rep, &mut scratch, &mut row)?;
            for (acc, &p) in next.iter_mut().zip(&row) {
                *acc += mass * p;
            }
            if lag == 1 {
                let x_t = history.positions(t)[rep];
                let expected: f64 = row
                    .iter()
                    .zip(prev_x)
                    .map(|(&p, &xj)| if p > 0.0 { p * functional.term(t, &[xj, x_t]) } else { 0.0 })
                    .sum();
                total += mass * expected;
            }
        }
        std::mem::swap(&mut marginal, &mut next);
    }
    Ok(total)
}

/// Dense `Λ_u`, row-major: entry `(i, j)` at `i·N + j`.
fn backward_matrix<M: StateSpaceModel>(history: &ParticleHistory<M::State>, model: &M, u: usize) -> Result<Vec<f64>> {
    let n = history.n_particles();
    let mut matrix = Vec::with_capacity(n * n);
    let (mut scratch, mut row) = (Vec::with_capacity(n), Vec::with_capacity(n));
    for i in 0..n {
        backward_row_into(history, model, u, i, &mut scratch, &mut row)?;
        matrix.extend_from_slice(&row);
    }
    Ok(matrix)
}

fn backward_enumerated<M: StateSpaceModel>(
    history: &ParticleHistory<M::State>,
    model: &M,
    functional: &AdditiveFunctional<M::State>,
) -> Result<f64> {
    let n = history.n_particles();
    let lag = functional.lag();
    let mut matrices: BTreeMap<usize, Vec<f64>> = BTreeMap::new();
    let mut marginal = history.normalized_weights(history.horizon())?;
    let mut window = Vec::with_capacity(lag + 1);
    let mut total = 0.0;
    for t in (0..=history.horizon()).rev() {
        for u in t.saturating_sub(lag)..t {
            if let Entry::Vacant(slot) = matrices.entry(u) {
                slot.insert(backward_matrix(history, model, u)?);
            }
        }
        if t >= lag {
            let ctx = WindowCtx { history, functional, matrices: &matrices, n, t, lag };
            for (i, &p) in marginal.iter().enumerate() {
                if p > 0.0 {
                    window.clear();
                    window.push(history.positions(t)[i]);
                    total += p * ctx.expect(1, i, &mut window);
                }
            }
        }
        if t == 0 {
            break;
        }
        let lambda = &matrices[&(t - 1)];
        let mut next = vec![0.0; n];
        for (i, &p) in marginal.iter().enumerate() {
            if p > 0.0 {
                for (acc, &l) in next.iter_mut().zip(&lambda[i * n..(i + 1) * n]) {
                    *acc += p * l;
                }
            }
        }
        marginal = next;
        matrices.retain(|&u, _| u + 1 < t);
    }
    Ok(total)
}

struct WindowCtx<'a, S: crate::model::StateValue> {
    history: &'a ParticleHistory<S>,
    functional: &'a AdditiveFunctional<S>,
    matrices: &'a BTreeMap<usize, Vec<f64>>,
    n: usize,
    t: usize,
    lag: usize,
}

impl<S: crate::model::StateValue> WindowCtx<'_, S> {
    /// Expectation of `h_t` given the states already fixed at depths `< depth`
    /// (stored newest first in `window`), with `upper` the index at depth − 1.
    fn expect(&self, depth: usize, upper: usize, window: &mut Vec<S>) -> f64 {
        if depth > self.lag {
            let ordered: Vec<S> = window.iter().rev().copied().collect();
            return self.functional.term(self.t, &ordered);
        }
        let u = self.t - depth;
        let row = &self.matrices[&u][upper * self.n..(upper + 1) * self.n];
        let mut acc = 0.0;
        for (j, &p) in row.iter().enumerate() {
            if p > 0.0 {
                window.push(self.history.positions(u)[j]);
                acc += p * self.expect(depth + 1, j, window);
                window.pop();
            }
        }
        acc
    }
}

/// Forward-only FFBS recursion for lags 0 and 1.
///
/// Holds one statistic per particle, `τ_t^i = E[S_{t,r} | J_t = i]` under
/// the backward chain of the particles seen so far, updated by
/// `τ_t^i = Σ_j Λ_{t−1}(i, j) (τ_{t−1}^j + h_t(x_{t−1}^j, x_t^i))` (lag 1) or
/// `τ_t^i = Σ_j Λ_{t−1}(i, j) τ_{t−1}^j + h_t(x_t^i)` (lag 0).
#[derive(Debug, Clone)]
pub struct ForwardAdditiveSmoother<S> {
    functional: AdditiveFunctional<S>,
    tau: Vec<f64>,
    t: usize,
}

impl<S: crate::model::StateValue> ForwardAdditiveSmoother<S> {
    pub fn new(functional: AdditiveFunctional<S>, initial_positions: &[S]) -> Result<Self> {
        let tau = match functional.lag() {
            0 => initial_positions.iter().map(|&x| functional.term(0, &[x])).collect(),
            1 => vec![0.0; initial_positions.len()],
            r => return Err(Error::UnsupportedLag(r)),
        };
        Ok(ForwardAdditiveSmoother { functional, tau, t: 0 })
    }

    pub fn time(&self) -> usize {
        self.t
    }

    pub fn statistics(&self) -> &[f64] {
        &self.tau
    }

    /// Folds in step `t + 1` given the previous cloud and the new positions.
    pub fn advance<M: StateSpaceModel<State = S>>(
        &mut self,
        model: &M,
        prev_positions: &[S],
        prev_log_weights: &[f64],
        positions: &[S],
    ) -> Result<()> {
        let t = self.t + 1;
        if t > self.functional.horizon() {
            return Err(Error::OutOfRange { what: "time", index: t, bound: self.functional.horizon() + 1 });
        }
        let n = prev_positions.len();
        let mut next = vec![0.0; positions.len()];
        let (mut scratch, mut row) = (Vec::with_capacity(n), Vec::with_capacity(n));
        for (rep, members) in target_groups(model, positions) {
            let x_t = positions[rep];
            backward_log_row(model, prev_positions, prev_log_weights, x_t, &mut scratch);
            if !normalize_log_weights_into(&scratch, &mut row) {
                return Err(Error::DegenerateTransition { t: t - 1, i: rep });
            }
            let value = match self.functional.lag() {
                0 => {
                    let carried: f64 = row.iter().zip(&self.tau).map(|(&p, &tau)| if p > 0.0 { p * tau } else { 0.0 }).sum();
                    carried + self.functional.term(t, &[x_t])
                }
                _ => row
                    .iter()
                    .zip(&self.tau)
                    .zip(prev_positions)
                    .map(|((&p, &tau), &xj)| if p > 0.0 { p * (tau + self.functional.term(t, &[xj, x_t])) } else { 0.0 })
                    .sum(),
            };
            for i in members {
                next[i] = value;
            }
        }
        self.tau = next;
        self.t = t;
        Ok(())
    }

    /// `Σ_i w̄_t^i τ_t^i` for the current step's log-weights.
    pub fn estimate(&self, log_weights: &[f64]) -> Result<f64> {
        let mut w = Vec::with_capacity(log_weights.len());
        if !normalize_log_weights_into(log_weights, &mut w) {
            return Err(Error::FilterDegeneracy { t: self.t });
        }
        Ok(w.iter().zip(&self.tau).map(|(&p, &tau)| p * tau).sum())
    }
}

/// FFBS estimate through the forward-only recursion; lags 0 and 1 only.
pub fn ffbs_forward_additive<M: StateSpaceModel>(
    history: &ParticleHistory<M::State>,
    model: &M,
    functional: &AdditiveFunctional<M::State>,
) -> Result<SmoothingEstimate> {
    let horizon = history.horizon();
    let lag = functional.lag();
    if lag >= 2 {
        return Err(Error::UnsupportedLag(lag));
    }
    check_functional_horizon(horizon, functional.horizon(), lag)?;
    let mut smoother = ForwardAdditiveSmoother::new(functional.clone(), history.positions(0))?;
    for t in 1..=horizon {
        smoother.advance(model, history.positions(t - 1), history.log_weights(t - 1), history.positions(t))?;
    }
    let value = smoother.estimate(history.log_weights(horizon))?;
    Ok(SmoothingEstimate::new(Method::FfbsForward, value, history.n_particles(), horizon, lag))
}
