use rand::Rng;

use super::{backward_log_row, check_functional_horizon, Method, SmoothingEstimate};
use crate::error::{Error, Result};
use crate::filter::ParticleHistory;
use crate::model::{AdditiveFunctional, MixingBounds, StateSpaceModel, StateValue};
use crate::numeric::Categorical;

/// Index paths `J_{0:T}` drawn backward through the particle history.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Trajectories {
    /// `indices[t][ℓ]` is `J_t^ℓ`.
    indices: Vec<Vec<usize>>,
}

impl Trajectories {
    pub fn n_paths(&self) -> usize {
        self.indices.first().map_or(0, Vec::len)
    }

    pub fn horizon(&self) -> usize {
        self.indices.len() - 1
    }

    /// `J_t^ℓ` for every path `ℓ`.
    pub fn at(&self, t: usize) -> &[usize] {
        &self.indices[t]
    }

    /// `(J_0^ℓ, …, J_T^ℓ)`.
    pub fn path(&self, l: usize) -> Vec<usize> {
        self.indices.iter().map(|step| step[l]).collect()
    }

    fn check_against<S>(&self, history: &ParticleHistory<S>) -> Result<()>
    where
        S: StateValue,
    {
        if self.indices.len() != history.horizon() + 1 {
            return Err(Error::Mismatch(format!(
                "trajectories span {} steps, history spans {}",
                self.indices.len(),
                history.horizon() + 1
            )));
        }
        let n = history.n_particles();
        if self.indices.iter().flatten().any(|&j| j >= n) {
            return Err(Error::Mismatch(format!("trajectory index outside 0..{n}")));
        }
        Ok(())
    }

    /// `S_{T,r}` evaluated along every path.
    pub fn path_values<S: StateValue>(
        &self,
        history: &ParticleHistory<S>,
        functional: &AdditiveFunctional<S>,
    ) -> Result<Vec<f64>> {
        self.check_against(history)?;
        check_functional_horizon(history.horizon(), functional.horizon(), functional.lag())?;
        let mut path = Vec::with_capacity(history.horizon() + 1);
        Ok((0..self.n_paths())
            .map(|l| {
                path.clear();
                path.extend(self.indices.iter().enumerate().map(|(t, step)| history.positions(t)[step[l]]));
                functional.evaluate_path(&path)
            })
            .collect())
    }
}

fn final_indices<S: StateValue, R: Rng + ?Sized>(history: &ParticleHistory<S>, n_paths: usize, rng: &mut R) -> Result<Vec<usize>> {
    let horizon = history.horizon();
    let last = Categorical::from_log_weights(history.log_weights(horizon)).ok_or(Error::FilterDegeneracy { t: horizon })?;
    Ok((0..n_paths).map(|_| last.sample(rng)).collect())
}

fn check_paths(n_paths: usize) -> Result<()> {
    if n_paths == 0 {
        Err(Error::InvalidParameter("n_paths must be at least 1".into()))
    } else {
        Ok(())
    }
}

/// Draws `n_paths` conditionally independent backward paths: `J_T` from the
/// final weights, then `J_t ~ Λ_t(J_{t+1}, ·)`.
///
/// Paths whose `J_{t+1}` point at interchangeable particles share one row
/// computation; draws are made in (row group, path) order.
pub fn ffbsi_sample_paths<M: StateSpaceModel, R: Rng + ?Sized>(
    history: &ParticleHistory<M::State>,
    model: &M,
    n_paths: usize,
    rng: &mut R,
) -> Result<Trajectories> {
    check_paths(n_paths)?;
    let horizon = history.horizon();
    let mut indices = vec![Vec::new(); horizon + 1];
    indices[horizon] = final_indices(history, n_paths, rng)?;

    let mut order: Vec<usize> = (0..n_paths).collect();
    let mut keys = vec![0usize; n_paths];
    let mut scratch = Vec::with_capacity(history.n_particles());
    let mut row = Categorical::empty();
    for t in (0..horizon).rev() {
        let upper = &indices[t + 1];
        let x_next = history.positions(t + 1);
        for (key, &j) in keys.iter_mut().zip(upper) {
            *key = model.state_class(x_next[j]).unwrap_or(j);
        }
        order.sort_by_key(|&l| keys[l]);
        let mut current = vec![0usize; n_paths];
        let mut start = 0;
        while start < n_paths {
            let key = keys[order[start]];
            let end = start + order[start..].iter().take_while(|&&l| keys[l] == key).count();
            let target_index = upper[order[start]];
            backward_log_row(model, history.positions(t), history.log_weights(t), x_next[target_index], &mut scratch);
            if !row.rebuild_from_log_weights(&scratch) {
                return Err(Error::DegenerateTransition { t, i: target_index });
            }
            for &l in &order[start..end] {
                current[l] = row.sample(rng);
            }
            start = end;
        }
        indices[t] = current;
        order.sort_unstable();
    }
    Ok(Trajectories { indices })
}

/// Proposal accounting for the rejection sampler.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct RejectionStats {
    pub proposals: u64,
    pub acceptances: u64,
    /// Indices that exhausted their proposal budget and were drawn exactly.
    pub fallbacks: u64,
}

impl RejectionStats {
    pub fn acceptance_rate(&self) -> f64 {
        self.acceptances as f64 / self.proposals as f64
    }
}

/// `100 · ⌈σ₊/σ₋⌉` proposals per index.
pub fn default_max_rejections(bounds: &MixingBounds) -> usize {
    100 * (bounds.sigma_plus / bounds.sigma_minus).ceil() as usize
}

/// Backward simulation by accept-reject: propose `j` from the filter weights
/// at `t`, accept with probability `m(x_t^j, x_{t+1}^{J_{t+1}}) / σ₊`.
///
/// After `max_rejections` refused proposals for one index, that index is
/// drawn from its exact backward row instead, which keeps the law unchanged.
pub fn ffbsi_rejection_sample_paths<M: StateSpaceModel, R: Rng + ?Sized>(
    history: &ParticleHistory<M::State>,
    model: &M,
    n_paths: usize,
    max_rejections: usize,
    rng: &mut R,
) -> Result<(Trajectories, RejectionStats)> {
    let bounds = model
        .mixing_bounds()
        .ok_or_else(|| Error::UnsupportedModel("rejection sampling needs mixing bounds (sigma_plus)".into()))?;
    check_paths(n_paths)?;
    if max_rejections == 0 {
        return Err(Error::InvalidParameter("max_rejections must be at least 1".into()));
    }
    let log_sigma_plus = bounds.sigma_plus.ln();
    let horizon = history.horizon();
    let mut stats = RejectionStats::default();
    let mut indices = vec![Vec::new(); horizon + 1];
    indices[horizon] = final_indices(history, n_paths, rng)?;

    let mut scratch = Vec::with_capacity(history.n_particles());
    let mut exact = Categorical::empty();
    for t in (0..horizon).rev() {
        let xs = history.positions(t);
        let filter = Categorical::from_log_weights(history.log_weights(t)).ok_or(Error::FilterDegeneracy { t })?;
        let x_next = history.positions(t + 1);
        let mut current = Vec::with_capacity(n_paths);
        for &upper in &indices[t + 1] {
            let target = x_next[upper];
            let mut chosen = None;
            for _ in 0..max_rejections {
                let j = filter.sample(rng);
                let u: f64 = rng.random();
                stats.proposals += 1;
                let log_ratio = model.transition_log_density(xs[j], target) - log_sigma_plus;
                debug_assert!(log_ratio <= 1e-12, "kernel exceeds declared sigma_plus");
                if u < log_ratio.exp() {
                    stats.acceptances += 1;
                    chosen = Some(j);
                    break;
                }
            }
            let j = match chosen {
                Some(j) => j,
                None => {
                    stats.fallbacks += 1;
                    backward_log_row(model, xs, history.log_weights(t), target, &mut scratch);
                    if !exact.rebuild_from_log_weights(&scratch) {
                        return Err(Error::DegenerateTransition { t, i: upper });
                    }
                    exact.sample(rng)
                }
            };
            current.push(j);
        }
        indices[t] = current;
    }
    Ok((Trajectories { indices }, stats))
}

/// `N_paths⁻¹ Σ_ℓ S_{T,r}(x_0^{J_0^ℓ}, …, x_T^{J_T^ℓ})`.
pub fn ffbsi_estimate<S: StateValue>(
    trajectories: &Trajectories,
    history: &ParticleHistory<S>,
    functional: &AdditiveFunctional<S>,
) -> Result<SmoothingEstimate> {
    let values = trajectories.path_values(history, functional)?;
    let value = values.iter().sum::<f64>() / values.len() as f64;
    Ok(SmoothingEstimate::new(
        Method::FfbsiDirect,
        value,
        history.n_particles(),
        history.horizon(),
        functional.lag(),
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::filter::run_filter;
    use crate::model::{bootstrap_proposal, make_finite_hmm, make_lgm};
    use crate::rng::stream;

    #[test]
    fn single_particle_paths_are_zero() {
        let model = make_lgm(0.9, 0.6, 1.0, vec![0.1; 5]).unwrap();
        let h = run_filter(&model, &bootstrap_proposal(&model), 1, 4, &mut stream(1)).unwrap();
        let tr = ffbsi_sample_paths(&h, &model, 10, &mut stream(2)).unwrap();
        assert!((0..=4).all(|t| tr.at(t).iter().all(|&j| j == 0)));
    }

    #[test]
    fn constant_functional_is_exact() {
        let model = make_lgm(0.9, 0.6, 1.0, vec![0.1; 9]).unwrap();
        let h = run_filter(&model, &bootstrap_proposal(&model), 20, 8, &mut stream(3)).unwrap();
        let tr = ffbsi_sample_paths(&h, &model, 7, &mut stream(4)).unwrap();
        let f = AdditiveFunctional::constant(-0.5, 2, 8).unwrap();
        assert!((ffbsi_estimate(&tr, &h, &f).unwrap().value - (-0.5 * 7.0)).abs() < 1e-12);
    }

    #[test]
    fn single_path_sums_positions() {
        let model = make_lgm(0.9, 0.6, 1.0, vec![0.4; 6]).unwrap();
        let h = run_filter(&model, &bootstrap_proposal(&model), 15, 5, &mut stream(5)).unwrap();
        let tr = ffbsi_sample_paths(&h, &model, 1, &mut stream(6)).unwrap();
        let expected: f64 = tr.path(0).iter().enumerate().map(|(t, &j)| h.positions(t)[j]).sum();
        let e = ffbsi_estimate(&tr, &h, &AdditiveFunctional::state_sum(5)).unwrap();
        assert!((e.value - expected).abs() < 1e-12);
    }

    #[test]
    fn rejection_requires_bounds() {
        let model = make_lgm(0.9, 0.6, 1.0, vec![0.4; 3]).unwrap();
        let h = run_filter(&model, &bootstrap_proposal(&model), 5, 2, &mut stream(5)).unwrap();
        let err = ffbsi_rejection_sample_paths(&h, &model, 3, 10, &mut stream(1)).unwrap_err();
        assert!(matches!(err, Error::UnsupportedModel(_)));
    }

    #[test]
    fn constant_kernel_accepts_everything() {
        let model = make_finite_hmm(&[vec![0.5, 0.5], vec![0.5, 0.5]], |t, k| 1.0 + (t + k) as f64, &[0.5, 0.5], 4).unwrap();
        let h = run_filter(&model, &bootstrap_proposal(&model), 10, 4, &mut stream(7)).unwrap();
        let (_, stats) = ffbsi_rejection_sample_paths(&h, &model, 50, 10, &mut stream(8)).unwrap();
        assert_eq!(stats.proposals, stats.acceptances);
        assert_eq!(stats.proposals, 50 * 4);
        assert_eq!(stats.fallbacks, 0);
    }

    #[test]
    fn fallback_terminates() {
        let model = make_finite_hmm(&[vec![0.99, 0.01], vec![0.01, 0.99]], |_, _| 1.0, &[0.5, 0.5], 3).unwrap();
        let h = run_filter(&model, &bootstrap_proposal(&model), 10, 3, &mut stream(9)).unwrap();
        let (tr, stats) = ffbsi_rejection_sample_paths(&h, &model, 100, 1, &mut stream(1)).unwrap();
        assert!(stats.fallbacks > 0);
        assert_eq!(tr.n_paths(), 100);
        assert_eq!(default_max_rejections(model.mixing_bounds().unwrap()), 9900);
    }

    #[test]
    fn trajectory_history_mismatch() {
        let model = make_lgm(0.9, 0.6, 1.0, vec![0.4; 6]).unwrap();
        let h = run_filter(&model, &bootstrap_proposal(&model), 15, 5, &mut stream(5)).unwrap();
        let short = run_filter(&model, &bootstrap_proposal(&model), 15, 3, &mut stream(5)).unwrap();
        let tr = ffbsi_sample_paths(&short, &model, 4, &mut stream(6)).unwrap();
        assert!(matches!(ffbsi_estimate(&tr, &h, &AdditiveFunctional::state_sum(5)), Err(Error::Mismatch(_))));
    }
}
