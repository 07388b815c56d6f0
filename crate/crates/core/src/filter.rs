//! Auxiliary particle filter.
//!
//! At `t = 0` particles are drawn i.i.d. from `ρ₀` with weight
//! `dχ/dρ₀ · g₀`. At each later step every particle picks an ancestor with
//! probability proportional to `ω_{t−1}^i ϑ_t(x_{t−1}^i)` (multinomial,
//! inverse-CDF), moves through `p_t`, and is weighted by
//! `m g_t / (ϑ_t p_t)`. Resampling happens at every step.

use std::io::Write;

use rand::Rng;

use crate::error::{Error, Result};
use crate::model::{log_incremental_weight, log_initial_weight, AuxiliaryProposal, StateSpaceModel, StateValue};
use crate::numeric::{effective_sample_size, fmt_g17, log_sum_exp, normalize_log_weights, Categorical};

/// Every particle, unnormalized log-weight and ancestor index of a forward pass.
#[derive(Debug, Clone, PartialEq)]
pub struct ParticleHistory<S> {
    positions: Vec<Vec<S>>,
    log_weights: Vec<Vec<f64>>,
    /// `ancestors[t − 1][ℓ]` is `I_t^ℓ`.
    ancestors: Vec<Vec<usize>>,
}

impl<S: StateValue> ParticleHistory<S> {
    /// Assembles a history from raw arrays, checking shapes and index ranges.
    pub fn from_parts(positions: Vec<Vec<S>>, log_weights: Vec<Vec<f64>>, ancestors: Vec<Vec<usize>>) -> Result<Self> {
        let steps = positions.len();
        if steps == 0 {
            return Err(Error::Mismatch("history needs at least one time step".into()));
        }
        let n = positions[0].len();
        if n == 0 {
            return Err(Error::InvalidParameter("history needs at least one particle".into()));
        }
        if log_weights.len() != steps || ancestors.len() + 1 != steps {
            return Err(Error::Mismatch(format!(
                "{} position steps, {} weight steps, {} ancestor steps",
                steps,
                log_weights.len(),
                ancestors.len()
            )));
        }
        let ragged = positions.iter().any(|p| p.len() != n)
            || log_weights.iter().any(|w| w.len() != n)
            || ancestors.iter().any(|a| a.len() != n);
        if ragged {
            return Err(Error::Mismatch(format!("every step must hold exactly {n} particles")));
        }
        if let Some(&bad) = ancestors.iter().flatten().find(|&&a| a >= n) {
            return Err(Error::OutOfRange { what: "ancestor", index: bad, bound: n });
        }
        if let Some(t) = log_weights.iter().position(|w| log_sum_exp(w) == f64::NEG_INFINITY) {
            return Err(Error::FilterDegeneracy { t });
        }
        Ok(ParticleHistory { positions, log_weights, ancestors })
    }

    pub fn n_particles(&self) -> usize {
        self.positions[0].len()
    }

    /// Last time index `T`.
    pub fn horizon(&self) -> usize {
        self.positions.len() - 1
    }

    pub fn positions(&self, t: usize) -> &[S] {
        &self.positions[t]
    }

    pub fn log_weights(&self, t: usize) -> &[f64] {
        &self.log_weights[t]
    }

    /// Ancestor indices `I_t` for `t ∈ 1..=T`.
    pub fn ancestors(&self, t: usize) -> &[usize] {
        assert!(t >= 1, "no ancestors at t = 0");
        &self.ancestors[t - 1]
    }

    fn check_time(&self, t: usize) -> Result<()> {
        if t > self.horizon() {
            Err(Error::OutOfRange { what: "time", index: t, bound: self.horizon() + 1 })
        } else {
            Ok(())
        }
    }

    /// `log Ω_t`.
    pub fn log_total_weight(&self, t: usize) -> Result<f64> {
        self.check_time(t)?;
        Ok(log_sum_exp(&self.log_weights[t]))
    }

    pub fn normalized_weights(&self, t: usize) -> Result<Vec<f64>> {
        self.check_time(t)?;
        normalize_log_weights(&self.log_weights[t]).ok_or(Error::FilterDegeneracy { t })
    }

    /// Self-normalized estimate `Σ_ℓ w̄_t^ℓ f(x_t^ℓ)`.
    pub fn filter_estimate<F: Fn(S) -> f64>(&self, t: usize, f: F) -> Result<f64> {
        let w = self.normalized_weights(t)?;
        Ok(w.iter().zip(&self.positions[t]).map(|(wi, &x)| wi * f(x)).sum())
    }

    pub fn effective_sample_size(&self, t: usize) -> Result<f64> {
        self.check_time(t)?;
        Ok(effective_sample_size(&self.log_weights[t]))
    }

    /// Debug dump: `t,particle,position,log_weight,ancestor` (ancestor empty at `t = 0`).
    pub fn write_csv<W: Write>(&self, mut out: W) -> Result<()> {
        writeln!(out, "t,particle,position,log_weight,ancestor")?;
        for t in 0..=self.horizon() {
            for (l, (x, lw)) in self.positions[t].iter().zip(&self.log_weights[t]).enumerate() {
                let anc = if t == 0 { String::new() } else { self.ancestors[t - 1][l].to_string() };
                writeln!(out, "{t},{l},{},{},{anc}", fmt_g17(x.value()), fmt_g17(*lw))?;
            }
        }
        Ok(())
    }
}

pub fn normalized_weights<S: StateValue>(history: &ParticleHistory<S>, t: usize) -> Result<Vec<f64>> {
    history.normalized_weights(t)
}

pub fn filter_estimate<S: StateValue, F: Fn(S) -> f64>(history: &ParticleHistory<S>, t: usize, f: F) -> Result<f64> {
    history.filter_estimate(t, f)
}

/// Runs the forward pass over `t = 0..=horizon`.
pub fn run_filter<M, P, R>(
    model: &M,
    proposal: &P,
    n_particles: usize,
    horizon: usize,
    rng: &mut R,
) -> Result<ParticleHistory<M::State>>
where
    M: StateSpaceModel,
    P: AuxiliaryProposal<M::State>,
    R: Rng + ?Sized,
{
    if n_particles == 0 {
        return Err(Error::InvalidParameter("n_particles must be at least 1".into()));
    }
    if horizon > model.horizon() {
        return Err(Error::OutOfRange { what: "horizon", index: horizon, bound: model.horizon() + 1 });
    }
    let n = n_particles;
    let mut positions = Vec::with_capacity(horizon + 1);
    let mut log_weights = Vec::with_capacity(horizon + 1);
    let mut ancestors = Vec::with_capacity(horizon);

    let x0: Vec<M::State> = (0..n).map(|_| proposal.sample_initial_instrumental(rng)).collect();
    let w0: Vec<f64> = x0.iter().map(|&x| log_initial_weight(model, proposal, x)).collect();
    if log_sum_exp(&w0) == f64::NEG_INFINITY {
        return Err(Error::FilterDegeneracy { t: 0 });
    }
    positions.push(x0);
    log_weights.push(w0);

    let mut selection = Categorical::empty();
    let mut adjusted = vec![0.0; n];
    for t in 1..=horizon {
        let prev_x = &positions[t - 1];
        let prev_w: &Vec<f64> = &log_weights[t - 1];
        for (a, (&x, &lw)) in adjusted.iter_mut().zip(prev_x.iter().zip(prev_w)) {
            *a = lw + proposal.adjustment_log_weight(t, x);
        }
        if !selection.rebuild_from_log_weights(&adjusted) {
            return Err(Error::FilterDegeneracy { t: t - 1 });
        }
        let mut idx = Vec::with_capacity(n);
        let mut xs = Vec::with_capacity(n);
        let mut ws = Vec::with_capacity(n);
        for _ in 0..n {
            let i = selection.sample(rng);
            let parent = prev_x[i];
            let x = proposal.sample_proposal(t, parent, rng);
            idx.push(i);
            xs.push(x);
            ws.push(log_incremental_weight(model, proposal, t, parent, x));
        }
        if log_sum_exp(&ws) == f64::NEG_INFINITY {
            return Err(Error::FilterDegeneracy { t });
        }
        positions.push(xs);
        log_weights.push(ws);
        ancestors.push(idx);
    }
    Ok(ParticleHistory { positions, log_weights, ancestors })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{bootstrap_proposal, make_finite_hmm, make_lgm};
    use crate::rng::stream;

    #[test]
    fn bootstrap_weights_are_observation_densities() {
        let model = make_lgm(0.9, 0.6, 1.0, vec![0.1, -0.4, 1.3, 0.7]).unwrap();
        let h = run_filter(&model, &bootstrap_proposal(&model), 64, 3, &mut stream(1)).unwrap();
        for t in 0..=3 {
            for (x, lw) in h.positions(t).iter().zip(h.log_weights(t)) {
                assert_eq!(*lw, model.observation_log_density(t, *x));
            }
        }
    }

    #[test]
    fn single_particle_has_zero_ancestors() {
        let model = make_lgm(0.9, 0.6, 1.0, vec![0.0; 6]).unwrap();
        let h = run_filter(&model, &bootstrap_proposal(&model), 1, 5, &mut stream(2)).unwrap();
        assert!((1..=5).all(|t| h.ancestors(t) == [0]));
        assert_eq!(h.filter_estimate(3, |x| x).unwrap(), h.positions(3)[0]);
    }

    #[test]
    fn reproducible_given_seed() {
        let model = make_lgm(0.9, 0.6, 1.0, vec![0.5; 20]).unwrap();
        let p = bootstrap_proposal(&model);
        let a = run_filter(&model, &p, 50, 19, &mut stream(9)).unwrap();
        let b = run_filter(&model, &p, 50, 19, &mut stream(9)).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn estimate_of_one_is_one_and_bad_time_errors() {
        let model = make_lgm(0.9, 0.6, 1.0, vec![0.5; 4]).unwrap();
        let h = run_filter(&model, &bootstrap_proposal(&model), 30, 3, &mut stream(3)).unwrap();
        let s = h.filter_estimate(2, |_| 1.0).unwrap();
        assert!((s - 1.0).abs() < 1e-12);
        assert!(matches!(h.normalized_weights(4), Err(Error::OutOfRange { .. })));
        assert!(h.effective_sample_size(1).unwrap() <= 30.0 + 1e-9);
    }

    #[test]
    fn csv_dump_shape() {
        let model = make_finite_hmm(&[vec![0.5, 0.5], vec![0.5, 0.5]], |_, _| 1.0, &[0.5, 0.5], 1).unwrap();
        let h = run_filter(&model, &bootstrap_proposal(&model), 2, 1, &mut stream(3)).unwrap();
        let mut buf = Vec::new();
        h.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[0], "t,particle,position,log_weight,ancestor");
        assert_eq!(lines.len(), 5);
        assert!(lines[1].ends_with(','));
    }

    #[test]
    fn from_parts_validates() {
        let ok = ParticleHistory::from_parts(vec![vec![0.0, 1.0], vec![0.5, 0.2]], vec![vec![0.0, 0.0], vec![0.0, -1.0]], vec![vec![1, 0]]);
        assert!(ok.is_ok());
        let bad = ParticleHistory::from_parts(vec![vec![0.0, 1.0], vec![0.5, 0.2]], vec![vec![0.0, 0.0], vec![0.0, -1.0]], vec![vec![2, 0]]);
        assert!(matches!(bad, Err(Error::OutOfRange { .. })));
        let dead = ParticleHistory::from_parts(vec![vec![0.0]], vec![vec![f64::NEG_INFINITY]], vec![]);
        assert_eq!(dead.unwrap_err(), Error::FilterDegeneracy { t: 0 });
    }
}
