use rand::Rng;

use super::{MixingBounds, StateSpaceModel};
use crate::error::{Error, Result};
use crate::numeric::Categorical;

const STOCHASTIC_TOL: f64 = 1e-12;

/// Hidden Markov chain on `{0, …, K−1}` with a strictly positive transition
/// matrix and a tabulated emission likelihood `g_t(k)`.
#[derive(Debug, Clone)]
pub struct FiniteHmm {
    n_states: usize,
    transition: Vec<f64>,
    log_transition: Vec<f64>,
    initial: Vec<f64>,
    log_initial: Vec<f64>,
    log_emission: Vec<Vec<f64>>,
    row_samplers: Vec<Categorical>,
    initial_sampler: Categorical,
    bounds: MixingBounds,
    independent: bool,
}

/// Builds a finite HMM. `emission(t, k)` is evaluated for `t ∈ 0..=horizon`.
///
/// Mixing bounds are read off the matrix: `σ₋`/`σ₊` are its extreme entries
/// and `c₋` is the smallest one-step predictive likelihood, including the
/// initial term `Σ_k χ(k) g₀(k)`.
pub fn make_finite_hmm<F>(
    transition_matrix: &[Vec<f64>],
    emission: F,
    initial: &[f64],
    horizon: usize,
) -> Result<FiniteHmm>
where
    F: Fn(usize, usize) -> f64,
{
    let k = transition_matrix.len();
    if k == 0 {
        return Err(Error::InvalidParameter("transition matrix is empty".into()));
    }
    if initial.len() != k {
        return Err(Error::Mismatch(format!(
            "initial distribution has {} entries for {k} states",
            initial.len()
        )));
    }
    let mut transition = Vec::with_capacity(k * k);
    for (i, row) in transition_matrix.iter().enumerate() {
        if row.len() != k {
            return Err(Error::Mismatch(format!("transition row {i} has {} entries, expected {k}", row.len())));
        }
        if let Some(j) = row.iter().position(|&p| !(p.is_finite() && p > 0.0)) {
            return Err(Error::InvalidParameter(format!(
                "transition entry ({i}, {j}) = {} must be strictly positive",
                row[j]
            )));
        }
        let sum: f64 = row.iter().sum();
        if (sum - 1.0).abs() > STOCHASTIC_TOL {
            return Err(Error::InvalidParameter(format!("transition row {i} sums to {sum}, not 1")));
        }
        transition.extend_from_slice(row);
    }
    if initial.iter().any(|&p| !(p.is_finite() && p >= 0.0)) {
        return Err(Error::InvalidParameter("initial probabilities must be nonnegative".into()));
    }
    let initial_sum: f64 = initial.iter().sum();
    if (initial_sum - 1.0).abs() > STOCHASTIC_TOL {
        return Err(Error::InvalidParameter(format!("initial distribution sums to {initial_sum}, not 1")));
    }

    let mut log_emission = Vec::with_capacity(horizon + 1);
    for t in 0..=horizon {
        let row = (0..k)
            .map(|s| {
                let g = emission(t, s);
                if g.is_finite() && g > 0.0 {
                    Ok(g.ln())
                } else {
                    Err(Error::InvalidParameter(format!("emission g_{t}({s}) = {g} must be positive and finite")))
                }
            })
            .collect::<Result<Vec<f64>>>()?;
        log_emission.push(row);
    }

    let sigma_minus = transition.iter().copied().fold(f64::INFINITY, f64::min);
    let sigma_plus = transition.iter().copied().fold(0.0, f64::max);
    let mut c_minus: f64 = (0..k).map(|s| initial[s] * log_emission[0][s].exp()).sum();
    for row_g in log_emission.iter().skip(1) {
        for i in 0..k {
            let pred: f64 = (0..k).map(|j| transition[i * k + j] * row_g[j].exp()).sum();
            c_minus = c_minus.min(pred);
        }
    }
    let bounds = MixingBounds::new(sigma_minus, sigma_plus, c_minus)?;

    let log_transition: Vec<f64> = transition.iter().map(|p| p.ln()).collect();
    let row_samplers = (0..k)
        .map(|i| Categorical::from_log_weights(&log_transition[i * k..(i + 1) * k]).expect("positive row"))
        .collect();
    let log_initial: Vec<f64> = initial.iter().map(|p| p.ln()).collect();
    let initial_sampler = Categorical::from_log_weights(&log_initial).expect("normalized initial law");
    let independent = (1..k).all(|i| transition[i * k..(i + 1) * k] == transition[..k]);

    Ok(FiniteHmm {
        n_states: k,
        transition,
        log_transition,
        initial: initial.to_vec(),
        log_initial,
        log_emission,
        row_samplers,
        initial_sampler,
        bounds,
        independent,
    })
}

/// Chain whose rows all equal `kernel`, so `m(x, x′) = m(x′)`.
pub fn make_independent_hmm<F>(kernel: &[f64], emission: F, initial: &[f64], horizon: usize) -> Result<FiniteHmm>
where
    F: Fn(usize, usize) -> f64,
{
    let rows = vec![kernel.to_vec(); kernel.len()];
    make_finite_hmm(&rows, emission, initial, horizon)
}

impl FiniteHmm {
    pub fn n_states(&self) -> usize {
        self.n_states
    }

    pub fn transition(&self, i: usize, j: usize) -> f64 {
        self.transition[i * self.n_states + j]
    }

    pub fn initial(&self) -> &[f64] {
        &self.initial
    }

    /// `g_t(k)` in linear space.
    pub fn emission(&self, t: usize, k: usize) -> f64 {
        self.log_emission[t][k].exp()
    }

    pub fn bounds(&self) -> &MixingBounds {
        &self.bounds
    }
}

impl StateSpaceModel for FiniteHmm {
    type State = usize;

    fn horizon(&self) -> usize {
        self.log_emission.len() - 1
    }

    fn sample_initial<R: Rng + ?Sized>(&self, rng: &mut R) -> usize {
        self.initial_sampler.sample(rng)
    }

    fn initial_log_density(&self, x: usize) -> f64 {
        self.log_initial[x]
    }

    fn transition_log_density(&self, x: usize, x_next: usize) -> f64 {
        self.log_transition[x * self.n_states + x_next]
    }

    fn sample_transition<R: Rng + ?Sized>(&self, x: usize, rng: &mut R) -> usize {
        self.row_samplers[x].sample(rng)
    }

    fn observation_log_density(&self, t: usize, x: usize) -> f64 {
        self.log_emission[t][x]
    }

    fn mixing_bounds(&self) -> Option<&MixingBounds> {
        Some(&self.bounds)
    }

    fn independent_kernel(&self) -> bool {
        self.independent
    }

    fn state_class(&self, x: usize) -> Option<usize> {
        Some(x)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn two_state() -> FiniteHmm {
        make_finite_hmm(&[vec![0.7, 0.3], vec![0.4, 0.6]], |_, _| 1.0, &[0.5, 0.5], 3).unwrap()
    }

    #[test]
    fn mixing_bounds_read_off_matrix() {
        let m = two_state();
        let b = m.mixing_bounds().unwrap();
        assert_eq!(b.sigma_minus, 0.3);
        assert_eq!(b.sigma_plus, 0.7);
        assert!((b.rho() - (1.0 - 3.0 / 7.0)).abs() < 1e-15);
        assert!((b.c_minus - 1.0).abs() < 1e-12);
        for i in 0..2 {
            for j in 0..2 {
                let p = m.transition_log_density(i, j).exp();
                assert!(b.sigma_minus <= p + 1e-15 && p <= b.sigma_plus + 1e-15);
            }
        }
    }

    #[test]
    fn rejects_non_stochastic_rows() {
        let err = make_finite_hmm(&[vec![0.5, 0.5], vec![0.5, 0.499]], |_, _| 1.0, &[0.5, 0.5], 1);
        assert!(matches!(err, Err(Error::InvalidParameter(_))));
    }

    #[test]
    fn rejects_zero_entries() {
        let err = make_finite_hmm(&[vec![1.0, 0.0], vec![0.5, 0.5]], |_, _| 1.0, &[0.5, 0.5], 1);
        assert!(matches!(err, Err(Error::InvalidParameter(_))));
        let err = make_finite_hmm(&[vec![0.5, 0.5], vec![0.5, 0.5]], |_, k| k as f64, &[0.5, 0.5], 1);
        assert!(err.is_err());
    }

    #[test]
    fn single_state_chain() {
        let m = make_finite_hmm(&[vec![1.0]], |_, _| 0.2, &[1.0], 4).unwrap();
        let b = m.mixing_bounds().unwrap();
        assert_eq!(b.sigma_minus, b.sigma_plus);
        assert_eq!(b.rho(), 0.0);
        assert!(m.independent_kernel());
    }

    #[test]
    fn rows_normalize() {
        let m = make_finite_hmm(
            &[vec![0.2, 0.5, 0.3], vec![0.1, 0.1, 0.8], vec![0.6, 0.3, 0.1]],
            |t, k| 0.5 + 0.1 * (t + k) as f64,
            &[0.3, 0.3, 0.4],
            2,
        )
        .unwrap();
        for i in 0..3 {
            let s: f64 = (0..3).map(|j| m.transition_log_density(i, j).exp()).sum();
            assert!((s - 1.0).abs() < 1e-6);
        }
        assert!(!m.independent_kernel());
    }
}
