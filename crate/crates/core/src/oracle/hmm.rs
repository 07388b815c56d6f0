use crate::error::{Error, Result};
use crate::model::{AdditiveFunctional, FiniteHmm, StateSpaceModel};

/// Normalized forward probabilities `P(X_t = k | Y_{0:t})`.
pub fn hmm_filter(model: &FiniteHmm) -> Vec<Vec<f64>> {
    let k = model.n_states();
    let mut out: Vec<Vec<f64>> = Vec::with_capacity(model.horizon() + 1);
    for t in 0..=model.horizon() {
        let mut alpha: Vec<f64> = (0..k)
            .map(|j| {
                let prior = match out.last() {
                    None => model.initial()[j],
                    Some(prev) => (0..k).map(|i| prev[i] * model.transition(i, j)).sum(),
                };
                prior * model.emission(t, j)
            })
            .collect();
        let z: f64 = alpha.iter().sum();
        alpha.iter_mut().for_each(|a| *a /= z);
        out.push(alpha);
    }
    out
}

/// Scaled backward messages `β_t(k) ∝ p(y_{t+1:T} | X_t = k)`.
fn backward_messages(model: &FiniteHmm) -> Vec<Vec<f64>> {
    let k = model.n_states();
    let horizon = model.horizon();
    let mut beta = vec![vec![1.0; k]; horizon + 1];
    for t in (0..horizon).rev() {
        let mut b: Vec<f64> = (0..k)
            .map(|i| (0..k).map(|j| model.transition(i, j) * model.emission(t + 1, j) * beta[t + 1][j]).sum())
            .collect();
        let z: f64 = b.iter().sum();
        b.iter_mut().for_each(|v| *v /= z);
        beta[t] = b;
    }
    beta
}

/// `P(X_t = k | Y_{0:T})`.
pub fn hmm_smoothed_marginals(model: &FiniteHmm) -> Vec<Vec<f64>> {
    let alpha = hmm_filter(model);
    let beta = backward_messages(model);
    alpha
        .iter()
        .zip(&beta)
        .map(|(a, b)| {
            let mut m: Vec<f64> = a.iter().zip(b).map(|(x, y)| x * y).collect();
            let z: f64 = m.iter().sum();
            m.iter_mut().for_each(|v| *v /= z);
            m
        })
        .collect()
}

/// Exact `φ_{0:T|T}[S_{T,r}]` by forward-backward, enumerating the `K^{r+1}`
/// joint states of each lag window.
pub fn exact_hmm_smooth(model: &FiniteHmm, functional: &AdditiveFunctional<usize>) -> Result<f64> {
    let horizon = model.horizon();
    if functional.horizon() != horizon {
        return Err(Error::Mismatch(format!(
            "functional horizon {} differs from model horizon {horizon}",
            functional.horizon()
        )));
    }
    let k = model.n_states();
    let lag = functional.lag();
    let alpha = hmm_filter(model);
    let beta = backward_messages(model);
    let n_tuples = k.checked_pow(lag as u32 + 1).ok_or(Error::UnsupportedLag(lag))?;
    let mut window = vec![0usize; lag + 1];
    let mut total = 0.0;
    for (t, beta_t) in beta.iter().enumerate().skip(lag) {
        let start = t - lag;
        let (mut num, mut den) = (0.0, 0.0);
        for code in 0..n_tuples {
            let mut c = code;
            for slot in window.iter_mut() {
                *slot = c % k;
                c /= k;
            }
            let mut weight = alpha[start][window[0]];
            for d in 1..=lag {
                weight *= model.transition(window[d - 1], window[d]) * model.emission(start + d, window[d]);
            }
            weight *= beta_t[window[lag]];
            if weight > 0.0 {
                num += weight * functional.term(t, &window);
                den += weight;
            }
        }
        total += num / den;
    }
    Ok(total)
}
