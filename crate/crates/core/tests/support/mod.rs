//! Independent reference computations shared by integration tests.
//!
//! Everything here works in linear space with plain loops so that it shares
//! no code path with the library's log-space implementations.
#![allow(dead_code)]

use rand::Rng;
use smoothcore::rng::stream;
use smoothcore::{
    bootstrap_proposal, make_finite_hmm, make_lgm, run_filter, AdditiveFunctional, FiniteHmm, LinearGaussian,
    ParticleHistory, StateSpaceModel, StateValue,
};
use statrs::distribution::{ChiSquared, ContinuousCDF};

const SQRT_2PI: f64 = 2.506_628_274_631_000_7;

/// Two-state chain observed through `N(mean_k, 1)` noise at the given `y`.
pub fn gaussian_two_state(p: [[f64; 2]; 2], initial: [f64; 2], means: [f64; 2], y: &[f64]) -> FiniteHmm {
    let rows = vec![p[0].to_vec(), p[1].to_vec()];
    let y = y.to_vec();
    let horizon = y.len() - 1;
    make_finite_hmm(&rows, move |t, k| (-0.5 * (y[t] - means[k]).powi(2)).exp() / SQRT_2PI, &initial, horizon)
        .expect("valid two-state model")
}

/// Two-state HMM with random transition entries in `[0.1, 0.9]`, random
/// initial law and random observations.
pub fn random_two_state(seed: u64, horizon: usize) -> FiniteHmm {
    let mut rng = stream(seed);
    let a = rng.random_range(0.1..0.9);
    let b = rng.random_range(0.1..0.9);
    let c = rng.random_range(0.1..0.9);
    let y: Vec<f64> = (0..=horizon).map(|_| rng.random_range(-2.0..2.0)).collect();
    gaussian_two_state([[a, 1.0 - a], [b, 1.0 - b]], [c, 1.0 - c], [-1.0, 1.0], &y)
}

/// The LGM benchmark parameters with observations simulated from `seed`.
pub fn benchmark_lgm(horizon: usize, seed: u64) -> LinearGaussian {
    let mut rng = stream(seed);
    let data = smoothcore::model::simulate::simulate_lgm(0.9, 0.6, 1.0, horizon, &mut rng).unwrap();
    make_lgm(0.9, 0.6, 1.0, data.y).unwrap()
}

pub fn bootstrap_history<M: StateSpaceModel>(model: &M, n: usize, seed: u64) -> ParticleHistory<M::State> {
    run_filter(model, &bootstrap_proposal(model), n, model.horizon(), &mut stream(seed)).expect("filter runs")
}

fn linear_weights(log_weights: &[f64]) -> Vec<f64> {
    let max = log_weights.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let w: Vec<f64> = log_weights.iter().map(|&l| (l - max).exp()).collect();
    let total: f64 = w.iter().sum();
    w.into_iter().map(|v| v / total).collect()
}

/// `Λ_t[i][j] = ω_t^j m(x_t^j, x_{t+1}^i) / Σ_k ω_t^k m(x_t^k, x_{t+1}^i)`.
pub fn dense_backward_matrix<M: StateSpaceModel>(
    history: &ParticleHistory<M::State>,
    model: &M,
    t: usize,
) -> Vec<Vec<f64>> {
    let w = linear_weights(history.log_weights(t));
    let xs = history.positions(t);
    history
        .positions(t + 1)
        .iter()
        .map(|&target| {
            let row: Vec<f64> =
                xs.iter().zip(&w).map(|(&x, &wj)| wj * model.transition_log_density(x, target).exp()).collect();
            let total: f64 = row.iter().sum();
            row.into_iter().map(|v| v / total).collect()
        })
        .collect()
}

/// Calls `visit(j_{0:T}, probability)` for every index path of the backward
/// chain: `w̄_T(j_T) Π_t Λ_t[j_{t+1}][j_t]`.
pub fn for_each_index_path<M: StateSpaceModel>(
    history: &ParticleHistory<M::State>,
    model: &M,
    mut visit: impl FnMut(&[usize], f64),
) {
    let horizon = history.horizon();
    let n = history.n_particles();
    let last = linear_weights(history.log_weights(horizon));
    let lambdas: Vec<Vec<Vec<f64>>> = (0..horizon).map(|t| dense_backward_matrix(history, model, t)).collect();
    let mut path = vec![0usize; horizon + 1];
    fn recurse(
        t: usize,
        prob: f64,
        path: &mut Vec<usize>,
        lambdas: &[Vec<Vec<f64>>],
        n: usize,
        visit: &mut dyn FnMut(&[usize], f64),
    ) {
        if t == 0 {
            visit(path, prob);
            return;
        }
        let upper = path[t];
        for j in 0..n {
            path[t - 1] = j;
            recurse(t - 1, prob * lambdas[t - 1][upper][j], path, lambdas, n, visit);
        }
    }
    for (j, &p) in last.iter().enumerate() {
        path[horizon] = j;
        recurse(horizon, p, &mut path, &lambdas, n, &mut visit);
    }
}

/// Exhaustive sum over all `N^{T+1}` index paths of the FFBS joint law.
pub fn brute_force_ffbs<M: StateSpaceModel>(
    history: &ParticleHistory<M::State>,
    model: &M,
    functional: &AdditiveFunctional<M::State>,
) -> f64 {
    let mut total = 0.0;
    let mut states = Vec::with_capacity(history.horizon() + 1);
    for_each_index_path(history, model, |path, prob| {
        states.clear();
        states.extend(path.iter().enumerate().map(|(t, &j)| history.positions(t)[j]));
        total += prob * functional.evaluate_path(&states);
    });
    total
}

/// Path index in base `N`, oldest time most significant.
pub fn path_code(path: &[usize], n: usize) -> usize {
    path.iter().fold(0, |acc, &j| acc * n + j)
}

/// Upper-tail p-value of Pearson's statistic against `probs`.
pub fn chi_square_p_value(counts: &[u64], probs: &[f64]) -> f64 {
    let total: u64 = counts.iter().sum();
    let mut stat = 0.0;
    let mut cells = 0usize;
    for (&c, &p) in counts.iter().zip(probs) {
        if p > 0.0 {
            let e = p * total as f64;
            stat += (c as f64 - e).powi(2) / e;
            cells += 1;
        } else {
            assert_eq!(c, 0, "draw in a zero-probability cell");
        }
    }
    ChiSquared::new((cells - 1) as f64).unwrap().sf(stat)
}

/// Exact `E[S | y]` by enumerating every state path with its unnormalized
/// joint density `χ(x_0) g_0(x_0) Π m(x_{t−1}, x_t) g_t(x_t)`.
pub fn enumerate_hmm_paths(model: &FiniteHmm, functional: &AdditiveFunctional<usize>) -> f64 {
    let k = model.n_states();
    let horizon = model.horizon();
    let count = k.pow(horizon as u32 + 1);
    let mut num = 0.0;
    let mut den = 0.0;
    let mut path = vec![0usize; horizon + 1];
    for code in 0..count {
        let mut c = code;
        for t in (0..=horizon).rev() {
            path[t] = c % k;
            c /= k;
        }
        let mut w = model.initial()[path[0]] * model.emission(0, path[0]);
        for t in 1..=horizon {
            w *= model.transition(path[t - 1], path[t]) * model.emission(t, path[t]);
        }
        num += w * functional.evaluate_path(&path);
        den += w;
    }
    num / den
}

/// Smoothed means of the LGM from a finite-state approximation on an
/// equispaced grid over `±sds` stationary standard deviations.
pub fn grid_smoother_means(phi: f64, sigma_u: f64, sigma_v: f64, y: &[f64], points: usize, sds: f64) -> Vec<f64> {
    let sd0 = sigma_u / (1.0 - phi * phi).sqrt();
    let lo = -sds * sd0;
    let h = 2.0 * sds * sd0 / (points - 1) as f64;
    let grid: Vec<f64> = (0..points).map(|i| lo + h * i as f64).collect();
    let normal = |x: f64, m: f64, s: f64| (-0.5 * ((x - m) / s).powi(2)).exp() / (s * SQRT_2PI);
    let kernel: Vec<Vec<f64>> = grid
        .iter()
        .map(|&x| {
            let row: Vec<f64> = grid.iter().map(|&z| normal(z, phi * x, sigma_u)).collect();
            let s: f64 = row.iter().sum();
            row.into_iter().map(|v| v / s).collect()
        })
        .collect();
    let emission = |t: usize| -> Vec<f64> { grid.iter().map(|&x| normal(y[t], x, sigma_v)).collect() };
    let normalize = |v: &mut Vec<f64>| {
        let s: f64 = v.iter().sum();
        v.iter_mut().for_each(|a| *a /= s);
    };
    let horizon = y.len() - 1;
    let mut alpha = Vec::with_capacity(horizon + 1);
    let mut a: Vec<f64> = grid.iter().zip(emission(0)).map(|(&x, g)| normal(x, 0.0, sd0) * g).collect();
    normalize(&mut a);
    alpha.push(a);
    for t in 1..=horizon {
        let prev = &alpha[t - 1];
        let g = emission(t);
        let mut a: Vec<f64> = (0..points).map(|j| (0..points).map(|i| prev[i] * kernel[i][j]).sum::<f64>() * g[j]).collect();
        normalize(&mut a);
        alpha.push(a);
    }
    let mut beta = vec![1.0; points];
    let mut means = vec![0.0; horizon + 1];
    for t in (0..=horizon).rev() {
        if t < horizon {
            let g = emission(t + 1);
            let mut b: Vec<f64> = (0..points).map(|i| (0..points).map(|j| kernel[i][j] * g[j] * beta[j]).sum()).collect();
            normalize(&mut b);
            beta = b;
        }
        let mut m: Vec<f64> = alpha[t].iter().zip(&beta).map(|(x, y)| x * y).collect();
        normalize(&mut m);
        means[t] = m.iter().zip(&grid).map(|(p, x)| p * x).sum();
    }
    means
}

/// Mean and standard error of a sample.
pub fn mean_and_se(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, (var / n).sqrt())
}

/// Sample variance with the `n − 1` denominator.
pub fn sample_variance(values: &[f64]) -> f64 {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0)
}

pub fn relative_difference(a: f64, b: f64) -> f64 {
    (a - b).abs() / a.abs().max(b.abs()).max(1e-300)
}

/// `Σ_t φ_t(h)` from the filter clouds, the value FFBS collapses to when the
/// kernel ignores its source.
pub fn sum_of_filter_means<S: StateValue>(history: &ParticleHistory<S>, h: impl Fn(S) -> f64) -> f64 {
    (0..=history.horizon())
        .map(|t| {
            let w = linear_weights(history.log_weights(t));
            w.iter().zip(history.positions(t)).map(|(wj, &x)| wj * h(x)).sum::<f64>()
        })
        .sum()
}
