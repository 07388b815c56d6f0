mod support;

use rand::Rng;
use smoothcore::oracle::hmm_filter;
use smoothcore::rng::stream;
use smoothcore::{
    bootstrap_proposal, make_lgm, run_filter, AuxiliaryProposal, Error, FiniteHmm, StateSpaceModel,
};
use support::*;

/// Uniform proposal with state-dependent adjustment multipliers.
struct UniformAuxiliary {
    k: usize,
}

impl AuxiliaryProposal<usize> for UniformAuxiliary {
    fn adjustment_log_weight(&self, t: usize, x: usize) -> f64 {
        (1.0 + x as f64 + 0.1 * (t % 3) as f64).ln()
    }

    fn proposal_log_density(&self, _t: usize, _x: usize, _x_next: usize) -> f64 {
        -(self.k as f64).ln()
    }

    fn sample_proposal<R: Rng + ?Sized>(&self, _t: usize, _x: usize, rng: &mut R) -> usize {
        rng.random_range(0..self.k)
    }

    fn initial_instrumental_log_density(&self, _x: usize) -> f64 {
        -(self.k as f64).ln()
    }

    fn sample_initial_instrumental<R: Rng + ?Sized>(&self, rng: &mut R) -> usize {
        rng.random_range(0..self.k)
    }
}

fn three_state(horizon: usize) -> FiniteHmm {
    let y: Vec<f64> = (0..=horizon).map(|t| ((t * 5 + 1) % 7) as f64 / 3.0 - 1.0).collect();
    smoothcore::make_finite_hmm(
        &[vec![0.6, 0.3, 0.1], vec![0.2, 0.5, 0.3], vec![0.25, 0.25, 0.5]],
        move |t, k| (-0.5 * (y[t] - k as f64 + 1.0).powi(2) / 0.49).exp(),
        &[0.2, 0.5, 0.3],
        horizon,
    )
    .unwrap()
}

#[test]
fn filter_probabilities_match_forward_algorithm() {
    let model = random_two_state(17, 10);
    let exact = hmm_filter(&model);
    let runs: Vec<Vec<f64>> = (0..20)
        .map(|rep| {
            let h = bootstrap_history(&model, 5000, 100 + rep);
            (0..=10).map(|t| h.filter_estimate(t, |x| (x == 0) as u8 as f64).unwrap()).collect()
        })
        .collect();
    for t in 0..=10 {
        let column: Vec<f64> = runs.iter().map(|r| r[t]).collect();
        let (mean, se) = mean_and_se(&column);
        assert!((mean - exact[t][0]).abs() <= 3.0 * se, "t={t}: {mean} ± {se} vs {}", exact[t][0]);
    }
}

#[test]
fn auxiliary_filter_targets_the_same_posterior() {
    let model = three_state(6);
    let exact = hmm_filter(&model);
    let h = run_filter(&model, &UniformAuxiliary { k: 3 }, 40_000, 6, &mut stream(5)).unwrap();
    for (t, exact_t) in exact.iter().enumerate() {
        for (k, &p) in exact_t.iter().enumerate() {
            let est = h.filter_estimate(t, |x| (x == k) as u8 as f64).unwrap();
            assert!((est - p).abs() < 0.02, "t={t} k={k}: {est} vs {p}");
        }
    }
}

#[test]
fn conditional_weight_identity() {
    let model = three_state(5);
    let proposal = UniformAuxiliary { k: 3 };
    let h = run_filter(&model, &proposal, 10_000, 5, &mut stream(11)).unwrap();
    let test_functions: [fn(usize) -> f64; 5] = [
        |_| 1.0,
        |x| x as f64,
        |x| (x as f64 - 1.0).powi(2),
        |x| if x == 2 { 3.0 } else { -0.5 },
        |x| (x as f64).exp(),
    ];
    for t in 1..=5 {
        let prev_w = h.normalized_weights(t - 1).unwrap();
        let prev_x = h.positions(t - 1);
        for f in test_functions {
            let numerator: f64 = prev_w
                .iter()
                .zip(prev_x)
                .map(|(&w, &x)| {
                    w * (0..3)
                        .map(|j| model.transition(x, j) * model.emission(t, j) * f(j))
                        .sum::<f64>()
                })
                .sum();
            let denominator: f64 =
                prev_w.iter().zip(prev_x).map(|(&w, &x)| w * proposal.adjustment_log_weight(t, x).exp()).sum();
            let samples: Vec<f64> =
                h.log_weights(t).iter().zip(h.positions(t)).map(|(&lw, &x)| lw.exp() * f(x)).collect();
            let (mean, se) = mean_and_se(&samples);
            let expected = numerator / denominator;
            assert!((mean - expected).abs() <= 3.0 * se, "t={t}: {mean} ± {se} vs {expected}");
        }
    }
}

#[test]
fn bootstrap_weights_are_observation_densities() {
    let model = benchmark_lgm(20, 3);
    let h = bootstrap_history(&model, 50, 4);
    for t in 0..=20 {
        for (&x, &lw) in h.positions(t).iter().zip(h.log_weights(t)) {
            let g = model.observation_log_density(t, x);
            assert!((lw - g).abs() <= 1e-12 * g.abs().max(1.0));
        }
    }
}

#[test]
fn single_particle_has_zero_ancestors() {
    let model = benchmark_lgm(8, 1);
    let h = bootstrap_history(&model, 1, 2);
    assert!((1..=8).all(|t| h.ancestors(t) == [0]));
    assert_eq!(h.filter_estimate(5, |x| x).unwrap(), h.positions(5)[0]);
}

#[test]
fn same_seed_gives_identical_history() {
    let model = benchmark_lgm(30, 3);
    let a = bootstrap_history(&model, 64, 99);
    let b = bootstrap_history(&model, 64, 99);
    assert_eq!(a, b);
    assert_ne!(a, bootstrap_history(&model, 64, 100));
}

#[test]
fn weight_collapse_reports_the_step() {
    let mut y = vec![0.3; 6];
    y[3] = 1e200;
    let model = make_lgm(0.9, 0.6, 1.0, y).unwrap();
    let err = run_filter(&model, &bootstrap_proposal(&model), 10, 5, &mut stream(1)).unwrap_err();
    assert_eq!(err, Error::FilterDegeneracy { t: 3 });
}

#[test]
fn filter_estimate_basics() {
    let model = benchmark_lgm(4, 2);
    let h = bootstrap_history(&model, 25, 3);
    for t in 0..=4 {
        assert!((h.filter_estimate(t, |_| 1.0).unwrap() - 1.0).abs() < 1e-14);
        let w = h.normalized_weights(t).unwrap();
        assert!((w.iter().sum::<f64>() - 1.0).abs() < 1e-12 && w.iter().all(|&v| v >= 0.0));
    }
    assert!(h.filter_estimate(5, |x| x).is_err());
}
