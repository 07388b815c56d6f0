//! Fixtures shared by the criterion benches in `benches/`.

use smoothcore::experiment::{BuiltModel, FiniteParams, ModelSpec};
use smoothcore::rng::stream;
use smoothcore::{FiniteHmm, LinearGaussian};

/// LGM with `φ = 0.9, σ_u = 0.6, σ_v = 1` and simulated observations.
pub fn lgm(horizon: usize, seed: u64) -> LinearGaussian {
    let spec = ModelSpec::lgm(0.9, 0.6, 1.0);
    let data = spec.simulate(horizon, &mut stream(seed)).expect("simulation");
    match spec.build(&data.y).expect("model") {
        BuiltModel::Lgm(m) => m,
        _ => unreachable!(),
    }
}

/// Sticky two-state chain observed in unit Gaussian noise around ±1.
pub fn two_state(horizon: usize, seed: u64) -> FiniteHmm {
    let spec = ModelSpec::Finite(FiniteParams {
        transition: vec![vec![0.9, 0.1], vec![0.15, 0.85]],
        initial: vec![0.5, 0.5],
        means: vec![-1.0, 1.0],
        sd: 1.0,
    });
    let data = spec.simulate(horizon, &mut stream(seed)).expect("simulation");
    match spec.build(&data.y).expect("model") {
        BuiltModel::Finite(m) => m,
        _ => unreachable!(),
    }
}
