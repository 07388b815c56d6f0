//! Particle smoothing of additive functionals in hidden Markov models.
//!
//! The crate runs an auxiliary particle filter ([`filter`]), then estimates
//! `E[Σ_t h_t(X_{t−r:t}) | Y_{0:T}]` with FFBS (backward or forward-only),
//! FFBSi (direct or accept-reject) or the path-space method
//! ([`smoother`]). Exact answers for linear-Gaussian and finite models live
//! in [`oracle`]; [`experiment`] reproduces variance-versus-(T, N) studies.

pub mod error;
pub mod experiment;
pub mod filter;
pub mod model;
pub mod numeric;
pub mod oracle;
pub mod rng;
pub mod smoother;

pub use error::{Error, Result};
pub use filter::{filter_estimate, normalized_weights, run_filter, ParticleHistory};
pub use model::{
    bootstrap_proposal, make_finite_hmm, make_independent_hmm, make_lgm, make_svm, AdditiveFunctional,
    AuxiliaryProposal, Bootstrap, FiniteHmm, LinearGaussian, MixingBounds, StateSpaceModel, StateValue,
    StochasticVolatility,
};
pub use oracle::{exact_hmm_smooth, kalman_smooth, path_space_asymptotic_variance, theory_bounds, KalmanResult, TheoryBounds};
pub use smoother::{
    backward_row, ffbs_backward_additive, ffbs_forward_additive, ffbsi_estimate, ffbsi_rejection_sample_paths,
    ffbsi_sample_paths, path_space_estimate, path_space_from_history, BackwardMatrixRow, Method, SmoothingEstimate,
    Trajectories,
};
