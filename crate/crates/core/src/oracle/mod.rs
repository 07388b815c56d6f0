//! Exact reference computations used to check the particle estimators.

mod bounds;
mod gamma;
mod hmm;
mod kalman;

pub use bounds::{theory_bounds, TheoryBounds};
pub use gamma::{path_space_asymptotic_variance, KernelIntegrals, QUADRATURE_PANELS, QUADRATURE_SDS};
pub use hmm::{exact_hmm_smooth, hmm_filter, hmm_smoothed_marginals};
pub use kalman::{kalman_smooth, KalmanResult};
