//! Replication harness: variance of each estimator over independent
//! replicates, conditional on one observation sequence per horizon.
//!
//! Seeds are derived with [`crate::rng::derive_seed`]:
//! the observation sequence for horizon `T` uses `(seed, DATA_STREAM, T)` and
//! replicate `k` of cell `(T, N, method)` uses `(seed, T, N, method.id(), k)`.

mod analysis;
mod config;
mod grid;

pub use analysis::{bound_overlay, scaling_regression, Axis, OverlayRow, Regression};
pub use config::{ExperimentGrid, FiniteParams, FunctionalKind, FunctionalSpec, LgmParams, ModelSpec, SvmParams};
pub use grid::{run_grid, run_method, BuiltModel, GridOutcome, VarianceRow, VarianceTable, DATA_STREAM};
