//! Analytic Gaussian benchmark: data vectors from a Gaussian with a random
//! covariance, the posterior over its mean, and the exact evidence.

mod benchmark;
mod mh;
mod sweep;

pub use benchmark::{generate_data, random_covariance, GaussianBenchmark};
pub use mh::{sample_posterior_mh, MetropolisRun};
pub use sweep::{
    median, run_sweep, write_csv, write_json, SweepConfig, SweepRecord, DEFAULT_N_DATA,
};
