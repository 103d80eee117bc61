//! Marginal likelihoods (Bayesian evidence) from posterior sample chains.
//!
//! The local number density of an independent posterior sample is
//! proportional to the unnormalized posterior; the unknown constant is the
//! evidence. Each point's k-th nearest-neighbour distance, measured in a
//! Mahalanobis-whitened parameter space, gives a Poisson likelihood for that
//! constant, and the whole chain combines into an inverse-gamma posterior
//! for the evidence (see [`evidence`]).
//!
//! ```
//! use knn_evidence::{pipeline, synthetic::GaussianBenchmark};
//!
//! let bench = GaussianBenchmark::<f64>::generate(2, 100, 1).unwrap();
//! let chain = bench.sample_posterior_direct(2000, 2).unwrap();
//! let est = pipeline::estimate(&chain, &Default::default()).unwrap();
//! let err = est.posterior.log_map - bench.analytic_log_evidence();
//! assert!(err.abs() < 0.1);
//! ```
//!
//! All numerics are generic over [`Real`] (`f32` or `f64`); the `*64`
//! aliases below name the usual double-precision instantiations.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod chain;
pub mod error;
pub mod evidence;
pub mod knn;
pub mod linalg;
pub mod pipeline;
pub mod rng;
mod scalar;
pub mod synthetic;
pub mod whiten;

pub use chain::{Chain, ColumnSpec, ParameterColumns};
pub use error::{Error, Result};
pub use evidence::{EvidencePosterior, ResolutionDiagnostic};
pub use knn::{Backend, NeighborSet};
pub use linalg::Matrix;
pub use scalar::Real;
pub use synthetic::GaussianBenchmark;
pub use whiten::Whitening;

pub type Chain64 = Chain<f64>;
pub type Chain32 = Chain<f32>;
pub type Matrix64 = Matrix<f64>;
pub type Whitening64 = Whitening<f64>;
pub type NeighborSet64 = NeighborSet<f64>;
pub type EvidencePosterior64 = EvidencePosterior<f64>;
pub type GaussianBenchmark64 = GaussianBenchmark<f64>;
