//! Multi-layered discriminative restricted Boltzmann machines with an
//! untrained probabilistic layer, plus the benchmark harness around them.
//!
//! The crate implements a family of energy-based classifiers and the
//! noise-robustness experiment pipeline they are compared under:
//!
//! - [`drbm`]: the discriminative RBM — exact class probabilities over ±1
//!   hidden units, analytic log-likelihood gradients, mini-batch training.
//! - [`pelm`]: a frozen probabilistic layer of ±1 Bernoulli units driven by
//!   an affine signal; sampled or deterministic (`tanh`) output.
//! - [`gbrbm`]: a Gaussian-Bernoulli RBM trained by contrastive divergence;
//!   its hidden-side parameters export directly as a frozen layer.
//! - [`mdrbm`]: the four-layer stack — a DRBM on top of a frozen layer —
//!   with Monte-Carlo inference and self-normalized sampled gradients.
//! - [`baselines`]: the deterministic-layer variant and a standard
//!   four-layer ReLU network, for comparison rows.
//! - [`data`]: IDX / CIFAR-10 / CSV loaders, Z-score standardization with
//!   train-only statistics, subsampling, and white-noise injection.
//! - [`mod@bench`]: experiment configuration, the model matrix, noise sweeps
//!   with common random numbers, accuracy-degradation rates, and reports.
//!
//! Everything is seeded through [`math::RngStream`]: one experiment seed
//! fans out into independent, reproducible substreams for data subsetting,
//! parameter initialization, layer sampling, and noise, so a rerun with the
//! same configuration is bit-identical down to the report digest.
//!
//! The [`oracle`] module holds deliberately slow reference implementations
//! (hidden-state enumeration, finite differences) that the test suites use
//! to cross-check every fast path; production code never calls them.

// Index-based loops are the house style for the numeric kernels here.
#![allow(clippy::needless_range_loop)]

pub mod baselines;
pub mod bench;
pub mod container;
pub mod data;
pub mod digest;
pub mod drbm;
pub mod error;
pub mod gbrbm;
pub mod math;
pub mod mdrbm;
pub mod oracle;
pub mod pelm;
pub mod training;

pub use error::{Error, Result};
pub use math::{AdamConfig, DenseMatrix, RngStream};
