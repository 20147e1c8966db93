//! Dense numeric primitives shared by every model: matrix storage, seeded
//! stream-addressable randomness, stable log-domain reductions, weight
//! initializers, and the Adam ascent optimizer.

mod adam;
mod init;
mod matrix;
mod rng;
mod stable;

pub use adam::{AdamConfig, AdamState};
pub use init::{init_gaussian_scaled, init_he, init_xavier};
pub use matrix::DenseMatrix;
pub use rng::RngStream;
pub use stable::{log_2cosh, log_sum_exp};
