//! Weight initializers. All of them are bit-reproducible under a fixed
//! `(seed, stream_id, shape)`.

use crate::error::{Error, Result};
use crate::math::matrix::DenseMatrix;
use crate::math::rng::RngStream;

/// Xavier/Glorot uniform: entries i.i.d. on `±sqrt(6 / (fan_in + fan_out))`.
/// Returns a `fan_out x fan_in` matrix.
pub fn init_xavier(fan_in: usize, fan_out: usize, rng: &mut RngStream) -> Result<DenseMatrix> {
    if fan_in == 0 || fan_out == 0 {
        return Err(Error::usage("init_xavier: fan_in and fan_out must be >= 1"));
    }
    let bound = (6.0 / (fan_in + fan_out) as f64).sqrt();
    Ok(DenseMatrix::from_fn(fan_out, fan_in, |_, _| {
        (2.0 * rng.uniform() - 1.0) * bound
    }))
}

/// He/Kaiming normal: entries i.i.d. Gaussian with mean 0 and variance `2 / fan_in`.
/// Returns a `fan_out x fan_in` matrix.
pub fn init_he(fan_in: usize, fan_out: usize, rng: &mut RngStream) -> Result<DenseMatrix> {
    if fan_in == 0 || fan_out == 0 {
        return Err(Error::usage("init_he: fan_in and fan_out must be >= 1"));
    }
    let std = (2.0 / fan_in as f64).sqrt();
    Ok(DenseMatrix::from_fn(fan_out, fan_in, |_, _| rng.normal() * std))
}

/// Gaussian entries with mean 0 and standard deviation `1/sqrt(n)`,
/// shaped `rows x n`. This is the random untrained-layer setting; the
/// companion bias vector is all zeros and is created by the caller.
pub fn init_gaussian_scaled(rows: usize, n: usize, rng: &mut RngStream) -> Result<DenseMatrix> {
    if n == 0 || rows == 0 {
        return Err(Error::usage("init_gaussian_scaled: dimensions must be >= 1"));
    }
    let std = 1.0 / (n as f64).sqrt();
    Ok(DenseMatrix::from_fn(rows, n, |_, _| rng.normal() * std))
}
