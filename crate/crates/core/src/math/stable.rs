//! Numerically stable log-domain reductions.

use crate::error::{Error, Result};

/// `ln Σ exp(v_i)` computed with a max shift, safe for entries far beyond
/// the naive overflow threshold.
pub fn log_sum_exp(v: &[f64]) -> Result<f64> {
    if v.is_empty() {
        return Err(Error::usage("log_sum_exp of an empty vector"));
    }
    let m = v.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    if m == f64::NEG_INFINITY {
        return Ok(f64::NEG_INFINITY);
    }
    let sum: f64 = v.iter().map(|&x| (x - m).exp()).sum();
    Ok(m + sum.ln())
}

/// `ln(2 cosh λ)` evaluated as `|λ| + ln(1 + e^{-2|λ|})`.
///
/// The direct form overflows near |λ| ≈ 710; this one is exact for any
/// finite argument and saturates to `|λ|` for huge inputs.
pub fn log_2cosh(lambda: f64) -> f64 {
    let a = lambda.abs();
    a + (-2.0 * a).exp().ln_1p()
}
