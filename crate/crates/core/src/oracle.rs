//! Slow reference implementations used to cross-check the fast paths.
//!
//! Everything here evaluates model definitions literally (explicit
//! hidden-state enumeration, central finite differences) and deliberately
//! shares no code with the closed-form routines it validates. These
//! functions back the test suites and are far too slow for production
//! inference; nothing outside of tests should call them.

use crate::drbm::DrbmParams;

/// Iterate all `2^m` sign configurations of length `m`.
pub fn sign_configurations(m: usize) -> impl Iterator<Item = Vec<f64>> {
    assert!(m <= 24, "enumeration over {m} units is not sensible");
    (0..(1usize << m)).map(move |bits| {
        (0..m)
            .map(|j| if bits >> j & 1 == 1 { 1.0 } else { -1.0 })
            .collect()
    })
}

/// The literal energy of a class/hidden configuration:
/// `E = -b2_k - sum_j b1_j h_j - sum_j w2_kj h_j - sum_{j,i} w1_ji h_j x_i`.
pub fn drbm_energy(params: &DrbmParams, class: usize, hidden: &[f64], x: &[f64]) -> f64 {
    let mut e = -params.b2[class];
    for (j, &hj) in hidden.iter().enumerate() {
        e -= params.b1[j] * hj;
        e -= params.w2.get(class, j) * hj;
        let w1_row = params.w1.row(j);
        for (wi, xi) in w1_row.iter().zip(x) {
            e -= wi * hj * xi;
        }
    }
    e
}

/// Class probabilities by explicit enumeration of the hidden layer:
/// `P(k) ∝ sum_h exp(-E(k, h; x))`, computed with a local max shift.
pub fn drbm_class_probs_enumerated(params: &DrbmParams, x: &[f64]) -> Vec<f64> {
    let k = params.class_count();
    let h = params.hidden_count();
    let mut log_weights = Vec::with_capacity(k);
    for class in 0..k {
        let energies: Vec<f64> = sign_configurations(h)
            .map(|hidden| -drbm_energy(params, class, &hidden, x))
            .collect();
        let m = energies.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let sum: f64 = energies.iter().map(|e| (e - m).exp()).sum();
        log_weights.push(m + sum.ln());
    }
    let m = log_weights.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let z: f64 = log_weights.iter().map(|w| (w - m).exp()).sum();
    log_weights.iter().map(|w| (w - m).exp() / z).collect()
}

/// Central-difference gradient of a scalar function of a flat parameter
/// vector.
pub fn fd_gradient(flat: &[f64], step: f64, mut eval: impl FnMut(&[f64]) -> f64) -> Vec<f64> {
    let mut work = flat.to_vec();
    let mut grad = Vec::with_capacity(flat.len());
    for i in 0..flat.len() {
        work[i] = flat[i] + step;
        let plus = eval(&work);
        work[i] = flat[i] - step;
        let minus = eval(&work);
        work[i] = flat[i];
        grad.push((plus - minus) / (2.0 * step));
    }
    grad
}

/// Assert `|a - b| <= rel * max(|a|, |b|) + abs_floor`, with a readable panic.
pub fn assert_close_rel(a: f64, b: f64, rel: f64, abs_floor: f64) {
    let tol = rel * a.abs().max(b.abs()) + abs_floor;
    assert!(
        (a - b).abs() <= tol,
        "values differ: {a} vs {b} (tolerance {tol})"
    );
}
