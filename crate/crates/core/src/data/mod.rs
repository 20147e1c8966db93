//! Dataset ingestion and preprocessing: IDX / CIFAR-10 binary / CSV loaders,
//! Z-score standardization with train-only statistics, subsampling, one-hot
//! targets, and white-noise injection for the robustness tests.

mod cifar;
mod csv;
mod idx;

pub use cifar::load_cifar10;
pub use csv::load_csv;
pub use idx::load_idx;

use crate::digest::Fnv1a;
use crate::error::{Error, Result};
use crate::math::{DenseMatrix, RngStream};
use serde::{Deserialize, Serialize};

/// A labeled dataset: inputs `X` (N x n), one-hot targets `T` (N x K),
/// and the integer class labels.
#[derive(Debug, Clone)]
pub struct Dataset {
    name: String,
    x: DenseMatrix,
    t: DenseMatrix,
    labels: Vec<usize>,
}

impl Dataset {
    /// Build from inputs and integer labels; the one-hot matrix is derived.
    pub fn new(
        name: impl Into<String>,
        x: DenseMatrix,
        labels: Vec<usize>,
        class_count: usize,
    ) -> Result<Self> {
        if labels.len() != x.rows() {
            return Err(Error::usage(format!(
                "dataset: {} labels for {} inputs",
                labels.len(),
                x.rows()
            )));
        }
        if class_count == 0 {
            return Err(Error::usage("dataset: class count must be >= 1"));
        }
        if !x.is_finite() {
            return Err(Error::numeric("dataset: non-finite input entries"));
        }
        let mut t = DenseMatrix::zeros(labels.len(), class_count);
        for (i, &label) in labels.iter().enumerate() {
            if label >= class_count {
                return Err(Error::usage(format!(
                    "dataset: label {label} out of range for {class_count} classes (row {i})"
                )));
            }
            t.set(i, label, 1.0);
        }
        Ok(Dataset {
            name: name.into(),
            x,
            t,
            labels,
        })
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn len(&self) -> usize {
        self.x.rows()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn feature_count(&self) -> usize {
        self.x.cols()
    }

    pub fn class_count(&self) -> usize {
        self.t.cols()
    }

    pub fn input(&self, i: usize) -> &[f64] {
        self.x.row(i)
    }

    pub fn label(&self, i: usize) -> usize {
        self.labels[i]
    }

    pub fn labels(&self) -> &[usize] {
        &self.labels
    }

    pub fn x(&self) -> &DenseMatrix {
        &self.x
    }

    pub fn one_hot(&self) -> &DenseMatrix {
        &self.t
    }

    pub(crate) fn x_mut(&mut self) -> &mut DenseMatrix {
        &mut self.x
    }

    /// Replace the input matrix, keeping targets (used for noisy copies and
    /// deterministic feature transforms). Shape-checked.
    pub fn with_inputs(&self, x: DenseMatrix) -> Result<Dataset> {
        if x.rows() != self.len() {
            return Err(Error::usage(format!(
                "with_inputs: {} rows vs {} targets",
                x.rows(),
                self.len()
            )));
        }
        Ok(Dataset {
            name: self.name.clone(),
            x,
            t: self.t.clone(),
            labels: self.labels.clone(),
        })
    }

    /// Rebuild with a different class count (e.g. to align two splits of the
    /// same distribution loaded separately).
    pub fn with_class_count(&self, class_count: usize) -> Result<Dataset> {
        Dataset::new(self.name.clone(), self.x.clone(), self.labels.clone(), class_count)
    }

    /// Select rows by index, in order.
    pub fn select(&self, indices: &[usize]) -> Result<Dataset> {
        let x = self.x.select_rows(indices)?;
        let t = self.t.select_rows(indices)?;
        let labels = indices.iter().map(|&i| self.labels[i]).collect();
        Ok(Dataset {
            name: self.name.clone(),
            x,
            t,
            labels,
        })
    }

    /// Byte-stable digest of inputs and targets.
    pub fn content_digest(&self) -> u64 {
        let mut h = Fnv1a::new();
        h.update(&(self.len() as u64).to_le_bytes());
        h.update(&(self.feature_count() as u64).to_le_bytes());
        h.update(&(self.class_count() as u64).to_le_bytes());
        h.update_f64s(self.x.data());
        h.update_f64s(self.t.data());
        h.finish()
    }

    /// Check the one-hot invariant: exactly one 1 per target row.
    pub fn validate_one_hot(&self) -> Result<()> {
        for i in 0..self.len() {
            let row = self.t.row(i);
            let ones = row.iter().filter(|&&v| v == 1.0).count();
            let zeros = row.iter().filter(|&&v| v == 0.0).count();
            if ones != 1 || ones + zeros != row.len() {
                return Err(Error::format(format!("target row {i} is not one-hot")));
            }
        }
        Ok(())
    }
}

/// Per-feature standardization statistics, computed from training data only.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct StandardizationStats {
    pub mean: Vec<f64>,
    /// Population standard deviation, clamped below at `STD_CLAMP`.
    pub std: Vec<f64>,
}

/// Features with a raw standard deviation at or below this are treated as
/// constant and map to exactly zero.
pub const STD_CLAMP: f64 = 1e-8;

impl StandardizationStats {
    pub fn from_inputs(x: &DenseMatrix) -> Result<Self> {
        if x.rows() == 0 {
            return Err(Error::usage("standardize: empty training set"));
        }
        let n = x.cols();
        let count = x.rows() as f64;
        let mut mean = vec![0.0; n];
        for r in 0..x.rows() {
            for (m, v) in mean.iter_mut().zip(x.row(r)) {
                *m += v;
            }
        }
        for m in &mut mean {
            *m /= count;
        }
        let mut var = vec![0.0; n];
        for r in 0..x.rows() {
            for ((s, v), m) in var.iter_mut().zip(x.row(r)).zip(&mean) {
                let d = v - m;
                *s += d * d;
            }
        }
        let std = var
            .iter()
            .map(|s| (s / count).sqrt().max(STD_CLAMP))
            .collect();
        Ok(StandardizationStats { mean, std })
    }

    /// Transform a matrix in place as `(x - mean) / std`; clamped (constant)
    /// features become exactly zero.
    pub fn apply(&self, x: &mut DenseMatrix) -> Result<()> {
        if x.cols() != self.mean.len() {
            return Err(Error::usage(format!(
                "standardize: {} features vs {} statistics",
                x.cols(),
                self.mean.len()
            )));
        }
        for r in 0..x.rows() {
            let row = x.row_mut(r);
            for ((v, m), s) in row.iter_mut().zip(&self.mean).zip(&self.std) {
                if *s <= STD_CLAMP {
                    *v = 0.0;
                } else {
                    *v = (*v - m) / s;
                }
            }
        }
        Ok(())
    }
}

/// Compute stats from `train` and apply them to `train` and every dataset in
/// `others`. Statistics never come from the non-training sets.
pub fn standardize(train: &mut Dataset, others: &mut [&mut Dataset]) -> Result<StandardizationStats> {
    let stats = StandardizationStats::from_inputs(train.x())?;
    stats.apply(train.x_mut())?;
    for d in others {
        stats.apply(d.x_mut())?;
    }
    Ok(stats)
}

/// AWGN sweep settings: noise standard deviation and independent redraws.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct NoiseConfig {
    pub sigma: f64,
    pub repeats: usize,
}

/// Return `x + eta` with `eta` i.i.d. Gaussian(0, sigma^2). `sigma == 0`
/// returns a bit-identical copy without consuming any randomness.
pub fn add_awgn(x: &DenseMatrix, sigma: f64, rng: &mut RngStream) -> Result<DenseMatrix> {
    if sigma.is_nan() || sigma < 0.0 {
        return Err(Error::usage(format!("add_awgn: sigma must be >= 0, got {sigma}")));
    }
    if sigma == 0.0 {
        return Ok(x.clone());
    }
    let mut noisy = x.clone();
    for v in noisy.data_mut() {
        *v += sigma * rng.normal();
    }
    Ok(noisy)
}

/// Draw `n` row indices without replacement, uniformly or stratified by class.
/// Stratified mode targets `n / K` rows per class, spreading the remainder
/// over the lowest class indices.
pub fn subsample_indices(
    labels: &[usize],
    class_count: usize,
    n: usize,
    rng: &mut RngStream,
    stratified: bool,
) -> Result<Vec<usize>> {
    if n > labels.len() {
        return Err(Error::usage(format!(
            "subsample: requested {n} of {} available",
            labels.len()
        )));
    }
    if !stratified {
        let mut order: Vec<usize> = (0..labels.len()).collect();
        rng.shuffle(&mut order);
        order.truncate(n);
        return Ok(order);
    }
    let base = n / class_count;
    let remainder = n % class_count;
    let mut by_class: Vec<Vec<usize>> = vec![Vec::new(); class_count];
    for (i, &label) in labels.iter().enumerate() {
        by_class[label].push(i);
    }
    let mut out = Vec::with_capacity(n);
    for (k, members) in by_class.iter_mut().enumerate() {
        let want = base + usize::from(k < remainder);
        if members.len() < want {
            return Err(Error::usage(format!(
                "subsample: class {k} has {} members, need {want}",
                members.len()
            )));
        }
        rng.shuffle(members);
        out.extend_from_slice(&members[..want]);
    }
    Ok(out)
}

/// Sample a subset of `data` without replacement; see [`subsample_indices`].
pub fn subsample(data: &Dataset, n: usize, rng: &mut RngStream, stratified: bool) -> Result<Dataset> {
    let idx = subsample_indices(data.labels(), data.class_count(), n, rng, stratified)?;
    data.select(&idx)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn toy(name: &str, rows: &[(&[f64], usize)], k: usize) -> Dataset {
        let n = rows[0].0.len();
        let mut data = Vec::new();
        let mut labels = Vec::new();
        for (x, label) in rows {
            data.extend_from_slice(x);
            labels.push(*label);
        }
        let x = DenseMatrix::from_vec(rows.len(), n, data).unwrap();
        Dataset::new(name, x, labels, k).unwrap()
    }

    #[test]
    fn one_hot_rows_are_valid() {
        let d = toy("t", &[(&[0.0, 1.0], 1), (&[2.0, 3.0], 0)], 3);
        d.validate_one_hot().unwrap();
        assert_eq!(d.one_hot().row(0), &[0.0, 1.0, 0.0]);
        assert_eq!(d.one_hot().row(1), &[1.0, 0.0, 0.0]);
    }

    #[test]
    fn label_out_of_range_rejected() {
        let x = DenseMatrix::zeros(1, 2);
        assert!(Dataset::new("t", x, vec![3], 3).is_err());
    }

    #[test]
    fn standardize_centers_train_and_uses_train_stats_elsewhere() {
        let mut train = toy("train", &[(&[0.0, 5.0], 0), (&[2.0, 5.0], 1)], 2);
        let mut test = toy("test", &[(&[1.0, 7.0], 0)], 2);
        let stats = standardize(&mut train, &mut [&mut test]).unwrap();

        // Train column means are ~0.
        let m0 = (train.input(0)[0] + train.input(1)[0]) / 2.0;
        assert!(m0.abs() < 1e-10);
        // Constant train column maps to exactly zero everywhere.
        assert_eq!(train.input(0)[1], 0.0);
        assert_eq!(test.input(0)[1], 0.0);
        // Test transformed with TRAIN statistics: (1 - 1)/1 = 0.
        assert!((stats.mean[0] - 1.0).abs() < 1e-12);
        assert!((stats.std[0] - 1.0).abs() < 1e-12);
        assert!((test.input(0)[0] - 0.0).abs() < 1e-12);
    }

    #[test]
    fn restandardizing_standardized_train_is_identity() {
        let mut train = toy(
            "train",
            &[(&[0.0, 1.0], 0), (&[2.0, 4.0], 1), (&[4.0, 6.5], 0)],
            2,
        );
        standardize(&mut train, &mut []).unwrap();
        let stats = StandardizationStats::from_inputs(train.x()).unwrap();
        for m in &stats.mean {
            assert!(m.abs() < 1e-10);
        }
        for s in &stats.std {
            assert!((s - 1.0).abs() < 1e-10);
        }
    }

    #[test]
    fn awgn_zero_sigma_is_bit_identical() {
        let x = DenseMatrix::from_vec(2, 2, vec![1.0, 2.0, 3.0, 4.0]).unwrap();
        let mut rng = RngStream::new(1, 0);
        let y = add_awgn(&x, 0.0, &mut rng).unwrap();
        assert_eq!(x, y);
    }

    #[test]
    fn awgn_moment_check() {
        let x = DenseMatrix::zeros(1000, 1000);
        let mut rng = RngStream::new(2, 0);
        let sigma = 0.7;
        let y = add_awgn(&x, sigma, &mut rng).unwrap();
        let n = y.len() as f64;
        let mean = y.data().iter().sum::<f64>() / n;
        let var = y.data().iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;
        assert!((var - sigma * sigma).abs() < 0.05 * sigma * sigma, "var {var}");
    }

    #[test]
    fn awgn_entries_uncorrelated() {
        let x = DenseMatrix::zeros(1000, 1000);
        let mut rng = RngStream::new(3, 0);
        let y = add_awgn(&x, 1.0, &mut rng).unwrap();
        let d = y.data();
        let pairs = d.len() - 1;
        let mean = d.iter().sum::<f64>() / d.len() as f64;
        let mut cov = 0.0;
        let mut var = 0.0;
        for i in 0..pairs {
            cov += (d[i] - mean) * (d[i + 1] - mean);
        }
        for v in d {
            var += (v - mean) * (v - mean);
        }
        let rho = (cov / pairs as f64) / (var / d.len() as f64);
        assert!(rho.abs() < 0.01, "adjacent correlation {rho}");
    }

    #[test]
    fn awgn_deterministic_and_rejects_negative() {
        let x = DenseMatrix::zeros(4, 4);
        let a = add_awgn(&x, 0.5, &mut RngStream::new(9, 1)).unwrap();
        let b = add_awgn(&x, 0.5, &mut RngStream::new(9, 1)).unwrap();
        assert_eq!(a, b);
        assert!(add_awgn(&x, -0.1, &mut RngStream::new(9, 1)).is_err());
    }

    #[test]
    fn subsample_full_size_is_permutation() {
        let d = toy(
            "t",
            &[(&[1.0], 0), (&[2.0], 1), (&[3.0], 0), (&[4.0], 1)],
            2,
        );
        let s = subsample(&d, 4, &mut RngStream::new(4, 0), false).unwrap();
        let mut got: Vec<f64> = (0..4).map(|i| s.input(i)[0]).collect();
        got.sort_by(f64::total_cmp);
        assert_eq!(got, vec![1.0, 2.0, 3.0, 4.0]);
    }

    #[test]
    fn subsample_stratified_balances_classes() {
        let mut rows: Vec<(Vec<f64>, usize)> = Vec::new();
        for i in 0..30 {
            rows.push((vec![i as f64], i % 3));
        }
        let view: Vec<(&[f64], usize)> = rows.iter().map(|(x, l)| (x.as_slice(), *l)).collect();
        let d = toy("t", &view, 3);
        let s = subsample(&d, 12, &mut RngStream::new(5, 0), true).unwrap();
        for k in 0..3 {
            assert_eq!(s.labels().iter().filter(|&&l| l == k).count(), 4);
        }
    }

    #[test]
    fn subsample_deterministic_and_bounded() {
        let d = toy("t", &[(&[1.0], 0), (&[2.0], 1)], 2);
        let a = subsample(&d, 1, &mut RngStream::new(6, 0), false).unwrap();
        let b = subsample(&d, 1, &mut RngStream::new(6, 0), false).unwrap();
        assert_eq!(a.content_digest(), b.content_digest());
        assert!(subsample(&d, 3, &mut RngStream::new(6, 0), false).is_err());
    }
}
