//! Untrained probabilistic layer: a frozen bank of ±1 Bernoulli units driven
//! by an affine feed-forward signal.
//!
//! Each unit fires `+1` with probability `1 / (1 + e^{-2 u_j(x)})`, where
//! `u(x) = b0 + w0 x` (the factor 2 comes from the ±1 support). The
//! parameters are sealed at construction and no training code path mutates
//! them; the deterministic mode `tanh(u)` is the per-unit expectation and is
//! what the non-probabilistic baselines use.

use crate::digest::Fnv1a;
use crate::error::{Error, Result};
use crate::math::{DenseMatrix, RngStream};

/// How a frozen layer's parameters were produced.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Theta0Provenance {
    /// Random construction: zero biases, Gaussian weights.
    Random { seed: u64 },
    /// Exported from an unsupervised pretraining run.
    Gbrbm { run_id: String },
}

impl Theta0Provenance {
    pub fn tag(&self) -> &'static str {
        match self {
            Theta0Provenance::Random { .. } => "random",
            Theta0Provenance::Gbrbm { .. } => "gbrbm",
        }
    }
}

/// Frozen layer parameters: biases `b0` (length 𝓗) and weights `w0` (𝓗 x n).
/// Immutable after construction.
#[derive(Debug, Clone, PartialEq)]
pub struct PelmParams {
    b0: Vec<f64>,
    w0: DenseMatrix,
    provenance: Theta0Provenance,
}

impl PelmParams {
    pub fn new(b0: Vec<f64>, w0: DenseMatrix, provenance: Theta0Provenance) -> Result<Self> {
        if b0.len() != w0.rows() {
            return Err(Error::usage(format!(
                "pelm: {} biases for {} weight rows",
                b0.len(),
                w0.rows()
            )));
        }
        if !b0.iter().all(|v| v.is_finite()) || !w0.is_finite() {
            return Err(Error::numeric("pelm: non-finite parameters"));
        }
        Ok(PelmParams { b0, w0, provenance })
    }

    pub fn hidden_count(&self) -> usize {
        self.b0.len()
    }

    pub fn input_dim(&self) -> usize {
        self.w0.cols()
    }

    pub fn b0(&self) -> &[f64] {
        &self.b0
    }

    pub fn w0(&self) -> &DenseMatrix {
        &self.w0
    }

    pub fn provenance(&self) -> &Theta0Provenance {
        &self.provenance
    }

    /// Byte checksum of the parameter content; training must never change it.
    pub fn checksum(&self) -> u64 {
        let mut h = Fnv1a::new();
        h.update_f64s(&self.b0);
        h.update_f64s(self.w0.data());
        h.finish()
    }

    /// Feed-forward potentials `u(x) = b0 + w0 x`.
    pub fn potentials(&self, x: &[f64]) -> Result<Vec<f64>> {
        let mut u = self.w0.matvec(x)?;
        for (uj, bj) in u.iter_mut().zip(&self.b0) {
            *uj += bj;
        }
        Ok(u)
    }

    /// Draw `s` independent ±1 configurations of the layer for input `x`.
    pub fn sample(&self, x: &[f64], s: usize, rng: &mut RngStream) -> Result<PelmSampleBatch> {
        if s == 0 {
            return Err(Error::usage("pelm sample: s must be >= 1"));
        }
        let u = self.potentials(x)?;
        // P(z_j = +1) = e^u / (2 cosh u) = 1 / (1 + e^{-2u}).
        let p_plus: Vec<f64> = u.iter().map(|&uj| 1.0 / (1.0 + (-2.0 * uj).exp())).collect();
        let hidden = self.hidden_count();
        let mut samples = DenseMatrix::zeros(s, hidden);
        for row in 0..s {
            let out = samples.row_mut(row);
            for (zj, &p) in out.iter_mut().zip(&p_plus) {
                *zj = if rng.uniform() < p { 1.0 } else { -1.0 };
            }
        }
        Ok(PelmSampleBatch { samples })
    }

    /// Deterministic mode: `tanh(u(x))`, the expectation of [`Self::sample`].
    pub fn deterministic(&self, x: &[f64]) -> Result<Vec<f64>> {
        Ok(self.potentials(x)?.into_iter().map(f64::tanh).collect())
    }
}

/// A batch of `S` layer configurations for one input; every entry is ±1.
#[derive(Debug, Clone)]
pub struct PelmSampleBatch {
    samples: DenseMatrix,
}

impl PelmSampleBatch {
    pub fn count(&self) -> usize {
        self.samples.rows()
    }

    pub fn get(&self, index: usize) -> &[f64] {
        self.samples.row(index)
    }

    pub fn iter(&self) -> impl Iterator<Item = &[f64]> {
        (0..self.count()).map(move |i| self.get(i))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::math::init_gaussian_scaled;

    fn layer(b0: Vec<f64>, w0: Vec<Vec<f64>>) -> PelmParams {
        let rows = w0.len();
        let cols = w0[0].len();
        let data: Vec<f64> = w0.into_iter().flatten().collect();
        PelmParams::new(
            b0,
            DenseMatrix::from_vec(rows, cols, data).unwrap(),
            Theta0Provenance::Random { seed: 0 },
        )
        .unwrap()
    }

    #[test]
    fn potentials_hand_case() {
        let p = layer(vec![1.0], vec![vec![2.0, -1.0]]);
        assert_eq!(p.potentials(&[1.0, 1.0]).unwrap(), vec![2.0]);
        assert_eq!(p.potentials(&[0.0, 0.0]).unwrap(), vec![1.0]);
    }

    #[test]
    fn zero_params_zero_potentials() {
        let p = layer(vec![0.0, 0.0], vec![vec![0.0], vec![0.0]]);
        assert_eq!(p.potentials(&[3.0]).unwrap(), vec![0.0, 0.0]);
    }

    #[test]
    fn samples_are_signs() {
        let p = layer(vec![0.3, -0.2], vec![vec![0.5], vec![-0.5]]);
        let batch = p.sample(&[1.0], 64, &mut RngStream::new(1, 0)).unwrap();
        assert_eq!(batch.count(), 64);
        for z in batch.iter() {
            assert!(z.iter().all(|&v| v == 1.0 || v == -1.0));
        }
        assert!(matches!(
            p.sample(&[1.0], 0, &mut RngStream::new(1, 0)),
            Err(Error::Usage(_))
        ));
    }

    #[test]
    fn fair_coin_at_zero_potential() {
        let p = layer(vec![0.0], vec![vec![0.0]]);
        let s = 100_000;
        let batch = p.sample(&[0.7], s, &mut RngStream::new(2, 0)).unwrap();
        let mean: f64 = batch.iter().map(|z| z[0]).sum::<f64>() / s as f64;
        assert!(mean.abs() < 3.0 / (s as f64).sqrt(), "mean {mean}");
    }

    #[test]
    fn saturated_potential_pins_the_unit() {
        let p = layer(vec![20.0], vec![vec![0.0]]);
        let batch = p.sample(&[0.0], 10_000, &mut RngStream::new(3, 0)).unwrap();
        assert!(batch.iter().all(|z| z[0] == 1.0));
        let p = layer(vec![-20.0], vec![vec![0.0]]);
        let batch = p.sample(&[0.0], 10_000, &mut RngStream::new(3, 1)).unwrap();
        assert!(batch.iter().all(|z| z[0] == -1.0));
    }

    #[test]
    fn plus_frequency_matches_logistic_law() {
        // u = 0.5 gives P(+1) = 1/(1+e^{-1}) = 0.7310586.
        let p = layer(vec![0.5], vec![vec![0.0]]);
        let s = 100_000;
        let batch = p.sample(&[0.0], s, &mut RngStream::new(4, 0)).unwrap();
        let freq = batch.iter().filter(|z| z[0] == 1.0).count() as f64 / s as f64;
        let expect = 1.0 / (1.0 + (-1.0f64).exp());
        assert!((expect - 0.731_058_6).abs() < 1e-7);
        let se = (expect * (1.0 - expect) / s as f64).sqrt();
        assert!((freq - expect).abs() < 3.0 * se, "freq {freq}");
    }

    #[test]
    fn deterministic_mode_is_tanh() {
        let p = layer(vec![0.0, 1.0, 30.0], vec![vec![0.0]; 3]);
        let z = p.deterministic(&[0.0]).unwrap();
        assert_eq!(z[0], 0.0);
        assert!((z[1] - 0.761_594_2).abs() < 1e-7);
        assert!((z[2] - 1.0).abs() < 1e-12);
    }

    #[test]
    fn sample_mean_converges_to_deterministic() {
        let p = layer(vec![0.8, -0.3], vec![vec![0.4], vec![-1.1]]);
        let x = [0.5];
        let expect = p.deterministic(&x).unwrap();
        let s = 100_000;
        let batch = p.sample(&x, s, &mut RngStream::new(5, 0)).unwrap();
        for j in 0..2 {
            let mean: f64 = batch.iter().map(|z| z[j]).sum::<f64>() / s as f64;
            // Var[z_j] = 1 - tanh^2(u_j).
            let var = 1.0 - expect[j] * expect[j];
            let se = (var / s as f64).sqrt();
            assert!((mean - expect[j]).abs() < 3.0 * se, "unit {j}: {mean} vs {}", expect[j]);
        }
    }

    #[test]
    fn unit_variance_at_zero_potential() {
        let p = layer(vec![0.0], vec![vec![0.0]]);
        let s = 100_000;
        let batch = p.sample(&[0.0], s, &mut RngStream::new(6, 0)).unwrap();
        let mean: f64 = batch.iter().map(|z| z[0]).sum::<f64>() / s as f64;
        let var: f64 = batch.iter().map(|z| (z[0] - mean) * (z[0] - mean)).sum::<f64>() / s as f64;
        assert!((var - 1.0).abs() <= 0.02, "var {var}");
    }

    #[test]
    fn deterministic_variance_grows_with_input_noise() {
        // With fixed weights and x = noise of scale sigma, the spread of
        // tanh(w . x) must be non-decreasing across the sigma grid.
        let n = 64;
        let mut rng = RngStream::new(7, 0);
        let w0 = init_gaussian_scaled(1, n, &mut rng).unwrap();
        let p = PelmParams::new(vec![0.0], w0, Theta0Provenance::Random { seed: 7 }).unwrap();
        let draws = 100_000;
        let mut variances = Vec::new();
        for (level, sigma) in [0.2, 0.4, 0.6, 0.8, 1.0].iter().enumerate() {
            let mut noise_rng = RngStream::new(8, level as u64);
            let mut sum = 0.0;
            let mut sum_sq = 0.0;
            for _ in 0..draws {
                let eta: Vec<f64> = (0..n).map(|_| sigma * noise_rng.normal()).collect();
                let z = p.deterministic(&eta).unwrap()[0];
                sum += z;
                sum_sq += z * z;
            }
            let mean = sum / draws as f64;
            variances.push(sum_sq / draws as f64 - mean * mean);
        }
        for w in variances.windows(2) {
            assert!(w[1] >= w[0] - 1e-3, "variance decreased: {variances:?}");
        }
    }

    #[test]
    fn checksum_tracks_content() {
        let a = layer(vec![1.0], vec![vec![2.0]]);
        let b = layer(vec![1.0], vec![vec![2.0]]);
        let c = layer(vec![1.0], vec![vec![2.0 + 1e-12]]);
        assert_eq!(a.checksum(), b.checksum());
        assert_ne!(a.checksum(), c.checksum());
    }
}
