//! Gaussian-Bernoulli RBM used as an unsupervised pretrainer for the frozen
//! layer.
//!
//! Energy (for visible `x` in R^n and hidden `z` in {-1,+1}^H):
//!
//! ```text
//! E(z, x) = 1/2 sum_i x_i^2 / s2_i - sum_i c_i x_i - sum_j b0_j z_j - sum_{j,i} w0_ji z_j x_i
//! ```
//!
//! Note the coupling term is not divided by the visible variances; this is
//! the modified parameterization this crate targets, and the conditionals
//! below are derived from it. Variances are learned through `s_i = ln s2_i`
//! so they stay positive. Given `x`, the hidden units are exactly the ±1
//! Bernoulli law of the frozen layer, which is what makes the trained `b0`,
//! `w0` exportable as [`PelmParams`].

use crate::error::{Error, Result};
use crate::math::{log_2cosh, log_sum_exp, AdamState, DenseMatrix, RngStream};
use crate::oracle::sign_configurations;
use crate::pelm::{PelmParams, Theta0Provenance};
use crate::training::{effective_batch_size, minibatch_indices, GRAD_CHUNK};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

/// Enumeration bound for the exact likelihood (2^H terms).
pub const EXACT_HIDDEN_LIMIT: usize = 12;

/// Parameters: hidden biases `b0` (H), weights `w0` (H x n), visible biases
/// `c` (n), and log-variances `s` (n) with `sigma2_i = exp(s_i)`.
#[derive(Debug, Clone, PartialEq)]
pub struct GbrbmParams {
    pub b0: Vec<f64>,
    pub w0: DenseMatrix,
    pub c: Vec<f64>,
    pub s: Vec<f64>,
}

impl GbrbmParams {
    pub fn zeros(input_dim: usize, hidden: usize) -> Self {
        GbrbmParams {
            b0: vec![0.0; hidden],
            w0: DenseMatrix::zeros(hidden, input_dim),
            c: vec![0.0; input_dim],
            s: vec![0.0; input_dim],
        }
    }

    /// Standard starting point: zero biases, unit variances (`s = 0`,
    /// matching standardized inputs), Gaussian weights of scale `1/sqrt(n)`.
    pub fn init(input_dim: usize, hidden: usize, rng: &mut RngStream) -> Result<Self> {
        Ok(GbrbmParams {
            b0: vec![0.0; hidden],
            w0: crate::math::init_gaussian_scaled(hidden, input_dim, rng)?,
            c: vec![0.0; input_dim],
            s: vec![0.0; input_dim],
        })
    }

    pub fn hidden_count(&self) -> usize {
        self.b0.len()
    }

    pub fn input_dim(&self) -> usize {
        self.c.len()
    }

    pub fn sigma2(&self) -> Vec<f64> {
        self.s.iter().map(|si| si.exp()).collect()
    }

    pub fn validate(&self) -> Result<()> {
        if self.w0.rows() != self.hidden_count()
            || self.w0.cols() != self.input_dim()
            || self.s.len() != self.input_dim()
        {
            return Err(Error::usage("gbrbm: inconsistent parameter shapes"));
        }
        let finite = self.b0.iter().chain(&self.c).chain(&self.s).all(|v| v.is_finite())
            && self.w0.is_finite();
        if !finite {
            return Err(Error::numeric("gbrbm: non-finite parameters"));
        }
        Ok(())
    }

    pub fn flat_len(&self) -> usize {
        self.b0.len() + self.w0.len() + self.c.len() + self.s.len()
    }

    pub(crate) fn blocks(&self) -> [&[f64]; 4] {
        [&self.b0, self.w0.data(), &self.c, &self.s]
    }

    pub(crate) fn blocks_mut(&mut self) -> [&mut [f64]; 4] {
        [&mut self.b0, self.w0.data_mut(), &mut self.c, &mut self.s]
    }

    pub fn to_flat(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.flat_len());
        for b in self.blocks() {
            out.extend_from_slice(b);
        }
        out
    }

    pub fn set_flat(&mut self, flat: &[f64]) -> Result<()> {
        if flat.len() != self.flat_len() {
            return Err(Error::usage("gbrbm set_flat: length mismatch"));
        }
        let mut offset = 0;
        for block in self.blocks_mut() {
            block.copy_from_slice(&flat[offset..offset + block.len()]);
            offset += block.len();
        }
        Ok(())
    }

    fn add_scaled(&mut self, other: &GbrbmParams, scale: f64) {
        for (a, b) in self.b0.iter_mut().zip(&other.b0) {
            *a += scale * b;
        }
        self.w0.add_scaled(&other.w0, scale).expect("shape checked");
        for (a, b) in self.c.iter_mut().zip(&other.c) {
            *a += scale * b;
        }
        for (a, b) in self.s.iter_mut().zip(&other.s) {
            *a += scale * b;
        }
    }

    fn scale(&mut self, factor: f64) {
        for block in self.blocks_mut() {
            for v in block.iter_mut() {
                *v *= factor;
            }
        }
    }

    /// Hidden potentials `u(x) = b0 + w0 x`.
    fn potentials(&self, x: &[f64]) -> Result<Vec<f64>> {
        let mut u = self.w0.matvec(x)?;
        for (uj, bj) in u.iter_mut().zip(&self.b0) {
            *uj += bj;
        }
        Ok(u)
    }

    /// `P(z_j = +1 | x) = 1 / (1 + e^{-2 u_j})`. Independent of `c` and `s`,
    /// which cancel when conditioning on the visibles.
    pub fn hidden_conditional(&self, x: &[f64]) -> Result<Vec<f64>> {
        Ok(self
            .potentials(x)?
            .into_iter()
            .map(|u| 1.0 / (1.0 + (-2.0 * u).exp()))
            .collect())
    }

    /// Per-dimension Gaussian law of `x | z`: mean `sigma2_i (c_i + (w0^T z)_i)`
    /// and variance `sigma2_i` (completing the square in the energy).
    pub fn visible_conditional(&self, z: &[f64]) -> Result<(Vec<f64>, Vec<f64>)> {
        if z.len() != self.hidden_count() {
            return Err(Error::usage(format!(
                "visible_conditional: {} hidden values for {} units",
                z.len(),
                self.hidden_count()
            )));
        }
        if !z.iter().all(|&v| v == 1.0 || v == -1.0) {
            return Err(Error::usage("visible_conditional: hidden values must be +/-1"));
        }
        let wz = self.w0.matvec_t(z)?;
        let var = self.sigma2();
        let mean = self
            .c
            .iter()
            .zip(&wz)
            .zip(&var)
            .map(|((ci, wi), vi)| vi * (ci + wi))
            .collect();
        Ok((mean, var))
    }

    fn sample_hidden(&self, x: &[f64], rng: &mut RngStream) -> Result<Vec<f64>> {
        Ok(self
            .hidden_conditional(x)?
            .into_iter()
            .map(|p| if rng.uniform() < p { 1.0 } else { -1.0 })
            .collect())
    }

    /// One Gaussian draw from `x | z`.
    pub fn sample_visible(&self, z: &[f64], rng: &mut RngStream) -> Result<Vec<f64>> {
        let (mean, var) = self.visible_conditional(z)?;
        Ok(mean
            .into_iter()
            .zip(var)
            .map(|(m, v)| m + v.sqrt() * rng.normal())
            .collect())
    }

    /// Data-side expectation of the energy gradient for one visible vector,
    /// accumulated into `acc` with the given sign. Hidden statistics use the
    /// exact conditional expectation `tanh(u(x))`.
    fn accumulate_moment(&self, acc: &mut GbrbmParams, x: &[f64], sign: f64) -> Result<()> {
        let u = self.potentials(x)?;
        let var = self.sigma2();
        for (j, uj) in u.iter().enumerate() {
            let t = uj.tanh();
            acc.b0[j] += sign * t;
            if t != 0.0 {
                let row = acc.w0.row_mut(j);
                for (g, &xi) in row.iter_mut().zip(x) {
                    *g += sign * t * xi;
                }
            }
        }
        for (i, &xi) in x.iter().enumerate() {
            acc.c[i] += sign * xi;
            // d(-E)/ds_i via sigma2_i = exp(s_i).
            acc.s[i] += sign * xi * xi / (2.0 * var[i]);
        }
        Ok(())
    }

    /// CD-k gradient estimate of the marginal log-likelihood over the given
    /// rows: data moment minus the k-step Gibbs reconstruction moment. Chains
    /// restart at the data. Deterministic for a fixed stream: each row uses
    /// the substream keyed by its position in `indices`.
    pub fn cd_update(
        &self,
        inputs: &DenseMatrix,
        indices: &[usize],
        k: usize,
        rng: &RngStream,
    ) -> Result<GbrbmParams> {
        if indices.is_empty() {
            return Err(Error::usage("cd_update: empty batch"));
        }
        if k == 0 {
            return Err(Error::usage("cd_update: k must be >= 1"));
        }
        let chunk_results: Vec<GbrbmParams> = indices
            .par_chunks(GRAD_CHUNK)
            .enumerate()
            .map(|(chunk_idx, chunk)| -> Result<GbrbmParams> {
                let mut acc = GbrbmParams::zeros(self.input_dim(), self.hidden_count());
                for (offset, &row) in chunk.iter().enumerate() {
                    let pos = (chunk_idx * GRAD_CHUNK + offset) as u64;
                    let mut datum_rng = rng.substream(pos);
                    let x = inputs.row(row);
                    self.accumulate_moment(&mut acc, x, 1.0)?;
                    let mut z = self.sample_hidden(x, &mut datum_rng)?;
                    let mut v = x.to_vec();
                    for step in 0..k {
                        v = self.sample_visible(&z, &mut datum_rng)?;
                        if step + 1 < k {
                            z = self.sample_hidden(&v, &mut datum_rng)?;
                        }
                    }
                    self.accumulate_moment(&mut acc, &v, -1.0)?;
                }
                Ok(acc)
            })
            .collect::<Result<Vec<_>>>()?;

        let mut total = GbrbmParams::zeros(self.input_dim(), self.hidden_count());
        for g in &chunk_results {
            total.add_scaled(g, 1.0);
        }
        total.scale(1.0 / indices.len() as f64);
        Ok(total)
    }

    /// Exact mean marginal log-likelihood by enumerating the hidden layer
    /// (feasible up to [`EXACT_HIDDEN_LIMIT`] units). Used as the training
    /// oracle for contrastive divergence.
    pub fn exact_log_likelihood(&self, inputs: &DenseMatrix) -> Result<f64> {
        let h = self.hidden_count();
        if h > EXACT_HIDDEN_LIMIT {
            return Err(Error::capability(format!(
                "exact_log_likelihood: {h} hidden units exceeds the enumeration limit {EXACT_HIDDEN_LIMIT}"
            )));
        }
        if inputs.rows() == 0 {
            return Err(Error::usage("exact_log_likelihood: no inputs"));
        }
        let var = self.sigma2();

        // ln Z = sum_i ln sqrt(2 pi s2_i) + lse_z [ b0.z + sum_i s2_i a_i(z)^2 / 2 ],
        // a(z) = c + w0^T z  (Gaussian integral over the visibles).
        let gauss_norm: f64 = var.iter().map(|v| 0.5 * (2.0 * std::f64::consts::PI * v).ln()).sum();
        let z_terms: Vec<f64> = sign_configurations(h)
            .map(|z| {
                let bz: f64 = self.b0.iter().zip(&z).map(|(b, zj)| b * zj).sum();
                let a = self.w0.matvec_t(&z).expect("shape checked");
                let quad: f64 = a
                    .iter()
                    .zip(&self.c)
                    .zip(&var)
                    .map(|((ai, ci), vi)| vi * (ci + ai) * (ci + ai) / 2.0)
                    .sum();
                bz + quad
            })
            .collect();
        let ln_z = gauss_norm + log_sum_exp(&z_terms)?;

        let mut total = 0.0;
        for r in 0..inputs.rows() {
            let x = inputs.row(r);
            let u = self.potentials(x)?;
            let mut ln_unnorm = 0.0;
            for (i, &xi) in x.iter().enumerate() {
                ln_unnorm += -xi * xi / (2.0 * var[i]) + self.c[i] * xi;
            }
            for uj in &u {
                ln_unnorm += log_2cosh(*uj);
            }
            total += ln_unnorm - ln_z;
        }
        Ok(total / inputs.rows() as f64)
    }

    /// Mini-batch Adam ascent on the CD gradient estimates.
    pub fn train(&self, inputs: &DenseMatrix, config: &GbrbmTrainConfig, rng: &RngStream) -> Result<GbrbmParams> {
        self.validate()?;
        if inputs.rows() == 0 {
            return Err(Error::usage("gbrbm train: empty inputs"));
        }
        if inputs.cols() != self.input_dim() {
            return Err(Error::usage(format!(
                "gbrbm train: {} input columns vs dimension {}",
                inputs.cols(),
                self.input_dim()
            )));
        }
        let batch_size = effective_batch_size(config.batch_size, inputs.rows());
        let mut current = self.clone();
        let mut adam = AdamState::new(current.flat_len(), config.adam);
        for epoch in 0..config.epochs {
            let mut epoch_rng = rng.substream(epoch as u64);
            let batches = minibatch_indices(inputs.rows(), batch_size, &mut epoch_rng);
            for (b, batch) in batches.iter().enumerate() {
                let grad = current.cd_update(inputs, batch, config.cd_k, &epoch_rng.substream(1 + b as u64))?;
                let grad_blocks = grad.blocks();
                adam.ascend(&mut current.blocks_mut(), &grad_blocks)?;
            }
        }
        Ok(current)
    }

    /// Freeze the trained `b0`, `w0` as an untrained-layer parameter set;
    /// the visible-side parameters are discarded.
    pub fn export_pelm(&self, run_id: impl Into<String>) -> Result<PelmParams> {
        PelmParams::new(
            self.b0.clone(),
            self.w0.clone(),
            Theta0Provenance::Gbrbm { run_id: run_id.into() },
        )
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GbrbmTrainConfig {
    pub epochs: usize,
    pub batch_size: usize,
    pub cd_k: usize,
    #[serde(default)]
    pub adam: crate::math::AdamConfig,
}

impl Default for GbrbmTrainConfig {
    fn default() -> Self {
        GbrbmTrainConfig {
            epochs: 100,
            batch_size: 100,
            cd_k: 1,
            adam: crate::math::AdamConfig::default(),
        }
    }
}
