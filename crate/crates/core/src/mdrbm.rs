//! Four-layer model: a trainable discriminative RBM stacked on a frozen
//! probabilistic layer.
//!
//! Inference mixes the DRBM class distribution over layer samples,
//! `P(t | x) ≈ S^{-1} sum_v P(t | z_v)`, and learning follows the sampled
//! log-likelihood gradient in which each sample's DRBM gradient is weighted
//! by `w_v = P(t | z_v) / sum_v' P(t | z_v')`. The weights are formed in
//! log space, so they sum to one even when every sample gives the true class
//! a vanishing probability. Exact enumeration versions of both quantities
//! exist for small layers and anchor the test suites.

use crate::drbm::{self, ClassDistribution, DrbmParams};
use crate::error::{Error, Result};
use crate::math::{log_2cosh, log_sum_exp, AdamState, RngStream};
use crate::oracle::sign_configurations;
use crate::pelm::PelmParams;
use crate::training::{
    effective_batch_size, minibatch_indices, BestTracker, EpochRecord, TrainConfig, TrainOutcome,
    GRAD_CHUNK,
};
use crate::data::Dataset;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

/// Enumeration bound for the exact routines (2^H terms).
pub const EXACT_HIDDEN_LIMIT: usize = 12;

/// Monte-Carlo sample counts: few samples during learning, more at inference.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct SampleConfig {
    #[serde(default = "default_s_train")]
    pub s_train: usize,
    #[serde(default = "default_s_infer")]
    pub s_infer: usize,
}

fn default_s_train() -> usize {
    5
}

fn default_s_infer() -> usize {
    50
}

impl Default for SampleConfig {
    fn default() -> Self {
        SampleConfig {
            s_train: default_s_train(),
            s_infer: default_s_infer(),
        }
    }
}

impl SampleConfig {
    pub fn validate(&self) -> Result<()> {
        if self.s_train == 0 || self.s_infer == 0 {
            return Err(Error::usage("sample counts must be >= 1"));
        }
        Ok(())
    }
}

/// Frozen layer plus trainable classifier; the classifier's input width must
/// equal the layer width, and the layer never changes over the model's life.
#[derive(Debug, Clone)]
pub struct MdrbmModel {
    pelm: PelmParams,
    drbm: DrbmParams,
}

impl MdrbmModel {
    pub fn new(pelm: PelmParams, drbm: DrbmParams) -> Result<Self> {
        drbm.validate()?;
        if drbm.input_dim() != pelm.hidden_count() {
            return Err(Error::usage(format!(
                "mdrbm: classifier input width {} does not match layer width {}",
                drbm.input_dim(),
                pelm.hidden_count()
            )));
        }
        Ok(MdrbmModel { pelm, drbm })
    }

    pub fn pelm(&self) -> &PelmParams {
        &self.pelm
    }

    pub fn drbm(&self) -> &DrbmParams {
        &self.drbm
    }

    pub fn into_parts(self) -> (PelmParams, DrbmParams) {
        (self.pelm, self.drbm)
    }

    pub fn input_dim(&self) -> usize {
        self.pelm.input_dim()
    }

    pub fn class_count(&self) -> usize {
        self.drbm.class_count()
    }

    /// Monte-Carlo class distribution: average the per-sample DRBM
    /// probabilities over `s` layer draws (log-space mixture).
    pub fn class_probs(&self, x: &[f64], s: usize, rng: &mut RngStream) -> Result<ClassDistribution> {
        if s == 0 {
            return Err(Error::usage("class_probs: s must be >= 1"));
        }
        let batch = self.pelm.sample(x, s, rng)?;
        let k = self.class_count();
        let mut per_class: Vec<Vec<f64>> = vec![Vec::with_capacity(s); k];
        for z in batch.iter() {
            let dist = drbm::class_log_probs(&self.drbm, z)?;
            for (bucket, lp) in per_class.iter_mut().zip(dist.log_probs()) {
                bucket.push(*lp);
            }
        }
        let ln_s = (s as f64).ln();
        let scores: Vec<f64> = per_class
            .iter()
            .map(|lps| log_sum_exp(lps).map(|v| v - ln_s))
            .collect::<Result<Vec<_>>>()?;
        ClassDistribution::from_scores(&scores)
    }

    /// Exact class distribution by enumerating every layer configuration,
    /// weighted by its product-Bernoulli mass. Feasible up to
    /// [`EXACT_HIDDEN_LIMIT`] layer units.
    pub fn exact_class_probs(&self, x: &[f64]) -> Result<ClassDistribution> {
        let hidden = self.pelm.hidden_count();
        if hidden > EXACT_HIDDEN_LIMIT {
            return Err(Error::capability(format!(
                "exact_class_probs: layer width {hidden} exceeds the enumeration limit {EXACT_HIDDEN_LIMIT}"
            )));
        }
        let u = self.pelm.potentials(x)?;
        let k = self.class_count();
        let mut per_class: Vec<Vec<f64>> = vec![Vec::with_capacity(1 << hidden); k];
        for z in sign_configurations(hidden) {
            let ln_mass: f64 = u
                .iter()
                .zip(&z)
                .map(|(uj, zj)| uj * zj - log_2cosh(*uj))
                .collect::<Vec<f64>>()
                .iter()
                .sum();
            let dist = drbm::class_log_probs(&self.drbm, &z)?;
            for (bucket, lp) in per_class.iter_mut().zip(dist.log_probs()) {
                bucket.push(ln_mass + lp);
            }
        }
        let scores: Vec<f64> = per_class
            .iter()
            .map(|terms| log_sum_exp(terms))
            .collect::<Result<Vec<_>>>()?;
        ClassDistribution::from_scores(&scores)
    }

    /// Sampled prediction; ties break to the lowest class index.
    pub fn predict(&self, x: &[f64], s: usize, rng: &mut RngStream) -> Result<usize> {
        Ok(self.class_probs(x, s, rng)?.argmax())
    }

    /// Mean self-normalized gradient estimate over the selected rows, plus
    /// the mean sampled log-likelihood. Each row draws its layer samples from
    /// the substream keyed by its position in `indices`, so results are
    /// bit-identical for any thread count.
    pub fn sampled_gradients(
        &self,
        data: &Dataset,
        indices: &[usize],
        s: usize,
        rng: &RngStream,
    ) -> Result<(DrbmParams, f64)> {
        if indices.is_empty() {
            return Err(Error::usage("sampled_gradients: empty batch"));
        }
        if s == 0 {
            return Err(Error::usage("sampled_gradients: s must be >= 1"));
        }
        let chunk_results: Vec<(DrbmParams, f64)> = indices
            .par_chunks(GRAD_CHUNK)
            .enumerate()
            .map(|(chunk_idx, chunk)| -> Result<(DrbmParams, f64)> {
                let mut grad = DrbmParams::zeros(
                    self.drbm.input_dim(),
                    self.drbm.hidden_count(),
                    self.class_count(),
                );
                let mut ll = 0.0;
                for (offset, &row) in chunk.iter().enumerate() {
                    let pos = (chunk_idx * GRAD_CHUNK + offset) as u64;
                    let mut datum_rng = rng.substream(pos);
                    let x = data.input(row);
                    let class = data.label(row);

                    let batch = self.pelm.sample(x, s, &mut datum_rng)?;
                    let mut stats = Vec::with_capacity(s);
                    let mut ln_probs = Vec::with_capacity(s);
                    for z in batch.iter() {
                        let (tanh_pots, dist) = drbm::forward_stats(&self.drbm, z)?;
                        ln_probs.push(dist.log_probs()[class]);
                        stats.push((tanh_pots, dist));
                    }
                    let normalizer = log_sum_exp(&ln_probs)?;
                    for (v, (tanh_pots, dist)) in stats.iter().enumerate() {
                        let weight = (ln_probs[v] - normalizer).exp();
                        drbm::accumulate_from_stats(
                            &mut grad,
                            batch.get(v),
                            class,
                            weight,
                            tanh_pots,
                            dist,
                        );
                    }
                    ll += normalizer - (s as f64).ln();
                }
                Ok((grad, ll))
            })
            .collect::<Result<Vec<_>>>()?;

        let mut total = DrbmParams::zeros(
            self.drbm.input_dim(),
            self.drbm.hidden_count(),
            self.class_count(),
        );
        let mut ll = 0.0;
        for (g, l) in &chunk_results {
            for (dst, src) in total.blocks_mut().into_iter().zip(g.blocks()) {
                for (a, b) in dst.iter_mut().zip(src) {
                    *a += b;
                }
            }
            ll += l;
        }
        let scale = 1.0 / indices.len() as f64;
        for block in total.blocks_mut() {
            for v in block.iter_mut() {
                *v *= scale;
            }
        }
        Ok((total, ll * scale))
    }

    /// Exact gradient of the mean log-likelihood over the selected rows,
    /// computed by enumerating the layer posterior. Reference implementation
    /// for the sampled estimator; also returns the exact mean log-likelihood.
    pub fn exact_gradients(&self, data: &Dataset, indices: &[usize]) -> Result<(DrbmParams, f64)> {
        if indices.is_empty() {
            return Err(Error::usage("exact_gradients: empty batch"));
        }
        let hidden = self.pelm.hidden_count();
        if hidden > EXACT_HIDDEN_LIMIT {
            return Err(Error::capability(format!(
                "exact_gradients: layer width {hidden} exceeds the enumeration limit {EXACT_HIDDEN_LIMIT}"
            )));
        }
        let mut grad = DrbmParams::zeros(
            self.drbm.input_dim(),
            self.drbm.hidden_count(),
            self.class_count(),
        );
        let mut ll = 0.0;
        let configs: Vec<Vec<f64>> = sign_configurations(hidden).collect();
        for &row in indices {
            let x = data.input(row);
            let class = data.label(row);
            let u = self.pelm.potentials(x)?;
            // Joint log weights ln B(z | x) + ln P(t | z) over all z.
            let mut joint = Vec::with_capacity(configs.len());
            for z in &configs {
                let ln_mass: f64 = u.iter().zip(z).map(|(uj, zj)| uj * zj - log_2cosh(*uj)).sum();
                let dist = drbm::class_log_probs(&self.drbm, z)?;
                joint.push(ln_mass + dist.log_probs()[class]);
            }
            let normalizer = log_sum_exp(&joint)?;
            ll += normalizer;
            for (z, joint_lw) in configs.iter().zip(&joint) {
                let weight = (joint_lw - normalizer).exp();
                if weight > 0.0 {
                    let (tanh_pots, dist) = drbm::forward_stats(&self.drbm, z)?;
                    drbm::accumulate_from_stats(&mut grad, z, class, weight, &tanh_pots, &dist);
                }
            }
        }
        let scale = 1.0 / indices.len() as f64;
        for block in grad.blocks_mut() {
            for v in block.iter_mut() {
                *v *= scale;
            }
        }
        Ok((grad, ll * scale))
    }

    /// Sampled accuracy over a dataset; row `i` uses substream `i` of `rng`.
    pub(crate) fn dataset_accuracy(&self, data: &Dataset, s: usize, rng: &RngStream) -> Result<f64> {
        let correct: usize = (0..data.len())
            .into_par_iter()
            .map(|i| -> Result<usize> {
                let mut datum_rng = rng.substream(i as u64);
                Ok(usize::from(
                    self.predict(data.input(i), s, &mut datum_rng)? == data.label(i),
                ))
            })
            .try_reduce(|| 0, |a, b| Ok(a + b))?;
        Ok(correct as f64 / data.len() as f64)
    }

    /// Shuffled mini-batch Adam ascent on the sampled log-likelihood.
    ///
    /// Fresh layer samples are drawn for every datum in every epoch (the
    /// resampling is what gives the data-augmentation effect), training uses
    /// `sampling.s_train` draws, held-out evaluation uses `sampling.s_infer`.
    /// The frozen layer is never touched.
    pub fn train(
        &self,
        data: &Dataset,
        eval: Option<&Dataset>,
        config: &TrainConfig,
        sampling: &SampleConfig,
        rng: &RngStream,
    ) -> Result<TrainOutcome<MdrbmModel>> {
        sampling.validate()?;
        if data.is_empty() {
            return Err(Error::usage("train: empty dataset"));
        }
        if data.feature_count() != self.input_dim() || data.class_count() != self.class_count() {
            return Err(Error::usage(format!(
                "train: dataset ({} features, {} classes) does not match model ({}, {})",
                data.feature_count(),
                data.class_count(),
                self.input_dim(),
                self.class_count()
            )));
        }

        let batch_size = effective_batch_size(config.batch_size, data.len());
        let mut current = self.clone();
        let mut adam = AdamState::new(current.drbm.flat_len(), config.adam);
        let mut tracker = BestTracker::new(&current);
        let mut history = Vec::with_capacity(config.epochs);

        for epoch in 0..config.epochs {
            let mut epoch_rng = rng.substream(epoch as u64);
            let batches = minibatch_indices(data.len(), batch_size, &mut epoch_rng);
            let mut ll_sum = 0.0;
            for (b, batch) in batches.iter().enumerate() {
                let sample_rng = epoch_rng.substream(1 + b as u64);
                let (grad, ll) =
                    current.sampled_gradients(data, batch, sampling.s_train, &sample_rng)?;
                ll_sum += ll * batch.len() as f64;
                let grad_blocks = grad.blocks();
                adam.ascend(&mut current.drbm.blocks_mut(), &grad_blocks)?;
            }
            let train_ll = ll_sum / data.len() as f64;

            let eval_accuracy = match eval {
                Some(ev) if config.eval_every > 0 && (epoch + 1) % config.eval_every == 0 => {
                    let acc =
                        current.dataset_accuracy(ev, sampling.s_infer, &epoch_rng.substream(0))?;
                    tracker.observe(epoch, acc, &current);
                    Some(acc)
                }
                _ => None,
            };
            history.push(EpochRecord {
                epoch,
                train_ll,
                eval_accuracy,
            });
        }

        Ok(tracker.finish(current, history))
    }
}
