//! Discriminative restricted Boltzmann machine: a three-layer energy-based
//! classifier whose ±1 hidden units marginalize in closed form.
//!
//! For an input `x` the per-class score is
//! `F_k(x) = b2_k + sum_j ln 2cosh(lambda_kj)` with
//! `lambda_kj = b1_j + w2_kj + (w1 x)_j`; class probabilities are the softmax
//! of `F`. Inference and the exact likelihood gradient both cost
//! `O(H (n + K))` per input. Hidden-state enumeration is never used here; it
//! exists only as a cross-check in [`crate::oracle`].

use crate::data::Dataset;
use crate::error::{Error, Result};
use crate::math::{init_xavier, log_2cosh, log_sum_exp, AdamState, DenseMatrix, RngStream};
use crate::training::{
    effective_batch_size, minibatch_indices, BestTracker, EpochRecord, TrainConfig, TrainOutcome,
    GRAD_CHUNK,
};
use rayon::prelude::*;

/// Trainable parameter set: hidden biases `b1` (H), output biases `b2` (K),
/// input-hidden weights `w1` (H x n), hidden-output weights `w2` (K x H).
#[derive(Debug, Clone, PartialEq)]
pub struct DrbmParams {
    pub b1: Vec<f64>,
    pub b2: Vec<f64>,
    pub w1: DenseMatrix,
    pub w2: DenseMatrix,
}

impl DrbmParams {
    pub fn zeros(input_dim: usize, hidden: usize, classes: usize) -> Self {
        DrbmParams {
            b1: vec![0.0; hidden],
            b2: vec![0.0; classes],
            w1: DenseMatrix::zeros(hidden, input_dim),
            w2: DenseMatrix::zeros(classes, hidden),
        }
    }

    /// Xavier-initialized weights, zero biases.
    pub fn xavier(input_dim: usize, hidden: usize, classes: usize, rng: &mut RngStream) -> Result<Self> {
        Ok(DrbmParams {
            b1: vec![0.0; hidden],
            b2: vec![0.0; classes],
            w1: init_xavier(input_dim, hidden, rng)?,
            w2: init_xavier(hidden, classes, rng)?,
        })
    }

    pub fn input_dim(&self) -> usize {
        self.w1.cols()
    }

    pub fn hidden_count(&self) -> usize {
        self.b1.len()
    }

    pub fn class_count(&self) -> usize {
        self.b2.len()
    }

    pub fn validate(&self) -> Result<()> {
        let h = self.hidden_count();
        let k = self.class_count();
        if self.w1.rows() != h || self.w2.rows() != k || self.w2.cols() != h {
            return Err(Error::usage(format!(
                "drbm: inconsistent shapes (b1 {}, b2 {}, w1 {}x{}, w2 {}x{})",
                h,
                k,
                self.w1.rows(),
                self.w1.cols(),
                self.w2.rows(),
                self.w2.cols()
            )));
        }
        let finite = self.b1.iter().chain(&self.b2).all(|v| v.is_finite())
            && self.w1.is_finite()
            && self.w2.is_finite();
        if !finite {
            return Err(Error::numeric("drbm: non-finite parameters"));
        }
        Ok(())
    }

    pub fn flat_len(&self) -> usize {
        self.b1.len() + self.b2.len() + self.w1.len() + self.w2.len()
    }

    pub(crate) fn blocks(&self) -> [&[f64]; 4] {
        [&self.b1, &self.b2, self.w1.data(), self.w2.data()]
    }

    pub(crate) fn blocks_mut(&mut self) -> [&mut [f64]; 4] {
        [
            &mut self.b1,
            &mut self.b2,
            self.w1.data_mut(),
            self.w2.data_mut(),
        ]
    }

    /// Flatten in block order b1, b2, w1, w2 (used by gradient checks).
    pub fn to_flat(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.flat_len());
        for b in self.blocks() {
            out.extend_from_slice(b);
        }
        out
    }

    pub fn set_flat(&mut self, flat: &[f64]) -> Result<()> {
        if flat.len() != self.flat_len() {
            return Err(Error::usage(format!(
                "set_flat: {} values for {} parameters",
                flat.len(),
                self.flat_len()
            )));
        }
        let mut offset = 0;
        for block in self.blocks_mut() {
            block.copy_from_slice(&flat[offset..offset + block.len()]);
            offset += block.len();
        }
        Ok(())
    }

    fn add_scaled(&mut self, other: &DrbmParams, scale: f64) {
        for (a, b) in self.b1.iter_mut().zip(&other.b1) {
            *a += scale * b;
        }
        for (a, b) in self.b2.iter_mut().zip(&other.b2) {
            *a += scale * b;
        }
        self.w1.add_scaled(&other.w1, scale).expect("shape checked");
        self.w2.add_scaled(&other.w2, scale).expect("shape checked");
    }

    fn scale(&mut self, factor: f64) {
        for v in &mut self.b1 {
            *v *= factor;
        }
        for v in &mut self.b2 {
            *v *= factor;
        }
        self.w1.scale(factor);
        self.w2.scale(factor);
    }

    pub fn grad_norm(&self) -> f64 {
        self.blocks()
            .iter()
            .flat_map(|b| b.iter())
            .map(|v| v * v)
            .sum::<f64>()
            .sqrt()
    }
}

/// A normalized distribution over classes, kept in both log and linear form.
#[derive(Debug, Clone)]
pub struct ClassDistribution {
    log_probs: Vec<f64>,
    probs: Vec<f64>,
}

impl ClassDistribution {
    /// Normalize a vector of unnormalized log weights.
    pub fn from_scores(scores: &[f64]) -> Result<Self> {
        let z = log_sum_exp(scores)?;
        let log_probs: Vec<f64> = scores.iter().map(|s| s - z).collect();
        let probs: Vec<f64> = log_probs.iter().map(|lp| lp.exp()).collect();
        Ok(ClassDistribution { log_probs, probs })
    }

    pub fn class_count(&self) -> usize {
        self.probs.len()
    }

    pub fn log_probs(&self) -> &[f64] {
        &self.log_probs
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    /// Index of the most probable class; ties break to the lowest index.
    pub fn argmax(&self) -> usize {
        let mut best = 0;
        for (k, &p) in self.probs.iter().enumerate().skip(1) {
            if p > self.probs[best] {
                best = k;
            }
        }
        best
    }
}

/// Hidden-unit potentials for every class: entry `(k, j)` is
/// `b1_j + w2_kj + (w1 x)_j`. The `w1 x` product is computed once.
pub fn class_potentials(params: &DrbmParams, x: &[f64]) -> Result<DenseMatrix> {
    if x.len() != params.input_dim() {
        return Err(Error::usage(format!(
            "class_potentials: input length {} vs dimension {}",
            x.len(),
            params.input_dim()
        )));
    }
    let h = params.hidden_count();
    let k = params.class_count();
    let wx = params.w1.matvec(x)?;
    let mut pots = DenseMatrix::zeros(k, h);
    for ki in 0..k {
        let w2_row = params.w2.row(ki);
        let row = pots.row_mut(ki);
        for j in 0..h {
            row[j] = params.b1[j] + w2_row[j] + wx[j];
        }
    }
    Ok(pots)
}

fn scores_from_potentials(params: &DrbmParams, pots: &DenseMatrix) -> Vec<f64> {
    let k = params.class_count();
    let mut scores = Vec::with_capacity(k);
    for ki in 0..k {
        let mut f = params.b2[ki];
        for &lambda in pots.row(ki) {
            f += log_2cosh(lambda);
        }
        scores.push(f);
    }
    scores
}

/// Per-datum forward pass for gradient evaluation: the potentials matrix
/// with `tanh` applied in place, and the class distribution.
pub(crate) fn forward_stats(params: &DrbmParams, x: &[f64]) -> Result<(DenseMatrix, ClassDistribution)> {
    let mut pots = class_potentials(params, x)?;
    let scores = scores_from_potentials(params, &pots);
    for v in pots.data_mut() {
        *v = v.tanh();
    }
    Ok((pots, ClassDistribution::from_scores(&scores)?))
}

/// Exact class probabilities via the closed-form free energies.
pub fn class_log_probs(params: &DrbmParams, x: &[f64]) -> Result<ClassDistribution> {
    let pots = class_potentials(params, x)?;
    ClassDistribution::from_scores(&scores_from_potentials(params, &pots))
}

/// Most probable class for `x`; ties break to the lowest index.
pub fn predict(params: &DrbmParams, x: &[f64]) -> Result<usize> {
    Ok(class_log_probs(params, x)?.argmax())
}

/// Mean log-likelihood of the true classes over a dataset. Always <= 0.
pub fn log_likelihood(params: &DrbmParams, data: &Dataset) -> Result<f64> {
    if data.is_empty() {
        return Err(Error::usage("log_likelihood: empty dataset"));
    }
    let mut total = 0.0;
    for i in 0..data.len() {
        let dist = class_log_probs(params, data.input(i))?;
        total += dist.log_probs()[data.label(i)];
    }
    Ok(total / data.len() as f64)
}

/// Add `weight` times the log-likelihood gradient of one datum into `grad`,
/// given its forward statistics. Returns the datum's true-class log prob.
pub(crate) fn accumulate_from_stats(
    grad: &mut DrbmParams,
    x: &[f64],
    class: usize,
    weight: f64,
    tanh_pots: &DenseMatrix,
    dist: &ClassDistribution,
) -> f64 {
    let h = grad.hidden_count();
    let k = grad.class_count();
    let probs = dist.probs();

    // Responsibility-weighted hidden statistics: resp_j = sum_k p_k tanh(lambda_kj).
    let mut resp = vec![0.0; h];
    for ki in 0..k {
        let p = probs[ki];
        if p != 0.0 {
            for (r, &t) in resp.iter_mut().zip(tanh_pots.row(ki)) {
                *r += p * t;
            }
        }
    }

    for ki in 0..k {
        let delta = f64::from(ki == class) - probs[ki];
        grad.b2[ki] += weight * delta;
        let gw2 = grad.w2.row_mut(ki);
        let tk = tanh_pots.row(ki);
        let wd = weight * delta;
        for j in 0..h {
            gw2[j] += wd * tk[j];
        }
    }

    let tc = tanh_pots.row(class);
    for j in 0..h {
        let diff = weight * (tc[j] - resp[j]);
        grad.b1[j] += diff;
        if diff != 0.0 {
            let gw1 = grad.w1.row_mut(j);
            for (g, &xi) in gw1.iter_mut().zip(x) {
                *g += diff * xi;
            }
        }
    }

    dist.log_probs()[class]
}

/// Mean gradient of the log-likelihood over the selected rows, plus the mean
/// true-class log-likelihood at the current parameters.
///
/// Rows are processed in fixed-size chunks that reduce in index order, so the
/// result is bit-identical for any thread count.
pub fn gradients(params: &DrbmParams, data: &Dataset, indices: &[usize]) -> Result<(DrbmParams, f64)> {
    if indices.is_empty() {
        return Err(Error::usage("gradients: empty batch"));
    }
    let chunks: Vec<(DrbmParams, f64)> = indices
        .par_chunks(GRAD_CHUNK)
        .map(|chunk| -> Result<(DrbmParams, f64)> {
            let mut grad = DrbmParams::zeros(params.input_dim(), params.hidden_count(), params.class_count());
            let mut ll = 0.0;
            for &i in chunk {
                let x = data.input(i);
                let (tanh_pots, dist) = forward_stats(params, x)?;
                ll += accumulate_from_stats(&mut grad, x, data.label(i), 1.0, &tanh_pots, &dist);
            }
            Ok((grad, ll))
        })
        .collect::<Result<Vec<_>>>()?;

    let mut total = DrbmParams::zeros(params.input_dim(), params.hidden_count(), params.class_count());
    let mut ll = 0.0;
    for (g, l) in &chunks {
        total.add_scaled(g, 1.0);
        ll += l;
    }
    let scale = 1.0 / indices.len() as f64;
    total.scale(scale);
    Ok((total, ll * scale))
}

/// Fraction of correct predictions on a dataset (deterministic model).
pub(crate) fn dataset_accuracy(params: &DrbmParams, data: &Dataset) -> Result<f64> {
    let correct: usize = (0..data.len())
        .into_par_iter()
        .map(|i| -> Result<usize> {
            Ok(usize::from(predict(params, data.input(i))? == data.label(i)))
        })
        .try_reduce(|| 0, |a, b| Ok(a + b))?;
    Ok(correct as f64 / data.len() as f64)
}

/// Shuffled mini-batch Adam ascent on the mean log-likelihood.
///
/// When `eval` is given, held-out accuracy is recorded every
/// `config.eval_every` epochs and the best-by-accuracy snapshot is kept.
pub fn train(
    params: &DrbmParams,
    data: &Dataset,
    eval: Option<&Dataset>,
    config: &TrainConfig,
    rng: &RngStream,
) -> Result<TrainOutcome<DrbmParams>> {
    params.validate()?;
    if data.is_empty() {
        return Err(Error::usage("train: empty dataset"));
    }
    if data.feature_count() != params.input_dim() || data.class_count() != params.class_count() {
        return Err(Error::usage(format!(
            "train: dataset {}x{} classes {} does not match model {}/{}",
            data.len(),
            data.feature_count(),
            data.class_count(),
            params.input_dim(),
            params.class_count()
        )));
    }

    let batch_size = effective_batch_size(config.batch_size, data.len());
    let mut current = params.clone();
    let mut adam = AdamState::new(current.flat_len(), config.adam);
    let mut tracker = BestTracker::new(&current);
    let mut history = Vec::with_capacity(config.epochs);

    for epoch in 0..config.epochs {
        let mut epoch_rng = rng.substream(epoch as u64);
        let batches = minibatch_indices(data.len(), batch_size, &mut epoch_rng);
        let mut ll_sum = 0.0;
        for batch in &batches {
            let (grad, ll) = gradients(&current, data, batch)?;
            ll_sum += ll * batch.len() as f64;
            let grad_blocks = grad.blocks();
            adam.ascend(&mut current.blocks_mut(), &grad_blocks)?;
        }
        let train_ll = ll_sum / data.len() as f64;

        let eval_accuracy = match eval {
            Some(ev) if config.eval_every > 0 && (epoch + 1) % config.eval_every == 0 => {
                let acc = dataset_accuracy(&current, ev)?;
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
