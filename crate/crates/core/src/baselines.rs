//! Comparison models: the deterministic frozen-layer classifier (the layer
//! emits `tanh(u(x))` instead of samples) and a standard four-layer
//! feed-forward network with rectifier hiddens and a softmax head.

use crate::data::Dataset;
use crate::drbm::{self, ClassDistribution, DrbmParams};
use crate::error::{Error, Result};
use crate::math::{init_he, AdamState, DenseMatrix, RngStream};
use crate::pelm::PelmParams;
use crate::training::{
    effective_batch_size, minibatch_indices, BestTracker, EpochRecord, TrainConfig, TrainOutcome,
    GRAD_CHUNK,
};
use rayon::prelude::*;

/// A frozen layer in deterministic mode feeding a trainable classifier.
#[derive(Debug, Clone)]
pub struct ElmDrbmModel {
    pelm: PelmParams,
    drbm: DrbmParams,
}

impl ElmDrbmModel {
    pub fn new(pelm: PelmParams, drbm: DrbmParams) -> Result<Self> {
        drbm.validate()?;
        if drbm.input_dim() != pelm.hidden_count() {
            return Err(Error::usage(format!(
                "elm-drbm: classifier input width {} does not match layer width {}",
                drbm.input_dim(),
                pelm.hidden_count()
            )));
        }
        Ok(ElmDrbmModel { pelm, drbm })
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

    /// `z = tanh(u(x))` once, then exact classifier inference on `z`.
    pub fn infer(&self, x: &[f64]) -> Result<ClassDistribution> {
        let z = self.pelm.deterministic(x)?;
        drbm::class_log_probs(&self.drbm, &z)
    }

    pub fn predict(&self, x: &[f64]) -> Result<usize> {
        Ok(self.infer(x)?.argmax())
    }

    /// Map a dataset through the frozen deterministic layer. Valid to cache:
    /// the layer never changes.
    pub fn transform_dataset(&self, data: &Dataset) -> Result<Dataset> {
        let hidden = self.pelm.hidden_count();
        let mut z = DenseMatrix::zeros(data.len(), hidden);
        for i in 0..data.len() {
            let row = self.pelm.deterministic(data.input(i))?;
            z.row_mut(i).copy_from_slice(&row);
        }
        data.with_inputs(z)
    }

    /// Train the classifier on the precomputed deterministic features.
    pub fn train(
        &self,
        data: &Dataset,
        eval: Option<&Dataset>,
        config: &TrainConfig,
        rng: &RngStream,
    ) -> Result<TrainOutcome<ElmDrbmModel>> {
        let transformed = self.transform_dataset(data)?;
        let transformed_eval = eval.map(|e| self.transform_dataset(e)).transpose()?;
        let out = drbm::train(&self.drbm, &transformed, transformed_eval.as_ref(), config, rng)?;
        Ok(TrainOutcome {
            params: ElmDrbmModel::new(self.pelm.clone(), out.params)?,
            best: ElmDrbmModel::new(self.pelm.clone(), out.best)?,
            best_epoch: out.best_epoch,
            best_accuracy: out.best_accuracy,
            history: out.history,
        })
    }
}

/// Four-layer feed-forward network `n -> H0 -> H1 -> K`: rectifier hidden
/// activations, log-softmax output head.
#[derive(Debug, Clone, PartialEq)]
pub struct MlpParams {
    pub w1: DenseMatrix,
    pub b1: Vec<f64>,
    pub w2: DenseMatrix,
    pub b2: Vec<f64>,
    pub w3: DenseMatrix,
    pub b3: Vec<f64>,
}

impl MlpParams {
    pub fn zeros(input_dim: usize, hidden0: usize, hidden1: usize, classes: usize) -> Self {
        MlpParams {
            w1: DenseMatrix::zeros(hidden0, input_dim),
            b1: vec![0.0; hidden0],
            w2: DenseMatrix::zeros(hidden1, hidden0),
            b2: vec![0.0; hidden1],
            w3: DenseMatrix::zeros(classes, hidden1),
            b3: vec![0.0; classes],
        }
    }

    /// He-initialized weights (matching the rectifier hiddens), zero biases.
    pub fn he(
        input_dim: usize,
        hidden0: usize,
        hidden1: usize,
        classes: usize,
        rng: &mut RngStream,
    ) -> Result<Self> {
        Ok(MlpParams {
            w1: init_he(input_dim, hidden0, rng)?,
            b1: vec![0.0; hidden0],
            w2: init_he(hidden0, hidden1, rng)?,
            b2: vec![0.0; hidden1],
            w3: init_he(hidden1, classes, rng)?,
            b3: vec![0.0; classes],
        })
    }

    pub fn input_dim(&self) -> usize {
        self.w1.cols()
    }

    pub fn class_count(&self) -> usize {
        self.b3.len()
    }

    pub fn layer_widths(&self) -> (usize, usize, usize, usize) {
        (self.w1.cols(), self.b1.len(), self.b2.len(), self.b3.len())
    }

    pub fn validate(&self) -> Result<()> {
        let (n, h0, h1, k) = self.layer_widths();
        if self.w1.rows() != h0
            || self.w2.rows() != h1
            || self.w2.cols() != h0
            || self.w3.rows() != k
            || self.w3.cols() != h1
        {
            return Err(Error::usage(format!(
                "mlp: inconsistent layer widths {n}->{h0}->{h1}->{k}"
            )));
        }
        Ok(())
    }

    pub fn flat_len(&self) -> usize {
        self.w1.len() + self.b1.len() + self.w2.len() + self.b2.len() + self.w3.len() + self.b3.len()
    }

    pub(crate) fn blocks(&self) -> [&[f64]; 6] {
        [
            self.w1.data(),
            &self.b1,
            self.w2.data(),
            &self.b2,
            self.w3.data(),
            &self.b3,
        ]
    }

    pub(crate) fn blocks_mut(&mut self) -> [&mut [f64]; 6] {
        [
            self.w1.data_mut(),
            &mut self.b1,
            self.w2.data_mut(),
            &mut self.b2,
            self.w3.data_mut(),
            &mut self.b3,
        ]
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
            return Err(Error::usage("mlp set_flat: length mismatch"));
        }
        let mut offset = 0;
        for block in self.blocks_mut() {
            block.copy_from_slice(&flat[offset..offset + block.len()]);
            offset += block.len();
        }
        Ok(())
    }
}

fn relu(v: &mut [f64]) {
    for x in v {
        if *x < 0.0 {
            *x = 0.0;
        }
    }
}

struct MlpForward {
    pre1: Vec<f64>,
    act1: Vec<f64>,
    pre2: Vec<f64>,
    act2: Vec<f64>,
    dist: ClassDistribution,
}

fn mlp_forward_full(params: &MlpParams, x: &[f64]) -> Result<MlpForward> {
    if x.len() != params.input_dim() {
        return Err(Error::usage(format!(
            "mlp forward: input length {} vs dimension {}",
            x.len(),
            params.input_dim()
        )));
    }
    let mut pre1 = params.w1.matvec(x)?;
    for (p, b) in pre1.iter_mut().zip(&params.b1) {
        *p += b;
    }
    let mut act1 = pre1.clone();
    relu(&mut act1);

    let mut pre2 = params.w2.matvec(&act1)?;
    for (p, b) in pre2.iter_mut().zip(&params.b2) {
        *p += b;
    }
    let mut act2 = pre2.clone();
    relu(&mut act2);

    let mut logits = params.w3.matvec(&act2)?;
    for (p, b) in logits.iter_mut().zip(&params.b3) {
        *p += b;
    }
    let dist = ClassDistribution::from_scores(&logits)?;
    Ok(MlpForward {
        pre1,
        act1,
        pre2,
        act2,
        dist,
    })
}

/// Class distribution of the network (log-space softmax head).
pub fn mlp_forward(params: &MlpParams, x: &[f64]) -> Result<ClassDistribution> {
    Ok(mlp_forward_full(params, x)?.dist)
}

pub fn mlp_predict(params: &MlpParams, x: &[f64]) -> Result<usize> {
    Ok(mlp_forward(params, x)?.argmax())
}

/// Backpropagated gradient of the mean true-class log-likelihood (the
/// negative cross-entropy) over the selected rows, plus that mean value.
pub fn mlp_gradients(params: &MlpParams, data: &Dataset, indices: &[usize]) -> Result<(MlpParams, f64)> {
    if indices.is_empty() {
        return Err(Error::usage("mlp gradients: empty batch"));
    }
    let (n, h0, h1, k) = params.layer_widths();
    let chunk_results: Vec<(MlpParams, f64)> = indices
        .par_chunks(GRAD_CHUNK)
        .map(|chunk| -> Result<(MlpParams, f64)> {
            let mut grad = MlpParams::zeros(n, h0, h1, k);
            let mut ll = 0.0;
            for &row in chunk {
                let x = data.input(row);
                let class = data.label(row);
                let f = mlp_forward_full(params, x)?;
                ll += f.dist.log_probs()[class];

                // d ll / d logits = one_hot(class) - probs.
                let mut d_logits: Vec<f64> = f.dist.probs().iter().map(|p| -p).collect();
                d_logits[class] += 1.0;

                for ki in 0..k {
                    grad.b3[ki] += d_logits[ki];
                    let g = grad.w3.row_mut(ki);
                    for (gj, aj) in g.iter_mut().zip(&f.act2) {
                        *gj += d_logits[ki] * aj;
                    }
                }
                let mut d_act2 = params.w3.matvec_t(&d_logits)?;
                for (d, pre) in d_act2.iter_mut().zip(&f.pre2) {
                    if *pre <= 0.0 {
                        *d = 0.0;
                    }
                }
                for j in 0..h1 {
                    grad.b2[j] += d_act2[j];
                    if d_act2[j] != 0.0 {
                        let g = grad.w2.row_mut(j);
                        for (gj, aj) in g.iter_mut().zip(&f.act1) {
                            *gj += d_act2[j] * aj;
                        }
                    }
                }
                let mut d_act1 = params.w2.matvec_t(&d_act2)?;
                for (d, pre) in d_act1.iter_mut().zip(&f.pre1) {
                    if *pre <= 0.0 {
                        *d = 0.0;
                    }
                }
                for j in 0..h0 {
                    grad.b1[j] += d_act1[j];
                    if d_act1[j] != 0.0 {
                        let g = grad.w1.row_mut(j);
                        for (gj, xi) in g.iter_mut().zip(x) {
                            *gj += d_act1[j] * xi;
                        }
                    }
                }
            }
            Ok((grad, ll))
        })
        .collect::<Result<Vec<_>>>()?;

    let mut total = MlpParams::zeros(n, h0, h1, k);
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

pub(crate) fn mlp_dataset_accuracy(params: &MlpParams, data: &Dataset) -> Result<f64> {
    let correct: usize = (0..data.len())
        .into_par_iter()
        .map(|i| -> Result<usize> {
            Ok(usize::from(mlp_predict(params, data.input(i))? == data.label(i)))
        })
        .try_reduce(|| 0, |a, b| Ok(a + b))?;
    Ok(correct as f64 / data.len() as f64)
}

/// Shuffled mini-batch Adam ascent on the mean log-likelihood (equivalently,
/// descent on the softmax cross-entropy).
pub fn mlp_train(
    params: &MlpParams,
    data: &Dataset,
    eval: Option<&Dataset>,
    config: &TrainConfig,
    rng: &RngStream,
) -> Result<TrainOutcome<MlpParams>> {
    params.validate()?;
    if data.is_empty() {
        return Err(Error::usage("mlp train: empty dataset"));
    }
    if data.feature_count() != params.input_dim() || data.class_count() != params.class_count() {
        return Err(Error::usage("mlp train: dataset shape does not match the network"));
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
            let (grad, ll) = mlp_gradients(&current, data, batch)?;
            ll_sum += ll * batch.len() as f64;
            let grad_blocks = grad.blocks();
            adam.ascend(&mut current.blocks_mut(), &grad_blocks)?;
        }
        let train_ll = ll_sum / data.len() as f64;

        let eval_accuracy = match eval {
            Some(ev) if config.eval_every > 0 && (epoch + 1) % config.eval_every == 0 => {
                let acc = mlp_dataset_accuracy(&current, ev)?;
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
