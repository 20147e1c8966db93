//! Shared mini-batch training scaffolding: configuration, per-epoch history,
//! and best-model tracking used by every trainable model in the crate.

use crate::math::{AdamConfig, RngStream};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TrainConfig {
    pub epochs: usize,
    pub batch_size: usize,
    #[serde(default)]
    pub adam: AdamConfig,
    /// Evaluate held-out accuracy every this many epochs (0 disables evaluation).
    #[serde(default = "default_eval_every")]
    pub eval_every: usize,
}

fn default_eval_every() -> usize {
    1
}

impl TrainConfig {
    pub fn new(epochs: usize, batch_size: usize) -> Self {
        TrainConfig {
            epochs,
            batch_size,
            adam: AdamConfig::default(),
            eval_every: 1,
        }
    }
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig::new(300, 100)
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EpochRecord {
    pub epoch: usize,
    /// Mean training log-likelihood over the epoch's mini-batches,
    /// evaluated at the pre-update parameters of each batch.
    pub train_ll: f64,
    pub eval_accuracy: Option<f64>,
}

/// Final parameters plus the best-by-held-out-accuracy snapshot.
#[derive(Debug, Clone)]
pub struct TrainOutcome<P> {
    pub params: P,
    pub best: P,
    pub best_epoch: Option<usize>,
    pub best_accuracy: Option<f64>,
    pub history: Vec<EpochRecord>,
}

/// Tracks the best-by-accuracy snapshot during training.
/// Ties keep the earlier epoch, which makes selection deterministic.
pub(crate) struct BestTracker<P: Clone> {
    best: P,
    epoch: Option<usize>,
    accuracy: Option<f64>,
}

impl<P: Clone> BestTracker<P> {
    pub fn new(initial: &P) -> Self {
        BestTracker {
            best: initial.clone(),
            epoch: None,
            accuracy: None,
        }
    }

    pub fn observe(&mut self, epoch: usize, accuracy: f64, params: &P) {
        if self.accuracy.is_none_or(|b| accuracy > b) {
            self.best = params.clone();
            self.epoch = Some(epoch);
            self.accuracy = Some(accuracy);
        }
    }

    pub fn finish(self, final_params: P, history: Vec<EpochRecord>) -> TrainOutcome<P> {
        let best = if self.epoch.is_some() {
            self.best
        } else {
            final_params.clone()
        };
        TrainOutcome {
            params: final_params,
            best,
            best_epoch: self.epoch,
            best_accuracy: self.accuracy,
            history,
        }
    }
}

/// Shuffle `0..n` and cut it into mini-batches. The final short batch is kept.
pub(crate) fn minibatch_indices(n: usize, batch_size: usize, rng: &mut RngStream) -> Vec<Vec<usize>> {
    let mut order: Vec<usize> = (0..n).collect();
    rng.shuffle(&mut order);
    order.chunks(batch_size.max(1)).map(|c| c.to_vec()).collect()
}

/// Clamp the configured batch size to the dataset size, warning once per call.
pub(crate) fn effective_batch_size(requested: usize, n: usize) -> usize {
    if requested > n {
        log::warn!("batch size {requested} exceeds dataset size {n}; clamping");
        n
    } else {
        requested.max(1)
    }
}

/// Fixed chunk width for data-parallel gradient accumulation. Chunk results
/// are reduced in index order, so sums are identical for any thread count.
pub(crate) const GRAD_CHUNK: usize = 32;

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn minibatches_cover_all_indices() {
        let mut rng = RngStream::new(5, 0);
        let batches = minibatch_indices(10, 3, &mut rng);
        assert_eq!(batches.len(), 4);
        let mut all: Vec<usize> = batches.concat();
        all.sort_unstable();
        assert_eq!(all, (0..10).collect::<Vec<_>>());
    }

    #[test]
    fn minibatches_deterministic_under_seed() {
        let a = minibatch_indices(20, 7, &mut RngStream::new(1, 2));
        let b = minibatch_indices(20, 7, &mut RngStream::new(1, 2));
        assert_eq!(a, b);
    }

    #[test]
    fn batch_size_clamps() {
        assert_eq!(effective_batch_size(100, 10), 10);
        assert_eq!(effective_batch_size(5, 10), 5);
        assert_eq!(effective_batch_size(0, 10), 1);
    }

    #[test]
    fn best_tracker_prefers_strictly_better_and_earlier_ties() {
        let mut t = BestTracker::new(&0);
        t.observe(1, 0.5, &1);
        t.observe(2, 0.5, &2);
        assert_eq!(t.epoch, Some(1));
        t.observe(3, 0.6, &3);
        let out = t.finish(9, Vec::new());
        assert_eq!(out.best, 3);
        assert_eq!(out.best_epoch, Some(3));
        assert_eq!(out.params, 9);
    }

    #[test]
    fn best_tracker_without_eval_falls_back_to_final() {
        let t: BestTracker<i32> = BestTracker::new(&0);
        let out = t.finish(7, Vec::new());
        assert_eq!(out.best, 7);
        assert_eq!(out.best_epoch, None);
    }
}
