//! Experiment orchestration: model construction for the benchmark matrix,
//! training with best-model tracking, noise sweeps with common random
//! numbers across models, and report persistence.
//!
//! Randomness is organized as fixed top-level streams of the experiment seed
//! (data subsetting, noise draws, training, inference), so two configurations
//! sharing a seed also share their data subsets and their noise draws — rows
//! of the comparison table differ only in the model.

mod config;
mod report;

pub use config::{
    DatasetConfig, DatasetSource, ExperimentConfig, GbrbmSettings, LayerConfig, ModelKind,
    Theta0Source,
};
pub use report::{adr, comparison_table, NoiseSweepReport, SweepRow, REPORT_FORMAT};

use crate::baselines::{self, ElmDrbmModel, MlpParams};
use crate::container::{self, Container};
use crate::data::{
    add_awgn, load_cifar10, load_csv, load_idx, standardize, subsample_indices, Dataset,
    StandardizationStats,
};
use crate::drbm::{self, DrbmParams};
use crate::error::{Error, Result};
use crate::gbrbm::GbrbmParams;
use crate::math::{init_gaussian_scaled, RngStream};
use crate::mdrbm::MdrbmModel;
use crate::pelm::{PelmParams, Theta0Provenance};
use crate::training::EpochRecord;
use rayon::prelude::*;
use std::path::Path;
use std::time::Instant;

// Top-level stream ids under the experiment seed.
const STREAM_DATA: u64 = 1;
const STREAM_NOISE: u64 = 2;
const STREAM_TRAIN: u64 = 3;
const STREAM_INFER: u64 = 4;

fn staged<T>(stage: &str, r: Result<T>) -> Result<T> {
    r.map_err(|e| e.with_stage(stage))
}

/// Any model of the benchmark matrix, behind one prediction interface.
#[derive(Debug, Clone)]
pub enum Model {
    Drbm(DrbmParams),
    DrbmElm(ElmDrbmModel),
    Mdrbm(MdrbmModel),
    Nn4(MlpParams),
}

impl Model {
    /// Predict a class; `s` and `rng` are used only by the sampled model.
    pub fn predict(&self, x: &[f64], s: usize, rng: &mut RngStream) -> Result<usize> {
        match self {
            Model::Drbm(p) => drbm::predict(p, x),
            Model::DrbmElm(m) => m.predict(x),
            Model::Mdrbm(m) => m.predict(x, s, rng),
            Model::Nn4(p) => baselines::mlp_predict(p, x),
        }
    }

    pub fn is_stochastic(&self) -> bool {
        matches!(self, Model::Mdrbm(_))
    }

    pub fn to_container(&self) -> Container {
        match self {
            Model::Drbm(p) => container::drbm_container(p),
            Model::DrbmElm(m) => container::elm_drbm_container(m),
            Model::Mdrbm(m) => container::mdrbm_container(m),
            Model::Nn4(p) => container::mlp_container(p),
        }
    }

    pub fn from_container(c: &Container) -> Result<Model> {
        match c.kind.as_str() {
            "drbm" => Ok(Model::Drbm(container::drbm_from_container(c)?)),
            "elm-drbm" => Ok(Model::DrbmElm(container::elm_drbm_from_container(c)?)),
            "mdrbm" => Ok(Model::Mdrbm(container::mdrbm_from_container(c)?)),
            "mlp4" => Ok(Model::Nn4(container::mlp_from_container(c)?)),
            other => Err(Error::format(format!("unknown model kind {other:?}"))),
        }
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        self.to_container().write(path)
    }

    pub fn load(path: &Path) -> Result<Model> {
        Model::from_container(&Container::read(path)?)
    }

    pub fn digest(&self) -> Result<u64> {
        self.to_container().digest()
    }
}

/// Fraction of correct predictions; row `i` of a stochastic model draws from
/// substream `i` of `rng`. `s` is ignored by the deterministic models.
pub fn accuracy(model: &Model, data: &Dataset, s: usize, rng: &RngStream) -> Result<f64> {
    if data.is_empty() {
        return Err(Error::usage("accuracy: empty dataset"));
    }
    let correct: usize = (0..data.len())
        .into_par_iter()
        .map(|i| -> Result<usize> {
            let mut datum_rng = rng.substream(i as u64);
            Ok(usize::from(
                model.predict(data.input(i), s, &mut datum_rng)? == data.label(i),
            ))
        })
        .try_reduce(|| 0, |a, b| Ok(a + b))?;
    Ok(correct as f64 / data.len() as f64)
}

/// Standardized data ready for an experiment, plus what the
/// noise-before-standardization path needs.
#[derive(Debug, Clone)]
pub struct PreparedData {
    pub train: Dataset,
    pub test: Dataset,
    /// The same test rows before standardization.
    pub test_raw: Dataset,
    pub stats: StandardizationStats,
}

/// Load, standardize (train-side statistics only), and subsample according
/// to the configuration. Subsets depend only on the experiment seed, never
/// on the model kind.
pub fn prepare_data(config: &ExperimentConfig, data_dir: &Path) -> Result<PreparedData> {
    let data_rng = RngStream::new(config.seed, STREAM_DATA);
    let ds = &config.dataset;
    match &ds.source {
        DatasetSource::Csv {
            files,
            label_column,
            delimiter,
        } => {
            let paths: Vec<std::path::PathBuf> = files.iter().map(|p| data_dir.join(p)).collect();
            let pool = staged("load", load_csv(&paths, label_column, *delimiter))?;
            let want = ds.n_train + ds.n_test;
            if want > pool.len() {
                return Err(Error::config(format!(
                    "dataset {}: requested {} train + {} test rows from a pool of {}",
                    ds.name,
                    ds.n_train,
                    ds.n_test,
                    pool.len()
                )));
            }
            // Pooled distribution: split first so the statistics only ever
            // see training rows.
            let idx = staged(
                "subsample",
                subsample_indices(pool.labels(), pool.class_count(), want, &mut data_rng.substream(0), ds.stratified),
            )?;
            let mut train = staged("subsample", pool.select(&idx[..ds.n_train]))?;
            let test_raw = staged("subsample", pool.select(&idx[ds.n_train..]))?;
            let mut test = test_raw.clone();
            let stats = staged("standardize", standardize(&mut train, &mut [&mut test]))?;
            Ok(PreparedData {
                train,
                test,
                test_raw,
                stats,
            })
        }
        source => {
            let (train_pool, test_pool) = match source {
                DatasetSource::Idx {
                    train_images,
                    train_labels,
                    test_images,
                    test_labels,
                } => {
                    let train = staged(
                        "load",
                        load_idx(&data_dir.join(train_images), &data_dir.join(train_labels)),
                    )?;
                    let test = staged(
                        "load",
                        load_idx(&data_dir.join(test_images), &data_dir.join(test_labels)),
                    )?;
                    let k = train.class_count().max(test.class_count());
                    (
                        staged("load", train.with_class_count(k))?,
                        staged("load", test.with_class_count(k))?,
                    )
                }
                DatasetSource::Cifar10 {
                    train_batches,
                    test_batches,
                } => {
                    let train_paths: Vec<_> = train_batches.iter().map(|p| data_dir.join(p)).collect();
                    let test_paths: Vec<_> = test_batches.iter().map(|p| data_dir.join(p)).collect();
                    (
                        staged("load", load_cifar10(&train_paths))?,
                        staged("load", load_cifar10(&test_paths))?,
                    )
                }
                DatasetSource::Csv { .. } => unreachable!(),
            };
            let mut train_pool = train_pool;
            let mut test_pool_std = test_pool.clone();
            let stats = staged(
                "standardize",
                standardize(&mut train_pool, &mut [&mut test_pool_std]),
            )?;
            let train_idx = staged(
                "subsample",
                subsample_indices(
                    train_pool.labels(),
                    train_pool.class_count(),
                    ds.n_train,
                    &mut data_rng.substream(0),
                    ds.stratified,
                ),
            )?;
            let test_idx = staged(
                "subsample",
                subsample_indices(
                    test_pool_std.labels(),
                    test_pool_std.class_count(),
                    ds.n_test,
                    &mut data_rng.substream(1),
                    false,
                ),
            )?;
            Ok(PreparedData {
                train: staged("subsample", train_pool.select(&train_idx))?,
                test: staged("subsample", test_pool_std.select(&test_idx))?,
                test_raw: staged("subsample", test_pool.select(&test_idx))?,
                stats,
            })
        }
    }
}

/// Run unsupervised pretraining on the training inputs and export the frozen
/// layer. The run id is the digest of the trained parameters.
pub fn pretrain_gbrbm(
    config: &ExperimentConfig,
    train: &Dataset,
    rng: &RngStream,
) -> Result<(GbrbmParams, PelmParams)> {
    let mut init_rng = rng.substream(0);
    let init = GbrbmParams::init(train.feature_count(), config.layers.pelm_hidden, &mut init_rng)?;
    let settings = config.gbrbm.resolve(config.train.batch_size);
    let trained = init.train(train.x(), &settings, &rng.substream(1))?;
    let run_id = crate::digest::hex64(container::gbrbm_container(&trained).digest()?);
    let layer = trained.export_pelm(run_id)?;
    Ok((trained, layer))
}

/// Construct the configured model against a prepared training set.
/// Layer provenance (`random` seed or pretraining run id) is recorded in the
/// parameters themselves.
pub fn build_model(config: &ExperimentConfig, train: &Dataset, rng: &RngStream) -> Result<Model> {
    let n = train.feature_count();
    let k = train.class_count();
    let hidden0 = config.layers.pelm_hidden;
    let hidden1 = config.layers.drbm_hidden;
    let mut init_rng = rng.substream(0);

    let layer = |rng: &RngStream| -> Result<PelmParams> {
        match config.theta0 {
            Some(Theta0Source::Random) => {
                let mut theta0_rng = rng.substream(1);
                PelmParams::new(
                    vec![0.0; hidden0],
                    init_gaussian_scaled(hidden0, n, &mut theta0_rng)?,
                    Theta0Provenance::Random { seed: config.seed },
                )
            }
            Some(Theta0Source::Gbrbm) => {
                let (_, layer) = pretrain_gbrbm(config, train, &rng.substream(2))?;
                Ok(layer)
            }
            None => Err(Error::config("stacked model without a theta0 source")),
        }
    };

    match config.model {
        ModelKind::Drbm => {
            if config.theta0.is_some() {
                return Err(Error::config("drbm does not take a theta0 source"));
            }
            Ok(Model::Drbm(DrbmParams::xavier(n, hidden1, k, &mut init_rng)?))
        }
        ModelKind::DrbmElm => Ok(Model::DrbmElm(ElmDrbmModel::new(
            layer(rng)?,
            DrbmParams::xavier(hidden0, hidden1, k, &mut init_rng)?,
        )?)),
        ModelKind::Mdrbm => Ok(Model::Mdrbm(MdrbmModel::new(
            layer(rng)?,
            DrbmParams::xavier(hidden0, hidden1, k, &mut init_rng)?,
        )?)),
        ModelKind::Nn4 => {
            if config.theta0.is_some() {
                return Err(Error::config("4nn does not take a theta0 source"));
            }
            Ok(Model::Nn4(MlpParams::he(n, hidden0, hidden1, k, &mut init_rng)?))
        }
    }
}

/// A finished training run: the best-by-held-out-accuracy snapshot (equal to
/// the final parameters when evaluation is disabled) plus the final state
/// and the per-epoch history.
#[derive(Debug, Clone)]
pub struct TrainedModel {
    pub best: Model,
    pub final_model: Model,
    pub best_epoch: Option<usize>,
    pub best_accuracy: Option<f64>,
    pub history: Vec<EpochRecord>,
}

/// Train a built model against a held-out evaluation set.
pub fn train_model(
    config: &ExperimentConfig,
    model: &Model,
    train: &Dataset,
    eval: &Dataset,
    rng: &RngStream,
) -> Result<TrainedModel> {
    macro_rules! pack {
        ($variant:ident, $out:expr) => {{
            let out = $out;
            TrainedModel {
                best: Model::$variant(out.best),
                final_model: Model::$variant(out.params),
                best_epoch: out.best_epoch,
                best_accuracy: out.best_accuracy,
                history: out.history,
            }
        }};
    }
    Ok(match model {
        Model::Drbm(p) => pack!(Drbm, drbm::train(p, train, Some(eval), &config.train, rng)?),
        Model::DrbmElm(m) => pack!(DrbmElm, m.train(train, Some(eval), &config.train, rng)?),
        Model::Mdrbm(m) => pack!(
            Mdrbm,
            m.train(train, Some(eval), &config.train, &config.sampling, rng)?
        ),
        Model::Nn4(p) => pack!(
            Nn4,
            baselines::mlp_train(p, train, Some(eval), &config.train, rng)?
        ),
    })
}

/// Pretraining as a standalone step: runs the unsupervised stage on the
/// configured training subset and writes both the full model file and the
/// exported frozen-layer file. Returns the pretraining run id.
///
/// Uses the same streams as repeat 0 of [`run_experiment`], so a (G) model
/// built there embeds exactly this layer.
pub fn run_pretrain(config: &ExperimentConfig, data_dir: &Path, out_dir: &Path) -> Result<String> {
    staged("config", config.validate(data_dir))?;
    let prepared = prepare_data(config, data_dir)?;
    std::fs::create_dir_all(out_dir)?;
    let rng = RngStream::new(config.seed, STREAM_TRAIN).substream(0).substream(0).substream(2);
    let (gbrbm, layer) = staged("pretrain", pretrain_gbrbm(config, &prepared.train, &rng))?;
    container::gbrbm_container(&gbrbm).write(&out_dir.join("gbrbm.params"))?;
    container::pelm_container(&layer).write(&out_dir.join("pelm.params"))?;
    match layer.provenance() {
        Theta0Provenance::Gbrbm { run_id } => Ok(run_id.clone()),
        _ => unreachable!("pretraining always exports gbrbm provenance"),
    }
}

/// One training run (repeat 0 of the experiment streams): builds the model,
/// trains it, and writes `model_best.params`, `model_final.params`, and
/// `history.tsv` under `out_dir`.
pub fn run_train(config: &ExperimentConfig, data_dir: &Path, out_dir: &Path) -> Result<TrainedModel> {
    staged("config", config.validate(data_dir))?;
    let prepared = prepare_data(config, data_dir)?;
    std::fs::create_dir_all(out_dir)?;
    let train_root = RngStream::new(config.seed, STREAM_TRAIN).substream(0);
    let model = staged("build", build_model(config, &prepared.train, &train_root.substream(0)))?;
    let trained = staged(
        "train",
        train_model(config, &model, &prepared.train, &prepared.test, &train_root.substream(1)),
    )?;
    save_stamped(&trained.best, config, Some(0), &out_dir.join("model_best.params"))?;
    save_stamped(&trained.final_model, config, Some(0), &out_dir.join("model_final.params"))?;
    std::fs::write(
        out_dir.join("history.tsv"),
        history_tsv(&trained.history, &run_stamp(config, Some(0))?),
    )?;
    Ok(trained)
}

/// How sweep noise is injected relative to standardization.
#[derive(Debug, Clone, Copy)]
pub enum NoisePath<'a> {
    /// Noise is added to the standardized inputs (default; the noise scale is
    /// then commensurate with unit-variance features).
    AfterStandardize,
    /// Noise is added to the raw inputs, which are then standardized with
    /// the training statistics.
    BeforeStandardize {
        raw: &'a Dataset,
        stats: &'a StandardizationStats,
    },
}

/// Evaluate a model across the noise grid. The clean entry is a single
/// noise-free evaluation; each noisy entry pools `repeats` independent noise
/// draws. Noise streams depend only on `noise_root` and the grid position,
/// so models evaluated with the same roots see identical noise.
#[allow(clippy::too_many_arguments)]
pub fn noise_sweep(
    model: &Model,
    test: &Dataset,
    grid: &[f64],
    repeats: usize,
    s_infer: usize,
    noise_root: &RngStream,
    infer_root: &RngStream,
    path: NoisePath<'_>,
) -> Result<Vec<SweepRow>> {
    if grid.is_empty() {
        return Err(Error::usage("noise_sweep: empty grid"));
    }
    if !grid.contains(&0.0) {
        return Err(Error::usage("noise_sweep: grid must include sigma = 0"));
    }
    if repeats == 0 {
        return Err(Error::usage("noise_sweep: repeats must be >= 1"));
    }
    let mut rows = Vec::with_capacity(grid.len());
    for (sigma_idx, &sigma) in grid.iter().enumerate() {
        let accuracies = if sigma == 0.0 {
            vec![accuracy(model, test, s_infer, &infer_root.substream(sigma_idx as u64))?]
        } else {
            let mut accs = Vec::with_capacity(repeats);
            for rep in 0..repeats {
                let mut noise_rng = noise_root.substream(sigma_idx as u64).substream(rep as u64);
                let noisy = match path {
                    NoisePath::AfterStandardize => {
                        test.with_inputs(add_awgn(test.x(), sigma, &mut noise_rng)?)?
                    }
                    NoisePath::BeforeStandardize { raw, stats } => {
                        let mut x = add_awgn(raw.x(), sigma, &mut noise_rng)?;
                        stats.apply(&mut x)?;
                        raw.with_inputs(x)?
                    }
                };
                let infer_rng = infer_root.substream(sigma_idx as u64).substream(rep as u64);
                accs.push(accuracy(model, &noisy, s_infer, &infer_rng)?);
            }
            accs
        };
        rows.push(SweepRow::from_accuracies(sigma, accuracies));
    }
    Ok(rows)
}

fn history_tsv(history: &[EpochRecord], stamp: &str) -> String {
    let mut out = format!("# {stamp}\nepoch\ttrain_ll\teval_accuracy\n");
    for r in history {
        match r.eval_accuracy {
            Some(acc) => out.push_str(&format!("{}\t{}\t{}\n", r.epoch, r.train_ll, acc)),
            None => out.push_str(&format!("{}\t{}\t\n", r.epoch, r.train_ll)),
        }
    }
    out
}

/// Artifact stamp: the config digest and seed, plus the repeat index.
fn run_stamp(config: &ExperimentConfig, repeat: Option<usize>) -> Result<String> {
    let mut stamp = format!("config={} seed={}", config.digest()?, config.seed);
    if let Some(r) = repeat {
        stamp.push_str(&format!(" repeat={r}"));
    }
    Ok(stamp)
}

/// Save a model with the run stamp recorded in its container metadata.
fn save_stamped(model: &Model, config: &ExperimentConfig, repeat: Option<usize>, path: &Path) -> Result<()> {
    let mut container = model.to_container();
    container.meta.insert("config_digest".to_string(), config.digest()?);
    container.meta.insert("experiment_seed".to_string(), config.seed.to_string());
    if let Some(r) = repeat {
        container.meta.insert("repeat".to_string(), r.to_string());
    }
    container.write(path)
}

/// Full pipeline: load, standardize, subsample, build (pretraining if
/// configured), train with best-model tracking, sweep, and persist.
///
/// Artifacts written under `out_dir`: `model_r<i>.params` and
/// `history_r<i>.tsv` per repeat, `report.json`, `report.tsv`, and a
/// `status.txt` that reads `complete` only if the whole run finished.
pub fn run_experiment(
    config: &ExperimentConfig,
    data_dir: &Path,
    out_dir: &Path,
) -> Result<NoiseSweepReport> {
    let started = Instant::now();
    staged("config", config.validate(data_dir))?;
    std::fs::create_dir_all(out_dir)?;
    std::fs::write(out_dir.join("status.txt"), "incomplete\n")?;

    let prepared = prepare_data(config, data_dir)?;
    let mut pooled: Vec<Vec<f64>> = vec![Vec::new(); config.noise_grid.len()];

    for repeat in 0..config.repeats {
        let train_root = RngStream::new(config.seed, STREAM_TRAIN).substream(repeat as u64);
        let model = staged("build", build_model(config, &prepared.train, &train_root.substream(0)))?;
        let trained = staged(
            "train",
            train_model(config, &model, &prepared.train, &prepared.test, &train_root.substream(1)),
        )?;
        let best = trained.best;
        save_stamped(&best, config, Some(repeat), &out_dir.join(format!("model_r{repeat}.params")))?;
        std::fs::write(
            out_dir.join(format!("history_r{repeat}.tsv")),
            history_tsv(&trained.history, &run_stamp(config, Some(repeat))?),
        )?;

        let path = if config.noise_before_standardize {
            NoisePath::BeforeStandardize {
                raw: &prepared.test_raw,
                stats: &prepared.stats,
            }
        } else {
            NoisePath::AfterStandardize
        };
        let rows = staged(
            "sweep",
            noise_sweep(
                &best,
                &prepared.test,
                &config.noise_grid,
                config.noise_repeats,
                config.sampling.s_infer,
                &RngStream::new(config.seed, STREAM_NOISE).substream(repeat as u64),
                &RngStream::new(config.seed, STREAM_INFER).substream(repeat as u64),
                path,
            ),
        )?;
        for (bucket, row) in pooled.iter_mut().zip(rows) {
            bucket.extend(row.accuracies);
        }
    }

    let rows: Vec<SweepRow> = config
        .noise_grid
        .iter()
        .zip(pooled)
        .map(|(sigma, accs)| SweepRow::from_accuracies(*sigma, accs))
        .collect();
    let report = staged(
        "report",
        NoiseSweepReport::assemble(config, rows, started.elapsed().as_secs_f64()),
    )?;
    report.write(&out_dir.join("report.json"))?;
    std::fs::write(
        out_dir.join("report.tsv"),
        format!("# {}\n{}", run_stamp(config, None)?, report.to_tsv()),
    )?;
    std::fs::write(out_dir.join("status.txt"), "complete\n")?;
    Ok(report)
}

/// Accuracy of a saved model on the configured test set, optionally under
/// noise at the given level.
pub fn evaluate(
    config: &ExperimentConfig,
    data_dir: &Path,
    model_path: &Path,
    sigma: f64,
) -> Result<f64> {
    staged("config", config.validate(data_dir))?;
    let prepared = prepare_data(config, data_dir)?;
    let model = staged("load-model", Model::load(model_path))?;
    let test = if sigma == 0.0 {
        prepared.test.clone()
    } else {
        let mut noise_rng = RngStream::new(config.seed, STREAM_NOISE).substream(sigma.to_bits());
        if config.noise_before_standardize {
            let mut x = add_awgn(prepared.test_raw.x(), sigma, &mut noise_rng)?;
            prepared.stats.apply(&mut x)?;
            prepared.test_raw.with_inputs(x)?
        } else {
            prepared.test.with_inputs(add_awgn(prepared.test.x(), sigma, &mut noise_rng)?)?
        }
    };
    let infer_root = RngStream::new(config.seed, STREAM_INFER).substream(sigma.to_bits());
    staged(
        "eval",
        accuracy(&model, &test, config.sampling.s_infer, &infer_root),
    )
}
