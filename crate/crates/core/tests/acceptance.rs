//! Acceptance suite: one test per criterion, each printing a PASS/SKIP line
//! (run with `--nocapture` to see them).
//!
//! Criteria 1-7 are property-based and self-contained. Criteria 8-11 are
//! desk-scale benchmark reproductions and run only when the corresponding
//! dataset files are present under the data directory ($MDRBM_DATA_DIR or
//! `<workspace>/data`); otherwise they print SKIP and succeed. See the
//! README for the expected data layout and runtimes.

use mdrbm::baselines::{mlp_forward, mlp_gradients, MlpParams};
use mdrbm::bench::{
    run_experiment, ExperimentConfig, ModelKind, NoiseSweepReport, Theta0Source,
};
use mdrbm::data::Dataset;
use mdrbm::drbm::{self, DrbmParams};
use mdrbm::gbrbm::{GbrbmParams, GbrbmTrainConfig};
use mdrbm::math::{init_gaussian_scaled, AdamConfig, DenseMatrix, RngStream};
use mdrbm::mdrbm::MdrbmModel;
use mdrbm::oracle;
use mdrbm::pelm::{PelmParams, Theta0Provenance};
use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::sync::OnceLock;

fn pass(criterion: usize, detail: &str) {
    println!("ACCEPTANCE {criterion:>2} PASS — {detail}");
}

fn skip(criterion: usize, why: &str) {
    println!("ACCEPTANCE {criterion:>2} SKIP — {why}");
}

fn random_drbm(n: usize, h: usize, k: usize, scale: f64, rng: &mut RngStream) -> DrbmParams {
    let mut p = DrbmParams::zeros(n, h, k);
    let mut flat = p.to_flat();
    for v in flat.iter_mut() {
        *v = scale * rng.normal();
    }
    p.set_flat(&flat).unwrap();
    p
}

fn random_pelm(n: usize, hidden: usize, scale: f64, rng: &mut RngStream) -> PelmParams {
    let b0: Vec<f64> = (0..hidden).map(|_| scale * rng.normal()).collect();
    let w0 = DenseMatrix::from_fn(hidden, n, |_, _| scale * rng.normal());
    PelmParams::new(b0, w0, Theta0Provenance::Random { seed: 0 }).unwrap()
}

fn one_datum(x: &[f64], class: usize, k: usize) -> Dataset {
    Dataset::new(
        "datum",
        DenseMatrix::from_vec(1, x.len(), x.to_vec()).unwrap(),
        vec![class],
        k,
    )
    .unwrap()
}

#[test]
fn criterion_01_drbm_enumeration_equivalence() {
    let mut rng = RngStream::new(1001, 0);
    let mut max_rel = 0.0f64;
    for _ in 0..200 {
        let n = 1 + rng.below(5);
        let h = 1 + rng.below(10);
        let k = 2 + rng.below(3);
        let params = random_drbm(n, h, k, 0.8, &mut rng);
        let x: Vec<f64> = (0..n).map(|_| rng.normal()).collect();
        let fast = drbm::class_log_probs(&params, &x).unwrap();
        let brute = oracle::drbm_class_probs_enumerated(&params, &x);
        for (a, b) in fast.probs().iter().zip(&brute) {
            let rel = (a - b).abs() / b.abs().max(1e-300);
            max_rel = max_rel.max(rel);
            assert!(rel <= 1e-10, "probability mismatch: {a} vs {b} (rel {rel})");
        }
    }
    pass(1, &format!("200 random models vs hidden-state enumeration, max rel err {max_rel:.2e} <= 1e-10"));
}

#[test]
fn criterion_02_gradient_exactness() {
    let mut rng = RngStream::new(1002, 0);
    let tol = |a: f64, b: f64| {
        let err = (a - b).abs();
        assert!(
            err <= 1e-6 * a.abs().max(b.abs()) + 1e-10,
            "gradient mismatch {a} vs {b}"
        );
        if a.abs().max(b.abs()) > 1e-8 {
            err / a.abs().max(b.abs())
        } else {
            0.0
        }
    };
    let mut worst = 0.0f64;

    // Classifier gradients against finite differences of the log-likelihood.
    for _ in 0..5 {
        let p = random_drbm(3, 4, 3, 0.6, &mut rng);
        let rows: Vec<(Vec<f64>, usize)> = (0..5)
            .map(|_| ((0..3).map(|_| rng.normal()).collect(), rng.below(3)))
            .collect();
        let mut x = DenseMatrix::zeros(5, 3);
        let mut labels = Vec::new();
        for (i, (row, label)) in rows.iter().enumerate() {
            x.row_mut(i).copy_from_slice(row);
            labels.push(*label);
        }
        let data = Dataset::new("batch", x, labels, 3).unwrap();
        let idx: Vec<usize> = (0..5).collect();
        let (grad, _) = drbm::gradients(&p, &data, &idx).unwrap();
        let fd = oracle::fd_gradient(&p.to_flat(), 1e-5, |flat| {
            let mut q = p.clone();
            q.set_flat(flat).unwrap();
            drbm::log_likelihood(&q, &data).unwrap()
        });
        for (a, b) in grad.to_flat().iter().zip(&fd) {
            worst = worst.max(tol(*a, *b));
        }
    }

    // Network backpropagation against finite differences.
    for _ in 0..3 {
        let mut p = MlpParams::he(3, 4, 4, 3, &mut rng).unwrap();
        for b in [&mut p.b1, &mut p.b2, &mut p.b3] {
            for v in b.iter_mut() {
                *v = 0.1 * rng.normal();
            }
        }
        let mut x = DenseMatrix::zeros(5, 3);
        let mut labels = Vec::new();
        for i in 0..5 {
            for j in 0..3 {
                x.set(i, j, rng.normal());
            }
            labels.push(rng.below(3));
        }
        let data = Dataset::new("batch", x, labels, 3).unwrap();
        let idx: Vec<usize> = (0..5).collect();
        let (grad, _) = mlp_gradients(&p, &data, &idx).unwrap();
        let fd = oracle::fd_gradient(&p.to_flat(), 1e-5, |flat| {
            let mut q = p.clone();
            q.set_flat(flat).unwrap();
            let mut total = 0.0;
            for i in 0..data.len() {
                total += mlp_forward(&q, data.input(i)).unwrap().log_probs()[data.label(i)];
            }
            total / data.len() as f64
        });
        for (a, b) in grad.to_flat().iter().zip(&fd) {
            worst = worst.max(tol(*a, *b));
        }
    }

    // Enumerated stacked-model gradient against finite differences of the
    // enumerated log-likelihood.
    for _ in 0..3 {
        let pelm = random_pelm(2, 5, 0.6, &mut rng);
        let dr = random_drbm(5, 3, 3, 0.6, &mut rng);
        let model = MdrbmModel::new(pelm, dr).unwrap();
        let x = [rng.normal(), rng.normal()];
        let class = rng.below(3);
        let data = one_datum(&x, class, 3);
        let (grad, _) = model.exact_gradients(&data, &[0]).unwrap();
        let fd = oracle::fd_gradient(&model.drbm().to_flat(), 1e-5, |flat| {
            let mut q = model.drbm().clone();
            q.set_flat(flat).unwrap();
            let m = MdrbmModel::new(model.pelm().clone(), q).unwrap();
            m.exact_class_probs(&x).unwrap().log_probs()[class]
        });
        for (a, b) in grad.to_flat().iter().zip(&fd) {
            worst = worst.max(tol(*a, *b));
        }
    }

    pass(2, &format!("classifier, network, and enumerated stacked gradients match finite differences, worst rel err {worst:.2e} <= 1e-6"));
}

#[test]
fn criterion_03_monte_carlo_consistency() {
    // Sampled class probabilities at a wide layer.
    let mut rng = RngStream::new(1003, 0);
    let model = MdrbmModel::new(
        random_pelm(3, 8, 0.6, &mut rng),
        random_drbm(8, 5, 3, 0.6, &mut rng),
    )
    .unwrap();
    let x = [0.4, -0.7, 0.2];
    let exact = model.exact_class_probs(&x).unwrap();
    let s = 100_000;
    let root = RngStream::new(1004, 0);
    let sampled = model.class_probs(&x, s, &mut root.clone()).unwrap();
    let batch = model.pelm().sample(&x, s, &mut root.clone()).unwrap();
    let k = model.class_count();
    let mut sums = vec![0.0; k];
    let mut sq = vec![0.0; k];
    for z in batch.iter() {
        let d = drbm::class_log_probs(model.drbm(), z).unwrap();
        for (c, &p) in d.probs().iter().enumerate() {
            sums[c] += p;
            sq[c] += p * p;
        }
    }
    let mut worst_sigmas = 0.0f64;
    for c in 0..k {
        let mean = sums[c] / s as f64;
        let var = (sq[c] / s as f64 - mean * mean).max(0.0);
        let se = (var / s as f64).sqrt().max(1e-12);
        let dev = (sampled.probs()[c] - exact.probs()[c]).abs() / se;
        worst_sigmas = worst_sigmas.max(dev);
        assert!(
            dev <= 3.0,
            "class {c}: sampled {} vs exact {} is {dev:.2} se",
            sampled.probs()[c],
            exact.probs()[c]
        );
    }

    // Replicated sampled gradients against the enumerated gradient. The
    // model scale is kept small so the O(1/S) self-normalization bias of the
    // ratio estimator stays well below the 3-se band (see the gradient tests
    // for the structural checks at larger scales).
    let mut rng = RngStream::new(1005, 0);
    let model = MdrbmModel::new(
        random_pelm(2, 6, 0.025, &mut rng),
        random_drbm(6, 4, 3, 0.025, &mut rng),
    )
    .unwrap();
    let x = [0.5, -0.8];
    let data = one_datum(&x, 0, 3);
    let (exact_grad, _) = model.exact_gradients(&data, &[0]).unwrap();
    let exact_flat = exact_grad.to_flat();
    let reps = 10_000;
    let dim = exact_flat.len();
    let mut sums = vec![0.0; dim];
    let mut sq = vec![0.0; dim];
    let root = RngStream::new(1006, 0);
    for rep in 0..reps {
        let (g, _) = model
            .sampled_gradients(&data, &[0], 5, &root.substream(rep as u64))
            .unwrap();
        for (i, v) in g.to_flat().iter().enumerate() {
            sums[i] += v;
            sq[i] += v * v;
        }
    }
    let mut worst_grad_sigmas = 0.0f64;
    for i in 0..dim {
        let mean = sums[i] / reps as f64;
        let var = (sq[i] / reps as f64 - mean * mean).max(0.0);
        let se = (var / reps as f64).sqrt().max(1e-12);
        let dev = (mean - exact_flat[i]).abs() / se;
        worst_grad_sigmas = worst_grad_sigmas.max(dev);
        assert!(
            dev <= 3.0,
            "coordinate {i}: replicated mean {mean} vs exact {} is {dev:.2} se",
            exact_flat[i]
        );
    }
    pass(3, &format!("class probabilities within {worst_sigmas:.2} se at S=1e5; replicated S=5 gradient within {worst_grad_sigmas:.2} se of the enumerated gradient"));
}

#[test]
fn criterion_04_layer_sampling_law() {
    let s = 100_000;
    let mut worst = 0.0f64;
    for (i, &u) in [-2.0, -0.5, 0.0, 0.5, 2.0].iter().enumerate() {
        let layer = PelmParams::new(
            vec![u],
            DenseMatrix::zeros(1, 1),
            Theta0Provenance::Random { seed: 0 },
        )
        .unwrap();
        let batch = layer
            .sample(&[0.0], s, &mut RngStream::new(1007, i as u64))
            .unwrap();
        let freq = batch.iter().filter(|z| z[0] == 1.0).count() as f64 / s as f64;
        let expect = 1.0 / (1.0 + (-2.0 * u).exp());
        let se = (expect * (1.0 - expect) / s as f64).sqrt().max(1e-12);
        let dev = (freq - expect).abs() / se;
        worst = worst.max(dev);
        assert!(dev <= 3.0, "u = {u}: frequency {freq} vs {expect} is {dev:.2} se");
    }

    let layer = PelmParams::new(
        vec![0.0],
        DenseMatrix::zeros(1, 1),
        Theta0Provenance::Random { seed: 0 },
    )
    .unwrap();
    let batch = layer.sample(&[0.0], s, &mut RngStream::new(1008, 0)).unwrap();
    let mean: f64 = batch.iter().map(|z| z[0]).sum::<f64>() / s as f64;
    let var: f64 = batch.iter().map(|z| (z[0] - mean) * (z[0] - mean)).sum::<f64>() / s as f64;
    assert!((var - 1.0).abs() <= 0.02, "variance at zero potential: {var}");
    pass(4, &format!("plus-probability matches the logistic law at 5 potentials (worst {worst:.2} se); variance at zero potential {var:.4} within 1 ± 0.02"));
}

#[test]
fn criterion_05_deterministic_mode_variance_grows_with_noise() {
    let n = 64;
    let mut rng = RngStream::new(1009, 0);
    let w0 = init_gaussian_scaled(1, n, &mut rng).unwrap();
    let layer = PelmParams::new(vec![0.0], w0, Theta0Provenance::Random { seed: 0 }).unwrap();
    let draws = 100_000;
    let mut variances = Vec::new();
    for (level, sigma) in [0.2, 0.4, 0.6, 0.8, 1.0].iter().enumerate() {
        let mut noise_rng = RngStream::new(1010, level as u64);
        let mut sum = 0.0;
        let mut sum_sq = 0.0;
        for _ in 0..draws {
            let eta: Vec<f64> = (0..n).map(|_| sigma * noise_rng.normal()).collect();
            let z = layer.deterministic(&eta).unwrap()[0];
            sum += z;
            sum_sq += z * z;
        }
        let mean = sum / draws as f64;
        variances.push(sum_sq / draws as f64 - mean * mean);
    }
    for w in variances.windows(2) {
        assert!(
            w[1] >= w[0] - 1e-3,
            "variance decreased along the grid: {variances:?}"
        );
    }
    pass(5, &format!("tanh-mode output variance non-decreasing over the noise grid: {:?}",
        variances.iter().map(|v| (v * 1e4).round() / 1e4).collect::<Vec<_>>()));
}

#[test]
fn criterion_06_gbrbm_properties() {
    // Hidden conditional ignores the visible-side parameters.
    let mut rng = RngStream::new(1011, 0);
    let mut g = GbrbmParams::init(3, 4, &mut rng).unwrap();
    for v in g.b0.iter_mut() {
        *v = 0.3 * rng.normal();
    }
    let x = [0.4, -0.2, 0.9];
    let base = g.hidden_conditional(&x).unwrap();
    for v in g.c.iter_mut() {
        *v += 2.5;
    }
    for v in g.s.iter_mut() {
        *v -= 1.0;
    }
    assert_eq!(g.hidden_conditional(&x).unwrap(), base);

    // Gibbs draws of the visible conditional match its analytic moments.
    let z = [1.0, -1.0, 1.0, -1.0];
    let (mean, var) = g.visible_conditional(&z).unwrap();
    let draws = 100_000;
    let mut sums = [0.0; 3];
    let mut sq = [0.0; 3];
    let mut sample_rng = RngStream::new(1012, 0);
    for _ in 0..draws {
        let v = g.sample_visible(&z, &mut sample_rng).unwrap();
        for i in 0..3 {
            sums[i] += v[i];
            sq[i] += v[i] * v[i];
        }
    }
    for i in 0..3 {
        let m = sums[i] / draws as f64;
        let vv = sq[i] / draws as f64 - m * m;
        let se_mean = (var[i] / draws as f64).sqrt();
        let se_var = (2.0 * var[i] * var[i] / draws as f64).sqrt();
        assert!((m - mean[i]).abs() <= 3.0 * se_mean, "mean[{i}]: {m} vs {}", mean[i]);
        assert!((vv - var[i]).abs() <= 3.0 * se_var, "var[{i}]: {vv} vs {}", var[i]);
    }

    // Exact likelihood strictly improves over the first 50 CD epochs on a
    // two-component Gaussian mixture.
    let mut data_rng = RngStream::new(1013, 0);
    let mut x = DenseMatrix::zeros(400, 2);
    for r in 0..400 {
        let sign = if r % 2 == 0 { 1.0 } else { -1.0 };
        x.set(r, 0, 2.0 * sign + 0.5 * data_rng.normal());
        x.set(r, 1, 2.0 * sign + 0.5 * data_rng.normal());
    }
    let init = GbrbmParams::init(2, 2, &mut data_rng).unwrap();
    let config = GbrbmTrainConfig {
        epochs: 1,
        batch_size: 400,
        cd_k: 1,
        adam: AdamConfig::with_rate(0.02),
    };
    let mut current = init;
    let mut lls = vec![current.exact_log_likelihood(&x).unwrap()];
    let root = RngStream::new(1014, 0);
    for epoch in 0..50 {
        current = current.train(&x, &config, &root.substream(epoch)).unwrap();
        lls.push(current.exact_log_likelihood(&x).unwrap());
    }
    for w in lls.windows(2) {
        assert!(w[1] > w[0], "likelihood not strictly improving: {} -> {}", w[0], w[1]);
    }
    pass(6, &format!(
        "conditional invariances and Gibbs moments hold; mixture likelihood improved strictly for 50 epochs ({:.4} -> {:.4})",
        lls[0],
        lls[lls.len() - 1]
    ));
}

#[test]
fn criterion_07_end_to_end_determinism() {
    let dir = tempfile::tempdir().unwrap();
    let mut csv = String::from("f1,f2,class\n");
    let mut rng = RngStream::new(1015, 0);
    for i in 0..60 {
        let class = i % 2;
        let c = if class == 0 { -2.0 } else { 2.0 };
        csv.push_str(&format!(
            "{},{},{}\n",
            c + 0.4 * rng.normal(),
            c + 0.4 * rng.normal(),
            class
        ));
    }
    std::fs::write(dir.path().join("toy.csv"), csv).unwrap();
    let config = ExperimentConfig::from_json(
        r#"{
            "dataset": {
                "name": "toy", "kind": "csv", "files": ["toy.csv"],
                "label_column": "class", "n_train": 40, "n_test": 20
            },
            "model": "mdrbm",
            "theta0": "gbrbm",
            "layers": { "pelm_hidden": 6, "drbm_hidden": 5 },
            "train": { "epochs": 10, "batch_size": 8 },
            "gbrbm": { "epochs": 3 },
            "repeats": 2,
            "noise_grid": [0.0, 0.5, 1.0],
            "seed": 7
        }"#,
    )
    .unwrap();

    let out1 = dir.path().join("a");
    let out2 = dir.path().join("b");
    let r1 = run_experiment(&config, dir.path(), &out1).unwrap();
    let r2 = run_experiment(&config, dir.path(), &out2).unwrap();
    assert_eq!(r1.digest, r2.digest, "report digests differ");
    for repeat in 0..2 {
        let a = std::fs::read(out1.join(format!("model_r{repeat}.params"))).unwrap();
        let b = std::fs::read(out2.join(format!("model_r{repeat}.params"))).unwrap();
        assert_eq!(a, b, "trained parameters differ at repeat {repeat}");
    }
    pass(7, &format!("two identical runs: equal report digest {} and bit-identical trained parameters", r1.digest));
}

// ---------------------------------------------------------------------------
// Desk-scale reproductions (run when dataset files are present).
// ---------------------------------------------------------------------------

fn data_root() -> PathBuf {
    std::env::var_os("MDRBM_DATA_DIR")
        .map(PathBuf::from)
        .unwrap_or_else(|| {
            Path::new(env!("CARGO_MANIFEST_DIR"))
                .join("../..")
                .join("data")
        })
}

fn artifacts_root() -> PathBuf {
    PathBuf::from(env!("CARGO_TARGET_TMPDIR")).join("acceptance")
}

/// Run the experiment unless a matching report is already on disk (so a
/// re-run of the suite against the same data does not retrain).
fn run_or_load(config: &ExperimentConfig, out_dir: &Path) -> NoiseSweepReport {
    let report_path = out_dir.join("report.json");
    if let Ok(report) = NoiseSweepReport::read(&report_path) {
        if report.config_digest == config.digest().unwrap() {
            return report;
        }
    }
    run_experiment(config, &data_root(), out_dir).expect("desk-scale run")
}

fn mnist_config(model: ModelKind, theta0: Option<Theta0Source>) -> ExperimentConfig {
    let mut config = ExperimentConfig::preset("mnist", model, theta0).unwrap();
    config.repeats = 1;
    config.noise_repeats = 3;
    config
}

fn mnist_available() -> bool {
    let config = mnist_config(ModelKind::Drbm, None);
    config.validate(&data_root()).is_ok()
}

/// Reports for DRBM, DRBM+ELM(G), and MDRBM(G), keyed by label. Trained once
/// and shared by criteria 8, 9, and 11.
fn mnist_reports() -> &'static Option<BTreeMap<String, NoiseSweepReport>> {
    static REPORTS: OnceLock<Option<BTreeMap<String, NoiseSweepReport>>> = OnceLock::new();
    REPORTS.get_or_init(|| {
        if !mnist_available() {
            return None;
        }
        let mut out = BTreeMap::new();
        for (kind, theta0, slug) in [
            (ModelKind::Drbm, None, "drbm"),
            (ModelKind::DrbmElm, Some(Theta0Source::Gbrbm), "drbm_elm_g"),
            (ModelKind::Mdrbm, Some(Theta0Source::Gbrbm), "mdrbm_g"),
        ] {
            let config = mnist_config(kind, theta0);
            let report = run_or_load(&config, &artifacts_root().join("mnist").join(slug));
            out.insert(report.model.clone(), report);
        }
        Some(out)
    })
}

fn mean_at(report: &NoiseSweepReport, sigma: f64) -> f64 {
    report
        .rows
        .iter()
        .find(|r| (r.sigma - sigma).abs() < 1e-9)
        .expect("sigma present")
        .mean_accuracy
}

#[test]
fn criterion_08_mnist_reproduction() {
    let Some(reports) = mnist_reports() else {
        skip(8, "MNIST files not found under the data directory");
        return;
    };
    let mdrbm_g = &reports["MDRBM(G)"];
    let drbm = &reports["DRBM"];

    let clean_mdrbm = mean_at(mdrbm_g, 0.0) * 100.0;
    let clean_drbm = mean_at(drbm, 0.0) * 100.0;
    let noisy_mdrbm = mean_at(mdrbm_g, 1.0) * 100.0;
    let noisy_drbm = mean_at(drbm, 1.0) * 100.0;

    assert!(clean_mdrbm >= 93.0, "MDRBM(G) clean accuracy {clean_mdrbm:.1} < 93.0");
    assert!(
        (88.7..=91.7).contains(&clean_drbm),
        "DRBM clean accuracy {clean_drbm:.1} outside 90.2 ± 1.5"
    );
    assert!(
        noisy_mdrbm - noisy_drbm >= 8.0,
        "sigma = 1 gap {:.1} < 8 points (MDRBM(G) {noisy_mdrbm:.1} vs DRBM {noisy_drbm:.1})",
        noisy_mdrbm - noisy_drbm
    );
    pass(8, &format!(
        "MNIST: MDRBM(G) clean {clean_mdrbm:.1}%, DRBM clean {clean_drbm:.1}%, sigma=1 gap {:.1} points",
        noisy_mdrbm - noisy_drbm
    ));
}

#[test]
fn criterion_09_mnist_adr_ordering() {
    let Some(reports) = mnist_reports() else {
        skip(9, "MNIST files not found under the data directory");
        return;
    };
    let adr_mdrbm = reports["MDRBM(G)"].adr.expect("grid includes sigma = 1");
    let adr_elm = reports["DRBM+ELM(G)"].adr.expect("grid includes sigma = 1");
    let adr_drbm = reports["DRBM"].adr.expect("grid includes sigma = 1");
    assert!(
        adr_mdrbm < adr_elm && adr_elm < adr_drbm,
        "ADR ordering violated: MDRBM(G) {adr_mdrbm:.2}, DRBM+ELM(G) {adr_elm:.2}, DRBM {adr_drbm:.2}"
    );
    assert!(adr_mdrbm <= 3.5, "ADR(MDRBM(G)) {adr_mdrbm:.2} > 3.5");
    assert!(adr_drbm >= 7.0, "ADR(DRBM) {adr_drbm:.2} < 7.0");
    pass(9, &format!(
        "ADR ordering holds: MDRBM(G) {adr_mdrbm:.2} < DRBM+ELM(G) {adr_elm:.2} < DRBM {adr_drbm:.2}"
    ));
}

fn ulc_report() -> &'static Option<NoiseSweepReport> {
    static REPORT: OnceLock<Option<NoiseSweepReport>> = OnceLock::new();
    REPORT.get_or_init(|| {
        let mut config =
            ExperimentConfig::preset("ulc", ModelKind::Mdrbm, Some(Theta0Source::Gbrbm)).unwrap();
        config.repeats = 3;
        config.noise_repeats = 3;
        if config.validate(&data_root()).is_err() {
            return None;
        }
        Some(run_or_load(&config, &artifacts_root().join("ulc").join("mdrbm_g")))
    })
}

#[test]
fn criterion_10_ulc_reproduction() {
    let started = std::time::Instant::now();
    let Some(report) = ulc_report() else {
        skip(10, "ULC files not found under the data directory");
        return;
    };
    let clean = mean_at(report, 0.0) * 100.0;
    assert!(
        (74.7..=82.7).contains(&clean),
        "MDRBM(G) clean accuracy {clean:.1} outside 78.7 ± 4.0"
    );
    let elapsed = started.elapsed().as_secs_f64().max(report.wall_time_seconds);
    assert!(elapsed <= 300.0, "ULC run took {elapsed:.0} s > 5 minutes");
    pass(10, &format!("ULC: MDRBM(G) clean {clean:.1}% within 78.7 ± 4.0, run {elapsed:.0} s"));
}

#[test]
fn criterion_11_noise_curves_non_increasing() {
    let mut reports: Vec<&NoiseSweepReport> = Vec::new();
    if let Some(mnist) = mnist_reports() {
        reports.extend(mnist.values());
    }
    if let Some(ulc) = ulc_report() {
        reports.push(ulc);
    }
    if reports.is_empty() {
        skip(11, "no desk-scale runs executed (datasets not found)");
        return;
    }
    for report in &reports {
        for pair in report.rows.windows(2) {
            let (a, b) = (&pair[0], &pair[1]);
            // Pooled standard error of the difference between two noise
            // levels; each side gets at least the binomial floor of its
            // accuracy estimate.
            let n_test = report.config.dataset.n_test as f64;
            let se = |row: &mdrbm::bench::SweepRow| {
                let sampling = row.std_accuracy / (row.accuracies.len() as f64).sqrt();
                let p = row.mean_accuracy.clamp(0.01, 0.99);
                let binomial = (p * (1.0 - p) / n_test).sqrt();
                sampling.max(binomial)
            };
            let pooled = (se(a).powi(2) + se(b).powi(2)).sqrt();
            assert!(
                b.mean_accuracy <= a.mean_accuracy + pooled,
                "{}: accuracy rose from {:.4} (sigma {}) to {:.4} (sigma {}) beyond 1 pooled se {:.4}",
                report.model,
                a.mean_accuracy,
                a.sigma,
                b.mean_accuracy,
                b.sigma,
                pooled
            );
        }
    }
    pass(11, &format!(
        "noise curves non-increasing within one pooled standard error for {} trained model(s)",
        reports.len()
    ));
}
