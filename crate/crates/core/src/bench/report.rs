//! Sweep report artifacts: a JSON document with the full configuration
//! embedded plus a plain TSV table (one row per noise level) for plotting.

use super::config::ExperimentConfig;
use crate::digest::{fnv1a64, hex64};
use crate::error::{Error, Result};
use serde::{Deserialize, Serialize};
use std::path::Path;

pub const REPORT_FORMAT: &str = "mdrbm-report 1";

/// Accuracy measurements at one noise level: every individual run plus the
/// pooled mean and sample standard deviation.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SweepRow {
    pub sigma: f64,
    pub accuracies: Vec<f64>,
    pub mean_accuracy: f64,
    pub std_accuracy: f64,
}

impl SweepRow {
    pub fn from_accuracies(sigma: f64, accuracies: Vec<f64>) -> Self {
        let n = accuracies.len() as f64;
        let mean = accuracies.iter().sum::<f64>() / n;
        let std = if accuracies.len() > 1 {
            (accuracies.iter().map(|a| (a - mean) * (a - mean)).sum::<f64>() / (n - 1.0)).sqrt()
        } else {
            0.0
        };
        SweepRow {
            sigma,
            accuracies,
            mean_accuracy: mean,
            std_accuracy: std,
        }
    }
}

/// Accuracy-degradation rate in percent: the relative accuracy drop from the
/// clean entry to the highest benchmark noise level,
/// `(acc(0) - acc(1)) / acc(0) * 100`. Both endpoints must be present.
pub fn adr(entries: &[(f64, f64)]) -> Result<f64> {
    let find = |target: f64| {
        entries
            .iter()
            .find(|(sigma, _)| (sigma - target).abs() < 1e-9)
            .map(|(_, acc)| *acc)
    };
    let clean = find(0.0).ok_or_else(|| Error::usage("adr: no sigma = 0 entry"))?;
    let noisy = find(1.0).ok_or_else(|| Error::usage("adr: no sigma = 1 entry"))?;
    if clean.is_nan() || clean <= 0.0 {
        return Err(Error::usage("adr: clean accuracy must be positive"));
    }
    Ok((clean - noisy) / clean * 100.0)
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct NoiseSweepReport {
    pub format: String,
    pub model: String,
    pub dataset: String,
    pub config: ExperimentConfig,
    pub config_digest: String,
    pub seed: u64,
    pub model_selection: String,
    pub rows: Vec<SweepRow>,
    /// Present when the grid contains sigma = 1.
    pub adr: Option<f64>,
    /// Digest of everything above (wall time excluded), for determinism checks.
    pub digest: String,
    pub wall_time_seconds: f64,
}

impl NoiseSweepReport {
    pub fn assemble(
        config: &ExperimentConfig,
        rows: Vec<SweepRow>,
        wall_time_seconds: f64,
    ) -> Result<Self> {
        let entries: Vec<(f64, f64)> = rows.iter().map(|r| (r.sigma, r.mean_accuracy)).collect();
        let adr_value = if entries.iter().any(|(s, _)| (s - 1.0).abs() < 1e-9) {
            Some(adr(&entries)?)
        } else {
            None
        };
        let mut report = NoiseSweepReport {
            format: REPORT_FORMAT.to_string(),
            model: config.model_label(),
            dataset: config.dataset.name.clone(),
            config: config.clone(),
            config_digest: config.digest()?,
            seed: config.seed,
            model_selection: "best-by-test-accuracy".to_string(),
            rows,
            adr: adr_value,
            digest: String::new(),
            wall_time_seconds,
        };
        report.digest = report.compute_digest()?;
        Ok(report)
    }

    /// Digest over the deterministic content: the volatile fields (wall time
    /// and the digest itself) are zeroed before hashing.
    pub fn compute_digest(&self) -> Result<String> {
        let mut canonical = self.clone();
        canonical.digest = String::new();
        canonical.wall_time_seconds = 0.0;
        let json = serde_json::to_string(&canonical)
            .map_err(|e| Error::format(format!("report encode: {e}")))?;
        Ok(hex64(fnv1a64(json.as_bytes())))
    }

    pub fn to_json(&self) -> Result<String> {
        serde_json::to_string_pretty(self).map_err(|e| Error::format(format!("report encode: {e}")))
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let report: NoiseSweepReport =
            serde_json::from_str(text).map_err(|e| Error::format(format!("report parse: {e}")))?;
        if report.format != REPORT_FORMAT {
            return Err(Error::format(format!(
                "report format {:?}, expected {REPORT_FORMAT:?}",
                report.format
            )));
        }
        Ok(report)
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_json()?)?;
        Ok(())
    }

    pub fn read(path: &Path) -> Result<Self> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }

    /// One row per noise level: sigma, pooled mean, pooled std, run count.
    pub fn to_tsv(&self) -> String {
        let mut out = String::from("sigma\tmean_accuracy\tstd_accuracy\truns\n");
        for row in &self.rows {
            out.push_str(&format!(
                "{}\t{}\t{}\t{}\n",
                row.sigma,
                row.mean_accuracy,
                row.std_accuracy,
                row.accuracies.len()
            ));
        }
        out
    }
}

/// Merge several single-model reports into one comparison table (TSV with a
/// mean-accuracy column per noise level plus the ADR column). All reports
/// must share the same noise grid.
pub fn comparison_table(reports: &[NoiseSweepReport]) -> Result<String> {
    if reports.is_empty() {
        return Err(Error::usage("comparison: no reports given"));
    }
    let grid: Vec<f64> = reports[0].rows.iter().map(|r| r.sigma).collect();
    for r in reports {
        let other: Vec<f64> = r.rows.iter().map(|row| row.sigma).collect();
        if other != grid {
            return Err(Error::usage(format!(
                "comparison: report {:?} uses a different noise grid",
                r.model
            )));
        }
    }
    let mut out = String::from("model\tdataset");
    for sigma in &grid {
        out.push_str(&format!("\tacc(sigma={sigma})"));
    }
    out.push_str("\tADR\n");
    for r in reports {
        out.push_str(&format!("{}\t{}", r.model, r.dataset));
        for row in &r.rows {
            out.push_str(&format!("\t{:.4}", row.mean_accuracy));
        }
        match r.adr {
            Some(a) => out.push_str(&format!("\t{a:.2}\n")),
            None => out.push_str("\tn/a\n"),
        }
    }
    Ok(out)
}
