//! CIFAR-10 binary batches, converted to grayscale on load.
//!
//! Each record is 3073 bytes: one label byte followed by 1024 red, 1024
//! green, and 1024 blue bytes (planar). Pixels are converted to BT.601 luma
//! `Y = 0.299 R + 0.587 G + 0.114 B` and scaled to [0, 1], giving 1024
//! features per image.

use super::Dataset;
use crate::error::{Error, Result};
use crate::math::DenseMatrix;
use std::fs;
use std::path::Path;

const PLANE: usize = 1024;
const RECORD: usize = 1 + 3 * PLANE;
const CLASSES: usize = 10;

/// Load one or more CIFAR-10 binary batch files as a single grayscale dataset.
pub fn load_cifar10(batch_paths: &[impl AsRef<Path>]) -> Result<Dataset> {
    if batch_paths.is_empty() {
        return Err(Error::usage("load_cifar10: no batch files given"));
    }
    let mut data: Vec<f64> = Vec::new();
    let mut labels: Vec<usize> = Vec::new();
    for path in batch_paths {
        let path = path.as_ref();
        let bytes = fs::read(path)?;
        if bytes.is_empty() || bytes.len() % RECORD != 0 {
            return Err(Error::format(format!(
                "{}: size {} is not a multiple of the {RECORD}-byte record",
                path.display(),
                bytes.len()
            )));
        }
        for (i, record) in bytes.chunks_exact(RECORD).enumerate() {
            let label = record[0] as usize;
            if label >= CLASSES {
                return Err(Error::format(format!(
                    "{}: record {i} has label {label}, expected 0..={}",
                    path.display(),
                    CLASSES - 1
                )));
            }
            labels.push(label);
            let (r, rest) = record[1..].split_at(PLANE);
            let (g, b) = rest.split_at(PLANE);
            for p in 0..PLANE {
                let y = 0.299 * r[p] as f64 + 0.587 * g[p] as f64 + 0.114 * b[p] as f64;
                data.push(y / 255.0);
            }
        }
    }
    let x = DenseMatrix::from_vec(labels.len(), PLANE, data)?;
    Dataset::new("cifar10", x, labels, CLASSES)
}
