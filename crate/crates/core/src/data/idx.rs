//! IDX binary format (MNIST / Fashion-MNIST distribution files).
//!
//! Layout: big-endian u32 magic (0x00000803 for image files, 0x00000801 for
//! label files), big-endian u32 dimension sizes, then an unsigned-byte
//! payload. Pixels are scaled to [0, 1]; labels become one-hot rows.

use super::Dataset;
use crate::error::{Error, Result};
use crate::math::DenseMatrix;
use std::fs;
use std::path::Path;

const IMAGE_MAGIC: u32 = 0x0000_0803;
const LABEL_MAGIC: u32 = 0x0000_0801;

struct Reader<'a> {
    bytes: &'a [u8],
    pos: usize,
    path: &'a Path,
}

impl<'a> Reader<'a> {
    fn u32(&mut self, field: &str) -> Result<u32> {
        if self.pos + 4 > self.bytes.len() {
            return Err(Error::format(format!(
                "{}: truncated while reading {field}",
                self.path.display()
            )));
        }
        let v = u32::from_be_bytes(self.bytes[self.pos..self.pos + 4].try_into().unwrap());
        self.pos += 4;
        Ok(v)
    }

    fn payload(&mut self, count: usize, field: &str) -> Result<&'a [u8]> {
        if self.pos + count > self.bytes.len() {
            return Err(Error::format(format!(
                "{}: truncated {field} payload (need {count} bytes, have {})",
                self.path.display(),
                self.bytes.len() - self.pos
            )));
        }
        let s = &self.bytes[self.pos..self.pos + count];
        self.pos += count;
        Ok(s)
    }
}

fn read_images(path: &Path) -> Result<(usize, usize, Vec<f64>)> {
    let bytes = fs::read(path)?;
    let mut r = Reader {
        bytes: &bytes,
        pos: 0,
        path,
    };
    let magic = r.u32("magic")?;
    if magic != IMAGE_MAGIC {
        return Err(Error::format(format!(
            "{}: bad image magic {magic:#010x}, expected {IMAGE_MAGIC:#010x}",
            path.display()
        )));
    }
    let count = r.u32("image count")? as usize;
    let rows = r.u32("row count")? as usize;
    let cols = r.u32("column count")? as usize;
    let pixels = r.payload(count * rows * cols, "pixel")?;
    if r.pos != bytes.len() {
        return Err(Error::format(format!(
            "{}: {} trailing bytes after pixel payload",
            path.display(),
            bytes.len() - r.pos
        )));
    }
    let data = pixels.iter().map(|&b| b as f64 / 255.0).collect();
    Ok((count, rows * cols, data))
}

fn read_labels(path: &Path) -> Result<Vec<u8>> {
    let bytes = fs::read(path)?;
    let mut r = Reader {
        bytes: &bytes,
        pos: 0,
        path,
    };
    let magic = r.u32("magic")?;
    if magic != LABEL_MAGIC {
        return Err(Error::format(format!(
            "{}: bad label magic {magic:#010x}, expected {LABEL_MAGIC:#010x}",
            path.display()
        )));
    }
    let count = r.u32("label count")? as usize;
    let payload = r.payload(count, "label")?;
    Ok(payload.to_vec())
}

/// Load an IDX image/label file pair into a dataset named after the stem.
pub fn load_idx(images_path: &Path, labels_path: &Path) -> Result<Dataset> {
    let (count, features, data) = read_images(images_path)?;
    let labels = read_labels(labels_path)?;
    if labels.len() != count {
        return Err(Error::format(format!(
            "{} has {count} images but {} has {} labels",
            images_path.display(),
            labels_path.display(),
            labels.len()
        )));
    }
    let x = DenseMatrix::from_vec(count, features, data)?;
    let class_count = labels.iter().copied().max().map_or(1, |m| m as usize + 1);
    let name = images_path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "idx".to_string());
    Dataset::new(name, x, labels.into_iter().map(|l| l as usize).collect(), class_count)
}
