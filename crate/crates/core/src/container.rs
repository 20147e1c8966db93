//! Shared on-disk parameter container used by every model.
//!
//! Layout:
//!
//! ```text
//! "mdrbm-container 1\n"            ASCII version tag
//! u64 little-endian                 header length in bytes
//! JSON header                       kind, string metadata, block shapes
//! per block, in header order        rows*cols f64 values, little-endian
//! ```
//!
//! Round-trips are bit-exact; [`Container::digest`] fingerprints the full
//! serialized content.

use crate::baselines::{ElmDrbmModel, MlpParams};
use crate::digest::fnv1a64;
use crate::drbm::DrbmParams;
use crate::error::{Error, Result};
use crate::gbrbm::GbrbmParams;
use crate::math::DenseMatrix;
use crate::mdrbm::MdrbmModel;
use crate::pelm::{PelmParams, Theta0Provenance};
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

const VERSION_TAG: &str = "mdrbm-container 1\n";

#[derive(Debug, Clone, Serialize, Deserialize)]
struct BlockInfo {
    name: String,
    rows: usize,
    cols: usize,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct Header {
    kind: String,
    meta: BTreeMap<String, String>,
    blocks: Vec<BlockInfo>,
}

/// A parameter file in memory: a kind tag, string metadata, and named
/// float blocks.
#[derive(Debug, Clone)]
pub struct Container {
    pub kind: String,
    pub meta: BTreeMap<String, String>,
    blocks: Vec<(BlockInfo, Vec<f64>)>,
}

impl Container {
    pub fn new(kind: impl Into<String>) -> Self {
        Container {
            kind: kind.into(),
            meta: BTreeMap::new(),
            blocks: Vec::new(),
        }
    }

    pub fn push_matrix(&mut self, name: &str, m: &DenseMatrix) {
        self.blocks.push((
            BlockInfo {
                name: name.to_string(),
                rows: m.rows(),
                cols: m.cols(),
            },
            m.data().to_vec(),
        ));
    }

    pub fn push_vector(&mut self, name: &str, v: &[f64]) {
        self.blocks.push((
            BlockInfo {
                name: name.to_string(),
                rows: v.len(),
                cols: 1,
            },
            v.to_vec(),
        ));
    }

    pub fn matrix(&self, name: &str) -> Result<DenseMatrix> {
        let (info, data) = self
            .blocks
            .iter()
            .find(|(info, _)| info.name == name)
            .ok_or_else(|| Error::format(format!("container: missing block {name:?}")))?;
        DenseMatrix::from_vec(info.rows, info.cols, data.clone())
    }

    pub fn vector(&self, name: &str) -> Result<Vec<f64>> {
        let (info, data) = self
            .blocks
            .iter()
            .find(|(info, _)| info.name == name)
            .ok_or_else(|| Error::format(format!("container: missing block {name:?}")))?;
        if info.cols != 1 {
            return Err(Error::format(format!(
                "container: block {name:?} is {}x{}, expected a vector",
                info.rows, info.cols
            )));
        }
        Ok(data.clone())
    }

    pub fn to_bytes(&self) -> Result<Vec<u8>> {
        let header = Header {
            kind: self.kind.clone(),
            meta: self.meta.clone(),
            blocks: self.blocks.iter().map(|(info, _)| info.clone()).collect(),
        };
        let header_json = serde_json::to_vec(&header)
            .map_err(|e| Error::format(format!("container: header encode: {e}")))?;
        let mut out = Vec::new();
        out.extend_from_slice(VERSION_TAG.as_bytes());
        out.extend_from_slice(&(header_json.len() as u64).to_le_bytes());
        out.extend_from_slice(&header_json);
        for (info, data) in &self.blocks {
            if data.len() != info.rows * info.cols {
                return Err(Error::usage(format!(
                    "container: block {} has {} values for {}x{}",
                    info.name,
                    data.len(),
                    info.rows,
                    info.cols
                )));
            }
            for v in data {
                out.extend_from_slice(&v.to_le_bytes());
            }
        }
        Ok(out)
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        let tag = VERSION_TAG.as_bytes();
        if bytes.len() < tag.len() || &bytes[..tag.len()] != tag {
            return Err(Error::format("container: missing or unsupported version tag"));
        }
        let mut pos = tag.len();
        if bytes.len() < pos + 8 {
            return Err(Error::format("container: truncated header length"));
        }
        let header_len = u64::from_le_bytes(bytes[pos..pos + 8].try_into().unwrap()) as usize;
        pos += 8;
        if bytes.len() < pos + header_len {
            return Err(Error::format("container: truncated header"));
        }
        let header: Header = serde_json::from_slice(&bytes[pos..pos + header_len])
            .map_err(|e| Error::format(format!("container: header decode: {e}")))?;
        pos += header_len;

        let mut blocks = Vec::with_capacity(header.blocks.len());
        for info in header.blocks {
            let count = info.rows * info.cols;
            let need = count * 8;
            if bytes.len() < pos + need {
                return Err(Error::format(format!(
                    "container: truncated block {:?} (need {need} bytes, have {})",
                    info.name,
                    bytes.len() - pos
                )));
            }
            let mut data = Vec::with_capacity(count);
            for chunk in bytes[pos..pos + need].chunks_exact(8) {
                data.push(f64::from_le_bytes(chunk.try_into().unwrap()));
            }
            pos += need;
            blocks.push((info, data));
        }
        if pos != bytes.len() {
            return Err(Error::format(format!(
                "container: {} trailing bytes",
                bytes.len() - pos
            )));
        }
        Ok(Container {
            kind: header.kind,
            meta: header.meta,
            blocks,
        })
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        fs::write(path, self.to_bytes()?)?;
        Ok(())
    }

    pub fn read(path: &Path) -> Result<Self> {
        Self::from_bytes(&fs::read(path)?)
    }

    /// Digest of the serialized content.
    pub fn digest(&self) -> Result<u64> {
        Ok(fnv1a64(&self.to_bytes()?))
    }

    fn expect_kind(&self, kind: &str) -> Result<()> {
        if self.kind != kind {
            return Err(Error::format(format!(
                "container: kind {:?}, expected {kind:?}",
                self.kind
            )));
        }
        Ok(())
    }
}

fn provenance_meta(meta: &mut BTreeMap<String, String>, provenance: &Theta0Provenance) {
    meta.insert("provenance".to_string(), provenance.tag().to_string());
    match provenance {
        Theta0Provenance::Random { seed } => {
            meta.insert("seed".to_string(), seed.to_string());
        }
        Theta0Provenance::Gbrbm { run_id } => {
            meta.insert("run_id".to_string(), run_id.clone());
        }
    }
}

fn provenance_from_meta(meta: &BTreeMap<String, String>) -> Result<Theta0Provenance> {
    match meta.get("provenance").map(String::as_str) {
        Some("random") => {
            let seed = meta
                .get("seed")
                .and_then(|s| s.parse().ok())
                .ok_or_else(|| Error::format("container: random provenance without a seed"))?;
            Ok(Theta0Provenance::Random { seed })
        }
        Some("gbrbm") => {
            let run_id = meta
                .get("run_id")
                .cloned()
                .ok_or_else(|| Error::format("container: gbrbm provenance without a run id"))?;
            Ok(Theta0Provenance::Gbrbm { run_id })
        }
        other => Err(Error::format(format!(
            "container: unknown provenance {other:?}"
        ))),
    }
}

fn push_pelm(c: &mut Container, pelm: &PelmParams) {
    c.push_vector("b0", pelm.b0());
    c.push_matrix("w0", pelm.w0());
    provenance_meta(&mut c.meta, pelm.provenance());
}

fn pelm_from(c: &Container) -> Result<PelmParams> {
    PelmParams::new(c.vector("b0")?, c.matrix("w0")?, provenance_from_meta(&c.meta)?)
}

fn push_drbm_blocks(c: &mut Container, p: &DrbmParams) {
    c.push_vector("b1", &p.b1);
    c.push_vector("b2", &p.b2);
    c.push_matrix("w1", &p.w1);
    c.push_matrix("w2", &p.w2);
}

fn drbm_from(c: &Container) -> Result<DrbmParams> {
    let p = DrbmParams {
        b1: c.vector("b1")?,
        b2: c.vector("b2")?,
        w1: c.matrix("w1")?,
        w2: c.matrix("w2")?,
    };
    p.validate()?;
    Ok(p)
}

pub fn drbm_container(p: &DrbmParams) -> Container {
    let mut c = Container::new("drbm");
    push_drbm_blocks(&mut c, p);
    c
}

pub fn drbm_from_container(c: &Container) -> Result<DrbmParams> {
    c.expect_kind("drbm")?;
    drbm_from(c)
}

pub fn pelm_container(p: &PelmParams) -> Container {
    let mut c = Container::new("pelm");
    push_pelm(&mut c, p);
    c
}

pub fn pelm_from_container(c: &Container) -> Result<PelmParams> {
    c.expect_kind("pelm")?;
    pelm_from(c)
}

pub fn gbrbm_container(p: &GbrbmParams) -> Container {
    let mut c = Container::new("gbrbm");
    c.push_vector("b0", &p.b0);
    c.push_matrix("w0", &p.w0);
    c.push_vector("c", &p.c);
    c.push_vector("s", &p.s);
    c
}

pub fn gbrbm_from_container(c: &Container) -> Result<GbrbmParams> {
    c.expect_kind("gbrbm")?;
    let p = GbrbmParams {
        b0: c.vector("b0")?,
        w0: c.matrix("w0")?,
        c: c.vector("c")?,
        s: c.vector("s")?,
    };
    p.validate()?;
    Ok(p)
}

pub fn mdrbm_container(m: &MdrbmModel) -> Container {
    let mut c = Container::new("mdrbm");
    push_pelm(&mut c, m.pelm());
    push_drbm_blocks(&mut c, m.drbm());
    c
}

/// Loading re-validates the layer/classifier width match.
pub fn mdrbm_from_container(c: &Container) -> Result<MdrbmModel> {
    c.expect_kind("mdrbm")?;
    MdrbmModel::new(pelm_from(c)?, drbm_from(c)?)
}

pub fn elm_drbm_container(m: &ElmDrbmModel) -> Container {
    let mut c = Container::new("elm-drbm");
    push_pelm(&mut c, m.pelm());
    push_drbm_blocks(&mut c, m.drbm());
    c
}

pub fn elm_drbm_from_container(c: &Container) -> Result<ElmDrbmModel> {
    c.expect_kind("elm-drbm")?;
    ElmDrbmModel::new(pelm_from(c)?, drbm_from(c)?)
}

pub fn mlp_container(p: &MlpParams) -> Container {
    let mut c = Container::new("mlp4");
    c.push_matrix("w1", &p.w1);
    c.push_vector("b1", &p.b1);
    c.push_matrix("w2", &p.w2);
    c.push_vector("b2", &p.b2);
    c.push_matrix("w3", &p.w3);
    c.push_vector("b3", &p.b3);
    c
}

pub fn mlp_from_container(c: &Container) -> Result<MlpParams> {
    c.expect_kind("mlp4")?;
    let p = MlpParams {
        w1: c.matrix("w1")?,
        b1: c.vector("b1")?,
        w2: c.matrix("w2")?,
        b2: c.vector("b2")?,
        w3: c.matrix("w3")?,
        b3: c.vector("b3")?,
    };
    p.validate()?;
    Ok(p)
}
