//! Checkpoint file, little-endian throughout:
//!
//! ```text
//! "GFAB" | u32 version
//! u8 architecture | u8 n_branches | n_branches x (u8 modality, u8 encoder index)
//! f32 margin | f32 aux_weight | u64 backbone seed
//! train config: f32 lr | u32 batch | u32 iterations | f32 margin
//!               f32 negative_ratio | f32 aux_weight | u64 master seed
//! u32 n_encoders | per encoder: u32 n_dims | n_dims x u32 | params as f32
//! u32 n_heads    | per head: u32 embedding dim | u32 classes | params as f32
//! ```

use std::path::Path;

use crate::assocnet::{Architecture, ClassifierHead, JointModel};
use crate::binio::{Reader, Writer};
use crate::dataplane::Modality;
use crate::error::{Error, Result};
use crate::numcore::{Encoder, EncoderSpec};

use super::train::TrainConfig;

pub const CHECKPOINT_MAGIC: &[u8; 4] = b"GFAB";
pub const CHECKPOINT_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq)]
pub struct Checkpoint {
    pub model: JointModel,
    pub backbone_seed: u64,
    pub train_config: TrainConfig,
}

fn write_params(w: &mut Writer, params: &[f64]) {
    for &p in params {
        w.f32(p as f32);
    }
}

fn read_params(r: &mut Reader<'_>, n: usize) -> Result<Vec<f64>> {
    (0..n).map(|_| r.f32().map(f64::from)).collect()
}

impl Checkpoint {
    pub fn to_bytes(&self) -> Result<Vec<u8>> {
        let m = &self.model;
        let mut w = Writer::default();
        w.bytes(CHECKPOINT_MAGIC);
        w.u32(CHECKPOINT_VERSION);
        w.u8(m.architecture().code());
        w.u8(m.branch_modalities().len() as u8);
        for (modality, &enc) in m.branch_modalities().iter().zip(m.branch_encoder()) {
            w.u8(modality.code());
            w.u8(enc as u8);
        }
        w.f32(m.margin() as f32);
        w.f32(m.aux_weight() as f32);
        w.u64(self.backbone_seed);
        let c = &self.train_config;
        w.f32(c.learning_rate as f32);
        w.len_u32(c.batch_size)?;
        w.len_u32(c.iterations)?;
        w.f32(c.margin as f32);
        w.f32(c.negative_ratio as f32);
        w.f32(c.aux_weight as f32);
        w.u64(c.master_seed);
        w.len_u32(m.encoders().len())?;
        for e in m.encoders() {
            let dims = e.spec().layer_dims();
            w.len_u32(dims.len())?;
            for &d in dims {
                w.len_u32(d)?;
            }
            write_params(&mut w, e.params());
        }
        w.len_u32(m.heads().len())?;
        for h in m.heads() {
            w.len_u32(h.embedding_dim())?;
            w.len_u32(h.n_classes())?;
            write_params(&mut w, h.params());
        }
        Ok(w.buf)
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        let mut r = Reader::new(bytes, "checkpoint");
        r.expect_magic(CHECKPOINT_MAGIC)?;
        let version = r.u32()?;
        if version != CHECKPOINT_VERSION {
            return Err(Error::VersionMismatch {
                expected: CHECKPOINT_VERSION,
                found: version,
            });
        }
        let architecture = Architecture::from_code(r.u8()?)?;
        let n_branches = r.u8()? as usize;
        let mut branch_modalities = Vec::with_capacity(n_branches);
        let mut branch_encoder = Vec::with_capacity(n_branches);
        for _ in 0..n_branches {
            branch_modalities
                .push(Modality::from_code(r.u8()?).map_err(|e| Error::Malformed(e.to_string()))?);
            branch_encoder.push(r.u8()? as usize);
        }
        let margin = r.f32()? as f64;
        let aux_weight = r.f32()? as f64;
        let backbone_seed = r.u64()?;
        let train_config = TrainConfig {
            learning_rate: r.f32()? as f64,
            batch_size: r.u32()? as usize,
            iterations: r.u32()? as usize,
            margin: r.f32()? as f64,
            negative_ratio: r.f32()? as f64,
            aux_weight: r.f32()? as f64,
            master_seed: r.u64()?,
        };
        let n_enc = r.u32()? as usize;
        let mut encoders = Vec::with_capacity(n_enc.min(16));
        for _ in 0..n_enc {
            let n_dims = r.u32()? as usize;
            let dims = (0..n_dims)
                .map(|_| r.u32().map(|d| d as usize))
                .collect::<Result<Vec<_>>>()?;
            let spec = EncoderSpec::new(dims).map_err(|e| Error::Malformed(e.to_string()))?;
            let params = read_params(&mut r, spec.param_count())?;
            encoders.push(Encoder::from_params(&spec, params)?);
        }
        let n_heads = r.u32()? as usize;
        let mut heads = Vec::with_capacity(n_heads.min(16));
        for _ in 0..n_heads {
            let dim = r.u32()? as usize;
            let k = r.u32()? as usize;
            let params = read_params(&mut r, dim * k + k)?;
            heads.push(ClassifierHead::from_params(dim, k, params)?);
        }
        r.finish()?;
        let model = JointModel::from_parts(
            architecture,
            branch_modalities,
            branch_encoder,
            encoders,
            heads,
            margin,
            aux_weight,
        )?;
        Ok(Self {
            model,
            backbone_seed,
            train_config,
        })
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_bytes()?).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
        Self::from_bytes(&bytes)
    }
}

pub fn save_checkpoint(checkpoint: &Checkpoint, path: &Path) -> Result<()> {
    checkpoint.save(path)
}

pub fn load_checkpoint(path: &Path) -> Result<Checkpoint> {
    Checkpoint::load(path)
}
