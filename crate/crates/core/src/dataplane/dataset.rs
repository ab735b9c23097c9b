use std::collections::BTreeSet;
use std::path::Path;

use rand::seq::SliceRandom;

use crate::binio::{Reader, Writer};
use crate::error::{Error, Result};
use crate::rng;

use super::fabric::{generate_fabrics, normalize_attributes, FabricRecord};
use super::kmeans::kmeans_cluster;
use super::split::split_dataset;
use super::world::{Modality, Observation, SynthWorld, WorldConfig};

pub const DATASET_MAGIC: &[u8; 4] = b"GFDS";
pub const DATASET_VERSION: u32 = 1;

/// Observations per fabric for each modality.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct InstanceCounts {
    pub depth: u32,
    pub color: u32,
    pub touch_flat: u32,
    pub touch_fold: u32,
}

impl Default for InstanceCounts {
    fn default() -> Self {
        Self {
            depth: 10,
            color: 10,
            touch_flat: 10,
            touch_fold: 15,
        }
    }
}

impl InstanceCounts {
    pub fn get(&self, m: Modality) -> u32 {
        match m {
            Modality::Depth => self.depth,
            Modality::Color => self.color,
            Modality::TouchFlat => self.touch_flat,
            Modality::TouchFold => self.touch_fold,
        }
    }
}

/// Provenance recorded in the dataset header.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct DatasetMeta {
    pub world_seed: u64,
    pub noise_std: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub feature_dim: usize,
    pub fabrics: Vec<FabricRecord>,
    pub observations: Vec<Observation>,
    /// Sorted ids of the held-out test fabrics.
    pub test_fabrics: Vec<u32>,
    pub meta: DatasetMeta,
}

impl Dataset {
    pub fn fabric(&self, id: u32) -> Option<&FabricRecord> {
        self.fabrics.iter().find(|f| f.id == id)
    }

    pub fn train_fabrics(&self) -> Vec<u32> {
        let test: BTreeSet<u32> = self.test_fabrics.iter().copied().collect();
        self.fabrics
            .iter()
            .map(|f| f.id)
            .filter(|id| !test.contains(id))
            .collect()
    }

    pub fn count(&self, modality: Modality) -> usize {
        self.observations
            .iter()
            .filter(|o| o.modality == modality)
            .count()
    }

    pub fn validate(&self) -> Result<()> {
        let mut ids = BTreeSet::new();
        for f in &self.fabrics {
            f.validate()?;
            if !ids.insert(f.id) {
                return Err(Error::Malformed(format!("duplicate fabric id {}", f.id)));
            }
        }
        for o in &self.observations {
            if !ids.contains(&o.fabric_id) {
                return Err(Error::Malformed(format!(
                    "observation of unknown fabric {}",
                    o.fabric_id
                )));
            }
            if o.features.len() != self.feature_dim {
                return Err(Error::dim(
                    "observation features",
                    self.feature_dim,
                    o.features.len(),
                ));
            }
            if o.features.iter().any(|v| !v.is_finite()) {
                return Err(Error::NonFinite(format!(
                    "features of fabric {}",
                    o.fabric_id
                )));
            }
        }
        for id in &self.test_fabrics {
            if !ids.contains(id) {
                return Err(Error::Malformed(format!("unknown test fabric {id}")));
            }
        }
        Ok(())
    }

    /// Marks `1 - train_fraction` of each (fabric, modality) group as held
    /// out, chosen at random.
    pub fn hold_out_observations(&mut self, train_fraction: f64, seed: u64) -> Result<()> {
        if !(0.0..=1.0).contains(&train_fraction) || train_fraction == 0.0 {
            return Err(Error::InvalidArgument(format!(
                "train fraction must be in (0, 1], got {train_fraction}"
            )));
        }
        for o in &mut self.observations {
            o.held_out = false;
        }
        if train_fraction == 1.0 {
            return Ok(());
        }
        let mut rng = rng::stream(seed, "holdout");
        for f in &self.fabrics {
            for m in Modality::ALL {
                let mut idx: Vec<usize> = (0..self.observations.len())
                    .filter(|&i| {
                        self.observations[i].fabric_id == f.id && self.observations[i].modality == m
                    })
                    .collect();
                idx.shuffle(&mut rng);
                let keep = (idx.len() as f64 * train_fraction).round() as usize;
                for &i in &idx[keep.min(idx.len())..] {
                    self.observations[i].held_out = true;
                }
            }
        }
        Ok(())
    }

    pub fn to_bytes(&self) -> Result<Vec<u8>> {
        let mut w = Writer::default();
        w.bytes(DATASET_MAGIC);
        w.u32(DATASET_VERSION);
        w.u64(self.meta.world_seed);
        w.f64(self.meta.noise_std);
        w.len_u32(self.feature_dim)?;
        w.len_u32(self.fabrics.len())?;
        w.len_u32(self.observations.len())?;
        for m in Modality::ALL {
            w.len_u32(self.count(m))?;
        }
        let test: BTreeSet<u32> = self.test_fabrics.iter().copied().collect();
        for f in &self.fabrics {
            w.u32(f.id);
            w.f64(f.thickness_mm);
            w.f64(f.stiffness_score);
            w.u8(f.stretch_level);
            w.f64(f.density_gsm);
            w.i32(f.cluster_id.map_or(-1, |c| c as i32));
            w.u8(test.contains(&f.id) as u8);
        }
        for o in &self.observations {
            w.u32(o.fabric_id);
            w.u8(o.modality.code());
            w.u32(o.instance_index);
            w.u8(o.held_out as u8);
        }
        for o in &self.observations {
            for &v in &o.features {
                w.f32(v as f32);
            }
        }
        Ok(w.buf)
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        let mut r = Reader::new(bytes, "dataset file");
        r.expect_magic(DATASET_MAGIC)?;
        let version = r.u32()?;
        if version != DATASET_VERSION {
            return Err(Error::VersionMismatch {
                expected: DATASET_VERSION,
                found: version,
            });
        }
        let meta = DatasetMeta {
            world_seed: r.u64()?,
            noise_std: r.f64()?,
        };
        let feature_dim = r.u32()? as usize;
        let n_fabrics = r.u32()? as usize;
        let n_obs = r.u32()? as usize;
        let mut per_modality = [0usize; 4];
        for c in &mut per_modality {
            *c = r.u32()? as usize;
        }
        let mut fabrics = Vec::with_capacity(n_fabrics.min(1 << 20));
        let mut test_fabrics = Vec::new();
        for _ in 0..n_fabrics {
            let id = r.u32()?;
            let thickness_mm = r.f64()?;
            let stiffness_score = r.f64()?;
            let stretch_level = r.u8()?;
            let density_gsm = r.f64()?;
            let cluster = r.i32()?;
            if r.u8()? != 0 {
                test_fabrics.push(id);
            }
            fabrics.push(FabricRecord {
                id,
                thickness_mm,
                stiffness_score,
                stretch_level,
                density_gsm,
                cluster_id: (cluster >= 0).then_some(cluster as u32),
            });
        }
        let mut observations = Vec::with_capacity(n_obs.min(1 << 20));
        for _ in 0..n_obs {
            let fabric_id = r.u32()?;
            let modality =
                Modality::from_code(r.u8()?).map_err(|e| Error::Malformed(e.to_string()))?;
            let instance_index = r.u32()?;
            let held_out = r.u8()? != 0;
            observations.push(Observation {
                fabric_id,
                modality,
                instance_index,
                features: Vec::new(),
                held_out,
            });
        }
        for o in &mut observations {
            o.features = (0..feature_dim)
                .map(|_| r.f32().map(f64::from))
                .collect::<Result<_>>()?;
        }
        r.finish()?;
        test_fabrics.sort_unstable();
        let ds = Dataset {
            feature_dim,
            fabrics,
            observations,
            test_fabrics,
            meta,
        };
        for m in Modality::ALL {
            if ds.count(m) != per_modality[m.code() as usize] {
                return Err(Error::Malformed(format!(
                    "header count for {m} does not match body"
                )));
            }
        }
        ds.validate()?;
        Ok(ds)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_bytes()?).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
        Self::from_bytes(&bytes)
    }
}

/// Everything needed to synthesize a clustered, split dataset.
#[derive(Debug, Clone, PartialEq)]
pub struct SynthDatasetConfig {
    pub world: WorldConfig,
    pub n_fabrics: usize,
    pub n_clusters: usize,
    pub n_test: usize,
    pub counts: InstanceCounts,
    /// Fraction of each fabric's observations available for training.
    pub train_fraction: f64,
}

impl Default for SynthDatasetConfig {
    fn default() -> Self {
        Self {
            world: WorldConfig::default(),
            n_fabrics: 118,
            n_clusters: 8,
            n_test: 18,
            counts: InstanceCounts::default(),
            train_fraction: 1.0,
        }
    }
}

/// Assigns cluster ids by k-means on z-scored attributes.
pub fn assign_clusters(fabrics: &mut [FabricRecord], k: usize, seed: u64) -> Result<()> {
    if k > fabrics.len() {
        return Err(Error::TooManyClusters {
            k,
            n: fabrics.len(),
        });
    }
    if fabrics.len() == 1 {
        fabrics[0].cluster_id = Some(0);
        return Ok(());
    }
    let z = normalize_attributes(fabrics)?;
    let res = kmeans_cluster(&z.rows, k, seed)?;
    for (f, &a) in fabrics.iter_mut().zip(&res.assignments) {
        f.cluster_id = Some(a as u32);
    }
    Ok(())
}

/// Synthesizes the full dataset. A pure function of the config: fabric,
/// clustering, split and per-instance randomness are all derived from the
/// world seed under distinct tags.
pub fn generate_dataset(cfg: &SynthDatasetConfig) -> Result<Dataset> {
    let seed = cfg.world.seed;
    let world = SynthWorld::new(cfg.world.clone())?;
    let mut fabrics = generate_fabrics(cfg.n_fabrics, rng::derive_seed(seed, "fabric-seed"))?;
    assign_clusters(
        &mut fabrics,
        cfg.n_clusters,
        rng::derive_seed(seed, "cluster-seed"),
    )?;
    let (_, test_fabrics) =
        split_dataset(&fabrics, cfg.n_test, rng::derive_seed(seed, "split-seed"))?;
    let mut observations = Vec::new();
    for f in &fabrics {
        for m in Modality::ALL {
            for i in 0..cfg.counts.get(m) {
                let instance_seed = rng::derive_seed_indexed(
                    seed,
                    "instance-seed",
                    &[f.id as u64, m.code() as u64, i as u64],
                );
                observations.push(world.observe(f, m, i, instance_seed));
            }
        }
    }
    let mut ds = Dataset {
        feature_dim: world.feature_dim(),
        fabrics,
        observations,
        test_fabrics,
        meta: DatasetMeta {
            world_seed: seed,
            noise_std: cfg.world.noise_std,
        },
    };
    ds.hold_out_observations(cfg.train_fraction, rng::derive_seed(seed, "holdout-seed"))?;
    Ok(ds)
}
