//! Builds a dataset from a directory tree of PNM files laid out as
//! `<root>/<fabric_id>/<modality>/<instance>.pnm`. A tactile instance may
//! also be a directory holding a press sequence, in which case the deepest
//! frame is used. Fabric attributes are read from an optional
//! `<root>/attributes.csv` with columns
//! `id,thickness_mm,stiffness,stretch_level,density_gsm`.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use rand::seq::IndexedRandom;
use rand::Rng as _;

use crate::dataplane::{
    assign_clusters, split_dataset, Dataset, DatasetMeta, FabricRecord, Modality, Observation,
};
use crate::error::{Error, Result};
use crate::rng;

use super::augment::{gamma_correct, permute_channels, ALL_PERMUTATIONS, GAMMA_RANGE};
use super::backbone::{select_deepest_frame, FrozenBackbone, BACKBONE_FEATURES};
use super::pnm::{parse_pnm, PixelImage};

#[derive(Debug, Clone, PartialEq)]
pub struct IngestOptions {
    pub backbone_seed: u64,
    pub feature_dim: usize,
    /// Emit `color_variants` extra gamma/channel-order variants per color image.
    pub augment: bool,
    pub color_variants: usize,
    pub augment_seed: u64,
    pub n_clusters: usize,
    pub n_test: usize,
    pub split_seed: u64,
}

impl Default for IngestOptions {
    fn default() -> Self {
        Self {
            backbone_seed: 0,
            feature_dim: BACKBONE_FEATURES,
            augment: false,
            color_variants: 2,
            augment_seed: 0,
            n_clusters: 8,
            n_test: 18,
            split_seed: 0,
        }
    }
}

#[derive(Debug)]
pub struct IngestOutcome {
    pub dataset: Dataset,
    /// Per-path problems that were skipped.
    pub warnings: Vec<String>,
}

fn read_dir_sorted(dir: &Path) -> Result<Vec<PathBuf>> {
    let mut entries: Vec<PathBuf> = fs::read_dir(dir)
        .map_err(|e| Error::io(dir, e))?
        .map(|e| e.map(|e| e.path()).map_err(|err| Error::io(dir, err)))
        .collect::<Result<_>>()?;
    entries.sort();
    Ok(entries)
}

fn is_pnm(p: &Path) -> bool {
    p.is_file()
        && p.extension()
            .and_then(|e| e.to_str())
            .is_some_and(|e| matches!(e.to_ascii_lowercase().as_str(), "pnm" | "pgm" | "ppm"))
}

fn load_image(path: &Path) -> Result<PixelImage> {
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    parse_pnm(&bytes)
}

fn load_instance(path: &Path) -> Result<PixelImage> {
    if path.is_dir() {
        let frames: Vec<PixelImage> = read_dir_sorted(path)?
            .into_iter()
            .filter(|p| is_pnm(p))
            .map(|p| load_image(&p))
            .collect::<Result<_>>()?;
        let idx = select_deepest_frame(&frames)?;
        Ok(frames.into_iter().nth(idx).unwrap())
    } else {
        load_image(path)
    }
}

fn parse_attributes(path: &Path) -> Result<BTreeMap<u32, FabricRecord>> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let mut out = BTreeMap::new();
    for (lineno, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') || line.starts_with("id") {
            continue;
        }
        let bad =
            |what: &str| Error::Malformed(format!("{}:{}: {what}", path.display(), lineno + 1));
        let cols: Vec<&str> = line.split(',').map(str::trim).collect();
        if cols.len() != 5 {
            return Err(bad("expected 5 columns"));
        }
        let num = |i: usize| cols[i].parse::<f64>().map_err(|_| bad("bad number"));
        let rec = FabricRecord {
            id: cols[0].parse().map_err(|_| bad("bad id"))?,
            thickness_mm: num(1)?,
            stiffness_score: num(2)?,
            stretch_level: cols[3].parse().map_err(|_| bad("bad stretch level"))?,
            density_gsm: num(4)?,
            cluster_id: None,
        };
        rec.validate().map_err(|e| bad(&e.to_string()))?;
        out.insert(rec.id, rec);
    }
    Ok(out)
}

pub fn ingest_directory(root: &Path, opts: &IngestOptions) -> Result<IngestOutcome> {
    let mut warnings = Vec::new();
    let gray = FrozenBackbone::with_features(opts.backbone_seed, 1, opts.feature_dim)?;
    let rgb = FrozenBackbone::with_features(opts.backbone_seed, 3, opts.feature_dim)?;
    let attr_path = root.join("attributes.csv");
    let attributes = if attr_path.is_file() {
        Some(parse_attributes(&attr_path)?)
    } else {
        None
    };

    let mut fabrics = Vec::new();
    let mut observations = Vec::new();
    let mut aug_rng = rng::stream(opts.augment_seed, "color-augment");

    for fabric_dir in read_dir_sorted(root)? {
        if !fabric_dir.is_dir() {
            continue;
        }
        let Some(id) = fabric_dir
            .file_name()
            .and_then(|n| n.to_str())
            .and_then(|n| n.parse::<u32>().ok())
        else {
            warnings.push(format!(
                "{}: not a fabric id, skipped",
                fabric_dir.display()
            ));
            continue;
        };
        let mut per_modality: BTreeMap<Modality, u32> = BTreeMap::new();
        for mod_dir in read_dir_sorted(&fabric_dir)? {
            if !mod_dir.is_dir() {
                continue;
            }
            let name = mod_dir
                .file_name()
                .and_then(|n| n.to_str())
                .unwrap_or_default();
            let Ok(modality) = name.parse::<Modality>() else {
                warnings.push(format!("{}: unknown modality, skipped", mod_dir.display()));
                continue;
            };
            let mut images = Vec::new();
            for inst in read_dir_sorted(&mod_dir)? {
                if !(is_pnm(&inst) || (inst.is_dir() && modality.is_touch())) {
                    continue;
                }
                match load_instance(&inst) {
                    Ok(img) => images.push((inst, img)),
                    Err(e) => warnings.push(format!("{}: {e}", inst.display())),
                }
            }
            let mut variants = Vec::new();
            if opts.augment && modality == Modality::Color {
                for (path, img) in &images {
                    for _ in 0..opts.color_variants {
                        let gamma = aug_rng.random_range(GAMMA_RANGE.0..=GAMMA_RANGE.1);
                        let perm = *ALL_PERMUTATIONS.choose(&mut aug_rng).unwrap();
                        match gamma_correct(img, gamma).and_then(|g| permute_channels(&g, perm)) {
                            Ok(v) => variants.push((path.clone(), v)),
                            Err(e) => {
                                warnings.push(format!("{}: augmentation: {e}", path.display()))
                            }
                        }
                    }
                }
            }
            for (path, img) in images.into_iter().chain(variants) {
                let backbone = if img.channels == 1 { &gray } else { &rgb };
                let features = match backbone.featurize(&img) {
                    Ok(f) => f,
                    Err(e) => {
                        warnings.push(format!("{}: {e}", path.display()));
                        continue;
                    }
                };
                let counter = per_modality.entry(modality).or_insert(0);
                observations.push(Observation {
                    fabric_id: id,
                    modality,
                    instance_index: *counter,
                    features,
                    held_out: false,
                });
                *counter += 1;
            }
        }
        let has = |m: Modality| per_modality.get(&m).copied().unwrap_or(0) > 0;
        for (required, ok) in [
            ("depth", has(Modality::Depth)),
            ("color", has(Modality::Color)),
            (
                "touch",
                has(Modality::TouchFlat) || has(Modality::TouchFold),
            ),
        ] {
            if !ok {
                return Err(Error::MissingModality(format!(
                    "{required} (fabric {id} at {})",
                    fabric_dir.display()
                )));
            }
        }
        let record = match attributes.as_ref().and_then(|a| a.get(&id)) {
            Some(r) => r.clone(),
            None => {
                if attributes.is_some() {
                    warnings.push(format!("fabric {id}: no attributes row, using defaults"));
                }
                FabricRecord {
                    id,
                    thickness_mm: 1.0,
                    stiffness_score: 3.0,
                    stretch_level: 0,
                    density_gsm: 150.0,
                    cluster_id: None,
                }
            }
        };
        fabrics.push(record);
    }

    if fabrics.is_empty() {
        return Err(Error::EmptyInput(format!(
            "no fabric directories under {}",
            root.display()
        )));
    }

    if attributes.is_some() && fabrics.len() >= 2 {
        let k = opts.n_clusters.min(fabrics.len());
        if k < opts.n_clusters {
            warnings.push(format!(
                "only {} fabrics; clustering with k = {k}",
                fabrics.len()
            ));
        }
        assign_clusters(
            &mut fabrics,
            k,
            rng::derive_seed(opts.split_seed, "cluster-seed"),
        )?;
    } else {
        for f in &mut fabrics {
            f.cluster_id = Some(0);
        }
    }

    let test_fabrics = if opts.n_test < fabrics.len() {
        split_dataset(
            &fabrics,
            opts.n_test,
            rng::derive_seed(opts.split_seed, "split-seed"),
        )?
        .1
    } else {
        warnings.push(format!(
            "n_test = {} but only {} fabrics; no test split",
            opts.n_test,
            fabrics.len()
        ));
        Vec::new()
    };

    let dataset = Dataset {
        feature_dim: opts.feature_dim,
        fabrics,
        observations,
        test_fabrics,
        meta: DatasetMeta {
            world_seed: opts.backbone_seed,
            noise_std: 0.0,
        },
    };
    dataset.validate()?;
    Ok(IngestOutcome { dataset, warnings })
}
