use std::path::{Path, PathBuf};
use std::str::FromStr;

use crate::assocnet::{Architecture, ModelConfig};
use crate::dataplane::{Modality, SynthDatasetConfig};
use crate::error::{Error, Result};
use crate::evalsuite::{EvalConfig, EvalScope};
use crate::ingest::IngestOptions;
use crate::trainer::TrainConfig;

#[derive(Debug, Clone, PartialEq)]
pub struct Paths {
    pub dataset: PathBuf,
    pub checkpoint: PathBuf,
    pub loss: PathBuf,
    pub report: PathBuf,
    pub confusion: PathBuf,
    pub heatmap: PathBuf,
    pub cluster_confusion: PathBuf,
}

impl Default for Paths {
    fn default() -> Self {
        Self {
            dataset: "dataset.gfds".into(),
            checkpoint: "model.gfab".into(),
            loss: "loss.csv".into(),
            report: "precision.csv".into(),
            confusion: "confusion.csv".into(),
            heatmap: "confusion.pgm".into(),
            cluster_confusion: "cluster_confusion.csv".into(),
        }
    }
}

/// Everything a run needs, read from a flat `key = value` file.
///
/// `cluster.k` feeds both the k-means step and the classifier heads;
/// `train.margin` and `train.aux_weight` override the model's values.
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub data: SynthDatasetConfig,
    pub model: ModelConfig,
    pub train: TrainConfig,
    pub eval: EvalConfig,
    pub eval_split: EvalScope,
    pub ingest: IngestOptions,
    pub confuse_split: EvalScope,
    pub confuse_query: Modality,
    pub confuse_candidate: Modality,
    pub paths: Paths,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            data: SynthDatasetConfig::default(),
            model: ModelConfig::default(),
            train: TrainConfig::default(),
            eval: EvalConfig::default(),
            eval_split: EvalScope::TestFabrics,
            ingest: IngestOptions::default(),
            confuse_split: EvalScope::TestFabrics,
            confuse_query: Modality::TouchFold,
            confuse_candidate: Modality::Depth,
            paths: Paths::default(),
        }
    }
}

fn parse<T: FromStr>(key: &str, value: &str) -> Result<T> {
    value
        .parse()
        .map_err(|_| Error::Config(format!("{key}: cannot parse {value:?}")))
}

fn parse_bool(key: &str, value: &str) -> Result<bool> {
    match value {
        "true" | "yes" | "on" | "1" => Ok(true),
        "false" | "no" | "off" | "0" => Ok(false),
        _ => Err(Error::Config(format!(
            "{key}: expected true or false, got {value:?}"
        ))),
    }
}

fn parse_list<T: FromStr>(key: &str, value: &str) -> Result<Vec<T>> {
    value
        .split(',')
        .filter(|s| !s.trim().is_empty())
        .map(|s| parse(key, s.trim()))
        .collect()
}

fn join<T: ToString>(v: &[T]) -> String {
    v.iter().map(T::to_string).collect::<Vec<_>>().join(",")
}

fn modality(key: &str, value: &str) -> Result<Modality> {
    value
        .parse()
        .map_err(|e: Error| Error::Config(format!("{key}: {e}")))
}

impl RunConfig {
    pub fn parse(text: &str) -> Result<Self> {
        let mut cfg = Self::default();
        for (n, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| {
                Error::Config(format!(
                    "line {}: expected `key = value`, got {raw:?}",
                    n + 1
                ))
            })?;
            cfg.set(key.trim(), value.trim())
                .map_err(|e| Error::Config(format!("line {}: {}", n + 1, strip_prefix(&e))))?;
        }
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse(&text)
    }

    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        let v = value;
        match key {
            "world.seed" => self.data.world.seed = parse(key, v)?,
            "world.n_fabrics" => self.data.n_fabrics = parse(key, v)?,
            "world.noise_std" => self.data.world.noise_std = parse(key, v)?,
            "world.nuisance_scale" => self.data.world.nuisance_scale = parse(key, v)?,
            "world.feature_dim" => self.data.world.feature_dim = parse(key, v)?,
            "split.n_test" => {
                self.data.n_test = parse(key, v)?;
                self.ingest.n_test = self.data.n_test;
            }
            "split.train_fraction" => self.data.train_fraction = parse(key, v)?,
            "cluster.k" => {
                self.data.n_clusters = parse(key, v)?;
                self.model.n_clusters = self.data.n_clusters;
                self.ingest.n_clusters = self.data.n_clusters;
            }
            "train.learning_rate" => self.train.learning_rate = parse(key, v)?,
            "train.batch_size" => self.train.batch_size = parse(key, v)?,
            "train.iterations" => self.train.iterations = parse(key, v)?,
            "train.margin" => {
                self.train.margin = parse(key, v)?;
                self.model.margin = self.train.margin;
            }
            "train.negative_ratio" => self.train.negative_ratio = parse(key, v)?,
            "train.aux_weight" => {
                self.train.aux_weight = parse(key, v)?;
                self.model.aux_weight = self.train.aux_weight;
            }
            "train.master_seed" => self.train.master_seed = parse(key, v)?,
            "eval.n_candidates" => self.eval.n_candidates = parse(key, v)?,
            "eval.n_distractor_fabrics" => self.eval.n_distractor_fabrics = parse(key, v)?,
            "eval.repetitions" => self.eval.repetitions = parse(key, v)?,
            "eval.prob_coefficient" => self.eval.prob_coefficient = parse(key, v)?,
            "eval.top_ks" => self.eval.top_ks = parse_list(key, v)?,
            "eval.seed" => self.eval.seed = parse(key, v)?,
            "eval.split" => self.eval_split = parse(key, v)?,
            "model.arch" => {
                self.model.architecture =
                    Architecture::from_str(v).map_err(|e| Error::Config(format!("{key}: {e}")))?
            }
            "model.embedding_dim" => self.model.embedding_dim = parse(key, v)?,
            "model.hidden_dims" => self.model.hidden_dims = parse_list(key, v)?,
            "model.touch" => self.model.touch_modality = modality(key, v)?,
            "model.snn_modalities" => {
                let m: Vec<&str> = v.split(',').map(str::trim).collect();
                if m.len() != 2 {
                    return Err(Error::Config(format!(
                        "{key}: expected two modalities, got {v:?}"
                    )));
                }
                self.model.snn_modalities = [modality(key, m[0])?, modality(key, m[1])?];
            }
            "ingest.backbone_seed" => self.ingest.backbone_seed = parse(key, v)?,
            "ingest.feature_dim" => self.ingest.feature_dim = parse(key, v)?,
            "ingest.augment" => self.ingest.augment = parse_bool(key, v)?,
            "ingest.color_variants" => self.ingest.color_variants = parse(key, v)?,
            "ingest.augment_seed" => self.ingest.augment_seed = parse(key, v)?,
            "ingest.split_seed" => self.ingest.split_seed = parse(key, v)?,
            "confuse.split" => self.confuse_split = parse(key, v)?,
            "confuse.query" => self.confuse_query = modality(key, v)?,
            "confuse.candidate" => self.confuse_candidate = modality(key, v)?,
            "paths.dataset" => self.paths.dataset = v.into(),
            "paths.checkpoint" => self.paths.checkpoint = v.into(),
            "paths.loss" => self.paths.loss = v.into(),
            "paths.report" => self.paths.report = v.into(),
            "paths.confusion" => self.paths.confusion = v.into(),
            "paths.heatmap" => self.paths.heatmap = v.into(),
            "paths.cluster_confusion" => self.paths.cluster_confusion = v.into(),
            _ => return Err(Error::Config(format!("unknown key {key:?}"))),
        }
        Ok(())
    }

    /// Every key with its resolved value, in a fixed order.
    pub fn entries(&self) -> Vec<(&'static str, String)> {
        let d = &self.data;
        let t = &self.train;
        let e = &self.eval;
        let m = &self.model;
        let i = &self.ingest;
        let p = &self.paths;
        let path = |p: &PathBuf| p.display().to_string();
        vec![
            ("world.seed", d.world.seed.to_string()),
            ("world.n_fabrics", d.n_fabrics.to_string()),
            ("world.noise_std", d.world.noise_std.to_string()),
            ("world.nuisance_scale", d.world.nuisance_scale.to_string()),
            ("world.feature_dim", d.world.feature_dim.to_string()),
            ("split.n_test", d.n_test.to_string()),
            ("split.train_fraction", d.train_fraction.to_string()),
            ("cluster.k", d.n_clusters.to_string()),
            ("train.learning_rate", t.learning_rate.to_string()),
            ("train.batch_size", t.batch_size.to_string()),
            ("train.iterations", t.iterations.to_string()),
            ("train.margin", t.margin.to_string()),
            ("train.negative_ratio", t.negative_ratio.to_string()),
            ("train.aux_weight", t.aux_weight.to_string()),
            ("train.master_seed", t.master_seed.to_string()),
            ("eval.n_candidates", e.n_candidates.to_string()),
            (
                "eval.n_distractor_fabrics",
                e.n_distractor_fabrics.to_string(),
            ),
            ("eval.repetitions", e.repetitions.to_string()),
            ("eval.prob_coefficient", e.prob_coefficient.to_string()),
            ("eval.top_ks", join(&e.top_ks)),
            ("eval.seed", e.seed.to_string()),
            ("eval.split", self.eval_split.name().into()),
            ("model.arch", m.architecture.name().into()),
            ("model.embedding_dim", m.embedding_dim.to_string()),
            ("model.hidden_dims", join(&m.hidden_dims)),
            ("model.touch", m.touch_modality.name().into()),
            ("model.snn_modalities", join(&m.snn_modalities)),
            ("ingest.backbone_seed", i.backbone_seed.to_string()),
            ("ingest.feature_dim", i.feature_dim.to_string()),
            ("ingest.augment", i.augment.to_string()),
            ("ingest.color_variants", i.color_variants.to_string()),
            ("ingest.augment_seed", i.augment_seed.to_string()),
            ("ingest.split_seed", i.split_seed.to_string()),
            ("confuse.split", self.confuse_split.name().into()),
            ("confuse.query", self.confuse_query.name().into()),
            ("confuse.candidate", self.confuse_candidate.name().into()),
            ("paths.dataset", path(&p.dataset)),
            ("paths.checkpoint", path(&p.checkpoint)),
            ("paths.loss", path(&p.loss)),
            ("paths.report", path(&p.report)),
            ("paths.confusion", path(&p.confusion)),
            ("paths.heatmap", path(&p.heatmap)),
            ("paths.cluster_confusion", path(&p.cluster_confusion)),
        ]
    }

    /// Resolved config as `key = value` lines, for CSV preambles.
    pub fn echo(&self) -> Vec<String> {
        self.entries()
            .into_iter()
            .map(|(k, v)| format!("{k} = {v}"))
            .collect()
    }

    pub fn to_text(&self) -> String {
        self.echo().into_iter().map(|l| l + "\n").collect()
    }

    pub fn validate(&self) -> Result<()> {
        let wrap = |r: Result<()>| r.map_err(|e| Error::Config(strip_prefix(&e)));
        wrap(self.train.validate())?;
        wrap(self.eval.validate())?;
        wrap(self.model.encoder_spec().map(drop))?;
        if !self.model.touch_modality.is_touch() {
            return Err(Error::Config(format!(
                "model.touch must be a touch modality, got {}",
                self.model.touch_modality
            )));
        }
        let d = &self.data;
        if d.n_clusters == 0 {
            return Err(Error::Config("cluster.k must be positive".into()));
        }
        if d.n_clusters > d.n_fabrics {
            return Err(Error::Config(format!(
                "cluster.k ({}) must not exceed world.n_fabrics ({})",
                d.n_clusters, d.n_fabrics
            )));
        }
        if d.n_test >= d.n_fabrics {
            return Err(Error::Config(format!(
                "split.n_test ({}) must be smaller than world.n_fabrics ({})",
                d.n_test, d.n_fabrics
            )));
        }
        if !(d.train_fraction > 0.0 && d.train_fraction <= 1.0) {
            return Err(Error::Config(format!(
                "split.train_fraction must be in (0, 1], got {}",
                d.train_fraction
            )));
        }
        if d.world.feature_dim == 0
            || !(d.world.noise_std >= 0.0)
            || !(d.world.nuisance_scale >= 0.0)
        {
            return Err(Error::Config(
                "world.* values must be non-negative with feature_dim > 0".into(),
            ));
        }
        if self.ingest.feature_dim == 0 {
            return Err(Error::Config("ingest.feature_dim must be positive".into()));
        }
        Ok(())
    }
}

fn strip_prefix(e: &Error) -> String {
    let s = e.to_string();
    s.strip_prefix("config error: ")
        .map(str::to_owned)
        .unwrap_or(s)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_text_gives_defaults() {
        assert_eq!(
            RunConfig::parse("# nothing\n\n").unwrap(),
            RunConfig::default()
        );
    }

    #[test]
    fn echo_round_trips() {
        let mut cfg = RunConfig::parse(
            "world.seed = 7\nworld.noise_std = 0.125 # trailing comment\nmodel.arch = multi_input\n\
             eval.top_ks = 1,3,5\nmodel.snn_modalities = depth, touch_fold\ningest.augment = true\n",
        )
        .unwrap();
        cfg.paths.report = "out/report.csv".into();
        assert_eq!(RunConfig::parse(&cfg.to_text()).unwrap(), cfg);
        assert_eq!(cfg.data.world.seed, 7);
        assert_eq!(cfg.model.architecture, Architecture::MultiInput);
        assert_eq!(cfg.eval.top_ks, vec![1, 3, 5]);
    }

    #[test]
    fn every_key_is_settable() {
        let cfg = RunConfig::default();
        let mut other = RunConfig::default();
        for (k, v) in cfg.entries() {
            other.set(k, &v).unwrap();
        }
        assert_eq!(other, cfg);
    }

    #[test]
    fn rejects_unknown_and_bad_values() {
        let e = RunConfig::parse("world.sead = 1").unwrap_err();
        assert!(matches!(e, Error::Config(_)), "{e}");
        assert!(e.to_string().contains("world.sead"));
        assert!(RunConfig::parse("train.iterations = lots").is_err());
        assert!(RunConfig::parse("no equals sign").is_err());
        assert!(RunConfig::parse("model.snn_modalities = depth").is_err());
    }

    #[test]
    fn too_many_clusters_names_the_constraint() {
        let e = RunConfig::parse("cluster.k = 200").unwrap_err();
        assert!(
            e.to_string()
                .contains("cluster.k (200) must not exceed world.n_fabrics (118)"),
            "{e}"
        );
    }
}
