//! Python bindings: `import pyfabricnet`.

use std::path::PathBuf;

use fabricnet::assocnet::{self, Architecture, JointModel, ModelConfig, PairLabel};
use fabricnet::dataplane::{self, Modality, SynthDatasetConfig, WorldConfig};
use fabricnet::evalsuite::{self, EvalConfig, EvalScope};
use fabricnet::trainer::{self, Checkpoint, GroupSampler, TrainConfig};
use pyo3::exceptions::{PyIOError, PyRuntimeError, PyValueError};
use pyo3::prelude::*;

fn err(e: fabricnet::Error) -> PyErr {
    match e {
        fabricnet::Error::Io { .. } => PyIOError::new_err(e.to_string()),
        fabricnet::Error::NonFinite(_) | fabricnet::Error::NonFiniteLoss { .. } => {
            PyRuntimeError::new_err(e.to_string())
        }
        _ => PyValueError::new_err(e.to_string()),
    }
}

fn modality(s: &str) -> PyResult<Modality> {
    s.parse().map_err(err)
}

fn scope(s: &str) -> PyResult<EvalScope> {
    s.parse().map_err(err)
}

/// A set of fabrics and their per-modality feature vectors.
#[pyclass(name = "Dataset", module = "pyfabricnet", skip_from_py_object)]
#[derive(Clone)]
struct PyDataset {
    inner: dataplane::Dataset,
}

#[pymethods]
impl PyDataset {
    /// Synthetic dataset from the latent fabric world.
    #[staticmethod]
    #[pyo3(signature = (n_fabrics=118, n_test=18, n_clusters=8, seed=1, noise_std=0.05, nuisance_scale=0.3, feature_dim=32, train_fraction=1.0))]
    #[allow(clippy::too_many_arguments)]
    fn generate(
        n_fabrics: usize,
        n_test: usize,
        n_clusters: usize,
        seed: u64,
        noise_std: f64,
        nuisance_scale: f64,
        feature_dim: usize,
        train_fraction: f64,
    ) -> PyResult<Self> {
        let cfg = SynthDatasetConfig {
            world: WorldConfig {
                seed,
                feature_dim,
                noise_std,
                nuisance_scale,
            },
            n_fabrics,
            n_clusters,
            n_test,
            train_fraction,
            ..SynthDatasetConfig::default()
        };
        Ok(Self {
            inner: dataplane::generate_dataset(&cfg).map_err(err)?,
        })
    }

    #[staticmethod]
    fn load(path: PathBuf) -> PyResult<Self> {
        Ok(Self {
            inner: dataplane::Dataset::load(&path).map_err(err)?,
        })
    }

    fn save(&self, path: PathBuf) -> PyResult<()> {
        self.inner.save(&path).map_err(err)
    }

    #[getter]
    fn feature_dim(&self) -> usize {
        self.inner.feature_dim
    }

    #[getter]
    fn fabric_ids(&self) -> Vec<u32> {
        self.inner.fabrics.iter().map(|f| f.id).collect()
    }

    #[getter]
    fn test_fabrics(&self) -> Vec<u32> {
        self.inner.test_fabrics.clone()
    }

    #[getter]
    fn train_fabrics(&self) -> Vec<u32> {
        self.inner.train_fabrics()
    }

    /// Cluster id per fabric id.
    fn clusters(&self) -> Vec<(u32, Option<u32>)> {
        self.inner
            .fabrics
            .iter()
            .map(|f| (f.id, f.cluster_id))
            .collect()
    }

    /// `(fabric_id, instance_index, features)` for every observation of a
    /// modality.
    fn observations(&self, modality: &str) -> PyResult<Vec<(u32, u32, Vec<f64>)>> {
        let m = self::modality(modality)?;
        Ok(self
            .inner
            .observations
            .iter()
            .filter(|o| o.modality == m)
            .map(|o| (o.fabric_id, o.instance_index, o.features.clone()))
            .collect())
    }

    fn count(&self, modality: &str) -> PyResult<usize> {
        Ok(self.inner.count(self::modality(modality)?))
    }

    fn __len__(&self) -> usize {
        self.inner.observations.len()
    }

    fn __repr__(&self) -> String {
        format!(
            "Dataset(fabrics={}, observations={}, feature_dim={})",
            self.inner.fabrics.len(),
            self.inner.observations.len(),
            self.inner.feature_dim
        )
    }
}

/// A joint embedding model.
#[pyclass(name = "Model", module = "pyfabricnet", skip_from_py_object)]
#[derive(Clone)]
struct PyModel {
    inner: JointModel,
}

#[pymethods]
impl PyModel {
    #[new]
    #[pyo3(signature = (arch="cross_modal", feature_dim=32, hidden_dims=vec![64], embedding_dim=64, n_clusters=8, touch="touch_fold", snn_modalities=("depth".to_string(), "depth".to_string()), seed=0))]
    #[allow(clippy::too_many_arguments)]
    fn new(
        arch: &str,
        feature_dim: usize,
        hidden_dims: Vec<usize>,
        embedding_dim: usize,
        n_clusters: usize,
        touch: &str,
        snn_modalities: (String, String),
        seed: u64,
    ) -> PyResult<Self> {
        let cfg = ModelConfig {
            architecture: arch.parse::<Architecture>().map_err(err)?,
            feature_dim,
            hidden_dims,
            embedding_dim,
            n_clusters,
            touch_modality: modality(touch)?,
            snn_modalities: [modality(&snn_modalities.0)?, modality(&snn_modalities.1)?],
            ..ModelConfig::default()
        };
        Ok(Self {
            inner: JointModel::new(&cfg, seed).map_err(err)?,
        })
    }

    #[staticmethod]
    fn load(path: PathBuf) -> PyResult<Self> {
        Ok(Self {
            inner: trainer::load_checkpoint(&path).map_err(err)?.model,
        })
    }

    /// Writes a checkpoint (default training settings recorded).
    fn save(&self, path: PathBuf) -> PyResult<()> {
        let ck = Checkpoint {
            model: self.inner.clone(),
            backbone_seed: 0,
            train_config: TrainConfig::default(),
        };
        trainer::save_checkpoint(&ck, &path).map_err(err)
    }

    #[getter]
    fn architecture(&self) -> &'static str {
        self.inner.architecture().name()
    }

    #[getter]
    fn modalities(&self) -> Vec<&'static str> {
        self.inner
            .branch_modalities()
            .iter()
            .map(|m| m.name())
            .collect()
    }

    #[getter]
    fn embedding_dim(&self) -> usize {
        self.inner.embedding_dim()
    }

    fn param_count(&self) -> usize {
        self.inner.param_count()
    }

    /// Embedding of one observation (or, for the multi-input touch branch,
    /// of several presses).
    fn embed(&self, modality: &str, inputs: Vec<Vec<f64>>) -> PyResult<Vec<f64>> {
        let refs: Vec<&[f64]> = inputs.iter().map(Vec::as_slice).collect();
        Ok(self
            .inner
            .embed(self::modality(modality)?, &refs)
            .map_err(err)?
            .0)
    }

    fn __repr__(&self) -> String {
        format!(
            "Model(arch={}, modalities={:?}, params={})",
            self.inner.architecture().name(),
            self.modalities(),
            self.inner.param_count()
        )
    }
}

/// Trains a copy of `model` on the dataset's training fabrics; returns the
/// trained model and the per-iteration loss.
#[pyfunction]
#[pyo3(signature = (model, dataset, iterations=2000, batch_size=32, learning_rate=0.001, margin=2.0, negative_ratio=0.5, aux_weight=1.0, seed=0))]
#[allow(clippy::too_many_arguments)]
fn train(
    py: Python<'_>,
    model: &PyModel,
    dataset: &PyDataset,
    iterations: usize,
    batch_size: usize,
    learning_rate: f64,
    margin: f64,
    negative_ratio: f64,
    aux_weight: f64,
    seed: u64,
) -> PyResult<(PyModel, Vec<f64>)> {
    let cfg = TrainConfig {
        learning_rate,
        batch_size,
        iterations,
        margin,
        negative_ratio,
        aux_weight,
        master_seed: seed,
    };
    let m = model.inner.clone();
    let d = &dataset.inner;
    let (trained, history) = py
        .detach(|| {
            let sampler = GroupSampler::new(d, &d.train_fabrics(), &m)?;
            trainer::train(m.clone(), &sampler, &cfg)
        })
        .map_err(err)?;
    Ok((PyModel { inner: trained }, history))
}

/// Pick-one-of-N retrieval precision: `{"top1", "top3", "trials"}`.
#[pyfunction]
#[pyo3(signature = (model, dataset, query, candidate, split="test", repetitions=10, seed=0))]
#[allow(clippy::too_many_arguments)]
fn topk_precision(
    py: Python<'_>,
    model: &PyModel,
    dataset: &PyDataset,
    query: &str,
    candidate: &str,
    split: &str,
    repetitions: usize,
    seed: u64,
) -> PyResult<std::collections::BTreeMap<String, f64>> {
    let cfg = EvalConfig {
        repetitions,
        seed,
        ..EvalConfig::default()
    };
    let (q, c, s) = (modality(query)?, modality(candidate)?, scope(split)?);
    let cell = py
        .detach(|| evalsuite::topk_precision(&model.inner, &dataset.inner, s, q, c, &cfg))
        .map_err(err)?;
    let mut out: std::collections::BTreeMap<String, f64> = cell
        .topk
        .iter()
        .map(|(k, p)| (format!("top{k}"), *p))
        .collect();
    out.insert("trials".into(), cell.trials as f64);
    Ok(out)
}

/// `(fabric_order, matrix)` of mean match probabilities.
#[pyfunction]
#[pyo3(signature = (model, dataset, query="touch_fold", candidate="depth", split="test", c=8.5e-2))]
fn confusion_matrix(
    model: &PyModel,
    dataset: &PyDataset,
    query: &str,
    candidate: &str,
    split: &str,
    c: f64,
) -> PyResult<(Vec<u32>, Vec<Vec<f64>>)> {
    let cfg = EvalConfig {
        prob_coefficient: c,
        ..EvalConfig::default()
    };
    let m = evalsuite::confusion_matrix(
        &model.inner,
        &dataset.inner,
        scope(split)?,
        modality(query)?,
        modality(candidate)?,
        &cfg,
    )
    .map_err(err)?;
    Ok((m.fabric_order, m.values))
}

#[pyfunction]
fn d3_distance(e1: Vec<f64>, e2: Vec<f64>, e3: Vec<f64>) -> PyResult<f64> {
    assocnet::d3_distance(&e1, &e2, &e3).map_err(err)
}

/// `(loss, dloss/dd)`; `y` is 0 for same fabric, 1 for different.
#[pyfunction]
#[pyo3(signature = (d, y, margin=2.0))]
fn contrastive_loss3(d: f64, y: u8, margin: f64) -> PyResult<(f64, f64)> {
    assocnet::contrastive_loss3(d, PairLabel::from_y(y).map_err(err)?, margin).map_err(err)
}

#[pyfunction]
#[pyo3(signature = (d, y, margin=2.0))]
fn contrastive_loss2(d: f64, y: u8, margin: f64) -> PyResult<(f64, f64)> {
    assocnet::contrastive_loss2(d, PairLabel::from_y(y).map_err(err)?, margin).map_err(err)
}

#[pyfunction]
#[pyo3(signature = (target, candidates, c=8.5e-2))]
fn match_probability(target: Vec<f64>, candidates: Vec<Vec<f64>>, c: f64) -> PyResult<Vec<f64>> {
    let refs: Vec<&[f64]> = candidates.iter().map(Vec::as_slice).collect();
    evalsuite::match_probability(&target, &refs, c).map_err(err)
}

/// `(assignments, centroids, wcss)`.
#[pyfunction]
#[pyo3(signature = (points, k, seed=0))]
fn kmeans(
    points: Vec<Vec<f64>>,
    k: usize,
    seed: u64,
) -> PyResult<(Vec<usize>, Vec<Vec<f64>>, f64)> {
    let r = dataplane::kmeans_cluster(&points, k, seed).map_err(err)?;
    Ok((r.assignments, r.centroids, r.wcss))
}

/// `(width, height, channels, max_value, samples)` of a binary PGM/PPM.
#[pyfunction]
fn parse_pnm(data: &[u8]) -> PyResult<(usize, usize, usize, u16, Vec<u16>)> {
    let img = fabricnet::ingest::parse_pnm(data).map_err(err)?;
    Ok((
        img.width,
        img.height,
        img.channels,
        img.max_value,
        img.pixels,
    ))
}

/// Adds the module contents to `m`.
pub fn register(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add("__version__", env!("CARGO_PKG_VERSION"))?;
    m.add_class::<PyDataset>()?;
    m.add_class::<PyModel>()?;
    m.add_function(wrap_pyfunction!(train, m)?)?;
    m.add_function(wrap_pyfunction!(topk_precision, m)?)?;
    m.add_function(wrap_pyfunction!(confusion_matrix, m)?)?;
    m.add_function(wrap_pyfunction!(d3_distance, m)?)?;
    m.add_function(wrap_pyfunction!(contrastive_loss3, m)?)?;
    m.add_function(wrap_pyfunction!(contrastive_loss2, m)?)?;
    m.add_function(wrap_pyfunction!(match_probability, m)?)?;
    m.add_function(wrap_pyfunction!(kmeans, m)?)?;
    m.add_function(wrap_pyfunction!(parse_pnm, m)?)?;
    Ok(())
}

#[pymodule]
fn pyfabricnet(m: &Bound<'_, PyModule>) -> PyResult<()> {
    register(m)
}
