use std::path::Path;

use crate::assocnet::JointModel;
use crate::dataplane::{generate_dataset, Dataset};
use crate::error::{Error, Result};
use crate::evalsuite::{
    cluster_confusion, confusion_matrix_on, export_confusion, export_precision,
    labelled_matrix_csv, precision_report, standard_pairs, EmbeddingTable, PrecisionReport,
};
use crate::ingest::{ingest_directory, IngestOutcome};
use crate::rng;
use crate::trainer::{train, write_loss_csv, Checkpoint, GroupSampler};

use super::config::RunConfig;

fn ensure_parent(path: &Path) -> Result<()> {
    match path.parent() {
        Some(dir) if !dir.as_os_str().is_empty() => {
            std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))
        }
        _ => Ok(()),
    }
}

pub fn cmd_gen(cfg: &RunConfig) -> Result<Dataset> {
    let dataset = generate_dataset(&cfg.data)?;
    ensure_parent(&cfg.paths.dataset)?;
    dataset.save(&cfg.paths.dataset)?;
    Ok(dataset)
}

/// Featurizes an image directory into a dataset file. `split.train_fraction`
/// is applied here, as for generated data.
pub fn cmd_ingest(cfg: &RunConfig, root: &Path) -> Result<IngestOutcome> {
    let mut outcome = ingest_directory(root, &cfg.ingest)?;
    outcome.dataset.hold_out_observations(
        cfg.data.train_fraction,
        rng::derive_seed(cfg.ingest.split_seed, "holdout-seed"),
    )?;
    ensure_parent(&cfg.paths.dataset)?;
    outcome.dataset.save(&cfg.paths.dataset)?;
    Ok(outcome)
}

/// Trains on the dataset's training fabrics and writes the checkpoint and
/// the loss history.
pub fn cmd_train(cfg: &RunConfig) -> Result<(Checkpoint, Vec<f64>)> {
    let dataset = Dataset::load(&cfg.paths.dataset)?;
    let mut mc = cfg.model.clone();
    mc.feature_dim = dataset.feature_dim;
    let model = JointModel::new(&mc, cfg.train.init_seed())?;
    let sampler = GroupSampler::new(&dataset, &dataset.train_fabrics(), &model)?;
    let (model, history) = train(model, &sampler, &cfg.train)?;
    let checkpoint = Checkpoint {
        model,
        backbone_seed: cfg.ingest.backbone_seed,
        train_config: cfg.train.clone(),
    };
    ensure_parent(&cfg.paths.checkpoint)?;
    checkpoint.save(&cfg.paths.checkpoint)?;
    ensure_parent(&cfg.paths.loss)?;
    write_loss_csv(&cfg.paths.loss, &cfg.echo(), &history)?;
    Ok((checkpoint, history))
}

fn load_compatible(cfg: &RunConfig) -> Result<(Checkpoint, Dataset)> {
    let checkpoint = Checkpoint::load(&cfg.paths.checkpoint)?;
    let dataset = Dataset::load(&cfg.paths.dataset)?;
    if checkpoint.model.feature_dim() != dataset.feature_dim {
        return Err(Error::dim(
            "checkpoint input dim vs dataset feature dim",
            checkpoint.model.feature_dim(),
            dataset.feature_dim,
        ));
    }
    Ok((checkpoint, dataset))
}

/// Precision grid over every modality pair the model can embed.
pub fn cmd_eval(cfg: &RunConfig) -> Result<PrecisionReport> {
    let (checkpoint, dataset) = load_compatible(cfg)?;
    let model = &checkpoint.model;
    let touch = model
        .branch_modalities()
        .iter()
        .copied()
        .find(|m| m.is_touch())
        .unwrap_or(cfg.model.touch_modality);
    let pairs: Vec<_> = standard_pairs(touch)
        .into_iter()
        .filter(|&(q, c)| model.branch_for(q).is_some() && model.branch_for(c).is_some())
        .collect();
    let mut modalities: Vec<_> = pairs.iter().flat_map(|&(q, c)| [q, c]).collect();
    modalities.sort();
    modalities.dedup();
    let table = EmbeddingTable::from_model(model, &dataset, cfg.eval_split, &modalities)?;
    let report = precision_report(&table, &pairs, &cfg.eval)?;
    let mut preamble = cfg.echo();
    preamble.push(format!("architecture = {}", model.architecture().name()));
    preamble.push("rows: query modality -> candidate modality".into());
    ensure_parent(&cfg.paths.report)?;
    export_precision(&report, &preamble, &cfg.paths.report)?;
    Ok(report)
}

pub fn cmd_confuse(cfg: &RunConfig) -> Result<crate::evalsuite::ConfusionMatrix> {
    let (checkpoint, dataset) = load_compatible(cfg)?;
    let (q, c) = (cfg.confuse_query, cfg.confuse_candidate);
    let table =
        EmbeddingTable::from_model(&checkpoint.model, &dataset, cfg.confuse_split, &[q, c])?;
    let matrix = confusion_matrix_on(&table, &dataset, q, c, cfg.eval.prob_coefficient)?;
    let mut preamble = cfg.echo();
    preamble.push(format!(
        "rows: {q} queries, columns: {c} candidates, ordered by (cluster, stiffness, id)"
    ));
    for p in [
        &cfg.paths.confusion,
        &cfg.paths.heatmap,
        &cfg.paths.cluster_confusion,
    ] {
        ensure_parent(p)?;
    }
    export_confusion(&matrix, &preamble, &cfg.paths.confusion, &cfg.paths.heatmap)?;
    let k = cfg.data.n_clusters;
    let clusters = cluster_confusion(&matrix, &dataset, k);
    let labels: Vec<u32> = (0..k as u32).collect();
    let text = labelled_matrix_csv(&labels, &clusters, "cluster", &preamble);
    std::fs::write(&cfg.paths.cluster_confusion, text)
        .map_err(|e| Error::io(&cfg.paths.cluster_confusion, e))?;
    Ok(matrix)
}

/// Process exit code for an error: 2 config, 3 I/O or file format,
/// 4 numeric failure, 1 anything else.
pub fn exit_code(e: &Error) -> i32 {
    match e {
        Error::Config(_)
        | Error::InvalidArgument(_)
        | Error::InvalidSpec(_)
        | Error::TooManyClusters { .. }
        | Error::NotEnoughFabrics { .. }
        | Error::ArchitectureMismatch { .. }
        | Error::DimensionMismatch { .. } => 2,
        Error::Io { .. }
        | Error::Truncated(_)
        | Error::BadMagic { .. }
        | Error::VersionMismatch { .. }
        | Error::Malformed(_)
        | Error::MalformedPnm(_)
        | Error::UnsupportedMagic(_) => 3,
        Error::NonFinite(_) | Error::NonFiniteLoss { .. } => 4,
        _ => 1,
    }
}
