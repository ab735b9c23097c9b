//! Evaluation: pick-one-of-N retrieval precision, match probabilities,
//! confusion matrices and report export.

mod export;
mod probability;
mod retrieval;
mod table;

pub use export::{
    confusion_csv, export_confusion, export_precision, heatmap, labelled_matrix_csv,
    parse_precision_csv, precision_csv,
};
pub use probability::{
    cluster_confusion, confusion_matrix_on, match_probability, probabilities_from_sq_distances,
    similarity_order, ConfusionMatrix,
};
pub use retrieval::{
    pick_one_of_n, precision_report, standard_pairs, topk_precision_on, topk_precision_serial,
    EvalConfig, PrecisionCell, PrecisionReport,
};
pub use table::{EmbeddingTable, EvalScope, TableEntry};

use crate::assocnet::JointModel;
use crate::dataplane::{Dataset, Modality};
use crate::error::Result;

/// Retrieval precision of a trained model on the observations in `scope`.
pub fn topk_precision(
    model: &JointModel,
    dataset: &Dataset,
    scope: EvalScope,
    query_mod: Modality,
    cand_mod: Modality,
    config: &EvalConfig,
) -> Result<PrecisionCell> {
    let table = EmbeddingTable::from_model(model, dataset, scope, &[query_mod, cand_mod])?;
    topk_precision_on(&table, query_mod, cand_mod, config)
}

/// Confusion matrix of a trained model over the observations in `scope`.
pub fn confusion_matrix(
    model: &JointModel,
    dataset: &Dataset,
    scope: EvalScope,
    query_mod: Modality,
    cand_mod: Modality,
    config: &EvalConfig,
) -> Result<ConfusionMatrix> {
    let table = EmbeddingTable::from_model(model, dataset, scope, &[query_mod, cand_mod])?;
    confusion_matrix_on(
        &table,
        dataset,
        query_mod,
        cand_mod,
        config.prob_coefficient,
    )
}
