use std::collections::BTreeMap;

use crate::dataplane::{Dataset, Modality};
use crate::error::{Error, Result};

use super::table::EmbeddingTable;

/// `p_i ∝ exp(-c d_i^2)`, normalized over the candidates.
pub fn match_probability(target: &[f64], candidates: &[&[f64]], c: f64) -> Result<Vec<f64>> {
    if !(c > 0.0) {
        return Err(Error::InvalidArgument(format!(
            "coefficient must be positive, got {c}"
        )));
    }
    if candidates.is_empty() {
        return Err(Error::EmptyInput("no candidates".into()));
    }
    let sq: Vec<f64> = candidates
        .iter()
        .map(|e| crate::assocnet::pair_distance(target, e).map(|d| d * d))
        .collect::<Result<_>>()?;
    Ok(probabilities_from_sq_distances(&sq, c))
}

/// Normalized `exp(-c d^2)` from squared distances, max-shifted.
pub fn probabilities_from_sq_distances(sq: &[f64], c: f64) -> Vec<f64> {
    let min = sq.iter().copied().fold(f64::INFINITY, f64::min);
    let w: Vec<f64> = sq.iter().map(|d| (-c * (d - min)).exp()).collect();
    let total: f64 = w.iter().sum();
    w.into_iter().map(|v| v / total).collect()
}

/// Mean match probability between fabrics.
#[derive(Debug, Clone, PartialEq)]
pub struct ConfusionMatrix {
    /// Fabric id of each row/column.
    pub fabric_order: Vec<u32>,
    pub values: Vec<Vec<f64>>,
}

impl ConfusionMatrix {
    pub fn size(&self) -> usize {
        self.fabric_order.len()
    }

    pub fn row_sums(&self) -> Vec<f64> {
        self.values.iter().map(|r| r.iter().sum()).collect()
    }
}

/// Orders fabrics by (cluster id, stiffness, id) so similar fabrics sit
/// next to each other.
pub fn similarity_order(dataset: &Dataset, fabrics: &[u32]) -> Vec<u32> {
    let mut v: Vec<u32> = fabrics.to_vec();
    v.sort_by(|&a, &b| {
        let fa = dataset.fabric(a);
        let fb = dataset.fabric(b);
        let key = |f: Option<&crate::dataplane::FabricRecord>| {
            f.map_or((u32::MAX, f64::INFINITY), |f| {
                (f.cluster_id.unwrap_or(u32::MAX), f.stiffness_score)
            })
        };
        let (ca, sa) = key(fa);
        let (cb, sb) = key(fb);
        ca.cmp(&cb).then(sa.total_cmp(&sb)).then(a.cmp(&b))
    });
    v
}

/// Row `i`, column `j`: probability mass the candidates of fabric `j`
/// receive for a query from fabric `i`, averaged over fabric `i`'s queries.
/// Candidates are every candidate-modality embedding in the table (except
/// the query itself).
pub fn confusion_matrix_on(
    table: &EmbeddingTable,
    dataset: &Dataset,
    query_mod: Modality,
    cand_mod: Modality,
    c: f64,
) -> Result<ConfusionMatrix> {
    let fabrics: Vec<u32> = table
        .fabrics()
        .into_iter()
        .filter(|&f| !table.entries_of(query_mod, f).is_empty())
        .collect();
    if fabrics.is_empty() {
        return Err(Error::MissingModality(format!("{query_mod} queries")));
    }
    for &f in &fabrics {
        if table.entries_of(cand_mod, f).is_empty() {
            return Err(Error::MissingModality(format!(
                "{cand_mod} observations of fabric {f}"
            )));
        }
    }
    let order = similarity_order(dataset, &fabrics);
    let pos: BTreeMap<u32, usize> = order.iter().enumerate().map(|(i, &f)| (f, i)).collect();
    let candidates: Vec<usize> = order
        .iter()
        .flat_map(|&f| table.entries_of(cand_mod, f).iter().copied())
        .collect();
    let n = order.len();
    let mut values = vec![vec![0.0; n]; n];
    for &f in &order {
        let row = &mut values[pos[&f]];
        let queries = table.entries_of(query_mod, f);
        let mut used = 0usize;
        for &q in queries {
            let cands: Vec<usize> = candidates.iter().copied().filter(|&i| i != q).collect();
            if cands.is_empty() {
                continue;
            }
            let embs: Vec<&[f64]> = cands.iter().map(|&i| table.embedding(i)).collect();
            let p = match_probability(table.embedding(q), &embs, c)?;
            for (&i, pi) in cands.iter().zip(p) {
                row[pos[&table.entry(i).fabric_id]] += pi;
            }
            used += 1;
        }
        if used == 0 {
            return Err(Error::EmptyInput(format!(
                "fabric {f} has no usable queries"
            )));
        }
        for v in row.iter_mut() {
            *v /= used as f64;
        }
    }
    Ok(ConfusionMatrix {
        fabric_order: order,
        values,
    })
}

/// `k x k` matrix of mean entries between cluster members. Cluster pairs
/// without members stay zero.
pub fn cluster_confusion(matrix: &ConfusionMatrix, dataset: &Dataset, k: usize) -> Vec<Vec<f64>> {
    let mut sums = vec![vec![0.0; k]; k];
    let mut counts = vec![vec![0usize; k]; k];
    let cluster = |f: u32| {
        dataset
            .fabric(f)
            .and_then(|r| r.cluster_id)
            .map(|c| c as usize)
    };
    for (i, &fi) in matrix.fabric_order.iter().enumerate() {
        let Some(ci) = cluster(fi).filter(|&c| c < k) else {
            continue;
        };
        for (j, &fj) in matrix.fabric_order.iter().enumerate() {
            let Some(cj) = cluster(fj).filter(|&c| c < k) else {
                continue;
            };
            sums[ci][cj] += matrix.values[i][j];
            counts[ci][cj] += 1;
        }
    }
    for a in 0..k {
        for b in 0..k {
            if counts[a][b] > 0 {
                sums[a][b] /= counts[a][b] as f64;
            }
        }
    }
    sums
}
