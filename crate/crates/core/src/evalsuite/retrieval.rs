use rand::seq::{IndexedRandom, SliceRandom};
use rayon::prelude::*;

use crate::dataplane::Modality;
use crate::error::{Error, Result};
use crate::rng;

use super::table::EmbeddingTable;

#[derive(Debug, Clone, PartialEq)]
pub struct EvalConfig {
    pub n_candidates: usize,
    pub n_distractor_fabrics: usize,
    pub repetitions: usize,
    /// Coefficient `c` of the match probability `exp(-c d^2)`.
    pub prob_coefficient: f64,
    pub top_ks: Vec<usize>,
    pub seed: u64,
}

impl Default for EvalConfig {
    fn default() -> Self {
        Self {
            n_candidates: 10,
            n_distractor_fabrics: 9,
            repetitions: 10,
            prob_coefficient: 8.5e-2,
            top_ks: vec![1, 3],
            seed: 0,
        }
    }
}

impl EvalConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n_candidates != self.n_distractor_fabrics + 1 {
            return Err(Error::InvalidArgument(format!(
                "n_candidates ({}) must equal n_distractor_fabrics + 1 ({})",
                self.n_candidates,
                self.n_distractor_fabrics + 1
            )));
        }
        if !(self.prob_coefficient > 0.0) {
            return Err(Error::InvalidArgument(
                "prob_coefficient must be positive".into(),
            ));
        }
        if self.top_ks.is_empty() || self.top_ks.contains(&0) {
            return Err(Error::InvalidArgument(
                "top_ks must be non-empty and positive".into(),
            ));
        }
        Ok(())
    }
}

/// Candidate indices ordered by ascending distance to the query, ties kept
/// in index order.
pub fn pick_one_of_n(query: &[f64], candidates: &[&[f64]]) -> Result<Vec<usize>> {
    if candidates.is_empty() {
        return Err(Error::EmptyInput("no candidates".into()));
    }
    let d: Vec<f64> = candidates
        .iter()
        .map(|c| crate::assocnet::pair_distance(query, c))
        .collect::<Result<_>>()?;
    let mut order: Vec<usize> = (0..candidates.len()).collect();
    order.sort_by(|&a, &b| d[a].total_cmp(&d[b]));
    Ok(order)
}

/// Top-k precision of one (query modality, candidate modality) pair.
#[derive(Debug, Clone, PartialEq)]
pub struct PrecisionCell {
    pub query: Modality,
    pub candidate: Modality,
    /// `(k, precision)` per configured k, ascending k.
    pub topk: Vec<(usize, f64)>,
    pub trials: usize,
}

impl PrecisionCell {
    pub fn precision_at(&self, k: usize) -> Option<f64> {
        self.topk.iter().find(|(kk, _)| *kk == k).map(|(_, p)| *p)
    }

    pub fn top1(&self) -> f64 {
        self.precision_at(1).unwrap_or(f64::NAN)
    }

    pub fn top3(&self) -> f64 {
        self.precision_at(3).unwrap_or(f64::NAN)
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct PrecisionReport {
    pub top_ks: Vec<usize>,
    pub cells: Vec<PrecisionCell>,
}

impl PrecisionReport {
    pub fn cell(&self, query: Modality, candidate: Modality) -> Option<&PrecisionCell> {
        self.cells
            .iter()
            .find(|c| c.query == query && c.candidate == candidate)
    }
}

/// Pick-1-from-N retrieval. For every fabric, every query observation and
/// every repetition: the ground-truth fabric plus `n_distractor_fabrics`
/// others drawn without replacement, one random candidate observation per
/// fabric (never the query itself), shuffled, ranked by distance.
pub fn topk_precision_on(
    table: &EmbeddingTable,
    query_mod: Modality,
    cand_mod: Modality,
    config: &EvalConfig,
) -> Result<PrecisionCell> {
    config.validate()?;
    let fabrics: Vec<u32> = table
        .fabrics()
        .into_iter()
        .filter(|&f| !table.entries_of(cand_mod, f).is_empty())
        .collect();
    let queries: Vec<u32> = fabrics
        .iter()
        .copied()
        .filter(|&f| !table.entries_of(query_mod, f).is_empty())
        .collect();
    if fabrics.len() < config.n_distractor_fabrics + 1 {
        return Err(Error::NotEnoughFabrics {
            needed: config.n_distractor_fabrics,
            available: fabrics.len().saturating_sub(1),
        });
    }
    if queries.is_empty() {
        return Err(Error::MissingModality(query_mod.name().into()));
    }
    let mut ks = config.top_ks.clone();
    ks.sort_unstable();
    ks.dedup();

    let per_fabric: Vec<Result<(Vec<usize>, usize)>> = queries
        .par_iter()
        .map(|&f| {
            let mut hits = vec![0usize; ks.len()];
            let mut trials = 0;
            let others: Vec<u32> = fabrics.iter().copied().filter(|&g| g != f).collect();
            for &q in table.entries_of(query_mod, f) {
                for rep in 0..config.repetitions {
                    let mut r = rng::stream_indexed(
                        config.seed,
                        "retrieval-trial",
                        &[
                            query_mod.code() as u64,
                            cand_mod.code() as u64,
                            f as u64,
                            q as u64,
                            rep as u64,
                        ],
                    );
                    let truth_pool: Vec<usize> = table
                        .entries_of(cand_mod, f)
                        .iter()
                        .copied()
                        .filter(|&c| c != q)
                        .collect();
                    let Some(&truth) = truth_pool.choose(&mut r) else {
                        continue;
                    };
                    let mut cands: Vec<(bool, usize)> = vec![(true, truth)];
                    for &g in others.choose_multiple(&mut r, config.n_distractor_fabrics) {
                        cands.push((
                            false,
                            *table.entries_of(cand_mod, g).choose(&mut r).unwrap(),
                        ));
                    }
                    cands.shuffle(&mut r);
                    let embs: Vec<&[f64]> =
                        cands.iter().map(|&(_, i)| table.embedding(i)).collect();
                    let ranking = pick_one_of_n(table.embedding(q), &embs)?;
                    let pos = ranking.iter().position(|&i| cands[i].0).unwrap();
                    for (h, &k) in hits.iter_mut().zip(&ks) {
                        if pos < k {
                            *h += 1;
                        }
                    }
                    trials += 1;
                }
            }
            Ok((hits, trials))
        })
        .collect();

    let mut hits = vec![0usize; ks.len()];
    let mut trials = 0;
    for res in per_fabric {
        let (h, t) = res?;
        for (a, b) in hits.iter_mut().zip(h) {
            *a += b;
        }
        trials += t;
    }
    if trials == 0 {
        return Err(Error::EmptyInput(format!(
            "no usable {query_mod}->{cand_mod} trials"
        )));
    }
    Ok(PrecisionCell {
        query: query_mod,
        candidate: cand_mod,
        topk: ks
            .iter()
            .zip(hits)
            .map(|(&k, h)| (k, h as f64 / trials as f64))
            .collect(),
        trials,
    })
}

/// Runs every cell in `pairs`.
pub fn precision_report(
    table: &EmbeddingTable,
    pairs: &[(Modality, Modality)],
    config: &EvalConfig,
) -> Result<PrecisionReport> {
    let mut ks = config.top_ks.clone();
    ks.sort_unstable();
    ks.dedup();
    let cells = pairs
        .iter()
        .map(|&(q, c)| topk_precision_on(table, q, c, config))
        .collect::<Result<_>>()?;
    Ok(PrecisionReport { top_ks: ks, cells })
}

/// Standard modality-pair grid (query -> candidate): touch against vision
/// in both directions, vision against vision, and same-modality matching.
pub fn standard_pairs(touch: Modality) -> Vec<(Modality, Modality)> {
    use Modality::*;
    vec![
        (touch, Depth),
        (touch, Color),
        (Depth, touch),
        (Color, touch),
        (Depth, Color),
        (Color, Depth),
        (Depth, Depth),
        (Color, Color),
        (touch, touch),
    ]
}

/// Hit counts are integers, so the serial and parallel paths agree exactly;
/// this is exposed for tests that pin that down.
pub fn topk_precision_serial(
    table: &EmbeddingTable,
    query_mod: Modality,
    cand_mod: Modality,
    config: &EvalConfig,
) -> Result<PrecisionCell> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(1)
        .build()
        .map_err(|e| Error::InvalidArgument(e.to_string()))?;
    pool.install(|| topk_precision_on(table, query_mod, cand_mod, config))
}
