use std::collections::BTreeMap;

use rand::seq::{IndexedRandom, SliceRandom};
use rand::Rng as _;

use crate::assocnet::{BranchInput, JointModel, PairLabel, TripletGroup};
use crate::dataplane::{Dataset, Modality};
use crate::error::{Error, Result};
use crate::rng::Rng;

/// Index of the observations a trainer may draw from.
#[derive(Debug, Clone)]
pub struct GroupSampler<'a> {
    dataset: &'a Dataset,
    by_fabric: BTreeMap<(Modality, u32), Vec<usize>>,
    /// Fabrics that have every modality the model needs.
    complete: Vec<u32>,
    /// For each modality, fabrics observed in it.
    per_modality: BTreeMap<Modality, Vec<u32>>,
    branch_modalities: Vec<Modality>,
    branch_inputs: Vec<usize>,
    clusters: BTreeMap<u32, u32>,
}

impl<'a> GroupSampler<'a> {
    /// Samples from `fabrics`, skipping held-out observations.
    pub fn new(dataset: &'a Dataset, fabrics: &[u32], model: &JointModel) -> Result<Self> {
        let branch_modalities = model.branch_modalities().to_vec();
        let branch_inputs = (0..branch_modalities.len())
            .map(|b| model.branch_inputs(b))
            .collect();
        let wanted: std::collections::BTreeSet<u32> = fabrics.iter().copied().collect();
        let mut by_fabric: BTreeMap<(Modality, u32), Vec<usize>> = BTreeMap::new();
        for (i, o) in dataset.observations.iter().enumerate() {
            if !o.held_out && wanted.contains(&o.fabric_id) {
                by_fabric
                    .entry((o.modality, o.fabric_id))
                    .or_default()
                    .push(i);
            }
        }
        let mut per_modality = BTreeMap::new();
        for &m in &branch_modalities {
            let ids: Vec<u32> = fabrics
                .iter()
                .copied()
                .filter(|&f| by_fabric.contains_key(&(m, f)))
                .collect();
            if ids.is_empty() {
                return Err(Error::MissingModality(m.name().into()));
            }
            per_modality.insert(m, ids);
        }
        let complete: Vec<u32> = fabrics
            .iter()
            .copied()
            .filter(|&f| {
                branch_modalities
                    .iter()
                    .all(|&m| by_fabric.contains_key(&(m, f)))
            })
            .collect();
        if complete.is_empty() {
            return Err(Error::EmptyInput(
                "no fabric is observed in every branch modality".into(),
            ));
        }
        let clusters = dataset
            .fabrics
            .iter()
            .map(|f| (f.id, f.cluster_id.unwrap_or(0)))
            .collect();
        Ok(Self {
            dataset,
            by_fabric,
            complete,
            per_modality,
            branch_modalities,
            branch_inputs,
            clusters,
        })
    }

    fn branch(&self, b: usize, fabric: u32, rng: &mut Rng) -> BranchInput {
        let m = self.branch_modalities[b];
        let pool = &self.by_fabric[&(m, fabric)];
        let n = self.branch_inputs[b];
        let picks: Vec<usize> = if n > 1 && pool.len() >= n {
            pool.choose_multiple(rng, n).copied().collect()
        } else {
            (0..n).map(|_| *pool.choose(rng).unwrap()).collect()
        };
        BranchInput {
            fabric_id: fabric,
            cluster_label: self.clusters[&fabric],
            features: picks
                .into_iter()
                .map(|i| self.dataset.observations[i].features.clone())
                .collect(),
        }
    }

    /// Positive groups take every branch from one fabric. Negative groups
    /// draw each branch's fabric independently, redrawing until they are
    /// not all equal.
    pub fn sample_with_label(&self, label: PairLabel, rng: &mut Rng) -> Result<TripletGroup> {
        let n = self.branch_modalities.len();
        let fabrics: Vec<u32> = match label {
            PairLabel::Same => vec![*self.complete.choose(rng).unwrap(); n],
            PairLabel::Different => {
                let distinct: std::collections::BTreeSet<u32> =
                    self.per_modality.values().flatten().copied().collect();
                if distinct.len() < 2 {
                    return Err(Error::NotEnoughFabrics {
                        needed: 2,
                        available: distinct.len(),
                    });
                }
                loop {
                    let pick: Vec<u32> = self
                        .branch_modalities
                        .iter()
                        .map(|m| *self.per_modality[m].choose(rng).unwrap())
                        .collect();
                    if pick.iter().any(|&f| f != pick[0]) {
                        break pick;
                    }
                }
            }
        };
        let branches = fabrics
            .iter()
            .enumerate()
            .map(|(b, &f)| self.branch(b, f, rng))
            .collect();
        Ok(TripletGroup { label, branches })
    }

    /// Draws the label as a Bernoulli(`negative_ratio`) event first.
    pub fn sample_group(&self, negative_ratio: f64, rng: &mut Rng) -> Result<TripletGroup> {
        let label = if rng.random::<f64>() < negative_ratio {
            PairLabel::Different
        } else {
            PairLabel::Same
        };
        self.sample_with_label(label, rng)
    }

    /// A batch with exactly `round(batch_size * negative_ratio)` negatives,
    /// in shuffled order.
    pub fn sample_batch(
        &self,
        batch_size: usize,
        negative_ratio: f64,
        rng: &mut Rng,
    ) -> Result<Vec<TripletGroup>> {
        let n_neg = (batch_size as f64 * negative_ratio).round() as usize;
        let mut labels: Vec<PairLabel> = (0..batch_size)
            .map(|i| {
                if i < n_neg {
                    PairLabel::Different
                } else {
                    PairLabel::Same
                }
            })
            .collect();
        labels.shuffle(rng);
        labels
            .into_iter()
            .map(|l| self.sample_with_label(l, rng))
            .collect()
    }
}
