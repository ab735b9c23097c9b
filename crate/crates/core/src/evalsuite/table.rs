use std::collections::{BTreeMap, BTreeSet};

use crate::assocnet::JointModel;
use crate::dataplane::{Dataset, FabricRecord, Modality, Observation};
use crate::error::{Error, Result};

/// Which observations an evaluation sees.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EvalScope {
    /// Every observation of the test fabrics.
    TestFabrics,
    /// Every observation of the training fabrics.
    TrainFabrics,
    /// Held-out observations of training fabrics ("seen" fabrics, unseen
    /// data).
    HeldOut,
    /// Held-out observations of training fabrics plus all of the test
    /// fabrics; the complement of what a fractional-data trainer saw.
    Unseen,
    All,
}

impl EvalScope {
    pub fn includes(self, dataset: &Dataset, test: &BTreeSet<u32>, o: &Observation) -> bool {
        let _ = dataset;
        let is_test = test.contains(&o.fabric_id);
        match self {
            EvalScope::TestFabrics => is_test,
            EvalScope::TrainFabrics => !is_test,
            EvalScope::HeldOut => !is_test && o.held_out,
            EvalScope::Unseen => is_test || o.held_out,
            EvalScope::All => true,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            EvalScope::TestFabrics => "test",
            EvalScope::TrainFabrics => "train",
            EvalScope::HeldOut => "heldout",
            EvalScope::Unseen => "unseen",
            EvalScope::All => "all",
        }
    }
}

impl std::str::FromStr for EvalScope {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "test" => Ok(EvalScope::TestFabrics),
            "train" => Ok(EvalScope::TrainFabrics),
            "heldout" => Ok(EvalScope::HeldOut),
            "unseen" => Ok(EvalScope::Unseen),
            "all" => Ok(EvalScope::All),
            other => Err(Error::InvalidArgument(format!(
                "unknown evaluation split {other:?}"
            ))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TableEntry {
    pub fabric_id: u32,
    pub modality: Modality,
    pub instance_index: u32,
    pub embedding: Vec<f64>,
}

/// Precomputed embeddings indexed by (modality, fabric).
#[derive(Debug, Clone, Default, PartialEq)]
pub struct EmbeddingTable {
    entries: Vec<TableEntry>,
    index: BTreeMap<(Modality, u32), Vec<usize>>,
}

impl EmbeddingTable {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn push(&mut self, entry: TableEntry) {
        self.index
            .entry((entry.modality, entry.fabric_id))
            .or_default()
            .push(self.entries.len());
        self.entries.push(entry);
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn entry(&self, i: usize) -> &TableEntry {
        &self.entries[i]
    }

    pub fn embedding(&self, i: usize) -> &[f64] {
        &self.entries[i].embedding
    }

    pub fn entries_of(&self, modality: Modality, fabric: u32) -> &[usize] {
        self.index
            .get(&(modality, fabric))
            .map_or(&[], Vec::as_slice)
    }

    pub fn fabrics(&self) -> Vec<u32> {
        self.entries
            .iter()
            .map(|e| e.fabric_id)
            .collect::<BTreeSet<_>>()
            .into_iter()
            .collect()
    }

    fn grouped<'d>(
        dataset: &'d Dataset,
        scope: EvalScope,
        modalities: &[Modality],
    ) -> BTreeMap<(Modality, u32), Vec<&'d Observation>> {
        let test: BTreeSet<u32> = dataset.test_fabrics.iter().copied().collect();
        let mut groups: BTreeMap<(Modality, u32), Vec<&Observation>> = BTreeMap::new();
        for o in &dataset.observations {
            if modalities.contains(&o.modality) && scope.includes(dataset, &test, o) {
                groups.entry((o.modality, o.fabric_id)).or_default().push(o);
            }
        }
        for v in groups.values_mut() {
            v.sort_by_key(|o| o.instance_index);
        }
        groups
    }

    /// Embeds every in-scope observation of `modalities` with the model.
    /// When a modality's branch fuses several presses, entry `i` fuses the
    /// fabric's observations `i, i+1, ...` (cyclically, by instance index).
    pub fn from_model(
        model: &JointModel,
        dataset: &Dataset,
        scope: EvalScope,
        modalities: &[Modality],
    ) -> Result<Self> {
        if dataset.feature_dim != model.feature_dim() {
            return Err(Error::dim(
                "dataset feature dim vs model input",
                model.feature_dim(),
                dataset.feature_dim,
            ));
        }
        let mut table = Self::new();
        for ((m, f), obs) in Self::grouped(dataset, scope, modalities) {
            let n = model
                .inputs_per_embedding(m)
                .ok_or_else(|| Error::ArchitectureMismatch {
                    arch: model.architecture().name().into(),
                    what: format!("{m} observations"),
                })?;
            for (i, o) in obs.iter().enumerate() {
                let inputs: Vec<&[f64]> = (0..n)
                    .map(|j| obs[(i + j) % obs.len()].features.as_slice())
                    .collect();
                table.push(TableEntry {
                    fabric_id: f,
                    modality: m,
                    instance_index: o.instance_index,
                    embedding: model.embed(m, &inputs)?.0,
                });
            }
        }
        Ok(table)
    }

    /// Builds a table from an arbitrary embedding function (e.g. an oracle
    /// that returns the fabric's true latent code).
    pub fn from_fn<F>(
        dataset: &Dataset,
        scope: EvalScope,
        modalities: &[Modality],
        mut f: F,
    ) -> Result<Self>
    where
        F: FnMut(&Observation, &FabricRecord) -> Vec<f64>,
    {
        let mut table = Self::new();
        for ((m, fid), obs) in Self::grouped(dataset, scope, modalities) {
            let fabric = dataset
                .fabric(fid)
                .ok_or_else(|| Error::Malformed(format!("observation of unknown fabric {fid}")))?;
            for o in obs {
                table.push(TableEntry {
                    fabric_id: fid,
                    modality: m,
                    instance_index: o.instance_index,
                    embedding: f(o, fabric),
                });
            }
        }
        Ok(table)
    }
}
