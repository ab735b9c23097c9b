use std::fmt;
use std::str::FromStr;

use crate::dataplane::Modality;
use crate::error::{Error, Result};
use crate::numcore::{ActivationCache, Embedding, Encoder, EncoderSpec};
use crate::rng;

use super::distance::total_distance_grad;
use super::fusion::fuse_max_with_argmax;
use super::head::{classify_cluster, ClassifierHead};
use super::loss::{contrastive_loss2, contrastive_loss3, PairLabel};

/// Tactile presses fused per touch embedding by the multi-input network.
pub const MULTI_INPUT_PRESSES: usize = 3;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Architecture {
    /// Three independent encoders (depth, color, touch) and the D3 loss.
    CrossModal,
    /// CrossModal plus a cluster classifier on every branch embedding.
    Auxiliary,
    /// Auxiliary with the touch embedding max-fused over several presses.
    MultiInput,
    /// Two-branch Siamese baseline with the pairwise loss.
    Snn2,
}

impl Architecture {
    pub const ALL: [Architecture; 4] = [
        Architecture::CrossModal,
        Architecture::Auxiliary,
        Architecture::MultiInput,
        Architecture::Snn2,
    ];

    pub fn code(self) -> u8 {
        match self {
            Architecture::CrossModal => 0,
            Architecture::Auxiliary => 1,
            Architecture::MultiInput => 2,
            Architecture::Snn2 => 3,
        }
    }

    pub fn from_code(code: u8) -> Result<Self> {
        Self::ALL
            .get(code as usize)
            .copied()
            .ok_or_else(|| Error::Malformed(format!("unknown architecture tag {code}")))
    }

    pub fn name(self) -> &'static str {
        match self {
            Architecture::CrossModal => "cross_modal",
            Architecture::Auxiliary => "auxiliary",
            Architecture::MultiInput => "multi_input",
            Architecture::Snn2 => "snn2",
        }
    }

    pub fn has_heads(self) -> bool {
        matches!(self, Architecture::Auxiliary | Architecture::MultiInput)
    }
}

impl fmt::Display for Architecture {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Architecture {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().replace('-', "_").as_str() {
            "cross_modal" | "crossmodal" => Ok(Architecture::CrossModal),
            "auxiliary" | "aux" => Ok(Architecture::Auxiliary),
            "multi_input" | "multiinput" | "multi" => Ok(Architecture::MultiInput),
            "snn2" | "snn" => Ok(Architecture::Snn2),
            other => Err(Error::InvalidArgument(format!(
                "unknown architecture {other:?}"
            ))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ModelConfig {
    pub architecture: Architecture,
    pub feature_dim: usize,
    pub hidden_dims: Vec<usize>,
    pub embedding_dim: usize,
    pub n_clusters: usize,
    pub margin: f64,
    pub aux_weight: f64,
    /// Touch modality of the third branch (three-branch architectures).
    pub touch_modality: Modality,
    /// Branch modalities of the two-branch baseline. Equal modalities share
    /// one encoder.
    pub snn_modalities: [Modality; 2],
}

impl Default for ModelConfig {
    fn default() -> Self {
        Self {
            architecture: Architecture::CrossModal,
            feature_dim: 32,
            hidden_dims: vec![64],
            embedding_dim: 64,
            n_clusters: 8,
            margin: 2.0,
            aux_weight: 1.0,
            touch_modality: Modality::TouchFold,
            snn_modalities: [Modality::Depth, Modality::Depth],
        }
    }
}

impl ModelConfig {
    pub fn encoder_spec(&self) -> Result<EncoderSpec> {
        let mut dims = vec![self.feature_dim];
        dims.extend_from_slice(&self.hidden_dims);
        dims.push(self.embedding_dim);
        EncoderSpec::new(dims)
    }

    pub fn branch_modalities(&self) -> Vec<Modality> {
        match self.architecture {
            Architecture::Snn2 => self.snn_modalities.to_vec(),
            _ => vec![Modality::Depth, Modality::Color, self.touch_modality],
        }
    }
}

/// Input for one branch: one observation, or several presses for the
/// multi-input touch branch.
#[derive(Debug, Clone, PartialEq)]
pub struct BranchInput {
    pub fabric_id: u32,
    pub cluster_label: u32,
    pub features: Vec<Vec<f64>>,
}

/// One training example across all branches of a model.
#[derive(Debug, Clone, PartialEq)]
pub struct TripletGroup {
    pub label: PairLabel,
    pub branches: Vec<BranchInput>,
}

impl TripletGroup {
    pub fn validate(&self) -> Result<()> {
        let first = self
            .branches
            .first()
            .ok_or_else(|| Error::EmptyInput("group without branches".into()))?
            .fabric_id;
        let same = self.branches.iter().all(|b| b.fabric_id == first);
        if same != (self.label == PairLabel::Same) {
            return Err(Error::InvalidArgument(format!(
                "label {:?} inconsistent with branch fabrics {:?}",
                self.label,
                self.branches
                    .iter()
                    .map(|b| b.fabric_id)
                    .collect::<Vec<_>>()
            )));
        }
        Ok(())
    }
}

/// Per-parameter-block gradients of a model.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelGrads {
    pub encoders: Vec<Vec<f64>>,
    pub heads: Vec<Vec<f64>>,
}

impl ModelGrads {
    pub fn zeros_like(model: &JointModel) -> Self {
        Self {
            encoders: model
                .encoders
                .iter()
                .map(|e| vec![0.0; e.params().len()])
                .collect(),
            heads: model
                .heads
                .iter()
                .map(|h| vec![0.0; h.params().len()])
                .collect(),
        }
    }

    pub fn add_assign(&mut self, other: &ModelGrads) {
        for (a, b) in self.blocks_mut().into_iter().zip(other.blocks()) {
            for (x, y) in a.iter_mut().zip(b) {
                *x += y;
            }
        }
    }

    pub fn scale(&mut self, s: f64) {
        for block in self.blocks_mut() {
            for x in block.iter_mut() {
                *x *= s;
            }
        }
    }

    pub fn blocks(&self) -> Vec<&[f64]> {
        self.encoders
            .iter()
            .chain(&self.heads)
            .map(Vec::as_slice)
            .collect()
    }

    fn blocks_mut(&mut self) -> Vec<&mut Vec<f64>> {
        self.encoders
            .iter_mut()
            .chain(self.heads.iter_mut())
            .collect()
    }

    pub fn flatten(&self) -> Vec<f64> {
        self.blocks().concat()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ForwardOutput {
    pub embeddings: Vec<Embedding>,
    /// D3 for three branches, the pair distance for two.
    pub distance: f64,
    pub contrastive_loss: f64,
    /// Unweighted sum of the cluster cross-entropies (0 without heads).
    pub aux_loss: f64,
    pub loss: f64,
    pub grads: ModelGrads,
}

/// Jointly trained per-modality encoders with optional cluster heads.
#[derive(Debug, Clone, PartialEq)]
pub struct JointModel {
    architecture: Architecture,
    branch_modalities: Vec<Modality>,
    branch_encoder: Vec<usize>,
    encoders: Vec<Encoder>,
    heads: Vec<ClassifierHead>,
    margin: f64,
    aux_weight: f64,
}

impl JointModel {
    pub fn new(config: &ModelConfig, seed: u64) -> Result<Self> {
        let spec = config.encoder_spec()?;
        let branch_modalities = config.branch_modalities();
        let branch_encoder = match config.architecture {
            Architecture::Snn2 if config.snn_modalities[0] == config.snn_modalities[1] => {
                vec![0, 0]
            }
            Architecture::Snn2 => vec![0, 1],
            _ => vec![0, 1, 2],
        };
        let n_enc = branch_encoder.iter().max().unwrap() + 1;
        let encoders = (0..n_enc)
            .map(|i| {
                Encoder::init(
                    &spec,
                    rng::derive_seed_indexed(seed, "model-encoder", &[i as u64]),
                )
            })
            .collect();
        let heads = if config.architecture.has_heads() {
            (0..branch_modalities.len())
                .map(|i| {
                    ClassifierHead::init(
                        config.embedding_dim,
                        config.n_clusters,
                        rng::derive_seed_indexed(seed, "model-head", &[i as u64]),
                    )
                })
                .collect::<Result<_>>()?
        } else {
            Vec::new()
        };
        Self::from_parts(
            config.architecture,
            branch_modalities,
            branch_encoder,
            encoders,
            heads,
            config.margin,
            config.aux_weight,
        )
    }

    pub fn from_parts(
        architecture: Architecture,
        branch_modalities: Vec<Modality>,
        branch_encoder: Vec<usize>,
        encoders: Vec<Encoder>,
        heads: Vec<ClassifierHead>,
        margin: f64,
        aux_weight: f64,
    ) -> Result<Self> {
        let arch_err = |what: &str| Error::ArchitectureMismatch {
            arch: architecture.name().into(),
            what: what.into(),
        };
        let n_branches = if architecture == Architecture::Snn2 {
            2
        } else {
            3
        };
        if branch_modalities.len() != n_branches || branch_encoder.len() != n_branches {
            return Err(arch_err(&format!("{} branches", branch_modalities.len())));
        }
        if encoders.is_empty() || branch_encoder.iter().any(|&e| e >= encoders.len()) {
            return Err(arch_err("a branch without an encoder"));
        }
        let spec = encoders[0].spec();
        let dim = spec.output_dim();
        for e in &encoders {
            if e.spec().output_dim() != dim || e.spec().input_dim() != spec.input_dim() {
                return Err(arch_err("encoders of differing shapes"));
            }
        }
        if architecture.has_heads() {
            if heads.len() != n_branches {
                return Err(arch_err(&format!("{} cluster heads", heads.len())));
            }
            if let Some(h) = heads.iter().find(|h| h.embedding_dim() != dim) {
                return Err(Error::dim("head input", dim, h.embedding_dim()));
            }
        } else if !heads.is_empty() {
            return Err(arch_err("cluster heads"));
        }
        if !(margin > 0.0) {
            return Err(Error::InvalidArgument(format!(
                "margin must be positive, got {margin}"
            )));
        }
        Ok(Self {
            architecture,
            branch_modalities,
            branch_encoder,
            encoders,
            heads,
            margin,
            aux_weight,
        })
    }

    pub fn architecture(&self) -> Architecture {
        self.architecture
    }

    pub fn branch_modalities(&self) -> &[Modality] {
        &self.branch_modalities
    }

    pub fn branch_encoder(&self) -> &[usize] {
        &self.branch_encoder
    }

    pub fn encoders(&self) -> &[Encoder] {
        &self.encoders
    }

    pub fn encoders_mut(&mut self) -> &mut [Encoder] {
        &mut self.encoders
    }

    pub fn heads(&self) -> &[ClassifierHead] {
        &self.heads
    }

    pub fn heads_mut(&mut self) -> &mut [ClassifierHead] {
        &mut self.heads
    }

    pub fn margin(&self) -> f64 {
        self.margin
    }

    pub fn aux_weight(&self) -> f64 {
        self.aux_weight
    }

    pub fn set_aux_weight(&mut self, w: f64) {
        self.aux_weight = w;
    }

    pub fn feature_dim(&self) -> usize {
        self.encoders[0].spec().input_dim()
    }

    pub fn embedding_dim(&self) -> usize {
        self.encoders[0].spec().output_dim()
    }

    pub fn n_clusters(&self) -> Option<usize> {
        self.heads.first().map(ClassifierHead::n_classes)
    }

    /// Number of observations the given branch consumes.
    pub fn branch_inputs(&self, branch: usize) -> usize {
        if self.architecture == Architecture::MultiInput && branch == 2 {
            MULTI_INPUT_PRESSES
        } else {
            1
        }
    }

    pub fn branch_for(&self, modality: Modality) -> Option<usize> {
        self.branch_modalities.iter().position(|&m| m == modality)
    }

    /// Number of observations fused into one embedding of `modality`.
    pub fn inputs_per_embedding(&self, modality: Modality) -> Option<usize> {
        self.branch_for(modality).map(|b| self.branch_inputs(b))
    }

    /// Embeds observations of `modality` with the matching branch encoder.
    pub fn embed(&self, modality: Modality, inputs: &[&[f64]]) -> Result<Embedding> {
        let branch = self
            .branch_for(modality)
            .ok_or_else(|| Error::ArchitectureMismatch {
                arch: self.architecture.name().into(),
                what: format!("{modality} observations"),
            })?;
        let need = self.branch_inputs(branch);
        if inputs.len() != need {
            return Err(Error::dim("observations per embedding", need, inputs.len()));
        }
        let enc = &self.encoders[self.branch_encoder[branch]];
        if need == 1 {
            return enc.embed(inputs[0]);
        }
        let embs: Vec<Embedding> = inputs.iter().map(|x| enc.embed(x)).collect::<Result<_>>()?;
        let refs: Vec<&[f64]> = embs.iter().map(|e| &e[..]).collect();
        Ok(fuse_max_with_argmax(&refs)?.0)
    }

    pub fn param_count(&self) -> usize {
        self.encoders
            .iter()
            .map(|e| e.params().len())
            .sum::<usize>()
            + self.heads.iter().map(|h| h.params().len()).sum::<usize>()
    }

    /// All parameters, encoders first then heads, in block order.
    pub fn flat_params(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.param_count());
        for e in &self.encoders {
            out.extend_from_slice(e.params());
        }
        for h in &self.heads {
            out.extend_from_slice(h.params());
        }
        out
    }

    pub fn set_flat_params(&mut self, params: &[f64]) -> Result<()> {
        if params.len() != self.param_count() {
            return Err(Error::dim(
                "model parameters",
                self.param_count(),
                params.len(),
            ));
        }
        let mut off = 0;
        for e in &mut self.encoders {
            let n = e.params().len();
            e.params_mut().copy_from_slice(&params[off..off + n]);
            off += n;
        }
        for h in &mut self.heads {
            let n = h.params().len();
            h.params_mut().copy_from_slice(&params[off..off + n]);
            off += n;
        }
        Ok(())
    }
}

struct BranchTrace {
    caches: Vec<ActivationCache>,
    /// Which press supplied each embedding component (multi-input only).
    argmax: Option<Vec<usize>>,
}

/// Forward pass, total loss and full gradient for one group.
pub fn model_forward(model: &JointModel, group: &TripletGroup) -> Result<ForwardOutput> {
    let arch_err = |what: String| Error::ArchitectureMismatch {
        arch: model.architecture.name().into(),
        what,
    };
    let n_branches = model.branch_modalities.len();
    if group.branches.len() != n_branches {
        return Err(arch_err(format!(
            "a group with {} branches",
            group.branches.len()
        )));
    }
    let mut embeddings = Vec::with_capacity(n_branches);
    let mut traces = Vec::with_capacity(n_branches);
    for (b, input) in group.branches.iter().enumerate() {
        let need = model.branch_inputs(b);
        if input.features.len() != need {
            return Err(arch_err(format!(
                "{} observations on branch {b} (needs {need})",
                input.features.len()
            )));
        }
        let enc = &model.encoders[model.branch_encoder[b]];
        let mut embs = Vec::with_capacity(need);
        let mut caches = Vec::with_capacity(need);
        for x in &input.features {
            let (e, c) = enc.forward(x)?;
            embs.push(e);
            caches.push(c);
        }
        if need == 1 {
            embeddings.push(embs.pop().unwrap());
            traces.push(BranchTrace {
                caches,
                argmax: None,
            });
        } else {
            let refs: Vec<&[f64]> = embs.iter().map(|e| &e[..]).collect();
            let (fused, arg) = fuse_max_with_argmax(&refs)?;
            embeddings.push(fused);
            traces.push(BranchTrace {
                caches,
                argmax: Some(arg),
            });
        }
    }

    let refs: Vec<&[f64]> = embeddings.iter().map(|e| &e[..]).collect();
    let (distance, distance_grads) = total_distance_grad(&refs);
    let (contrastive_loss, dloss_dd) = if n_branches == 3 {
        contrastive_loss3(distance, group.label, model.margin)?
    } else {
        contrastive_loss2(distance, group.label, model.margin)?
    };
    let mut emb_grads: Vec<Vec<f64>> = distance_grads
        .into_iter()
        .map(|g| g.into_iter().map(|v| v * dloss_dd).collect())
        .collect();

    let mut grads = ModelGrads::zeros_like(model);
    let mut aux_loss = 0.0;
    for (b, head) in model.heads.iter().enumerate() {
        let out = classify_cluster(head, &embeddings[b], group.branches[b].cluster_label)?;
        aux_loss += out.loss;
        for (g, h) in grads.heads[b].iter_mut().zip(&out.head_grads) {
            *g += model.aux_weight * h;
        }
        for (g, e) in emb_grads[b].iter_mut().zip(&out.embedding_grad) {
            *g += model.aux_weight * e;
        }
    }
    let loss = contrastive_loss + model.aux_weight * aux_loss;

    for (b, trace) in traces.iter().enumerate() {
        let e = model.branch_encoder[b];
        let enc = &model.encoders[e];
        match &trace.argmax {
            None => {
                enc.backward_into(&trace.caches[0], &emb_grads[b], &mut grads.encoders[e])?;
            }
            Some(arg) => {
                for (i, cache) in trace.caches.iter().enumerate() {
                    let routed: Vec<f64> = emb_grads[b]
                        .iter()
                        .zip(arg)
                        .map(|(&g, &a)| if a == i { g } else { 0.0 })
                        .collect();
                    enc.backward_into(cache, &routed, &mut grads.encoders[e])?;
                }
            }
        }
    }

    Ok(ForwardOutput {
        embeddings,
        distance,
        contrastive_loss,
        aux_loss,
        loss,
        grads,
    })
}

/// Total loss only.
pub fn model_loss(model: &JointModel, group: &TripletGroup) -> Result<f64> {
    Ok(model_forward(model, group)?.loss)
}
