//! Association machinery: embedding distances, contrastive losses, the
//! cluster classification head, multi-press max fusion and the joint
//! model architectures.

mod distance;
mod fusion;
mod head;
mod loss;
mod model;

pub use distance::{d3_distance, pair_distance};
pub use fusion::{fuse_max, fuse_max_with_argmax};
pub use head::{classify_cluster, log_sum_exp, ClassifierHead, ClassifyOutput};
pub use loss::{contrastive_loss2, contrastive_loss3, PairLabel};
pub use model::{
    model_forward, model_loss, Architecture, BranchInput, ForwardOutput, JointModel, ModelConfig,
    ModelGrads, TripletGroup, MULTI_INPUT_PRESSES,
};
