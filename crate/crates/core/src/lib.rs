//! Cross-modal embedding learning for associating visual and tactile
//! observations of deformable materials.
//!
//! Each sensing modality (depth image, color image, tactile press) gets its
//! own encoder; encoders are trained jointly with a margin-based contrastive
//! loss on the summed pairwise distances between their embeddings so that
//! observations of the same fabric land close together.

#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod assocnet;
mod binio;
pub mod cli;
pub mod dataplane;
pub mod error;
pub mod evalsuite;
pub mod ingest;
pub mod numcore;
pub mod rng;
pub mod trainer;

pub use error::{Error, Result};
