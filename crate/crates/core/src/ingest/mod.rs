//! Real-image ingestion: binary PNM parsing, color augmentation and the
//! frozen random-projection featurizer.

mod augment;
mod backbone;
mod directory;
mod pnm;

pub use augment::{
    gamma_correct, inverse_permutation, permute_channels, ALL_PERMUTATIONS, GAMMA_RANGE,
};
pub use backbone::{
    downsample, select_deepest_frame, FrozenBackbone, BACKBONE_FEATURES, BACKBONE_SIDE,
};
pub use directory::{ingest_directory, IngestOptions, IngestOutcome};
pub use pnm::{parse_pnm, PixelImage};

/// Featurizes an image with a frozen backbone.
pub fn featurize(img: &PixelImage, backbone: &FrozenBackbone) -> crate::Result<Vec<f64>> {
    backbone.featurize(img)
}
