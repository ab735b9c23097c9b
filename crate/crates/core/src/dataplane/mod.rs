//! Synthetic fabric world, attribute clustering and dataset splitting.

mod dataset;
mod fabric;
mod kmeans;
mod split;
mod world;

pub use dataset::{
    assign_clusters, generate_dataset, Dataset, DatasetMeta, InstanceCounts, SynthDatasetConfig,
    DATASET_MAGIC, DATASET_VERSION,
};
pub use fabric::{generate_fabrics, normalize_attributes, FabricRecord, NormalizedAttributes};
pub use kmeans::{kmeans_cluster, nearest_centroid, wcss, KMeansResult, KMEANS_RESTARTS};
pub use split::{split_dataset, stratified_quotas};
pub use world::{
    nuisance_profile, synth_observe, Modality, Observation, SynthWorld, WorldConfig, LATENT_DIM,
};
