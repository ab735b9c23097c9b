use fabricnet::assocnet::{Architecture, JointModel, ModelConfig, PairLabel};
use fabricnet::dataplane::{generate_dataset, Dataset, Modality, SynthDatasetConfig, WorldConfig};
use fabricnet::rng;
use fabricnet::trainer::{
    load_checkpoint, save_checkpoint, train, Checkpoint, GroupSampler, TrainConfig,
};
use fabricnet::Error;

fn dataset(n: usize, noise: f64) -> Dataset {
    generate_dataset(&SynthDatasetConfig {
        world: WorldConfig {
            seed: 5,
            noise_std: noise,
            nuisance_scale: if noise == 0.0 { 0.0 } else { 0.3 },
            ..WorldConfig::default()
        },
        n_fabrics: n,
        n_clusters: 4,
        n_test: 4,
        ..SynthDatasetConfig::default()
    })
    .unwrap()
}

fn model(arch: Architecture, seed: u64) -> JointModel {
    JointModel::new(
        &ModelConfig {
            architecture: arch,
            hidden_dims: vec![16],
            embedding_dim: 8,
            n_clusters: 4,
            ..ModelConfig::default()
        },
        seed,
    )
    .unwrap()
}

#[test]
fn negative_frequency_matches_ratio() {
    let ds = dataset(20, 0.05);
    let m = model(Architecture::CrossModal, 0);
    let s = GroupSampler::new(&ds, &ds.train_fabrics(), &m).unwrap();
    let mut r = rng::stream(11, "test");
    let n = 10_000;
    let negatives = (0..n)
        .filter(|_| s.sample_group(0.5, &mut r).unwrap().label == PairLabel::Different)
        .count();
    let f = negatives as f64 / n as f64;
    assert!((0.47..=0.53).contains(&f), "{f}");
}

#[test]
fn groups_respect_labels_and_modalities() {
    let ds = dataset(20, 0.05);
    let train_ids = ds.train_fabrics();
    for arch in [
        Architecture::CrossModal,
        Architecture::MultiInput,
        Architecture::Snn2,
    ] {
        let m = model(arch, 0);
        let s = GroupSampler::new(&ds, &train_ids, &m).unwrap();
        let mut r = rng::stream(3, "test");
        let batch = s.sample_batch(32, 0.5, &mut r).unwrap();
        assert_eq!(batch.len(), 32);
        assert_eq!(
            batch
                .iter()
                .filter(|g| g.label == PairLabel::Different)
                .count(),
            16
        );
        for g in &batch {
            g.validate().unwrap();
            assert_eq!(g.branches.len(), m.branch_modalities().len());
            for (b, input) in g.branches.iter().enumerate() {
                assert!(train_ids.contains(&input.fabric_id));
                assert_eq!(input.features.len(), m.branch_inputs(b));
                let cluster = ds.fabric(input.fabric_id).unwrap().cluster_id.unwrap();
                assert_eq!(input.cluster_label, cluster);
            }
        }
    }
}

#[test]
fn held_out_observations_are_never_sampled() {
    let mut ds = dataset(12, 0.05);
    ds.hold_out_observations(0.5, 9).unwrap();
    let m = model(Architecture::CrossModal, 0);
    let s = GroupSampler::new(&ds, &ds.train_fabrics(), &m).unwrap();
    let held: Vec<&[f64]> = ds
        .observations
        .iter()
        .filter(|o| o.held_out)
        .map(|o| o.features.as_slice())
        .collect();
    let mut r = rng::stream(4, "test");
    for _ in 0..200 {
        for b in s.sample_group(0.5, &mut r).unwrap().branches {
            assert!(!held.contains(&b.features[0].as_slice()));
        }
    }
}

#[test]
fn training_is_deterministic_and_reduces_loss() {
    let ds = dataset(20, 0.0);
    let cfg = TrainConfig {
        iterations: 400,
        batch_size: 16,
        master_seed: 2,
        ..TrainConfig::default()
    };
    let run = || {
        let m = model(Architecture::Auxiliary, cfg.init_seed());
        let s = GroupSampler::new(&ds, &ds.train_fabrics(), &m).unwrap();
        train(m, &s, &cfg).unwrap()
    };
    let (a, hist) = run();
    let (b, hist_b) = run();
    assert_eq!(a, b);
    assert_eq!(hist, hist_b);
    let tenth = hist.len() / 10;
    let head: f64 = hist[..tenth].iter().sum::<f64>() / tenth as f64;
    let tail: f64 = hist[hist.len() - tenth..].iter().sum::<f64>() / tenth as f64;
    assert!(tail < head, "{head} -> {tail}");
}

#[test]
fn zero_iterations_returns_initialization() {
    let ds = dataset(12, 0.05);
    let m = model(Architecture::CrossModal, 8);
    let s = GroupSampler::new(&ds, &ds.train_fabrics(), &m).unwrap();
    let cfg = TrainConfig {
        iterations: 0,
        ..TrainConfig::default()
    };
    let (trained, hist) = train(m.clone(), &s, &cfg).unwrap();
    assert!(hist.is_empty());
    assert_eq!(trained.flat_params(), m.flat_params());
}

#[test]
fn non_finite_loss_is_reported() {
    let mut ds = dataset(12, 0.05);
    for o in &mut ds.observations {
        o.features[0] = f64::INFINITY;
    }
    let m = model(Architecture::CrossModal, 0);
    let s = GroupSampler::new(&ds, &ds.train_fabrics(), &m).unwrap();
    let cfg = TrainConfig {
        iterations: 5,
        ..TrainConfig::default()
    };
    let r = train(m, &s, &cfg);
    assert!(matches!(r, Err(Error::NonFiniteLoss { .. })), "{r:?}");
}

#[test]
fn sampler_rejects_missing_modality() {
    let mut ds = dataset(12, 0.05);
    ds.observations
        .retain(|o| o.modality != Modality::TouchFold);
    let m = model(Architecture::CrossModal, 0);
    assert!(matches!(
        GroupSampler::new(&ds, &ds.train_fabrics(), &m),
        Err(Error::MissingModality(_))
    ));
}

#[test]
fn checkpoint_round_trip_is_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    for arch in [
        Architecture::CrossModal,
        Architecture::Auxiliary,
        Architecture::MultiInput,
        Architecture::Snn2,
    ] {
        let ck = Checkpoint {
            model: model(arch, 4),
            backbone_seed: 17,
            train_config: TrainConfig::default(),
        };
        let path = dir.path().join(format!("{}.gfab", arch.name()));
        save_checkpoint(&ck, &path).unwrap();
        let bytes = std::fs::read(&path).unwrap();
        let back = load_checkpoint(&path).unwrap();
        assert_eq!(back.to_bytes().unwrap(), bytes);
        assert_eq!(back.model.architecture(), arch);
        assert_eq!(back.backbone_seed, 17);
    }
}

#[test]
fn corrupt_checkpoints_are_rejected() {
    let ck = Checkpoint {
        model: model(Architecture::Auxiliary, 1),
        backbone_seed: 0,
        train_config: TrainConfig::default(),
    };
    let bytes = ck.to_bytes().unwrap();
    let mut bad_magic = bytes.clone();
    bad_magic[0] = b'X';
    assert!(matches!(
        Checkpoint::from_bytes(&bad_magic),
        Err(Error::BadMagic { .. })
    ));
    let mut bad_version = bytes.clone();
    bad_version[4] = 99;
    assert!(matches!(
        Checkpoint::from_bytes(&bad_version),
        Err(Error::VersionMismatch { found: 99, .. })
    ));
    assert!(matches!(
        Checkpoint::from_bytes(&bytes[..bytes.len() - 3]),
        Err(Error::Truncated(_))
    ));
    let mut trailing = bytes.clone();
    trailing.push(0);
    assert!(Checkpoint::from_bytes(&trailing).is_err());
    let missing = std::path::Path::new("/nonexistent/model.gfab");
    assert!(matches!(load_checkpoint(missing), Err(Error::Io { .. })));
}
