use fabricnet::assocnet::{JointModel, ModelConfig};
use fabricnet::dataplane::{generate_dataset, Dataset, Modality, SynthDatasetConfig, WorldConfig};
use fabricnet::evalsuite::{
    cluster_confusion, confusion_matrix_on, pick_one_of_n, topk_precision, topk_precision_on,
    topk_precision_serial, EmbeddingTable, EvalConfig, EvalScope, TableEntry,
};
use fabricnet::rng;
use proptest::prelude::*;
use rand::Rng as _;

fn noiseless(n: usize) -> Dataset {
    generate_dataset(&SynthDatasetConfig {
        world: WorldConfig {
            noise_std: 0.0,
            nuisance_scale: 0.0,
            ..WorldConfig::default()
        },
        n_fabrics: n,
        n_test: 10,
        ..SynthDatasetConfig::default()
    })
    .unwrap()
}

fn oracle_table(d: &Dataset, scope: EvalScope) -> EmbeddingTable {
    EmbeddingTable::from_fn(d, scope, &Modality::ALL, |_, f| f.latent().to_vec()).unwrap()
}

#[test]
fn ranking_examples() {
    let q = [0.0, 0.0];
    assert_eq!(
        pick_one_of_n(&q, &[&[5.0, 0.0], &[0.0, 0.5], &[2.0, 0.0]]).unwrap(),
        vec![1, 2, 0]
    );
    let same = [1.0, 0.0];
    assert_eq!(
        pick_one_of_n(&q, &[&same, &same, &same]).unwrap(),
        vec![0, 1, 2]
    );
    assert_eq!(
        pick_one_of_n(&q, &[&[3.0, 0.0], &[2.0, 0.0], &[0.0, 0.0], &[1.0, 1.0]]).unwrap()[0],
        2
    );
    assert!(pick_one_of_n(&q, &[]).is_err());
    assert!(pick_one_of_n(&q, &[&[1.0]]).is_err());
}

proptest! {
    #[test]
    fn ranking_is_invariant_under_squaring(cands in proptest::collection::vec(proptest::collection::vec(-5.0f64..5.0, 3), 1..12)) {
        let q = [0.3, -0.2, 0.1];
        let refs: Vec<&[f64]> = cands.iter().map(|c| c.as_slice()).collect();
        let ranking = pick_one_of_n(&q, &refs).unwrap();
        let d: Vec<f64> = cands.iter().map(|c| c.iter().zip(&q).map(|(a, b)| (a - b) * (a - b)).sum::<f64>()).collect();
        let mut by_sq: Vec<usize> = (0..cands.len()).collect();
        by_sq.sort_by(|&a, &b| d[a].total_cmp(&d[b]));
        prop_assert_eq!(ranking, by_sq);
    }
}

#[test]
fn oracle_embeddings_retrieve_perfectly() {
    let d = noiseless(30);
    let table = oracle_table(&d, EvalScope::All);
    let cfg = EvalConfig::default();
    for (q, c) in [
        (Modality::TouchFold, Modality::Depth),
        (Modality::Depth, Modality::Color),
    ] {
        let cell = topk_precision_on(&table, q, c, &cfg).unwrap();
        assert_eq!(cell.top1(), 1.0);
        assert_eq!(cell.trials, d.count(q) * 10);
    }
}

#[test]
fn identity_free_embeddings_sit_at_chance() {
    let d = noiseless(30);
    let mut r = rng::stream(77, "test");
    let table = EmbeddingTable::from_fn(&d, EvalScope::All, &Modality::ALL, |_, _| {
        (0..8).map(|_| r.random_range(-1.0..1.0)).collect()
    })
    .unwrap();
    let cell = topk_precision_on(
        &table,
        Modality::TouchFold,
        Modality::Depth,
        &EvalConfig::default(),
    )
    .unwrap();
    assert!(cell.trials >= 1000);
    assert!((0.05..=0.17).contains(&cell.top1()), "{}", cell.top1());
    assert!(cell.top3() >= cell.top1());
}

#[test]
fn parallel_and_serial_agree_and_are_seeded() {
    let d = generate_dataset(&SynthDatasetConfig {
        n_fabrics: 30,
        n_test: 10,
        ..SynthDatasetConfig::default()
    })
    .unwrap();
    let model = JointModel::new(&ModelConfig::default(), 3).unwrap();
    let table = EmbeddingTable::from_model(
        &model,
        &d,
        EvalScope::All,
        &[Modality::Depth, Modality::TouchFold],
    )
    .unwrap();
    let cfg = EvalConfig::default();
    let par = topk_precision_on(&table, Modality::TouchFold, Modality::Depth, &cfg).unwrap();
    let ser = topk_precision_serial(&table, Modality::TouchFold, Modality::Depth, &cfg).unwrap();
    assert_eq!(par, ser);
    let other = EvalConfig {
        seed: 1,
        ..cfg.clone()
    };
    let moved = topk_precision_on(&table, Modality::TouchFold, Modality::Depth, &other).unwrap();
    assert_eq!(moved.trials, par.trials);
    let wrapped = topk_precision(
        &model,
        &d,
        EvalScope::All,
        Modality::TouchFold,
        Modality::Depth,
        &cfg,
    )
    .unwrap();
    assert_eq!(wrapped, par);
}

#[test]
fn too_few_fabrics_is_an_error() {
    let d = noiseless(30);
    let table = oracle_table(&d, EvalScope::All);
    let cfg = EvalConfig {
        n_candidates: 40,
        n_distractor_fabrics: 39,
        ..EvalConfig::default()
    };
    assert!(matches!(
        topk_precision_on(&table, Modality::Depth, Modality::Color, &cfg),
        Err(fabricnet::Error::NotEnoughFabrics {
            needed: 39,
            available: 29
        })
    ));
}

#[test]
fn scopes_select_the_right_observations() {
    let mut d = generate_dataset(&SynthDatasetConfig {
        n_fabrics: 30,
        n_test: 10,
        ..SynthDatasetConfig::default()
    })
    .unwrap();
    d.hold_out_observations(0.8, 1).unwrap();
    let count = |s| oracle_table(&d, s).len();
    let test_obs = 10 * 45;
    assert_eq!(count(EvalScope::TestFabrics), test_obs);
    assert_eq!(count(EvalScope::TrainFabrics), 20 * 45);
    assert_eq!(count(EvalScope::HeldOut), 20 * (2 + 2 + 2 + 3));
    assert_eq!(
        count(EvalScope::Unseen),
        count(EvalScope::HeldOut) + test_obs
    );
    assert_eq!(count(EvalScope::All), 30 * 45);
}

#[test]
fn oracle_confusion_is_diagonal_dominant() {
    let d = noiseless(30);
    let table = oracle_table(&d, EvalScope::All);
    let m = confusion_matrix_on(&table, &d, Modality::TouchFold, Modality::Depth, 8.5e-2).unwrap();
    assert_eq!(m.size(), 30);
    for (i, row) in m.values.iter().enumerate() {
        assert!((row.iter().sum::<f64>() - 1.0).abs() < 1e-9);
        assert!(row.iter().all(|&v| v >= 0.0));
        for (j, &v) in row.iter().enumerate() {
            if j != i {
                assert!(row[i] > v, "row {i}: {} vs {v}", row[i]);
            }
        }
    }
    let clusters = cluster_confusion(&m, &d, 8);
    assert_eq!(clusters.len(), 8);
    assert!(clusters.iter().all(|r| r.len() == 8));
}

#[test]
fn identical_embeddings_give_uniform_rows() {
    let d = noiseless(12);
    let table = EmbeddingTable::from_fn(
        &d,
        EvalScope::All,
        &[Modality::Depth, Modality::Color],
        |_, _| vec![1.0, 2.0],
    )
    .unwrap();
    let m = confusion_matrix_on(&table, &d, Modality::Color, Modality::Depth, 8.5e-2).unwrap();
    for row in &m.values {
        for &v in row {
            assert!((v - 1.0 / 12.0).abs() < 1e-12);
        }
    }
}

#[test]
fn confusion_rows_follow_cluster_then_stiffness() {
    let d = noiseless(30);
    let m = confusion_matrix_on(
        &oracle_table(&d, EvalScope::All),
        &d,
        Modality::Depth,
        Modality::Depth,
        8.5e-2,
    )
    .unwrap();
    let keys: Vec<(u32, f64)> = m
        .fabric_order
        .iter()
        .map(|&f| {
            let r = d.fabric(f).unwrap();
            (r.cluster_id.unwrap(), r.stiffness_score)
        })
        .collect();
    for w in keys.windows(2) {
        assert!(w[0].0 < w[1].0 || (w[0].0 == w[1].0 && w[0].1 <= w[1].1));
    }
}

#[test]
fn table_lookup() {
    let mut t = EmbeddingTable::new();
    t.push(TableEntry {
        fabric_id: 4,
        modality: Modality::Depth,
        instance_index: 0,
        embedding: vec![1.0],
    });
    t.push(TableEntry {
        fabric_id: 2,
        modality: Modality::Depth,
        instance_index: 0,
        embedding: vec![2.0],
    });
    assert_eq!(t.fabrics(), vec![2, 4]);
    assert_eq!(t.entries_of(Modality::Depth, 2), &[1]);
    assert!(t.entries_of(Modality::Color, 2).is_empty());
    assert_eq!(t.embedding(0), &[1.0]);
}
