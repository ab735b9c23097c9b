use std::path::Path;
use std::process::{Command, Output};

use fabricnet::evalsuite::parse_precision_csv;

fn run(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_fabricnet"))
        .current_dir(dir)
        .args(args)
        .output()
        .unwrap()
}

fn ok(dir: &Path, args: &[&str]) -> String {
    let out = run(dir, args);
    assert!(
        out.status.success(),
        "{args:?}: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8(out.stdout).unwrap()
}

const CONFIG: &str = "\
# small end-to-end run
world.n_fabrics = 30
split.n_test = 10
train.iterations = 60
train.batch_size = 8
model.hidden_dims = 16
model.embedding_dim = 8
eval.repetitions = 2
paths.report = out/precision.csv
";

fn setup() -> tempfile::TempDir {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("run.cfg"), CONFIG).unwrap();
    dir
}

fn pipeline(dir: &Path) -> Vec<Vec<u8>> {
    for cmd in ["gen", "train", "eval", "confuse"] {
        ok(dir, &["-c", "run.cfg", "--workers", "2", cmd]);
    }
    [
        "dataset.gfds",
        "model.gfab",
        "loss.csv",
        "out/precision.csv",
        "confusion.csv",
        "confusion.pgm",
        "cluster_confusion.csv",
    ]
    .iter()
    .map(|f| std::fs::read(dir.join(f)).unwrap())
    .collect()
}

#[test]
fn pipeline_is_byte_reproducible() {
    let a = setup();
    let b = setup();
    let first = pipeline(a.path());
    assert_eq!(first, pipeline(b.path()));
    assert_eq!(first, pipeline(a.path()));
}

#[test]
fn outputs_are_self_describing() {
    let dir = setup();
    pipeline(dir.path());
    for f in [
        "loss.csv",
        "out/precision.csv",
        "confusion.csv",
        "cluster_confusion.csv",
    ] {
        let text = std::fs::read_to_string(dir.path().join(f)).unwrap();
        assert!(text.starts_with("# world.seed = "), "{f}");
        assert!(text.contains("# train.iterations = 60\n"), "{f}");
    }
    let report = parse_precision_csv(
        &std::fs::read_to_string(dir.path().join("out/precision.csv")).unwrap(),
    )
    .unwrap();
    assert_eq!(report.cells.len(), 9);
    for c in &report.cells {
        assert!(c.top3() >= c.top1());
    }
    let confusion = std::fs::read_to_string(dir.path().join("confusion.csv")).unwrap();
    let rows: Vec<&str> = confusion
        .lines()
        .filter(|l| !l.starts_with('#'))
        .skip(1)
        .collect();
    assert_eq!(rows.len(), 10);
    for r in rows {
        let s: f64 = r
            .split(',')
            .skip(1)
            .map(|v| v.parse::<f64>().unwrap())
            .sum();
        assert!((s - 1.0).abs() < 1e-6);
    }
    let heatmap =
        fabricnet::ingest::parse_pnm(&std::fs::read(dir.path().join("confusion.pgm")).unwrap())
            .unwrap();
    assert_eq!((heatmap.width, heatmap.height), (10, 10));
    let clusters = std::fs::read_to_string(dir.path().join("cluster_confusion.csv")).unwrap();
    assert_eq!(clusters.lines().filter(|l| !l.starts_with('#')).count(), 9);
}

#[test]
fn zero_iterations_checkpoint_is_the_initialization() {
    let dir = setup();
    ok(dir.path(), &["-c", "run.cfg", "gen"]);
    ok(
        dir.path(),
        &["-c", "run.cfg", "--set", "train.iterations=0", "train"],
    );
    let ck = fabricnet::trainer::load_checkpoint(&dir.path().join("model.gfab")).unwrap();
    let cfg = fabricnet::cli::RunConfig::load(&dir.path().join("run.cfg")).unwrap();
    let mut mc = cfg.model.clone();
    mc.feature_dim = 32;
    let init = fabricnet::assocnet::JointModel::new(&mc, cfg.train.init_seed()).unwrap();
    let rounded: Vec<f64> = init
        .flat_params()
        .iter()
        .map(|&p| p as f32 as f64)
        .collect();
    assert_eq!(ck.model.flat_params(), rounded);
}

#[test]
fn exit_codes() {
    let dir = setup();
    let out = run(dir.path(), &["--set", "world.bogus = 1", "gen"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("world.bogus"));

    let out = run(dir.path(), &["--set", "cluster.k = 200", "gen"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr)
        .contains("cluster.k (200) must not exceed world.n_fabrics"));

    let out = run(dir.path(), &["-c", "run.cfg", "train"]);
    assert_eq!(
        out.status.code(),
        Some(3),
        "missing dataset is an I/O error"
    );

    let out = run(dir.path(), &["-c", "missing.cfg", "gen"]);
    assert_eq!(out.status.code(), Some(3));

    ok(dir.path(), &["-c", "run.cfg", "gen"]);
    let out = run(
        dir.path(),
        &[
            "-c",
            "run.cfg",
            "--set",
            "train.learning_rate=1e308",
            "--set",
            "train.iterations=400",
            "train",
        ],
    );
    assert_eq!(
        out.status.code(),
        Some(4),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
}

#[test]
fn eval_reports_both_dims_on_mismatch() {
    let dir = setup();
    ok(dir.path(), &["-c", "run.cfg", "gen"]);
    ok(dir.path(), &["-c", "run.cfg", "train"]);
    ok(
        dir.path(),
        &[
            "-c",
            "run.cfg",
            "--set",
            "world.feature_dim=16",
            "--set",
            "paths.dataset=other.gfds",
            "gen",
        ],
    );
    let out = run(
        dir.path(),
        &["-c", "run.cfg", "--set", "paths.dataset=other.gfds", "eval"],
    );
    assert_eq!(out.status.code(), Some(2));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("expected 32, got 16"), "{err}");
}

#[test]
fn ingest_subcommand() {
    let dir = setup();
    let root = dir.path().join("images");
    for f in 1..=2 {
        for (m, ch) in [("depth", 1), ("color", 3), ("touch", 3)] {
            let img =
                fabricnet::ingest::PixelImage::new(8, 8, ch, 255, vec![(f * 40) as u16; 64 * ch])
                    .unwrap();
            let p = root.join(format!("{f}/{m}/0.pnm"));
            std::fs::create_dir_all(p.parent().unwrap()).unwrap();
            std::fs::write(p, img.to_pnm()).unwrap();
        }
    }
    let stdout = ok(
        dir.path(),
        &[
            "-c",
            "run.cfg",
            "--set",
            "ingest.augment=true",
            "ingest",
            "images",
        ],
    );
    assert!(stdout.contains("2 fabrics, 10 observations"), "{stdout}");
    let out = run(dir.path(), &["-c", "run.cfg", "ingest", "nothing-here"]);
    assert_eq!(out.status.code(), Some(3));
}
