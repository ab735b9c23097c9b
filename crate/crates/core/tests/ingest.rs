use std::fs;
use std::path::Path;

use fabricnet::dataplane::Modality;
use fabricnet::ingest::{ingest_directory, parse_pnm, IngestOptions, PixelImage};
use fabricnet::Error;

fn image(w: usize, h: usize, channels: usize, fill: impl Fn(usize) -> u16) -> PixelImage {
    PixelImage::new(
        w,
        h,
        channels,
        255,
        (0..w * h * channels).map(fill).collect(),
    )
    .unwrap()
}

fn write(path: &Path, img: &PixelImage) {
    fs::create_dir_all(path.parent().unwrap()).unwrap();
    fs::write(path, img.to_pnm()).unwrap();
}

fn small_tree(root: &Path, fabrics: &[u32]) {
    for &f in fabrics {
        let base = root.join(f.to_string());
        write(
            &base.join("depth/0.pgm"),
            &image(16, 16, 1, |i| ((i * 7 + f as usize) % 256) as u16),
        );
        write(
            &base.join("color/0.ppm"),
            &image(16, 16, 3, |i| ((i * 3 + f as usize) % 256) as u16),
        );
        write(
            &base.join("touch/0.ppm"),
            &image(16, 16, 3, |i| ((i * 5 + f as usize) % 256) as u16),
        );
    }
}

fn opts() -> IngestOptions {
    IngestOptions {
        feature_dim: 32,
        n_test: 0,
        ..IngestOptions::default()
    }
}

#[test]
fn two_fabrics_three_modalities() {
    let dir = tempfile::tempdir().unwrap();
    small_tree(dir.path(), &[1, 2]);
    let out = ingest_directory(dir.path(), &opts()).unwrap();
    let d = out.dataset;
    assert_eq!(d.fabrics.len(), 2);
    assert_eq!(d.observations.len(), 6);
    assert_eq!(d.count(Modality::TouchFold), 2);
    assert!(d.observations.iter().all(|o| o.features.len() == 32));
    d.validate().unwrap();
}

#[test]
fn augmentation_triples_color() {
    let dir = tempfile::tempdir().unwrap();
    small_tree(dir.path(), &[1, 2]);
    let aug = IngestOptions {
        augment: true,
        color_variants: 2,
        ..opts()
    };
    let d = ingest_directory(dir.path(), &aug).unwrap().dataset;
    assert_eq!(d.count(Modality::Color), 6);
    assert_eq!(d.count(Modality::Depth), 2);
    let again = ingest_directory(dir.path(), &aug).unwrap().dataset;
    assert_eq!(again.to_bytes().unwrap(), d.to_bytes().unwrap());
}

#[test]
fn empty_directory_is_an_error() {
    let dir = tempfile::tempdir().unwrap();
    assert!(matches!(
        ingest_directory(dir.path(), &opts()),
        Err(Error::EmptyInput(_))
    ));
}

#[test]
fn malformed_file_is_reported_and_missing_modality_aborts() {
    let dir = tempfile::tempdir().unwrap();
    small_tree(dir.path(), &[1, 2]);
    fs::write(dir.path().join("2/depth/1.pgm"), b"P5 broken").unwrap();
    let out = ingest_directory(dir.path(), &opts()).unwrap();
    assert!(out.warnings.iter().any(|w| w.contains("1.pgm")));
    assert_eq!(out.dataset.observations.len(), 6);

    fs::write(dir.path().join("2/depth/0.pgm"), b"P5 broken").unwrap();
    match ingest_directory(dir.path(), &opts()) {
        Err(Error::MissingModality(m)) => {
            assert!(m.contains("depth") && m.contains("fabric 2"), "{m}")
        }
        other => panic!("{other:?}"),
    }
}

#[test]
fn touch_sequences_use_the_deepest_frame() {
    let dir = tempfile::tempdir().unwrap();
    small_tree(dir.path(), &[1]);
    let seq = dir.path().join("1/touch_fold/0");
    let flat = image(16, 16, 3, |_| 10);
    let deep = image(16, 16, 3, |i| if i % 2 == 0 { 200 } else { 10 });
    write(&seq.join("00.ppm"), &flat);
    write(
        &seq.join("01.ppm"),
        &image(16, 16, 3, |i| if i % 4 == 0 { 90 } else { 10 }),
    );
    write(&seq.join("02.ppm"), &deep);
    fs::remove_file(dir.path().join("1/touch/0.ppm")).unwrap();
    let with_seq = ingest_directory(dir.path(), &opts()).unwrap().dataset;

    fs::remove_dir_all(&seq).unwrap();
    write(&dir.path().join("1/touch_fold/0.ppm"), &deep);
    let with_frame = ingest_directory(dir.path(), &opts()).unwrap().dataset;
    let touch = |d: &fabricnet::dataplane::Dataset| {
        d.observations
            .iter()
            .find(|o| o.modality == Modality::TouchFold)
            .unwrap()
            .features
            .clone()
    };
    assert_eq!(touch(&with_seq), touch(&with_frame));
}

#[test]
fn attributes_drive_clusters_and_split() {
    let dir = tempfile::tempdir().unwrap();
    let ids: Vec<u32> = (1..=6).collect();
    small_tree(dir.path(), &ids);
    let mut csv = String::from("id,thickness_mm,stiffness,stretch_level,density_gsm\n");
    for &i in &ids {
        csv.push_str(&format!(
            "{i},{},{},{},{}\n",
            0.2 * i as f64,
            i as f64 * 0.8,
            i % 3,
            50 * i
        ));
    }
    fs::write(dir.path().join("attributes.csv"), csv).unwrap();
    let o = IngestOptions {
        n_clusters: 2,
        n_test: 2,
        ..opts()
    };
    let d = ingest_directory(dir.path(), &o).unwrap().dataset;
    assert_eq!(d.test_fabrics.len(), 2);
    assert!(d.fabrics.iter().all(|f| f.cluster_id.unwrap() < 2));
    assert_eq!(d.fabric(3).unwrap().stretch_level, 0);
}

#[test]
fn pnm_bytes_survive_round_trip() {
    let img = image(5, 3, 3, |i| (i * 17 % 256) as u16);
    let bytes = img.to_pnm();
    let back = parse_pnm(&bytes).unwrap();
    assert_eq!(back, img);
    assert_eq!(back.to_pnm(), bytes);
}
