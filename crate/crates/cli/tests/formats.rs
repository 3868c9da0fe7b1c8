//! On-disk format round-trips and error contracts.

use std::fs;
use std::path::PathBuf;

use tct::csvio;
use tct::error::CliError;
use tct::jsonio::{self, TrainedModel};
use tct::pgm;
use tct::tcub;

use tct_core::cube::{to_raster, ThermalCube};
use tct_core::eval::DetectionMap;
use tct_core::labeling::{rasterize_rois, CellLabel, Label, LabelMask, RoiRect};
use tct_core::matrix::Matrix;
use tct_core::mlp;
use tct_core::models::{self, BaggedTreesParams, KernelKind, ModelSpec};
use tct_core::pct;
use tct_core::rng::Rng;
use tct_core::synth::ScenePreset;

fn tmp(name: &str) -> PathBuf {
    let dir = PathBuf::from(env!("CARGO_TARGET_TMPDIR")).join(name);
    let _ = fs::remove_dir_all(&dir);
    fs::create_dir_all(&dir).unwrap();
    dir
}

fn small_cube() -> ThermalCube {
    // Values chosen to be exactly representable in f32.
    let data: Vec<f64> = (0..2 * 2 * 3).map(|i| 20.0 + i as f64 * 0.25).collect();
    ThermalCube::new(2, 2, 3, 0.5, data).unwrap()
}

#[test]
fn tcub_round_trip_is_bit_exact() {
    let dir = tmp("tcub_round_trip");
    let path = dir.join("cube.tcub");
    let cube = small_cube();
    tcub::save_cube(&path, &cube).unwrap();
    let loaded = tcub::load_cube(&path).unwrap();
    assert_eq!(loaded, cube);
}

#[test]
fn tcub_rejects_bad_magic() {
    let dir = tmp("tcub_magic");
    let path = dir.join("cube.tcub");
    let cube = small_cube();
    tcub::save_cube(&path, &cube).unwrap();
    let mut bytes = fs::read(&path).unwrap();
    bytes[0..4].copy_from_slice(b"XXXX");
    fs::write(&path, &bytes).unwrap();
    match tcub::load_cube(&path) {
        Err(CliError::Format(_)) => {}
        other => panic!("expected a format error, got {other:?}"),
    }
}

#[test]
fn tcub_rejects_short_payload() {
    let dir = tmp("tcub_short");
    let path = dir.join("cube.tcub");
    let cube = small_cube();
    tcub::save_cube(&path, &cube).unwrap();
    let bytes = fs::read(&path).unwrap();
    fs::write(&path, &bytes[..bytes.len() - 4]).unwrap();
    match tcub::load_cube(&path) {
        Err(CliError::Data(_)) => {}
        other => panic!("expected a data error, got {other:?}"),
    }
}

#[test]
fn tcub_rejects_nan_payload() {
    let dir = tmp("tcub_nan");
    let path = dir.join("cube.tcub");
    tcub::save_cube(&path, &small_cube()).unwrap();
    let mut bytes = fs::read(&path).unwrap();
    let nan = f32::NAN.to_le_bytes();
    let payload_start = 24;
    bytes[payload_start..payload_start + 4].copy_from_slice(&nan);
    fs::write(&path, &bytes).unwrap();
    match tcub::load_cube(&path) {
        Err(CliError::Data(_)) => {}
        other => panic!("expected a data error, got {other:?}"),
    }
}

#[test]
fn tcub_rejects_degenerate_header_dims() {
    let dir = tmp("tcub_degenerate");
    let path = dir.join("cube.tcub");
    tcub::save_cube(&path, &small_cube()).unwrap();
    let mut bytes = fs::read(&path).unwrap();
    bytes[8..12].copy_from_slice(&0u32.to_le_bytes()); // height = 0
    fs::write(&path, &bytes).unwrap();
    match tcub::load_cube(&path) {
        Err(CliError::Data(_)) => {}
        other => panic!("expected a data error, got {other:?}"),
    }
}

#[test]
fn csv_directory_ingest() {
    let dir = tmp("csv_ingest");
    fs::write(dir.join("frame_00000.csv"), "1.0,2.0\n3.0,4.0\n").unwrap();
    fs::write(dir.join("frame_00001.csv"), "5.0,6.0\n7.0,8.0\n").unwrap();
    let cube = tcub::load_csv_dir(&dir, 2.0).unwrap();
    assert_eq!((cube.height(), cube.width(), cube.frames()), (2, 2, 2));
    assert_eq!(cube.at(1, 0, 1), 7.0);
    assert_eq!(cube.sample_rate(), 2.0);
    // Ragged rows are rejected.
    fs::write(dir.join("frame_00001.csv"), "5.0,6.0\n7.0\n").unwrap();
    assert!(tcub::load_csv_dir(&dir, 2.0).is_err());
}

#[test]
fn csv_ingest_requires_sample_rate() {
    let dir = tmp("csv_rate");
    fs::write(dir.join("frame_00000.csv"), "1.0\n").unwrap();
    fs::write(dir.join("frame_00001.csv"), "2.0\n").unwrap();
    match tcub::load(&dir, tcub::CubeFormat::CsvDir, None) {
        Err(CliError::Config(_)) => {}
        other => panic!("expected a config error, got {other:?}"),
    }
}

#[test]
fn pgm_map_bytes_are_exact() {
    let dir = tmp("pgm_map");
    let path = dir.join("map.pgm");
    let map = DetectionMap::new(2, 2, vec![0.0, 1.0, 0.5, 1.7], "test").unwrap();
    pgm::write_map(&path, &map).unwrap();
    let bytes = fs::read(&path).unwrap();
    assert_eq!(&bytes[..11], b"P5\n2 2\n255\n".as_slice());
    assert_eq!(&bytes[bytes.len() - 4..], &[0u8, 255, 128, 255]);
}

#[test]
fn pgm_mask_round_trip() {
    let dir = tmp("pgm_mask");
    let path = dir.join("mask.pgm");
    let mut mask = rasterize_rois(
        &[
            RoiRect::new(Label::Void, 0, 0, 2, 2),
            RoiRect::new(Label::Solid, 2, 0, 4, 4),
        ],
        4,
        4,
    )
    .unwrap();
    mask.set(0, 3, CellLabel::Unlabeled);
    pgm::write_mask(&path, &mask).unwrap();
    let loaded = pgm::read_mask(&path).unwrap();
    assert_eq!(loaded, mask);
}

#[test]
fn pgm_rejects_foreign_levels() {
    let dir = tmp("pgm_levels");
    let path = dir.join("mask.pgm");
    fs::write(&path, b"P5\n2 1\n255\n\x00\x07").unwrap();
    assert!(pgm::read_mask(&path).is_err());
}

#[test]
fn map_csv_round_trip_is_exact() {
    let dir = tmp("map_csv");
    let path = dir.join("map.csv");
    let mut rng = Rng::seed_from_u64(3);
    let values: Vec<f64> = (0..12).map(|_| rng.uniform(-2.0, 2.0)).collect();
    let map = DetectionMap::new(3, 4, values.clone(), "test").unwrap();
    csvio::write_map(&path, &map).unwrap();
    let loaded = csvio::read_map(&path, "test").unwrap();
    // Shortest round-trip float formatting makes this bit-exact.
    assert_eq!(loaded.values(), values.as_slice());
}

#[test]
fn pca_model_document_round_trip() {
    let dir = tmp("pca_json");
    let path = dir.join("pca.json");
    let scene = {
        let mut s = ScenePreset::A.scene(1);
        s.duration = 100.0;
        s.height = 6;
        s.width = 8;
        s.void_rois = vec![RoiRect::new(Label::Void, 1, 1, 4, 4)];
        s
    };
    let (cube, _) = tct_core::synth::generate_cube(&scene).unwrap();
    let raster = to_raster(&cube);
    let model = pct::fit_pca(&raster, 5).unwrap();
    jsonio::save_pca(&path, &model).unwrap();
    let loaded = jsonio::load_pca(&path).unwrap();
    assert_eq!(loaded, model);
}

fn training_data() -> (Matrix, Vec<f64>) {
    let mut rng = Rng::seed_from_u64(9);
    let m = 30;
    let mut rows = Vec::new();
    let mut y = Vec::new();
    for i in 0..m {
        let label = (i % 2) as f64;
        rows.push(label * 2.0 - 1.0 + 0.1 * rng.next_gaussian());
        rows.push(rng.next_gaussian());
        y.push(label);
    }
    (Matrix::from_vec(m, 2, rows).unwrap(), y)
}

#[test]
fn model_documents_preserve_predictions() {
    let dir = tmp("model_json");
    let (x, y) = training_data();
    let probe = {
        let mut rng = Rng::seed_from_u64(10);
        Matrix::from_vec(7, 2, (0..14).map(|_| rng.uniform(-2.0, 2.0)).collect()).unwrap()
    };
    let specs = [
        ModelSpec::Linear,
        ModelSpec::RobustLinear { delta: 1.345 },
        ModelSpec::Kernel {
            kernel: KernelKind::Rbf,
            lambda: 1e-3,
            gamma: 0.5,
        },
        ModelSpec::Kernel {
            kernel: KernelKind::Quadratic,
            lambda: 1e-3,
            gamma: 0.5,
        },
        ModelSpec::BaggedTrees(BaggedTreesParams::defaults(5)),
    ];
    for (i, spec) in specs.iter().enumerate() {
        let fitted = models::fit(&x, &y, spec).unwrap();
        let expect = models::predict(&fitted, &probe).unwrap();
        let path = dir.join(format!("model_{i}.json"));
        let model = TrainedModel::Regressor(fitted);
        jsonio::save_model(&path, &model, None).unwrap();
        let loaded = jsonio::load_model(&path).unwrap();
        assert_eq!(loaded.kind_name(), model.kind_name());
        let got = loaded.predict(&probe).unwrap();
        assert_eq!(got, expect, "spec {i} predictions changed after reload");
    }
}

#[test]
fn mlp_document_preserves_predictions() {
    let dir = tmp("mlp_json");
    let path = dir.join("model_mlp.json");
    let net = mlp::init_mlp(77);
    let probe = {
        let mut rng = Rng::seed_from_u64(11);
        Matrix::from_vec(5, 10, (0..50).map(|_| rng.uniform(-1.0, 1.0)).collect()).unwrap()
    };
    let expect = mlp::forward(&net, &probe).unwrap();
    jsonio::save_model(&path, &TrainedModel::Mlp(net), Some(0.1)).unwrap();
    let loaded = jsonio::load_model(&path).unwrap();
    assert_eq!(loaded.kind_name(), "mlp");
    assert_eq!(loaded.predict(&probe).unwrap(), expect);
}

#[test]
fn roi_document_round_trip_and_validation() {
    let dir = tmp("roi_json");
    let path = dir.join("rois.json");
    let rois = vec![
        RoiRect::new(Label::Void, 1, 2, 3, 4),
        RoiRect::new(Label::Solid, 5, 6, 7, 8),
    ];
    jsonio::save_rois(&path, &rois).unwrap();
    assert_eq!(jsonio::load_rois(&path).unwrap(), rois);
    fs::write(&path, r#"[{"label":7,"r0":0,"c0":0,"r1":1,"c1":1}]"#).unwrap();
    assert!(jsonio::load_rois(&path).is_err());
}

#[test]
fn scene_document_round_trip() {
    let dir = tmp("scene_json");
    let path = dir.join("scene.json");
    let scene = ScenePreset::B.scene(123);
    jsonio::save_scene(&path, &scene).unwrap();
    assert_eq!(jsonio::load_scene(&path).unwrap(), scene);
}

#[test]
fn mask_pgm_coding_levels() {
    let mut mask = LabelMask::new_unlabeled(1, 3);
    mask.set(0, 0, CellLabel::Known(Label::Solid));
    mask.set(0, 1, CellLabel::Known(Label::Void));
    let dir = tmp("mask_levels");
    let path = dir.join("m.pgm");
    pgm::write_mask(&path, &mask).unwrap();
    let bytes = fs::read(&path).unwrap();
    assert_eq!(&bytes[bytes.len() - 3..], &[0u8, 255, 128]);
}
