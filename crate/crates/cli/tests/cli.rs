//! Smoke tests of the `tct` binary: subcommand wiring and exit codes.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::Command;

fn tmp(name: &str) -> PathBuf {
    let dir = PathBuf::from(env!("CARGO_TARGET_TMPDIR")).join(name);
    let _ = fs::remove_dir_all(&dir);
    fs::create_dir_all(&dir).unwrap();
    dir
}

fn tct() -> Command {
    Command::new(env!("CARGO_BIN_EXE_tct"))
}

fn write_quick_scene(dir: &Path) -> PathBuf {
    // A small, fast scene derived from preset A.
    let path = dir.join("scene.json");
    let scene = {
        let mut s = tct_core::synth::ScenePreset::A.scene(5);
        s.height = 24;
        s.width = 40;
        s.duration = 400.0;
        s.cover_depth = 0.015;
        s.void_rois = vec![
            tct_core::labeling::RoiRect::new(tct_core::labeling::Label::Void, 6, 9, 18, 16),
            tct_core::labeling::RoiRect::new(tct_core::labeling::Label::Void, 6, 24, 18, 31),
        ];
        s
    };
    tct::jsonio::save_scene(&path, &scene).unwrap();
    path
}

#[test]
fn synth_writes_expected_artifacts() {
    let dir = tmp("cli_synth");
    let scene = write_quick_scene(&dir);
    let out = dir.join("out");
    let status = tct()
        .args(["synth", "--scene"])
        .arg(&scene)
        .arg("--out-dir")
        .arg(&out)
        .arg("--emit-rois")
        .status()
        .unwrap();
    assert!(status.success());
    for file in ["scene.json", "cube.tcub", "truth.pgm", "mean_curve.csv", "rois.json"] {
        assert!(out.join(file).exists(), "missing {file}");
    }
}

#[test]
fn pca_train_predict_eval_chain() {
    let dir = tmp("cli_chain");
    let scene = write_quick_scene(&dir);
    let out = dir.join("out");
    assert!(tct()
        .args(["synth", "--scene"])
        .arg(&scene)
        .arg("--out-dir")
        .arg(&out)
        .arg("--emit-rois")
        .status()
        .unwrap()
        .success());

    let cube = out.join("cube.tcub");
    let pca = out.join("pca.json");
    assert!(tct()
        .args(["pca", "--cube"])
        .arg(&cube)
        .args(["--k", "10"])
        .arg("--out-model")
        .arg(&pca)
        .arg("--out-scores")
        .arg(out.join("scores.csv"))
        .status()
        .unwrap()
        .success());
    assert!(pca.exists());
    let scores = fs::read_to_string(out.join("scores.csv")).unwrap();
    assert!(scores.starts_with("pc1,pc2,"));
    assert_eq!(scores.lines().count(), 24 * 40 + 1);

    let train_dir = dir.join("train_out");
    assert!(tct()
        .args(["train", "--cube"])
        .arg(&cube)
        .arg("--rois")
        .arg(out.join("rois.json"))
        .args(["--models", "linear,kernel_rbf", "--seed", "7", "--cv"])
        .arg("--out-dir")
        .arg(&train_dir)
        .status()
        .unwrap()
        .success());
    let model = train_dir.join("train").join("model_linear.json");
    assert!(model.exists());
    assert!(train_dir.join("train").join("cv_linear.csv").exists());

    let map_csv = dir.join("map.csv");
    assert!(tct()
        .args(["predict", "--cube"])
        .arg(&cube)
        .arg("--model")
        .arg(&model)
        .arg("--out-csv")
        .arg(&map_csv)
        .arg("--out-pgm")
        .arg(dir.join("map.pgm"))
        .status()
        .unwrap()
        .success());

    let output = tct()
        .args(["eval", "--map"])
        .arg(&map_csv)
        .arg("--truth")
        .arg(out.join("truth.pgm"))
        .arg("--out")
        .arg(dir.join("seg.csv"))
        .output()
        .unwrap();
    assert!(output.status.success());
    let text = String::from_utf8_lossy(&output.stdout);
    assert!(text.contains("iou"), "eval output: {text}");
    assert!(dir.join("seg.csv").exists());
}

#[test]
fn pipeline_without_predictions_succeeds() {
    let dir = tmp("cli_pipeline_train_only");
    let scene = write_quick_scene(&dir);
    let config = dir.join("config.json");
    fs::write(
        &config,
        format!(
            r#"{{"train": {{"scene": "{}"}}, "models": ["linear"], "out_dir": "{}", "seed": 3}}"#,
            scene.display(),
            dir.join("out").display()
        ),
    )
    .unwrap();
    let status = tct()
        .args(["pipeline", "--config"])
        .arg(&config)
        .status()
        .unwrap();
    assert!(status.success());
    let manifest: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(dir.join("out/manifest.json")).unwrap()).unwrap();
    assert_eq!(manifest["status"], "ok");
    assert!(dir.join("out/train/model_linear.json").exists());
}

#[test]
fn pipeline_missing_cube_fails_in_ingest_stage() {
    let dir = tmp("cli_pipeline_missing");
    let config = dir.join("config.json");
    fs::write(
        &config,
        format!(
            r#"{{"train": {{"cube": "{}"}}, "models": ["linear"], "out_dir": "{}", "seed": 3}}"#,
            dir.join("nope.tcub").display(),
            dir.join("out").display()
        ),
    )
    .unwrap();
    let output = tct()
        .args(["pipeline", "--config"])
        .arg(&config)
        .output()
        .unwrap();
    assert!(!output.status.success());
    assert_ne!(output.status.code(), Some(0));
    let manifest: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(dir.join("out/manifest.json")).unwrap()).unwrap();
    assert_eq!(manifest["status"], "failed");
    assert_eq!(manifest["failed_stage"], "ingest");
}

#[test]
fn config_errors_exit_with_code_two() {
    let dir = tmp("cli_config_error");
    let config = dir.join("config.json");
    fs::write(
        &config,
        format!(
            r#"{{"train": {{"preset": "Z"}}, "models": ["linear"], "out_dir": "{}", "seed": 1}}"#,
            dir.join("out").display()
        ),
    )
    .unwrap();
    let output = tct()
        .args(["pipeline", "--config"])
        .arg(&config)
        .output()
        .unwrap();
    assert_eq!(output.status.code(), Some(2), "{output:?}");
}

#[test]
fn data_errors_exit_with_code_three() {
    let dir = tmp("cli_data_error");
    let bad = dir.join("bad.tcub");
    fs::write(&bad, b"XXXXgarbage-that-is-not-a-cube").unwrap();
    let output = tct()
        .args(["predict", "--cube"])
        .arg(&bad)
        .arg("--model")
        .arg(dir.join("missing.json"))
        .arg("--out-csv")
        .arg(dir.join("map.csv"))
        .output()
        .unwrap();
    // The model is read first and is missing -> i/o error (5); write the
    // model so the cube's format error (3) surfaces instead.
    assert_eq!(output.status.code(), Some(5));
    let net = tct_core::mlp::init_mlp(1);
    tct::jsonio::save_model(
        &dir.join("model.json"),
        &tct::jsonio::TrainedModel::Mlp(net),
        None,
    )
    .unwrap();
    let output = tct()
        .args(["predict", "--cube"])
        .arg(&bad)
        .arg("--model")
        .arg(dir.join("model.json"))
        .arg("--out-csv")
        .arg(dir.join("map.csv"))
        .output()
        .unwrap();
    assert_eq!(output.status.code(), Some(3), "{output:?}");
}

#[test]
fn invalid_threads_env_is_a_config_error() {
    let dir = tmp("cli_threads_env");
    let scene = write_quick_scene(&dir);
    let output = tct()
        .env("TCT_THREADS", "banana")
        .args(["synth", "--scene"])
        .arg(&scene)
        .arg("--out-dir")
        .arg(dir.join("out"))
        .output()
        .unwrap();
    assert_eq!(output.status.code(), Some(2), "{output:?}");
}
