//! In-process pipeline contract tests on small scenes: artifact inventory,
//! prediction-range sanity, input immutability, and rerun determinism.

use std::fs;
use std::path::{Path, PathBuf};

use tct::jsonio;
use tct::pipeline::{run_pipeline, DatasetSource, PipelineConfig};
use tct_core::labeling::{Label, RoiRect};
use tct_core::synth::{ScenePreset, SynthScene};

fn tmp(name: &str) -> PathBuf {
    let dir = PathBuf::from(env!("CARGO_TARGET_TMPDIR")).join(name);
    let _ = fs::remove_dir_all(&dir);
    fs::create_dir_all(&dir).unwrap();
    dir
}

fn quick_scene(seed: u64, mirrored: bool, initial: f64, duration: f64) -> SynthScene {
    let mut scene = ScenePreset::A.scene(seed);
    scene.height = 24;
    scene.width = 40;
    scene.duration = duration;
    scene.initial = initial;
    scene.ambient = initial;
    // Short heatings need a shallow gap for the contrast to develop.
    scene.cover_depth = 0.015;
    scene.void_rois = vec![
        RoiRect::new(Label::Void, 6, 9, 18, 16),
        RoiRect::new(Label::Void, 6, 24, 18, 31),
    ];
    if mirrored {
        scene.void_rois = scene
            .void_rois
            .iter()
            .map(|r| r.mirrored_horizontal(scene.width))
            .collect();
    }
    scene
}

fn write_scenes(dir: &Path) -> (PathBuf, PathBuf, PathBuf) {
    let train = dir.join("scene_train.json");
    let warm = dir.join("scene_warm.json");
    let flipped = dir.join("scene_flipped.json");
    jsonio::save_scene(&train, &quick_scene(1, false, 28.0, 400.0)).unwrap();
    jsonio::save_scene(&warm, &quick_scene(2, false, 26.0, 600.0)).unwrap();
    jsonio::save_scene(&flipped, &quick_scene(3, true, 25.0, 300.0)).unwrap();
    (train, warm, flipped)
}

fn mlp_config(dir: &Path, out: PathBuf) -> PipelineConfig {
    let (train, warm, flipped) = write_scenes(dir);
    PipelineConfig {
        train: DatasetSource::Scene { scene: train },
        predict: vec![
            DatasetSource::Scene { scene: warm },
            DatasetSource::Scene { scene: flipped },
        ],
        rois: None,
        bin_window: 1,
        k: 10,
        variance_threshold: None,
        models: vec!["mlp".into()],
        hyper: Default::default(),
        mlp: Default::default(),
        threshold: 0.5,
        cv: false,
        out_dir: out,
        seed: 9,
    }
}

#[test]
fn mlp_replay_produces_the_expected_artifacts() {
    let dir = tmp("e2e_artifacts");
    let config = mlp_config(&dir, dir.join("out"));
    let scene_bytes = fs::read(dir.join("scene_train.json")).unwrap();
    let outcome = run_pipeline(&config, 1).unwrap();

    // Three detection maps (train + two predictions), one training report,
    // two segmentation reports, and the manifest.
    let maps: Vec<&String> = outcome
        .artifacts
        .iter()
        .filter(|a| a.ends_with("map_mlp.csv"))
        .collect();
    assert_eq!(maps.len(), 3, "maps: {maps:?}");
    let segs: Vec<&String> = outcome
        .artifacts
        .iter()
        .filter(|a| a.ends_with("seg_mlp.csv"))
        .collect();
    assert_eq!(segs.len(), 2, "segs: {segs:?}");
    assert!(outcome
        .artifacts
        .iter()
        .any(|a| a.ends_with("mlp_train_report.csv")));
    assert!(outcome.artifacts.iter().any(|a| a == "manifest.json"));
    for artifact in &outcome.artifacts {
        assert!(
            outcome.out_dir.join(artifact).exists(),
            "listed artifact {artifact} missing on disk"
        );
    }

    // Inputs are never mutated.
    assert_eq!(fs::read(dir.join("scene_train.json")).unwrap(), scene_bytes);

    // Cross-dataset predictions stay close to the [0, 1] label range.
    for name in &outcome.predict_names {
        let map_path = outcome.out_dir.join(name).join("map_mlp.csv");
        let map = tct::csvio::read_map(&map_path, "mlp").unwrap();
        for &v in map.values() {
            assert!((-0.5..=1.5).contains(&v), "{name}: prediction {v} far outside [0,1]");
        }
    }
}

#[test]
fn rerun_with_same_seed_is_byte_identical() {
    let dir = tmp("e2e_determinism");
    let first = mlp_config(&dir, dir.join("one"));
    let outcome_one = run_pipeline(&first, 1).unwrap();
    let mut second = first.clone();
    second.out_dir = dir.join("two");
    let outcome_two = run_pipeline(&second, 2).unwrap();
    assert_eq!(outcome_one.artifacts, outcome_two.artifacts);
    for artifact in &outcome_one.artifacts {
        let a = fs::read(outcome_one.out_dir.join(artifact)).unwrap();
        let b = fs::read(outcome_two.out_dir.join(artifact)).unwrap();
        assert_eq!(a, b, "artifact {artifact} differs across reruns");
    }
}

#[test]
fn mid_pipeline_failure_keeps_partial_artifacts_and_names_the_stage() {
    let dir = tmp("e2e_partial_failure");
    // The second dataset has only 8 frames: ten components cannot be fitted,
    // so the run dies in the predict stage after training completed.
    let mut short = quick_scene(8, false, 28.0, 40.0);
    short.noise_sigma = 0.0;
    let short_path = dir.join("scene_short.json");
    jsonio::save_scene(&short_path, &short).unwrap();
    let mut config = mlp_config(&dir, dir.join("out"));
    config.models = vec!["linear".into()];
    config.predict = vec![DatasetSource::Scene { scene: short_path }];

    let err = run_pipeline(&config, 1).unwrap_err();
    let msg = err.to_string();
    assert!(msg.contains("stage predict"), "error lacks stage name: {msg}");

    let manifest: serde_json::Value = serde_json::from_str(
        &fs::read_to_string(dir.join("out/manifest.json")).unwrap(),
    )
    .unwrap();
    assert_eq!(manifest["status"], "failed");
    assert_eq!(manifest["failed_stage"], "predict");
    // Artifacts from the completed training stage survive.
    assert!(dir.join("out/train/model_linear.json").exists());
    assert!(dir.join("out/train/map_linear.csv").exists());
}

#[test]
fn variance_threshold_selects_k_and_blocks_mlp() {
    let dir = tmp("e2e_variance");
    // Noiseless scene: a couple of components carry all the variance.
    let mut scene = quick_scene(4, false, 28.0, 400.0);
    scene.noise_sigma = 0.0;
    let scene_path = dir.join("scene_clean.json");
    jsonio::save_scene(&scene_path, &scene).unwrap();
    let mut config = mlp_config(&dir, dir.join("out"));
    config.train = DatasetSource::Scene { scene: scene_path };
    config.predict.clear();
    config.variance_threshold = Some(0.95);
    // Variance selection on a clean synthetic scene picks far fewer than 10
    // components, which the fixed-width mlp must reject.
    let err = run_pipeline(&config, 1).unwrap_err();
    assert_eq!(err.exit_code(), 2, "expected a config error, got {err}");
    // Classical models accept the selected width.
    config.models = vec!["linear".into()];
    let outcome = run_pipeline(&config, 1).unwrap();
    assert!(outcome.selected_k < 10, "selected k = {}", outcome.selected_k);
    assert!(outcome.train_rmse["linear"] < 0.25);
}
