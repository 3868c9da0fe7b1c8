//! Cross-validated training sanity on a synthetic scene: the full core-side
//! chain from cube to CV report, checking the error band every learner
//! should land in on labeled-region data.

use tct_core::cube::to_raster;
use tct_core::labeling::{extract_training_set, rasterize_rois, Label, RoiRect};
use tct_core::models::{self, BaggedTreesParams, KernelKind, ModelSpec, DEFAULT_HUBER_DELTA};
use tct_core::pct::{fit_pca, standardize, transform};
use tct_core::synth::{ScenePreset, SynthScene};

fn quick_scene() -> SynthScene {
    let mut scene = ScenePreset::A.scene(77);
    scene.height = 48;
    scene.width = 80;
    scene.duration = 600.0;
    scene.cover_depth = 0.015;
    scene.void_rois = vec![
        RoiRect::new(Label::Void, 12, 10, 33, 25),
        RoiRect::new(Label::Void, 12, 45, 33, 60),
    ];
    scene
}

/// The deterministic sign rule exists so that independently fitted bases
/// give comparable score features: void pixels must land on the same side
/// of the standardized first component in every dataset, or a model trained
/// on one recording would silently flip on another.
#[test]
fn score_polarity_is_stable_across_independent_fits() {
    for (seed, duration, initial) in [(5u64, 600.0, 28.0), (6, 900.0, 26.0), (7, 450.0, 25.0)] {
        let mut scene = quick_scene();
        scene.seed = seed;
        scene.duration = duration;
        scene.initial = initial;
        scene.ambient = initial;
        let (cube, mask) = tct_core::synth::generate_cube(&scene).unwrap();
        let raster = to_raster(&cube);
        let model = fit_pca(&raster, 10).unwrap();
        let features = standardize(&transform(&model, &raster).unwrap());
        let mut void_sum = 0.0;
        let mut void_n = 0.0;
        let mut solid_sum = 0.0;
        let mut solid_n = 0.0;
        for (p, cell) in mask.cells().iter().enumerate() {
            let score = features.scores().get(p, 0);
            match cell {
                tct_core::labeling::CellLabel::Known(Label::Void) => {
                    void_sum += score;
                    void_n += 1.0;
                }
                _ => {
                    solid_sum += score;
                    solid_n += 1.0;
                }
            }
        }
        let gap = void_sum / void_n - solid_sum / solid_n;
        assert!(
            gap > 1.0,
            "dataset (seed {seed}, {duration} s): void-solid score gap {gap:.3} \
             has the wrong polarity or no separation"
        );
    }
}

#[test]
fn cross_validated_rmse_stays_in_the_sanity_band() {
    let scene = quick_scene();
    let (cube, _) = tct_core::synth::generate_cube(&scene).unwrap();
    let raster = to_raster(&cube);
    let model = fit_pca(&raster, 10).unwrap();
    let features = standardize(&transform(&model, &raster).unwrap());
    let rois = tct_core::synth::training_rois(&scene).unwrap();
    let mask = rasterize_rois(&rois, scene.height, scene.width).unwrap();
    let (x, y) = extract_training_set(&features, &mask).unwrap();
    assert!(x.rows() >= 100, "labeled set too small: {}", x.rows());

    let specs = [
        ModelSpec::Linear,
        ModelSpec::RobustLinear {
            delta: DEFAULT_HUBER_DELTA,
        },
        ModelSpec::Kernel {
            kernel: KernelKind::Quadratic,
            lambda: 1e-3,
            gamma: 0.1,
        },
        ModelSpec::Kernel {
            kernel: KernelKind::Rbf,
            lambda: 1e-3,
            gamma: 0.1,
        },
        ModelSpec::BaggedTrees(BaggedTreesParams::defaults(3)),
    ];
    for spec in &specs {
        let report = models::cross_validate(&x, &y, spec, 11).unwrap();
        assert!(
            report.mean_rmse < 0.5,
            "{:?}: CV RMSE {} above the sanity band",
            spec.kind(),
            report.mean_rmse
        );
        // Continuous predictors cannot hit the 0/1 labels exactly; tree
        // ensembles can when every leaf is pure.
        if !matches!(spec, ModelSpec::BaggedTrees(_)) {
            assert!(
                report.mean_rmse > 0.0,
                "{:?}: CV RMSE exactly zero is implausible",
                spec.kind()
            );
        }
    }
}
