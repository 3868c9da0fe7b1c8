//! End-to-end orchestration: ingest or synthesize datasets, reduce with
//! per-dataset PCA, train the requested models on the labeled regions, and
//! predict full-frame detection maps with reports.
//!
//! One master seed fans out deterministically to every stochastic stage, so
//! a config file plus its seed reproduces every artifact byte for byte.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use tct_core::cube::{bin_spatial, mean_curve, to_raster, ThermalCube};
use tct_core::eval::{segmentation_metrics, DetectionMap, SegReport};
use tct_core::labeling::{extract_training_set, rasterize_rois, LabelMask};
use tct_core::mlp;
use tct_core::models::{
    self, BaggedTreesParams, KernelKind, ModelSpec, DEFAULT_HUBER_DELTA, DEFAULT_MIN_LEAF,
    DEFAULT_N_TREES, DEFAULT_RIDGE_LAMBDA,
};
use tct_core::pct::{fit_pca, select_k, standardize, transform, FeatureMatrix, PcaModel};
use tct_core::rng::derive_seed;
use tct_core::synth::{self, ScenePreset, SynthScene};

use crate::csvio;
use crate::error::{CliError, Result};
use crate::jsonio::{self, TrainedModel};
use crate::manifest::Manifest;
use crate::pgm;
use crate::tcub;
use crate::threads::generate_cube_with_threads;

/// One dataset reference in the config: a named synthetic preset, a scene
/// file to synthesize, or an existing cube (with optional ground truth).
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(untagged)]
pub enum DatasetSource {
    Preset { preset: String },
    Scene { scene: PathBuf },
    Cube {
        cube: PathBuf,
        #[serde(default)]
        mask: Option<PathBuf>,
    },
}

impl DatasetSource {
    fn label(&self) -> String {
        match self {
            DatasetSource::Preset { preset } => preset.clone(),
            DatasetSource::Scene { scene } => stem_of(scene),
            DatasetSource::Cube { cube, .. } => stem_of(cube),
        }
    }

    fn describe(&self) -> String {
        match self {
            DatasetSource::Preset { preset } => format!("preset:{preset}"),
            DatasetSource::Scene { scene } => format!("scene:{}", scene.display()),
            DatasetSource::Cube { cube, mask } => match mask {
                Some(m) => format!("cube:{} mask:{}", cube.display(), m.display()),
                None => format!("cube:{}", cube.display()),
            },
        }
    }
}

fn stem_of(path: &Path) -> String {
    path.file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "dataset".to_string())
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct HyperConfig {
    #[serde(default = "default_huber_delta")]
    pub huber_delta: f64,
    #[serde(default = "default_lambda")]
    pub lambda: f64,
    /// RBF width; `None` means 1/k.
    #[serde(default)]
    pub gamma: Option<f64>,
    #[serde(default = "default_n_trees")]
    pub n_trees: usize,
    #[serde(default = "default_min_leaf")]
    pub min_leaf: usize,
    #[serde(default)]
    pub max_depth: Option<usize>,
}

fn default_huber_delta() -> f64 {
    DEFAULT_HUBER_DELTA
}
fn default_lambda() -> f64 {
    DEFAULT_RIDGE_LAMBDA
}
fn default_n_trees() -> usize {
    DEFAULT_N_TREES
}
fn default_min_leaf() -> usize {
    DEFAULT_MIN_LEAF
}

impl Default for HyperConfig {
    fn default() -> Self {
        HyperConfig {
            huber_delta: DEFAULT_HUBER_DELTA,
            lambda: DEFAULT_RIDGE_LAMBDA,
            gamma: None,
            n_trees: DEFAULT_N_TREES,
            min_leaf: DEFAULT_MIN_LEAF,
            max_depth: None,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MlpHyper {
    #[serde(default = "d_lr0")]
    pub lr0: f64,
    #[serde(default = "d_lr_inc")]
    pub lr_inc: f64,
    #[serde(default = "d_lr_dec")]
    pub lr_dec: f64,
    #[serde(default = "d_max_perf_inc")]
    pub max_perf_inc: f64,
    #[serde(default = "d_momentum")]
    pub momentum: f64,
    #[serde(default = "d_max_epochs")]
    pub max_epochs: usize,
    #[serde(default)]
    pub goal: f64,
    #[serde(default = "d_min_grad")]
    pub min_grad: f64,
    #[serde(default = "d_max_fail")]
    pub max_fail: usize,
}

fn d_lr0() -> f64 {
    0.01
}
fn d_lr_inc() -> f64 {
    1.05
}
fn d_lr_dec() -> f64 {
    0.7
}
fn d_max_perf_inc() -> f64 {
    1.04
}
fn d_momentum() -> f64 {
    0.9
}
fn d_max_epochs() -> usize {
    1000
}
fn d_min_grad() -> f64 {
    1e-5
}
fn d_max_fail() -> usize {
    6
}

impl Default for MlpHyper {
    fn default() -> Self {
        MlpHyper {
            lr0: d_lr0(),
            lr_inc: d_lr_inc(),
            lr_dec: d_lr_dec(),
            max_perf_inc: d_max_perf_inc(),
            momentum: d_momentum(),
            max_epochs: d_max_epochs(),
            goal: 0.0,
            min_grad: d_min_grad(),
            max_fail: d_max_fail(),
        }
    }
}

impl MlpHyper {
    fn to_train_config(&self, seed: u64) -> mlp::TrainConfig {
        mlp::TrainConfig {
            lr0: self.lr0,
            lr_inc: self.lr_inc,
            lr_dec: self.lr_dec,
            max_perf_inc: self.max_perf_inc,
            momentum: self.momentum,
            max_epochs: self.max_epochs,
            goal: self.goal,
            min_grad: self.min_grad,
            max_fail: self.max_fail,
            split: (0.70, 0.15, 0.15),
            seed,
        }
    }
}

pub const ALL_MODEL_KINDS: [&str; 6] = [
    "linear",
    "robust_linear",
    "kernel_quadratic",
    "kernel_rbf",
    "bagged_trees",
    "mlp",
];

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PipelineConfig {
    pub train: DatasetSource,
    #[serde(default)]
    pub predict: Vec<DatasetSource>,
    /// ROI file for training labels; defaults to the synthetic scene's
    /// derived training regions.
    #[serde(default)]
    pub rois: Option<PathBuf>,
    #[serde(default = "default_bin")]
    pub bin_window: usize,
    #[serde(default = "default_k")]
    pub k: usize,
    /// When set, k is chosen as the smallest count explaining this fraction
    /// of variance instead of the fixed `k`.
    #[serde(default)]
    pub variance_threshold: Option<f64>,
    #[serde(default = "default_models")]
    pub models: Vec<String>,
    #[serde(default)]
    pub hyper: HyperConfig,
    #[serde(default)]
    pub mlp: MlpHyper,
    #[serde(default = "default_threshold")]
    pub threshold: f64,
    #[serde(default)]
    pub cv: bool,
    pub out_dir: PathBuf,
    pub seed: u64,
}

fn default_bin() -> usize {
    1
}
fn default_k() -> usize {
    10
}
fn default_threshold() -> f64 {
    0.5
}
fn default_models() -> Vec<String> {
    vec!["all".to_string()]
}

impl PipelineConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path)?;
        serde_json::from_str(&text)
            .map_err(|e| CliError::config(format!("{}: {e}", path.display())))
    }

    fn model_kinds(&self) -> Result<Vec<String>> {
        let mut kinds = Vec::new();
        for name in &self.models {
            if name == "all" {
                kinds.extend(ALL_MODEL_KINDS.iter().map(|s| s.to_string()));
            } else if ALL_MODEL_KINDS.contains(&name.as_str()) {
                kinds.push(name.clone());
            } else {
                return Err(CliError::config(format!(
                    "unknown model kind '{name}' (known: {})",
                    ALL_MODEL_KINDS.join(", ")
                )));
            }
        }
        kinds.dedup();
        if kinds.is_empty() {
            return Err(CliError::config("no model kinds requested"));
        }
        Ok(kinds)
    }
}

/// In-memory results of a run, alongside the on-disk artifacts.
#[derive(Debug)]
pub struct PipelineOutcome {
    pub out_dir: PathBuf,
    /// Training-set RMSE per model kind.
    pub train_rmse: BTreeMap<String, f64>,
    /// Dataset name -> model kind -> segmentation report (datasets with
    /// ground truth only).
    pub seg: BTreeMap<String, BTreeMap<String, SegReport>>,
    /// Prediction dataset names in config order.
    pub predict_names: Vec<String>,
    pub selected_k: usize,
    pub artifacts: Vec<String>,
}

/// FNV-1a of the stage name, used to tag per-stage seed streams.
fn stage_tag(name: &str) -> u64 {
    let mut hash = 0xcbf2_9ce4_8422_2325u64;
    for b in name.as_bytes() {
        hash ^= *b as u64;
        hash = hash.wrapping_mul(0x0100_0000_01b3);
    }
    hash
}

fn stage_seed(master: u64, name: &str) -> u64 {
    derive_seed(master, stage_tag(name))
}

struct DatasetHandle {
    name: String,
    cube: ThermalCube,
    truth: Option<LabelMask>,
    scene: Option<SynthScene>,
    dir: PathBuf,
}

struct Run<'a> {
    config: &'a PipelineConfig,
    threads: usize,
    manifest: Manifest,
    stage: String,
    out_dir: PathBuf,
}

impl<'a> Run<'a> {
    fn enter(&mut self, stage: &str) {
        self.stage = stage.to_string();
    }

    fn record(&mut self, relative: &Path) {
        self.manifest.record_artifact(relative.to_string_lossy());
    }

    fn reldir(&self, dir: &Path, file: &str) -> (PathBuf, PathBuf) {
        let abs = dir.join(file);
        let rel = abs
            .strip_prefix(&self.out_dir)
            .map(Path::to_path_buf)
            .unwrap_or_else(|_| abs.clone());
        (abs, rel)
    }

    fn write_artifact<F>(&mut self, dir: &Path, file: &str, write: F) -> Result<PathBuf>
    where
        F: FnOnce(&Path) -> Result<()>,
    {
        let (abs, rel) = self.reldir(dir, file);
        write(&abs)?;
        self.record(&rel);
        Ok(abs)
    }

    /// Loads or synthesizes one dataset, writing generation artifacts.
    fn resolve_dataset(
        &mut self,
        source: &DatasetSource,
        name: &str,
        seed_stage: &str,
    ) -> Result<DatasetHandle> {
        let dir = self.out_dir.join(name);
        fs::create_dir_all(&dir)?;
        self.manifest.inputs.push(format!("{name} = {}", source.describe()));

        let scene = match source {
            DatasetSource::Preset { preset } => {
                let preset = ScenePreset::parse(preset)?;
                let seed = stage_seed(self.config.seed, seed_stage);
                self.manifest.stage_seeds.insert(seed_stage.to_string(), seed);
                Some(preset.scene(seed))
            }
            DatasetSource::Scene { scene } => Some(jsonio::load_scene(scene)?),
            DatasetSource::Cube { .. } => None,
        };

        let (cube, truth) = match (source, &scene) {
            (DatasetSource::Cube { cube, mask }, _) => {
                let loaded = tcub::load_cube(cube)?;
                let truth = mask.as_deref().map(pgm::read_mask).transpose()?;
                (loaded, truth)
            }
            (_, Some(scene)) => {
                let (cube, mask) = generate_cube_with_threads(scene, self.threads)?;
                (cube, Some(mask))
            }
            _ => unreachable!("non-cube sources always build a scene"),
        };

        if let Some(scene) = &scene {
            self.write_artifact(&dir, "scene.json", |p| jsonio::save_scene(p, scene))?;
            self.write_artifact(&dir, "cube.tcub", |p| tcub::save_cube(p, &cube))?;
        }
        if let Some(truth) = &truth {
            self.write_artifact(&dir, "truth.pgm", |p| pgm::write_mask(p, truth))?;
        }
        let curve = mean_curve(&cube);
        self.write_artifact(&dir, "mean_curve.csv", |p| csvio::write_mean_curve(p, &curve))?;

        Ok(DatasetHandle {
            name: name.to_string(),
            cube,
            truth,
            scene,
            dir,
        })
    }

    /// Bin, unfold, fit per-dataset PCA with the given component count, and
    /// standardize. Writes the PCA document.
    fn reduce(
        &mut self,
        handle: &DatasetHandle,
        k: usize,
    ) -> Result<(PcaModel, FeatureMatrix, (usize, usize))> {
        let binned = if self.config.bin_window > 1 {
            bin_spatial(&handle.cube, self.config.bin_window)?
        } else {
            handle.cube.clone()
        };
        let dims = (binned.height(), binned.width());
        let raster = to_raster(&binned);
        let model = fit_pca(&raster, k)?;
        let features = standardize(&transform(&model, &raster)?);
        self.write_artifact(&handle.dir, "pca.json", |p| jsonio::save_pca(p, &model))?;
        Ok((model, features, dims))
    }

    fn truth_after_binning(&self, handle: &DatasetHandle) -> Result<Option<LabelMask>> {
        match (&handle.truth, self.config.bin_window) {
            (None, _) => Ok(None),
            (Some(mask), 1) => Ok(Some(mask.clone())),
            (Some(_), _) => Err(CliError::config(
                "ground-truth masks for binned runs are not supported; \
                 supply truth at the binned resolution",
            )),
        }
    }
}

/// Runs the full pipeline. On failure the manifest is still written, marked
/// with the failing stage, and partial artifacts are retained.
pub fn run_pipeline(config: &PipelineConfig, threads: usize) -> Result<PipelineOutcome> {
    let out_dir = config.out_dir.clone();
    fs::create_dir_all(&out_dir)?;
    let mut run = Run {
        config,
        threads,
        manifest: Manifest::new(config.seed),
        stage: "config".to_string(),
        out_dir: out_dir.clone(),
    };
    let result = run_stages(&mut run);
    let manifest_path = out_dir.join("manifest.json");
    match result {
        Ok(mut outcome) => {
            run.manifest.record_artifact("manifest.json");
            run.manifest.write(&manifest_path)?;
            outcome.artifacts = run.manifest.artifacts.clone();
            Ok(outcome)
        }
        Err(err) => {
            let stage = run.stage.clone();
            run.manifest.mark_failed(&stage, &err.to_string());
            run.manifest.record_artifact("manifest.json");
            // Best effort: the manifest write must not mask the stage error.
            let _ = run.manifest.write(&manifest_path);
            Err(CliError::stage(stage, err))
        }
    }
}

fn run_stages(run: &mut Run) -> Result<PipelineOutcome> {
    let config = run.config;
    run.enter("config");
    let kinds = config.model_kinds()?;
    if config.bin_window < 1 {
        return Err(CliError::config("bin_window must be at least 1"));
    }
    if config.variance_threshold.is_none() && config.k < 1 {
        return Err(CliError::config("k must be at least 1"));
    }

    run.enter("ingest");
    let train = run.resolve_dataset(&config.train, "train", "scene_train")?;

    run.enter("pca");
    let k = match config.variance_threshold {
        Some(threshold) => {
            // Fit the full spectrum once to pick k, then refit truncated.
            let binned = if config.bin_window > 1 {
                bin_spatial(&train.cube, config.bin_window)?
            } else {
                train.cube.clone()
            };
            let raster = to_raster(&binned);
            let full_k = raster.n_pixels().min(raster.n_frames());
            let full = fit_pca(&raster, full_k)?;
            select_k(full.explained_ratio(), threshold)?
        }
        None => config.k,
    };
    if kinds.iter().any(|m| m == "mlp") && k != mlp::LAYER_SIZES[0] {
        return Err(CliError::config(format!(
            "the mlp architecture takes exactly {} components, but k = {k}",
            mlp::LAYER_SIZES[0]
        )));
    }
    let (_train_pca, train_features, train_dims) = run.reduce(&train, k)?;

    run.enter("label");
    let rois = match (&config.rois, &train.scene) {
        (Some(path), _) => jsonio::load_rois(path)?,
        (None, Some(scene)) => {
            let rois = synth::training_rois(scene)?;
            run.write_artifact(&train.dir.clone(), "rois.json", |p| {
                jsonio::save_rois(p, &rois)
            })?;
            rois
        }
        (None, None) => {
            return Err(CliError::config(
                "cube datasets need an explicit ROI file for training labels",
            ))
        }
    };
    let roi_mask = rasterize_rois(&rois, train_dims.0, train_dims.1)?;
    let (x, y) = extract_training_set(&train_features, &roi_mask)?;

    run.enter("train");
    let gamma = config.hyper.gamma.unwrap_or(1.0 / k as f64);
    let mut trained: Vec<(String, TrainedModel, f64)> = Vec::new();
    let mut outcome = PipelineOutcome {
        out_dir: run.out_dir.clone(),
        train_rmse: BTreeMap::new(),
        seg: BTreeMap::new(),
        predict_names: Vec::new(),
        selected_k: k,
        artifacts: Vec::new(),
    };

    for kind in &kinds {
        let (model, train_rmse) = if kind == "mlp" {
            let init_seed = stage_seed(config.seed, "mlp_init");
            let split_seed = stage_seed(config.seed, "mlp_split");
            run.manifest.stage_seeds.insert("mlp_init".into(), init_seed);
            run.manifest.stage_seeds.insert("mlp_split".into(), split_seed);
            let net = mlp::init_mlp(init_seed);
            let train_cfg = config.mlp.to_train_config(split_seed);
            let (net, report) = mlp::train(net, &x, &y, &train_cfg)?;
            run.write_artifact(&train.dir.clone(), "mlp_train_report.csv", |p| {
                csvio::write_train_report(p, &report)
            })?;
            let outputs = mlp::forward(&net, &x)?;
            run.write_artifact(&train.dir.clone(), "mlp_error_histogram.csv", |p| {
                csvio::write_error_histogram(p, &outputs, &y, &report)
            })?;
            let rmse = tct_core::eval::rmse(&outputs, &y)?;
            (TrainedModel::Mlp(net), rmse)
        } else {
            let spec = classical_spec(kind, config, gamma)?;
            if let ModelSpec::BaggedTrees(params) = &spec {
                run.manifest.stage_seeds.insert("trees".into(), params.seed);
            }
            let reg = models::fit(&x, &y, &spec)?;
            if config.cv {
                let cv_seed = stage_seed(config.seed, &format!("cv_{kind}"));
                run.manifest
                    .stage_seeds
                    .insert(format!("cv_{kind}"), cv_seed);
                let report = models::cross_validate(&x, &y, &spec, cv_seed)?;
                run.write_artifact(&train.dir.clone(), &format!("cv_{kind}.csv"), |p| {
                    csvio::write_cv_report(p, &report)
                })?;
            }
            let rmse = reg.train_rmse;
            (TrainedModel::Regressor(reg), rmse)
        };

        run.write_artifact(&train.dir.clone(), &format!("model_{kind}.json"), |p| {
            jsonio::save_model(p, &model, Some(train_rmse))
        })?;
        outcome.train_rmse.insert(kind.clone(), train_rmse);

        let map = predict_full_frame(&model, &train_features, train_dims)?;
        write_map_artifacts(run, &train.dir.clone(), kind, &map)?;
        trained.push((kind.clone(), model, train_rmse));
    }

    for (i, source) in config.predict.iter().enumerate() {
        run.enter("predict");
        let name = format!("predict_{}_{}", i + 1, source.label());
        let seed_stage = format!("scene_predict_{}", i + 1);
        let handle = run.resolve_dataset(source, &name, &seed_stage)?;
        let (_pca, features, dims) = run.reduce(&handle, k)?;
        let truth = run.truth_after_binning(&handle)?;
        outcome.predict_names.push(handle.name.clone());

        run.enter("eval");
        for (kind, model, _) in &trained {
            let map = predict_full_frame(model, &features, dims)?;
            write_map_artifacts(run, &handle.dir.clone(), kind, &map)?;
            if let Some(truth) = &truth {
                let report = segmentation_metrics(&map, truth, config.threshold)?;
                run.write_artifact(&handle.dir.clone(), &format!("seg_{kind}.csv"), |p| {
                    csvio::write_seg_report(p, kind, &handle.name, &report)
                })?;
                outcome
                    .seg
                    .entry(handle.name.clone())
                    .or_default()
                    .insert(kind.clone(), report);
            }
        }
    }

    Ok(outcome)
}

fn classical_spec(kind: &str, config: &PipelineConfig, gamma: f64) -> Result<ModelSpec> {
    Ok(match kind {
        "linear" => ModelSpec::Linear,
        "robust_linear" => ModelSpec::RobustLinear {
            delta: config.hyper.huber_delta,
        },
        "kernel_quadratic" => ModelSpec::Kernel {
            kernel: KernelKind::Quadratic,
            lambda: config.hyper.lambda,
            gamma,
        },
        "kernel_rbf" => ModelSpec::Kernel {
            kernel: KernelKind::Rbf,
            lambda: config.hyper.lambda,
            gamma,
        },
        "bagged_trees" => ModelSpec::BaggedTrees(BaggedTreesParams {
            n_trees: config.hyper.n_trees,
            max_depth: config.hyper.max_depth,
            min_leaf: config.hyper.min_leaf,
            bootstrap: true,
            seed: stage_seed(config.seed, "trees"),
        }),
        other => return Err(CliError::config(format!("unknown model kind '{other}'"))),
    })
}

/// Full-frame detection map from standardized features.
pub fn predict_full_frame(
    model: &TrainedModel,
    features: &FeatureMatrix,
    dims: (usize, usize),
) -> Result<DetectionMap> {
    match model {
        TrainedModel::Mlp(net) => Ok(mlp::predict_map(net, features, dims)?),
        TrainedModel::Regressor(reg) => {
            let values = models::predict(reg, features.scores())?;
            Ok(DetectionMap::new(dims.0, dims.1, values, reg.kind.name())?)
        }
    }
}

fn write_map_artifacts(run: &mut Run, dir: &Path, kind: &str, map: &DetectionMap) -> Result<()> {
    run.write_artifact(dir, &format!("map_{kind}.csv"), |p| csvio::write_map(p, map))?;
    run.write_artifact(dir, &format!("map_{kind}.pgm"), |p| pgm::write_map(p, map))?;
    Ok(())
}

impl CliError {
    /// Wraps an error with the pipeline stage it occurred in, preserving the
    /// failure class (and so the exit code).
    fn stage(stage: String, err: CliError) -> CliError {
        let msg = format!("stage {stage}: {err}");
        match err {
            CliError::Config(_) => CliError::Config(msg),
            CliError::Data(_) => CliError::Data(msg),
            CliError::Format(_) => CliError::Format(msg),
            CliError::Numeric(_) => CliError::Numeric(msg),
            CliError::Io(_) => CliError::Io(msg),
        }
    }
}
