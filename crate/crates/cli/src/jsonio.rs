//! JSON documents for PCA models, trained models, ROI lists, and scenes.
//!
//! The on-disk schemas are explicit DTO structs (not the core types) so the
//! formats stay stable and versioned independently of internal layout.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};
use tct_core::labeling::{Label, RoiRect};
use tct_core::matrix::Matrix;
use tct_core::mlp::{self, MlpNetwork, LAYER_SIZES};
use tct_core::models::{
    BaggedTreesModel, BaggedTreesParams, KernelKind, KernelParams, LinearParams, ModelParams,
    RegressionTree, RegressorKind, TrainedRegressor, TreeNode,
};
use tct_core::pct::PcaModel;
use tct_core::synth::{Material, SynthScene};

use crate::error::{CliError, Result};

const DOC_VERSION: u32 = 1;

fn read_json<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<T> {
    let text = fs::read_to_string(path)?;
    serde_json::from_str(&text)
        .map_err(|e| CliError::format(format!("{}: {e}", path.display())))
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    fs::write(path, text)?;
    Ok(())
}

// ---------------------------------------------------------------------------
// PCA model

#[derive(Debug, Serialize, Deserialize)]
pub struct PcaModelDoc {
    pub version: u32,
    pub n_frames: usize,
    pub k: usize,
    pub mean: Vec<f64>,
    /// Row-major n_frames x k.
    pub loadings: Vec<f64>,
    pub singular_values: Vec<f64>,
    pub explained_ratio: Vec<f64>,
}

pub fn save_pca(path: &Path, model: &PcaModel) -> Result<()> {
    let doc = PcaModelDoc {
        version: DOC_VERSION,
        n_frames: model.n_frames(),
        k: model.k(),
        mean: model.mean().to_vec(),
        loadings: model.loadings().data().to_vec(),
        singular_values: model.singular_values().to_vec(),
        explained_ratio: model.explained_ratio().to_vec(),
    };
    write_json(path, &doc)
}

pub fn load_pca(path: &Path) -> Result<PcaModel> {
    let doc: PcaModelDoc = read_json(path)?;
    if doc.version != DOC_VERSION {
        return Err(CliError::format(format!(
            "{}: unsupported PCA document version {}",
            path.display(),
            doc.version
        )));
    }
    let loadings = Matrix::from_vec(doc.n_frames, doc.k, doc.loadings)
        .map_err(|e| CliError::format(format!("{}: {e}", path.display())))?;
    Ok(PcaModel::from_parts(
        doc.n_frames,
        doc.k,
        doc.mean,
        loadings,
        doc.singular_values,
        doc.explained_ratio,
    )?)
}

// ---------------------------------------------------------------------------
// Trained models (classical regressors and the MLP) in one tagged document.

#[derive(Debug, Clone)]
pub enum TrainedModel {
    Regressor(TrainedRegressor),
    Mlp(MlpNetwork),
}

impl TrainedModel {
    pub fn kind_name(&self) -> &'static str {
        match self {
            TrainedModel::Regressor(r) => r.kind.name(),
            TrainedModel::Mlp(_) => "mlp",
        }
    }

    pub fn n_features(&self) -> usize {
        match self {
            TrainedModel::Regressor(r) => r.n_features(),
            TrainedModel::Mlp(_) => LAYER_SIZES[0],
        }
    }

    pub fn predict(&self, x: &Matrix) -> Result<Vec<f64>> {
        Ok(match self {
            TrainedModel::Regressor(r) => tct_core::models::predict(r, x)?,
            TrainedModel::Mlp(net) => mlp::forward(net, x)?,
        })
    }
}

#[derive(Debug, Serialize, Deserialize)]
struct LinearDto {
    weights: Vec<f64>,
    intercept: f64,
    rank_deficient: bool,
    converged: bool,
    huber_delta: Option<f64>,
}

#[derive(Debug, Serialize, Deserialize)]
struct KernelDto {
    kernel: String,
    lambda: f64,
    gamma: f64,
    lambda_boosted: bool,
    support_rows: usize,
    support_cols: usize,
    /// Row-major support_rows x support_cols.
    support: Vec<f64>,
    alpha: Vec<f64>,
}

#[derive(Debug, Serialize, Deserialize)]
enum NodeDto {
    #[serde(rename = "split")]
    Split {
        feature: usize,
        threshold: f64,
        left: usize,
        right: usize,
    },
    #[serde(rename = "leaf")]
    Leaf { value: f64 },
}

#[derive(Debug, Serialize, Deserialize)]
struct TreesDto {
    n_trees: usize,
    max_depth: Option<usize>,
    min_leaf: usize,
    bootstrap: bool,
    seed: u64,
    n_features: usize,
    trees: Vec<Vec<NodeDto>>,
}

#[derive(Debug, Serialize, Deserialize)]
struct MlpDto {
    layer_sizes: Vec<usize>,
    /// Row-major fan_in x fan_out blocks, one per layer.
    weights: Vec<Vec<f64>>,
    biases: Vec<Vec<f64>>,
    hidden_activation: String,
    output_activation: String,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct ModelDoc {
    version: u32,
    kind: String,
    train_rmse: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    linear: Option<LinearDto>,
    #[serde(skip_serializing_if = "Option::is_none")]
    kernel: Option<KernelDto>,
    #[serde(skip_serializing_if = "Option::is_none")]
    trees: Option<TreesDto>,
    #[serde(skip_serializing_if = "Option::is_none")]
    mlp: Option<MlpDto>,
}

pub fn save_model(path: &Path, model: &TrainedModel, train_rmse: Option<f64>) -> Result<()> {
    let mut doc = ModelDoc {
        version: DOC_VERSION,
        kind: model.kind_name().to_string(),
        train_rmse,
        linear: None,
        kernel: None,
        trees: None,
        mlp: None,
    };
    match model {
        TrainedModel::Regressor(reg) => {
            doc.train_rmse = Some(train_rmse.unwrap_or(reg.train_rmse));
            match &reg.params {
                ModelParams::Linear(p) => {
                    doc.linear = Some(LinearDto {
                        weights: p.weights.clone(),
                        intercept: p.intercept,
                        rank_deficient: p.rank_deficient,
                        converged: p.converged,
                        huber_delta: p.huber_delta,
                    });
                }
                ModelParams::Kernel(p) => {
                    doc.kernel = Some(KernelDto {
                        kernel: match p.kernel {
                            KernelKind::Quadratic => "quadratic".to_string(),
                            KernelKind::Rbf => "rbf".to_string(),
                        },
                        lambda: p.lambda,
                        gamma: p.gamma,
                        lambda_boosted: p.lambda_boosted,
                        support_rows: p.support.rows(),
                        support_cols: p.support.cols(),
                        support: p.support.data().to_vec(),
                        alpha: p.alpha.clone(),
                    });
                }
                ModelParams::Trees(p) => {
                    doc.trees = Some(TreesDto {
                        n_trees: p.params.n_trees,
                        max_depth: p.params.max_depth,
                        min_leaf: p.params.min_leaf,
                        bootstrap: p.params.bootstrap,
                        seed: p.params.seed,
                        n_features: p.n_features,
                        trees: p
                            .trees
                            .iter()
                            .map(|t| t.nodes.iter().map(node_to_dto).collect())
                            .collect(),
                    });
                }
            }
        }
        TrainedModel::Mlp(net) => {
            doc.mlp = Some(MlpDto {
                layer_sizes: LAYER_SIZES.to_vec(),
                weights: net.weights().iter().map(|w| w.data().to_vec()).collect(),
                biases: net.biases().to_vec(),
                hidden_activation: "logsig".to_string(),
                output_activation: "linear".to_string(),
            });
        }
    }
    write_json(path, &doc)
}

fn node_to_dto(node: &TreeNode) -> NodeDto {
    match node {
        TreeNode::Split {
            feature,
            threshold,
            left,
            right,
        } => NodeDto::Split {
            feature: *feature,
            threshold: *threshold,
            left: *left,
            right: *right,
        },
        TreeNode::Leaf { value } => NodeDto::Leaf { value: *value },
    }
}

fn node_from_dto(node: &NodeDto) -> TreeNode {
    match node {
        NodeDto::Split {
            feature,
            threshold,
            left,
            right,
        } => TreeNode::Split {
            feature: *feature,
            threshold: *threshold,
            left: *left,
            right: *right,
        },
        NodeDto::Leaf { value } => TreeNode::Leaf { value: *value },
    }
}

pub fn load_model(path: &Path) -> Result<TrainedModel> {
    let doc: ModelDoc = read_json(path)?;
    if doc.version != DOC_VERSION {
        return Err(CliError::format(format!(
            "{}: unsupported model document version {}",
            path.display(),
            doc.version
        )));
    }
    let train_rmse = doc.train_rmse.unwrap_or(0.0);
    let bad = |msg: &str| CliError::format(format!("{}: {msg}", path.display()));
    match doc.kind.as_str() {
        "linear" | "robust_linear" => {
            let p = doc.linear.ok_or_else(|| bad("missing linear parameters"))?;
            let kind = if doc.kind == "linear" {
                RegressorKind::Linear
            } else {
                RegressorKind::RobustLinear
            };
            let n_features = p.weights.len();
            Ok(TrainedModel::Regressor(TrainedRegressor::from_parts(
                kind,
                ModelParams::Linear(LinearParams {
                    weights: p.weights,
                    intercept: p.intercept,
                    rank_deficient: p.rank_deficient,
                    converged: p.converged,
                    huber_delta: p.huber_delta,
                }),
                train_rmse,
                n_features,
            )))
        }
        "kernel_quadratic" | "kernel_rbf" => {
            let p = doc.kernel.ok_or_else(|| bad("missing kernel parameters"))?;
            let kernel = match p.kernel.as_str() {
                "quadratic" => KernelKind::Quadratic,
                "rbf" => KernelKind::Rbf,
                other => return Err(bad(&format!("unknown kernel '{other}'"))),
            };
            if p.alpha.len() != p.support_rows {
                return Err(bad("alpha length does not match support rows"));
            }
            let support = Matrix::from_vec(p.support_rows, p.support_cols, p.support)
                .map_err(|e| bad(&e.to_string()))?;
            let kind = match kernel {
                KernelKind::Quadratic => RegressorKind::KernelQuadratic,
                KernelKind::Rbf => RegressorKind::KernelRbf,
            };
            let n_features = p.support_cols;
            Ok(TrainedModel::Regressor(TrainedRegressor::from_parts(
                kind,
                ModelParams::Kernel(KernelParams {
                    kernel,
                    lambda: p.lambda,
                    gamma: p.gamma,
                    lambda_boosted: p.lambda_boosted,
                    support,
                    alpha: p.alpha,
                }),
                train_rmse,
                n_features,
            )))
        }
        "bagged_trees" => {
            let p = doc.trees.ok_or_else(|| bad("missing tree parameters"))?;
            let trees: Vec<RegressionTree> = p
                .trees
                .iter()
                .map(|nodes| RegressionTree {
                    nodes: nodes.iter().map(node_from_dto).collect(),
                })
                .collect();
            for tree in &trees {
                for node in &tree.nodes {
                    if let TreeNode::Split {
                        feature,
                        left,
                        right,
                        ..
                    } = node
                    {
                        if *feature >= p.n_features
                            || *left >= tree.nodes.len()
                            || *right >= tree.nodes.len()
                        {
                            return Err(bad("tree node indices out of range"));
                        }
                    }
                }
            }
            let n_features = p.n_features;
            Ok(TrainedModel::Regressor(TrainedRegressor::from_parts(
                RegressorKind::BaggedTrees,
                ModelParams::Trees(BaggedTreesModel {
                    params: BaggedTreesParams {
                        n_trees: p.n_trees,
                        max_depth: p.max_depth,
                        min_leaf: p.min_leaf,
                        bootstrap: p.bootstrap,
                        seed: p.seed,
                    },
                    trees,
                    n_features,
                }),
                train_rmse,
                n_features,
            )))
        }
        "mlp" => {
            let p = doc.mlp.ok_or_else(|| bad("missing network parameters"))?;
            if p.layer_sizes != LAYER_SIZES.to_vec() {
                return Err(bad("unsupported layer sizes"));
            }
            if p.hidden_activation != "logsig" || p.output_activation != "linear" {
                return Err(bad("unsupported activation tags"));
            }
            if p.weights.len() != 3 || p.biases.len() != 3 {
                return Err(bad("expected three weight and bias blocks"));
            }
            let mut weights = Vec::with_capacity(3);
            for (l, block) in p.weights.iter().enumerate() {
                weights.push(
                    Matrix::from_vec(LAYER_SIZES[l], LAYER_SIZES[l + 1], block.clone())
                        .map_err(|e| bad(&e.to_string()))?,
                );
            }
            let weights: [Matrix; 3] = weights.try_into().expect("three blocks");
            let biases: [Vec<f64>; 3] = p.biases.try_into().map_err(|_| bad("bias shape"))?;
            Ok(TrainedModel::Mlp(MlpNetwork::from_parts(weights, biases)?))
        }
        other => Err(bad(&format!("unknown model kind '{other}'"))),
    }
}

// ---------------------------------------------------------------------------
// ROI files

#[derive(Debug, Serialize, Deserialize)]
pub struct RoiDto {
    pub label: u8,
    pub r0: usize,
    pub c0: usize,
    pub r1: usize,
    pub c1: usize,
}

pub fn save_rois(path: &Path, rois: &[RoiRect]) -> Result<()> {
    let docs: Vec<RoiDto> = rois
        .iter()
        .map(|r| RoiDto {
            label: match r.label {
                Label::Solid => 0,
                Label::Void => 1,
            },
            r0: r.r0,
            c0: r.c0,
            r1: r.r1,
            c1: r.c1,
        })
        .collect();
    write_json(path, &docs)
}

pub fn load_rois(path: &Path) -> Result<Vec<RoiRect>> {
    let docs: Vec<RoiDto> = read_json(path)?;
    docs.iter()
        .map(|d| {
            let label = match d.label {
                0 => Label::Solid,
                1 => Label::Void,
                other => {
                    return Err(CliError::format(format!(
                        "{}: ROI label {other} is not 0 or 1",
                        path.display()
                    )))
                }
            };
            Ok(RoiRect::new(label, d.r0, d.c0, d.r1, d.c1))
        })
        .collect()
}

// ---------------------------------------------------------------------------
// Scene files

#[derive(Debug, Serialize, Deserialize)]
pub struct MaterialDto {
    pub conductivity: f64,
    pub density: f64,
    pub specific_heat: f64,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct SceneDoc {
    pub height: usize,
    pub width: usize,
    pub void_rois: Vec<RoiDto>,
    pub slab_thickness: f64,
    pub cover_depth: f64,
    pub concrete: MaterialDto,
    pub air: MaterialDto,
    pub flux: f64,
    pub h_conv: f64,
    pub ambient: f64,
    pub initial: f64,
    pub duration: f64,
    pub sample_rate: f64,
    pub noise_sigma: f64,
    pub gain_amplitude: f64,
    pub seed: u64,
}

impl From<&SynthScene> for SceneDoc {
    fn from(s: &SynthScene) -> Self {
        let mat = |m: &Material| MaterialDto {
            conductivity: m.conductivity,
            density: m.density,
            specific_heat: m.specific_heat,
        };
        SceneDoc {
            height: s.height,
            width: s.width,
            void_rois: s
                .void_rois
                .iter()
                .map(|r| RoiDto {
                    label: 1,
                    r0: r.r0,
                    c0: r.c0,
                    r1: r.r1,
                    c1: r.c1,
                })
                .collect(),
            slab_thickness: s.slab_thickness,
            cover_depth: s.cover_depth,
            concrete: mat(&s.concrete),
            air: mat(&s.air),
            flux: s.flux,
            h_conv: s.h_conv,
            ambient: s.ambient,
            initial: s.initial,
            duration: s.duration,
            sample_rate: s.sample_rate,
            noise_sigma: s.noise_sigma,
            gain_amplitude: s.gain_amplitude,
            seed: s.seed,
        }
    }
}

impl SceneDoc {
    pub fn into_scene(self) -> SynthScene {
        let mat = |m: &MaterialDto| Material {
            conductivity: m.conductivity,
            density: m.density,
            specific_heat: m.specific_heat,
        };
        SynthScene {
            height: self.height,
            width: self.width,
            void_rois: self
                .void_rois
                .iter()
                .map(|r| RoiRect::new(Label::Void, r.r0, r.c0, r.r1, r.c1))
                .collect(),
            slab_thickness: self.slab_thickness,
            cover_depth: self.cover_depth,
            concrete: mat(&self.concrete),
            air: mat(&self.air),
            flux: self.flux,
            h_conv: self.h_conv,
            ambient: self.ambient,
            initial: self.initial,
            duration: self.duration,
            sample_rate: self.sample_rate,
            noise_sigma: self.noise_sigma,
            gain_amplitude: self.gain_amplitude,
            seed: self.seed,
        }
    }
}

pub fn save_scene(path: &Path, scene: &SynthScene) -> Result<()> {
    write_json(path, &SceneDoc::from(scene))
}

pub fn load_scene(path: &Path) -> Result<SynthScene> {
    let doc: SceneDoc = read_json(path)?;
    let scene = doc.into_scene();
    scene.validate()?;
    Ok(scene)
}
