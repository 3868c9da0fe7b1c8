//! Classical regression learners mapping standardized component scores to
//! the [0, 1] defect response, with ten-fold cross-validated RMSE.
//!
//! Labels are regressed rather than classified so the detection map keeps a
//! soft response. The quadratic and RBF learners are kernel ridge
//! regressions rather than epsilon-SVR solvers: the same kernel families,
//! but a deterministic closed-form dual solve with a single ridge parameter
//! instead of margin hyperparameters.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;
use libm::{exp, fabs, sqrt};

use crate::error::{Error, Result};
use crate::eval;
use crate::linalg;
use crate::matrix::Matrix;
use crate::rng::{derive_seed, Rng};

/// Classical Huber tuning constant: 95% efficiency on clean normal data.
pub const DEFAULT_HUBER_DELTA: f64 = 1.345;
pub const DEFAULT_RIDGE_LAMBDA: f64 = 1e-3;
pub const DEFAULT_N_TREES: usize = 30;
pub const DEFAULT_MIN_LEAF: usize = 5;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RegressorKind {
    Linear,
    RobustLinear,
    KernelQuadratic,
    KernelRbf,
    BaggedTrees,
}

impl RegressorKind {
    pub fn name(&self) -> &'static str {
        match self {
            RegressorKind::Linear => "linear",
            RegressorKind::RobustLinear => "robust_linear",
            RegressorKind::KernelQuadratic => "kernel_quadratic",
            RegressorKind::KernelRbf => "kernel_rbf",
            RegressorKind::BaggedTrees => "bagged_trees",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum KernelKind {
    /// (1 + x . x')^2
    Quadratic,
    /// exp(-gamma ||x - x'||^2)
    Rbf,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LinearParams {
    pub weights: Vec<f64>,
    pub intercept: f64,
    /// Set when the design matrix was rank deficient and the minimum-norm
    /// solution was taken.
    pub rank_deficient: bool,
    /// Robust fits only: whether IRLS converged within its iteration cap.
    pub converged: bool,
    /// Robust fits only: the Huber threshold used.
    pub huber_delta: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct KernelParams {
    pub kernel: KernelKind,
    /// Effective ridge after any boosts.
    pub lambda: f64,
    pub gamma: f64,
    /// Set when the factorization needed the ridge increased to succeed.
    pub lambda_boosted: bool,
    /// Training rows, m x k.
    pub support: Matrix,
    /// Dual coefficients, length m.
    pub alpha: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub enum TreeNode {
    Split {
        feature: usize,
        threshold: f64,
        left: usize,
        right: usize,
    },
    Leaf {
        value: f64,
    },
}

#[derive(Debug, Clone, PartialEq)]
pub struct RegressionTree {
    pub nodes: Vec<TreeNode>,
}

impl RegressionTree {
    pub fn predict_row(&self, row: &[f64]) -> f64 {
        let mut idx = 0;
        loop {
            match &self.nodes[idx] {
                TreeNode::Leaf { value } => return *value,
                TreeNode::Split {
                    feature,
                    threshold,
                    left,
                    right,
                } => {
                    idx = if row[*feature] < *threshold { *left } else { *right };
                }
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BaggedTreesParams {
    pub n_trees: usize,
    /// `None` grows trees until leaves are pure or hit `min_leaf`.
    pub max_depth: Option<usize>,
    pub min_leaf: usize,
    pub bootstrap: bool,
    pub seed: u64,
}

impl BaggedTreesParams {
    pub fn defaults(seed: u64) -> Self {
        BaggedTreesParams {
            n_trees: DEFAULT_N_TREES,
            max_depth: None,
            min_leaf: DEFAULT_MIN_LEAF,
            bootstrap: true,
            seed,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BaggedTreesModel {
    pub params: BaggedTreesParams,
    pub trees: Vec<RegressionTree>,
    pub n_features: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub enum ModelParams {
    Linear(LinearParams),
    Kernel(KernelParams),
    Trees(BaggedTreesModel),
}

/// A fitted regressor: deterministic prediction from stored parameters.
#[derive(Debug, Clone, PartialEq)]
pub struct TrainedRegressor {
    pub kind: RegressorKind,
    pub params: ModelParams,
    pub train_rmse: f64,
    n_features: usize,
}

impl TrainedRegressor {
    pub fn from_parts(
        kind: RegressorKind,
        params: ModelParams,
        train_rmse: f64,
        n_features: usize,
    ) -> Self {
        TrainedRegressor {
            kind,
            params,
            train_rmse,
            n_features,
        }
    }

    pub fn n_features(&self) -> usize {
        self.n_features
    }
}

/// Hyperparameter bundle used for dispatch (CLI, cross-validation).
#[derive(Debug, Clone, PartialEq)]
pub enum ModelSpec {
    Linear,
    RobustLinear {
        delta: f64,
    },
    Kernel {
        kernel: KernelKind,
        lambda: f64,
        gamma: f64,
    },
    BaggedTrees(BaggedTreesParams),
}

impl ModelSpec {
    pub fn kind(&self) -> RegressorKind {
        match self {
            ModelSpec::Linear => RegressorKind::Linear,
            ModelSpec::RobustLinear { .. } => RegressorKind::RobustLinear,
            ModelSpec::Kernel {
                kernel: KernelKind::Quadratic,
                ..
            } => RegressorKind::KernelQuadratic,
            ModelSpec::Kernel {
                kernel: KernelKind::Rbf,
                ..
            } => RegressorKind::KernelRbf,
            ModelSpec::BaggedTrees(_) => RegressorKind::BaggedTrees,
        }
    }
}

/// Fits a model described by `spec`.
pub fn fit(x: &Matrix, y: &[f64], spec: &ModelSpec) -> Result<TrainedRegressor> {
    match spec {
        ModelSpec::Linear => fit_linear(x, y),
        ModelSpec::RobustLinear { delta } => fit_robust_linear(x, y, *delta),
        ModelSpec::Kernel {
            kernel,
            lambda,
            gamma,
        } => fit_kernel(x, y, *kernel, *lambda, *gamma),
        ModelSpec::BaggedTrees(params) => fit_bagged_trees(x, y, params.clone()),
    }
}

fn check_xy(x: &Matrix, y: &[f64]) -> Result<()> {
    if x.rows() != y.len() {
        return Err(Error::arg(format!(
            "{} rows but {} targets",
            x.rows(),
            y.len()
        )));
    }
    if !x.all_finite() || !y.iter().all(|v| v.is_finite()) {
        return Err(Error::data("training data contains non-finite values"));
    }
    Ok(())
}

/// Design matrix with an appended intercept column of ones.
fn design_with_intercept(x: &Matrix) -> Matrix {
    let m = x.rows();
    let k = x.cols();
    let mut phi = Matrix::zeros(m, k + 1);
    for r in 0..m {
        let row = x.row(r);
        let out = phi.row_mut(r);
        out[..k].copy_from_slice(row);
        out[k] = 1.0;
    }
    phi
}

fn linear_predict(weights: &[f64], intercept: f64, x: &Matrix) -> Vec<f64> {
    (0..x.rows())
        .map(|r| {
            let mut v = intercept;
            for (j, &xi) in x.row(r).iter().enumerate() {
                v += weights[j] * xi;
            }
            v
        })
        .collect()
}

/// Ordinary least squares, solved through an orthogonal factorization (thin
/// SVD of the design matrix) rather than the normal equations; rank-deficient
/// designs fall back to the minimum-norm solution and are flagged.
pub fn fit_linear(x: &Matrix, y: &[f64]) -> Result<TrainedRegressor> {
    check_xy(x, y)?;
    if x.rows() <= x.cols() {
        return Err(Error::arg(format!(
            "need more samples ({}) than features ({})",
            x.rows(),
            x.cols()
        )));
    }
    let phi = design_with_intercept(x);
    let (coef, rank_deficient) = linalg::solve_least_squares_min_norm(&phi, y);
    let k = x.cols();
    let weights = coef[..k].to_vec();
    let intercept = coef[k];
    let preds = linear_predict(&weights, intercept, x);
    let train_rmse = eval::rmse(&preds, y)?;
    Ok(TrainedRegressor {
        kind: RegressorKind::Linear,
        params: ModelParams::Linear(LinearParams {
            weights,
            intercept,
            rank_deficient,
            converged: true,
            huber_delta: None,
        }),
        train_rmse,
        n_features: k,
    })
}

/// Huber-loss linear regression via iteratively reweighted least squares.
///
/// Residuals are scaled by a MAD-based robust sigma each iteration; the loop
/// stops when coefficients move less than 1e-8 or after 100 iterations (the
/// last iterate is returned and flagged unconverged).
pub fn fit_robust_linear(x: &Matrix, y: &[f64], delta: f64) -> Result<TrainedRegressor> {
    check_xy(x, y)?;
    if x.rows() <= x.cols() {
        return Err(Error::arg(format!(
            "need more samples ({}) than features ({})",
            x.rows(),
            x.cols()
        )));
    }
    if !crate::error::is_positive(delta) {
        return Err(Error::arg("Huber threshold must be positive"));
    }
    let m = x.rows();
    let k = x.cols();
    let phi = design_with_intercept(x);

    // Start from the OLS solution.
    let (mut coef, mut rank_deficient) = linalg::solve_least_squares_min_norm(&phi, y);
    let mut converged = false;
    let mut weights_buf = vec![1.0; m];
    let mut residuals = vec![0.0; m];

    for _ in 0..100 {
        for r in 0..m {
            let mut pred = 0.0;
            for (j, &v) in phi.row(r).iter().enumerate() {
                pred += coef[j] * v;
            }
            residuals[r] = y[r] - pred;
        }
        let scale = mad_sigma(&residuals);
        if scale <= 1e-12 {
            // Essentially exact fit: Huber and OLS coincide.
            converged = true;
            break;
        }
        let cutoff = delta * scale;
        for r in 0..m {
            let a = fabs(residuals[r]);
            weights_buf[r] = if a <= cutoff { 1.0 } else { cutoff / a };
        }
        // Weighted least squares on sqrt(w)-scaled rows.
        let mut wphi = Matrix::zeros(m, k + 1);
        let mut wy = vec![0.0; m];
        for r in 0..m {
            let s = sqrt(weights_buf[r]);
            for (j, &v) in phi.row(r).iter().enumerate() {
                wphi.set(r, j, s * v);
            }
            wy[r] = s * y[r];
        }
        let (next, deficient) = linalg::solve_least_squares_min_norm(&wphi, &wy);
        rank_deficient |= deficient;
        let max_change = coef
            .iter()
            .zip(&next)
            .map(|(a, b)| fabs(a - b))
            .fold(0.0, f64::max);
        coef = next;
        if max_change < 1e-8 {
            converged = true;
            break;
        }
    }

    let weights = coef[..k].to_vec();
    let intercept = coef[k];
    let preds = linear_predict(&weights, intercept, x);
    let train_rmse = eval::rmse(&preds, y)?;
    Ok(TrainedRegressor {
        kind: RegressorKind::RobustLinear,
        params: ModelParams::Linear(LinearParams {
            weights,
            intercept,
            rank_deficient,
            converged,
            huber_delta: Some(delta),
        }),
        train_rmse,
        n_features: k,
    })
}

/// Median absolute deviation scaled to estimate sigma under normality.
fn mad_sigma(residuals: &[f64]) -> f64 {
    let mut abs: Vec<f64> = residuals.iter().map(|r| fabs(*r)).collect();
    abs.sort_by(|a, b| a.partial_cmp(b).unwrap_or(core::cmp::Ordering::Equal));
    let n = abs.len();
    let median = if n % 2 == 1 {
        abs[n / 2]
    } else {
        0.5 * (abs[n / 2 - 1] + abs[n / 2])
    };
    median / 0.6745
}

pub fn kernel_value(kernel: KernelKind, gamma: f64, a: &[f64], b: &[f64]) -> f64 {
    match kernel {
        KernelKind::Quadratic => {
            let dot: f64 = a.iter().zip(b).map(|(x, y)| x * y).sum();
            let base = 1.0 + dot;
            base * base
        }
        KernelKind::Rbf => {
            let dist2: f64 = a
                .iter()
                .zip(b)
                .map(|(x, y)| {
                    let d = x - y;
                    d * d
                })
                .sum();
            exp(-gamma * dist2)
        }
    }
}

/// Kernel ridge regression: dual coefficients solve (K + lambda I) alpha = y.
///
/// If the Cholesky factorization fails on a near-singular system, the ridge
/// is increased tenfold up to three times and the fit flagged.
pub fn fit_kernel(
    x: &Matrix,
    y: &[f64],
    kernel: KernelKind,
    lambda: f64,
    gamma: f64,
) -> Result<TrainedRegressor> {
    check_xy(x, y)?;
    if x.rows() < 2 {
        return Err(Error::arg("kernel fit needs at least 2 samples"));
    }
    if !crate::error::is_positive(lambda) {
        return Err(Error::arg(
            "ridge must be positive so K + lambda*I is positive definite",
        ));
    }
    if kernel == KernelKind::Rbf && !crate::error::is_positive(gamma) {
        return Err(Error::arg("RBF width gamma must be positive"));
    }
    let m = x.rows();
    let mut gram = Matrix::zeros(m, m);
    for i in 0..m {
        for j in i..m {
            let v = kernel_value(kernel, gamma, x.row(i), x.row(j));
            gram.set(i, j, v);
            gram.set(j, i, v);
        }
    }

    let mut effective_lambda = lambda;
    let mut lambda_boosted = false;
    let mut factor = None;
    for attempt in 0..=3 {
        let mut ridged = gram.clone();
        for i in 0..m {
            ridged.set(i, i, ridged.get(i, i) + effective_lambda);
        }
        if let Some(l) = linalg::cholesky(&ridged) {
            factor = Some(l);
            break;
        }
        if attempt < 3 {
            effective_lambda *= 10.0;
            lambda_boosted = true;
        }
    }
    let l = factor.ok_or_else(|| {
        Error::numeric(format!(
            "kernel system stayed non-positive-definite up to ridge {effective_lambda}"
        ))
    })?;
    let alpha = linalg::cholesky_solve(&l, y);

    let model = TrainedRegressor {
        kind: match kernel {
            KernelKind::Quadratic => RegressorKind::KernelQuadratic,
            KernelKind::Rbf => RegressorKind::KernelRbf,
        },
        params: ModelParams::Kernel(KernelParams {
            kernel,
            lambda: effective_lambda,
            gamma,
            lambda_boosted,
            support: x.clone(),
            alpha,
        }),
        train_rmse: 0.0,
        n_features: x.cols(),
    };
    let preds = predict(&model, x)?;
    let train_rmse = eval::rmse(&preds, y)?;
    Ok(TrainedRegressor {
        train_rmse,
        ..model
    })
}

/// Bootstrap-aggregated regression trees: variance-reduction splits, mean
/// leaves, per-tree generators derived from the master seed so the ensemble
/// is reproducible regardless of scheduling.
pub fn fit_bagged_trees(
    x: &Matrix,
    y: &[f64],
    params: BaggedTreesParams,
) -> Result<TrainedRegressor> {
    check_xy(x, y)?;
    if x.rows() < 2 {
        return Err(Error::arg("bagged trees need at least 2 samples"));
    }
    if params.n_trees < 1 {
        return Err(Error::arg("ensemble needs at least one tree"));
    }
    if params.min_leaf < 1 {
        return Err(Error::arg("min_leaf must be at least 1"));
    }
    let m = x.rows();
    let mut trees = Vec::with_capacity(params.n_trees);
    for tree_idx in 0..params.n_trees {
        let indices: Vec<usize> = if params.bootstrap {
            let mut rng = Rng::seed_from_u64(derive_seed(params.seed, tree_idx as u64));
            (0..m).map(|_| rng.below(m as u64) as usize).collect()
        } else {
            (0..m).collect()
        };
        trees.push(grow_tree(x, y, &indices, &params));
    }
    let model = TrainedRegressor {
        kind: RegressorKind::BaggedTrees,
        params: ModelParams::Trees(BaggedTreesModel {
            params,
            trees,
            n_features: x.cols(),
        }),
        train_rmse: 0.0,
        n_features: x.cols(),
    };
    let preds = predict(&model, x)?;
    let train_rmse = eval::rmse(&preds, y)?;
    Ok(TrainedRegressor {
        train_rmse,
        ..model
    })
}

fn grow_tree(
    x: &Matrix,
    y: &[f64],
    indices: &[usize],
    params: &BaggedTreesParams,
) -> RegressionTree {
    let mut nodes = Vec::new();
    build_node(x, y, indices, 0, params, &mut nodes);
    RegressionTree { nodes }
}

fn node_mean(y: &[f64], indices: &[usize]) -> f64 {
    indices.iter().map(|&i| y[i]).sum::<f64>() / indices.len() as f64
}

/// Builds the subtree over `indices`, returning its node id.
fn build_node(
    x: &Matrix,
    y: &[f64],
    indices: &[usize],
    depth: usize,
    params: &BaggedTreesParams,
    nodes: &mut Vec<TreeNode>,
) -> usize {
    let mean = node_mean(y, indices);
    let depth_capped = params.max_depth.is_some_and(|d| depth >= d);
    if depth_capped || indices.len() < 2 * params.min_leaf {
        nodes.push(TreeNode::Leaf { value: mean });
        return nodes.len() - 1;
    }

    let n = indices.len() as f64;
    let total_sum: f64 = indices.iter().map(|&i| y[i]).sum();
    let total_ss: f64 = indices.iter().map(|&i| y[i] * y[i]).sum();
    let parent_sse = total_ss - total_sum * total_sum / n;
    if parent_sse <= 0.0 {
        nodes.push(TreeNode::Leaf { value: mean });
        return nodes.len() - 1;
    }

    // Best split over all features and positions; ties resolve to the first
    // candidate in (feature, position) order so trees are deterministic.
    let mut best: Option<(f64, usize, f64)> = None; // (gain, feature, threshold)
    let mut order: Vec<usize> = Vec::with_capacity(indices.len());
    for feature in 0..x.cols() {
        order.clear();
        order.extend_from_slice(indices);
        order.sort_by(|&a, &b| {
            x.get(a, feature)
                .partial_cmp(&x.get(b, feature))
                .unwrap_or(core::cmp::Ordering::Equal)
                .then(a.cmp(&b))
        });
        let mut left_sum = 0.0;
        let mut left_ss = 0.0;
        for pos in 1..order.len() {
            let yi = y[order[pos - 1]];
            left_sum += yi;
            left_ss += yi * yi;
            let prev_v = x.get(order[pos - 1], feature);
            let v = x.get(order[pos], feature);
            if v <= prev_v {
                continue; // no boundary between equal values
            }
            if pos < params.min_leaf || (order.len() - pos) < params.min_leaf {
                continue;
            }
            let nl = pos as f64;
            let nr = n - nl;
            let right_sum = total_sum - left_sum;
            let right_ss = total_ss - left_ss;
            let sse_left = left_ss - left_sum * left_sum / nl;
            let sse_right = right_ss - right_sum * right_sum / nr;
            let gain = parent_sse - sse_left - sse_right;
            if gain > best.map_or(0.0, |(g, _, _)| g) {
                best = Some((gain, feature, 0.5 * (prev_v + v)));
            }
        }
    }

    let Some((_, feature, threshold)) = best else {
        nodes.push(TreeNode::Leaf { value: mean });
        return nodes.len() - 1;
    };

    // Partition preserving the deterministic relative order.
    let mut left = Vec::new();
    let mut right = Vec::new();
    for &i in indices {
        if x.get(i, feature) < threshold {
            left.push(i);
        } else {
            right.push(i);
        }
    }
    let id = nodes.len();
    nodes.push(TreeNode::Leaf { value: mean }); // placeholder, patched below
    let left_id = build_node(x, y, &left, depth + 1, params, nodes);
    let right_id = build_node(x, y, &right, depth + 1, params, nodes);
    nodes[id] = TreeNode::Split {
        feature,
        threshold,
        left: left_id,
        right: right_id,
    };
    id
}

/// Raw (unclamped) regression outputs for each row of `x`.
pub fn predict(model: &TrainedRegressor, x: &Matrix) -> Result<Vec<f64>> {
    if x.cols() != model.n_features {
        return Err(Error::arg(format!(
            "model expects {} features, got {}",
            model.n_features,
            x.cols()
        )));
    }
    if !x.all_finite() {
        return Err(Error::data("prediction input contains non-finite values"));
    }
    Ok(match &model.params {
        ModelParams::Linear(p) => linear_predict(&p.weights, p.intercept, x),
        ModelParams::Kernel(p) => (0..x.rows())
            .map(|r| {
                let row = x.row(r);
                let mut v = 0.0;
                for i in 0..p.support.rows() {
                    v += p.alpha[i] * kernel_value(p.kernel, p.gamma, p.support.row(i), row);
                }
                v
            })
            .collect(),
        ModelParams::Trees(p) => (0..x.rows())
            .map(|r| {
                let row = x.row(r);
                let sum: f64 = p.trees.iter().map(|t| t.predict_row(row)).sum();
                sum / p.trees.len() as f64
            })
            .collect(),
    })
}

/// Ten-fold cross-validation report.
#[derive(Debug, Clone, PartialEq)]
pub struct CvReport {
    /// Held-out RMSE per fold.
    pub folds: Vec<f64>,
    pub mean_rmse: f64,
    pub seed: u64,
}

pub const CV_FOLDS: usize = 10;

/// Seeded shuffle partitioned into `n_folds` disjoint, exhaustive folds
/// whose sizes differ by at most one.
pub fn fold_indices(m: usize, n_folds: usize, seed: u64) -> Vec<Vec<usize>> {
    let mut order: Vec<usize> = (0..m).collect();
    let mut rng = Rng::seed_from_u64(seed);
    rng.shuffle(&mut order);
    let base = m / n_folds;
    let rem = m % n_folds;
    let mut folds = Vec::with_capacity(n_folds);
    let mut start = 0;
    for f in 0..n_folds {
        let size = base + usize::from(f < rem);
        folds.push(order[start..start + size].to_vec());
        start += size;
    }
    folds
}

/// Ten-fold cross-validated RMSE for the given model family.
pub fn cross_validate(x: &Matrix, y: &[f64], spec: &ModelSpec, seed: u64) -> Result<CvReport> {
    check_xy(x, y)?;
    let m = x.rows();
    if m < CV_FOLDS {
        return Err(Error::arg(format!(
            "cross-validation needs at least {CV_FOLDS} samples, got {m}"
        )));
    }
    let folds = fold_indices(m, CV_FOLDS, seed);
    let k = x.cols();
    let mut held = vec![false; m];
    let mut fold_rmse = Vec::with_capacity(CV_FOLDS);
    for fold in &folds {
        for h in held.iter_mut() {
            *h = false;
        }
        for &i in fold {
            held[i] = true;
        }
        let mut train_rows = Vec::new();
        let mut train_y = Vec::new();
        for r in 0..m {
            if !held[r] {
                train_rows.extend_from_slice(x.row(r));
                train_y.push(y[r]);
            }
        }
        let train_x = Matrix::from_vec(train_y.len(), k, train_rows)?;
        let model = fit(&train_x, &train_y, spec)?;

        let mut test_rows = Vec::new();
        let mut test_y = Vec::new();
        for &r in fold {
            test_rows.extend_from_slice(x.row(r));
            test_y.push(y[r]);
        }
        let test_x = Matrix::from_vec(test_y.len(), k, test_rows)?;
        let preds = predict(&model, &test_x)?;
        fold_rmse.push(eval::rmse(&preds, &test_y)?);
    }
    let mean_rmse = fold_rmse.iter().sum::<f64>() / fold_rmse.len() as f64;
    Ok(CvReport {
        folds: fold_rmse,
        mean_rmse,
        seed,
    })
}
