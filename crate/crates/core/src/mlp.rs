//! A fixed 10-10-4-1 multilayer perceptron regressor trained by full-batch
//! gradient descent with momentum, an adaptive learning rate, and
//! performance / gradient / validation stopping.
//!
//! Hidden layers use the log-sigmoid activation, the output is linear, and
//! the loss is plain MSE. Training splits the data 70/15/15 into
//! train/test/validation: the test split is monitor-only, the validation
//! split drives early stopping and the best-validation snapshot.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;
use libm::{exp, sqrt};

use crate::error::{Error, Result};
use crate::eval::DetectionMap;
use crate::matrix::Matrix;
use crate::pct::FeatureMatrix;
use crate::rng::Rng;

/// Input, two hidden layers, scalar output.
pub const LAYER_SIZES: [usize; 4] = [10, 10, 4, 1];

/// Log-sigmoid activation.
#[inline]
pub fn logsig(x: f64) -> f64 {
    1.0 / (1.0 + exp(-x))
}

/// Parameter-shaped tensor: one matrix and bias vector per layer. Used for
/// the network itself, gradients, and the momentum velocity.
#[derive(Debug, Clone, PartialEq)]
pub struct MlpGradient {
    pub weights: [Matrix; 3],
    pub biases: [Vec<f64>; 3],
}

impl MlpGradient {
    fn zeros() -> Self {
        MlpGradient {
            weights: [
                Matrix::zeros(LAYER_SIZES[0], LAYER_SIZES[1]),
                Matrix::zeros(LAYER_SIZES[1], LAYER_SIZES[2]),
                Matrix::zeros(LAYER_SIZES[2], LAYER_SIZES[3]),
            ],
            biases: [
                vec![0.0; LAYER_SIZES[1]],
                vec![0.0; LAYER_SIZES[2]],
                vec![0.0; LAYER_SIZES[3]],
            ],
        }
    }

    /// Euclidean norm over every weight and bias entry.
    pub fn norm(&self) -> f64 {
        let mut ss = 0.0;
        for w in &self.weights {
            for &v in w.data() {
                ss += v * v;
            }
        }
        for b in &self.biases {
            for &v in b {
                ss += v * v;
            }
        }
        sqrt(ss)
    }

    /// `self = momentum * self - lr * grad`.
    fn momentum_step(&mut self, momentum: f64, lr: f64, grad: &MlpGradient) {
        for l in 0..3 {
            let rows = self.weights[l].rows();
            let cols = self.weights[l].cols();
            for r in 0..rows {
                for c in 0..cols {
                    let v = momentum * self.weights[l].get(r, c) - lr * grad.weights[l].get(r, c);
                    self.weights[l].set(r, c, v);
                }
            }
            for (b, g) in self.biases[l].iter_mut().zip(&grad.biases[l]) {
                *b = momentum * *b - lr * g;
            }
        }
    }

    fn reset(&mut self) {
        for l in 0..3 {
            let rows = self.weights[l].rows();
            let cols = self.weights[l].cols();
            for r in 0..rows {
                for c in 0..cols {
                    self.weights[l].set(r, c, 0.0);
                }
            }
            for b in self.biases[l].iter_mut() {
                *b = 0.0;
            }
        }
    }
}

/// The 10-10-4-1 network. Weights are stored fan-in x fan-out, so the layer
/// map is z = x W + b.
#[derive(Debug, Clone, PartialEq)]
pub struct MlpNetwork {
    weights: [Matrix; 3],
    biases: [Vec<f64>; 3],
}

impl MlpNetwork {
    pub fn from_parts(weights: [Matrix; 3], biases: [Vec<f64>; 3]) -> Result<Self> {
        for l in 0..3 {
            if weights[l].rows() != LAYER_SIZES[l]
                || weights[l].cols() != LAYER_SIZES[l + 1]
                || biases[l].len() != LAYER_SIZES[l + 1]
            {
                return Err(Error::arg(format!("layer {l} shape mismatch")));
            }
            if !weights[l].all_finite() || !biases[l].iter().all(|v| v.is_finite()) {
                return Err(Error::data("network parameters contain non-finite values"));
            }
        }
        Ok(MlpNetwork { weights, biases })
    }

    pub fn weights(&self) -> &[Matrix; 3] {
        &self.weights
    }

    pub fn biases(&self) -> &[Vec<f64>; 3] {
        &self.biases
    }

    fn all_finite(&self) -> bool {
        self.weights.iter().all(Matrix::all_finite)
            && self.biases.iter().flatten().all(|v| v.is_finite())
    }

    fn add_delta(&self, delta: &MlpGradient) -> MlpNetwork {
        let mut out = self.clone();
        for l in 0..3 {
            for r in 0..out.weights[l].rows() {
                for c in 0..out.weights[l].cols() {
                    let v = out.weights[l].get(r, c) + delta.weights[l].get(r, c);
                    out.weights[l].set(r, c, v);
                }
            }
            for (b, d) in out.biases[l].iter_mut().zip(&delta.biases[l]) {
                *b += d;
            }
        }
        out
    }
}

/// Fresh network with uniform +-sqrt(6 / (fan_in + fan_out)) weights drawn
/// from the seeded generator and zero biases.
pub fn init_mlp(seed: u64) -> MlpNetwork {
    let mut rng = Rng::seed_from_u64(seed);
    let mut weights = Vec::with_capacity(3);
    for l in 0..3 {
        let fan_in = LAYER_SIZES[l];
        let fan_out = LAYER_SIZES[l + 1];
        let bound = sqrt(6.0 / (fan_in + fan_out) as f64);
        let mut w = Matrix::zeros(fan_in, fan_out);
        for r in 0..fan_in {
            for c in 0..fan_out {
                w.set(r, c, rng.uniform(-bound, bound));
            }
        }
        weights.push(w);
    }
    let weights: [Matrix; 3] = weights.try_into().expect("three layers");
    MlpNetwork {
        weights,
        biases: [
            vec![0.0; LAYER_SIZES[1]],
            vec![0.0; LAYER_SIZES[2]],
            vec![0.0; LAYER_SIZES[3]],
        ],
    }
}

struct ForwardPass {
    h1: Matrix,
    h2: Matrix,
    out: Vec<f64>,
}

fn forward_full(net: &MlpNetwork, x: &Matrix) -> ForwardPass {
    let n = x.rows();
    let mut h1 = Matrix::zeros(n, LAYER_SIZES[1]);
    let mut h2 = Matrix::zeros(n, LAYER_SIZES[2]);
    let mut out = vec![0.0; n];
    for i in 0..n {
        let row = x.row(i);
        let h1_row = h1.row_mut(i);
        for j in 0..LAYER_SIZES[1] {
            let mut z = net.biases[0][j];
            for (k, &v) in row.iter().enumerate() {
                z += v * net.weights[0].get(k, j);
            }
            h1_row[j] = logsig(z);
        }
    }
    for i in 0..n {
        let h1_row = h1.row(i);
        let h2_row = h2.row_mut(i);
        for j in 0..LAYER_SIZES[2] {
            let mut z = net.biases[1][j];
            for (k, &v) in h1_row.iter().enumerate() {
                z += v * net.weights[1].get(k, j);
            }
            h2_row[j] = logsig(z);
        }
        let mut z = net.biases[2][0];
        for (k, &v) in h2_row.iter().enumerate() {
            z += v * net.weights[2].get(k, 0);
        }
        out[i] = z;
    }
    ForwardPass { h1, h2, out }
}

/// Network response for each row of `x` (10 features per row).
pub fn forward(net: &MlpNetwork, x: &Matrix) -> Result<Vec<f64>> {
    if x.cols() != LAYER_SIZES[0] {
        return Err(Error::arg(format!(
            "network takes {} inputs, got {}",
            LAYER_SIZES[0],
            x.cols()
        )));
    }
    Ok(forward_full(net, x).out)
}

/// MSE of the network on (x, y).
pub fn mse(net: &MlpNetwork, x: &Matrix, y: &[f64]) -> Result<f64> {
    let out = forward(net, x)?;
    if out.len() != y.len() {
        return Err(Error::arg("target length mismatch"));
    }
    if y.is_empty() {
        return Ok(0.0);
    }
    let mut ss = 0.0;
    for (o, t) in out.iter().zip(y) {
        let d = o - t;
        ss += d * d;
    }
    Ok(ss / y.len() as f64)
}

/// Exact backpropagation gradients of the MSE with respect to every weight
/// and bias.
pub fn gradient(net: &MlpNetwork, x: &Matrix, y: &[f64]) -> Result<MlpGradient> {
    Ok(gradient_with_mse(net, x, y)?.0)
}

fn gradient_with_mse(net: &MlpNetwork, x: &Matrix, y: &[f64]) -> Result<(MlpGradient, f64)> {
    if x.cols() != LAYER_SIZES[0] {
        return Err(Error::arg(format!(
            "network takes {} inputs, got {}",
            LAYER_SIZES[0],
            x.cols()
        )));
    }
    if x.rows() != y.len() {
        return Err(Error::arg("target length mismatch"));
    }
    let n = x.rows();
    let pass = forward_full(net, x);
    let mut grads = MlpGradient::zeros();
    let scale = 2.0 / n as f64;
    let mut loss = 0.0;

    let mut dz2 = vec![0.0; LAYER_SIZES[2]];
    let mut dz1 = vec![0.0; LAYER_SIZES[1]];
    for i in 0..n {
        let residual = pass.out[i] - y[i];
        loss += residual * residual;
        let dout = scale * residual;

        // Output layer.
        for k in 0..LAYER_SIZES[2] {
            let g = grads.weights[2].get(k, 0) + pass.h2.get(i, k) * dout;
            grads.weights[2].set(k, 0, g);
        }
        grads.biases[2][0] += dout;

        // Second hidden layer.
        for (k, dz) in dz2.iter_mut().enumerate() {
            let h = pass.h2.get(i, k);
            *dz = dout * net.weights[2].get(k, 0) * h * (1.0 - h);
        }
        for j in 0..LAYER_SIZES[1] {
            let h1j = pass.h1.get(i, j);
            let w_row = grads.weights[1].row_mut(j);
            for (k, &dz) in dz2.iter().enumerate() {
                w_row[k] += h1j * dz;
            }
        }
        for (k, &dz) in dz2.iter().enumerate() {
            grads.biases[1][k] += dz;
        }

        // First hidden layer.
        for (j, dz) in dz1.iter_mut().enumerate() {
            let mut back = 0.0;
            for (k, &d2) in dz2.iter().enumerate() {
                back += d2 * net.weights[1].get(j, k);
            }
            let h = pass.h1.get(i, j);
            *dz = back * h * (1.0 - h);
        }
        let x_row = x.row(i);
        for (f, &xv) in x_row.iter().enumerate() {
            if xv == 0.0 {
                continue;
            }
            let w_row = grads.weights[0].row_mut(f);
            for (j, &dz) in dz1.iter().enumerate() {
                w_row[j] += xv * dz;
            }
        }
        for (j, &dz) in dz1.iter().enumerate() {
            grads.biases[0][j] += dz;
        }
    }
    Ok((grads, loss / n as f64))
}

/// Training hyperparameters. The adaptive schedule and stopping mechanisms
/// follow the classical gradient-descent-with-momentum recipe; the constants
/// are conventional defaults since no canonical values exist.
#[derive(Debug, Clone, PartialEq)]
pub struct TrainConfig {
    pub lr0: f64,
    pub lr_inc: f64,
    pub lr_dec: f64,
    /// A candidate step whose train MSE exceeds this ratio times the current
    /// MSE triggers an immediate learning-rate decrease.
    pub max_perf_inc: f64,
    pub momentum: f64,
    pub max_epochs: usize,
    /// Target train MSE; training stops once reached.
    pub goal: f64,
    pub min_grad: f64,
    /// Consecutive epochs of validation MSE above its best before stopping.
    pub max_fail: usize,
    /// Train/test/validation fractions; must sum to 1.
    pub split: (f64, f64, f64),
    pub seed: u64,
}

impl TrainConfig {
    pub fn defaults(seed: u64) -> Self {
        TrainConfig {
            lr0: 0.01,
            lr_inc: 1.05,
            lr_dec: 0.7,
            max_perf_inc: 1.04,
            momentum: 0.9,
            max_epochs: 1000,
            goal: 0.0,
            min_grad: 1e-5,
            max_fail: 6,
            split: (0.70, 0.15, 0.15),
            seed,
        }
    }

    fn validate(&self) -> Result<()> {
        if ![self.lr0, self.lr_inc, self.lr_dec, self.max_perf_inc]
            .iter()
            .all(|&v| crate::error::is_positive(v))
        {
            return Err(Error::arg("learning rates and ratios must be positive"));
        }
        if !(0.0..1.0).contains(&self.momentum) {
            return Err(Error::arg("momentum must be in [0, 1)"));
        }
        if self.max_fail < 1 {
            return Err(Error::arg("max_fail must be at least 1"));
        }
        if self.max_epochs < 1 {
            return Err(Error::arg("max_epochs must be at least 1"));
        }
        let sum = self.split.0 + self.split.1 + self.split.2;
        if (sum - 1.0).abs() > 1e-9 || self.split.0 <= 0.0 {
            return Err(Error::arg("split fractions must be positive and sum to 1"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StopReason {
    Performance,
    Gradient,
    Validation,
    MaxEpochs,
}

impl StopReason {
    pub fn name(&self) -> &'static str {
        match self {
            StopReason::Performance => "performance",
            StopReason::Gradient => "gradient",
            StopReason::Validation => "validation",
            StopReason::MaxEpochs => "max_epochs",
        }
    }
}

/// One row of the per-epoch training log.
#[derive(Debug, Clone, PartialEq)]
pub struct EpochRecord {
    pub train_mse: f64,
    pub test_mse: f64,
    pub val_mse: f64,
    /// Learning rate used for this epoch's attempted step.
    pub lr: f64,
    pub grad_norm: f64,
    /// Whether the step was applied (train MSE did not increase).
    pub accepted: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainReport {
    pub epochs_run: usize,
    pub stop_reason: StopReason,
    pub epochs: Vec<EpochRecord>,
    pub final_grad_norm: f64,
    /// Whether the returned network is a snapshot from an earlier epoch (the
    /// validation minimum) rather than the final iterate.
    pub snapshot_restored: bool,
    pub best_val_mse: f64,
    /// Row indices of `x` assigned to each split by the seeded shuffle.
    pub train_indices: Vec<usize>,
    pub test_indices: Vec<usize>,
    pub val_indices: Vec<usize>,
}

fn subset(x: &Matrix, y: &[f64], indices: &[usize]) -> (Matrix, Vec<f64>) {
    let mut rows = Vec::with_capacity(indices.len() * x.cols());
    let mut ys = Vec::with_capacity(indices.len());
    for &i in indices {
        rows.extend_from_slice(x.row(i));
        ys.push(y[i]);
    }
    (
        Matrix::from_vec(ys.len(), x.cols(), rows).expect("sized"),
        ys,
    )
}

/// Trains the network by full-batch gradient descent with momentum and an
/// adaptive learning rate.
///
/// Steps that do not decrease the train MSE are rejected, which keeps the
/// accepted-epoch loss curve nonincreasing. A rejection beyond the
/// `max_perf_inc` band immediately decays the learning rate; a milder
/// rejection first retries with the momentum flushed and decays only if the
/// plain gradient step fails too. Returns the best-validation snapshot.
pub fn train(
    net: MlpNetwork,
    x: &Matrix,
    y: &[f64],
    config: &TrainConfig,
) -> Result<(MlpNetwork, TrainReport)> {
    config.validate()?;
    if x.rows() != y.len() {
        return Err(Error::arg("target length mismatch"));
    }
    if x.rows() < 10 {
        return Err(Error::arg(format!(
            "training needs at least 10 samples, got {}",
            x.rows()
        )));
    }
    if x.cols() != LAYER_SIZES[0] {
        return Err(Error::arg(format!(
            "network takes {} inputs, got {}",
            LAYER_SIZES[0],
            x.cols()
        )));
    }
    if !x.all_finite() || !y.iter().all(|v| v.is_finite()) {
        return Err(Error::data("training data contains non-finite values"));
    }

    let m = x.rows();
    let mut order: Vec<usize> = (0..m).collect();
    let mut rng = Rng::seed_from_u64(config.seed);
    rng.shuffle(&mut order);
    let n_train = ((m as f64) * config.split.0) as usize;
    let n_test = ((m as f64) * config.split.1) as usize;
    let train_indices = order[..n_train].to_vec();
    let test_indices = order[n_train..n_train + n_test].to_vec();
    let val_indices = order[n_train + n_test..].to_vec();
    let (train_x, train_y) = subset(x, y, &train_indices);
    let (test_x, test_y) = subset(x, y, &test_indices);
    let (val_x, val_y) = subset(x, y, &val_indices);

    let mut params = net;
    let mut velocity = MlpGradient::zeros();
    let mut lr = config.lr0;
    let mut stalled = false;
    let mut best_val = f64::INFINITY;
    let mut best_epoch = 0;
    let mut snapshot = params.clone();
    let mut val_fails = 0usize;
    let mut epochs = Vec::new();
    let mut stop_reason = StopReason::MaxEpochs;
    let mut final_grad_norm = 0.0;

    for epoch in 1..=config.max_epochs {
        let (grads, cur_mse) = gradient_with_mse(&params, &train_x, &train_y)?;
        let grad_norm = grads.norm();
        final_grad_norm = grad_norm;
        let lr_used = lr;

        velocity.momentum_step(config.momentum, lr, &grads);
        let candidate = params.add_delta(&velocity);
        let cand_mse = mse(&candidate, &train_x, &train_y)?;
        if !cand_mse.is_finite() {
            return Err(Error::numeric(format!(
                "train MSE diverged at epoch {epoch} (learning rate blow-up; lr = {lr})"
            )));
        }

        let accepted = cand_mse <= cur_mse;
        if accepted {
            if !candidate.all_finite() {
                return Err(Error::numeric(format!(
                    "network parameters diverged at epoch {epoch}"
                )));
            }
            if cand_mse < cur_mse {
                lr *= config.lr_inc;
            }
            params = candidate;
            stalled = false;
        } else if cand_mse > config.max_perf_inc * cur_mse {
            lr *= config.lr_dec;
            velocity.reset();
            stalled = false;
        } else {
            // Inside the tolerated band: retry from the same point without
            // momentum; if that plain step failed too, the rate is too big.
            if stalled {
                lr *= config.lr_dec;
            }
            velocity.reset();
            stalled = true;
        }

        let train_mse_now = if accepted { cand_mse } else { cur_mse };
        let test_mse = mse(&params, &test_x, &test_y)?;
        let val_mse = mse(&params, &val_x, &val_y)?;
        epochs.push(EpochRecord {
            train_mse: train_mse_now,
            test_mse,
            val_mse,
            lr: lr_used,
            grad_norm,
            accepted,
        });

        if val_mse < best_val {
            best_val = val_mse;
            best_epoch = epoch;
            snapshot = params.clone();
            val_fails = 0;
        } else if val_mse > best_val {
            val_fails += 1;
        }

        if train_mse_now <= config.goal {
            stop_reason = StopReason::Performance;
            break;
        }
        if grad_norm < config.min_grad {
            stop_reason = StopReason::Gradient;
            break;
        }
        if !val_indices.is_empty() && val_fails >= config.max_fail {
            stop_reason = StopReason::Validation;
            break;
        }
    }

    let epochs_run = epochs.len();
    let snapshot_restored = best_epoch != epochs_run;
    let report = TrainReport {
        epochs_run,
        stop_reason,
        epochs,
        final_grad_norm,
        snapshot_restored,
        best_val_mse: best_val,
        train_indices,
        test_indices,
        val_indices,
    };
    Ok((snapshot, report))
}

/// Full-frame prediction surface from standardized 10-component scores.
pub fn predict_map(
    net: &MlpNetwork,
    features: &FeatureMatrix,
    dims: (usize, usize),
) -> Result<DetectionMap> {
    if !features.is_standardized() {
        return Err(Error::arg("prediction features must be standardized"));
    }
    if features.k() != LAYER_SIZES[0] {
        return Err(Error::arg(format!(
            "network takes {} features, got {}",
            LAYER_SIZES[0],
            features.k()
        )));
    }
    if features.n_pixels() != dims.0 * dims.1 {
        return Err(Error::arg(format!(
            "{} feature rows do not fill {}x{}",
            features.n_pixels(),
            dims.0,
            dims.1
        )));
    }
    let values = forward(net, features.scores())?;
    DetectionMap::new(dims.0, dims.1, values, "mlp")
}
