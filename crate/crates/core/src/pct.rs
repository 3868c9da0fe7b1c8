//! Principal component thermography: reduce each pixel's temperature trace
//! to a few principal-component scores.
//!
//! The decomposition is computed from the centered frame-by-frame Gram
//! matrix with a Jacobi eigensolver, which yields exactly the right singular
//! structure of the centered raster: eigenvalues are squared singular values
//! and eigenvectors are the time-basis loadings.
//!
//! Sign ambiguity of the basis is resolved deterministically (the largest
//! absolute entry of each loading is made positive) so that score features
//! are comparable across independently fitted datasets with similar heating
//! curves: without such a rule, a flipped component silently negates a model
//! input.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;
use libm::sqrt;

use crate::cube::RasterMatrix;
use crate::error::{Error, Result};
use crate::linalg;
use crate::matrix::Matrix;

/// PCA basis fitted to one dataset.
#[derive(Debug, Clone, PartialEq)]
pub struct PcaModel {
    n_frames: usize,
    k: usize,
    /// Per-frame mean over pixels, length T.
    mean: Vec<f64>,
    /// T x k, orthonormal columns (time basis).
    loadings: Matrix,
    /// Length k, nonincreasing, nonnegative.
    singular_values: Vec<f64>,
    /// Fraction of total variance per retained component, length k; the
    /// denominator spans all T components, so the full set sums to one.
    explained_ratio: Vec<f64>,
}

impl PcaModel {
    pub fn from_parts(
        n_frames: usize,
        k: usize,
        mean: Vec<f64>,
        loadings: Matrix,
        singular_values: Vec<f64>,
        explained_ratio: Vec<f64>,
    ) -> Result<Self> {
        if mean.len() != n_frames
            || loadings.rows() != n_frames
            || loadings.cols() != k
            || singular_values.len() != k
            || explained_ratio.len() != k
        {
            return Err(Error::arg("inconsistent PCA model dimensions"));
        }
        Ok(PcaModel {
            n_frames,
            k,
            mean,
            loadings,
            singular_values,
            explained_ratio,
        })
    }

    pub fn n_frames(&self) -> usize {
        self.n_frames
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn mean(&self) -> &[f64] {
        &self.mean
    }

    pub fn loadings(&self) -> &Matrix {
        &self.loadings
    }

    pub fn singular_values(&self) -> &[f64] {
        &self.singular_values
    }

    pub fn explained_ratio(&self) -> &[f64] {
        &self.explained_ratio
    }

    /// Keeps only the first `k` components.
    pub fn truncate(&self, k: usize) -> Result<PcaModel> {
        if k < 1 || k > self.k {
            return Err(Error::arg(format!(
                "cannot truncate model with {} components to {k}",
                self.k
            )));
        }
        let mut loadings = Matrix::zeros(self.n_frames, k);
        for t in 0..self.n_frames {
            for j in 0..k {
                loadings.set(t, j, self.loadings.get(t, j));
            }
        }
        Ok(PcaModel {
            n_frames: self.n_frames,
            k,
            mean: self.mean.clone(),
            loadings,
            singular_values: self.singular_values[..k].to_vec(),
            explained_ratio: self.explained_ratio[..k].to_vec(),
        })
    }
}

/// Per-pixel component scores, optionally standardized.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureMatrix {
    scores: Matrix,
    standardized: bool,
    scale_mean: Option<Vec<f64>>,
    scale_std: Option<Vec<f64>>,
}

impl FeatureMatrix {
    pub fn from_scores(scores: Matrix) -> Self {
        FeatureMatrix {
            scores,
            standardized: false,
            scale_mean: None,
            scale_std: None,
        }
    }

    pub fn n_pixels(&self) -> usize {
        self.scores.rows()
    }

    pub fn k(&self) -> usize {
        self.scores.cols()
    }

    pub fn scores(&self) -> &Matrix {
        &self.scores
    }

    pub fn is_standardized(&self) -> bool {
        self.standardized
    }

    /// Column means removed by standardization, if applied.
    pub fn scale_mean(&self) -> Option<&[f64]> {
        self.scale_mean.as_deref()
    }

    /// Column standard deviations divided out by standardization, if applied.
    pub fn scale_std(&self) -> Option<&[f64]> {
        self.scale_std.as_deref()
    }
}

/// Fits a `k`-component PCA basis to the raster (one pixel per row).
pub fn fit_pca(raster: &RasterMatrix, k: usize) -> Result<PcaModel> {
    let n = raster.n_pixels();
    let t = raster.n_frames();
    if n < 2 {
        return Err(Error::arg(format!("PCA needs at least 2 pixels, got {n}")));
    }
    if k < 1 || k > n.min(t) {
        return Err(Error::arg(format!(
            "component count {k} out of range 1..={}",
            n.min(t)
        )));
    }
    if !raster.values().all_finite() {
        return Err(Error::data("raster contains non-finite values"));
    }

    // Per-frame mean over pixels.
    let mut mean = vec![0.0; t];
    for p in 0..n {
        for (j, &v) in raster.pixel_trace(p).iter().enumerate() {
            mean[j] += v;
        }
    }
    let inv_n = 1.0 / n as f64;
    for m in mean.iter_mut() {
        *m *= inv_n;
    }

    // Centered Gram matrix over frames: G = sum_p (x_p - mean)(x_p - mean)^T.
    // Its eigenvalues are the squared singular values of the centered raster
    // and its eigenvectors the right singular vectors (the loadings).
    let mut gram = Matrix::zeros(t, t);
    let mut centered = vec![0.0; t];
    for p in 0..n {
        for (j, &v) in raster.pixel_trace(p).iter().enumerate() {
            centered[j] = v - mean[j];
        }
        for i in 0..t {
            let ci = centered[i];
            if ci == 0.0 {
                continue;
            }
            let row = gram.row_mut(i);
            for j in i..t {
                row[j] += ci * centered[j];
            }
        }
    }
    for i in 0..t {
        for j in 0..i {
            let v = gram.get(j, i);
            gram.set(i, j, v);
        }
    }

    let (eigenvalues, vectors) = linalg::jacobi_eigh_desc(&gram);
    let clamped: Vec<f64> = eigenvalues.iter().map(|&l| l.max(0.0)).collect();
    let total: f64 = clamped.iter().sum();

    let mut loadings = Matrix::zeros(t, k);
    let mut singular_values = Vec::with_capacity(k);
    let mut explained_ratio = Vec::with_capacity(k);
    for j in 0..k {
        // Deterministic sign: largest-|entry| positive, ties to lowest index.
        let mut pivot = 0;
        let mut best = 0.0;
        for i in 0..t {
            let mag = vectors.get(i, j).abs();
            if mag > best {
                best = mag;
                pivot = i;
            }
        }
        let flip = vectors.get(pivot, j) < 0.0;
        for i in 0..t {
            let v = vectors.get(i, j);
            loadings.set(i, j, if flip { -v } else { v });
        }
        singular_values.push(sqrt(clamped[j]));
        explained_ratio.push(if total > 0.0 { clamped[j] / total } else { 0.0 });
    }

    Ok(PcaModel {
        n_frames: t,
        k,
        mean,
        loadings,
        singular_values,
        explained_ratio,
    })
}

/// Projects a raster onto the fitted basis: scores = (values - mean) * loadings.
pub fn transform(model: &PcaModel, raster: &RasterMatrix) -> Result<FeatureMatrix> {
    if raster.n_frames() != model.n_frames {
        return Err(Error::arg(format!(
            "raster has {} frames but the model was fitted on {}; refit PCA per dataset",
            raster.n_frames(),
            model.n_frames
        )));
    }
    let n = raster.n_pixels();
    let k = model.k;
    let t = model.n_frames;
    let mut scores = Matrix::zeros(n, k);
    for p in 0..n {
        let trace = raster.pixel_trace(p);
        let out = scores.row_mut(p);
        for i in 0..t {
            let d = trace[i] - model.mean[i];
            if d == 0.0 {
                continue;
            }
            let basis_row = model.loadings.row(i);
            for (j, &b) in basis_row.iter().enumerate() {
                out[j] += d * b;
            }
        }
    }
    Ok(FeatureMatrix::from_scores(scores))
}

/// Rebuilds the raster from scores: values = mean + scores * loadings^T.
/// Exact (to rounding) when the model keeps all components.
pub fn reconstruct(model: &PcaModel, features: &FeatureMatrix) -> Result<RasterMatrix> {
    if features.is_standardized() {
        return Err(Error::arg("reconstruction needs raw (unstandardized) scores"));
    }
    if features.k() != model.k {
        return Err(Error::arg("score width does not match model components"));
    }
    let n = features.n_pixels();
    let t = model.n_frames;
    let mut data = vec![0.0; n * t];
    for p in 0..n {
        let s = features.scores().row(p);
        let out = &mut data[p * t..(p + 1) * t];
        for i in 0..t {
            let mut v = model.mean[i];
            let basis_row = model.loadings.row(i);
            for (j, &b) in basis_row.iter().enumerate() {
                v += s[j] * b;
            }
            out[i] = v;
        }
    }
    let values = Matrix::from_vec(n, t, data)?;
    RasterMatrix::new(values, (n, 1))
}

/// Smallest k whose cumulative explained-variance ratio reaches `threshold`;
/// the full length if it is never reached.
pub fn select_k(explained_ratio: &[f64], threshold: f64) -> Result<usize> {
    if explained_ratio.is_empty() {
        return Err(Error::arg("empty explained-variance sequence"));
    }
    let mut cum = 0.0;
    for (i, &r) in explained_ratio.iter().enumerate() {
        if !(-1e-12..=1.0 + 1e-12).contains(&r) {
            return Err(Error::arg(format!("ratio {r} outside [0, 1]")));
        }
        cum += r;
        if cum >= threshold {
            return Ok(i + 1);
        }
    }
    Ok(explained_ratio.len())
}

/// Z-scores each column with its own mean and sample standard deviation.
///
/// Columns that are constant (or standardized-to-nothing degenerate inputs
/// such as a single pixel) map to all zeros and record a standard deviation
/// of 1, so degenerate synthetic inputs pass through instead of erroring.
pub fn standardize(features: &FeatureMatrix) -> FeatureMatrix {
    let n = features.n_pixels();
    let k = features.k();
    let scores = features.scores();
    let mut means = vec![0.0; k];
    let mut stds = vec![1.0; k];
    let mut constant = vec![false; k];
    for j in 0..k {
        let mut sum = 0.0;
        for p in 0..n {
            sum += scores.get(p, j);
        }
        means[j] = sum / n.max(1) as f64;
    }
    for j in 0..k {
        if n < 2 {
            constant[j] = true;
            continue;
        }
        let mut ss = 0.0;
        for p in 0..n {
            let d = scores.get(p, j) - means[j];
            ss += d * d;
        }
        let std = sqrt(ss / (n - 1) as f64);
        // Near-zero spread means the column carries no signal; standardizing
        // it would amplify rounding noise to unit scale.
        if std > 1e-12 * (means[j].abs() + 1.0) {
            stds[j] = std;
        } else {
            constant[j] = true;
        }
    }
    let mut out = Matrix::zeros(n, k);
    for p in 0..n {
        for j in 0..k {
            if constant[j] {
                out.set(p, j, 0.0);
            } else {
                out.set(p, j, (scores.get(p, j) - means[j]) / stds[j]);
            }
        }
    }
    FeatureMatrix {
        scores: out,
        standardized: true,
        scale_mean: Some(means),
        scale_std: Some(stds),
    }
}
