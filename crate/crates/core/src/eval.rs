//! Detection maps, thresholding, and segmentation scoring.

use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;
use libm::{round, sqrt};

use crate::error::{Error, Result};
use crate::labeling::{CellLabel, Label, LabelMask};

/// Full-frame real-valued prediction surface. Values are raw model outputs,
/// deliberately unclamped: whether predictions stay near [0, 1] on unseen
/// datasets is itself a generalization signal.
#[derive(Debug, Clone, PartialEq)]
pub struct DetectionMap {
    height: usize,
    width: usize,
    values: Vec<f64>,
    source_model: String,
}

impl DetectionMap {
    pub fn new(
        height: usize,
        width: usize,
        values: Vec<f64>,
        source_model: impl Into<String>,
    ) -> Result<Self> {
        if values.len() != height * width {
            return Err(Error::arg(format!(
                "map payload {} does not match {height}x{width}",
                values.len()
            )));
        }
        if !values.iter().all(|v| v.is_finite()) {
            return Err(Error::data("detection map contains non-finite values"));
        }
        Ok(DetectionMap {
            height,
            width,
            values,
            source_model: source_model.into(),
        })
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn width(&self) -> usize {
        self.width
    }

    #[inline]
    pub fn get(&self, r: usize, c: usize) -> f64 {
        self.values[r * self.width + c]
    }

    /// Row-major values.
    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn source_model(&self) -> &str {
        &self.source_model
    }
}

/// Thresholded detection map.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BinaryMask {
    height: usize,
    width: usize,
    data: Vec<bool>,
}

impl BinaryMask {
    pub fn height(&self) -> usize {
        self.height
    }

    pub fn width(&self) -> usize {
        self.width
    }

    #[inline]
    pub fn get(&self, r: usize, c: usize) -> bool {
        self.data[r * self.width + c]
    }

    pub fn data(&self) -> &[bool] {
        &self.data
    }

    pub fn positive_count(&self) -> usize {
        self.data.iter().filter(|&&b| b).count()
    }
}

/// Root mean square error between two equal-length sequences.
pub fn rmse(pred: &[f64], truth: &[f64]) -> Result<f64> {
    if pred.is_empty() {
        return Err(Error::arg("RMSE of an empty sequence"));
    }
    if pred.len() != truth.len() {
        return Err(Error::arg(format!(
            "RMSE length mismatch: {} vs {}",
            pred.len(),
            truth.len()
        )));
    }
    let mut ss = 0.0;
    for (&p, &t) in pred.iter().zip(truth) {
        let d = p - t;
        ss += d * d;
    }
    Ok(sqrt(ss / pred.len() as f64))
}

/// Marks pixels with value >= cutoff (ties count as positive).
pub fn threshold_map(map: &DetectionMap, cutoff: f64) -> BinaryMask {
    BinaryMask {
        height: map.height,
        width: map.width,
        data: map.values.iter().map(|&v| v >= cutoff).collect(),
    }
}

/// Pixel-level segmentation scores against ground truth.
///
/// Counts cover only pixels the truth mask labels; unlabeled pixels are
/// excluded because they have no ground truth to score against.
#[derive(Debug, Clone, PartialEq)]
pub struct SegReport {
    pub threshold: f64,
    pub tp: usize,
    pub fp: usize,
    pub tn: usize,
    pub fn_: usize,
    pub precision: f64,
    pub recall: f64,
    pub iou: f64,
    pub rmse_vs_truth: f64,
}

/// Thresholds the map and scores it against the labeled pixels of `truth`.
pub fn segmentation_metrics(
    map: &DetectionMap,
    truth: &LabelMask,
    threshold: f64,
) -> Result<SegReport> {
    if map.height != truth.height() || map.width != truth.width() {
        return Err(Error::arg(format!(
            "map {}x{} does not match truth {}x{}",
            map.height,
            map.width,
            truth.height(),
            truth.width()
        )));
    }
    let mask = threshold_map(map, threshold);
    let (tp, fp, tn, fn_) = confusion_counts(&mask, truth)?;

    let mut pred_vals = Vec::new();
    let mut truth_vals = Vec::new();
    for (p, cell) in truth.cells().iter().enumerate() {
        if let CellLabel::Known(label) = cell {
            pred_vals.push(map.values[p]);
            truth_vals.push(label.as_value());
        }
    }
    let rmse_vs_truth = rmse(&pred_vals, &truth_vals)?;

    let precision = ratio(tp, tp + fp);
    let recall = ratio(tp, tp + fn_);
    let iou = ratio(tp, tp + fp + fn_);
    Ok(SegReport {
        threshold,
        tp,
        fp,
        tn,
        fn_,
        precision,
        recall,
        iou,
        rmse_vs_truth,
    })
}

/// (tp, fp, tn, fn) over the labeled pixels of `truth`.
pub fn confusion_counts(
    pred: &BinaryMask,
    truth: &LabelMask,
) -> Result<(usize, usize, usize, usize)> {
    if pred.height != truth.height() || pred.width != truth.width() {
        return Err(Error::arg("prediction and truth dims differ"));
    }
    let mut tp = 0;
    let mut fp = 0;
    let mut tn = 0;
    let mut fn_ = 0;
    let mut labeled = 0;
    for (p, cell) in truth.cells().iter().enumerate() {
        let actual = match cell {
            CellLabel::Unlabeled => continue,
            CellLabel::Known(Label::Void) => true,
            CellLabel::Known(Label::Solid) => false,
        };
        labeled += 1;
        match (pred.data[p], actual) {
            (true, true) => tp += 1,
            (true, false) => fp += 1,
            (false, false) => tn += 1,
            (false, true) => fn_ += 1,
        }
    }
    if labeled == 0 {
        return Err(Error::arg("truth mask has no labeled pixels"));
    }
    Ok((tp, fp, tn, fn_))
}

fn ratio(num: usize, den: usize) -> f64 {
    if den == 0 {
        0.0
    } else {
        num as f64 / den as f64
    }
}

/// Maps a unit-interval value to an 8-bit PGM gray level: clamp to [0, 1],
/// scale to 255, round half away from zero.
pub fn quantize_unit(v: f64) -> u8 {
    let clamped = v.clamp(0.0, 1.0);
    round(clamped * 255.0) as u8
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::labeling::{rasterize_rois, RoiRect};

    fn map_of(h: usize, w: usize, values: Vec<f64>) -> DetectionMap {
        DetectionMap::new(h, w, values, "test").unwrap()
    }

    #[test]
    fn rmse_examples() {
        assert_eq!(rmse(&[1.0, 2.0], &[1.0, 2.0]).unwrap(), 0.0);
        // Constant offset c gives |c|.
        let r = rmse(&[3.0, 4.0, 5.0], &[1.0, 2.0, 3.0]).unwrap();
        assert!((r - 2.0).abs() < 1e-12);
        let two = rmse(&[0.0, 1.0], &[1.0, 1.0]).unwrap();
        assert!((two - 0.5_f64.sqrt()).abs() < 1e-12);
        assert!(rmse(&[], &[]).is_err());
        assert!(rmse(&[1.0], &[1.0, 2.0]).is_err());
    }

    #[test]
    fn rmse_symmetric_in_residual_sign() {
        let pred = [0.2, 0.9, 0.4];
        let truth = [0.0, 1.0, 1.0];
        let reflected: Vec<f64> = truth.iter().zip(&pred).map(|(&t, &p)| 2.0 * t - p).collect();
        let a = rmse(&pred, &truth).unwrap();
        let b = rmse(&reflected, &truth).unwrap();
        assert!((a - b).abs() < 1e-12);
    }

    #[test]
    fn threshold_rules() {
        let m = map_of(1, 2, vec![0.3, 0.7]);
        let mask = threshold_map(&m, 0.5);
        assert_eq!(mask.data(), &[false, true]);
        // Cutoff below the minimum marks everything.
        assert_eq!(threshold_map(&m, 0.0).positive_count(), 2);
        // Exact tie counts as positive.
        let tie = threshold_map(&map_of(1, 1, vec![0.5]), 0.5);
        assert!(tie.get(0, 0));
    }

    #[test]
    fn threshold_is_monotone_in_cutoff() {
        let m = map_of(2, 3, vec![0.1, 0.5, 0.9, 0.3, 0.7, 0.2]);
        let mut prev = threshold_map(&m, -1.0).positive_count();
        for i in 0..30 {
            let cutoff = -1.0 + i as f64 * 0.1;
            let count = threshold_map(&m, cutoff).positive_count();
            assert!(count <= prev);
            prev = count;
        }
    }

    #[test]
    fn four_pixel_confusion_by_hand() {
        // truth (1,1,0,0), pred (1,0,0,0): tp=1, fn=1, fp=0, tn=2, iou=0.5.
        let truth = rasterize_rois(
            &[
                RoiRect::new(Label::Void, 0, 0, 1, 2),
                RoiRect::new(Label::Solid, 1, 0, 2, 2),
            ],
            2,
            2,
        )
        .unwrap();
        let map = map_of(2, 2, vec![1.0, 0.0, 0.0, 0.0]);
        let report = segmentation_metrics(&map, &truth, 0.5).unwrap();
        assert_eq!((report.tp, report.fp, report.tn, report.fn_), (1, 0, 2, 1));
        assert_eq!(report.iou, 0.5);
        assert_eq!(report.precision, 1.0);
        assert_eq!(report.recall, 0.5);
    }

    #[test]
    fn perfect_and_disjoint_predictions() {
        let truth = rasterize_rois(
            &[
                RoiRect::new(Label::Void, 0, 0, 1, 1),
                RoiRect::new(Label::Solid, 0, 1, 1, 2),
            ],
            1,
            2,
        )
        .unwrap();
        let perfect = segmentation_metrics(&map_of(1, 2, vec![1.0, 0.0]), &truth, 0.5).unwrap();
        assert_eq!(perfect.precision, 1.0);
        assert_eq!(perfect.recall, 1.0);
        assert_eq!(perfect.iou, 1.0);
        let disjoint = segmentation_metrics(&map_of(1, 2, vec![0.0, 1.0]), &truth, 0.5).unwrap();
        assert_eq!(disjoint.iou, 0.0);
    }

    #[test]
    fn counts_cover_labeled_pixels_only() {
        let mut truth = rasterize_rois(&[RoiRect::new(Label::Void, 0, 0, 1, 2)], 2, 2).unwrap();
        truth.set(1, 0, CellLabel::Known(Label::Solid));
        // Pixel (1,1) stays unlabeled and must not be counted.
        let map = map_of(2, 2, vec![1.0, 0.0, 1.0, 1.0]);
        let report = segmentation_metrics(&map, &truth, 0.5).unwrap();
        assert_eq!(report.tp + report.fp + report.tn + report.fn_, 3);
    }

    #[test]
    fn metrics_require_labeled_truth() {
        let truth = LabelMask::new_unlabeled(1, 2);
        assert!(segmentation_metrics(&map_of(1, 2, vec![0.0, 1.0]), &truth, 0.5).is_err());
    }

    #[test]
    fn quantize_endpoints_and_clamp() {
        assert_eq!(quantize_unit(0.0), 0);
        assert_eq!(quantize_unit(1.0), 255);
        assert_eq!(quantize_unit(1.7), 255);
        assert_eq!(quantize_unit(-0.4), 0);
        assert_eq!(quantize_unit(0.5), 128);
    }
}
