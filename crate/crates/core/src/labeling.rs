//! Rectangular regions of interest, per-pixel label masks, and training-set
//! extraction.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::matrix::Matrix;
use crate::pct::FeatureMatrix;

/// Ground-truth class of a pixel: solid concrete (0) or subsurface void (1).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Label {
    Solid,
    Void,
}

impl Label {
    pub fn as_value(self) -> f64 {
        match self {
            Label::Solid => 0.0,
            Label::Void => 1.0,
        }
    }
}

/// Half-open labeled rectangle: rows `r0..r1`, columns `c0..c1`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RoiRect {
    pub label: Label,
    pub r0: usize,
    pub c0: usize,
    pub r1: usize,
    pub c1: usize,
}

impl RoiRect {
    pub fn new(label: Label, r0: usize, c0: usize, r1: usize, c1: usize) -> Self {
        RoiRect { label, r0, c0, r1, c1 }
    }

    pub fn area(&self) -> usize {
        (self.r1 - self.r0) * (self.c1 - self.c0)
    }

    pub fn contains(&self, r: usize, c: usize) -> bool {
        r >= self.r0 && r < self.r1 && c >= self.c0 && c < self.c1
    }

    /// The same rectangle flipped left-right on a grid of the given width.
    pub fn mirrored_horizontal(&self, width: usize) -> RoiRect {
        RoiRect {
            label: self.label,
            r0: self.r0,
            c0: width - self.c1,
            r1: self.r1,
            c1: width - self.c0,
        }
    }
}

/// Per-pixel ternary state.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CellLabel {
    Unlabeled,
    Known(Label),
}

/// Per-pixel label grid; training supervision and evaluation ground truth.
#[derive(Debug, Clone, PartialEq)]
pub struct LabelMask {
    height: usize,
    width: usize,
    labels: Vec<CellLabel>,
}

impl LabelMask {
    pub fn new_unlabeled(height: usize, width: usize) -> Self {
        LabelMask {
            height,
            width,
            labels: vec![CellLabel::Unlabeled; height * width],
        }
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn width(&self) -> usize {
        self.width
    }

    #[inline]
    pub fn get(&self, r: usize, c: usize) -> CellLabel {
        self.labels[r * self.width + c]
    }

    #[inline]
    pub fn set(&mut self, r: usize, c: usize, label: CellLabel) {
        self.labels[r * self.width + c] = label;
    }

    /// Row-major pixel states.
    pub fn cells(&self) -> &[CellLabel] {
        &self.labels
    }

    pub fn labeled_count(&self) -> usize {
        self.labels
            .iter()
            .filter(|c| !matches!(c, CellLabel::Unlabeled))
            .count()
    }
}

/// Paints the ROIs onto a fresh mask. Pixels outside every ROI stay
/// unlabeled. Overlaps of equal label are allowed; conflicting overlaps and
/// out-of-bounds rectangles are rejected.
pub fn rasterize_rois(rois: &[RoiRect], height: usize, width: usize) -> Result<LabelMask> {
    let mut mask = LabelMask::new_unlabeled(height, width);
    for (i, roi) in rois.iter().enumerate() {
        if roi.r0 >= roi.r1 || roi.c0 >= roi.c1 || roi.r1 > height || roi.c1 > width {
            return Err(Error::arg(format!(
                "ROI {i} rows {}..{} cols {}..{} out of bounds for {height}x{width}",
                roi.r0, roi.r1, roi.c0, roi.c1
            )));
        }
        for r in roi.r0..roi.r1 {
            for c in roi.c0..roi.c1 {
                match mask.get(r, c) {
                    CellLabel::Unlabeled => mask.set(r, c, CellLabel::Known(roi.label)),
                    CellLabel::Known(existing) if existing == roi.label => {}
                    CellLabel::Known(_) => {
                        return Err(Error::arg(format!(
                            "ROI {i} conflicts with an earlier label at pixel ({r},{c})"
                        )))
                    }
                }
            }
        }
    }
    Ok(mask)
}

/// Selects the labeled pixels (in row-major pixel order) as a training set.
///
/// Returns the m x k score matrix and the m responses in {0, 1}. Requires
/// both classes to be present: a single-class target would make the
/// regression degenerate.
pub fn extract_training_set(
    features: &FeatureMatrix,
    mask: &LabelMask,
) -> Result<(Matrix, Vec<f64>)> {
    let n_pixels = mask.height * mask.width;
    if features.n_pixels() != n_pixels {
        return Err(Error::arg(format!(
            "feature rows {} do not match mask pixels {n_pixels}",
            features.n_pixels()
        )));
    }
    let k = features.k();
    let mut rows = Vec::new();
    let mut y = Vec::new();
    for (p, cell) in mask.cells().iter().enumerate() {
        if let CellLabel::Known(label) = cell {
            rows.extend_from_slice(features.scores().row(p));
            y.push(label.as_value());
        }
    }
    if y.is_empty() || y.iter().all(|&v| v == 0.0) || y.iter().all(|&v| v == 1.0) {
        return Err(Error::data(
            "training set needs at least one labeled pixel of each class",
        ));
    }
    let m = y.len();
    Ok((Matrix::from_vec(m, k, rows)?, y))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::matrix::Matrix;
    use crate::pct::FeatureMatrix;

    #[test]
    fn full_cover_labels_everything() {
        let mask = rasterize_rois(&[RoiRect::new(Label::Void, 0, 0, 3, 4)], 3, 4).unwrap();
        assert_eq!(mask.labeled_count(), 12);
        assert!(mask
            .cells()
            .iter()
            .all(|c| *c == CellLabel::Known(Label::Void)));
    }

    #[test]
    fn empty_roi_list_leaves_all_unlabeled() {
        let mask = rasterize_rois(&[], 5, 5).unwrap();
        assert_eq!(mask.labeled_count(), 0);
    }

    #[test]
    fn five_rectangles_paint_exactly_their_pixels() {
        // Two void and three solid rectangles on the 90x160 grid.
        let rois = [
            RoiRect::new(Label::Void, 30, 30, 60, 50),
            RoiRect::new(Label::Void, 30, 100, 60, 120),
            RoiRect::new(Label::Solid, 10, 5, 80, 15),
            RoiRect::new(Label::Solid, 30, 70, 60, 80),
            RoiRect::new(Label::Solid, 10, 140, 80, 150),
        ];
        let mask = rasterize_rois(&rois, 90, 160).unwrap();
        // Brute-force check every pixel against the rectangle definitions.
        let mut painted = 0;
        for r in 0..90 {
            for c in 0..160 {
                let expect = rois.iter().find(|roi| roi.contains(r, c)).map(|roi| roi.label);
                match (expect, mask.get(r, c)) {
                    (None, CellLabel::Unlabeled) => {}
                    (Some(l), CellLabel::Known(m)) if l == m => painted += 1,
                    other => panic!("mismatch at ({r},{c}): {other:?}"),
                }
            }
        }
        assert_eq!(painted, rois.iter().map(RoiRect::area).sum::<usize>());
    }

    #[test]
    fn rejects_out_of_bounds_and_conflicts() {
        assert!(rasterize_rois(&[RoiRect::new(Label::Void, 0, 0, 4, 4)], 3, 3).is_err());
        assert!(rasterize_rois(&[RoiRect::new(Label::Void, 2, 2, 2, 3)], 3, 3).is_err());
        let conflicting = [
            RoiRect::new(Label::Void, 0, 0, 2, 2),
            RoiRect::new(Label::Solid, 1, 1, 3, 3),
        ];
        assert!(rasterize_rois(&conflicting, 3, 3).is_err());
        // Same-label overlap is fine.
        let agreeing = [
            RoiRect::new(Label::Void, 0, 0, 2, 2),
            RoiRect::new(Label::Void, 1, 1, 3, 3),
        ];
        assert!(rasterize_rois(&agreeing, 3, 3).is_ok());
    }

    #[test]
    fn rasterize_is_order_independent() {
        let rois = [
            RoiRect::new(Label::Void, 0, 0, 2, 2),
            RoiRect::new(Label::Solid, 3, 3, 5, 5),
            RoiRect::new(Label::Void, 0, 3, 2, 5),
        ];
        let forward = rasterize_rois(&rois, 6, 6).unwrap();
        let reversed: Vec<RoiRect> = rois.iter().rev().copied().collect();
        assert_eq!(forward, rasterize_rois(&reversed, 6, 6).unwrap());
    }

    fn features_of(n: usize, k: usize) -> FeatureMatrix {
        let data: Vec<f64> = (0..n * k).map(|i| i as f64).collect();
        FeatureMatrix::from_scores(Matrix::from_vec(n, k, data).unwrap())
    }

    #[test]
    fn extract_selects_labeled_pixels_in_order() {
        let mut mask = LabelMask::new_unlabeled(2, 3);
        mask.set(0, 1, CellLabel::Known(Label::Void));
        mask.set(1, 0, CellLabel::Known(Label::Solid));
        mask.set(1, 2, CellLabel::Known(Label::Void));
        let features = features_of(6, 2);
        let (x, y) = extract_training_set(&features, &mask).unwrap();
        assert_eq!(x.rows(), 3);
        assert_eq!(y, vec![1.0, 0.0, 1.0]);
        // Pixel order: p=1, p=3, p=5.
        assert_eq!(x.row(0), features.scores().row(1));
        assert_eq!(x.row(1), features.scores().row(3));
        assert_eq!(x.row(2), features.scores().row(5));
    }

    #[test]
    fn extract_full_mask_takes_all_pixels() {
        let rois = [
            RoiRect::new(Label::Void, 0, 0, 1, 3),
            RoiRect::new(Label::Solid, 1, 0, 2, 3),
        ];
        let mask = rasterize_rois(&rois, 2, 3).unwrap();
        let (x, y) = extract_training_set(&features_of(6, 2), &mask).unwrap();
        assert_eq!(x.rows(), 6);
        assert_eq!(y.len(), 6);
    }

    #[test]
    fn extract_rejects_single_class() {
        let mut mask = LabelMask::new_unlabeled(2, 2);
        mask.set(0, 0, CellLabel::Known(Label::Void));
        mask.set(1, 1, CellLabel::Known(Label::Void));
        assert!(extract_training_set(&features_of(4, 2), &mask).is_err());
        assert!(extract_training_set(&features_of(4, 2), &LabelMask::new_unlabeled(2, 2)).is_err());
    }

    #[test]
    fn extract_row_count_matches_labeled_count() {
        let rois = [
            RoiRect::new(Label::Void, 2, 2, 5, 7),
            RoiRect::new(Label::Solid, 6, 1, 9, 4),
        ];
        let mask = rasterize_rois(&rois, 10, 10).unwrap();
        let (x, _) = extract_training_set(&features_of(100, 3), &mask).unwrap();
        assert_eq!(x.rows(), mask.labeled_count());
    }

    #[test]
    fn mirrored_roi_round_trips() {
        let roi = RoiRect::new(Label::Void, 3, 20, 9, 50);
        let twice = roi.mirrored_horizontal(160).mirrored_horizontal(160);
        assert_eq!(roi, twice);
    }
}
