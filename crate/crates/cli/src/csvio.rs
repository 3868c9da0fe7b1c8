//! CSV exports for scores, maps, curves, and reports.
//!
//! Floats are written with Rust's shortest round-trip formatting, so CSV
//! round-trips are exact and artifacts are byte-stable across runs.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use tct_core::eval::{DetectionMap, SegReport};
use tct_core::mlp::TrainReport;
use tct_core::models::CvReport;
use tct_core::pct::FeatureMatrix;

use crate::error::{CliError, Result};

pub fn write_scores(path: &Path, features: &FeatureMatrix) -> Result<()> {
    let mut out = String::new();
    let header: Vec<String> = (1..=features.k()).map(|j| format!("pc{j}")).collect();
    out.push_str(&header.join(","));
    out.push('\n');
    for p in 0..features.n_pixels() {
        let row = features.scores().row(p);
        for (j, v) in row.iter().enumerate() {
            if j > 0 {
                out.push(',');
            }
            let _ = write!(out, "{v}");
        }
        out.push('\n');
    }
    fs::write(path, out)?;
    Ok(())
}

pub fn write_map(path: &Path, map: &DetectionMap) -> Result<()> {
    let mut out = String::new();
    for r in 0..map.height() {
        for c in 0..map.width() {
            if c > 0 {
                out.push(',');
            }
            let _ = write!(out, "{}", map.get(r, c));
        }
        out.push('\n');
    }
    fs::write(path, out)?;
    Ok(())
}

/// Reads a map CSV back (H lines of W comma-separated values).
pub fn read_map(path: &Path, source_model: &str) -> Result<DetectionMap> {
    let text = fs::read_to_string(path)?;
    let mut width = 0usize;
    let mut values = Vec::new();
    let mut height = 0usize;
    for line in text.lines() {
        if line.trim().is_empty() {
            continue;
        }
        let mut cols = 0usize;
        for cell in line.split(',') {
            let v: f64 = cell.trim().parse().map_err(|_| {
                CliError::data(format!("{}: unparseable value '{cell}'", path.display()))
            })?;
            values.push(v);
            cols += 1;
        }
        if width == 0 {
            width = cols;
        } else if cols != width {
            return Err(CliError::data(format!(
                "{}: ragged row ({cols} vs {width} columns)",
                path.display()
            )));
        }
        height += 1;
    }
    if height == 0 {
        return Err(CliError::data(format!("{}: empty map", path.display())));
    }
    Ok(DetectionMap::new(height, width, values, source_model)?)
}

pub fn write_mean_curve(path: &Path, curve: &[(f64, f64)]) -> Result<()> {
    let mut out = String::from("time_s,mean_c\n");
    for (t, m) in curve {
        let _ = writeln!(out, "{t},{m}");
    }
    fs::write(path, out)?;
    Ok(())
}

pub fn write_cv_report(path: &Path, report: &CvReport) -> Result<()> {
    let mut out = String::from("fold,rmse\n");
    for (i, rmse) in report.folds.iter().enumerate() {
        let _ = writeln!(out, "{},{rmse}", i + 1);
    }
    let _ = writeln!(out, "mean,{}", report.mean_rmse);
    fs::write(path, out)?;
    Ok(())
}

pub fn write_train_report(path: &Path, report: &TrainReport) -> Result<()> {
    let mut out = String::from("epoch,train_mse,test_mse,val_mse,lr,grad_norm,accepted\n");
    for (i, rec) in report.epochs.iter().enumerate() {
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{}",
            i + 1,
            rec.train_mse,
            rec.test_mse,
            rec.val_mse,
            rec.lr,
            rec.grad_norm,
            u8::from(rec.accepted)
        );
    }
    fs::write(path, out)?;
    Ok(())
}

/// Per-sample (output - target) errors with split tags, the exportable form
/// of a training error histogram.
pub fn write_error_histogram(
    path: &Path,
    outputs: &[f64],
    targets: &[f64],
    report: &TrainReport,
) -> Result<()> {
    let mut out = String::from("split,output,target,error\n");
    let mut dump = |tag: &str, indices: &[usize]| {
        for &i in indices {
            let _ = writeln!(
                out,
                "{tag},{},{},{}",
                outputs[i],
                targets[i],
                outputs[i] - targets[i]
            );
        }
    };
    dump("train", &report.train_indices);
    dump("test", &report.test_indices);
    dump("validation", &report.val_indices);
    fs::write(path, out)?;
    Ok(())
}

pub fn seg_report_csv(model: &str, dataset: &str, report: &SegReport) -> String {
    let mut out =
        String::from("model,dataset,threshold,tp,fp,tn,fn,precision,recall,iou,rmse_vs_truth\n");
    let _ = writeln!(
        out,
        "{model},{dataset},{},{},{},{},{},{},{},{},{}",
        report.threshold,
        report.tp,
        report.fp,
        report.tn,
        report.fn_,
        report.precision,
        report.recall,
        report.iou,
        report.rmse_vs_truth
    );
    out
}

pub fn write_seg_report(path: &Path, model: &str, dataset: &str, report: &SegReport) -> Result<()> {
    fs::write(path, seg_report_csv(model, dataset, report))?;
    Ok(())
}

/// Human-readable segmentation summary.
pub fn seg_report_text(model: &str, dataset: &str, report: &SegReport) -> String {
    format!(
        "dataset {dataset}, model {model} @ threshold {}\n\
         tp {} fp {} tn {} fn {}\n\
         precision {:.4} recall {:.4} iou {:.4} rmse {:.4}\n",
        report.threshold,
        report.tp,
        report.fp,
        report.tn,
        report.fn_,
        report.precision,
        report.recall,
        report.iou,
        report.rmse_vs_truth
    )
}
