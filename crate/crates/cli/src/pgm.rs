//! 8-bit binary PGM (P5) for label masks and detection maps.
//!
//! Masks encode solid as 0, void as 255, unlabeled as 128. Maps quantize
//! the unit interval to 0..=255 after clamping.

use std::fs;
use std::io::Write;
use std::path::Path;

use tct_core::eval::{quantize_unit, DetectionMap};
use tct_core::labeling::{CellLabel, Label, LabelMask};

use crate::error::{CliError, Result};

const SOLID_BYTE: u8 = 0;
const VOID_BYTE: u8 = 255;
const UNLABELED_BYTE: u8 = 128;

fn write_pgm(path: &Path, width: usize, height: usize, bytes: &[u8]) -> Result<()> {
    let mut out = Vec::with_capacity(bytes.len() + 32);
    write!(out, "P5\n{width} {height}\n255\n")?;
    out.extend_from_slice(bytes);
    fs::write(path, out)?;
    Ok(())
}

pub fn write_mask(path: &Path, mask: &LabelMask) -> Result<()> {
    let bytes: Vec<u8> = mask
        .cells()
        .iter()
        .map(|cell| match cell {
            CellLabel::Known(Label::Solid) => SOLID_BYTE,
            CellLabel::Known(Label::Void) => VOID_BYTE,
            CellLabel::Unlabeled => UNLABELED_BYTE,
        })
        .collect();
    write_pgm(path, mask.width(), mask.height(), &bytes)
}

pub fn write_map(path: &Path, map: &DetectionMap) -> Result<()> {
    let bytes: Vec<u8> = map.values().iter().map(|&v| quantize_unit(v)).collect();
    write_pgm(path, map.width(), map.height(), &bytes)
}

/// Parses a P5 header: magic, whitespace/comment-separated width, height,
/// maxval, then a single whitespace byte before the payload.
fn parse_header(data: &[u8], path: &Path) -> Result<(usize, usize, usize)> {
    if data.len() < 2 || &data[0..2] != b"P5" {
        return Err(CliError::format(format!(
            "{}: not a binary PGM (P5)",
            path.display()
        )));
    }
    let mut pos = 2;
    let mut fields = [0usize; 3];
    for field in fields.iter_mut() {
        // Skip whitespace and comment lines.
        loop {
            while pos < data.len() && data[pos].is_ascii_whitespace() {
                pos += 1;
            }
            if pos < data.len() && data[pos] == b'#' {
                while pos < data.len() && data[pos] != b'\n' {
                    pos += 1;
                }
            } else {
                break;
            }
        }
        let start = pos;
        while pos < data.len() && data[pos].is_ascii_digit() {
            pos += 1;
        }
        if start == pos {
            return Err(CliError::format(format!(
                "{}: malformed PGM header",
                path.display()
            )));
        }
        *field = std::str::from_utf8(&data[start..pos])
            .expect("digits")
            .parse()
            .map_err(|_| CliError::format(format!("{}: header field overflow", path.display())))?;
    }
    if pos >= data.len() || !data[pos].is_ascii_whitespace() {
        return Err(CliError::format(format!(
            "{}: malformed PGM header",
            path.display()
        )));
    }
    pos += 1;
    let (width, height, maxval) = (fields[0], fields[1], fields[2]);
    if maxval != 255 {
        return Err(CliError::format(format!(
            "{}: maxval {maxval} unsupported, expected 255",
            path.display()
        )));
    }
    let expected = width
        .checked_mul(height)
        .ok_or_else(|| CliError::data(format!("{}: dimensions overflow", path.display())))?;
    if data.len() - pos != expected {
        return Err(CliError::data(format!(
            "{}: payload is {} bytes, expected {}x{}",
            path.display(),
            data.len() - pos,
            width,
            height
        )));
    }
    Ok((width, height, pos))
}

pub fn read_mask(path: &Path) -> Result<LabelMask> {
    let data = fs::read(path)?;
    let (width, height, offset) = parse_header(&data, path)?;
    let mut mask = LabelMask::new_unlabeled(height, width);
    for (i, &b) in data[offset..].iter().enumerate() {
        let cell = match b {
            SOLID_BYTE => CellLabel::Known(Label::Solid),
            VOID_BYTE => CellLabel::Known(Label::Void),
            UNLABELED_BYTE => CellLabel::Unlabeled,
            other => {
                return Err(CliError::data(format!(
                    "{}: byte {other} is not a mask level (0, 128, 255)",
                    path.display()
                )))
            }
        };
        mask.set(i / width, i % width, cell);
    }
    Ok(mask)
}
