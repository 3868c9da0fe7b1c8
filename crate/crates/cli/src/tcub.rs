//! The TCUB on-disk cube format and the CSV-per-frame ingest path.
//!
//! TCUB layout (all little-endian): bytes 0-3 magic `TCUB`, u32 version = 1,
//! u32 height, u32 width, u32 frames, f32 sample rate in Hz, then
//! H*W*T f32 temperatures frame-major (frame 0 row-major pixels, frame 1,
//! ...). Values are f32 on disk and promoted to f64 in memory.

use std::fs;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use tct_core::cube::ThermalCube;

use crate::error::{CliError, Result};

const MAGIC: &[u8; 4] = b"TCUB";
const VERSION: u32 = 1;

pub fn save_cube(path: &Path, cube: &ThermalCube) -> Result<()> {
    let file = fs::File::create(path)?;
    let mut w = BufWriter::new(file);
    w.write_all(MAGIC)?;
    w.write_all(&VERSION.to_le_bytes())?;
    w.write_all(&(cube.height() as u32).to_le_bytes())?;
    w.write_all(&(cube.width() as u32).to_le_bytes())?;
    w.write_all(&(cube.frames() as u32).to_le_bytes())?;
    w.write_all(&(cube.sample_rate() as f32).to_le_bytes())?;
    for &v in cube.data() {
        w.write_all(&(v as f32).to_le_bytes())?;
    }
    w.flush()?;
    Ok(())
}

pub fn load_cube(path: &Path) -> Result<ThermalCube> {
    let file = fs::File::open(path)?;
    let mut r = BufReader::new(file);
    let mut header = [0u8; 4 + 4 + 4 + 4 + 4 + 4];
    r.read_exact(&mut header)
        .map_err(|_| CliError::format(format!("{}: truncated TCUB header", path.display())))?;
    if &header[0..4] != MAGIC {
        return Err(CliError::format(format!(
            "{}: bad magic {:?}, expected \"TCUB\"",
            path.display(),
            &header[0..4]
        )));
    }
    let u32_at = |o: usize| u32::from_le_bytes(header[o..o + 4].try_into().unwrap());
    let version = u32_at(4);
    if version != VERSION {
        return Err(CliError::format(format!(
            "{}: unsupported TCUB version {version}",
            path.display()
        )));
    }
    let height = u32_at(8) as usize;
    let width = u32_at(12) as usize;
    let frames = u32_at(16) as usize;
    let sample_rate = f32::from_le_bytes(header[20..24].try_into().unwrap()) as f64;
    if height < 1 || width < 1 || frames < 2 || sample_rate.is_nan() || sample_rate <= 0.0 {
        return Err(CliError::data(format!(
            "{}: degenerate header ({height}x{width}x{frames} at {sample_rate} Hz)",
            path.display()
        )));
    }

    let expected = height
        .checked_mul(width)
        .and_then(|hw| hw.checked_mul(frames))
        .ok_or_else(|| CliError::data(format!("{}: dimensions overflow", path.display())))?;
    let mut payload = Vec::new();
    r.read_to_end(&mut payload)?;
    if payload.len() != expected * 4 {
        return Err(CliError::data(format!(
            "{}: payload is {} bytes, expected {} ({}x{}x{} f32 values)",
            path.display(),
            payload.len(),
            expected * 4,
            height,
            width,
            frames
        )));
    }
    let mut data = Vec::with_capacity(expected);
    for chunk in payload.chunks_exact(4) {
        let v = f32::from_le_bytes(chunk.try_into().unwrap());
        if !v.is_finite() {
            return Err(CliError::data(format!(
                "{}: payload contains non-finite temperatures",
                path.display()
            )));
        }
        data.push(v as f64);
    }
    Ok(ThermalCube::new(height, width, frames, sample_rate, data)?)
}

/// Loads a directory of `frame_%05d.csv` files, each H rows of W
/// comma-separated values. CSV frames carry no timing metadata, so the
/// sample rate must be supplied.
pub fn load_csv_dir(dir: &Path, sample_rate: f64) -> Result<ThermalCube> {
    let mut frames: Vec<_> = fs::read_dir(dir)?
        .filter_map(|e| e.ok())
        .map(|e| e.path())
        .filter(|p| {
            p.file_name()
                .and_then(|n| n.to_str())
                .is_some_and(|n| n.starts_with("frame_") && n.ends_with(".csv"))
        })
        .collect();
    frames.sort();
    if frames.len() < 2 {
        return Err(CliError::data(format!(
            "{}: found {} frame_*.csv files, need at least 2",
            dir.display(),
            frames.len()
        )));
    }
    let mut height = 0usize;
    let mut width = 0usize;
    let mut per_frame: Vec<Vec<f64>> = Vec::with_capacity(frames.len());
    for path in &frames {
        let text = fs::read_to_string(path)?;
        let mut rows = 0usize;
        let mut values = Vec::new();
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
                    "{}: row has {cols} columns, expected {width}",
                    path.display()
                )));
            }
            rows += 1;
        }
        if height == 0 {
            height = rows;
        } else if rows != height {
            return Err(CliError::data(format!(
                "{}: frame has {rows} rows, expected {height}",
                path.display()
            )));
        }
        per_frame.push(values);
    }
    let mut data = Vec::with_capacity(height * width * per_frame.len());
    for frame in &per_frame {
        data.extend_from_slice(frame);
    }
    Ok(ThermalCube::new(
        height,
        width,
        per_frame.len(),
        sample_rate,
        data,
    )?)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CubeFormat {
    Tcub,
    CsvDir,
}

impl CubeFormat {
    pub fn parse(name: &str) -> Result<Self> {
        match name {
            "tcub" => Ok(CubeFormat::Tcub),
            "csv" => Ok(CubeFormat::CsvDir),
            other => Err(CliError::config(format!(
                "unknown cube format '{other}' (expected 'tcub' or 'csv')"
            ))),
        }
    }
}

pub fn load(path: &Path, format: CubeFormat, sample_rate: Option<f64>) -> Result<ThermalCube> {
    match format {
        CubeFormat::Tcub => load_cube(path),
        CubeFormat::CsvDir => {
            let rate = sample_rate.ok_or_else(|| {
                CliError::config("csv ingest needs --sample-rate (the files carry no timing)")
            })?;
            load_csv_dir(path, rate)
        }
    }
}
