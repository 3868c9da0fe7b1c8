//! Thermal cube storage, spatial binning, and raster reshaping.
//!
//! A recording is an H x W grid of surface temperatures sampled over T
//! frames. Frames are stored frame-major (frame 0 row-major, then frame 1,
//! ...), matching the on-disk layout. The raster form puts one pixel per
//! row and one frame per column, which is the sample-by-feature orientation
//! the learning stages consume.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::matrix::Matrix;

/// H x W x T grid of surface temperatures in degrees Celsius.
#[derive(Debug, Clone, PartialEq)]
pub struct ThermalCube {
    height: usize,
    width: usize,
    frames: usize,
    sample_rate: f64,
    /// Frame-major: index (r, c, t) lives at `t * H * W + r * W + c`.
    data: Vec<f64>,
}

impl ThermalCube {
    pub fn new(
        height: usize,
        width: usize,
        frames: usize,
        sample_rate: f64,
        data: Vec<f64>,
    ) -> Result<Self> {
        if height < 1 || width < 1 {
            return Err(Error::arg(format!(
                "cube dimensions must be at least 1x1, got {height}x{width}"
            )));
        }
        if frames < 2 {
            return Err(Error::arg(format!(
                "cube must have at least 2 frames, got {frames}"
            )));
        }
        if !crate::error::is_positive(sample_rate) {
            return Err(Error::arg(format!(
                "sample rate must be positive and finite, got {sample_rate}"
            )));
        }
        if data.len() != height * width * frames {
            return Err(Error::data(format!(
                "payload holds {} values, expected {}x{}x{} = {}",
                data.len(),
                height,
                width,
                frames,
                height * width * frames
            )));
        }
        if !data.iter().all(|v| v.is_finite()) {
            return Err(Error::data("cube payload contains non-finite values"));
        }
        Ok(ThermalCube {
            height,
            width,
            frames,
            sample_rate,
            data,
        })
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn frames(&self) -> usize {
        self.frames
    }

    pub fn n_pixels(&self) -> usize {
        self.height * self.width
    }

    pub fn sample_rate(&self) -> f64 {
        self.sample_rate
    }

    #[inline]
    pub fn at(&self, r: usize, c: usize, t: usize) -> f64 {
        debug_assert!(r < self.height && c < self.width && t < self.frames);
        self.data[t * self.height * self.width + r * self.width + c]
    }

    /// Row-major pixel values of frame `t`.
    pub fn frame(&self, t: usize) -> &[f64] {
        let hw = self.height * self.width;
        &self.data[t * hw..(t + 1) * hw]
    }

    /// Frame-major payload, the on-disk order.
    pub fn data(&self) -> &[f64] {
        &self.data
    }
}

/// The cube unfolded to one pixel per row and one frame per column.
///
/// Pixel `p` is row-major: `p = r * W + c`. Time-series imagery is often
/// stored transposed (frames in rows); pixels-in-rows is kept as the one
/// canonical orientation so that "sample = pixel" holds for the learning
/// stages.
#[derive(Debug, Clone, PartialEq)]
pub struct RasterMatrix {
    values: Matrix,
    origin_dims: (usize, usize),
}

impl RasterMatrix {
    pub fn new(values: Matrix, origin_dims: (usize, usize)) -> Result<Self> {
        if origin_dims.0 * origin_dims.1 != values.rows() {
            return Err(Error::arg(format!(
                "origin dims {}x{} do not match {} pixel rows",
                origin_dims.0,
                origin_dims.1,
                values.rows()
            )));
        }
        if !values.all_finite() {
            return Err(Error::data("raster contains non-finite values"));
        }
        Ok(RasterMatrix {
            values,
            origin_dims,
        })
    }

    pub fn n_pixels(&self) -> usize {
        self.values.rows()
    }

    pub fn n_frames(&self) -> usize {
        self.values.cols()
    }

    pub fn origin_dims(&self) -> (usize, usize) {
        self.origin_dims
    }

    #[inline]
    pub fn get(&self, pixel: usize, frame: usize) -> f64 {
        self.values.get(pixel, frame)
    }

    /// Temperature trace of one pixel.
    pub fn pixel_trace(&self, pixel: usize) -> &[f64] {
        self.values.row(pixel)
    }

    pub fn values(&self) -> &Matrix {
        &self.values
    }
}

/// Block-averages each frame over non-overlapping `window x window` windows.
///
/// Output dims are floor(H/window) x floor(W/window); trailing rows/columns
/// that do not fill a block are dropped. `window = 1` returns the cube
/// unchanged.
pub fn bin_spatial(cube: &ThermalCube, window: usize) -> Result<ThermalCube> {
    if window < 1 {
        return Err(Error::arg("binning window must be at least 1"));
    }
    if window > cube.height() || window > cube.width() {
        return Err(Error::arg(format!(
            "binning window {window} exceeds cube dims {}x{}",
            cube.height(),
            cube.width()
        )));
    }
    if window == 1 {
        return Ok(cube.clone());
    }
    let out_h = cube.height() / window;
    let out_w = cube.width() / window;
    let norm = 1.0 / (window * window) as f64;
    let mut data = Vec::with_capacity(out_h * out_w * cube.frames());
    for t in 0..cube.frames() {
        let frame = cube.frame(t);
        for br in 0..out_h {
            for bc in 0..out_w {
                let mut sum = 0.0;
                for r in br * window..(br + 1) * window {
                    let row = &frame[r * cube.width()..(r + 1) * cube.width()];
                    for &v in &row[bc * window..(bc + 1) * window] {
                        sum += v;
                    }
                }
                data.push(sum * norm);
            }
        }
    }
    ThermalCube::new(out_h, out_w, cube.frames(), cube.sample_rate(), data)
}

/// Unfolds the cube into the pixel-by-frame raster matrix. Lossless given
/// the recorded origin dims; see [`to_cube`].
pub fn to_raster(cube: &ThermalCube) -> RasterMatrix {
    let n_pixels = cube.n_pixels();
    let n_frames = cube.frames();
    let mut data = vec![0.0; n_pixels * n_frames];
    for t in 0..n_frames {
        let frame = cube.frame(t);
        for (p, &v) in frame.iter().enumerate() {
            data[p * n_frames + t] = v;
        }
    }
    let values = Matrix::from_vec(n_pixels, n_frames, data).expect("sized above");
    RasterMatrix {
        values,
        origin_dims: (cube.height(), cube.width()),
    }
}

/// Inverse of [`to_raster`]. The raster does not carry a sample rate, so it
/// must be supplied.
pub fn to_cube(raster: &RasterMatrix, sample_rate: f64) -> Result<ThermalCube> {
    let (h, w) = raster.origin_dims();
    let n_frames = raster.n_frames();
    let mut data = vec![0.0; h * w * n_frames];
    for p in 0..raster.n_pixels() {
        for (t, &v) in raster.pixel_trace(p).iter().enumerate() {
            data[t * h * w + p] = v;
        }
    }
    ThermalCube::new(h, w, n_frames, sample_rate, data)
}

/// Per-frame spatial mean as (time in seconds, mean temperature) pairs.
pub fn mean_curve(cube: &ThermalCube) -> Vec<(f64, f64)> {
    let n = cube.n_pixels() as f64;
    (0..cube.frames())
        .map(|t| {
            let mean = cube.frame(t).iter().sum::<f64>() / n;
            (t as f64 / cube.sample_rate(), mean)
        })
        .collect()
}
