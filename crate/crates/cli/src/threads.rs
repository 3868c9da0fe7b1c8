//! Worker-thread budget and the one parallel stage (scene generation).
//!
//! `TCT_THREADS` caps the worker count; 0 or unset means auto. Pixel traces
//! depend only on (scene, pixel index), so splitting the pixel range across
//! threads reproduces the sequential output bit for bit.

use std::env;
use std::thread;

use tct_core::cube::ThermalCube;
use tct_core::labeling::{CellLabel, Label, LabelMask};
use tct_core::synth::{self, SynthScene};

use crate::error::{CliError, Result};

pub const THREADS_ENV: &str = "TCT_THREADS";

/// Resolves the worker budget from `TCT_THREADS` (0 = auto).
pub fn thread_cap() -> Result<usize> {
    match env::var(THREADS_ENV) {
        Err(env::VarError::NotPresent) => Ok(auto_threads()),
        Err(env::VarError::NotUnicode(_)) => Err(CliError::config(format!(
            "{THREADS_ENV} is not valid unicode"
        ))),
        Ok(raw) => {
            let n: usize = raw.trim().parse().map_err(|_| {
                CliError::config(format!(
                    "{THREADS_ENV}='{raw}' is not a nonnegative integer"
                ))
            })?;
            Ok(if n == 0 { auto_threads() } else { n })
        }
    }
}

fn auto_threads() -> usize {
    thread::available_parallelism().map_or(1, |n| n.get())
}

/// Generates a scene cube using up to `threads` workers. The output is
/// identical to [`synth::generate_cube`] regardless of the thread count.
pub fn generate_cube_with_threads(
    scene: &SynthScene,
    threads: usize,
) -> Result<(ThermalCube, LabelMask)> {
    if threads <= 1 {
        return Ok(synth::generate_cube(scene)?);
    }
    let mask = scene.mask()?;
    let profiles = synth::prepare_profiles(scene)?;
    let n_frames = scene.frames();
    let hw = scene.height * scene.width;
    let workers = threads.min(scene.height).max(1);
    let rows_per = scene.height.div_ceil(workers);

    // Each worker fills a pixel-major block for its row band.
    let mut bands: Vec<(usize, Vec<f64>)> = Vec::new();
    thread::scope(|scope| {
        let mut handles = Vec::new();
        for band in 0..workers {
            let r0 = band * rows_per;
            let r1 = ((band + 1) * rows_per).min(scene.height);
            if r0 >= r1 {
                continue;
            }
            let profiles = &profiles;
            let mask = &mask;
            handles.push(scope.spawn(move || {
                let mut block = Vec::with_capacity((r1 - r0) * scene.width * n_frames);
                for r in r0..r1 {
                    for c in 0..scene.width {
                        let label = match mask.get(r, c) {
                            CellLabel::Known(l) => l,
                            CellLabel::Unlabeled => Label::Solid,
                        };
                        block.extend(synth::pixel_trace(scene, profiles, label, r, c));
                    }
                }
                (r0, block)
            }));
        }
        for handle in handles {
            bands.push(handle.join().expect("scene worker panicked"));
        }
    });

    // Scatter the pixel-major bands into the frame-major cube layout.
    let mut data = vec![0.0; hw * n_frames];
    for (r0, block) in bands {
        for (i, chunk) in block.chunks_exact(n_frames).enumerate() {
            let p = r0 * scene.width + i;
            for (t, &v) in chunk.iter().enumerate() {
                data[t * hw + p] = v;
            }
        }
    }
    let cube = ThermalCube::new(scene.height, scene.width, n_frames, scene.sample_rate, data)?;
    Ok((cube, mask))
}
