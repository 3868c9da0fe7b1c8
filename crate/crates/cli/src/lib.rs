//! File formats, orchestration, and the `tct` command-line interface for
//! the time-series thermography defect-detection pipeline.
//!
//! The numeric stages live in `tct-core`; this crate adds everything that
//! touches the filesystem: the TCUB cube format, PGM masks and maps, CSV
//! reports, JSON documents for models and scenes, the run manifest, and the
//! config-driven pipeline runner.

pub mod csvio;
pub mod error;
pub mod jsonio;
pub mod manifest;
pub mod pgm;
pub mod pipeline;
pub mod tcub;
pub mod threads;

pub use error::{CliError, Result};
