//! The `rodkit` pipeline: configuration, dataset layout, the commands behind
//! the binary, and PGM/PPM plotting.

pub mod commands;
pub mod config;
pub mod dataset;
pub mod plot;

pub use config::PipelineConfig;
pub use dataset::{Dataset, SequenceDir, SequenceMeta, Supervision};

use rodkit_core::Error;

/// Process exit code for an error: 3 for numerical failures, 2 otherwise.
pub fn exit_code(err: &Error) -> u8 {
    match err {
        Error::Numerical(_) => 3,
        _ => 2,
    }
}
