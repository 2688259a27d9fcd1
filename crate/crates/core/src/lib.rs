//! Radar object detection pipeline core: FMCW scene synthesis and the RAMap
//! signal chain, camera-radar fusion annotation, ConfMap rendering,
//! location-based NMS and OLS-based evaluation.
//!
//! Numeric code is generic over [`Scalar`] (`f32` / `f64`); the aliases
//! below name the concrete instantiations used by the pipeline.

pub mod class;
pub mod crf;
pub mod error;
pub mod eval;
pub mod io;
pub mod postproc;
pub mod radar;
pub mod scalar;

pub use class::{ClassId, PerClass, NUM_CLASSES};
pub use error::{Error, Result};
pub use scalar::{Scalar, Strides};

pub type RaMapF32 = radar::RaMap<f32>;
pub type RaMapF64 = radar::RaMap<f64>;
pub type RawCubeF32 = radar::RawCube<f32>;
pub type RawCubeF64 = radar::RawCube<f64>;
pub type ConfMapF32 = crf::ConfMap<f32>;
pub type ConfMapF64 = crf::ConfMap<f64>;
pub type ProbMapF32 = crf::ProbMap<f32>;
pub type ProbMapF64 = crf::ProbMap<f64>;

pub use eval::{EvalReport, SplitReport};
pub use postproc::{Detection, OlsParams};
