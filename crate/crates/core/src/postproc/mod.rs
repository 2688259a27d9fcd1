//! From predicted ConfMaps to detections: peak extraction, OLS, L-NMS and
//! merging of overlapping snippet predictions.

pub mod merge;
pub mod nms;
pub mod ols;
pub mod peaks;

pub use merge::{merge_confmaps, window_starts};
pub use nms::l_nms;
pub use ols::{ols, ols_value, OlsParams};
pub use peaks::{find_peaks, Detection};

use crate::crf::ConfMap;
use crate::error::Result;
use crate::radar::PolarGrid;
use crate::scalar::Scalar;

#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PostprocSettings {
    pub ols_threshold: f64,
    pub min_confidence: f64,
    /// Inference window stride in frames.
    pub stride: usize,
}

impl Default for PostprocSettings {
    fn default() -> Self {
        PostprocSettings { ols_threshold: 0.3, min_confidence: 0.3, stride: 8 }
    }
}

/// Peaks followed by L-NMS on one frame's ConfMap.
pub fn detect_frame<T: Scalar>(conf: &ConfMap<T>, grid: &PolarGrid, params: &OlsParams, settings: &PostprocSettings) -> Result<Vec<Detection>> {
    l_nms(&find_peaks(conf, settings.min_confidence, grid), params, settings.ols_threshold)
}
