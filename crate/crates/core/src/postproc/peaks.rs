use serde::{Deserialize, Serialize};

use crate::class::ClassId;
use crate::crf::ConfMap;
use crate::radar::cfar::is_strict_local_max;
use crate::radar::PolarGrid;
use crate::scalar::Scalar;

/// A point detection. Serializes as one detections JSON-lines record.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Detection {
    #[serde(rename = "frame")]
    pub frame_index: usize,
    pub class: ClassId,
    pub range_m: f64,
    pub azimuth_rad: f64,
    pub confidence: f64,
}

impl Detection {
    pub fn position(&self) -> (f64, f64) {
        (self.range_m, self.azimuth_rad)
    }
}

/// Cells that are strict maxima of their 3x3 neighborhood within their
/// channel and at least `min_confidence`, as detections at cell centers.
/// Range bin 0 sits at the sensor itself, where OLS has no scale, and is
/// never reported.
pub fn find_peaks<T: Scalar>(conf: &ConfMap<T>, min_confidence: f64, grid: &PolarGrid) -> Vec<Detection> {
    let mut out = Vec::new();
    for class in ClassId::ALL {
        let vals: Vec<f64> = conf.channel(class).iter().map(|v| v.to_f64().unwrap_or(f64::NAN)).collect();
        for r in 1..conf.range_bins {
            for a in 0..conf.azimuth_bins {
                let v = vals[r * conf.azimuth_bins + a];
                if v >= min_confidence && is_strict_local_max(&vals, conf.range_bins, conf.azimuth_bins, r, a) {
                    let (range_m, azimuth_rad) = grid.center_of(r, a);
                    out.push(Detection { frame_index: conf.frame_index, class, range_m, azimuth_rad, confidence: v.clamp(0.0, 1.0) });
                }
            }
        }
    }
    out
}
