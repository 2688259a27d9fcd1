use serde::{Deserialize, Serialize};

use crate::class::ClassId;
use crate::error::Result;
use crate::postproc::Detection;
use crate::radar::{bev_distance_sq, cfar_detect, CfarParams, PolarGrid, RaMap, RadarConfig, TruthRecord};
use crate::scalar::Scalar;

/// Class from peak magnitude, normalized by the coherent gain
/// `samples_per_chirp * num_antennas` so it reads as a reflectivity.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MagnitudeRule {
    pub cyclist_min: f64,
    pub car_min: f64,
}

impl Default for MagnitudeRule {
    fn default() -> Self {
        MagnitudeRule { cyclist_min: 0.45, car_min: 0.8 }
    }
}

impl MagnitudeRule {
    pub fn classify(&self, reflectivity: f64) -> ClassId {
        if reflectivity >= self.car_min {
            ClassId::Car
        } else if reflectivity >= self.cyclist_min {
            ClassId::Cyclist
        } else {
            ClassId::Pedestrian
        }
    }
}

/// Confidence attached to each baseline detection.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum BaselineScore {
    /// CFAR's own statistic, mapped to `1 - noise_mean / magnitude`.
    CfarRatio,
    /// Peak magnitude over the largest magnitude of its frame.
    #[default]
    FrameMax,
}

#[derive(Debug, Clone, Copy)]
pub enum BaselineClassifier<'a> {
    /// Class of the nearest truth of the same frame within `radius_m`;
    /// peaks with no truth nearby fall back to `fallback`.
    NearestTruth { truths: &'a [TruthRecord], radius_m: f64, fallback: MagnitudeRule },
    Magnitude(MagnitudeRule),
}

/// CFAR peaks of every RAMap as classified detections, scored by `score`.
pub fn cfar_baseline<T: Scalar>(
    ramaps: &[RaMap<T>],
    cfg: &RadarConfig,
    cfar: &CfarParams,
    classifier: &BaselineClassifier,
    score: BaselineScore,
) -> Result<Vec<Detection>> {
    let grid: PolarGrid = cfg.grid();
    let gain = (cfg.samples_per_chirp * cfg.num_antennas) as f64;
    let mut out = Vec::new();
    for map in ramaps {
        let peaks = cfar_detect(map, cfar)?;
        let frame_max = map.magnitudes().iter().map(|m| m.to_f64().unwrap_or(0.0)).fold(0.0, f64::max);
        for p in peaks {
            let (range_m, azimuth_rad) = p.position(&grid);
            let by_magnitude = |rule: &MagnitudeRule| rule.classify(p.magnitude / gain);
            let class = match classifier {
                BaselineClassifier::Magnitude(rule) => by_magnitude(rule),
                BaselineClassifier::NearestTruth { truths, radius_m, fallback } => truths
                    .iter()
                    .filter(|t| t.frame == map.frame_index)
                    .map(|t| (bev_distance_sq((range_m, azimuth_rad), (t.range_m, t.azimuth_rad)), t.class))
                    .filter(|(d2, _)| *d2 <= radius_m * radius_m)
                    .min_by(|a, b| a.0.total_cmp(&b.0))
                    .map_or_else(|| by_magnitude(fallback), |(_, c)| c),
            };
            let confidence = match score {
                BaselineScore::CfarRatio => (1.0 - 1.0 / p.ratio()).clamp(0.0, 1.0),
                BaselineScore::FrameMax if frame_max > 0.0 => (p.magnitude / frame_max).min(1.0),
                BaselineScore::FrameMax => 0.0,
            };
            out.push(Detection { frame_index: map.frame_index, class, range_m, azimuth_rad, confidence });
        }
    }
    Ok(out)
}
