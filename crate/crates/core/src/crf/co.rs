use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::class::ClassId;
use crate::crf::params::CoNoise;
use crate::error::Result;
use crate::radar::TruthRecord;

/// One camera-only localization, already projected into radar polar
/// coordinates.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CameraAnnotation {
    pub class: ClassId,
    pub range_m: f64,
    pub azimuth_rad: f64,
    pub depth_m: f64,
    pub depth_confidence: f64,
    pub frame_index: usize,
}

/// Smallest range the camera emulator will report.
const MIN_RANGE_M: f64 = 1e-3;

/// Emulates a monocular 3D localizer: range error is Gaussian with standard
/// deviation proportional to range, azimuth error is Gaussian with fixed
/// standard deviation, and the depth confidence is uniform in
/// `noise.depth_conf_range`.
pub fn simulate_co_annotations(truth: &[TruthRecord], noise: &CoNoise, rng_seed: u64) -> Result<Vec<CameraAnnotation>> {
    noise.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(rng_seed);
    let (lo, hi) = noise.depth_conf_range;
    Ok(truth
        .iter()
        .map(|t| {
            let zr: f64 = StandardNormal.sample(&mut rng);
            let za: f64 = StandardNormal.sample(&mut rng);
            let range_m = (t.range_m * (1.0 + noise.range_noise_fraction * zr)).max(MIN_RANGE_M);
            let conf = if hi > lo { rng.random_range(lo..=hi) } else { lo };
            CameraAnnotation {
                class: t.class,
                range_m,
                azimuth_rad: t.azimuth_rad + noise.azimuth_noise_std * za,
                depth_m: range_m,
                depth_confidence: conf,
                frame_index: t.frame,
            }
        })
        .collect())
}
