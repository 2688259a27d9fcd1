//! FMCW scene synthesis, the RAMap signal chain and CFAR peak detection.

pub mod cfar;
pub mod chain;
pub mod config;
pub mod grid;
pub mod scene;
pub mod synth;

pub use cfar::{cfar_detect, CfarParams, CfarPeak};
pub use chain::{angle_fft, lowpass_chirps, range_fft, RaMap, RangeAntennaMap, RangeCube, SignalChain};
pub use config::{azimuth_resolution_at, RadarConfig};
pub use grid::{bev_distance_sq, to_bev, PolarGrid};
pub use scene::{class_signature, random_scene, random_scene_in, Difficulty, ScenarioParams, Scene, SceneObject, TruthRecord};
pub use synth::{synth_raw_frame, RawCube};

use crate::error::Result;
use crate::scalar::Scalar;

/// Synthesizes and processes every frame of `scene` into RAMaps.
pub fn simulate_sequence<T: Scalar>(scene: &Scene, chain: &SignalChain<T>, seed: u64) -> Result<Vec<RaMap<T>>> {
    (0..scene.num_frames)
        .map(|f| chain.process(&synth_raw_frame(scene, chain.config(), f, seed)?))
        .collect()
}
