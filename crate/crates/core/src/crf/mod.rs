//! Camera-radar fusion (CRF) annotation: camera-only emulation, Gaussian
//! probability maps, fusion by element-wise product, and ConfMap rendering.

pub mod co;
pub mod confmap;
pub mod params;
pub mod probmap;

use serde::{Deserialize, Serialize};

pub use co::{simulate_co_annotations, CameraAnnotation};
pub use confmap::{gen_confmap, ConfMap, ConfMapRenderer};
pub use params::{ClassParams, ClassTable, CoNoise};
pub use probmap::{camera_prob_map, detect_annotations, fuse, radar_prob_map, Annotation, ProbMap, RadarPeak};

use crate::class::ClassId;
use crate::error::Result;
use crate::radar::{cfar_detect, CfarParams, RaMap, RadarConfig};
use crate::scalar::Scalar;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum AnnotationSource {
    #[serde(rename = "CO")]
    Co,
    #[serde(rename = "CRF")]
    Crf,
    #[serde(rename = "GT")]
    Gt,
}

/// One line of an annotation JSON-lines file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnnotationRecord {
    pub frame: usize,
    pub class: ClassId,
    pub range_m: f64,
    pub azimuth_rad: f64,
    pub score: f64,
    pub source: AnnotationSource,
}

impl AnnotationRecord {
    pub fn annotation(&self) -> Annotation {
        Annotation { class: self.class, range_m: self.range_m, azimuth_rad: self.azimuth_rad, score: self.score }
    }

    pub fn from_annotation(frame: usize, a: &Annotation, source: AnnotationSource) -> Self {
        AnnotationRecord { frame, class: a.class, range_m: a.range_m, azimuth_rad: a.azimuth_rad, score: a.score, source }
    }
}

/// Settings of the fusion annotator.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CrfSettings {
    pub cfar: CfarParams,
    /// Minimum fused probability for an annotation peak.
    pub min_confidence: f64,
    /// Treat the covariance entries `δ_cls`, `δ_r`, `ε(θ)` as standard
    /// deviations (squared before use) instead of variances.
    pub interpret_as_std: bool,
}

impl Default for CrfSettings {
    fn default() -> Self {
        CrfSettings { cfar: CfarParams::default(), min_confidence: 0.3, interpret_as_std: false }
    }
}

/// Fuses one frame's camera annotations with CFAR peaks of its RAMap.
pub fn annotate_frame<T: Scalar>(
    camera: &[CameraAnnotation],
    ramap: &RaMap<T>,
    cfg: &RadarConfig,
    classes: &ClassTable,
    settings: &CrfSettings,
) -> Result<Vec<Annotation>> {
    let grid = cfg.grid();
    let peaks: Vec<RadarPeak> = cfar_detect(ramap, &settings.cfar)?
        .iter()
        .map(|p| {
            let (range_m, azimuth_rad) = p.position(&grid);
            RadarPeak { range_m, azimuth_rad, magnitude: p.magnitude }
        })
        .collect();
    let cam = camera_prob_map::<T>(camera, classes, &grid, settings.interpret_as_std)?;
    let radar = radar_prob_map::<T>(&peaks, cfg, &grid, settings.interpret_as_std);
    let fused = fuse(&cam, &radar)?;
    Ok(detect_annotations(&fused, settings.min_confidence, &grid))
}
