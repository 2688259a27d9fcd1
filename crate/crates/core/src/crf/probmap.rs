//! Camera and radar Gaussian probability maps and their fusion.

use crate::class::{ClassId, PerClass};
use crate::crf::co::CameraAnnotation;
use crate::crf::params::ClassTable;
use crate::error::{Error, Result};
use crate::radar::cfar::is_strict_local_max;
use crate::radar::{azimuth_resolution_at, PolarGrid, RadarConfig};
use crate::scalar::Scalar;

/// Single-channel probability grid, indexed `[range_bin, azimuth_bin]`.
#[derive(Debug, Clone, PartialEq)]
pub struct ProbMap<T> {
    pub range_bins: usize,
    pub azimuth_bins: usize,
    pub values: Vec<T>,
}

impl<T: Scalar> ProbMap<T> {
    pub fn zeros(grid: &PolarGrid) -> Self {
        ProbMap { range_bins: grid.range_bins, azimuth_bins: grid.azimuth_bins, values: vec![T::zero(); grid.cells()] }
    }

    pub fn filled(grid: &PolarGrid, v: T) -> Self {
        ProbMap { range_bins: grid.range_bins, azimuth_bins: grid.azimuth_bins, values: vec![v; grid.cells()] }
    }

    #[inline]
    pub fn at(&self, range_bin: usize, azimuth_bin: usize) -> T {
        self.values[range_bin * self.azimuth_bins + azimuth_bin]
    }

    pub fn max_value(&self) -> T {
        self.values.iter().copied().fold(T::zero(), T::max)
    }

    fn dims(&self) -> (usize, usize) {
        (self.range_bins, self.azimuth_bins)
    }
}

/// A radar reflection detected by CFAR, in polar coordinates.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RadarPeak {
    pub range_m: f64,
    pub azimuth_rad: f64,
    pub magnitude: f64,
}

/// An object location produced by annotation: `(class, range, azimuth,
/// score)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Annotation {
    pub class: ClassId,
    pub range_m: f64,
    pub azimuth_rad: f64,
    pub score: f64,
}

/// Diagonal-covariance Gaussian in `(range, azimuth)`.
#[derive(Debug, Clone, Copy)]
struct PolarGaussian {
    range_m: f64,
    azimuth_rad: f64,
    range_var: f64,
    azimuth_var: f64,
}

/// Max-combines the max-normalised map of `g` into `map`.
///
/// The quadratic form is separable, so the grid maximum of the object's map is
/// the product of the per-axis maxima and the normalisation cancels the
/// `1 / (2π sqrt|Σ|)` prefactor.
fn splat_max<T: Scalar>(map: &mut ProbMap<T>, ranges: &[f64], azimuths: &[f64], g: &PolarGaussian) -> bool {
    let row: Vec<f64> = ranges.iter().map(|r| (-0.5 * (r - g.range_m).powi(2) / g.range_var).exp()).collect();
    let col: Vec<f64> = azimuths.iter().map(|a| (-0.5 * (a - g.azimuth_rad).powi(2) / g.azimuth_var).exp()).collect();
    let peak_r = row.iter().copied().fold(0.0, f64::max);
    let peak_a = col.iter().copied().fold(0.0, f64::max);
    if !(peak_r > 0.0 && peak_a > 0.0) {
        return false;
    }
    for (i, rv) in row.iter().enumerate() {
        let rv = rv / peak_r;
        if rv == 0.0 {
            continue;
        }
        let out = &mut map.values[i * map.azimuth_bins..(i + 1) * map.azimuth_bins];
        for (cell, av) in out.iter_mut().zip(&col) {
            let v = T::lit(rv * (av / peak_a));
            if v > *cell {
                *cell = v;
            }
        }
    }
    true
}

fn as_variance(v: f64, interpret_as_std: bool) -> f64 {
    if interpret_as_std {
        v * v
    } else {
        v
    }
}

/// Camera probability map per class: each annotation contributes a Gaussian
/// with mean `(ρ, θ)` and covariance `diag((d s / c)², δ_cls)`, normalised
/// to peak 1 over the grid; objects of one class combine by element-wise
/// max.
pub fn camera_prob_map<T: Scalar>(
    annos: &[CameraAnnotation],
    params: &ClassTable,
    grid: &PolarGrid,
    interpret_as_std: bool,
) -> Result<PerClass<ProbMap<T>>> {
    let ranges = grid.ranges();
    let azimuths = grid.azimuths();
    let mut maps = PerClass::from_fn(|_| ProbMap::zeros(grid));
    for a in annos {
        let p = params.get(a.class)?;
        if !(a.depth_m > 0.0 && a.depth_confidence > 0.0 && a.depth_confidence <= 1.0) {
            return Err(Error::config(format!(
                "camera annotation with depth {} / confidence {} outside the valid domain",
                a.depth_m, a.depth_confidence
            )));
        }
        let g = PolarGaussian {
            range_m: a.range_m,
            azimuth_rad: a.azimuth_rad,
            range_var: (a.depth_m * p.scale_constant / a.depth_confidence).powi(2),
            azimuth_var: as_variance(p.azimuth_error, interpret_as_std),
        };
        splat_max(&mut maps[a.class], &ranges, &azimuths, &g);
    }
    Ok(maps)
}

/// Radar probability map: each peak contributes a Gaussian with covariance
/// `diag(δ_r, ε(θ))`, normalised to peak 1; peaks combine by element-wise
/// max. Peaks on the outermost azimuth bins (|θ| = π/2), where the array
/// resolution is undefined, are skipped.
pub fn radar_prob_map<T: Scalar>(peaks: &[RadarPeak], cfg: &RadarConfig, grid: &PolarGrid, interpret_as_std: bool) -> ProbMap<T> {
    let ranges = grid.ranges();
    let azimuths = grid.azimuths();
    let mut map = ProbMap::zeros(grid);
    for p in peaks {
        let Ok(eps) = azimuth_resolution_at(cfg, p.azimuth_rad) else {
            continue;
        };
        let g = PolarGaussian {
            range_m: p.range_m,
            azimuth_rad: p.azimuth_rad,
            range_var: as_variance(cfg.range_resolution_m, interpret_as_std),
            azimuth_var: as_variance(eps, interpret_as_std),
        };
        splat_max(&mut map, &ranges, &azimuths, &g);
    }
    map
}

/// Element-wise product of each class's camera map with the radar map.
pub fn fuse<T: Scalar>(camera: &PerClass<ProbMap<T>>, radar: &ProbMap<T>) -> Result<PerClass<ProbMap<T>>> {
    for (_, m) in camera.iter() {
        if m.dims() != radar.dims() || m.values.len() != radar.values.len() {
            return Err(Error::dims("camera map", radar.dims(), m.dims()));
        }
    }
    Ok(camera.map(|_, m| ProbMap {
        range_bins: m.range_bins,
        azimuth_bins: m.azimuth_bins,
        values: m.values.iter().zip(&radar.values).map(|(a, b)| *a * *b).collect(),
    }))
}

/// Per-class 3x3 strict local maxima with value at least `min_confidence`.
/// Peaks of different classes within one grid cell of each other are
/// deduplicated, keeping the highest score.
pub fn detect_annotations<T: Scalar>(fused: &PerClass<ProbMap<T>>, min_confidence: f64, grid: &PolarGrid) -> Vec<Annotation> {
    struct Cand {
        class: ClassId,
        r: usize,
        a: usize,
        score: f64,
    }
    let mut cands = Vec::new();
    for (class, map) in fused.iter() {
        let vals: Vec<f64> = map.values.iter().map(|v| v.to_f64().unwrap_or(0.0)).collect();
        for r in 0..map.range_bins {
            for a in 0..map.azimuth_bins {
                let v = vals[r * map.azimuth_bins + a];
                if v >= min_confidence && is_strict_local_max(&vals, map.range_bins, map.azimuth_bins, r, a) {
                    cands.push(Cand { class, r, a, score: v });
                }
            }
        }
    }
    cands.sort_by(|x, y| y.score.total_cmp(&x.score));
    let mut kept: Vec<Cand> = Vec::with_capacity(cands.len());
    for c in cands {
        let shadowed = kept
            .iter()
            .any(|k| k.class != c.class && k.r.abs_diff(c.r) <= 1 && k.a.abs_diff(c.a) <= 1);
        if !shadowed {
            kept.push(c);
        }
    }
    kept.into_iter()
        .map(|c| {
            let (range_m, azimuth_rad) = grid.center_of(c.r, c.a);
            Annotation { class: c.class, range_m, azimuth_rad, score: c.score }
        })
        .collect()
}
