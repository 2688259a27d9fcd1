use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::radar::chain::RaMap;
use crate::radar::grid::PolarGrid;
use crate::scalar::Scalar;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CfarParams {
    /// Guard cells on each side of the cell under test.
    pub guard: usize,
    /// Training-ring thickness outside the guard band.
    pub train: usize,
    /// Detection factor over the training-ring mean; must exceed 1.
    pub scale: f64,
}

impl Default for CfarParams {
    fn default() -> Self {
        CfarParams { guard: 2, train: 4, scale: 3.0 }
    }
}

impl CfarParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.scale > 1.0) || !self.scale.is_finite() {
            return Err(Error::config(format!("cfar scale must be > 1, got {}", self.scale)));
        }
        if self.train == 0 {
            return Err(Error::config("cfar train ring must be at least one cell thick"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CfarPeak {
    pub range_bin: usize,
    pub azimuth_bin: usize,
    pub magnitude: f64,
    /// Mean magnitude of the training ring.
    pub noise_mean: f64,
}

impl CfarPeak {
    /// Test statistic: magnitude over the training-ring mean.
    pub fn ratio(&self) -> f64 {
        if self.noise_mean > 0.0 {
            self.magnitude / self.noise_mean
        } else {
            f64::INFINITY
        }
    }

    /// Polar position `(range_m, azimuth_rad)` of the peak cell.
    pub fn position(&self, grid: &PolarGrid) -> (f64, f64) {
        grid.center_of(self.range_bin, self.azimuth_bin)
    }
}

/// Summed-area table with a zero first row and column.
struct Integral {
    cols: usize,
    sums: Vec<f64>,
}

impl Integral {
    fn new(values: &[f64], rows: usize, cols: usize) -> Self {
        let w = cols + 1;
        let mut sums = vec![0.0; (rows + 1) * w];
        for r in 0..rows {
            let mut row = 0.0;
            for c in 0..cols {
                row += values[r * cols + c];
                sums[(r + 1) * w + c + 1] = sums[r * w + c + 1] + row;
            }
        }
        Integral { cols, sums }
    }

    /// Sum over the inclusive rectangle `[r0, r1] x [c0, c1]`.
    fn rect(&self, r0: usize, r1: usize, c0: usize, c1: usize) -> f64 {
        let w = self.cols + 1;
        self.sums[(r1 + 1) * w + c1 + 1] - self.sums[r0 * w + c1 + 1] - self.sums[(r1 + 1) * w + c0] + self.sums[r0 * w + c0]
    }
}

/// Two-dimensional cell-averaging CFAR on RAMap magnitude.
///
/// A cell is reported when its magnitude exceeds `scale` times the mean of
/// its training ring (cells at Chebyshev distance in `(guard, guard + train]`,
/// truncated at the map edges) and it is a strict maximum of its 3x3
/// neighborhood.
pub fn cfar_detect<T: Scalar>(ramap: &RaMap<T>, params: &CfarParams) -> Result<Vec<CfarPeak>> {
    params.validate()?;
    let (rows, cols) = (ramap.range_bins, ramap.azimuth_bins);
    let mag: Vec<f64> = ramap.cells.iter().map(|c| c.norm().to_f64().unwrap_or(f64::NAN)).collect();
    let table = Integral::new(&mag, rows, cols);
    let outer = params.guard + params.train;
    let box_of = |center: usize, reach: usize, len: usize| (center.saturating_sub(reach), (center + reach).min(len - 1));

    let mut peaks = Vec::new();
    for r in 0..rows {
        for c in 0..cols {
            let m = mag[r * cols + c];
            if !is_strict_local_max(&mag, rows, cols, r, c) {
                continue;
            }
            let (or0, or1) = box_of(r, outer, rows);
            let (oc0, oc1) = box_of(c, outer, cols);
            let (gr0, gr1) = box_of(r, params.guard, rows);
            let (gc0, gc1) = box_of(c, params.guard, cols);
            let count = (or1 - or0 + 1) * (oc1 - oc0 + 1) - (gr1 - gr0 + 1) * (gc1 - gc0 + 1);
            if count == 0 {
                continue;
            }
            let ring = table.rect(or0, or1, oc0, oc1) - table.rect(gr0, gr1, gc0, gc1);
            let mean = (ring / count as f64).max(0.0);
            if m > params.scale * mean {
                peaks.push(CfarPeak { range_bin: r, azimuth_bin: c, magnitude: m, noise_mean: mean });
            }
        }
    }
    Ok(peaks)
}

pub(crate) fn is_strict_local_max(values: &[f64], rows: usize, cols: usize, r: usize, c: usize) -> bool {
    let v = values[r * cols + c];
    for nr in r.saturating_sub(1)..=(r + 1).min(rows - 1) {
        for nc in c.saturating_sub(1)..=(c + 1).min(cols - 1) {
            if (nr, nc) != (r, c) && !(v > values[nr * cols + nc]) {
                return false;
            }
        }
    }
    true
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_complex::Complex;

    fn map_from(mags: &[f64], rows: usize, cols: usize) -> RaMap<f64> {
        RaMap {
            range_bins: rows,
            azimuth_bins: cols,
            frame_index: 0,
            cells: mags.iter().map(|&m| Complex::new(m, 0.0)).collect(),
        }
    }

    /// Direct window scan: no integral image, explicit ring enumeration.
    fn scan_oracle(mags: &[f64], rows: usize, cols: usize, p: &CfarParams) -> Vec<(usize, usize)> {
        let mut out = vec![];
        let (g, t) = (p.guard as isize, (p.guard + p.train) as isize);
        for r in 0..rows as isize {
            for c in 0..cols as isize {
                let v = mags[(r * cols as isize + c) as usize];
                let mut local_max = true;
                let (mut sum, mut n) = (0.0, 0usize);
                for dr in -t..=t {
                    for dc in -t..=t {
                        let (nr, nc) = (r + dr, c + dc);
                        if nr < 0 || nc < 0 || nr >= rows as isize || nc >= cols as isize {
                            continue;
                        }
                        let w = mags[(nr * cols as isize + nc) as usize];
                        if dr.abs().max(dc.abs()) == 1 && w >= v {
                            local_max = false;
                        }
                        if dr.abs().max(dc.abs()) > g {
                            sum += w;
                            n += 1;
                        }
                    }
                }
                if local_max && n > 0 && v > p.scale * sum / n as f64 {
                    out.push((r as usize, c as usize));
                }
            }
        }
        out
    }

    #[test]
    fn constant_map_has_no_detections() {
        let map = map_from(&vec![2.5; 32 * 32], 32, 32);
        assert!(cfar_detect(&map, &CfarParams::default()).unwrap().is_empty());
    }

    #[test]
    fn isolated_spike_is_detected_once() {
        let mut mags = vec![0.0; 32 * 32];
        mags[10 * 32 + 20] = 4.0;
        let peaks = cfar_detect(&map_from(&mags, 32, 32), &CfarParams::default()).unwrap();
        assert_eq!(peaks, vec![CfarPeak { range_bin: 10, azimuth_bin: 20, magnitude: 4.0, noise_mean: 0.0 }]);
        assert_eq!(peaks[0].ratio(), f64::INFINITY);
        let mut mags = vec![0.5; 32 * 32];
        mags[10 * 32 + 20] = 4.0;
        let peaks = cfar_detect(&map_from(&mags, 32, 32), &CfarParams::default()).unwrap();
        assert_eq!(peaks.len(), 1);
        assert!((peaks[0].ratio() - 8.0).abs() < 1e-12);
        // spike in the corner uses a truncated ring
        let mut mags = vec![0.0; 32 * 32];
        mags[0] = 1.0;
        assert_eq!(cfar_detect(&map_from(&mags, 32, 32), &CfarParams::default()).unwrap().len(), 1);
    }

    #[test]
    fn scale_must_exceed_one() {
        let map = map_from(&[0.0; 16], 4, 4);
        let p = CfarParams { scale: 1.0, ..Default::default() };
        assert!(matches!(cfar_detect(&map, &p), Err(Error::Config(_))));
    }

    #[test]
    fn matches_window_scan_oracle_on_noise() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(4);
        for trial in 0..5 {
            let (rows, cols) = (24 + trial, 20);
            let mags: Vec<f64> = (0..rows * cols)
                .map(|_| {
                    let base: f64 = rng.random_range(0.0..1.0);
                    if rng.random_bool(0.03) { base * 20.0 } else { base }
                })
                .collect();
            let p = CfarParams { guard: 1 + trial % 2, train: 2 + trial % 3, scale: 2.0 };
            let got: Vec<_> = cfar_detect(&map_from(&mags, rows, cols), &p).unwrap().iter().map(|d| (d.range_bin, d.azimuth_bin)).collect();
            assert_eq!(got, scan_oracle(&mags, rows, cols, &p));
        }
    }
}
