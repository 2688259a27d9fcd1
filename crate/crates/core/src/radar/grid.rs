use serde::{Deserialize, Serialize};

/// Range-azimuth cell geometry shared by RAMaps, probability maps and
/// ConfMaps.
///
/// Range bins are uniform in meters starting at 0. Azimuth bins are uniform in
/// `sin θ` over `[-1, 1]`, which is the native domain of an FFT across a
/// uniform linear array.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PolarGrid {
    pub range_bins: usize,
    pub azimuth_bins: usize,
    pub range_resolution_m: f64,
}

impl PolarGrid {
    pub fn cells(&self) -> usize {
        self.range_bins * self.azimuth_bins
    }

    pub fn range_of_bin(&self, bin: usize) -> f64 {
        bin as f64 * self.range_resolution_m
    }

    /// Fractional range bin of a range in meters.
    pub fn range_bin_f(&self, range_m: f64) -> f64 {
        range_m / self.range_resolution_m
    }

    /// Nearest range bin, or `None` outside the grid.
    pub fn range_bin(&self, range_m: f64) -> Option<usize> {
        let b = self.range_bin_f(range_m).round();
        (b >= 0.0 && b < self.range_bins as f64).then_some(b as usize)
    }

    pub fn sin_of_bin(&self, bin: usize) -> f64 {
        2.0 * bin as f64 / (self.azimuth_bins - 1) as f64 - 1.0
    }

    pub fn azimuth_of_bin(&self, bin: usize) -> f64 {
        self.sin_of_bin(bin).clamp(-1.0, 1.0).asin()
    }

    /// Fractional azimuth bin of `sin θ`.
    pub fn azimuth_bin_f(&self, azimuth_rad: f64) -> f64 {
        (azimuth_rad.sin() + 1.0) / 2.0 * (self.azimuth_bins - 1) as f64
    }

    /// `round((sin θ + 1) / 2 * (azimuth_bins - 1))`, or `None` outside
    /// `[-π/2, π/2]`.
    pub fn azimuth_bin(&self, azimuth_rad: f64) -> Option<usize> {
        if !(azimuth_rad.abs() <= std::f64::consts::FRAC_PI_2) {
            return None;
        }
        Some(self.azimuth_bin_f(azimuth_rad).round() as usize)
    }

    /// Nearest cell `(range_bin, azimuth_bin)` of a polar point.
    pub fn cell_of(&self, range_m: f64, azimuth_rad: f64) -> Option<(usize, usize)> {
        Some((self.range_bin(range_m)?, self.azimuth_bin(azimuth_rad)?))
    }

    /// Center of a cell as `(range_m, azimuth_rad)`.
    pub fn center_of(&self, range_bin: usize, azimuth_bin: usize) -> (f64, f64) {
        (self.range_of_bin(range_bin), self.azimuth_of_bin(azimuth_bin))
    }

    /// Azimuth of every bin, precomputed.
    pub fn azimuths(&self) -> Vec<f64> {
        (0..self.azimuth_bins).map(|k| self.azimuth_of_bin(k)).collect()
    }

    pub fn ranges(&self) -> Vec<f64> {
        (0..self.range_bins).map(|i| self.range_of_bin(i)).collect()
    }
}

/// Bird's-eye-view Cartesian position of a polar point: `x = r sin θ`,
/// `y = r cos θ`.
pub fn to_bev(range_m: f64, azimuth_rad: f64) -> (f64, f64) {
    (range_m * azimuth_rad.sin(), range_m * azimuth_rad.cos())
}

pub fn bev_distance_sq(a: (f64, f64), b: (f64, f64)) -> f64 {
    let (ax, ay) = to_bev(a.0, a.1);
    let (bx, by) = to_bev(b.0, b.1);
    (ax - bx).powi(2) + (ay - by).powi(2)
}
