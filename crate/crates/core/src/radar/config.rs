use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::radar::grid::PolarGrid;

const SPEED_OF_LIGHT: f64 = 299_792_458.0;

/// FMCW front-end and RAMap geometry.
///
/// The maximum range is derived (`range_bins * range_resolution_m`) so it can
/// never disagree with the grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RadarConfig {
    pub samples_per_chirp: usize,
    pub chirps_per_frame: usize,
    pub num_antennas: usize,
    pub range_bins: usize,
    pub azimuth_bins: usize,
    pub range_resolution_m: f64,
    pub antenna_spacing_wavelengths: f64,
    pub frame_rate_hz: f64,
    pub carrier_hz: f64,
    pub chirp_period_s: f64,
}

impl Default for RadarConfig {
    fn default() -> Self {
        RadarConfig {
            samples_per_chirp: 256,
            chirps_per_frame: 4,
            num_antennas: 8,
            range_bins: 128,
            azimuth_bins: 128,
            range_resolution_m: 0.25,
            antenna_spacing_wavelengths: 0.5,
            frame_rate_hz: 10.0,
            carrier_hz: 77.0e9,
            chirp_period_s: 60.0e-6,
        }
    }
}

impl RadarConfig {
    pub fn max_range_m(&self) -> f64 {
        self.range_bins as f64 * self.range_resolution_m
    }

    pub fn wavelength_m(&self) -> f64 {
        SPEED_OF_LIGHT / self.carrier_hz
    }

    pub fn grid(&self) -> PolarGrid {
        PolarGrid {
            range_bins: self.range_bins,
            azimuth_bins: self.azimuth_bins,
            range_resolution_m: self.range_resolution_m,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let positive = |name: &str, v: f64| {
            if v.is_finite() && v > 0.0 {
                Ok(())
            } else {
                Err(Error::config(format!("radar.{name} must be positive, got {v}")))
            }
        };
        for (name, v) in [
            ("samples_per_chirp", self.samples_per_chirp),
            ("chirps_per_frame", self.chirps_per_frame),
            ("num_antennas", self.num_antennas),
            ("range_bins", self.range_bins),
            ("azimuth_bins", self.azimuth_bins),
        ] {
            if v == 0 {
                return Err(Error::config(format!("radar.{name} must be at least 1")));
            }
        }
        if self.range_bins > self.samples_per_chirp {
            return Err(Error::config(format!(
                "radar.range_bins ({}) exceeds samples_per_chirp ({})",
                self.range_bins, self.samples_per_chirp
            )));
        }
        if self.azimuth_bins < self.num_antennas {
            return Err(Error::config(format!(
                "radar.azimuth_bins ({}) is smaller than num_antennas ({})",
                self.azimuth_bins, self.num_antennas
            )));
        }
        if self.azimuth_bins < 2 {
            return Err(Error::config("radar.azimuth_bins must be at least 2"));
        }
        positive("range_resolution_m", self.range_resolution_m)?;
        positive("antenna_spacing_wavelengths", self.antenna_spacing_wavelengths)?;
        positive("frame_rate_hz", self.frame_rate_hz)?;
        positive("carrier_hz", self.carrier_hz)?;
        positive("chirp_period_s", self.chirp_period_s)?;
        Ok(())
    }
}

/// Angular resolution of the uniform linear array at `azimuth_rad`:
/// the wavelength-normalised beamwidth `1 / (N d cos θ)`.
pub fn azimuth_resolution_at(cfg: &RadarConfig, azimuth_rad: f64) -> Result<f64> {
    if !(azimuth_rad.abs() < std::f64::consts::FRAC_PI_2) {
        return Err(Error::domain(format!(
            "azimuth resolution undefined at |θ| = {} >= π/2",
            azimuth_rad.abs()
        )));
    }
    Ok(1.0 / (cfg.num_antennas as f64 * cfg.antenna_spacing_wavelengths * azimuth_rad.cos()))
}
