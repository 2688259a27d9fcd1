use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::class::ClassId;
use crate::error::{Error, Result};

/// Per-class constants of the camera probability map, ConfMap rendering and
/// OLS.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ClassParams {
    /// Scale constant of the camera range spread `(d s / c)`.
    pub scale_constant: f64,
    /// Typical camera azimuth error, used as the azimuth entry of the camera
    /// covariance.
    pub azimuth_error: f64,
    /// OLS error tolerance, in units of object range.
    pub ols_kappa: f64,
    /// ConfMap Gaussian width per meter of range.
    #[serde(default)]
    pub confmap_scale: Option<f64>,
}

impl ClassParams {
    pub fn confmap_scale(&self) -> f64 {
        self.confmap_scale.unwrap_or(self.scale_constant)
    }

    pub fn validate(&self, class: ClassId) -> Result<()> {
        let fields = [
            ("scale_constant", self.scale_constant),
            ("azimuth_error", self.azimuth_error),
            ("ols_kappa", self.ols_kappa),
            ("confmap_scale", self.confmap_scale()),
        ];
        for (name, v) in fields {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::config(format!("[{class}] {name} must be strictly positive, got {v}")));
            }
        }
        Ok(())
    }
}

/// The class parameter table, one `[class]` block per class in its text
/// form:
///
/// ```toml
/// [pedestrian]
/// scale_constant = 0.05
/// azimuth_error = 0.0004
/// ols_kappa = 0.1
/// confmap_scale = 0.05
/// ```
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct ClassTable {
    entries: BTreeMap<ClassId, ClassParams>,
}

impl Default for ClassTable {
    fn default() -> Self {
        let mut entries = BTreeMap::new();
        entries.insert(
            ClassId::Pedestrian,
            ClassParams { scale_constant: 0.05, azimuth_error: 0.02 * 0.02, ols_kappa: 0.10, confmap_scale: Some(0.05) },
        );
        entries.insert(
            ClassId::Cyclist,
            ClassParams { scale_constant: 0.05, azimuth_error: 0.02 * 0.02, ols_kappa: 0.15, confmap_scale: Some(0.05) },
        );
        entries.insert(
            ClassId::Car,
            ClassParams { scale_constant: 0.08, azimuth_error: 0.03 * 0.03, ols_kappa: 0.20, confmap_scale: Some(0.08) },
        );
        ClassTable { entries }
    }
}

impl ClassTable {
    pub fn new(entries: impl IntoIterator<Item = (ClassId, ClassParams)>) -> Result<Self> {
        let table = ClassTable { entries: entries.into_iter().collect() };
        table.validate()?;
        Ok(table)
    }

    pub fn get(&self, class: ClassId) -> Result<&ClassParams> {
        self.entries
            .get(&class)
            .ok_or_else(|| Error::config(format!("no parameters configured for class {class}")))
    }

    pub fn iter(&self) -> impl Iterator<Item = (ClassId, &ClassParams)> {
        self.entries.iter().map(|(c, p)| (*c, p))
    }

    pub fn validate(&self) -> Result<()> {
        for (c, p) in self.iter() {
            p.validate(c)?;
        }
        Ok(())
    }

    /// Parses the `[class]`-block text form.
    pub fn from_toml_str(text: &str) -> Result<Self> {
        let entries: BTreeMap<String, ClassParams> =
            toml::from_str(text).map_err(|e| Error::config(format!("class parameters: {e}")))?;
        let mut table = BTreeMap::new();
        for (name, params) in entries {
            table.insert(name.parse::<ClassId>()?, params);
        }
        ClassTable::new(table)
    }
}

/// Noise model of the emulated camera-only localization.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CoNoise {
    /// Range error standard deviation as a fraction of range.
    pub range_noise_fraction: f64,
    /// Azimuth error standard deviation in radians.
    pub azimuth_noise_std: f64,
    /// Depth confidence is drawn uniformly from this interval.
    pub depth_conf_range: (f64, f64),
}

impl Default for CoNoise {
    fn default() -> Self {
        CoNoise { range_noise_fraction: 0.05, azimuth_noise_std: 0.01, depth_conf_range: (0.6, 1.0) }
    }
}

impl CoNoise {
    pub fn zero() -> Self {
        CoNoise { range_noise_fraction: 0.0, azimuth_noise_std: 0.0, depth_conf_range: (1.0, 1.0) }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.range_noise_fraction >= 0.0) || !(self.azimuth_noise_std >= 0.0) {
            return Err(Error::config("camera noise parameters must be non-negative"));
        }
        let (lo, hi) = self.depth_conf_range;
        if !(lo > 0.0 && lo <= hi && hi <= 1.0) {
            return Err(Error::config(format!("depth_conf_range ({lo}, {hi}) must satisfy 0 < lo <= hi <= 1")));
        }
        Ok(())
    }
}
