use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use rodkit_core::crf::{ClassTable, CoNoise, CrfSettings};
use rodkit_core::eval::{BaselineScore, MagnitudeRule};
use rodkit_core::postproc::PostprocSettings;
use rodkit_core::radar::{CfarParams, RadarConfig, ScenarioParams};
use rodkit_core::{Error, Result, NUM_CLASSES};
use rodkit_nn::{ModelSpec, Normalization, TrainConfig};

/// Scaling of RAMaps before they enter the network.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum InputScaling {
    /// Divide by `samples_per_chirp * num_antennas`, so a unit reflector
    /// peaks near 1 and class reflectivity stays visible.
    #[default]
    CoherentGain,
    PerFrame,
    None,
}

/// How network inputs and training snippets are built from sequences.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DataConfig {
    /// Frame offset between consecutive training snippets.
    pub snippet_stride: usize,
    pub input: InputScaling,
}

impl Default for DataConfig {
    fn default() -> Self {
        DataConfig { snippet_stride: 16, input: InputScaling::default() }
    }
}

/// CFAR baseline detector used by `eval --baseline`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BaselineConfig {
    pub cfar: CfarParams,
    /// Peaks within this BEV distance of a truth take its class.
    pub truth_radius_m: f64,
    pub rule: MagnitudeRule,
    pub score: BaselineScore,
}

impl Default for BaselineConfig {
    fn default() -> Self {
        BaselineConfig { cfar: CfarParams::default(), truth_radius_m: 1.0, rule: MagnitudeRule::default(), score: BaselineScore::default() }
    }
}

/// Default locations, used when the matching command-line flag is absent.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PathsConfig {
    pub data: Option<PathBuf>,
    pub checkpoint: Option<PathBuf>,
    pub detections: Option<PathBuf>,
    pub report: Option<PathBuf>,
}

/// Everything a pipeline run depends on, read from one TOML file with a
/// `[section]` per subsystem. Missing sections take their defaults.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PipelineConfig {
    pub radar: RadarConfig,
    pub scene: ScenarioParams,
    pub classes: ClassTable,
    pub camera: CoNoise,
    pub crf: CrfSettings,
    pub data: DataConfig,
    pub model: ModelSpec,
    pub train: TrainConfig,
    pub postproc: PostprocSettings,
    pub baseline: BaselineConfig,
    pub paths: PathsConfig,
}

/// The sections that determine dataset contents.
#[derive(Serialize)]
struct DataSections<'a> {
    radar: &'a RadarConfig,
    scene: &'a ScenarioParams,
    classes: &'a ClassTable,
    camera: &'a CoNoise,
    crf: &'a CrfSettings,
}

impl PipelineConfig {
    pub fn from_toml_str(text: &str) -> Result<Self> {
        let cfg: PipelineConfig = toml::from_str(text).map_err(|e| Error::config(format!("config: {e}")))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::config(format!("cannot read {}: {e}", path.display())))?;
        Self::from_toml_str(&text).map_err(|e| match e {
            Error::Config(m) => Error::config(format!("{}: {m}", path.display())),
            other => other,
        })
    }

    /// `path` if given, else the defaults.
    pub fn load_or_default(path: Option<&Path>) -> Result<Self> {
        match path {
            Some(p) => Self::load(p),
            None => Ok(Self::default()),
        }
    }

    pub fn normalization(&self) -> Normalization {
        match self.data.input {
            InputScaling::CoherentGain => Normalization::Gain((self.radar.samples_per_chirp * self.radar.num_antennas) as f64),
            InputScaling::PerFrame => Normalization::PerFrameComplexStd,
            InputScaling::None => Normalization::None,
        }
    }

    pub fn to_toml_string(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    pub fn validate(&self) -> Result<()> {
        self.radar.validate()?;
        self.scene.validate(&self.radar)?;
        self.classes.validate()?;
        self.camera.validate()?;
        self.crf.cfar.validate()?;
        self.baseline.cfar.validate()?;
        self.model.validate()?;
        self.train.validate()?;
        if self.model.num_classes != NUM_CLASSES {
            return Err(Error::config(format!("model.num_classes must be {NUM_CLASSES}, got {}", self.model.num_classes)));
        }
        if self.radar.range_bins < 4 || self.radar.azimuth_bins < 4 {
            return Err(Error::config("the network needs at least 4 range and 4 azimuth bins"));
        }
        let tau = self.model.snippet_len;
        if tau > self.scene.num_frames {
            return Err(Error::config(format!(
                "model.snippet_len ({tau}) exceeds scene.num_frames ({})",
                self.scene.num_frames
            )));
        }
        if self.postproc.stride == 0 || self.postproc.stride > tau {
            return Err(Error::config(format!("postproc.stride must lie in 1..={tau}, got {}", self.postproc.stride)));
        }
        if self.data.snippet_stride == 0 || self.data.snippet_stride > tau {
            return Err(Error::config(format!("data.snippet_stride must lie in 1..={tau}, got {}", self.data.snippet_stride)));
        }
        if !(self.postproc.ols_threshold > 0.0 && self.postproc.ols_threshold <= 1.0) {
            return Err(Error::config("postproc.ols_threshold must lie in (0, 1]"));
        }
        if !(self.baseline.truth_radius_m >= 0.0) {
            return Err(Error::config("baseline.truth_radius_m must be non-negative"));
        }
        Ok(())
    }

    /// SHA-256 of the dataset-defining sections, as hex. Model, training and
    /// post-processing settings are excluded so they can change without
    /// invalidating a dataset.
    pub fn data_hash(&self) -> String {
        let sections = DataSections {
            radar: &self.radar,
            scene: &self.scene,
            classes: &self.classes,
            camera: &self.camera,
            crf: &self.crf,
        };
        let bytes = serde_json::to_vec(&sections).expect("config serializes");
        Sha256::digest(&bytes).iter().map(|b| format!("{b:02x}")).collect()
    }
}
