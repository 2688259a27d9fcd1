use std::fmt;
use std::str::FromStr;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::class::ClassId;
use crate::error::{Error, Result};
use crate::radar::config::RadarConfig;
use crate::radar::grid::bev_distance_sq;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SceneObject {
    pub class: ClassId,
    pub range_m: f64,
    pub azimuth_rad: f64,
    pub radial_velocity_mps: f64,
    pub reflectivity: f64,
    /// Standard deviation of the per-chirp phase jitter, in radians. Large for
    /// non-rigid bodies (pedestrians), near zero for rigid ones.
    pub micro_motion_std: f64,
}

impl SceneObject {
    /// Range at `frame`, assuming constant radial velocity.
    pub fn range_at(&self, frame: usize, frame_rate_hz: f64) -> f64 {
        self.range_m + self.radial_velocity_mps * frame as f64 / frame_rate_hz
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Difficulty {
    Easy,
    Medium,
    Hard,
}

impl Difficulty {
    pub const ALL: [Difficulty; 3] = [Difficulty::Easy, Difficulty::Medium, Difficulty::Hard];

    /// Easy: at most 2 objects and clutter density at most 2. Hard: at least
    /// 4 objects or clutter density at least 8. Medium otherwise.
    pub fn classify(num_objects: usize, clutter_density: f64) -> Difficulty {
        if num_objects >= 4 || clutter_density >= 8.0 {
            Difficulty::Hard
        } else if num_objects <= 2 && clutter_density <= 2.0 {
            Difficulty::Easy
        } else {
            Difficulty::Medium
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Difficulty::Easy => "easy",
            Difficulty::Medium => "medium",
            Difficulty::Hard => "hard",
        }
    }
}

impl fmt::Display for Difficulty {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Difficulty {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "easy" => Ok(Difficulty::Easy),
            "medium" => Ok(Difficulty::Medium),
            "hard" => Ok(Difficulty::Hard),
            other => Err(Error::config(format!("unknown difficulty {other:?}"))),
        }
    }
}

/// Ground-truth position of one object in one frame.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TruthRecord {
    pub frame: usize,
    pub class: ClassId,
    pub range_m: f64,
    pub azimuth_rad: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Scene {
    pub objects: Vec<SceneObject>,
    /// Expected number of clutter scatterers per frame.
    pub clutter_density: f64,
    pub noise_std: f64,
    pub num_frames: usize,
}

impl Scene {
    pub fn difficulty(&self) -> Difficulty {
        Difficulty::classify(self.objects.len(), self.clutter_density)
    }

    pub fn validate(&self, cfg: &RadarConfig) -> Result<()> {
        if self.num_frames == 0 {
            return Err(Error::config("scene must have at least one frame"));
        }
        if !(self.clutter_density >= 0.0) || !self.clutter_density.is_finite() {
            return Err(Error::config("clutter_density must be finite and non-negative"));
        }
        if !(self.noise_std >= 0.0) || !self.noise_std.is_finite() {
            return Err(Error::config("noise_std must be finite and non-negative"));
        }
        for (i, o) in self.objects.iter().enumerate() {
            self.validate_object(cfg, i, o, 0)?;
        }
        Ok(())
    }

    pub(crate) fn validate_object(&self, cfg: &RadarConfig, i: usize, o: &SceneObject, frame: usize) -> Result<()> {
        let r = o.range_at(frame, cfg.frame_rate_hz);
        if !(r > 0.0 && r < cfg.max_range_m()) {
            return Err(Error::config(format!(
                "object {i} at frame {frame} has range {r} m outside (0, {})",
                cfg.max_range_m()
            )));
        }
        if !(o.azimuth_rad.abs() <= std::f64::consts::FRAC_PI_2) {
            return Err(Error::config(format!("object {i} azimuth {} outside [-π/2, π/2]", o.azimuth_rad)));
        }
        if !(o.reflectivity > 0.0) || !(o.micro_motion_std >= 0.0) || !o.radial_velocity_mps.is_finite() {
            return Err(Error::config(format!("object {i} has invalid reflectivity, velocity or jitter")));
        }
        Ok(())
    }

    /// One record per object per frame.
    pub fn truth(&self, cfg: &RadarConfig) -> Vec<TruthRecord> {
        (0..self.num_frames)
            .flat_map(|frame| {
                self.objects.iter().map(move |o| TruthRecord {
                    frame,
                    class: o.class,
                    range_m: o.range_at(frame, cfg.frame_rate_hz),
                    azimuth_rad: o.azimuth_rad,
                })
            })
            .collect()
    }

    pub fn max_reflectivity(&self) -> Option<f64> {
        self.objects.iter().map(|o| o.reflectivity).reduce(f64::max)
    }
}

/// Nominal radar signature of each class: (reflectivity, micro-motion std).
pub fn class_signature(class: ClassId) -> (f64, f64) {
    match class {
        ClassId::Pedestrian => (0.3, 0.8),
        ClassId::Cyclist => (0.6, 0.4),
        ClassId::Car => (1.0, 0.05),
    }
}

/// Knobs of the random scenario generator.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ScenarioParams {
    pub num_frames: usize,
    /// Objects and clutter are placed within `±field_of_view_rad`.
    pub field_of_view_rad: f64,
    pub min_range_m: f64,
    /// Objects stay at least this far inside the maximum range.
    pub range_margin_m: f64,
    pub max_speed_mps: f64,
    /// Minimum BEV distance between any two objects in any frame.
    pub min_separation_m: f64,
    pub noise_std: f64,
    /// Relative spread of the per-object reflectivity around its class value.
    pub reflectivity_spread: f64,
}

impl Default for ScenarioParams {
    fn default() -> Self {
        ScenarioParams {
            num_frames: 64,
            field_of_view_rad: std::f64::consts::FRAC_PI_3,
            min_range_m: 2.0,
            range_margin_m: 1.5,
            max_speed_mps: 1.5,
            min_separation_m: 3.0,
            noise_std: 0.05,
            reflectivity_spread: 0.15,
        }
    }
}

impl ScenarioParams {
    pub fn validate(&self, cfg: &RadarConfig) -> Result<()> {
        if self.num_frames == 0 {
            return Err(Error::config("scene.num_frames must be at least 1"));
        }
        if !(self.field_of_view_rad > 0.0 && self.field_of_view_rad < std::f64::consts::FRAC_PI_2) {
            return Err(Error::config("scene.field_of_view_rad must lie in (0, π/2)"));
        }
        if !(self.min_range_m > 0.0 && self.min_range_m + self.range_margin_m < cfg.max_range_m()) {
            return Err(Error::config("scene.min_range_m / range_margin_m leave no room inside the radar range"));
        }
        if !(self.max_speed_mps >= 0.0 && self.noise_std >= 0.0 && self.min_separation_m >= 0.0) {
            return Err(Error::config("scene speeds, noise and separation must be non-negative"));
        }
        if !(0.0..1.0).contains(&self.reflectivity_spread) {
            return Err(Error::config("scene.reflectivity_spread must lie in [0, 1)"));
        }
        Ok(())
    }
}

/// Draws a scene whose difficulty bucket is chosen uniformly at random.
pub fn random_scene(cfg: &RadarConfig, params: &ScenarioParams, rng: &mut impl Rng) -> Scene {
    let difficulty = Difficulty::ALL[rng.random_range(0..3)];
    random_scene_in(cfg, params, difficulty, rng)
}

/// Draws a scene that classifies as `difficulty`.
pub fn random_scene_in(cfg: &RadarConfig, params: &ScenarioParams, difficulty: Difficulty, rng: &mut impl Rng) -> Scene {
    let (num_objects, clutter_density) = match difficulty {
        Difficulty::Easy => (rng.random_range(1..=2), rng.random_range(0.0..=2.0)),
        Difficulty::Medium => {
            let n = rng.random_range(1..=3);
            let clutter = if n == 3 { rng.random_range(0.0..7.5) } else { rng.random_range(2.5..7.5) };
            (n, clutter)
        }
        Difficulty::Hard => {
            if rng.random_bool(0.5) {
                (rng.random_range(4..=5), rng.random_range(2.0..12.0))
            } else {
                (rng.random_range(1..=3), rng.random_range(8.0..12.0))
            }
        }
    };
    debug_assert_eq!(Difficulty::classify(num_objects, clutter_density), difficulty);

    let duration = (params.num_frames.saturating_sub(1)) as f64 / cfg.frame_rate_hz;
    let lo = params.min_range_m;
    let hi = cfg.max_range_m() - params.range_margin_m;
    let mut objects: Vec<SceneObject> = Vec::with_capacity(num_objects);
    let mut attempts = 0;
    while objects.len() < num_objects && attempts < 10_000 {
        attempts += 1;
        let class = ClassId::ALL[rng.random_range(0..3)];
        let (refl, jitter) = class_signature(class);
        let speed = rng.random_range(-params.max_speed_mps..=params.max_speed_mps);
        let travel = speed * duration;
        let (start_lo, start_hi) = (lo.max(lo - travel), hi.min(hi - travel));
        if start_lo >= start_hi {
            continue;
        }
        let candidate = SceneObject {
            class,
            range_m: rng.random_range(start_lo..start_hi),
            azimuth_rad: rng.random_range(-params.field_of_view_rad..=params.field_of_view_rad),
            radial_velocity_mps: speed,
            reflectivity: refl * (1.0 + rng.random_range(-params.reflectivity_spread..=params.reflectivity_spread)),
            micro_motion_std: jitter,
        };
        let separated = objects.iter().all(|o| {
            (0..params.num_frames).all(|f| {
                let a = (o.range_at(f, cfg.frame_rate_hz), o.azimuth_rad);
                let b = (candidate.range_at(f, cfg.frame_rate_hz), candidate.azimuth_rad);
                bev_distance_sq(a, b) >= params.min_separation_m.powi(2)
            })
        });
        if separated {
            objects.push(candidate);
        }
    }

    Scene {
        objects,
        clutter_density,
        noise_std: params.noise_std,
        num_frames: params.num_frames,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn difficulty_thresholds() {
        assert_eq!(Difficulty::classify(1, 0.0), Difficulty::Easy);
        assert_eq!(Difficulty::classify(2, 2.0), Difficulty::Easy);
        assert_eq!(Difficulty::classify(3, 0.0), Difficulty::Medium);
        assert_eq!(Difficulty::classify(2, 2.5), Difficulty::Medium);
        assert_eq!(Difficulty::classify(4, 0.0), Difficulty::Hard);
        assert_eq!(Difficulty::classify(1, 8.0), Difficulty::Hard);
        assert_eq!(Difficulty::classify(0, 0.0), Difficulty::Easy);
    }

    #[test]
    fn generated_scenes_are_valid_and_bucketed() {
        let cfg = RadarConfig::default();
        let params = ScenarioParams::default();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for d in Difficulty::ALL {
            for _ in 0..20 {
                let scene = random_scene_in(&cfg, &params, d, &mut rng);
                assert_eq!(scene.difficulty(), d);
                scene.validate(&cfg).unwrap();
                for f in 0..scene.num_frames {
                    for (i, o) in scene.objects.iter().enumerate() {
                        scene.validate_object(&cfg, i, o, f).unwrap();
                        let r = o.range_at(f, cfg.frame_rate_hz);
                        assert!(r >= params.min_range_m - 1e-9 && r <= cfg.max_range_m() - params.range_margin_m + 1e-9);
                    }
                }
            }
        }
    }

    #[test]
    fn truth_has_one_record_per_object_frame() {
        let cfg = RadarConfig::default();
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let scene = random_scene_in(&cfg, &ScenarioParams::default(), Difficulty::Hard, &mut rng);
        let truth = scene.truth(&cfg);
        assert_eq!(truth.len(), scene.objects.len() * scene.num_frames);
    }
}
