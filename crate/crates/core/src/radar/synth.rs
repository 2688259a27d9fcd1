use std::f64::consts::{PI, TAU};

use num_complex::Complex;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal, Poisson};

use crate::error::{Error, Result};
use crate::radar::config::RadarConfig;
use crate::radar::scene::Scene;
use crate::scalar::Scalar;

/// Raw beat-signal samples of one frame, indexed `[chirp, sample, antenna]`.
#[derive(Debug, Clone, PartialEq)]
pub struct RawCube<T> {
    pub chirps: usize,
    pub samples: usize,
    pub antennas: usize,
    pub frame_index: usize,
    pub data: Vec<Complex<T>>,
}

impl<T: Scalar> RawCube<T> {
    pub fn zeros(cfg: &RadarConfig, frame_index: usize) -> Self {
        RawCube {
            chirps: cfg.chirps_per_frame,
            samples: cfg.samples_per_chirp,
            antennas: cfg.num_antennas,
            frame_index,
            data: vec![Complex::new(T::zero(), T::zero()); cfg.chirps_per_frame * cfg.samples_per_chirp * cfg.num_antennas],
        }
    }

    #[inline]
    pub fn idx(&self, chirp: usize, sample: usize, antenna: usize) -> usize {
        (chirp * self.samples + sample) * self.antennas + antenna
    }

    pub fn at(&self, chirp: usize, sample: usize, antenna: usize) -> Complex<T> {
        self.data[self.idx(chirp, sample, antenna)]
    }

    pub fn check_dims(&self, cfg: &RadarConfig) -> Result<()> {
        let expected = (cfg.chirps_per_frame, cfg.samples_per_chirp, cfg.num_antennas);
        let actual = (self.chirps, self.samples, self.antennas);
        if expected != actual || self.data.len() != self.chirps * self.samples * self.antennas {
            return Err(Error::dims("raw cube [chirp, sample, antenna]", expected, actual));
        }
        Ok(())
    }
}

/// A point reflector as seen in one frame.
#[derive(Debug, Clone, Copy)]
struct Scatterer {
    range_m: f64,
    azimuth_rad: f64,
    velocity_mps: f64,
    amplitude: f64,
    jitter_std: f64,
    phase0: f64,
}

/// Adds one scatterer's echo to the cube. The sample-axis frequency is
/// `range / range_resolution` FFT bins, the antenna-axis phase step is
/// `2π d sin θ`, and the chirp-axis phase advances by `4π v T_c / λ` plus
/// Gaussian micro-motion jitter.
fn add_scatterer<T: Scalar>(cube: &mut RawCube<T>, cfg: &RadarConfig, s: &Scatterer, rng: &mut impl Rng) {
    let ns = cfg.samples_per_chirp as f64;
    let range_step = TAU * (s.range_m / cfg.range_resolution_m) / ns;
    let antenna_step = TAU * cfg.antenna_spacing_wavelengths * s.azimuth_rad.sin();
    let doppler_step = 4.0 * PI * s.velocity_mps * cfg.chirp_period_s / cfg.wavelength_m();
    let jitter = Normal::new(0.0, s.jitter_std.max(0.0)).expect("finite jitter std");
    for chirp in 0..cube.chirps {
        let jitter_phase = if s.jitter_std > 0.0 { jitter.sample(rng) } else { 0.0 };
        let chirp_phase = s.phase0 + doppler_step * chirp as f64 + jitter_phase;
        for sample in 0..cube.samples {
            let base = chirp_phase + range_step * sample as f64;
            for antenna in 0..cube.antennas {
                let phase = base + antenna_step * antenna as f64;
                let v = Complex::from_polar(s.amplitude, phase);
                let i = cube.idx(chirp, sample, antenna);
                cube.data[i] += Complex::new(T::lit(v.re), T::lit(v.im));
            }
        }
    }
}

/// Synthesizes the raw cube of `frame_index`. Deterministic in
/// `(scene, cfg, frame_index, rng_seed)`.
///
/// Objects carry the round-trip carrier phase `4π r / λ`; clutter
/// scatterers (Poisson count, static, reflectivity uniform in
/// `[0.1, 0.5]` of the strongest object) and complex Gaussian noise are
/// drawn fresh for every frame.
pub fn synth_raw_frame<T: Scalar>(scene: &Scene, cfg: &RadarConfig, frame_index: usize, rng_seed: u64) -> Result<RawCube<T>> {
    cfg.validate()?;
    scene.validate(cfg)?;
    for (i, o) in scene.objects.iter().enumerate() {
        scene.validate_object(cfg, i, o, frame_index)?;
    }

    let mut rng = ChaCha8Rng::seed_from_u64(rng_seed);
    rng.set_stream(frame_index as u64);
    let mut cube = RawCube::zeros(cfg, frame_index);
    let lambda = cfg.wavelength_m();

    for o in &scene.objects {
        let range_m = o.range_at(frame_index, cfg.frame_rate_hz);
        let s = Scatterer {
            range_m,
            azimuth_rad: o.azimuth_rad,
            velocity_mps: o.radial_velocity_mps,
            amplitude: o.reflectivity,
            jitter_std: o.micro_motion_std,
            phase0: (4.0 * PI * range_m / lambda).rem_euclid(TAU),
        };
        add_scatterer(&mut cube, cfg, &s, &mut rng);
    }

    if scene.clutter_density > 0.0 {
        let count = Poisson::new(scene.clutter_density).expect("positive clutter density").sample(&mut rng) as usize;
        let peak = scene.max_reflectivity().unwrap_or(1.0);
        let fov = std::f64::consts::FRAC_PI_3;
        for _ in 0..count {
            let s = Scatterer {
                range_m: rng.random_range(cfg.range_resolution_m..cfg.max_range_m() - cfg.range_resolution_m),
                azimuth_rad: rng.random_range(-fov..=fov),
                velocity_mps: 0.0,
                amplitude: peak * rng.random_range(0.1..=0.5),
                jitter_std: 0.0,
                phase0: rng.random_range(0.0..TAU),
            };
            add_scatterer(&mut cube, cfg, &s, &mut rng);
        }
    }

    if scene.noise_std > 0.0 {
        let component = Normal::new(0.0, scene.noise_std / std::f64::consts::SQRT_2).expect("finite noise std");
        for v in cube.data.iter_mut() {
            let re = component.sample(&mut rng);
            let im = component.sample(&mut rng);
            *v += Complex::new(T::lit(re), T::lit(im));
        }
    }
    Ok(cube)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::class::ClassId;
    use crate::radar::scene::SceneObject;

    fn object(range_m: f64) -> SceneObject {
        SceneObject {
            class: ClassId::Car,
            range_m,
            azimuth_rad: 0.2,
            radial_velocity_mps: 0.0,
            reflectivity: 1.0,
            micro_motion_std: 0.0,
        }
    }

    fn scene(objects: Vec<SceneObject>, clutter: f64, noise: f64) -> Scene {
        Scene { objects, clutter_density: clutter, noise_std: noise, num_frames: 4 }
    }

    #[test]
    fn empty_noiseless_scene_is_all_zero() {
        let cfg = RadarConfig::default();
        let cube: RawCube<f64> = synth_raw_frame(&scene(vec![], 0.0, 0.0), &cfg, 0, 1).unwrap();
        assert!(cube.data.iter().all(|v| v.re == 0.0 && v.im == 0.0));
        cube.check_dims(&cfg).unwrap();
    }

    #[test]
    fn same_seed_is_bit_identical() {
        let cfg = RadarConfig::default();
        let mut o = object(12.3);
        o.micro_motion_std = 0.7;
        let s = scene(vec![o], 5.0, 0.1);
        let a: RawCube<f32> = synth_raw_frame(&s, &cfg, 2, 77).unwrap();
        let b: RawCube<f32> = synth_raw_frame(&s, &cfg, 2, 77).unwrap();
        assert_eq!(a, b);
        let c: RawCube<f32> = synth_raw_frame(&s, &cfg, 3, 77).unwrap();
        assert_ne!(a, c);
    }

    #[test]
    fn two_coincident_objects_add_coherently() {
        let cfg = RadarConfig::default();
        let one: RawCube<f64> = synth_raw_frame(&scene(vec![object(10.0)], 0.0, 0.0), &cfg, 0, 5).unwrap();
        let two: RawCube<f64> = synth_raw_frame(&scene(vec![object(10.0), object(10.0)], 0.0, 0.0), &cfg, 0, 5).unwrap();
        for (a, b) in one.data.iter().zip(&two.data) {
            assert!((b - a * 2.0).norm() < 1e-12);
        }
    }

    #[test]
    fn rejects_object_outside_range() {
        let cfg = RadarConfig::default();
        let err = synth_raw_frame::<f64>(&scene(vec![object(40.0)], 0.0, 0.0), &cfg, 0, 1).unwrap_err();
        assert!(matches!(err, Error::Config(_)));
        // drifts out of range by frame 3
        let mut o = object(31.0);
        o.radial_velocity_mps = 5.0;
        assert!(synth_raw_frame::<f64>(&scene(vec![o], 0.0, 0.0), &cfg, 3, 1).is_err());
    }
}
