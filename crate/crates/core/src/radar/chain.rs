//! Range FFT, chirp low-pass and angle FFT: raw cube to RAMap.

use std::sync::Arc;

use num_complex::Complex;
use rustfft::{Fft, FftPlanner};

use crate::error::{Error, Result};
use crate::radar::config::RadarConfig;
use crate::radar::synth::RawCube;
use crate::scalar::Scalar;

/// Range spectra, indexed `[chirp, range_bin, antenna]`.
#[derive(Debug, Clone, PartialEq)]
pub struct RangeCube<T> {
    pub chirps: usize,
    pub range_bins: usize,
    pub antennas: usize,
    pub frame_index: usize,
    pub data: Vec<Complex<T>>,
}

impl<T: Copy> RangeCube<T> {
    #[inline]
    pub fn idx(&self, chirp: usize, range_bin: usize, antenna: usize) -> usize {
        (chirp * self.range_bins + range_bin) * self.antennas + antenna
    }

    pub fn at(&self, chirp: usize, range_bin: usize, antenna: usize) -> Complex<T> {
        self.data[self.idx(chirp, range_bin, antenna)]
    }
}

/// Chirp-filtered range spectra, indexed `[range_bin, antenna]`.
#[derive(Debug, Clone, PartialEq)]
pub struct RangeAntennaMap<T> {
    pub range_bins: usize,
    pub antennas: usize,
    pub frame_index: usize,
    pub data: Vec<Complex<T>>,
}

impl<T: Copy> RangeAntennaMap<T> {
    pub fn at(&self, range_bin: usize, antenna: usize) -> Complex<T> {
        self.data[range_bin * self.antennas + antenna]
    }
}

/// Complex range-azimuth heatmap, indexed `[range_bin, azimuth_bin]`
/// (range-major).
#[derive(Debug, Clone, PartialEq)]
pub struct RaMap<T> {
    pub range_bins: usize,
    pub azimuth_bins: usize,
    pub frame_index: usize,
    pub cells: Vec<Complex<T>>,
}

impl<T: Scalar> RaMap<T> {
    pub fn zeros(range_bins: usize, azimuth_bins: usize, frame_index: usize) -> Self {
        RaMap {
            range_bins,
            azimuth_bins,
            frame_index,
            cells: vec![Complex::new(T::zero(), T::zero()); range_bins * azimuth_bins],
        }
    }

    #[inline]
    pub fn at(&self, range_bin: usize, azimuth_bin: usize) -> Complex<T> {
        self.cells[range_bin * self.azimuth_bins + azimuth_bin]
    }

    pub fn magnitudes(&self) -> Vec<T> {
        self.cells.iter().map(|c| c.norm()).collect()
    }

    /// `(range_bin, azimuth_bin)` of the largest magnitude.
    pub fn argmax(&self) -> (usize, usize) {
        let mut best = (0, T::neg_infinity());
        for (i, c) in self.cells.iter().enumerate() {
            let m = c.norm_sqr();
            if m > best.1 {
                best = (i, m);
            }
        }
        (best.0 / self.azimuth_bins, best.0 % self.azimuth_bins)
    }

    pub fn is_finite(&self) -> bool {
        self.cells.iter().all(|c| c.re.is_finite() && c.im.is_finite())
    }

    pub fn cast<U: Scalar>(&self) -> RaMap<U> {
        RaMap {
            range_bins: self.range_bins,
            azimuth_bins: self.azimuth_bins,
            frame_index: self.frame_index,
            cells: self
                .cells
                .iter()
                .map(|c| Complex::new(U::lit(c.re.to_f64().unwrap_or(0.0)), U::lit(c.im.to_f64().unwrap_or(0.0))))
                .collect(),
        }
    }
}

/// Holds the FFT plans of one radar configuration so repeated frames reuse
/// them.
pub struct SignalChain<T: Scalar> {
    cfg: RadarConfig,
    range_plan: Arc<dyn Fft<T>>,
    angle_plan: Arc<dyn Fft<T>>,
}

impl<T: Scalar> SignalChain<T> {
    pub fn new(cfg: &RadarConfig) -> Result<Self> {
        cfg.validate()?;
        let mut planner = FftPlanner::new();
        Ok(SignalChain {
            cfg: cfg.clone(),
            range_plan: planner.plan_fft_forward(cfg.samples_per_chirp),
            angle_plan: planner.plan_fft_forward(cfg.azimuth_bins),
        })
    }

    pub fn config(&self) -> &RadarConfig {
        &self.cfg
    }

    /// FFT along the sample axis, keeping the first `range_bins`
    /// (positive-frequency) bins.
    pub fn range_fft(&self, raw: &RawCube<T>) -> Result<RangeCube<T>> {
        raw.check_dims(&self.cfg)?;
        let cfg = &self.cfg;
        let zero = Complex::new(T::zero(), T::zero());
        let mut out = RangeCube {
            chirps: cfg.chirps_per_frame,
            range_bins: cfg.range_bins,
            antennas: cfg.num_antennas,
            frame_index: raw.frame_index,
            data: vec![zero; cfg.chirps_per_frame * cfg.range_bins * cfg.num_antennas],
        };
        let mut buf = vec![zero; cfg.samples_per_chirp];
        let mut scratch = vec![zero; self.range_plan.get_inplace_scratch_len()];
        for chirp in 0..raw.chirps {
            for antenna in 0..raw.antennas {
                for (s, b) in buf.iter_mut().enumerate() {
                    *b = raw.at(chirp, s, antenna);
                }
                self.range_plan.process_with_scratch(&mut buf, &mut scratch);
                for r in 0..cfg.range_bins {
                    let i = out.idx(chirp, r, antenna);
                    out.data[i] = buf[r];
                }
            }
        }
        Ok(out)
    }

    /// Coherent mean across chirps: a DC-selecting low-pass over slow time.
    pub fn lowpass_chirps(&self, range: &RangeCube<T>) -> Result<RangeAntennaMap<T>> {
        let cfg = &self.cfg;
        let expected = (cfg.chirps_per_frame, cfg.range_bins, cfg.num_antennas);
        let actual = (range.chirps, range.range_bins, range.antennas);
        if expected != actual {
            return Err(Error::dims("range cube [chirp, range, antenna]", expected, actual));
        }
        let n = T::lit(range.chirps as f64);
        let mut data = vec![Complex::new(T::zero(), T::zero()); range.range_bins * range.antennas];
        let plane = data.len();
        for chirp in 0..range.chirps {
            let start = chirp * plane;
            for (d, v) in data.iter_mut().zip(&range.data[start..start + plane]) {
                *d += *v;
            }
        }
        for d in data.iter_mut() {
            *d = *d / n;
        }
        Ok(RangeAntennaMap {
            range_bins: range.range_bins,
            antennas: range.antennas,
            frame_index: range.frame_index,
            data,
        })
    }

    /// Zero-padded FFT across antennas to `azimuth_bins`, FFT-shifted so bin
    /// 0 is the `sin θ = -1` steering direction.
    pub fn angle_fft(&self, rx: &RangeAntennaMap<T>) -> Result<RaMap<T>> {
        let cfg = &self.cfg;
        if rx.antennas != cfg.num_antennas || rx.range_bins != cfg.range_bins {
            return Err(Error::dims(
                "range-antenna map [range, antenna]",
                (cfg.range_bins, cfg.num_antennas),
                (rx.range_bins, rx.antennas),
            ));
        }
        let n = cfg.azimuth_bins;
        let half = n / 2;
        let zero = Complex::new(T::zero(), T::zero());
        let mut map = RaMap::zeros(cfg.range_bins, n, rx.frame_index);
        let mut buf = vec![zero; n];
        let mut scratch = vec![zero; self.angle_plan.get_inplace_scratch_len()];
        for r in 0..rx.range_bins {
            buf.fill(zero);
            buf[..rx.antennas].copy_from_slice(&rx.data[r * rx.antennas..(r + 1) * rx.antennas]);
            self.angle_plan.process_with_scratch(&mut buf, &mut scratch);
            let row = &mut map.cells[r * n..(r + 1) * n];
            for (k, cell) in row.iter_mut().enumerate() {
                *cell = buf[(k + n - half) % n];
            }
        }
        Ok(map)
    }

    /// Full chain: range FFT, chirp low-pass, angle FFT.
    pub fn process(&self, raw: &RawCube<T>) -> Result<RaMap<T>> {
        let range = self.range_fft(raw)?;
        let rx = self.lowpass_chirps(&range)?;
        self.angle_fft(&rx)
    }
}

pub fn range_fft<T: Scalar>(raw: &RawCube<T>, cfg: &RadarConfig) -> Result<RangeCube<T>> {
    SignalChain::new(cfg)?.range_fft(raw)
}

pub fn lowpass_chirps<T: Scalar>(range: &RangeCube<T>, cfg: &RadarConfig) -> Result<RangeAntennaMap<T>> {
    SignalChain::new(cfg)?.lowpass_chirps(range)
}

pub fn angle_fft<T: Scalar>(rx: &RangeAntennaMap<T>, cfg: &RadarConfig) -> Result<RaMap<T>> {
    SignalChain::new(cfg)?.angle_fft(rx)
}
