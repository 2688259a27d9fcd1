use serde::{Deserialize, Serialize};

use rodkit_core::crf::ConfMap;
use rodkit_core::radar::RaMap;
use rodkit_core::{Error, Result, Scalar};

use crate::tensor::Tensor5;

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Normalization {
    /// Each frame shifted and scaled to zero mean and unit standard deviation
    /// over its real and imaginary parts jointly.
    #[default]
    PerFrameComplexStd,
    /// Every value divided by a fixed gain, keeping absolute magnitudes.
    Gain(f64),
    None,
}

fn check_frames<A, B>(frames: &[A], dims: impl Fn(&A) -> B, what: &'static str) -> Result<B>
where
    B: PartialEq + std::fmt::Debug,
{
    let first = frames.first().ok_or_else(|| Error::config(format!("{what}: empty snippet")))?;
    let d0 = dims(first);
    for f in frames {
        let d = dims(f);
        if d != d0 {
            return Err(Error::dims(what, &d0, &d));
        }
    }
    Ok(d0)
}

/// Snippet of τ RAMaps as a `(1, 2, τ, range, azimuth)` tensor: channel 0
/// holds real parts, channel 1 imaginary parts.
pub fn ramap_to_input<T: Scalar>(snippet: &[RaMap<T>], norm: Normalization) -> Result<Tensor5<T>> {
    let (h, w) = check_frames(snippet, |m| (m.range_bins, m.azimuth_bins), "snippet RAMap dims")?;
    let tau = snippet.len();
    let plane = h * w;
    let mut x = Tensor5::zeros([1, 2, tau, h, w]);
    let data = x.data_mut();
    for (t, m) in snippet.iter().enumerate() {
        let (re, im) = data.split_at_mut(tau * plane);
        let re = &mut re[t * plane..(t + 1) * plane];
        let im = &mut im[t * plane..(t + 1) * plane];
        for ((r, i), c) in re.iter_mut().zip(im.iter_mut()).zip(&m.cells) {
            *r = c.re;
            *i = c.im;
        }
        if let Normalization::Gain(g) = norm {
            if !(g > 0.0 && g.is_finite()) {
                return Err(Error::config(format!("input gain must be positive, got {g}")));
            }
            let inv = T::lit(1.0 / g);
            for v in re.iter_mut().chain(im.iter_mut()) {
                *v = *v * inv;
            }
        }
        if norm == Normalization::PerFrameComplexStd {
            let n = (2 * plane) as f64;
            let vals = || re.iter().chain(im.iter()).map(|v| v.to_f64().unwrap_or(0.0));
            let mean = vals().sum::<f64>() / n;
            let var = vals().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;
            let inv = if var > 0.0 { 1.0 / var.sqrt() } else { 1.0 };
            let (mean, inv) = (T::lit(mean), T::lit(inv));
            for v in re.iter_mut().chain(im.iter_mut()) {
                *v = (*v - mean) * inv;
            }
        }
    }
    Ok(x)
}

/// τ ConfMaps as a `(1, classes, τ, range, azimuth)` target tensor.
pub fn confmaps_to_target<T: Scalar>(maps: &[ConfMap<T>]) -> Result<Tensor5<T>> {
    let (h, w) = check_frames(maps, |m| (m.range_bins, m.azimuth_bins), "snippet ConfMap dims")?;
    let tau = maps.len();
    let plane = h * w;
    let classes = maps[0].data.len() / plane;
    let mut y = Tensor5::zeros([1, classes, tau, h, w]);
    let data = y.data_mut();
    for (t, m) in maps.iter().enumerate() {
        for c in 0..classes {
            let dst = (c * tau + t) * plane;
            data[dst..dst + plane].copy_from_slice(&m.data[c * plane..(c + 1) * plane]);
        }
    }
    Ok(y)
}

/// Inverse of [`confmaps_to_target`] for batch entry `b`; frame indices start
/// at `first_frame`.
pub fn output_to_confmaps<T: Scalar>(y: &Tensor5<T>, b: usize, first_frame: usize) -> Vec<ConfMap<T>> {
    let [_, classes, tau, h, w] = y.dims();
    let plane = h * w;
    let s = y.sample(b);
    (0..tau)
        .map(|t| {
            let mut data = Vec::with_capacity(classes * plane);
            for c in 0..classes {
                let src = (c * tau + t) * plane;
                data.extend_from_slice(&s[src..src + plane]);
            }
            ConfMap { range_bins: h, azimuth_bins: w, frame_index: first_frame + t, data }
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use rodkit_core::radar::PolarGrid;

    #[test]
    fn zero_snippet_without_normalization() {
        let snip: Vec<RaMap<f32>> = (0..4).map(|f| RaMap::zeros(6, 5, f)).collect();
        let x = ramap_to_input(&snip, Normalization::None).unwrap();
        assert_eq!(x.dims(), [1, 2, 4, 6, 5]);
        assert!(x.data().iter().all(|&v| v == 0.0));
        let x = ramap_to_input(&snip, Normalization::PerFrameComplexStd).unwrap();
        assert!(x.data().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn mixed_dims_are_rejected() {
        let snip: Vec<RaMap<f32>> = vec![RaMap::zeros(6, 5, 0), RaMap::zeros(6, 4, 1)];
        assert!(ramap_to_input(&snip, Normalization::None).is_err());
        assert!(ramap_to_input::<f32>(&[], Normalization::None).is_err());
    }

    #[test]
    fn confmap_round_trip() {
        let g = PolarGrid { range_bins: 3, azimuth_bins: 2, range_resolution_m: 1.0 };
        let maps: Vec<ConfMap<f64>> = (0..4)
            .map(|f| {
                let mut m = ConfMap::zeros(&g, f);
                m.data.iter_mut().enumerate().for_each(|(i, v)| *v = (i + 100 * f) as f64);
                m
            })
            .collect();
        let y = confmaps_to_target(&maps).unwrap();
        assert_eq!(y.dims(), [1, 3, 4, 3, 2]);
        assert_eq!(output_to_confmaps(&y, 0, 0), maps);
    }
}
