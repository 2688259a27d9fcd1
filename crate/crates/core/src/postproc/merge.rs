use crate::crf::ConfMap;
use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Start frames of length-`tau` windows advancing by `stride` over
/// `num_frames` frames. A final window aligned to the end is added when the
/// stride does not land on it, so every frame is covered.
pub fn window_starts(num_frames: usize, tau: usize, stride: usize) -> Result<Vec<usize>> {
    if tau == 0 || stride == 0 {
        return Err(Error::config("window length and stride must be at least 1"));
    }
    if stride > tau {
        return Err(Error::config(format!("stride {stride} exceeds window length {tau}: frames would be skipped")));
    }
    if num_frames < tau {
        return Err(Error::config(format!("sequence of {num_frames} frames is shorter than the window length {tau}")));
    }
    let last = num_frames - tau;
    let mut starts: Vec<usize> = (0..=last).step_by(stride).collect();
    if *starts.last().expect("at least one window") != last {
        starts.push(last);
    }
    Ok(starts)
}

/// Averages overlapping window predictions into one ConfMap per frame.
///
/// `windows` holds `(start_frame, per-frame maps)` pairs; the output covers
/// frames `0..max(start + len)` and every one of them must be covered by at
/// least one window.
pub fn merge_confmaps<T: Scalar>(windows: &[(usize, Vec<ConfMap<T>>)]) -> Result<Vec<ConfMap<T>>> {
    let total = windows.iter().map(|(s, w)| s + w.len()).max().unwrap_or(0);
    let template = windows
        .iter()
        .flat_map(|(_, w)| w.first())
        .next()
        .ok_or_else(|| Error::config("no window predictions to merge"))?;
    let mut sums: Vec<Vec<T>> = vec![vec![T::zero(); template.data.len()]; total];
    let mut counts = vec![0usize; total];
    for (start, maps) in windows {
        for (offset, m) in maps.iter().enumerate() {
            if !m.same_shape(template) {
                return Err(Error::dims("window ConfMap", (template.range_bins, template.azimuth_bins), (m.range_bins, m.azimuth_bins)));
            }
            let f = start + offset;
            for (acc, v) in sums[f].iter_mut().zip(&m.data) {
                *acc += *v;
            }
            counts[f] += 1;
        }
    }
    sums.into_iter()
        .zip(counts)
        .enumerate()
        .map(|(frame, (mut data, n))| {
            if n == 0 {
                return Err(Error::config(format!("frame {frame} is not covered by any window")));
            }
            let inv = T::one() / T::lit(n as f64);
            for v in data.iter_mut() {
                *v = (*v * inv).min(T::one()).max(T::zero());
            }
            Ok(ConfMap { range_bins: template.range_bins, azimuth_bins: template.azimuth_bins, frame_index: frame, data })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::radar::PolarGrid;
    use rand::{Rng, SeedableRng};

    const G: PolarGrid = PolarGrid { range_bins: 4, azimuth_bins: 3, range_resolution_m: 1.0 };

    fn random_window(rng: &mut impl Rng, tau: usize) -> Vec<ConfMap<f64>> {
        (0..tau)
            .map(|_| {
                let mut m = ConfMap::zeros(&G, 0);
                m.data.iter_mut().for_each(|v| *v = rng.random());
                m
            })
            .collect()
    }

    #[test]
    fn starts_cover_the_sequence() {
        assert_eq!(window_starts(32, 16, 16).unwrap(), vec![0, 16]);
        assert_eq!(window_starts(32, 16, 8).unwrap(), vec![0, 8, 16]);
        assert_eq!(window_starts(30, 16, 8).unwrap(), vec![0, 8, 14]);
        assert_eq!(window_starts(16, 16, 4).unwrap(), vec![0]);
        assert!(window_starts(10, 16, 4).is_err());
        assert!(window_starts(32, 16, 0).is_err());
        assert!(window_starts(32, 4, 8).is_err());
    }

    #[test]
    fn no_overlap_is_passthrough() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(0);
        let w0 = random_window(&mut rng, 4);
        let w1 = random_window(&mut rng, 4);
        let merged = merge_confmaps(&[(0, w0.clone()), (4, w1.clone())]).unwrap();
        assert_eq!(merged.len(), 8);
        for (f, m) in merged.iter().enumerate() {
            let src = if f < 4 { &w0[f] } else { &w1[f - 4] };
            assert_eq!(m.data, src.data);
            assert_eq!(m.frame_index, f);
        }
    }

    #[test]
    fn identical_windows_merge_to_themselves() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(1);
        let w = random_window(&mut rng, 4);
        let merged = merge_confmaps(&[(0, w.clone()), (0, w.clone())]).unwrap();
        for (m, s) in merged.iter().zip(&w) {
            for (a, b) in m.data.iter().zip(&s.data) {
                assert!((a - b).abs() < 1e-15);
            }
        }
    }

    #[test]
    fn half_stride_averages_interior_frames() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(2);
        let (tau, stride, n) = (4, 2, 12);
        let starts = window_starts(n, tau, stride).unwrap();
        let windows: Vec<_> = starts.iter().map(|&s| (s, random_window(&mut rng, tau))).collect();
        let merged = merge_confmaps(&windows).unwrap();
        for f in 0..n {
            // coverage-count oracle
            let covering: Vec<&ConfMap<f64>> = windows.iter().filter(|(s, _)| *s <= f && f < s + tau).map(|(s, w)| &w[f - s]).collect();
            let expected_count = if f < stride || f >= n - stride { 1 } else { 2 };
            assert_eq!(covering.len(), expected_count, "frame {f}");
            for i in 0..merged[f].data.len() {
                let mean = covering.iter().map(|m| m.data[i]).sum::<f64>() / covering.len() as f64;
                assert!((merged[f].data[i] - mean).abs() < 1e-15);
            }
        }
    }

    #[test]
    fn uncovered_frame_is_an_error() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(3);
        let r = merge_confmaps(&[(0, random_window(&mut rng, 2)), (4, random_window(&mut rng, 2))]);
        assert!(r.is_err());
        assert!(merge_confmaps::<f64>(&[]).is_err());
    }
}
