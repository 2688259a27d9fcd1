use num_complex::Complex;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rodkit_core::crf::{camera_prob_map, fuse, gen_confmap, radar_prob_map, Annotation, CameraAnnotation, ClassTable, ConfMap, ProbMap, RadarPeak};
use rodkit_core::postproc::{l_nms, merge_confmaps, ols, window_starts};
use rodkit_core::radar::{cfar_detect, CfarParams, PolarGrid, RaMap, RadarConfig};
use rodkit_core::{ClassId, Detection, OlsParams};

fn cfg() -> ProptestConfig {
    ProptestConfig { failure_persistence: None, ..ProptestConfig::with_cases(48) }
}

fn small_grid() -> (RadarConfig, PolarGrid) {
    let cfg = RadarConfig { range_bins: 32, azimuth_bins: 24, samples_per_chirp: 64, range_resolution_m: 0.5, ..RadarConfig::default() };
    let g = cfg.grid();
    (cfg, g)
}

// Straightforward re-scan: pick the strongest survivor, drop what it covers, repeat.
fn nms_reference(peaks: &[Detection], kappa: &OlsParams, thr: f64) -> Vec<Detection> {
    let mut left: Vec<Detection> = peaks.to_vec();
    let mut out = vec![];
    while !left.is_empty() {
        let mut best = 0;
        for i in 1..left.len() {
            if left[i].confidence > left[best].confidence {
                best = i;
            }
        }
        let k = left.remove(best);
        let s = k.range_m * kappa.kappa[k.class];
        left.retain(|p| {
            let (x0, y0) = (k.range_m * k.azimuth_rad.sin(), k.range_m * k.azimuth_rad.cos());
            let (x1, y1) = (p.range_m * p.azimuth_rad.sin(), p.range_m * p.azimuth_rad.cos());
            let d2 = (x0 - x1).powi(2) + (y0 - y1).powi(2);
            (-d2 / (2.0 * s * s)).exp() <= thr
        });
        out.push(k);
    }
    out
}

fn random_peaks(rng: &mut ChaCha8Rng, n: usize) -> Vec<Detection> {
    (0..n)
        .map(|_| Detection {
            frame_index: 0,
            class: ClassId::ALL[rng.random_range(0..3)],
            range_m: rng.random_range(1.0..30.0),
            azimuth_rad: rng.random_range(-1.2..1.2),
            confidence: (rng.random_range(0..50) as f64) / 50.0,
        })
        .collect()
}

#[test]
fn l_nms_matches_rescan_reference() {
    let mut rng = ChaCha8Rng::seed_from_u64(42);
    let p = OlsParams::default();
    for _ in 0..1000 {
        let n = rng.random_range(0..=64);
        let peaks = random_peaks(&mut rng, n);
        let thr = [0.1, 0.3, 0.5][rng.random_range(0..3)];
        assert_eq!(l_nms(&peaks, &p, thr).unwrap(), nms_reference(&peaks, &p, thr));
    }
}

proptest! {
    #![proptest_config(cfg())]

    #[test]
    fn l_nms_output_is_sorted_and_sparse(seed in any::<u64>(), n in 0usize..40, thr in 0.05f64..0.95) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let peaks = random_peaks(&mut rng, n);
        let p = OlsParams::default();
        let out = l_nms(&peaks, &p, thr).unwrap();
        prop_assert!(out.windows(2).all(|w| w[0].confidence >= w[1].confidence));
        for (i, a) in out.iter().enumerate() {
            for b in &out[i + 1..] {
                prop_assert!(ols(b.position(), a.position(), p.kappa[a.class]).unwrap() <= thr);
            }
        }
        // every dropped peak is covered by a kept one of at least its confidence
        for q in &peaks {
            if !out.contains(q) {
                prop_assert!(out.iter().any(|k| k.confidence >= q.confidence && ols(q.position(), k.position(), p.kappa[k.class]).unwrap() > thr));
            }
        }
    }

    #[test]
    fn ols_is_symmetric_at_equal_range(r in 1.0f64..50.0, a in -1.5f64..1.5, b in -1.5f64..1.5, k in 0.01f64..1.0) {
        let x = ols((r, a), (r, b), k).unwrap();
        prop_assert_eq!(x, ols((r, b), (r, a), k).unwrap());
        prop_assert!((0.0..=1.0).contains(&x));
    }

    #[test]
    fn cfar_is_invariant_to_power_of_two_scaling(seed in any::<u64>(), e in -20i32..20) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut map = RaMap::<f64>::zeros(24, 20, 0);
        for c in map.cells.iter_mut() {
            *c = Complex::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0));
        }
        for _ in 0..3 {
            let i = rng.random_range(0..map.cells.len());
            map.cells[i] *= 20.0;
        }
        let f = 2f64.powi(e);
        let mut scaled = map.clone();
        scaled.cells.iter_mut().for_each(|c| *c *= f);
        let a = cfar_detect(&map, &CfarParams::default()).unwrap();
        let b = cfar_detect(&scaled, &CfarParams::default()).unwrap();
        prop_assert_eq!(a.len(), b.len());
        for (p, q) in a.iter().zip(&b) {
            prop_assert_eq!((p.range_bin, p.azimuth_bin), (q.range_bin, q.azimuth_bin));
            prop_assert_eq!(p.magnitude * f, q.magnitude);
        }
    }

    #[test]
    fn maps_stay_in_unit_interval_and_fusion_is_monotone(seed in any::<u64>(), n in 0usize..5) {
        let (cfg, g) = small_grid();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let classes = ClassTable::default();
        let cam: Vec<CameraAnnotation> = (0..n)
            .map(|_| {
                let r = rng.random_range(1.0..15.0);
                CameraAnnotation { class: ClassId::ALL[rng.random_range(0..3)], range_m: r, azimuth_rad: rng.random_range(-1.0..1.0), depth_m: r, depth_confidence: rng.random_range(0.5..1.0), frame_index: 0 }
            })
            .collect();
        let peaks: Vec<RadarPeak> = (0..n + 1)
            .map(|_| RadarPeak { range_m: rng.random_range(1.0..15.0), azimuth_rad: rng.random_range(-1.0..1.0), magnitude: 1.0 })
            .collect();
        let cmap = camera_prob_map::<f64>(&cam, &classes, &g, false).unwrap();
        let rmap = radar_prob_map::<f64>(&peaks, &cfg, &g, false);
        let fused = fuse(&cmap, &rmap).unwrap();
        let unit = |m: &ProbMap<f64>| m.values.iter().all(|v| (0.0..=1.0).contains(v));
        prop_assert!(unit(&rmap));
        for c in ClassId::ALL {
            prop_assert!(unit(&cmap[c]) && unit(&fused[c]));
            for i in 0..fused[c].values.len() {
                prop_assert!(fused[c].values[i] <= cmap[c].values[i].min(rmap.values[i]) + 1e-15);
            }
        }
        // raising the radar evidence never lowers the fused map
        let mut stronger = rmap.clone();
        stronger.values.iter_mut().for_each(|v| *v = (*v * 1.5).min(1.0));
        let fused2 = fuse(&cmap, &stronger).unwrap();
        for c in ClassId::ALL {
            prop_assert!(fused2[c].values.iter().zip(&fused[c].values).all(|(a, b)| a >= b));
        }

        let annos: Vec<Annotation> = cam.iter().map(|a| Annotation { class: a.class, range_m: a.range_m, azimuth_rad: a.azimuth_rad, score: 1.0 }).collect();
        let (conf, _) = gen_confmap::<f32>(&annos, &classes, &g, 0).unwrap();
        prop_assert!(conf.data.iter().all(|v| (0.0..=1.0).contains(v)));
        for a in &annos {
            let (r, k) = g.cell_of(a.range_m, a.azimuth_rad).unwrap();
            prop_assert_eq!(conf.at(a.class, r, k), 1.0);
        }
    }

    #[test]
    fn merged_maps_stay_in_unit_interval(seed in any::<u64>(), stride in 1usize..=8) {
        let (_, g) = small_grid();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let starts = window_starts(20, 8, stride).unwrap();
        let windows: Vec<(usize, Vec<ConfMap<f32>>)> = starts
            .iter()
            .map(|&s| {
                let maps = (0..8)
                    .map(|_| {
                        let mut m = ConfMap::zeros(&g, 0);
                        m.data.iter_mut().for_each(|v| *v = rng.random());
                        m
                    })
                    .collect();
                (s, maps)
            })
            .collect();
        let merged = merge_confmaps(&windows).unwrap();
        prop_assert_eq!(merged.len(), 20);
        prop_assert!(merged.iter().all(|m| m.data.iter().all(|v| (0.0..=1.0).contains(v))));
    }
}
