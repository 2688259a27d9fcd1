use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rodkit_core::eval::{ap_ar_sweep, cfar_baseline, frames_from_records, split_report, BaselineClassifier, BaselineScore, EvalFrame, MagnitudeRule, SequenceEval};
use rodkit_core::radar::{random_scene_in, simulate_sequence, CfarParams, Difficulty, RadarConfig, ScenarioParams, Scene, SceneObject, SignalChain, TruthRecord};
use rodkit_core::{ClassId, Detection, OlsParams};

fn truth(frame: usize, class: ClassId, r: f64, a: f64) -> TruthRecord {
    TruthRecord { frame, class, range_m: r, azimuth_rad: a }
}

fn det_on(t: &TruthRecord, confidence: f64) -> Detection {
    Detection { frame_index: t.frame, class: t.class, range_m: t.range_m, azimuth_rad: t.azimuth_rad, confidence }
}

fn random_truths(rng: &mut ChaCha8Rng, frames: usize) -> Vec<TruthRecord> {
    let mut out = vec![];
    for f in 0..frames {
        for k in 0..rng.random_range(0..4) {
            let class = ClassId::ALL[rng.random_range(0..3)];
            out.push(truth(f, class, 4.0 + 6.0 * k as f64 + rng.random_range(0.0..3.0), rng.random_range(-0.8..0.8)));
        }
    }
    out
}

#[test]
fn ground_truth_scores_perfectly_against_itself() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let truths = random_truths(&mut rng, 40);
    let dets: Vec<_> = truths.iter().map(|t| det_on(t, 1.0)).collect();
    let r = ap_ar_sweep(&frames_from_records(&dets, &truths), &OlsParams::default()).unwrap();
    assert_eq!(r.per_threshold.len(), 9);
    for t in &r.per_threshold {
        assert_eq!((t.ap, t.ar), (Some(1.0), Some(1.0)), "threshold {}", t.threshold);
    }
    assert_eq!((r.ap, r.ar), (Some(1.0), Some(1.0)));
}

#[test]
fn hand_computed_three_detection_example() {
    let t = [truth(0, ClassId::Car, 10.0, 0.0), truth(1, ClassId::Car, 20.0, 0.3)];
    let far = Detection { frame_index: 0, class: ClassId::Car, range_m: 25.0, azimuth_rad: -0.5, confidence: 0.8 };
    let dets = [det_on(&t[0], 0.9), far, det_on(&t[1], 0.7)];
    let r = ap_ar_sweep(&frames_from_records(&dets, &t), &OlsParams::default()).unwrap();
    // ranked TP, FP, TP over 2 truths: 0.5 * 1 + 0.5 * 2/3
    let expected = 0.5 + 0.5 * 2.0 / 3.0;
    for th in &r.per_threshold {
        assert!((th.ap.unwrap() - expected).abs() < 1e-12);
        assert_eq!(th.ar, Some(1.0));
    }
    assert!((r.ap.unwrap() - expected).abs() < 1e-12);
    // only the car class has truths
    assert_eq!(r.per_class[ClassId::Pedestrian].ap, None);
}

#[test]
fn empty_cases() {
    let t = [truth(0, ClassId::Pedestrian, 5.0, 0.0)];
    let r = ap_ar_sweep(&frames_from_records(&[], &t), &OlsParams::default()).unwrap();
    assert_eq!((r.ap, r.ar), (Some(0.0), Some(0.0)));
    let d = [det_on(&t[0], 0.5)];
    let r = ap_ar_sweep(&frames_from_records(&d, &[]), &OlsParams::default()).unwrap();
    assert_eq!((r.ap, r.ar), (None, None));
    assert!(ap_ar_sweep(&[], &OlsParams::default()).is_err());
}

fn noisy_detections(rng: &mut ChaCha8Rng, truths: &[TruthRecord]) -> Vec<Detection> {
    let mut dets = vec![];
    for t in truths {
        if rng.random_bool(0.8) {
            let class = if rng.random_bool(0.9) { t.class } else { ClassId::ALL[rng.random_range(0..3)] };
            dets.push(Detection {
                frame_index: t.frame,
                class,
                range_m: t.range_m + rng.random_range(-1.0..1.0),
                azimuth_rad: t.azimuth_rad + rng.random_range(-0.05..0.05),
                confidence: (rng.random_range(0..20) as f64) / 20.0,
            });
        }
    }
    let frames = truths.iter().map(|t| t.frame + 1).max().unwrap_or(1);
    for _ in 0..rng.random_range(0..10) {
        dets.push(Detection {
            frame_index: rng.random_range(0..frames),
            class: ClassId::ALL[rng.random_range(0..3)],
            range_m: rng.random_range(2.0..30.0),
            azimuth_rad: rng.random_range(-1.0..1.0),
            confidence: (rng.random_range(0..20) as f64) / 20.0,
        });
    }
    dets
}

fn mixed_sequences(seed: u64) -> Vec<SequenceEval> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..9)
        .map(|i| {
            let truths = random_truths(&mut rng, 6);
            let dets = noisy_detections(&mut rng, &truths);
            SequenceEval {
                name: format!("seq_{i}"),
                difficulty: [Difficulty::Easy, Difficulty::Medium, Difficulty::Hard][i % 3],
                frames: frames_from_records(&dets, &truths),
            }
        })
        .collect()
}

#[test]
fn splits_match_manually_filtered_subsets_and_add_up() {
    let p = OlsParams::default();
    let seqs = mixed_sequences(9);
    let rep = split_report(&seqs, &p).unwrap();
    assert!(rep.omitted.is_empty());
    for d in [Difficulty::Easy, Difficulty::Medium, Difficulty::Hard] {
        let subset: Vec<SequenceEval> = seqs.iter().filter(|s| s.difficulty == d).cloned().collect();
        let direct = ap_ar_sweep(subset.iter().flat_map(|s| &s.frames), &p).unwrap();
        assert_eq!(rep.split(d).unwrap(), &direct);
    }
    for k in 0..9 {
        let sum: usize = rep.splits.values().map(|s| s.per_threshold[k].true_positives()).sum();
        assert_eq!(rep.overall.per_threshold[k].true_positives(), sum);
    }
}

#[test]
fn single_difficulty_split_equals_overall() {
    let mut seqs = mixed_sequences(10);
    seqs.iter_mut().for_each(|s| s.difficulty = Difficulty::Easy);
    let rep = split_report(&seqs, &OlsParams::default()).unwrap();
    assert_eq!(rep.split(Difficulty::Easy).unwrap(), &rep.overall);
    assert_eq!(rep.omitted, vec![Difficulty::Medium, Difficulty::Hard]);
    let table = rodkit_core::eval::render_table(&[("test", &rep)]);
    assert_eq!(table.lines().count(), 3);
    assert!(table.lines().all(|l| l.len() == table.lines().next().unwrap().len()));
}

proptest! {
    #![proptest_config(ProptestConfig { failure_persistence: None, ..ProptestConfig::with_cases(64) })]

    #[test]
    fn report_ignores_frame_order(seed in any::<u64>(), rot in 0usize..20) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let truths = random_truths(&mut rng, 12);
        let dets = noisy_detections(&mut rng, &truths);
        let mut frames = frames_from_records(&dets, &truths);
        let a = ap_ar_sweep(&frames, &OlsParams::default()).unwrap();
        let n = frames.len();
        frames.rotate_left(rot % n.max(1));
        frames.reverse();
        let b = ap_ar_sweep(&frames, &OlsParams::default()).unwrap();
        prop_assert_eq!(a, b);
    }

    #[test]
    fn ap_and_ar_do_not_grow_with_threshold(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let truths = random_truths(&mut rng, 12);
        let dets = noisy_detections(&mut rng, &truths);
        let r = ap_ar_sweep(&frames_from_records(&dets, &truths), &OlsParams::default()).unwrap();
        for w in r.per_threshold.windows(2) {
            if let (Some(a), Some(b)) = (w[0].ap, w[1].ap) { prop_assert!(b <= a + 1e-12); }
            if let (Some(a), Some(b)) = (w[0].ar, w[1].ar) { prop_assert!(b <= a + 1e-12); }
        }
    }

    #[test]
    fn lower_confidence_duplicate_never_raises_ap(seed in any::<u64>(), pick in any::<prop::sample::Index>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let truths = random_truths(&mut rng, 8);
        let dets = noisy_detections(&mut rng, &truths);
        let p = OlsParams::default();
        let frames = frames_from_records(&dets, &truths);
        let base = ap_ar_sweep(&frames, &p).unwrap();
        let k = 4; // threshold 0.70
        let tps: Vec<&Detection> = frames
            .iter()
            .flat_map(|f| {
                let m = rodkit_core::eval::match_frame(&f.detections, &f.truths, &p, base.per_threshold[k].threshold);
                m.matches.iter().map(|mp| &f.detections[mp.detection]).collect::<Vec<_>>()
            })
            .collect();
        prop_assume!(!tps.is_empty());
        let mut dup = *tps[pick.index(tps.len())];
        dup.confidence *= 0.5;
        let mut with_dup = dets.clone();
        with_dup.push(dup);
        let r = ap_ar_sweep(&frames_from_records(&with_dup, &truths), &p).unwrap();
        prop_assert!(r.per_threshold[k].ap.unwrap() <= base.per_threshold[k].ap.unwrap() + 1e-12);
    }
}

fn static_object(class: ClassId, range_m: f64, azimuth_rad: f64) -> SceneObject {
    let (reflectivity, _) = rodkit_core::radar::class_signature(class);
    SceneObject { class, range_m, azimuth_rad, radial_velocity_mps: 0.0, reflectivity, micro_motion_std: 0.0 }
}

#[test]
fn baseline_finds_clean_single_object() {
    let cfg = RadarConfig::default();
    let chain = SignalChain::<f64>::new(&cfg).unwrap();
    let scene = Scene { objects: vec![static_object(ClassId::Car, 12.0, 0.3)], clutter_density: 0.0, noise_std: 0.0, num_frames: 2 };
    let maps = simulate_sequence(&scene, &chain, 1).unwrap();
    let truths = scene.truth(&cfg);
    let dets = cfar_baseline(&maps, &cfg, &CfarParams::default(), &BaselineClassifier::Magnitude(MagnitudeRule::default()), BaselineScore::default()).unwrap();
    let r = ap_ar_sweep(&frames_from_records(&dets, &truths), &OlsParams::default()).unwrap();
    assert_eq!(r.per_threshold[0].per_class[ClassId::Car].true_positives, 2);
}

#[test]
fn baseline_on_empty_frames_only_produces_false_positives() {
    let cfg = RadarConfig::default();
    let chain = SignalChain::<f64>::new(&cfg).unwrap();
    let scene = Scene { objects: vec![], clutter_density: 10.0, noise_std: 0.05, num_frames: 3 };
    let maps = simulate_sequence(&scene, &chain, 4).unwrap();
    let dets = cfar_baseline(&maps, &cfg, &CfarParams::default(), &BaselineClassifier::Magnitude(MagnitudeRule::default()), BaselineScore::default()).unwrap();
    assert!(!dets.is_empty());
    let frames: Vec<EvalFrame> = frames_from_records(&dets, &[]);
    let r = ap_ar_sweep(&frames, &OlsParams::default()).unwrap();
    for t in &r.per_threshold {
        assert_eq!(t.true_positives(), 0);
    }
}

#[test]
fn baseline_false_positives_dominate_in_clutter() {
    let cfg = RadarConfig::default();
    let chain = SignalChain::<f32>::new(&cfg).unwrap();
    let params = ScenarioParams { num_frames: 4, ..ScenarioParams::default() };
    let mut rng = ChaCha8Rng::seed_from_u64(31);
    let (mut tp, mut fp) = (0, 0);
    for s in 0..10 {
        let mut scene = random_scene_in(&cfg, &params, Difficulty::Hard, &mut rng);
        scene.clutter_density = scene.clutter_density.max(8.0);
        let maps = simulate_sequence(&scene, &chain, s).unwrap();
        let truths = scene.truth(&cfg);
        let classifier = BaselineClassifier::NearestTruth { truths: &truths, radius_m: 3.0, fallback: MagnitudeRule::default() };
        let dets = cfar_baseline(&maps, &cfg, &CfarParams::default(), &classifier, BaselineScore::default()).unwrap();
        let r = ap_ar_sweep(&frames_from_records(&dets, &truths), &OlsParams::default()).unwrap();
        let t = &r.per_threshold[0];
        tp += t.true_positives();
        fp += t.per_class.iter().map(|(_, c)| c.false_positives).sum::<usize>();
    }
    eprintln!("baseline tp {tp} fp {fp}");
    assert!(fp > tp);
}
