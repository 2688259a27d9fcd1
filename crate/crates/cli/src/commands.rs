use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use rodkit_core::crf::{annotate_frame, gen_confmap, simulate_co_annotations, AnnotationRecord, AnnotationSource, ConfMap};
use rodkit_core::eval::{cfar_baseline, frames_from_records, render_table, split_report, BaselineClassifier, SequenceEval, SplitReport};
use rodkit_core::io::{load_jsonl, save_jsonl, save_ramaps};
use rodkit_core::postproc::{detect_frame, merge_confmaps, window_starts, Detection, OlsParams};
use rodkit_core::radar::{random_scene, simulate_sequence, Difficulty, RaMap, SignalChain};
use rodkit_core::{Error, Result};
use rodkit_nn::checkpoint::{load_checkpoint, save_checkpoint};
use rodkit_nn::{build_model, confmaps_to_target, output_to_confmaps, ramap_to_input, train, EpochReport, Model, ModelSpec, Normalization, Sample, TrainReport, Variant};

use crate::config::PipelineConfig;
use crate::dataset::*;

/// Seed of the camera emulator for a sequence, kept apart from the radar
/// noise stream.
fn camera_seed(seq_seed: u64) -> u64 {
    seq_seed ^ 0x00c0_ffee_0000_0000
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SimulateSummary {
    pub sequences: Vec<SequenceMeta>,
    pub counts: BTreeMap<Difficulty, usize>,
}

/// Writes `n` sequences under `out`; sequence `i` uses seed `seed + i`.
pub fn simulate(cfg: &PipelineConfig, out: &Path, n: usize, seed: u64, force: bool) -> Result<SimulateSummary> {
    cfg.validate()?;
    if n == 0 {
        return Err(Error::config("--sequences must be at least 1"));
    }
    fs::create_dir_all(out).map_err(|e| Error::config(format!("cannot create {}: {e}", out.display())))?;
    for i in 0..n {
        check_overwrite(&out.join(sequence_name(i)), force)?;
    }
    let hash = cfg.data_hash();
    let sequences = (0..n)
        .into_par_iter()
        .map(|i| {
            let seq_seed = seed.wrapping_add(i as u64);
            let mut rng = ChaCha8Rng::seed_from_u64(seq_seed);
            let scene = random_scene(&cfg.radar, &cfg.scene, &mut rng);
            let chain = SignalChain::<f64>::new(&cfg.radar)?;
            let maps: Vec<RaMap<f32>> = simulate_sequence(&scene, &chain, seq_seed)?.iter().map(|m| m.cast()).collect();
            let meta = SequenceMeta {
                name: sequence_name(i),
                difficulty: scene.difficulty(),
                seed: seq_seed,
                num_frames: scene.num_frames,
                num_objects: scene.objects.len(),
                clutter_density: scene.clutter_density,
                config_hash: hash.clone(),
            };
            let dir = out.join(&meta.name);
            fs::create_dir_all(&dir).map_err(|e| Error::config(format!("cannot create {}: {e}", dir.display())))?;
            for stale in [CO_FILE, CRF_FILE] {
                let _ = fs::remove_file(dir.join(stale));
            }
            save_ramaps(&dir.join(RAMAPS_FILE), &maps)?;
            save_jsonl(&dir.join(TRUTH_FILE), &scene.truth(&cfg.radar))?;
            write_json(&dir.join(SCENE_FILE), &scene)?;
            write_json(&dir.join(META_FILE), &meta)?;
            Ok(meta)
        })
        .collect::<Result<Vec<_>>>()?;
    let mut counts = BTreeMap::new();
    for m in &sequences {
        *counts.entry(m.difficulty).or_insert(0) += 1;
    }
    Ok(SimulateSummary { sequences, counts })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum AnnotateMode {
    Co,
    Crf,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct AnnotateSummary {
    pub sequences: usize,
    pub co_records: usize,
    pub crf_records: usize,
}

/// Camera-only annotations for every sequence; in `Crf` mode also the
/// camera-radar fusion annotations.
pub fn annotate(cfg: &PipelineConfig, data: &Path, mode: AnnotateMode, force: bool) -> Result<AnnotateSummary> {
    let ds = Dataset::open_checked(data, cfg)?;
    for s in &ds.sequences {
        check_overwrite(&s.file(CO_FILE), force)?;
        if mode == AnnotateMode::Crf {
            check_overwrite(&s.file(CRF_FILE), force)?;
            if !s.file(RAMAPS_FILE).is_file() {
                return Err(Error::config(format!("{} is missing", s.file(RAMAPS_FILE).display())));
            }
        }
    }
    let counts = ds
        .sequences
        .par_iter()
        .map(|s| {
            let truth = s.truth()?;
            let camera = simulate_co_annotations(&truth, &cfg.camera, camera_seed(s.meta.seed))?;
            let co: Vec<AnnotationRecord> = camera
                .iter()
                .map(|c| AnnotationRecord {
                    frame: c.frame_index,
                    class: c.class,
                    range_m: c.range_m,
                    azimuth_rad: c.azimuth_rad,
                    score: c.depth_confidence,
                    source: AnnotationSource::Co,
                })
                .collect();
            save_jsonl(&s.file(CO_FILE), &co)?;
            let mut crf = Vec::new();
            if mode == AnnotateMode::Crf {
                for map in s.ramaps()? {
                    let cam: Vec<_> = camera.iter().filter(|c| c.frame_index == map.frame_index).cloned().collect();
                    let annos = annotate_frame(&cam, &map, &cfg.radar, &cfg.classes, &cfg.crf)?;
                    crf.extend(annos.iter().map(|a| AnnotationRecord::from_annotation(map.frame_index, a, AnnotationSource::Crf)));
                }
                save_jsonl(&s.file(CRF_FILE), &crf)?;
            }
            Ok((co.len(), crf.len()))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(AnnotateSummary {
        sequences: counts.len(),
        co_records: counts.iter().map(|c| c.0).sum(),
        crf_records: counts.iter().map(|c| c.1).sum(),
    })
}

/// Per-frame ConfMaps rendered from a sequence's labels.
pub fn label_confmaps(cfg: &PipelineConfig, seq: &SequenceDir, kind: Supervision) -> Result<Vec<ConfMap<f32>>> {
    let labels = seq.labels(kind)?;
    let grid = cfg.radar.grid();
    (0..seq.meta.num_frames)
        .map(|f| {
            let annos: Vec<_> = labels.iter().filter(|r| r.frame == f).map(|r| r.annotation()).collect();
            Ok(gen_confmap(&annos, &cfg.classes, &grid, f)?.0)
        })
        .collect()
}

/// Training snippets of every sequence, `data.snippet_stride` frames apart.
pub fn training_samples(cfg: &PipelineConfig, ds: &Dataset, kind: Supervision) -> Result<Vec<Sample<f32>>> {
    let tau = cfg.model.snippet_len;
    let per_seq = ds
        .sequences
        .par_iter()
        .map(|s| {
            let maps = s.ramaps()?;
            let targets = label_confmaps(cfg, s, kind)?;
            window_starts(maps.len(), tau, cfg.data.snippet_stride)?
                .into_iter()
                .map(|start| {
                    Ok(Sample {
                        input: ramap_to_input(&maps[start..start + tau], cfg.normalization())?,
                        target: confmaps_to_target(&targets[start..start + tau])?,
                    })
                })
                .collect::<Result<Vec<_>>>()
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(per_seq.into_iter().flatten().collect())
}

/// Sidecar `<checkpoint>.json` describing how to rebuild the network.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckpointMeta {
    pub model: ModelSpec,
    pub normalization: Normalization,
    pub supervision: Supervision,
    pub config_hash: String,
}

pub fn checkpoint_meta_path(ckpt: &Path) -> PathBuf {
    let mut s = ckpt.as_os_str().to_owned();
    s.push(".json");
    PathBuf::from(s)
}

pub fn loss_log_path(ckpt: &Path) -> PathBuf {
    let mut s = ckpt.as_os_str().to_owned();
    s.push(".loss.jsonl");
    PathBuf::from(s)
}

/// Builds the configured network and fits it to `samples`.
pub fn fit(cfg: &PipelineConfig, spec: &ModelSpec, samples: &[Sample<f32>], mut on_epoch: impl FnMut(&EpochReport, &Model<f32>, bool) -> Result<()>) -> Result<(Model<f32>, TrainReport)> {
    let mut model = build_model::<f32>(spec, cfg.train.rng_seed)?;
    let report = train(&mut model, samples, &cfg.train, |e, m, due| on_epoch(e, m, due))?;
    Ok((model, report))
}

pub fn train_command(
    cfg: &PipelineConfig,
    data: &Path,
    supervision: Supervision,
    variant: Option<Variant>,
    out: &Path,
    force: bool,
    mut progress: impl FnMut(&EpochReport),
) -> Result<TrainReport> {
    check_overwrite(out, force)?;
    let ds = Dataset::open_checked(data, cfg)?;
    let mut spec = cfg.model.clone();
    if let Some(v) = variant {
        spec.variant = v;
    }
    spec.validate()?;
    let samples = training_samples(cfg, &ds, supervision)?;
    if let Some(dir) = out.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir)?;
    }
    write_json(
        &checkpoint_meta_path(out),
        &CheckpointMeta { model: spec.clone(), normalization: cfg.normalization(), supervision, config_hash: cfg.data_hash() },
    )?;
    let mut epochs = Vec::new();
    let (_, report) = fit(cfg, &spec, &samples, |e, m, due| {
        progress(e);
        epochs.push(e.clone());
        if due {
            save_checkpoint(out, &m.params)?;
        }
        Ok(())
    })?;
    save_jsonl(&loss_log_path(out), &epochs)?;
    Ok(report)
}

/// Rebuilds the network recorded next to `ckpt` and loads its weights.
pub fn load_model(ckpt: &Path) -> Result<(Model<f32>, CheckpointMeta)> {
    let meta: CheckpointMeta = read_json(&checkpoint_meta_path(ckpt))?;
    let mut model = build_model::<f32>(&meta.model, 0)?;
    let params = load_checkpoint::<f32>(ckpt)?;
    model.params.load_from(&params)?;
    Ok((model, meta))
}

/// Sliding-window network output for a whole sequence, overlapping windows
/// averaged. Returns one ConfMap per frame and the number of windows run.
pub fn predict_sequence(model: &Model<f32>, norm: Normalization, maps: &[RaMap<f32>], stride: usize) -> Result<(Vec<ConfMap<f32>>, usize)> {
    let tau = model.spec.snippet_len;
    let starts = window_starts(maps.len(), tau, stride)?;
    let mut windows = Vec::with_capacity(starts.len());
    for &start in &starts {
        let x = ramap_to_input(&maps[start..start + tau], norm)?;
        let y = model.predict(&x)?;
        windows.push((start, output_to_confmaps(&y, 0, start)));
    }
    Ok((merge_confmaps(&windows)?, starts.len()))
}

/// [`predict_sequence`] followed by peak extraction and L-NMS on every
/// frame. Returns the detections and the number of windows run.
pub fn detect_sequence(
    model: &Model<f32>,
    norm: Normalization,
    cfg: &PipelineConfig,
    maps: &[RaMap<f32>],
    stride: usize,
) -> Result<(Vec<Detection>, usize)> {
    let (merged, windows) = predict_sequence(model, norm, maps, stride)?;
    let params = OlsParams::from_classes(&cfg.classes)?;
    let grid = cfg.radar.grid();
    let mut settings = cfg.postproc;
    settings.stride = stride;
    let mut dets = Vec::new();
    for m in &merged {
        dets.extend(detect_frame(m, &grid, &params, &settings)?);
    }
    Ok((dets, windows))
}

/// One line of a detections file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SequenceDetection {
    pub sequence: String,
    #[serde(flatten)]
    pub detection: Detection,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct InferRow {
    pub stride: usize,
    pub windows: usize,
    pub frames: usize,
    pub ms_per_frame: f64,
    pub ap: Option<f64>,
    pub ar: Option<f64>,
    pub detections: PathBuf,
}

/// `out` itself for a single stride, else `out` with `.strideN` before the
/// extension.
pub fn detections_path(out: &Path, stride: usize, multiple: bool) -> PathBuf {
    if !multiple {
        return out.to_path_buf();
    }
    let stem = out.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
    let name = match out.extension() {
        Some(ext) => format!("{stem}.stride{stride}.{}", ext.to_string_lossy()),
        None => format!("{stem}.stride{stride}"),
    };
    out.with_file_name(name)
}

fn sequence_evals(ds: &Dataset, dets: &[SequenceDetection]) -> Result<Vec<SequenceEval>> {
    let mut by_seq: BTreeMap<&str, Vec<Detection>> = BTreeMap::new();
    for d in dets {
        ds.get(&d.sequence)?;
        by_seq.entry(d.sequence.as_str()).or_default().push(d.detection);
    }
    ds.sequences
        .iter()
        .map(|s| {
            let truth = s.truth()?;
            let mut frames = frames_from_records(by_seq.get(s.meta.name.as_str()).map_or(&[][..], |v| v), &truth);
            // frames with neither detections nor truth still count as evaluated frames
            if frames.is_empty() {
                frames.push(Default::default());
            }
            Ok(SequenceEval { name: s.meta.name.clone(), difficulty: s.meta.difficulty, frames })
        })
        .collect()
}

pub fn evaluate(cfg: &PipelineConfig, ds: &Dataset, dets: &[SequenceDetection]) -> Result<SplitReport> {
    split_report(&sequence_evals(ds, dets)?, &OlsParams::from_classes(&cfg.classes)?)
}

/// Runs inference once per stride and reports latency and accuracy.
pub fn infer(cfg: &PipelineConfig, data: &Path, ckpt: &Path, strides: &[usize], out: &Path, force: bool) -> Result<Vec<InferRow>> {
    let ds = Dataset::open_checked(data, cfg)?;
    let (model, meta) = load_model(ckpt)?;
    let tau = meta.model.snippet_len;
    if strides.is_empty() {
        return Err(Error::config("at least one --stride is needed"));
    }
    for &s in strides {
        if s == 0 || s > tau {
            return Err(Error::config(format!("stride {s} outside 1..={tau}")));
        }
        check_overwrite(&detections_path(out, s, strides.len() > 1), force)?;
    }
    let maps: Vec<Vec<RaMap<f32>>> = ds.sequences.iter().map(|s| s.ramaps()).collect::<Result<_>>()?;
    let has_truth = ds.sequences.iter().all(|s| s.file(TRUTH_FILE).is_file());
    let mut rows = Vec::new();
    for &stride in strides {
        let start = Instant::now();
        let per_seq = maps
            .par_iter()
            .map(|m| detect_sequence(&model, meta.normalization, cfg, m, stride))
            .collect::<Result<Vec<_>>>()?;
        let elapsed = start.elapsed().as_secs_f64();
        let frames: usize = maps.iter().map(|m| m.len()).sum();
        let windows = per_seq.iter().map(|p| p.1).sum();
        let records: Vec<SequenceDetection> = ds
            .sequences
            .iter()
            .zip(&per_seq)
            .flat_map(|(s, (dets, _))| dets.iter().map(|d| SequenceDetection { sequence: s.meta.name.clone(), detection: *d }))
            .collect();
        let path = detections_path(out, stride, strides.len() > 1);
        if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
            fs::create_dir_all(dir)?;
        }
        save_jsonl(&path, &records)?;
        let (ap, ar) = if has_truth {
            let r = evaluate(cfg, &ds, &records)?;
            (r.overall.ap, r.overall.ar)
        } else {
            (None, None)
        };
        rows.push(InferRow { stride, windows, frames, ms_per_frame: 1e3 * elapsed / frames as f64, ap, ar, detections: path });
    }
    Ok(rows)
}

pub fn render_infer_table(rows: &[InferRow]) -> String {
    let pct = |v: Option<f64>| v.map_or("-".to_string(), |v| format!("{:.2}", 100.0 * v));
    let mut out = format!("{:>6}  {:>7}  {:>8}  {:>6}  {:>6}\n", "stride", "windows", "ms/frame", "AP", "AR");
    for r in rows {
        out.push_str(&format!("{:>6}  {:>7}  {:>8.3}  {:>6}  {:>6}\n", r.stride, r.windows, r.ms_per_frame, pct(r.ap), pct(r.ar)));
    }
    out
}

/// CFAR baseline detections for every sequence.
pub fn baseline_detections(cfg: &PipelineConfig, ds: &Dataset) -> Result<Vec<SequenceDetection>> {
    let per_seq = ds
        .sequences
        .par_iter()
        .map(|s| {
            let truth = s.truth()?;
            let classifier = BaselineClassifier::NearestTruth { truths: &truth, radius_m: cfg.baseline.truth_radius_m, fallback: cfg.baseline.rule };
            let dets = cfar_baseline(&s.ramaps()?, &cfg.radar, &cfg.baseline.cfar, &classifier, cfg.baseline.score)?;
            Ok(dets.into_iter().map(|d| SequenceDetection { sequence: s.meta.name.clone(), detection: d }).collect::<Vec<_>>())
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(per_seq.into_iter().flatten().collect())
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EvalOutput {
    pub model: SplitReport,
    pub baseline: Option<SplitReport>,
    pub table: String,
}

pub fn eval_command(cfg: &PipelineConfig, data: &Path, dets: &Path, report: Option<&Path>, with_baseline: bool, force: bool) -> Result<EvalOutput> {
    if let Some(r) = report {
        check_overwrite(r, force)?;
    }
    let ds = Dataset::open_checked(data, cfg)?;
    let records: Vec<SequenceDetection> = load_jsonl(dets)?;
    let model = evaluate(cfg, &ds, &records)?;
    let baseline = if with_baseline { Some(evaluate(cfg, &ds, &baseline_detections(cfg, &ds)?)?) } else { None };
    let mut rows: Vec<(&str, &SplitReport)> = vec![("RODNet", &model)];
    if let Some(b) = &baseline {
        rows.push(("CFAR baseline", b));
    }
    let table = render_table(&rows);
    let out = EvalOutput { model, baseline, table };
    if let Some(r) = report {
        write_json(r, &out)?;
    }
    Ok(out)
}
