use serde::Serialize;

use crate::class::{ClassId, PerClass};
use crate::error::{Error, Result};
use crate::eval::matching::match_frame;
use crate::postproc::{Detection, OlsParams};
use crate::radar::TruthRecord;

pub const NUM_THRESHOLDS: usize = 9;

/// OLS thresholds 0.50, 0.55, ..., 0.90.
pub fn ols_thresholds() -> [f64; NUM_THRESHOLDS] {
    std::array::from_fn(|i| (50 + 5 * i) as f64 / 100.0)
}

/// Detections and truths of one frame.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct EvalFrame {
    pub detections: Vec<Detection>,
    pub truths: Vec<TruthRecord>,
}

/// Groups flat detection and truth lists by frame index. Frames that have
/// truths but no detections, or the reverse, are kept.
pub fn frames_from_records(detections: &[Detection], truths: &[TruthRecord]) -> Vec<EvalFrame> {
    let mut frames: std::collections::BTreeMap<usize, EvalFrame> = Default::default();
    for d in detections {
        frames.entry(d.frame_index).or_default().detections.push(*d);
    }
    for t in truths {
        frames.entry(t.frame).or_default().truths.push(t.clone());
    }
    frames.into_values().collect()
}

/// Area under the precision/recall curve with all-point interpolation.
/// Detections of equal confidence form one operating point. `None` when
/// there are no truths.
pub fn average_precision(scored: &[(f64, bool)], num_truths: usize) -> Option<f64> {
    if num_truths == 0 {
        return None;
    }
    let mut sorted = scored.to_vec();
    sorted.sort_by(|a, b| b.0.total_cmp(&a.0));
    let mut points: Vec<(f64, f64)> = Vec::new(); // (recall, precision)
    let (mut tp, mut n) = (0usize, 0usize);
    let mut i = 0;
    while i < sorted.len() {
        let conf = sorted[i].0;
        while i < sorted.len() && sorted[i].0 == conf {
            tp += sorted[i].1 as usize;
            n += 1;
            i += 1;
        }
        points.push((tp as f64 / num_truths as f64, tp as f64 / n as f64));
    }
    let mut ap = 0.0;
    let mut envelope = 0.0f64;
    let mut upper = points.last().map_or(0.0, |p| p.0);
    for &(recall, precision) in points.iter().rev() {
        // the segment (recall, upper] is covered by the best precision at or beyond it
        ap += (upper - recall) * envelope;
        envelope = envelope.max(precision);
        upper = recall;
    }
    ap += upper * envelope;
    Some(ap)
}

#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct ClassStats {
    pub true_positives: usize,
    pub false_positives: usize,
    pub truths: usize,
    pub ap: Option<f64>,
    pub ar: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ThresholdStats {
    pub threshold: f64,
    /// Mean of the class APs over classes that have truths.
    pub ap: Option<f64>,
    pub ar: Option<f64>,
    pub per_class: PerClass<ClassStats>,
}

impl ThresholdStats {
    pub fn true_positives(&self) -> usize {
        self.per_class.iter().map(|(_, c)| c.true_positives).sum()
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct ClassSummary {
    pub ap: Option<f64>,
    pub ar: Option<f64>,
}

/// AP/AR as fractions in [0, 1]. `None` where undefined for lack of truths.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EvalReport {
    pub ap: Option<f64>,
    pub ar: Option<f64>,
    pub per_threshold: Vec<ThresholdStats>,
    pub per_class: PerClass<ClassSummary>,
    pub frames: usize,
    pub detections: usize,
    pub truths: usize,
}

#[derive(Debug, Clone, Default)]
struct Tally {
    scored: Vec<(f64, bool)>,
    truths: usize,
}

fn mean(values: impl IntoIterator<Item = Option<f64>>) -> Option<f64> {
    let v: Vec<f64> = values.into_iter().flatten().collect();
    (!v.is_empty()).then(|| v.iter().sum::<f64>() / v.len() as f64)
}

/// Matches every frame at each of the nine OLS thresholds and reports AP/AR
/// per threshold and class, plus their means.
pub fn ap_ar_sweep<'a>(frames: impl IntoIterator<Item = &'a EvalFrame>, params: &OlsParams) -> Result<EvalReport> {
    let frames: Vec<&EvalFrame> = frames.into_iter().collect();
    if frames.is_empty() {
        return Err(Error::config("evaluation needs at least one frame"));
    }
    let thresholds = ols_thresholds();
    let mut tallies: Vec<PerClass<Tally>> = vec![PerClass::default(); NUM_THRESHOLDS];
    for frame in &frames {
        for (k, &thr) in thresholds.iter().enumerate() {
            let m = match_frame(&frame.detections, &frame.truths, params, thr);
            for (i, d) in frame.detections.iter().enumerate() {
                tallies[k][d.class].scored.push((d.confidence, m.is_true_positive(i)));
            }
            for t in &frame.truths {
                tallies[k][t.class].truths += 1;
            }
        }
    }
    let per_threshold: Vec<ThresholdStats> = thresholds
        .iter()
        .zip(&tallies)
        .map(|(&threshold, tally)| {
            let per_class = tally.map(|_, t| {
                let tp = t.scored.iter().filter(|s| s.1).count();
                ClassStats {
                    true_positives: tp,
                    false_positives: t.scored.len() - tp,
                    truths: t.truths,
                    ap: average_precision(&t.scored, t.truths),
                    ar: (t.truths > 0).then(|| tp as f64 / t.truths as f64),
                }
            });
            ThresholdStats {
                threshold,
                ap: mean(per_class.iter().map(|(_, c)| c.ap)),
                ar: mean(per_class.iter().map(|(_, c)| c.ar)),
                per_class,
            }
        })
        .collect();
    let per_class = PerClass::from_fn(|c: ClassId| ClassSummary {
        ap: mean(per_threshold.iter().map(|t| t.per_class[c].ap)),
        ar: mean(per_threshold.iter().map(|t| t.per_class[c].ar)),
    });
    Ok(EvalReport {
        ap: mean(per_threshold.iter().map(|t| t.ap)),
        ar: mean(per_threshold.iter().map(|t| t.ar)),
        per_threshold,
        per_class,
        frames: frames.len(),
        detections: frames.iter().map(|f| f.detections.len()).sum(),
        truths: frames.iter().map(|f| f.truths.len()).sum(),
    })
}
