//! OLS-based matching and AP/AR evaluation with difficulty splits, plus the
//! CFAR baseline detector.

pub mod baseline;
pub mod matching;
pub mod sweep;

pub use baseline::{cfar_baseline, BaselineClassifier, BaselineScore, MagnitudeRule};
pub use matching::{confidence_order, match_frame, MatchPair, MatchResult};
pub use sweep::{ap_ar_sweep, average_precision, frames_from_records, ols_thresholds, ClassStats, ClassSummary, EvalFrame, EvalReport, ThresholdStats, NUM_THRESHOLDS};

use std::collections::BTreeMap;
use std::fmt::Write as _;

use serde::Serialize;

use crate::error::Result;
use crate::postproc::OlsParams;
use crate::radar::Difficulty;

/// One evaluated sequence.
#[derive(Debug, Clone, PartialEq)]
pub struct SequenceEval {
    pub name: String,
    pub difficulty: Difficulty,
    pub frames: Vec<EvalFrame>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SplitReport {
    pub overall: EvalReport,
    pub splits: BTreeMap<Difficulty, EvalReport>,
    /// Difficulty levels with no sequences.
    pub omitted: Vec<Difficulty>,
}

impl SplitReport {
    pub fn split(&self, d: Difficulty) -> Option<&EvalReport> {
        self.splits.get(&d)
    }
}

/// Independent sweeps over all sequences and over each difficulty level.
pub fn split_report(sequences: &[SequenceEval], params: &OlsParams) -> Result<SplitReport> {
    let overall = ap_ar_sweep(sequences.iter().flat_map(|s| &s.frames), params)?;
    let mut splits = BTreeMap::new();
    let mut omitted = Vec::new();
    for d in [Difficulty::Easy, Difficulty::Medium, Difficulty::Hard] {
        let frames: Vec<&EvalFrame> = sequences.iter().filter(|s| s.difficulty == d).flat_map(|s| &s.frames).collect();
        if frames.is_empty() {
            omitted.push(d);
        } else {
            splits.insert(d, ap_ar_sweep(frames, params)?);
        }
    }
    Ok(SplitReport { overall, splits, omitted })
}

fn pct(v: Option<f64>) -> String {
    v.map_or_else(|| "-".to_string(), |v| format!("{:.2}", 100.0 * v))
}

/// Aligned plain-text table: one row per method, AP and AR in percent for
/// the overall set and each difficulty level.
pub fn render_table(rows: &[(&str, &SplitReport)]) -> String {
    let mut header = vec!["Method".to_string()];
    for col in ["Overall", "Easy", "Medium", "Hard"] {
        header.push(format!("{col} AP"));
        header.push(format!("{col} AR"));
    }
    let mut cells: Vec<Vec<String>> = vec![header];
    for (name, r) in rows {
        let mut row = vec![name.to_string(), pct(r.overall.ap), pct(r.overall.ar)];
        for d in [Difficulty::Easy, Difficulty::Medium, Difficulty::Hard] {
            let s = r.split(d);
            row.push(pct(s.and_then(|s| s.ap)));
            row.push(pct(s.and_then(|s| s.ar)));
        }
        cells.push(row);
    }
    let widths: Vec<usize> = (0..cells[0].len()).map(|c| cells.iter().map(|r| r[c].len()).max().unwrap_or(0)).collect();
    let mut out = String::new();
    for (i, row) in cells.iter().enumerate() {
        for (c, cell) in row.iter().enumerate() {
            if c == 0 {
                let _ = write!(out, "{cell:<w$}", w = widths[c]);
            } else {
                let _ = write!(out, "  {cell:>w$}", w = widths[c]);
            }
        }
        out.push('\n');
        if i == 0 {
            out.push_str(&"-".repeat(widths.iter().sum::<usize>() + 2 * (widths.len() - 1)));
            out.push('\n');
        }
    }
    out
}
