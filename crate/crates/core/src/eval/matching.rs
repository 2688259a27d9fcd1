use serde::Serialize;

use crate::postproc::{Detection, OlsParams};
use crate::radar::TruthRecord;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MatchPair {
    pub detection: usize,
    pub truth: usize,
    pub ols: f64,
}

/// Outcome of matching one frame. Indices refer to the slices passed to
/// [`match_frame`].
#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct MatchResult {
    pub matches: Vec<MatchPair>,
    pub false_positives: Vec<usize>,
    pub false_negatives: Vec<usize>,
}

impl MatchResult {
    pub fn is_true_positive(&self, detection: usize) -> bool {
        self.matches.iter().any(|m| m.detection == detection)
    }
}

/// Indices of `dets` by descending confidence; equal confidences keep input order.
pub fn confidence_order(dets: &[Detection]) -> Vec<usize> {
    let mut order: Vec<usize> = (0..dets.len()).collect();
    order.sort_by(|&a, &b| dets[b].confidence.total_cmp(&dets[a].confidence));
    order
}

/// Greedy matching. Detections are visited by descending confidence; each
/// claims the unclaimed same-class truth with the highest OLS if that OLS
/// reaches `threshold`. OLS is taken with the truth as reference. Equal OLS
/// values go to the lower truth index.
pub fn match_frame(dets: &[Detection], truths: &[TruthRecord], params: &OlsParams, threshold: f64) -> MatchResult {
    let mut claimed = vec![false; truths.len()];
    let mut result = MatchResult::default();
    for i in confidence_order(dets) {
        let d = &dets[i];
        let mut best: Option<(usize, f64)> = None;
        for (j, t) in truths.iter().enumerate() {
            if claimed[j] || t.class != d.class {
                continue;
            }
            // a truth at zero range has no scale; it cannot be matched
            let Ok(s) = params.similarity(d.position(), (t.range_m, t.azimuth_rad), t.class) else {
                continue;
            };
            if best.is_none_or(|(_, b)| s > b) {
                best = Some((j, s));
            }
        }
        match best {
            Some((j, s)) if s >= threshold => {
                claimed[j] = true;
                result.matches.push(MatchPair { detection: i, truth: j, ols: s });
            }
            _ => result.false_positives.push(i),
        }
    }
    result.false_negatives = (0..truths.len()).filter(|&j| !claimed[j]).collect();
    result
}
