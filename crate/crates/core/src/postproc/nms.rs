use crate::error::Result;
use crate::postproc::ols::OlsParams;
use crate::postproc::peaks::Detection;

/// Location-based NMS.
///
/// Repeatedly emits the highest-confidence remaining peak and discards every
/// remaining peak whose OLS against it exceeds `ols_threshold`. Suppression
/// crosses classes and uses the emitted peak's κ and range. Ties in
/// confidence go to the earlier peak in `peaks`.
pub fn l_nms(peaks: &[Detection], params: &OlsParams, ols_threshold: f64) -> Result<Vec<Detection>> {
    let mut order: Vec<usize> = (0..peaks.len()).collect();
    order.sort_by(|&a, &b| peaks[b].confidence.total_cmp(&peaks[a].confidence));
    let mut alive = vec![true; peaks.len()];
    let mut out = Vec::new();
    for (pos, &i) in order.iter().enumerate() {
        if !alive[i] {
            continue;
        }
        let kept = peaks[i];
        out.push(kept);
        for &j in &order[pos + 1..] {
            if alive[j] && params.similarity(peaks[j].position(), kept.position(), kept.class)? > ols_threshold {
                alive[j] = false;
            }
        }
    }
    Ok(out)
}
