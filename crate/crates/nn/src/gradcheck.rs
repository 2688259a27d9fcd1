//! Central finite differences for checking analytic gradients.

/// `∂f/∂x_i ≈ (f(x + ε e_i) − f(x − ε e_i)) / 2ε` for every coordinate.
pub fn central_differences(mut f: impl FnMut(&[f64]) -> f64, x: &[f64], eps: f64) -> Vec<f64> {
    let mut probe = x.to_vec();
    (0..x.len())
        .map(|i| {
            probe[i] = x[i] + eps;
            let up = f(&probe);
            probe[i] = x[i] - eps;
            let down = f(&probe);
            probe[i] = x[i];
            (up - down) / (2.0 * eps)
        })
        .collect()
}

/// Largest `|a − n| / max(|a|, |n|, floor)` over paired entries. The floor
/// keeps entries whose true gradient is (near) zero from dividing rounding
/// noise by nothing.
pub fn max_relative_error(analytic: &[f64], numeric: &[f64], floor: f64) -> f64 {
    assert_eq!(analytic.len(), numeric.len());
    analytic
        .iter()
        .zip(numeric)
        .map(|(a, n)| (a - n).abs() / a.abs().max(n.abs()).max(floor))
        .fold(0.0, f64::max)
}
