use crate::class::{ClassId, PerClass};
use crate::crf::ClassTable;
use crate::error::{Error, Result};
use crate::radar::bev_distance_sq;

/// Per-class OLS error tolerance κ.
#[derive(Debug, Clone, PartialEq)]
pub struct OlsParams {
    pub kappa: PerClass<f64>,
}

impl OlsParams {
    pub fn from_classes(classes: &ClassTable) -> Result<Self> {
        let mut kappa = PerClass([0.0; 3]);
        for c in ClassId::ALL {
            kappa[c] = classes.get(c)?.ols_kappa;
        }
        Ok(OlsParams { kappa })
    }

    /// OLS of `point` against `reference`, using the reference's class
    /// tolerance and range as the object scale.
    pub fn similarity(&self, point: (f64, f64), reference: (f64, f64), reference_class: ClassId) -> Result<f64> {
        ols(point, reference, self.kappa[reference_class])
    }
}

impl Default for OlsParams {
    fn default() -> Self {
        OlsParams::from_classes(&ClassTable::default()).expect("default table covers every class")
    }
}

/// Object location similarity `exp(-d² / (2 (s κ)²))` for a BEV distance
/// `d` in meters, object scale `s` (range in meters) and class tolerance κ.
pub fn ols_value(d: f64, s: f64, kappa: f64) -> Result<f64> {
    if !(s != 0.0) || !s.is_finite() {
        return Err(Error::domain(format!("OLS undefined for object scale s = {s}")));
    }
    if !(kappa > 0.0) {
        return Err(Error::domain(format!("OLS undefined for κ = {kappa}")));
    }
    let sk = s * kappa;
    Ok((-(d * d) / (2.0 * sk * sk)).exp())
}

/// OLS between two polar points `(range_m, azimuth_rad)`. The distance is
/// measured in BEV Cartesian meters and `s` is the range of `reference`.
pub fn ols(point: (f64, f64), reference: (f64, f64), kappa: f64) -> Result<f64> {
    ols_value(bev_distance_sq(point, reference).sqrt(), reference.0, kappa)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identical_points_score_exactly_one() {
        assert_eq!(ols((12.0, 0.4), (12.0, 0.4), 0.1).unwrap(), 1.0);
        assert_eq!(ols_value(0.0, 3.0, 0.7).unwrap(), 1.0);
    }

    #[test]
    fn reference_value() {
        let v = ols_value(2.0, 10.0, 0.2).unwrap();
        assert!((v - (-0.5f64).exp()).abs() < 1e-12);
        assert!((v - 0.60653).abs() < 1e-5);
    }

    #[test]
    fn zero_scale_is_a_domain_error() {
        assert!(matches!(ols_value(1.0, 0.0, 0.2), Err(Error::Domain(_))));
        assert!(ols((1.0, 0.0), (0.0, 0.0), 0.2).is_err());
    }

    #[test]
    fn decays_monotonically_with_distance() {
        let mut prev = 1.0;
        for i in 1..=2000 {
            let v = ols_value(i as f64 * 0.01, 10.0, 0.2).unwrap();
            assert!(v <= prev);
            prev = v;
        }
        assert!(prev < 1e-20);
    }

    #[test]
    fn symmetric_for_equal_ranges() {
        let a = (15.0, 0.1);
        let b = (15.0, -0.05);
        assert_eq!(ols(a, b, 0.15).unwrap(), ols(b, a, 0.15).unwrap());
        // different ranges: the scale comes from the reference only
        let c = (18.0, -0.05);
        assert_ne!(ols(a, c, 0.15).unwrap(), ols(c, a, 0.15).unwrap());
    }

    #[test]
    fn uses_cartesian_distance() {
        // same range, azimuths ±θ: chord length 2 r sin θ
        let (r, t) = (10.0f64, 0.1f64);
        let d = 2.0 * r * t.sin();
        let expect = (-(d * d) / (2.0 * (r * 0.2f64).powi(2))).exp();
        assert!((ols((r, t), (r, -t), 0.2).unwrap() - expect).abs() < 1e-14);
    }
}
