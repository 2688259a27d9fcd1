//! Binary cross entropy on clamped sigmoid outputs.

use serde::{Deserialize, Serialize};

use rodkit_core::{Error, Result, Scalar};

use crate::tensor::Tensor5;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Reduction {
    /// Summed over classes, cells, frames and batch.
    #[default]
    Sum,
    Mean,
}

#[inline]
pub fn sigmoid<T: Scalar>(z: T) -> T {
    if z >= T::zero() {
        T::one() / (T::one() + (-z).exp())
    } else {
        let e = z.exp();
        e / (T::one() + e)
    }
}

#[inline]
pub fn sigmoid_clamped<T: Scalar>(z: T, eps: T) -> T {
    sigmoid(z).max(eps).min(T::one() - eps)
}

fn check(pred: &Tensor5<impl Scalar>, target: &Tensor5<impl Scalar>, eps: f64) -> Result<()> {
    if pred.dims() != target.dims() {
        return Err(Error::dims("loss prediction vs target", target.dims(), pred.dims()));
    }
    if !(eps > 0.0 && eps <= 1e-3) {
        return Err(Error::config(format!("sigmoid clamp eps must be in (0, 1e-3], got {eps}")));
    }
    Ok(())
}

fn scale(reduction: Reduction, n: usize) -> f64 {
    match reduction {
        Reduction::Sum => 1.0,
        Reduction::Mean => 1.0 / n as f64,
    }
}

/// Loss and gradient with respect to the probabilities `pred`. Entries
/// outside `[eps, 1 - eps]` are clamped and receive zero gradient.
pub fn bce_loss<T: Scalar>(pred: &Tensor5<T>, target: &Tensor5<T>, eps: f64, reduction: Reduction) -> Result<(f64, Tensor5<T>)> {
    check(pred, target, eps)?;
    let k = scale(reduction, pred.len());
    let mut loss = 0.0;
    let mut grad = Tensor5::zeros(pred.dims());
    for ((g, &p), &d) in grad.data_mut().iter_mut().zip(pred.data()).zip(target.data()) {
        let (p, d) = (p.to_f64().unwrap_or(f64::NAN), d.to_f64().unwrap_or(f64::NAN));
        let pc = p.clamp(eps, 1.0 - eps);
        loss -= d * pc.ln() + (1.0 - d) * (1.0 - pc).ln();
        if p > eps && p < 1.0 - eps {
            *g = T::lit(k * (pc - d) / (pc * (1.0 - pc)));
        }
    }
    Ok((k * loss, grad))
}

/// Loss of `sigmoid(logits)` and its gradient with respect to the logits.
pub fn sigmoid_bce<T: Scalar>(logits: &Tensor5<T>, target: &Tensor5<T>, eps: f64, reduction: Reduction) -> Result<(f64, Tensor5<T>)> {
    check(logits, target, eps)?;
    let k = scale(reduction, logits.len());
    let mut loss = 0.0;
    let mut grad = Tensor5::zeros(logits.dims());
    for ((g, &z), &d) in grad.data_mut().iter_mut().zip(logits.data()).zip(target.data()) {
        let p = sigmoid(z.to_f64().unwrap_or(f64::NAN));
        let d = d.to_f64().unwrap_or(f64::NAN);
        let pc = p.clamp(eps, 1.0 - eps);
        loss -= d * pc.ln() + (1.0 - d) * (1.0 - pc).ln();
        if p > eps && p < 1.0 - eps {
            *g = T::lit(k * (p - d));
        }
    }
    Ok((k * loss, grad))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn half_everywhere_costs_ln2_per_cell() {
        let p = Tensor5::<f64>::filled([2, 3, 2, 4, 5], 0.5);
        let (l, _) = bce_loss(&p, &p, 1e-7, Reduction::Sum).unwrap();
        assert!((l - 240.0 * 2f64.ln()).abs() < 1e-9);
        let (l, _) = bce_loss(&p, &p, 1e-7, Reduction::Mean).unwrap();
        assert!((l - 2f64.ln()).abs() < 1e-12);
    }

    #[test]
    fn perfect_prediction_limit() {
        let eps = 1e-7;
        let mut d = Tensor5::<f64>::zeros([1, 1, 1, 4, 4]);
        let mut p = Tensor5::<f64>::filled([1, 1, 1, 4, 4], eps);
        d.data_mut()[5] = 1.0;
        p.data_mut()[5] = 1.0 - eps;
        let (l, _) = bce_loss(&p, &d, eps, Reduction::Sum).unwrap();
        let expect = -16.0 * (1.0 - eps).ln();
        assert!((l - expect).abs() < 1e-12 && l < 2e-6);
    }

    #[test]
    fn sigmoid_is_stable() {
        assert_eq!(sigmoid(0.0f64), 0.5);
        assert!(sigmoid(-800.0f64) >= 0.0 && sigmoid(800.0f64) <= 1.0);
        assert_eq!(sigmoid_clamped(50.0f32, 1e-7), 1.0 - 1e-7);
        assert!(sigmoid_clamped(50.0f32, 1e-7) < 1.0);
    }

    #[test]
    fn shape_and_eps_are_checked() {
        let a = Tensor5::<f64>::zeros([1, 1, 1, 2, 2]);
        let b = Tensor5::<f64>::zeros([1, 1, 1, 2, 3]);
        assert!(bce_loss(&a, &b, 1e-7, Reduction::Sum).is_err());
        assert!(bce_loss(&a, &a, 0.1, Reduction::Sum).is_err());
    }
}
