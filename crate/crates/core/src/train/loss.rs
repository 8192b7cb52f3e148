use crate::kernel::{sigmoid, softplus};
use crate::model::Prediction;

/// Binary cross-entropy of a prediction against a 0/1 label, evaluated from
/// the logit as `y·softplus(−z) + (1−y)·softplus(z)`.
pub fn bce_loss(pred: Prediction, label: f64) -> f64 {
    bce_from_logit(pred.logit, label)
}

pub fn bce_from_logit(logit: f64, label: f64) -> f64 {
    label * softplus(-logit) + (1.0 - label) * softplus(logit)
}

/// Derivative of the loss w.r.t. the logit: `ŷ − y`.
pub fn bce_grad_logit(probability: f64, label: f64) -> f64 {
    probability - label
}

pub(crate) fn bce_grad_from_logit(logit: f64, label: f64) -> f64 {
    bce_grad_logit(sigmoid(logit), label)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::seeded;
    use rand::Rng;

    #[test]
    fn half_probability_costs_ln2() {
        let p = Prediction::from_logit(0.0);
        assert!((bce_loss(p, 1.0) - std::f64::consts::LN_2).abs() < 1e-15);
        assert!((bce_loss(p, 0.0) - std::f64::consts::LN_2).abs() < 1e-15);
    }

    #[test]
    fn saturation_is_finite() {
        let l = bce_loss(Prediction::from_logit(40.0), 1.0);
        assert!(l.is_finite() && l < 1e-15);
        let l = bce_loss(Prediction::from_logit(-800.0), 1.0);
        assert!((l - 800.0).abs() < 1e-9);
    }

    #[test]
    fn gradient_values() {
        assert_eq!(bce_grad_logit(0.3, 0.3), 0.0);
        assert_eq!(bce_grad_logit(0.5, 1.0), -0.5);
    }

    // Direct evaluation of −[y ln ŷ + (1−y) ln(1−ŷ)] where ŷ and 1−ŷ are
    // formed separately as 1/(1+e^−z) and e^−z/(1+e^−z), using ln_1p to keep
    // the small-argument digits. Accurate to a few ulps for |z| ≤ 30.
    fn direct(z: f64, y: f64) -> f64 {
        let e = (-z).exp();
        let log_p = -e.ln_1p();
        let log_q = -z - e.ln_1p();
        -(y * log_p + (1.0 - y) * log_q)
    }

    #[test]
    fn matches_direct_evaluation() {
        let mut rng = seeded(5);
        for _ in 0..10_000 {
            let z: f64 = rng.random_range(-30.0..30.0);
            let y = if rng.random::<bool>() { 1.0 } else { 0.0 };
            let a = bce_from_logit(z, y);
            let b = direct(z, y);
            assert!((a - b).abs() <= 1e-12, "z={z} y={y}: {a} vs {b}");
        }
    }

    #[test]
    fn gradient_matches_finite_difference() {
        let mut rng = seeded(6);
        for _ in 0..1000 {
            let z: f64 = rng.random_range(-10.0..10.0);
            let y = if rng.random::<bool>() { 1.0 } else { 0.0 };
            let h = 1e-6;
            let fd = (bce_from_logit(z + h, y) - bce_from_logit(z - h, y)) / (2.0 * h);
            assert!((fd - bce_grad_from_logit(z, y)).abs() <= 1e-6);
        }
    }
}
