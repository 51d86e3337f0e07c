// SPDX-License-Identifier: Apache-2.0

use serde::{Deserialize, Serialize};

use super::DistillError;
use crate::scalar::Scalar;

/// Raw class scores of a teacher or student.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound(deserialize = "T: Scalar"))]
pub struct LogitVector<T> {
    values: Vec<T>,
}

impl<T: Scalar> LogitVector<T> {
    pub fn new(values: Vec<T>) -> Result<Self, DistillError> {
        if values.is_empty() {
            return Err(DistillError::InvalidParam("logit vector is empty".into()));
        }
        if let Some(v) = values.iter().find(|v| !v.is_finite()) {
            return Err(DistillError::InvalidParam(format!("non-finite logit {v}")));
        }
        Ok(Self { values })
    }

    pub fn values(&self) -> &[T] {
        &self.values
    }

    pub fn class_count(&self) -> usize {
        self.values.len()
    }
}

fn same_len(a: usize, b: usize) -> Result<(), DistillError> {
    if a == b {
        Ok(())
    } else {
        Err(DistillError::DimMismatch { left: a, right: b })
    }
}

fn check_tau<T: Scalar>(tau: T) -> Result<(), DistillError> {
    if tau.is_finite() && tau > T::zero() {
        Ok(())
    } else {
        Err(DistillError::InvalidParam(format!("temperature {tau} must be positive")))
    }
}

/// `x_i - log Σ exp(x_j)`, shifted by the max for stability.
pub fn log_softmax<T: Scalar>(x: &[T]) -> Vec<T> {
    let m = x.iter().copied().fold(T::neg_infinity(), T::max);
    let lse = m + x.iter().map(|&v| (v - m).exp()).sum::<T>().ln();
    x.iter().map(|&v| v - lse).collect()
}

pub fn softmax<T: Scalar>(x: &[T]) -> Vec<T> {
    log_softmax(x).into_iter().map(T::exp).collect()
}

/// `σ(x / τ)`.
pub fn softened<T: Scalar>(x: &LogitVector<T>, tau: T) -> Result<Vec<T>, DistillError> {
    check_tau(tau)?;
    Ok(softmax(&x.values.iter().map(|&v| v / tau).collect::<Vec<_>>()))
}

/// `-Σ y_i log σ(x)_i`; `labels` is a (possibly soft) target distribution.
pub fn cross_entropy<T: Scalar>(labels: &[T], logits: &LogitVector<T>) -> Result<T, DistillError> {
    same_len(labels.len(), logits.class_count())?;
    let ls = log_softmax(&logits.values);
    Ok(-labels.iter().zip(&ls).map(|(&y, &l)| if y == T::zero() { T::zero() } else { y * l }).sum::<T>())
}

/// Gradient of [`cross_entropy`] with respect to the logits, for labels summing to one.
pub fn cross_entropy_grad<T: Scalar>(labels: &[T], logits: &LogitVector<T>) -> Result<Vec<T>, DistillError> {
    same_len(labels.len(), logits.class_count())?;
    Ok(softmax(&logits.values).into_iter().zip(labels).map(|(p, &y)| p - y).collect())
}

/// `τ² · KL(σ(x_t/τ) ‖ σ(x_s/τ))`.
pub fn kd_loss<T: Scalar>(teacher: &LogitVector<T>, student: &LogitVector<T>, tau: T) -> Result<T, DistillError> {
    same_len(teacher.class_count(), student.class_count())?;
    check_tau(tau)?;
    let scale = |x: &LogitVector<T>| log_softmax(&x.values.iter().map(|&v| v / tau).collect::<Vec<_>>());
    let (lt, ls) = (scale(teacher), scale(student));
    let kl: T = lt.iter().zip(&ls).map(|(&a, &b)| a.exp() * (a - b)).sum();
    Ok(tau * tau * kl.max(T::zero()))
}

/// `∂ kd_loss / ∂ x_s = τ · (σ(x_s/τ) - σ(x_t/τ))`.
pub fn kd_grad<T: Scalar>(teacher: &LogitVector<T>, student: &LogitVector<T>, tau: T) -> Result<Vec<T>, DistillError> {
    same_len(teacher.class_count(), student.class_count())?;
    let (pt, ps) = (softened(teacher, tau)?, softened(student, tau)?);
    Ok(ps.iter().zip(&pt).map(|(&s, &t)| tau * (s - t)).collect())
}

/// `λ·L_GT + (1 - λ)·L_KD`.
pub fn total_loss<T: Scalar>(l_gt: T, l_kd: T, lambda: T) -> T {
    lambda * l_gt + (T::one() - lambda) * l_kd
}

/// Per-stage term of the global objective, `L_GT + L_total`, summed literally even though
/// `L_total` already contains `λ·L_GT`.
pub fn stage_objective<T: Scalar>(l_gt: T, l_total: T) -> T {
    l_gt + l_total
}

/// `α_0 · γ^t`.
pub fn lr_decay<T: Scalar>(alpha0: T, gamma: T, t: u32) -> T {
    alpha0 * gamma.powi(t as i32)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn lv(v: &[f64]) -> LogitVector<f64> {
        LogitVector::new(v.to_vec()).unwrap()
    }

    #[test]
    fn confident_correct_prediction_has_near_zero_loss() {
        let l = cross_entropy(&[0.0, 1.0, 0.0], &lv(&[0.0, 60.0, 0.0])).unwrap();
        assert!((0.0..1e-20).contains(&l));
    }

    #[test]
    fn uniform_logits_give_log_c() {
        for c in 2..12 {
            let mut y = vec![0.0; c];
            y[c / 2] = 1.0;
            let l = cross_entropy(&y, &lv(&vec![0.7; c])).unwrap();
            assert!((l - (c as f64).ln()).abs() < 1e-12);
        }
    }

    #[test]
    fn three_class_kd_against_hand_sum() {
        let (t, s, tau) = (lv(&[1.0, 0.0, 0.0]), lv(&[0.0, 0.0, 1.0]), 2.0);
        let e = [0.5f64.exp(), 1.0, 1.0];
        let z: f64 = e.iter().sum();
        let pt: Vec<f64> = e.iter().map(|v| v / z).collect();
        let ps: Vec<f64> = [1.0, 1.0, 0.5f64.exp()].iter().map(|v| v / z).collect();
        let kl: f64 = (0..3).map(|i| pt[i] * (pt[i] / ps[i]).ln()).sum();
        assert_relative_eq!(kd_loss(&t, &s, tau).unwrap(), 4.0 * kl, max_relative = 1e-12);
    }

    #[test]
    fn kd_of_identical_logits_is_zero() {
        let x = lv(&[0.3, -1.2, 2.0, 0.0]);
        assert_eq!(kd_loss(&x, &x, 4.0).unwrap(), 0.0);
    }

    #[test]
    fn huge_temperature_flattens_everything() {
        let (t, s, tau) = (lv(&[5.0, -3.0, 0.0]), lv(&[-4.0, 9.0, 1.0]), 1e6);
        for p in [softened(&t, tau).unwrap(), softened(&s, tau).unwrap()] {
            assert!(p.iter().all(|&v| (v - 1.0 / 3.0).abs() < 1e-5));
        }
        // the divergence itself vanishes; the τ² factor keeps the scaled loss bounded instead,
        // tending to the variance of (x_s - x_t) over classes, halved
        let kl = kd_loss(&t, &s, tau).unwrap() / (tau * tau);
        assert!(kl < 1e-6);
        let d = [-9.0, 12.0, 1.0];
        let mean = d.iter().sum::<f64>() / 3.0;
        let limit = d.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / 6.0;
        assert_relative_eq!(kd_loss(&t, &s, 1e5).unwrap(), limit, max_relative = 1e-2);
    }

    #[test]
    fn errors() {
        assert!(matches!(kd_loss(&lv(&[1.0]), &lv(&[1.0, 2.0]), 1.0), Err(DistillError::DimMismatch { .. })));
        assert!(matches!(cross_entropy(&[1.0], &lv(&[1.0, 2.0])), Err(DistillError::DimMismatch { .. })));
        assert!(kd_loss(&lv(&[1.0]), &lv(&[1.0]), 0.0).is_err());
        assert!(LogitVector::new(vec![f64::NAN]).is_err());
        assert!(LogitVector::<f64>::new(vec![]).is_err());
    }

    #[test]
    fn total_loss_examples() {
        assert_eq!(total_loss(2.0, 4.0, 1.0), 2.0);
        assert_eq!(total_loss(2.0, 4.0, 0.0), 4.0);
        assert_eq!(total_loss(2.0, 4.0, 0.5), 3.0);
        assert_eq!(stage_objective(2.0, 3.0), 5.0);
    }

    #[test]
    fn lr_decay_examples() {
        assert_eq!(lr_decay(0.1, 0.5, 0), 0.1);
        assert_relative_eq!(lr_decay(0.1, 0.5, 3), 0.0125);
        let seq: Vec<f64> = (0..10).map(|t| lr_decay(0.1, 0.9, t)).collect();
        assert!(seq.windows(2).all(|w| w[1] < w[0]));
    }

    #[test]
    fn cross_entropy_gradient_matches_differences() {
        let y = [0.0, 0.0, 1.0, 0.0];
        let x = [0.2, -0.4, 1.1, 0.5];
        let g = cross_entropy_grad(&y, &lv(&x)).unwrap();
        let h = 1e-6;
        for i in 0..4 {
            let (mut a, mut b) = (x, x);
            a[i] += h;
            b[i] -= h;
            let fd = (cross_entropy(&y, &lv(&a)).unwrap() - cross_entropy(&y, &lv(&b)).unwrap()) / (2.0 * h);
            assert!((fd - g[i]).abs() < 1e-8);
        }
    }

    #[test]
    fn f32_losses() {
        let t = LogitVector::new(vec![1.0f32, 0.0, 0.0]).unwrap();
        let s = LogitVector::new(vec![0.0f32, 0.0, 1.0]).unwrap();
        assert!(kd_loss(&t, &s, 2.0f32).unwrap() > 0.0);
        let y = [0.0f32, 1.0, 0.0];
        assert!((cross_entropy(&y, &LogitVector::new(vec![0.0f32; 3]).unwrap()).unwrap() - 3f32.ln()).abs() < 1e-6);
    }
}
