// SPDX-License-Identifier: Apache-2.0

//! Affine power model over active DSP, LUT, and BRAM counts, fitted to measurements.

use std::io::Read;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use super::MorphError;
use crate::costmodel::CostEstimate;
use crate::scalar::Scalar;

/// One measured design point; the CSV columns are `dsp,lut,bram,measured_mw`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PowerSample {
    pub dsp: u64,
    pub lut: u64,
    pub bram: u64,
    pub measured_mw: f64,
}

/// `power = base + coef_dsp·dsp + coef_lut·lut + coef_bram·bram`, clamped at zero.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound(deserialize = "T: Scalar"))]
pub struct PowerModel<T> {
    pub base_mw: T,
    pub coef_dsp: T,
    pub coef_lut: T,
    pub coef_bram: T,
    /// RMS of the training residuals.
    pub fit_residual: T,
}

impl<T: Scalar> PowerModel<T> {
    pub fn predict_raw(&self, dsp: u64, lut: u64, bram: u64) -> T {
        self.base_mw
            + self.coef_dsp * T::of_u64(dsp)
            + self.coef_lut * T::of_u64(lut)
            + self.coef_bram * T::of_u64(bram)
    }

    pub fn predict(&self, dsp: u64, lut: u64, bram: u64) -> T {
        self.predict_raw(dsp, lut, bram).max(T::zero())
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("power model serializes")
    }

    pub fn from_json(text: &str) -> Result<Self, MorphError> {
        serde_json::from_str(text).map_err(|e| MorphError::Io(e.to_string()))
    }
}

/// Least-squares affine fit; columns are scaled to unit max before the SVD solve.
pub fn fit_power_model<T: Scalar>(samples: &[PowerSample]) -> Result<PowerModel<T>, MorphError> {
    if samples.len() < 4 {
        return Err(MorphError::DegenerateFit(format!("{} samples; at least 4 are needed", samples.len())));
    }
    let cols: [Vec<f64>; 3] = [
        samples.iter().map(|s| s.dsp as f64).collect(),
        samples.iter().map(|s| s.lut as f64).collect(),
        samples.iter().map(|s| s.bram as f64).collect(),
    ];
    let scale: Vec<f64> = cols.iter().map(|c| c.iter().fold(0.0f64, |m, v| m.max(v.abs())).max(1.0)).collect();
    let n = samples.len();
    let a = DMatrix::from_fn(n, 4, |r, c| if c == 0 { 1.0 } else { cols[c - 1][r] / scale[c - 1] });
    let b = DVector::from_iterator(n, samples.iter().map(|s| s.measured_mw));

    let svd = a.clone().svd(true, true);
    let sv = &svd.singular_values;
    let (hi, lo) = (sv.max(), sv.min());
    if lo.is_nan() || lo <= hi * 1e-10 {
        return Err(MorphError::DegenerateFit(format!("design matrix is rank deficient (singular values {sv:?})")));
    }
    let x = svd.solve(&b, 0.0).map_err(|e| MorphError::DegenerateFit(e.to_string()))?;
    let resid = &a * &x - &b;
    let rms = (resid.norm_squared() / n as f64).sqrt();
    Ok(PowerModel {
        base_mw: T::of(x[0]),
        coef_dsp: T::of(x[1] / scale[0]),
        coef_lut: T::of(x[2] / scale[1]),
        coef_bram: T::of(x[3] / scale[2]),
        fit_residual: T::of(rms),
    })
}

/// Attaches the model's prediction for the estimate's active resources.
pub fn predict_power<T: Scalar>(model: &PowerModel<T>, est: &CostEstimate<T>) -> CostEstimate<T> {
    CostEstimate { power_mw: Some(model.predict(est.dsp, est.lut, est.bram)), ..est.clone() }
}

pub fn read_calibration_csv<R: Read>(input: R) -> Result<Vec<PowerSample>, MorphError> {
    csv::Reader::from_reader(input)
        .deserialize()
        .collect::<Result<Vec<PowerSample>, _>>()
        .map_err(|e| MorphError::Io(e.to_string()))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn mnist() -> Vec<PowerSample> {
        read_calibration_csv(include_str!("../../data/calibration/mnist_power.csv").as_bytes()).unwrap()
    }

    #[test]
    fn calibration_file_has_four_rows() {
        let s = mnist();
        assert_eq!(s.iter().map(|r| r.dsp).collect::<Vec<_>>(), vec![1556, 485, 179, 35]);
    }

    #[test]
    fn constant_power_gives_flat_fit() {
        let s: Vec<PowerSample> = [(10, 100, 3), (50, 900, 4), (200, 300, 20), (90, 5000, 7), (5, 7, 1)]
            .iter()
            .map(|&(dsp, lut, bram)| PowerSample { dsp, lut, bram, measured_mw: 321.0 })
            .collect();
        let m = fit_power_model::<f64>(&s).unwrap();
        assert!((m.base_mw - 321.0).abs() < 1e-8);
        for c in [m.coef_dsp, m.coef_lut, m.coef_bram] {
            assert!(c.abs() < 1e-9);
        }
    }

    #[test]
    fn mnist_fit_reproduces_training_points() {
        let s = mnist();
        let m = fit_power_model::<f64>(&s).unwrap();
        for r in &s {
            let p = m.predict(r.dsp, r.lut, r.bram);
            assert!((p - r.measured_mw).abs() <= 2.0 * m.fit_residual + 1e-9);
        }
    }

    #[test]
    fn rank_deficient_inputs_are_rejected() {
        let same = PowerSample { dsp: 1, lut: 2, bram: 3, measured_mw: 4.0 };
        assert!(matches!(fit_power_model::<f64>(&[same; 6]), Err(MorphError::DegenerateFit(_))));
        assert!(matches!(fit_power_model::<f64>(&[same; 2]), Err(MorphError::DegenerateFit(_))));
    }

    #[test]
    fn negative_predictions_clamp_to_zero() {
        let m = PowerModel { base_mw: 10.0, coef_dsp: -1.0, coef_lut: 0.0, coef_bram: 0.0, fit_residual: 0.0 };
        assert_eq!(m.predict(1000, 0, 0), 0.0);
        assert_eq!(m.predict_raw(1000, 0, 0), -990.0);
    }

    #[test]
    fn f32_model() {
        let m = fit_power_model::<f32>(&mnist()).unwrap();
        assert!((m.predict(1556, 200560, 356) - 743.0).abs() < 0.5);
    }
}
