// SPDX-License-Identifier: Apache-2.0

//! Accuracy and uncertainty-calibration metrics.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Factor converting a UCE computed in m² into one computed in cm².
pub const UCE_CM_SCALE: f64 = 1e4;

/// Default number of equal-width uncertainty bins for [`uce`].
pub const DEFAULT_UCE_BINS: usize = 10;

/// A predicted and a true WSE at one chainage, optionally with a predicted
/// standard deviation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EvalPair {
    pub chainage: f64,
    pub truth: f64,
    pub pred: f64,
    pub uncertainty: Option<f64>,
}

impl EvalPair {
    pub fn new(chainage: f64, truth: f64, pred: f64, uncertainty: Option<f64>) -> Result<Self> {
        if !(chainage.is_finite() && truth.is_finite() && pred.is_finite()) {
            return Err(Error::InvalidArgument("non-finite evaluation pair".into()));
        }
        if let Some(u) = uncertainty {
            if !(u.is_finite() && u >= 0.0) {
                return Err(Error::InvalidArgument(format!("uncertainty must be >= 0, got {u}")));
            }
        }
        Ok(EvalPair {
            chainage,
            truth,
            pred,
            uncertainty,
        })
    }

    pub fn error(&self) -> f64 {
        self.truth - self.pred
    }
}

/// Root mean squared error of `pred` against `truth`.
pub fn rmse(pairs: &[EvalPair]) -> Result<f64> {
    if pairs.is_empty() {
        return Err(Error::InsufficientData("RMSE of an empty set".into()));
    }
    let ss: f64 = pairs.iter().map(|p| p.error().powi(2)).sum();
    Ok((ss / pairs.len() as f64).sqrt())
}

fn uncertainties(pairs: &[EvalPair]) -> Result<Vec<f64>> {
    if pairs.is_empty() {
        return Err(Error::InsufficientData("no evaluation pairs".into()));
    }
    pairs
        .iter()
        .enumerate()
        .map(|(i, p)| {
            p.uncertainty
                .ok_or_else(|| Error::IncompleteData(format!("pair {i} carries no uncertainty")))
        })
        .collect()
}

pub fn mean_uncertainty(pairs: &[EvalPair]) -> Result<f64> {
    let u = uncertainties(pairs)?;
    Ok(u.iter().sum::<f64>() / u.len() as f64)
}

/// Uncertainty calibration error.
///
/// Pairs are binned by predicted σ into `n_bins` equal-width bins spanning
/// `[min σ, max σ]`. Each bin contributes `|B|/N · |MSE(B) − mean σ²(B)|`;
/// empty bins contribute nothing. The result is in squared units of the
/// inputs (m² for WSE in meters).
pub fn uce(pairs: &[EvalPair], n_bins: usize) -> Result<f64> {
    if n_bins == 0 {
        return Err(Error::InvalidArgument("n_bins must be at least 1".into()));
    }
    let sigma = uncertainties(pairs)?;
    let lo = sigma.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = sigma.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let width = (hi - lo) / n_bins as f64;

    let mut count = vec![0usize; n_bins];
    let mut sq_err = vec![0.0; n_bins];
    let mut var = vec![0.0; n_bins];
    for (p, &s) in pairs.iter().zip(&sigma) {
        let b = if width > 0.0 {
            (((s - lo) / width) as usize).min(n_bins - 1)
        } else {
            0
        };
        count[b] += 1;
        sq_err[b] += p.error().powi(2);
        var[b] += s * s;
    }
    let n = pairs.len() as f64;
    Ok((0..n_bins)
        .filter(|&b| count[b] > 0)
        .map(|b| {
            let c = count[b] as f64;
            (c / n) * (sq_err[b] / c - var[b] / c).abs()
        })
        .sum())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn pair(truth: f64, pred: f64, u: Option<f64>) -> EvalPair {
        EvalPair::new(0.0, truth, pred, u).unwrap()
    }

    #[test]
    fn rmse_examples() {
        assert_eq!(rmse(&[pair(1.0, 1.0, None), pair(2.0, 2.0, None)]).unwrap(), 0.0);
        assert!((rmse(&[pair(100.03, 100.0, None)]).unwrap() - 0.03).abs() < 1e-12);
        assert!(matches!(rmse(&[]), Err(Error::InsufficientData(_))));
    }

    #[test]
    fn mean_uncertainty_examples() {
        let u = [pair(0.0, 0.0, Some(0.05)); 4];
        assert!((mean_uncertainty(&u).unwrap() - 0.05).abs() < 1e-15);
        let u = [pair(0.0, 0.0, Some(0.02)), pair(0.0, 0.0, Some(0.04))];
        assert!((mean_uncertainty(&u).unwrap() - 0.03).abs() < 1e-15);
        let missing = [pair(0.0, 0.0, Some(0.02)), pair(0.0, 0.0, None)];
        assert!(matches!(mean_uncertainty(&missing), Err(Error::IncompleteData(_))));
    }

    #[test]
    fn uce_single_bin_arithmetic() {
        let pairs = [pair(5.0, 5.0, Some(0.1)); 6];
        assert!((uce(&pairs, 1).unwrap() - 0.01).abs() < 1e-15);
        // constant sigma with many bins collapses into the first bin
        assert!((uce(&pairs, 10).unwrap() - 0.01).abs() < 1e-15);
    }

    #[test]
    fn uce_zero_when_calibrated() {
        // each pair's |error| equals its sigma, so every bin matches exactly
        let pairs: Vec<EvalPair> = (0..50)
            .map(|i| {
                let s = 0.01 + 0.002 * i as f64;
                let sign = if i % 2 == 0 { 1.0 } else { -1.0 };
                pair(100.0 + sign * s, 100.0, Some(s))
            })
            .collect();
        assert!(uce(&pairs, 10).unwrap() <= 1e-12);
    }

    #[test]
    fn uce_rejects_zero_bins_and_missing() {
        assert!(uce(&[pair(0.0, 0.0, Some(0.1))], 0).is_err());
        assert!(matches!(uce(&[pair(0.0, 0.0, None)], 3), Err(Error::IncompleteData(_))));
    }

    #[test]
    fn eval_pair_validation() {
        assert!(EvalPair::new(0.0, 1.0, 1.0, Some(-0.1)).is_err());
        assert!(EvalPair::new(0.0, f64::NAN, 1.0, None).is_err());
    }
}
