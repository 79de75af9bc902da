// SPDX-License-Identifier: Apache-2.0

//! Run configuration. Every key is optional; missing keys take the
//! published defaults.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};
use wse_core::dataset::{StandardizationParams, DEFAULT_RANGE_THRESHOLD_M, PATCH_SIDE};
use wse_core::metrics::DEFAULT_UCE_BINS;
use wse_core::pipeline::{
    BandBasis, EvalOptions, UncertaintySource, WaterEdgeOptions, EDGE_SD_WINDOW, EDGE_STEP_M, PREDICTION_SD_WINDOW,
};
use wse_core::smoothing::{EwmaForm, FilterParams};

use crate::error::CliError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub filter_span: usize,
    pub filter_max_dev_m: f64,
    pub filter_iterations: usize,
    pub ewma_form: EwmaForm,
    pub edge_step_m: f64,
    pub edge_sd_window: usize,
    pub prediction_sd_window: usize,
    pub band_basis: BandBasis,
    pub uncertainty_source: UncertaintySource,
    pub truth_degree: usize,
    pub truth_breakpoints_m: Vec<f64>,
    pub sigma_dsm_m: f64,
    pub dsm_denominator_factor: f64,
    pub mu_ort: f64,
    pub sigma_ort: f64,
    pub uce_bins: usize,
    pub range_threshold_m: f64,
    pub patch_side_m: f64,
    pub patch_px: usize,
}

impl Default for RunConfig {
    fn default() -> Self {
        let f = FilterParams::default();
        let s = StandardizationParams::default();
        RunConfig {
            filter_span: f.span,
            filter_max_dev_m: f.max_dev,
            filter_iterations: f.iterations,
            ewma_form: f.form,
            edge_step_m: EDGE_STEP_M,
            edge_sd_window: EDGE_SD_WINDOW,
            prediction_sd_window: PREDICTION_SD_WINDOW,
            band_basis: BandBasis::Values,
            uncertainty_source: UncertaintySource::Fbewmsd,
            truth_degree: 3,
            truth_breakpoints_m: Vec::new(),
            sigma_dsm_m: s.sigma_dsm,
            dsm_denominator_factor: s.dsm_denominator_factor,
            mu_ort: s.mu_ort,
            sigma_ort: s.sigma_ort,
            uce_bins: DEFAULT_UCE_BINS,
            range_threshold_m: DEFAULT_RANGE_THRESHOLD_M,
            patch_side_m: 10.0,
            patch_px: PATCH_SIDE,
        }
    }
}

impl RunConfig {
    /// Defaults when `path` is `None`, otherwise the file merged over them.
    pub fn load(path: Option<&Path>) -> Result<Self, CliError> {
        let Some(path) = path else {
            return Ok(RunConfig::default());
        };
        let text = fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
        let cfg: RunConfig = serde_json::from_str(&text)
            .map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<(), CliError> {
        let bad = |key: &str, why: &str| Err(CliError::Config(format!("`{key}` {why}")));
        self.filter_params()
            .validate()
            .map_err(|e| CliError::Config(e.to_string()))?;
        self.standardization()
            .validate()
            .map_err(|e| CliError::Config(e.to_string()))?;
        if !(self.edge_step_m.is_finite() && self.edge_step_m > 0.0) {
            return bad("edge_step_m", "must be positive");
        }
        if self.edge_sd_window == 0 {
            return bad("edge_sd_window", "must be at least 1");
        }
        if self.prediction_sd_window == 0 {
            return bad("prediction_sd_window", "must be at least 1");
        }
        if self.uce_bins == 0 {
            return bad("uce_bins", "must be at least 1");
        }
        if self.truth_breakpoints_m.windows(2).any(|w| w[1] <= w[0])
            || self.truth_breakpoints_m.iter().any(|b| !b.is_finite())
        {
            return bad("truth_breakpoints_m", "must be finite and strictly increasing");
        }
        if !(self.range_threshold_m.is_finite() && self.range_threshold_m > 0.0) {
            return bad("range_threshold_m", "must be positive");
        }
        if !(self.patch_side_m.is_finite() && self.patch_side_m > 0.0) {
            return bad("patch_side_m", "must be positive");
        }
        if self.patch_px != PATCH_SIDE {
            return bad("patch_px", &format!("must be {PATCH_SIDE}, the sample array size"));
        }
        Ok(())
    }

    pub fn filter_params(&self) -> FilterParams {
        FilterParams {
            span: self.filter_span,
            max_dev: self.filter_max_dev_m,
            iterations: self.filter_iterations,
            form: self.ewma_form,
        }
    }

    pub fn standardization(&self) -> StandardizationParams {
        StandardizationParams {
            sigma_dsm: self.sigma_dsm_m,
            dsm_denominator_factor: self.dsm_denominator_factor,
            mu_ort: self.mu_ort,
            sigma_ort: self.sigma_ort,
        }
    }

    pub fn water_edge_options(&self) -> WaterEdgeOptions {
        WaterEdgeOptions {
            filter: self.filter_params(),
            step: self.edge_step_m,
            sd_window: self.edge_sd_window,
            band_basis: self.band_basis,
        }
    }

    /// Evaluation settings with the given moving-window span.
    pub fn eval_options(&self, sd_window: usize) -> EvalOptions {
        EvalOptions {
            sd_window,
            n_bins: self.uce_bins,
            form: self.ewma_form,
            band_basis: self.band_basis,
            uncertainty_source: self.uncertainty_source,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_object_is_default() {
        let cfg: RunConfig = serde_json::from_str("{}").unwrap();
        assert_eq!(cfg, RunConfig::default());
        assert_eq!(cfg.filter_span, 50);
        assert_eq!(cfg.filter_max_dev_m, 0.1);
        assert_eq!(cfg.filter_iterations, 3);
        assert_eq!(cfg.edge_sd_window, 300);
        assert_eq!(cfg.prediction_sd_window, 10);
        assert_eq!(cfg.sigma_dsm_m, 1.197);
        assert_eq!(cfg.range_threshold_m, 4.5);
    }

    #[test]
    fn unknown_key_is_named() {
        let err = serde_json::from_str::<RunConfig>(r#"{"filter_spam": 3}"#).unwrap_err();
        assert!(err.to_string().contains("filter_spam"));
    }

    #[test]
    fn invalid_values_rejected() {
        let cfg = RunConfig {
            filter_span: 0,
            ..RunConfig::default()
        };
        assert!(cfg.validate().is_err());
        let cfg = RunConfig {
            truth_breakpoints_m: vec![5.0, 5.0],
            ..RunConfig::default()
        };
        assert!(cfg.validate().is_err());
    }
}
