// SPDX-License-Identifier: Apache-2.0

//! End-to-end workflows: ground-truth profiles, the water-edge estimator,
//! evaluation of per-sample predictions and leave-one-subset-out planning.

use std::collections::{BTreeMap, HashSet};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linear_ref::Polyline;
use crate::metrics::{self, EvalPair, UCE_CM_SCALE};
use crate::numfmt::{fmt_sig, round_sig};
use crate::raster::{BoundingBox, Grid};
use crate::regress::{self, LinearFit, PiecewisePolyFit, Predict};
use crate::smoothing::{self, ChainageSeries, Ewm, EwmaForm, FilterParams};

/// Sampling interval used when averaging a profile over a centerline
/// segment, meters.
pub const TRUTH_STEP_M: f64 = 0.1;
pub const EDGE_STEP_M: f64 = 0.1;
pub const EDGE_SD_WINDOW: usize = 300;
pub const PREDICTION_SD_WINDOW: usize = 10;

// ---------------------------------------------------------------------------
// Ground truth

/// Piecewise polynomial profile through WSE point measurements and its
/// standard error of estimate.
pub fn ground_truth_build(
    points: &[(f64, f64)],
    degree: usize,
    breakpoints: &[f64],
) -> Result<(PiecewisePolyFit, f64)> {
    let fit = regress::poly_fit(points, degree, breakpoints)?;
    let s_e = regress::std_error_estimate(points, &fit)?;
    Ok((fit, s_e))
}

/// Mean of the profile along the part of `centerline` inside `square`.
///
/// The clipped chainage interval is densified every 0.1 m and averaged with
/// trapezoid weights, so the mean of a linear profile is its value at the
/// interval midpoint.
pub fn assign_truth(fit: &impl Predict, centerline: &Polyline, square: &BoundingBox) -> Result<f64> {
    let (lo, hi) = centerline.clip_chainage_range(square)?;
    Ok(segment_mean(fit, lo, hi, TRUTH_STEP_M))
}

fn segment_mean(fit: &impl Predict, lo: f64, hi: f64, step: f64) -> f64 {
    if hi <= lo {
        return fit.predict(lo);
    }
    let mut nodes: Vec<f64> = Vec::new();
    let mut k = 0usize;
    loop {
        let c = lo + k as f64 * step;
        if c >= hi - step * 1e-6 {
            break;
        }
        nodes.push(c);
        k += 1;
    }
    nodes.push(hi);
    let vals: Vec<f64> = nodes.iter().map(|&c| fit.predict(c)).collect();
    let integral: f64 = nodes
        .windows(2)
        .zip(vals.windows(2))
        .map(|(c, v)| 0.5 * (c[1] - c[0]) * (v[0] + v[1]))
        .sum();
    integral / (hi - lo)
}

// ---------------------------------------------------------------------------
// Uncertainty bands

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BandPoint {
    pub chainage: f64,
    pub center: f64,
    pub half_width: f64,
}

/// `fit(x) ± half_width(x)` sampled at the chainages of a series.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct UncertaintyBand {
    pub points: Vec<BandPoint>,
}

/// Which series the moving standard deviation is computed on.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BandBasis {
    /// The chainage-ordered values themselves.
    #[default]
    Values,
    /// Residuals of the values from the regression line.
    Residuals,
}

pub fn uncertainty_band(
    series: &ChainageSeries,
    fit: &LinearFit,
    window: usize,
    form: EwmaForm,
    basis: BandBasis,
) -> Result<UncertaintyBand> {
    let input = match basis {
        BandBasis::Values => series.clone(),
        BandBasis::Residuals => ChainageSeries::from_points(series.points().map(|(c, v)| (c, v - fit.predict(c))))?,
    };
    let sd = smoothing::fbewmsd(&input, Ewm::from_span(window, form)?)?;
    Ok(UncertaintyBand {
        points: series
            .chainage()
            .iter()
            .zip(sd.values())
            .map(|(&c, &h)| BandPoint {
                chainage: c,
                center: fit.predict(c),
                half_width: h,
            })
            .collect(),
    })
}

impl UncertaintyBand {
    /// Writes `chainage_m,center_m,half_width_m`.
    pub fn write_csv(&self, path: impl AsRef<Path>) -> Result<()> {
        let mut w = csv::Writer::from_path(path)?;
        w.write_record(["chainage_m", "center_m", "half_width_m"])?;
        for p in &self.points {
            w.write_record([fmt_sig(p.chainage), fmt_sig(p.center), fmt_sig(p.half_width)])?;
        }
        w.flush().map_err(csv::Error::from)?;
        Ok(())
    }
}

// ---------------------------------------------------------------------------
// Water-edge workflow

#[derive(Debug, Clone, PartialEq)]
pub struct WaterEdgeOptions {
    pub filter: FilterParams,
    pub step: f64,
    pub sd_window: usize,
    pub band_basis: BandBasis,
}

impl Default for WaterEdgeOptions {
    fn default() -> Self {
        WaterEdgeOptions {
            filter: FilterParams::default(),
            step: EDGE_STEP_M,
            sd_window: EDGE_SD_WINDOW,
            band_basis: BandBasis::Values,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct WaterEdgeResult {
    /// Every valid DSM reading along the edge line.
    pub raw: ChainageSeries,
    pub kept: ChainageSeries,
    pub removed: ChainageSeries,
    pub fit: LinearFit,
    pub band: UncertaintyBand,
    /// Readings dropped because a neighbouring DSM pixel was nodata.
    pub nodata_dropped: usize,
    /// World position of each raw reading, parallel to `raw`.
    pub positions: Vec<(f64, f64)>,
}

/// Reads the DSM along the water-edge line, removes FBEWMA outliers and fits
/// a straight line to the survivors.
pub fn water_edge_workflow(dsm: &Grid, edge: &Polyline, opts: &WaterEdgeOptions) -> Result<WaterEdgeResult> {
    let mut chain = Vec::new();
    let mut values = Vec::new();
    let mut positions = Vec::new();
    let mut nodata_dropped = 0usize;
    for p in edge.densify(opts.step)? {
        match dsm.sample_bilinear(p.x, p.y) {
            Ok(v) => {
                chain.push(p.chainage);
                values.push(v);
                positions.push((p.x, p.y));
            }
            Err(Error::Nodata { .. }) => nodata_dropped += 1,
            Err(e) => return Err(e),
        }
    }
    if values.is_empty() {
        return Err(Error::DegenerateSeries(
            "every reading along the edge line hit nodata".into(),
        ));
    }
    let raw = ChainageSeries::new(chain, values)?;
    let filtered = smoothing::reject_outliers(&raw, &opts.filter)?;
    let pts: Vec<(f64, f64)> = filtered.kept.points().collect();
    let fit = regress::ols_fit(&pts)?;
    let band = uncertainty_band(&filtered.kept, &fit, opts.sd_window, opts.filter.form, opts.band_basis)?;
    Ok(WaterEdgeResult {
        raw,
        kept: filtered.kept,
        removed: filtered.removed,
        fit,
        band,
        nodata_dropped,
        positions,
    })
}

// ---------------------------------------------------------------------------
// Fold planning

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Fold {
    pub validation_subset: String,
    pub training_subsets: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FoldPlan {
    pub folds: Vec<Fold>,
}

/// One fold per subset: that subset validates, the others train.
pub fn kfold_plan(subset_ids: &[String]) -> Result<FoldPlan> {
    let mut seen = HashSet::new();
    if let Some(dup) = subset_ids.iter().find(|id| !seen.insert(id.as_str())) {
        return Err(Error::InvalidArgument(format!("subset `{dup}` listed twice")));
    }
    if subset_ids.len() < 2 {
        return Err(Error::InsufficientSubsets(format!(
            "leave-one-subset-out needs at least 2 subsets, got {}",
            subset_ids.len()
        )));
    }
    Ok(FoldPlan {
        folds: subset_ids
            .iter()
            .map(|v| Fold {
                validation_subset: v.clone(),
                training_subsets: subset_ids.iter().filter(|t| *t != v).cloned().collect(),
            })
            .collect(),
    })
}

// ---------------------------------------------------------------------------
// Evaluation

/// One row of the predictions CSV.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Prediction {
    pub subset_id: String,
    pub sample_id: String,
    #[serde(rename = "chainage_m")]
    pub chainage: f64,
    #[serde(rename = "wse_pred_m")]
    pub wse_pred: f64,
    #[serde(rename = "uncertainty_m", default)]
    pub uncertainty: Option<f64>,
}

pub fn read_predictions_csv(path: impl AsRef<Path>) -> Result<Vec<Prediction>> {
    let path = path.as_ref();
    let mut rdr = csv::Reader::from_path(path)?;
    let headers = rdr.headers()?.clone();
    for required in ["subset_id", "sample_id", "chainage_m", "wse_pred_m"] {
        if !headers.iter().any(|h| h == required) {
            return Err(Error::Format {
                file: path.to_path_buf(),
                reason: format!("missing column `{required}`"),
            });
        }
    }
    rdr.deserialize::<Prediction>()
        .map(|r| r.map_err(Error::from))
        .collect()
}

pub fn write_predictions_csv(preds: &[Prediction], path: impl AsRef<Path>) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(["subset_id", "sample_id", "chainage_m", "wse_pred_m", "uncertainty_m"])?;
    for p in preds {
        w.write_record([
            p.subset_id.clone(),
            p.sample_id.clone(),
            fmt_sig(p.chainage),
            fmt_sig(p.wse_pred),
            p.uncertainty.map(fmt_sig).unwrap_or_default(),
        ])?;
    }
    w.flush().map_err(csv::Error::from)?;
    Ok(())
}

/// Where per-point uncertainties come from during evaluation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum UncertaintySource {
    /// Moving standard deviation of the prediction series.
    #[default]
    Fbewmsd,
    /// The `uncertainty_m` column of the predictions.
    Supplied,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EvalOptions {
    pub sd_window: usize,
    pub n_bins: usize,
    pub form: EwmaForm,
    pub band_basis: BandBasis,
    pub uncertainty_source: UncertaintySource,
}

impl Default for EvalOptions {
    fn default() -> Self {
        EvalOptions {
            sd_window: PREDICTION_SD_WINDOW,
            n_bins: metrics::DEFAULT_UCE_BINS,
            form: EwmaForm::Adjusted,
            band_basis: BandBasis::Values,
            uncertainty_source: UncertaintySource::Fbewmsd,
        }
    }
}

/// Accuracy and uncertainty summary for one subset.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SubsetReport {
    pub subset_id: String,
    pub rmse_points_m: f64,
    pub rmse_regression_m: f64,
    pub mean_uncertainty_m: f64,
    pub uce_native: f64,
    pub uce_cm_scaled: f64,
    pub n: usize,
    pub fit: LinearFit,
}

impl SubsetReport {
    /// Copy with every float rounded to nine significant digits.
    pub fn rounded(&self) -> SubsetReport {
        SubsetReport {
            subset_id: self.subset_id.clone(),
            rmse_points_m: round_sig(self.rmse_points_m),
            rmse_regression_m: round_sig(self.rmse_regression_m),
            mean_uncertainty_m: round_sig(self.mean_uncertainty_m),
            uce_native: round_sig(self.uce_native),
            uce_cm_scaled: round_sig(self.uce_cm_scaled),
            n: self.n,
            fit: LinearFit {
                slope: round_sig(self.fit.slope),
                intercept: round_sig(self.fit.intercept),
                n: self.fit.n,
            },
        }
    }
}

/// Report plus the series it was computed from, for plotting.
#[derive(Debug, Clone, PartialEq)]
pub struct SubsetEvaluation {
    pub report: SubsetReport,
    /// Raw estimates ordered by chainage.
    pub series: ChainageSeries,
    pub band: UncertaintyBand,
}

/// Scores a chainage-ordered series of WSE estimates against a truth profile.
///
/// `rmse_points` compares the raw estimates, `rmse_regression` the values of
/// the straight-line fit through them. Uncertainty is the band half-width
/// unless `supplied` carries per-point values.
pub fn evaluate_series(
    subset_id: &str,
    series: &ChainageSeries,
    truth: &impl Predict,
    supplied: Option<&[f64]>,
    opts: &EvalOptions,
) -> Result<SubsetEvaluation> {
    if series.len() < 2 {
        return Err(Error::InsufficientData(format!(
            "subset `{subset_id}` has {} estimates, need at least 2",
            series.len()
        )));
    }
    let pts: Vec<(f64, f64)> = series.points().collect();
    let fit = regress::ols_fit(&pts)?;
    let band = uncertainty_band(series, &fit, opts.sd_window, opts.form, opts.band_basis)?;
    let sigma: Vec<f64> = match supplied {
        Some(u) => u.to_vec(),
        None => band.points.iter().map(|b| b.half_width).collect(),
    };

    let mut point_pairs = Vec::with_capacity(pts.len());
    let mut reg_pairs = Vec::with_capacity(pts.len());
    for (&(c, v), &s) in pts.iter().zip(&sigma) {
        let t = truth.predict(c);
        point_pairs.push(EvalPair::new(c, t, v, None)?);
        reg_pairs.push(EvalPair::new(c, t, fit.predict(c), Some(s))?);
    }
    let uce_native = metrics::uce(&reg_pairs, opts.n_bins)?;
    Ok(SubsetEvaluation {
        report: SubsetReport {
            subset_id: subset_id.to_string(),
            rmse_points_m: metrics::rmse(&point_pairs)?,
            rmse_regression_m: metrics::rmse(&reg_pairs)?,
            mean_uncertainty_m: metrics::mean_uncertainty(&reg_pairs)?,
            uce_native,
            uce_cm_scaled: uce_native * UCE_CM_SCALE,
            n: pts.len(),
            fit,
        },
        series: series.clone(),
        band,
    })
}

/// Evaluates per-sample predictions subset by subset, in subset-id order.
///
/// Predictions are sorted by chainage internally; two predictions of one
/// subset at the same chainage are rejected.
pub fn evaluate_predictions<P: Predict>(
    preds: &[Prediction],
    truth: &BTreeMap<String, P>,
    opts: &EvalOptions,
) -> Result<Vec<SubsetEvaluation>> {
    let mut by_subset: BTreeMap<&str, Vec<&Prediction>> = BTreeMap::new();
    for p in preds {
        by_subset.entry(p.subset_id.as_str()).or_default().push(p);
    }
    let mut out = Vec::with_capacity(by_subset.len());
    for (id, mut rows) in by_subset {
        let profile = truth
            .get(id)
            .ok_or_else(|| Error::UnknownSubset(id.to_string()))?;
        rows.sort_by(|a, b| a.chainage.total_cmp(&b.chainage).then_with(|| a.sample_id.cmp(&b.sample_id)));
        if let Some(w) = rows.windows(2).find(|w| w[0].chainage == w[1].chainage) {
            return Err(Error::InvalidArgument(format!(
                "subset `{id}`: samples `{}` and `{}` share chainage {}",
                w[0].sample_id, w[1].sample_id, w[0].chainage
            )));
        }
        let series = ChainageSeries::from_points(rows.iter().map(|p| (p.chainage, p.wse_pred)))?;
        let supplied = match opts.uncertainty_source {
            UncertaintySource::Fbewmsd => None,
            UncertaintySource::Supplied => Some(
                rows.iter()
                    .map(|p| {
                        p.uncertainty.ok_or_else(|| {
                            Error::IncompleteData(format!(
                                "sample `{}` has no uncertainty_m value",
                                p.sample_id
                            ))
                        })
                    })
                    .collect::<Result<Vec<f64>>>()?,
            ),
        };
        out.push(evaluate_series(id, &series, profile, supplied.as_deref(), opts)?);
    }
    Ok(out)
}
