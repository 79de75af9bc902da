// SPDX-License-Identifier: Apache-2.0

//! Exponentially weighted moving statistics over chainage-ordered series.
//!
//! All filters run on sample index: gaps in chainage (for example after
//! outlier removal) do not change the weights. A window size is interpreted
//! as an EWMA span with `alpha = 2 / (span + 1)`.
//!
//! Two weighting forms are available:
//!
//! * [`EwmaForm::Adjusted`] (default): `y_t = Σ w_i x_{t-i} / Σ w_i` with
//!   `w_i = (1 - alpha)^i`, normalized over the finite history.
//! * [`EwmaForm::Recursive`]: `y_0 = x_0`, `y_t = alpha x_t + (1 - alpha) y_{t-1}`.
//!
//! Mean and variance are accumulated with a weighted Welford update so that
//! series at hundreds of meters MSL with millimetre spread keep full
//! precision.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numfmt::fmt_sig;

/// Ordered `(chainage, value)` samples with strictly increasing chainage.
#[derive(Debug, Clone, PartialEq)]
pub struct ChainageSeries {
    chainage: Vec<f64>,
    values: Vec<f64>,
}

impl ChainageSeries {
    pub fn new(chainage: Vec<f64>, values: Vec<f64>) -> Result<Self> {
        if chainage.len() != values.len() {
            return Err(Error::InvalidArgument(format!(
                "{} chainages but {} values",
                chainage.len(),
                values.len()
            )));
        }
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::InvalidArgument(format!("non-finite value at index {i}")));
        }
        if let Some(i) = chainage.iter().position(|c| !c.is_finite()) {
            return Err(Error::InvalidArgument(format!("non-finite chainage at index {i}")));
        }
        if let Some(i) = chainage.windows(2).position(|w| w[1] <= w[0]) {
            return Err(Error::InvalidArgument(format!(
                "chainage not strictly increasing at index {} ({} after {})",
                i + 1,
                chainage[i + 1],
                chainage[i]
            )));
        }
        Ok(ChainageSeries { chainage, values })
    }

    pub fn from_points(points: impl IntoIterator<Item = (f64, f64)>) -> Result<Self> {
        let (c, v) = points.into_iter().unzip();
        ChainageSeries::new(c, v)
    }

    pub fn empty() -> Self {
        ChainageSeries {
            chainage: Vec::new(),
            values: Vec::new(),
        }
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn chainage(&self) -> &[f64] {
        &self.chainage
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn points(&self) -> impl Iterator<Item = (f64, f64)> + '_ {
        self.chainage.iter().copied().zip(self.values.iter().copied())
    }

    /// Same chainages, new values. Lengths must agree.
    fn with_values(&self, values: Vec<f64>) -> ChainageSeries {
        debug_assert_eq!(values.len(), self.chainage.len());
        ChainageSeries {
            chainage: self.chainage.clone(),
            values,
        }
    }

    fn subset(&self, keep: impl Fn(usize) -> bool) -> ChainageSeries {
        let idx: Vec<usize> = (0..self.len()).filter(|&i| keep(i)).collect();
        ChainageSeries {
            chainage: idx.iter().map(|&i| self.chainage[i]).collect(),
            values: idx.iter().map(|&i| self.values[i]).collect(),
        }
    }

    /// Merges two series with disjoint chainages.
    pub fn merge(&self, other: &ChainageSeries) -> Result<ChainageSeries> {
        let mut pts: Vec<(f64, f64)> = self.points().chain(other.points()).collect();
        pts.sort_by(|a, b| a.0.total_cmp(&b.0));
        ChainageSeries::from_points(pts)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EwmaForm {
    #[default]
    Adjusted,
    Recursive,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Direction {
    Forward,
    Backward,
}

/// Smoothing factor and weighting form of an exponentially weighted filter.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Ewm {
    alpha: f64,
    form: EwmaForm,
}

impl Ewm {
    /// `alpha = 2 / (span + 1)`.
    pub fn from_span(span: usize, form: EwmaForm) -> Result<Self> {
        if span == 0 {
            return Err(Error::InvalidArgument("span must be at least 1".into()));
        }
        Ewm::from_alpha(2.0 / (span as f64 + 1.0), form)
    }

    pub fn from_alpha(alpha: f64, form: EwmaForm) -> Result<Self> {
        if !(alpha > 0.0 && alpha <= 1.0) {
            return Err(Error::InvalidArgument(format!("alpha must lie in (0, 1], got {alpha}")));
        }
        Ok(Ewm { alpha, form })
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn form(&self) -> EwmaForm {
        self.form
    }

    /// Running weighted mean and (population) variance, oldest sample first.
    fn running_moments(&self, xs: &[f64]) -> (Vec<f64>, Vec<f64>) {
        let decay = 1.0 - self.alpha;
        let new_weight = match self.form {
            EwmaForm::Adjusted => 1.0,
            EwmaForm::Recursive => self.alpha,
        };
        let mut means = Vec::with_capacity(xs.len());
        let mut vars = Vec::with_capacity(xs.len());
        let mut total_w = 0.0;
        let mut mean = 0.0;
        let mut m2 = 0.0;
        for (t, &x) in xs.iter().enumerate() {
            // the first sample carries the whole weight in both forms
            let w = if t == 0 { 1.0 } else { new_weight };
            let carried = decay * total_w;
            total_w = carried + w;
            let delta = x - mean;
            mean += delta * (w / total_w);
            // x - mean_new == delta * carried / total_w, without cancellation
            m2 = decay * m2 + w * delta * delta * (carried / total_w);
            means.push(mean);
            vars.push((m2 / total_w).max(0.0));
        }
        (means, vars)
    }

    fn directional<F>(&self, xs: &[f64], dir: Direction, pick: F) -> Vec<f64>
    where
        F: Fn((Vec<f64>, Vec<f64>)) -> Vec<f64>,
    {
        match dir {
            Direction::Forward => pick(self.running_moments(xs)),
            Direction::Backward => {
                let rev: Vec<f64> = xs.iter().rev().copied().collect();
                let mut out = pick(self.running_moments(&rev));
                out.reverse();
                out
            }
        }
    }
}

fn require_nonempty(series: &ChainageSeries) -> Result<()> {
    if series.is_empty() {
        return Err(Error::EmptyInput("series has no points".into()));
    }
    Ok(())
}

/// One-directional exponentially weighted moving average.
pub fn ewma(series: &ChainageSeries, ewm: Ewm, dir: Direction) -> Result<ChainageSeries> {
    require_nonempty(series)?;
    Ok(series.with_values(ewm.directional(series.values(), dir, |(m, _)| m)))
}

/// Pointwise mean of the forward and backward EWMA.
pub fn fbewma(series: &ChainageSeries, ewm: Ewm) -> Result<ChainageSeries> {
    require_nonempty(series)?;
    let f = ewm.directional(series.values(), Direction::Forward, |(m, _)| m);
    let b = ewm.directional(series.values(), Direction::Backward, |(m, _)| m);
    Ok(series.with_values(f.iter().zip(&b).map(|(f, b)| 0.5 * (f + b)).collect()))
}

/// Pointwise mean of the forward and backward exponentially weighted moving
/// standard deviations.
pub fn fbewmsd(series: &ChainageSeries, ewm: Ewm) -> Result<ChainageSeries> {
    if series.len() < 2 {
        return Err(Error::InsufficientData(format!(
            "moving standard deviation needs at least 2 points, got {}",
            series.len()
        )));
    }
    let f = ewm.directional(series.values(), Direction::Forward, |(_, v)| v);
    let b = ewm.directional(series.values(), Direction::Backward, |(_, v)| v);
    Ok(series.with_values(
        f.iter()
            .zip(&b)
            .map(|(f, b)| 0.5 * (f.sqrt() + b.sqrt()))
            .collect(),
    ))
}

/// Parameters of the iterative FBEWMA outlier filter.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FilterParams {
    pub span: usize,
    /// Largest tolerated |value - fbewma|, meters.
    pub max_dev: f64,
    pub iterations: usize,
    #[serde(default)]
    pub form: EwmaForm,
}

impl Default for FilterParams {
    fn default() -> Self {
        FilterParams {
            span: 50,
            max_dev: 0.1,
            iterations: 3,
            form: EwmaForm::Adjusted,
        }
    }
}

impl FilterParams {
    pub fn validate(&self) -> Result<()> {
        if self.span < 1 {
            return Err(Error::InvalidArgument("filter span must be at least 1".into()));
        }
        if !(self.max_dev > 0.0 && self.max_dev.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "max_dev must be positive, got {}",
                self.max_dev
            )));
        }
        if self.iterations < 1 {
            return Err(Error::InvalidArgument("at least one filter iteration is required".into()));
        }
        Ok(())
    }
}

/// Result of [`reject_outliers`]. `kept` and `removed` partition the input.
#[derive(Debug, Clone, PartialEq)]
pub struct Filtered {
    pub kept: ChainageSeries,
    pub removed: ChainageSeries,
}

/// Repeatedly drops points deviating from the FBEWMA of the surviving points
/// by more than `max_dev`.
///
/// Each iteration recomputes the FBEWMA on the survivors of the previous one.
/// A pass that removes nothing is a fixed point, so the remaining iterations
/// are skipped.
pub fn reject_outliers(series: &ChainageSeries, params: &FilterParams) -> Result<Filtered> {
    params.validate()?;
    require_nonempty(series)?;
    let ewm = Ewm::from_span(params.span, params.form)?;
    let mut kept = series.clone();
    let mut removed: Vec<(f64, f64)> = Vec::new();
    for _ in 0..params.iterations {
        let smooth = fbewma(&kept, ewm)?;
        let bad: Vec<bool> = kept
            .values()
            .iter()
            .zip(smooth.values())
            .map(|(v, s)| (v - s).abs() > params.max_dev)
            .collect();
        if !bad.contains(&true) {
            break;
        }
        removed.extend(kept.points().zip(&bad).filter(|(_, &b)| b).map(|(p, _)| p));
        kept = kept.subset(|i| !bad[i]);
        if kept.is_empty() {
            return Err(Error::DegenerateSeries(format!(
                "all {} points were rejected as outliers",
                series.len()
            )));
        }
    }
    removed.sort_by(|a, b| a.0.total_cmp(&b.0));
    Ok(Filtered {
        kept,
        removed: ChainageSeries::from_points(removed)?,
    })
}

#[derive(Serialize, Deserialize)]
struct SeriesRow {
    chainage_m: f64,
    value_m: f64,
}

/// Reads a series CSV with header `chainage_m,value_m`.
pub fn read_series_csv(path: impl AsRef<Path>) -> Result<ChainageSeries> {
    let path = path.as_ref();
    let mut rdr = csv::Reader::from_path(path)?;
    let pts = rdr
        .deserialize::<SeriesRow>()
        .map(|r| r.map(|r| (r.chainage_m, r.value_m)).map_err(Error::from))
        .collect::<Result<Vec<_>>>()?;
    ChainageSeries::from_points(pts).map_err(|e| Error::Format {
        file: path.to_path_buf(),
        reason: e.to_string(),
    })
}

pub fn write_series_csv(series: &ChainageSeries, path: impl AsRef<Path>) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(["chainage_m", "value_m"])?;
    for (c, v) in series.points() {
        w.write_record([fmt_sig(c), fmt_sig(v)])?;
    }
    w.flush().map_err(csv::Error::from)?;
    Ok(())
}
