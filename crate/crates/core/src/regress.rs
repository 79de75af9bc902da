// SPDX-License-Identifier: Apache-2.0

//! Least-squares fits of WSE against chainage.
//!
//! [`ols_fit`] is the straight-line regression applied to estimated WSE
//! values. [`poly_fit`] is the piecewise polynomial used to interpolate
//! ground-truth point measurements, with optional breakpoints at dams where
//! the water surface steps abruptly.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Anything that maps a chainage to a predicted WSE.
pub trait Predict {
    fn predict(&self, x: f64) -> f64;
}

/// `y = slope * x + intercept`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LinearFit {
    pub slope: f64,
    pub intercept: f64,
    pub n: usize,
}

impl Predict for LinearFit {
    fn predict(&self, x: f64) -> f64 {
        self.slope * x + self.intercept
    }
}

/// Ordinary least squares straight line through `points`.
pub fn ols_fit(points: &[(f64, f64)]) -> Result<LinearFit> {
    let n = points.len();
    if n < 2 {
        return Err(Error::Underdetermined(format!("line fit needs at least 2 points, got {n}")));
    }
    let nf = n as f64;
    let x_mean = points.iter().map(|p| p.0).sum::<f64>() / nf;
    let y_mean = points.iter().map(|p| p.1).sum::<f64>() / nf;
    let (sxy, sxx) = points.iter().fold((0.0, 0.0), |(sxy, sxx), &(x, y)| {
        let dx = x - x_mean;
        (sxy + dx * (y - y_mean), sxx + dx * dx)
    });
    if sxx == 0.0 {
        return Err(Error::Underdetermined("all x values are equal".into()));
    }
    let slope = sxy / sxx;
    let fit = LinearFit {
        slope,
        intercept: y_mean - slope * x_mean,
        n,
    };
    if !fit.slope.is_finite() || !fit.intercept.is_finite() {
        return Err(Error::Underdetermined("non-finite coefficients".into()));
    }
    Ok(fit)
}

/// Maps `x` to `u = (x - center) / half_width`, so a segment's range lands on
/// `[-1, 1]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AffineMap {
    pub center: f64,
    pub half_width: f64,
}

impl AffineMap {
    fn spanning(lo: f64, hi: f64) -> Self {
        let half = 0.5 * (hi - lo);
        AffineMap {
            center: 0.5 * (lo + hi),
            half_width: if half > 0.0 { half } else { 1.0 },
        }
    }

    pub fn apply(&self, x: f64) -> f64 {
        (x - self.center) / self.half_width
    }
}

/// One polynomial piece. Coefficients are in the scaled variable
/// `u = x_affine.apply(x)`, lowest order first.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PolySegment {
    pub range: [f64; 2],
    pub coeffs: Vec<f64>,
    pub x_affine: AffineMap,
}

impl PolySegment {
    pub fn eval(&self, x: f64) -> f64 {
        let u = self.x_affine.apply(x);
        self.coeffs.iter().rev().fold(0.0, |acc, &c| acc * u + c)
    }
}

/// Piecewise polynomial over half-open chainage intervals `[left, right)`;
/// the last interval is closed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PiecewisePolyFit {
    pub degree: usize,
    pub breakpoints: Vec<f64>,
    pub segments: Vec<PolySegment>,
    pub n: usize,
}

/// A prediction together with whether it left the fitted range.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Evaluated {
    pub value: f64,
    pub extrapolated: bool,
}

impl PiecewisePolyFit {
    pub fn range(&self) -> (f64, f64) {
        (
            self.segments.first().expect("fit has segments").range[0],
            self.segments.last().expect("fit has segments").range[1],
        )
    }

    /// Index of the segment owning `x`. Outside the range the nearest end
    /// segment is used.
    pub fn segment_index(&self, x: f64) -> usize {
        self.breakpoints.partition_point(|&b| b <= x)
    }

    pub fn evaluate(&self, x: f64) -> Evaluated {
        let (lo, hi) = self.range();
        Evaluated {
            value: self.segments[self.segment_index(x)].eval(x),
            extrapolated: x < lo || x > hi,
        }
    }
}

impl Predict for PiecewisePolyFit {
    fn predict(&self, x: f64) -> f64 {
        self.evaluate(x).value
    }
}

/// Relative singular-value cutoff below which a design matrix counts as rank
/// deficient.
const RANK_TOL: f64 = 1e-12;

/// Least-squares polynomial coefficients of `ys` against scaled abscissae
/// `us`, lowest order first.
fn lstsq_poly(us: &[f64], ys: &[f64], degree: usize) -> Option<Vec<f64>> {
    let cols = degree + 1;
    let a = DMatrix::from_fn(us.len(), cols, |r, c| us[r].powi(c as i32));
    let b = DVector::from_column_slice(ys);
    let svd = a.svd(true, true);
    let smax = svd.singular_values.max();
    let smin = svd.singular_values.min();
    if !(smax > 0.0) || smin <= RANK_TOL * smax {
        return None;
    }
    let sol = svd.solve(&b, 0.0).ok()?;
    let coeffs: Vec<f64> = sol.iter().copied().collect();
    coeffs.iter().all(|c| c.is_finite()).then_some(coeffs)
}

/// Fits an independent least-squares polynomial of `degree` on each
/// breakpoint-delimited segment.
///
/// Breakpoints must be strictly increasing and fall strictly inside the data
/// range. Each segment needs at least `degree + 2` points.
pub fn poly_fit(points: &[(f64, f64)], degree: usize, breakpoints: &[f64]) -> Result<PiecewisePolyFit> {
    if points.is_empty() {
        return Err(Error::Underdetermined("no points to fit".into()));
    }
    if points.iter().any(|(x, y)| !x.is_finite() || !y.is_finite()) {
        return Err(Error::InvalidArgument("non-finite point".into()));
    }
    let lo = points.iter().map(|p| p.0).fold(f64::INFINITY, f64::min);
    let hi = points.iter().map(|p| p.0).fold(f64::NEG_INFINITY, f64::max);
    if breakpoints.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::InvalidArgument("breakpoints must be strictly increasing".into()));
    }
    if let Some(b) = breakpoints.iter().find(|&&b| !(b > lo && b < hi)) {
        return Err(Error::InvalidArgument(format!(
            "breakpoint {b} is outside the data range ({lo}, {hi})"
        )));
    }

    let mut edges = Vec::with_capacity(breakpoints.len() + 2);
    edges.push(lo);
    edges.extend_from_slice(breakpoints);
    edges.push(hi);

    let mut buckets: Vec<Vec<(f64, f64)>> = vec![Vec::new(); edges.len() - 1];
    for &(x, y) in points {
        buckets[breakpoints.partition_point(|&b| b <= x)].push((x, y));
    }

    let mut segments = Vec::with_capacity(buckets.len());
    for (i, bucket) in buckets.iter().enumerate() {
        let range = [edges[i], edges[i + 1]];
        if bucket.len() < degree + 2 {
            return Err(Error::Underdetermined(format!(
                "segment {i} [{}, {}] has {} points, degree {degree} needs at least {}",
                range[0],
                range[1],
                bucket.len(),
                degree + 2
            )));
        }
        let x_affine = AffineMap::spanning(range[0], range[1]);
        let us: Vec<f64> = bucket.iter().map(|p| x_affine.apply(p.0)).collect();
        let ys: Vec<f64> = bucket.iter().map(|p| p.1).collect();
        let coeffs = lstsq_poly(&us, &ys, degree).ok_or_else(|| {
            Error::Underdetermined(format!(
                "segment {i} [{}, {}] has too few distinct chainages for degree {degree}",
                range[0], range[1]
            ))
        })?;
        segments.push(PolySegment {
            range,
            coeffs,
            x_affine,
        });
    }
    Ok(PiecewisePolyFit {
        degree,
        breakpoints: breakpoints.to_vec(),
        segments,
        n: points.len(),
    })
}

/// Standard error of estimate,
/// `S_e = sqrt(Σ (y_i - ŷ_i)² / (n - 2))`.
///
/// The `n - 2` denominator is used whatever the model's number of
/// parameters.
pub fn std_error_estimate(points: &[(f64, f64)], fit: &impl Predict) -> Result<f64> {
    let n = points.len();
    if n <= 2 {
        return Err(Error::InsufficientData(format!(
            "standard error of estimate needs more than 2 points, got {n}"
        )));
    }
    let ss: f64 = points.iter().map(|&(x, y)| (y - fit.predict(x)).powi(2)).sum();
    Ok((ss / (n - 2) as f64).sqrt())
}

/// Serialized form of a fit, tagged by `type`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum FitDocument {
    Linear {
        a: f64,
        b: f64,
        n: usize,
        #[serde(default)]
        s_e: Option<f64>,
    },
    PiecewisePoly {
        degree: usize,
        breakpoints: Vec<f64>,
        segments: Vec<PolySegment>,
        n: usize,
        #[serde(default)]
        s_e: Option<f64>,
    },
}

impl FitDocument {
    pub fn linear(fit: &LinearFit, s_e: Option<f64>) -> Self {
        FitDocument::Linear {
            a: fit.slope,
            b: fit.intercept,
            n: fit.n,
            s_e,
        }
    }

    pub fn piecewise(fit: &PiecewisePolyFit, s_e: Option<f64>) -> Self {
        FitDocument::PiecewisePoly {
            degree: fit.degree,
            breakpoints: fit.breakpoints.clone(),
            segments: fit.segments.clone(),
            n: fit.n,
            s_e,
        }
    }

    pub fn s_e(&self) -> Option<f64> {
        match self {
            FitDocument::Linear { s_e, .. } | FitDocument::PiecewisePoly { s_e, .. } => *s_e,
        }
    }

    /// Any stored fit as a piecewise polynomial, so both kinds can act as a
    /// ground-truth profile.
    pub fn to_piecewise(&self) -> Result<PiecewisePolyFit> {
        match self {
            FitDocument::Linear { a, b, n, .. } => Ok(PiecewisePolyFit {
                degree: 1,
                breakpoints: Vec::new(),
                segments: vec![PolySegment {
                    range: [f64::NEG_INFINITY, f64::INFINITY],
                    coeffs: vec![*b, *a],
                    x_affine: AffineMap {
                        center: 0.0,
                        half_width: 1.0,
                    },
                }],
                n: *n,
            }),
            FitDocument::PiecewisePoly {
                degree,
                breakpoints,
                segments,
                n,
                ..
            } => {
                if segments.len() != breakpoints.len() + 1 || segments.iter().any(|s| s.coeffs.len() != degree + 1) {
                    return Err(Error::InvalidArgument(
                        "segment count or coefficient length disagrees with degree/breakpoints".into(),
                    ));
                }
                Ok(PiecewisePolyFit {
                    degree: *degree,
                    breakpoints: breakpoints.clone(),
                    segments: segments.clone(),
                    n: *n,
                })
            }
        }
    }
}
