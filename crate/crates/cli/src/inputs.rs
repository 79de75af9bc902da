// SPDX-License-Identifier: Apache-2.0

//! Readers for the CLI's tabular and JSON inputs.

use std::fs;
use std::path::Path;

use wse_core::linear_ref::Polyline;
use wse_core::regress::{FitDocument, PiecewisePolyFit};
use wse_core::Error;

use crate::error::{CliError, CliResult};

fn format_err(path: &Path, reason: impl Into<String>) -> CliError {
    CliError::Core(Error::Format {
        file: path.to_path_buf(),
        reason: reason.into(),
    })
}

/// Reads a stored fit of either kind as a piecewise polynomial.
pub fn load_fit(path: &Path) -> CliResult<(PiecewisePolyFit, FitDocument)> {
    let bytes = fs::read(path).map_err(|e| format_err(path, e.to_string()))?;
    let doc: FitDocument = serde_json::from_slice(&bytes).map_err(|e| format_err(path, e.to_string()))?;
    let fit = doc.to_piecewise().map_err(|e| format_err(path, e.to_string()))?;
    Ok((fit, doc))
}

fn column(headers: &csv::StringRecord, name: &str) -> Option<usize> {
    headers.iter().position(|h| h.trim() == name)
}

fn number(path: &Path, row: usize, name: &str, field: Option<&str>) -> CliResult<f64> {
    let text = field.unwrap_or("").trim();
    text.parse::<f64>()
        .ok()
        .filter(|v| v.is_finite())
        .ok_or_else(|| format_err(path, format!("row {row}: `{name}` is not a finite number: `{text}`")))
}

/// Ground-truth WSE points as `(chainage, wse)`.
///
/// Accepts `chainage_m,wse_m` directly, or `x,y,wse_m` projected onto
/// `centerline`.
pub fn read_truth_points(path: &Path, centerline: Option<&Polyline>) -> CliResult<Vec<(f64, f64)>> {
    let mut rdr = csv::Reader::from_path(path).map_err(|e| format_err(path, e.to_string()))?;
    let headers = rdr.headers()?.clone();
    let wse = column(&headers, "wse_m").ok_or_else(|| format_err(path, "missing `wse_m` column"))?;
    let by_chainage = column(&headers, "chainage_m");
    let xy = column(&headers, "x").zip(column(&headers, "y"));
    let mut out = Vec::new();
    for (i, rec) in rdr.records().enumerate() {
        let rec = rec?;
        let row = i + 2;
        let value = number(path, row, "wse_m", rec.get(wse))?;
        let chainage = match (by_chainage, xy, centerline) {
            (Some(c), _, _) => number(path, row, "chainage_m", rec.get(c))?,
            (None, Some((cx, cy)), Some(line)) => {
                let x = number(path, row, "x", rec.get(cx))?;
                let y = number(path, row, "y", rec.get(cy))?;
                line.project_chainage(x, y)
            }
            (None, Some(_), None) => {
                return Err(CliError::Usage(format!(
                    "{}: x,y truth points need a centerline to project onto",
                    path.display()
                )))
            }
            (None, None, _) => return Err(format_err(path, "needs `chainage_m` or `x` and `y` columns")),
        };
        out.push((chainage, value));
    }
    Ok(out)
}

/// One sample square from the squares CSV.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SquareSpec {
    pub center_x: f64,
    pub center_y: f64,
    pub lat_lon: Option<(f64, f64)>,
}

/// Reads `center_x,center_y` with optional `lat,lon` columns.
pub fn read_squares(path: &Path) -> CliResult<Vec<SquareSpec>> {
    let text = fs::read_to_string(path).map_err(|e| format_err(path, e.to_string()))?;
    if text.trim().is_empty() {
        return Ok(Vec::new());
    }
    let mut rdr = csv::Reader::from_reader(text.as_bytes());
    let headers = rdr.headers()?.clone();
    let cx = column(&headers, "center_x").ok_or_else(|| format_err(path, "missing `center_x` column"))?;
    let cy = column(&headers, "center_y").ok_or_else(|| format_err(path, "missing `center_y` column"))?;
    let geo = column(&headers, "lat").zip(column(&headers, "lon"));
    let mut out = Vec::new();
    for (i, rec) in rdr.records().enumerate() {
        let rec = rec?;
        let row = i + 2;
        let lat_lon = match geo {
            Some((la, lo)) => Some((
                number(path, row, "lat", rec.get(la))?,
                number(path, row, "lon", rec.get(lo))?,
            )),
            None => None,
        };
        out.push(SquareSpec {
            center_x: number(path, row, "center_x", rec.get(cx))?,
            center_y: number(path, row, "center_y", rec.get(cy))?,
            lat_lon,
        });
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn truth_points_by_chainage_and_projection() {
        let dir = tempfile::tempdir().unwrap();
        let a = dir.path().join("a.csv");
        fs::write(&a, "chainage_m,wse_m\n0,100\n10,99.5\n").unwrap();
        assert_eq!(read_truth_points(&a, None).unwrap(), vec![(0.0, 100.0), (10.0, 99.5)]);

        let b = dir.path().join("b.csv");
        fs::write(&b, "x,y,wse_m\n3,1,100\n").unwrap();
        let line = Polyline::new(vec![(0.0, 0.0), (10.0, 0.0)]).unwrap();
        assert_eq!(read_truth_points(&b, Some(&line)).unwrap(), vec![(3.0, 100.0)]);
        assert!(matches!(read_truth_points(&b, None), Err(CliError::Usage(_))));
    }

    #[test]
    fn squares_with_and_without_geo() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("s.csv");
        fs::write(&p, "center_x,center_y,lat,lon\n1,2,50.1,19.9\n").unwrap();
        let s = read_squares(&p).unwrap();
        assert_eq!(s[0].lat_lon, Some((50.1, 19.9)));
        fs::write(&p, "").unwrap();
        assert!(read_squares(&p).unwrap().is_empty());
        fs::write(&p, "center_x,center_y\n1,nan\n").unwrap();
        assert!(read_squares(&p).is_err());
    }
}
