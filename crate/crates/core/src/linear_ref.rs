// SPDX-License-Identifier: Apache-2.0

//! Polylines and chainage (arc length along a line) based referencing.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numfmt::fmt_sig;
use crate::raster::BoundingBox;

/// A position along a polyline.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChainagePoint {
    pub chainage: f64,
    pub x: f64,
    pub y: f64,
}

/// An open planar polyline with at least two vertices and no repeated
/// consecutive vertices.
#[derive(Debug, Clone, PartialEq)]
pub struct Polyline {
    vertices: Vec<(f64, f64)>,
    /// Cumulative length at each vertex; `cumulative[0] == 0`.
    cumulative: Vec<f64>,
}

impl Polyline {
    pub fn new(vertices: Vec<(f64, f64)>) -> Result<Self> {
        if vertices.len() < 2 {
            return Err(Error::InvalidArgument(format!(
                "polyline needs at least 2 vertices, got {}",
                vertices.len()
            )));
        }
        if vertices.iter().any(|(x, y)| !x.is_finite() || !y.is_finite()) {
            return Err(Error::InvalidArgument("non-finite polyline vertex".into()));
        }
        let mut cumulative = Vec::with_capacity(vertices.len());
        cumulative.push(0.0);
        for (i, w) in vertices.windows(2).enumerate() {
            let d = dist(w[0], w[1]);
            if d == 0.0 {
                return Err(Error::InvalidArgument(format!(
                    "vertices {i} and {} coincide",
                    i + 1
                )));
            }
            cumulative.push(cumulative[i] + d);
        }
        Ok(Polyline {
            vertices,
            cumulative,
        })
    }

    pub fn vertices(&self) -> &[(f64, f64)] {
        &self.vertices
    }

    pub fn length(&self) -> f64 {
        *self.cumulative.last().expect("at least two vertices")
    }

    /// Cumulative chainage of vertex `i`.
    pub fn vertex_chainage(&self, i: usize) -> f64 {
        self.cumulative[i]
    }

    /// Point at a chainage, clamped to `[0, length]`.
    pub fn point_at(&self, chainage: f64) -> ChainagePoint {
        let c = chainage.clamp(0.0, self.length());
        // first segment whose end is at or beyond c
        let seg = self
            .cumulative
            .partition_point(|&s| s < c)
            .clamp(1, self.vertices.len() - 1)
            - 1;
        let (a, b) = (self.vertices[seg], self.vertices[seg + 1]);
        let seg_len = self.cumulative[seg + 1] - self.cumulative[seg];
        let t = ((c - self.cumulative[seg]) / seg_len).clamp(0.0, 1.0);
        let (x, y) = lerp(a, b, t);
        ChainagePoint { chainage: c, x, y }
    }

    /// Points every `step` meters from the start, plus the final vertex.
    pub fn densify(&self, step: f64) -> Result<Vec<ChainagePoint>> {
        self.densify_range(0.0, self.length(), step)
    }

    /// Points at `start, start + step, …` up to and including `end`.
    pub fn densify_range(&self, start: f64, end: f64, step: f64) -> Result<Vec<ChainagePoint>> {
        if !(step > 0.0 && step.is_finite()) {
            return Err(Error::InvalidArgument(format!("step must be positive, got {step}")));
        }
        let start = start.clamp(0.0, self.length());
        let end = end.clamp(start, self.length());
        let span = end - start;
        // a trailing interval shorter than this merges into the final point
        let slack = step * 1e-6;
        let mut out = Vec::with_capacity((span / step) as usize + 2);
        let mut k = 0usize;
        loop {
            let off = k as f64 * step;
            if off >= span - slack {
                break;
            }
            out.push(self.point_at(start + off));
            k += 1;
        }
        out.push(self.point_at(end));
        Ok(out)
    }

    /// Chainage of the closest point of the line to `(x, y)`. Ties resolve
    /// to the smallest chainage.
    pub fn project_chainage(&self, x: f64, y: f64) -> f64 {
        let mut best_d2 = f64::INFINITY;
        let mut best_c = 0.0;
        for (i, w) in self.vertices.windows(2).enumerate() {
            let (a, b) = (w[0], w[1]);
            let (dx, dy) = (b.0 - a.0, b.1 - a.1);
            let len2 = dx * dx + dy * dy;
            let t = (((x - a.0) * dx + (y - a.1) * dy) / len2).clamp(0.0, 1.0);
            let (px, py) = lerp(a, b, t);
            let d2 = (x - px).powi(2) + (y - py).powi(2);
            if d2 < best_d2 {
                best_d2 = d2;
                best_c = self.cumulative[i] + t * (self.cumulative[i + 1] - self.cumulative[i]);
            }
        }
        best_c
    }

    /// Chainage interval covered by the parts of the line inside `square`.
    /// If the line leaves and re-enters, the interval spans both visits.
    pub fn clip_chainage_range(&self, square: &BoundingBox) -> Result<(f64, f64)> {
        let mut lo = f64::INFINITY;
        let mut hi = f64::NEG_INFINITY;
        for (i, w) in self.vertices.windows(2).enumerate() {
            if let Some((t0, t1)) = clip_segment(w[0], w[1], square) {
                let c0 = self.cumulative[i];
                let len = self.cumulative[i + 1] - c0;
                lo = lo.min(c0 + t0 * len);
                hi = hi.max(c0 + t1 * len);
            }
        }
        if lo > hi {
            return Err(Error::EmptyIntersection(format!(
                "line does not touch box [{}, {}] x [{}, {}]",
                square.min_x, square.max_x, square.min_y, square.max_y
            )));
        }
        Ok((lo, hi))
    }
}

fn dist(a: (f64, f64), b: (f64, f64)) -> f64 {
    (b.0 - a.0).hypot(b.1 - a.1)
}

fn lerp(a: (f64, f64), b: (f64, f64), t: f64) -> (f64, f64) {
    (a.0 + t * (b.0 - a.0), a.1 + t * (b.1 - a.1))
}

/// Liang–Barsky clipping of segment `a→b`; returns the parameter interval
/// inside the box.
fn clip_segment(a: (f64, f64), b: (f64, f64), bx: &BoundingBox) -> Option<(f64, f64)> {
    let (dx, dy) = (b.0 - a.0, b.1 - a.1);
    let mut t0 = 0.0f64;
    let mut t1 = 1.0f64;
    for (p, q) in [
        (-dx, a.0 - bx.min_x),
        (dx, bx.max_x - a.0),
        (-dy, a.1 - bx.min_y),
        (dy, bx.max_y - a.1),
    ] {
        if p == 0.0 {
            if q < 0.0 {
                return None;
            }
        } else {
            let r = q / p;
            if p < 0.0 {
                t0 = t0.max(r);
            } else {
                t1 = t1.min(r);
            }
        }
    }
    (t0 <= t1).then_some((t0, t1))
}

#[derive(Serialize, Deserialize)]
struct VertexRow {
    x: f64,
    y: f64,
}

/// Reads a polyline from CSV with header `x,y`.
pub fn read_polyline_csv(path: impl AsRef<Path>) -> Result<Polyline> {
    let path = path.as_ref();
    let mut rdr = csv::Reader::from_path(path)?;
    let vertices = rdr
        .deserialize::<VertexRow>()
        .map(|r| r.map(|v| (v.x, v.y)).map_err(Error::from))
        .collect::<Result<Vec<_>>>()?;
    Polyline::new(vertices).map_err(|e| Error::Format {
        file: path.to_path_buf(),
        reason: e.to_string(),
    })
}

pub fn write_polyline_csv(line: &Polyline, path: impl AsRef<Path>) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(["x", "y"])?;
    for &(x, y) in line.vertices() {
        w.write_record([fmt_sig(x), fmt_sig(y)])?;
    }
    w.flush().map_err(csv::Error::from)?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn chainages(pts: &[ChainagePoint]) -> Vec<f64> {
        pts.iter().map(|p| p.chainage).collect()
    }

    #[test]
    fn densify_straight_segment() {
        let l = Polyline::new(vec![(0.0, 0.0), (1.0, 0.0)]).unwrap();
        assert_eq!(chainages(&l.densify(0.5).unwrap()), vec![0.0, 0.5, 1.0]);
    }

    #[test]
    fn densify_l_shape() {
        let l = Polyline::new(vec![(0.0, 0.0), (1.0, 0.0), (1.0, 1.0)]).unwrap();
        let pts = l.densify(0.4).unwrap();
        let c = chainages(&pts);
        let expect = [0.0, 0.4, 0.8, 1.2, 1.6, 2.0];
        assert_eq!(c.len(), expect.len());
        for (a, b) in c.iter().zip(expect) {
            assert!((a - b).abs() < 1e-12);
        }
        assert!((pts[3].x - 1.0).abs() < 1e-12 && (pts[3].y - 0.2).abs() < 1e-12);
    }

    #[test]
    fn densify_rejects_bad_step() {
        let l = Polyline::new(vec![(0.0, 0.0), (1.0, 0.0)]).unwrap();
        assert!(l.densify(0.0).is_err());
        assert!(l.densify(-1.0).is_err());
    }

    #[test]
    fn polyline_invariants() {
        assert!(Polyline::new(vec![(0.0, 0.0)]).is_err());
        assert!(Polyline::new(vec![(0.0, 0.0), (0.0, 0.0), (1.0, 0.0)]).is_err());
    }

    #[test]
    fn projection_examples() {
        let l = Polyline::new(vec![(0.0, 0.0), (10.0, 0.0)]).unwrap();
        assert_eq!(l.project_chainage(3.0, 0.5), 3.0);
        let l = Polyline::new(vec![(0.0, 0.0), (3.0, 4.0), (3.0, 10.0)]).unwrap();
        assert_eq!(l.project_chainage(3.0, 4.0), 5.0);
        // equidistant from both ends of a U: smallest chainage wins
        let u = Polyline::new(vec![(0.0, 0.0), (0.0, 1.0), (2.0, 1.0), (2.0, 0.0)]).unwrap();
        assert_eq!(u.project_chainage(1.0, -5.0), 0.0);
    }

    #[test]
    fn clip_examples() {
        let l = Polyline::new(vec![(0.0, 0.0), (20.0, 0.0)]).unwrap();
        let sq = BoundingBox::new(5.0, -5.0, 15.0, 5.0).unwrap();
        assert_eq!(l.clip_chainage_range(&sq).unwrap(), (5.0, 15.0));
        let far = BoundingBox::new(5.0, 10.0, 15.0, 20.0).unwrap();
        assert!(matches!(l.clip_chainage_range(&far), Err(Error::EmptyIntersection(_))));
    }

    #[test]
    fn csv_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("line.csv");
        let l = Polyline::new(vec![(500000.25, 5600000.5), (500010.0, 5600001.0)]).unwrap();
        write_polyline_csv(&l, &p).unwrap();
        assert_eq!(read_polyline_csv(&p).unwrap(), l);
    }
}
