// SPDX-License-Identifier: Apache-2.0

//! Georeferenced raster grids: ESRI ASCII DSMs, P5 PGM orthophotos with
//! world files, bilinear sampling and square patch extraction.
//!
//! Coordinates are planar projected meters. Row 0 is the northernmost row and
//! rows advance toward decreasing northing; pixel sizes are square.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use crate::error::{Error, Result};

/// Slack used when deciding whether a point lies on the pixel-center hull.
const HULL_EPS: f64 = 1e-9;

/// Affine georeference of a north-up grid with square pixels.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GeoTransform {
    /// Easting of the outer (top-left) corner of pixel (0, 0).
    pub origin_x: f64,
    /// Northing of the outer (top-left) corner of pixel (0, 0).
    pub origin_y: f64,
    pub pixel_size: f64,
}

impl GeoTransform {
    pub fn new(origin_x: f64, origin_y: f64, pixel_size: f64) -> Result<Self> {
        if !(pixel_size > 0.0 && pixel_size.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "pixel size must be positive and finite, got {pixel_size}"
            )));
        }
        if !origin_x.is_finite() || !origin_y.is_finite() {
            return Err(Error::InvalidArgument("non-finite raster origin".into()));
        }
        Ok(GeoTransform {
            origin_x,
            origin_y,
            pixel_size,
        })
    }

    /// World coordinates of the top-left corner of pixel `(col, row)`.
    /// Fractional indices are allowed.
    pub fn corner_to_world(&self, col: f64, row: f64) -> (f64, f64) {
        (
            self.origin_x + col * self.pixel_size,
            self.origin_y - row * self.pixel_size,
        )
    }

    /// World coordinates of the center of pixel `(col, row)`.
    pub fn center_to_world(&self, col: usize, row: usize) -> (f64, f64) {
        self.corner_to_world(col as f64 + 0.5, row as f64 + 0.5)
    }

    /// Inverse of [`GeoTransform::corner_to_world`]: continuous pixel-corner
    /// coordinates `(col, row)` of a world point.
    pub fn world_to_pixel(&self, x: f64, y: f64) -> (f64, f64) {
        (
            (x - self.origin_x) / self.pixel_size,
            (self.origin_y - y) / self.pixel_size,
        )
    }
}

/// Axis-aligned rectangle in world coordinates.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoundingBox {
    pub min_x: f64,
    pub min_y: f64,
    pub max_x: f64,
    pub max_y: f64,
}

impl BoundingBox {
    pub fn new(min_x: f64, min_y: f64, max_x: f64, max_y: f64) -> Result<Self> {
        if !(min_x <= max_x && min_y <= max_y) {
            return Err(Error::InvalidArgument(format!(
                "inverted box [{min_x}, {max_x}] x [{min_y}, {max_y}]"
            )));
        }
        Ok(BoundingBox {
            min_x,
            min_y,
            max_x,
            max_y,
        })
    }

    /// Square of side `side` centered on `(cx, cy)`.
    pub fn square(cx: f64, cy: f64, side: f64) -> Result<Self> {
        let h = side / 2.0;
        BoundingBox::new(cx - h, cy - h, cx + h, cy + h)
    }

    pub fn contains(&self, x: f64, y: f64) -> bool {
        x >= self.min_x && x <= self.max_x && y >= self.min_y && y <= self.max_y
    }
}

/// A single-band raster held in memory.
#[derive(Debug, Clone, PartialEq)]
pub struct Grid {
    width: usize,
    height: usize,
    values: Vec<f64>,
    nodata: Option<f64>,
    transform: GeoTransform,
}

impl Grid {
    pub fn new(
        width: usize,
        height: usize,
        values: Vec<f64>,
        nodata: Option<f64>,
        transform: GeoTransform,
    ) -> Result<Self> {
        if width < 2 || height < 2 {
            return Err(Error::Structure(format!(
                "grid must be at least 2x2, got {width}x{height}"
            )));
        }
        if values.len() != width * height {
            return Err(Error::Structure(format!(
                "expected {} values for a {width}x{height} grid, found {}",
                width * height,
                values.len()
            )));
        }
        if let Some(i) = values
            .iter()
            .position(|&v| !v.is_finite() && Some(v) != nodata)
        {
            return Err(Error::Structure(format!(
                "non-finite value at index {i} that is not the nodata sentinel"
            )));
        }
        Ok(Grid {
            width,
            height,
            values,
            nodata,
            transform,
        })
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn nodata(&self) -> Option<f64> {
        self.nodata
    }

    pub fn transform(&self) -> &GeoTransform {
        &self.transform
    }

    pub fn get(&self, col: usize, row: usize) -> f64 {
        self.values[row * self.width + col]
    }

    pub fn is_nodata(&self, v: f64) -> bool {
        match self.nodata {
            Some(nd) => v == nd || (nd.is_nan() && v.is_nan()),
            None => false,
        }
    }

    /// Outer extent of the raster (pixel corners).
    pub fn extent(&self) -> BoundingBox {
        let t = &self.transform;
        BoundingBox {
            min_x: t.origin_x,
            max_x: t.origin_x + self.width as f64 * t.pixel_size,
            min_y: t.origin_y - self.height as f64 * t.pixel_size,
            max_y: t.origin_y,
        }
    }

    /// Continuous pixel-center coordinates of a world point; `(0, 0)` is the
    /// center of the top-left pixel.
    fn center_coords(&self, x: f64, y: f64) -> (f64, f64) {
        let (c, r) = self.transform.world_to_pixel(x, y);
        (c - 0.5, r - 0.5)
    }

    /// Bilinear interpolation of the pixel-center values surrounding `(x, y)`.
    ///
    /// The point must lie within the hull of pixel centers. Neighbours with a
    /// zero interpolation weight are not consulted, so a point exactly on a
    /// valid pixel center next to nodata still samples.
    pub fn sample_bilinear(&self, x: f64, y: f64) -> Result<f64> {
        let (fc, fr) = self.center_coords(x, y);
        let max_c = (self.width - 1) as f64;
        let max_r = (self.height - 1) as f64;
        if !(fc >= -HULL_EPS && fc <= max_c + HULL_EPS && fr >= -HULL_EPS && fr <= max_r + HULL_EPS)
        {
            return Err(Error::OutOfBounds { x, y });
        }
        self.interpolate(fc.clamp(0.0, max_c), fr.clamp(0.0, max_r), x, y)
    }

    /// Like [`Grid::sample_bilinear`] but accepts points anywhere inside the
    /// raster extent, replicating edge pixels over the outer half-pixel rim.
    pub fn sample_bilinear_clamped(&self, x: f64, y: f64) -> Result<f64> {
        let e = self.extent();
        let tol = HULL_EPS * self.transform.pixel_size.max(1.0);
        if !(x >= e.min_x - tol && x <= e.max_x + tol && y >= e.min_y - tol && y <= e.max_y + tol) {
            return Err(Error::OutOfBounds { x, y });
        }
        let (fc, fr) = self.center_coords(x, y);
        let fc = fc.clamp(0.0, (self.width - 1) as f64);
        let fr = fr.clamp(0.0, (self.height - 1) as f64);
        self.interpolate(fc, fr, x, y)
    }

    fn interpolate(&self, fc: f64, fr: f64, x: f64, y: f64) -> Result<f64> {
        let c0 = (fc.floor() as usize).min(self.width - 2);
        let r0 = (fr.floor() as usize).min(self.height - 2);
        let tx = fc - c0 as f64;
        let ty = fr - r0 as f64;
        let taps = [
            (c0, r0, (1.0 - tx) * (1.0 - ty)),
            (c0 + 1, r0, tx * (1.0 - ty)),
            (c0, r0 + 1, (1.0 - tx) * ty),
            (c0 + 1, r0 + 1, tx * ty),
        ];
        let mut acc = 0.0;
        for (c, r, w) in taps {
            if w == 0.0 {
                continue;
            }
            let v = self.get(c, r);
            if self.is_nodata(v) {
                return Err(Error::Nodata { x, y });
            }
            acc += w * v;
        }
        Ok(acc)
    }

    /// Resamples the `side`×`side` square centered on `(center_x, center_y)`
    /// into an `out_px`×`out_px` grid.
    ///
    /// Output pixel centers tile the square uniformly at pitch `side/out_px`.
    /// The square must lie inside the raster extent.
    pub fn extract_patch(
        &self,
        center_x: f64,
        center_y: f64,
        side: f64,
        out_px: usize,
    ) -> Result<Grid> {
        if !(side > 0.0) || out_px < 2 {
            return Err(Error::InvalidArgument(format!(
                "patch needs side > 0 and at least 2 pixels, got side={side}, out_px={out_px}"
            )));
        }
        let square = BoundingBox::square(center_x, center_y, side)?;
        let e = self.extent();
        let tol = HULL_EPS * self.transform.pixel_size.max(1.0);
        if square.min_x < e.min_x - tol
            || square.max_x > e.max_x + tol
            || square.min_y < e.min_y - tol
            || square.max_y > e.max_y + tol
        {
            return Err(Error::OutOfBounds {
                x: center_x,
                y: center_y,
            });
        }
        let pitch = side / out_px as f64;
        let transform = GeoTransform::new(square.min_x, square.max_y, pitch)?;
        let mut values = Vec::with_capacity(out_px * out_px);
        for row in 0..out_px {
            for col in 0..out_px {
                let (x, y) = transform.center_to_world(col, row);
                values.push(self.sample_bilinear_clamped(x, y)?);
            }
        }
        Grid::new(out_px, out_px, values, self.nodata, transform)
    }
}

// ---------------------------------------------------------------------------
// ESRI ASCII grid

const ASCII_KEYS: [&str; 6] = [
    "ncols",
    "nrows",
    "xllcorner",
    "yllcorner",
    "cellsize",
    "nodata_value",
];

/// Parses an ESRI ASCII grid from text. Header keys are case-insensitive;
/// `NODATA_value` is optional.
pub fn parse_dsm_ascii(text: &str) -> Result<Grid> {
    let mut header: [Option<f64>; 6] = [None; 6];
    let mut tokens = text.split_whitespace().peekable();

    while let Some(&tok) = tokens.peek() {
        let lower = tok.to_ascii_lowercase();
        let Some(slot) = ASCII_KEYS.iter().position(|k| *k == lower) else {
            if tok.chars().next().is_some_and(|c| c.is_ascii_alphabetic()) && tok.parse::<f64>().is_err() {
                return Err(Error::parse(tok, "unknown header key"));
            }
            break;
        };
        tokens.next();
        let raw = tokens
            .next()
            .ok_or_else(|| Error::parse(ASCII_KEYS[slot], "missing value"))?;
        let v: f64 = raw
            .parse()
            .map_err(|_| Error::parse(ASCII_KEYS[slot], format!("not a number: {raw:?}")))?;
        if header[slot].replace(v).is_some() {
            return Err(Error::parse(ASCII_KEYS[slot], "duplicate key"));
        }
    }

    let get = |i: usize| header[i].ok_or_else(|| Error::parse(ASCII_KEYS[i], "missing key"));
    let as_count = |i: usize| -> Result<usize> {
        let v = get(i)?;
        if v.fract() != 0.0 || v < 0.0 {
            return Err(Error::parse(ASCII_KEYS[i], format!("not a count: {v}")));
        }
        Ok(v as usize)
    };
    let ncols = as_count(0)?;
    let nrows = as_count(1)?;
    let xll = get(2)?;
    let yll = get(3)?;
    let cellsize = get(4)?;
    if !(cellsize > 0.0) {
        return Err(Error::parse("cellsize", "must be positive"));
    }
    let nodata = header[5];

    let mut values = Vec::with_capacity(ncols * nrows);
    for tok in tokens {
        let v: f64 = tok
            .parse()
            .map_err(|_| Error::parse(format!("value #{}", values.len()), format!("not a number: {tok:?}")))?;
        values.push(v);
    }
    if values.len() != ncols * nrows {
        return Err(Error::Structure(format!(
            "header declares {ncols}x{nrows} = {} values, found {}",
            ncols * nrows,
            values.len()
        )));
    }
    let transform = GeoTransform::new(xll, yll + nrows as f64 * cellsize, cellsize)?;
    Grid::new(ncols, nrows, values, nodata, transform)
}

pub fn load_dsm_ascii(path: impl AsRef<Path>) -> Result<Grid> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_dsm_ascii(&text)
}

/// Serializes a grid as ESRI ASCII. Values use the shortest representation
/// that parses back to the identical `f64`.
pub fn format_dsm_ascii(grid: &Grid) -> String {
    let t = grid.transform();
    let yll = t.origin_y - grid.height() as f64 * t.pixel_size;
    let mut out = String::new();
    let _ = writeln!(out, "ncols {}", grid.width());
    let _ = writeln!(out, "nrows {}", grid.height());
    let _ = writeln!(out, "xllcorner {:?}", t.origin_x);
    let _ = writeln!(out, "yllcorner {yll:?}");
    let _ = writeln!(out, "cellsize {:?}", t.pixel_size);
    if let Some(nd) = grid.nodata() {
        let _ = writeln!(out, "NODATA_value {nd:?}");
    }
    for row in grid.values().chunks(grid.width()) {
        let line: Vec<String> = row.iter().map(|v| format!("{v:?}")).collect();
        out.push_str(&line.join(" "));
        out.push('\n');
    }
    out
}

pub fn write_dsm_ascii(grid: &Grid, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    fs::write(path, format_dsm_ascii(grid)).map_err(|e| Error::io(path, e))
}

// ---------------------------------------------------------------------------
// PGM + world file

/// Decodes a binary (P5) 8-bit PGM into `(width, height, pixels)`.
pub fn decode_pgm(bytes: &[u8]) -> Result<(usize, usize, Vec<u8>)> {
    let mut pos = 0usize;
    let mut next_token = |what: &str| -> Result<String> {
        loop {
            while pos < bytes.len() && bytes[pos].is_ascii_whitespace() {
                pos += 1;
            }
            if pos < bytes.len() && bytes[pos] == b'#' {
                while pos < bytes.len() && bytes[pos] != b'\n' {
                    pos += 1;
                }
                continue;
            }
            break;
        }
        let start = pos;
        while pos < bytes.len() && !bytes[pos].is_ascii_whitespace() {
            pos += 1;
        }
        if start == pos {
            return Err(Error::parse(what, "unexpected end of PGM header"));
        }
        Ok(String::from_utf8_lossy(&bytes[start..pos]).into_owned())
    };

    let magic = next_token("magic")?;
    if magic != "P5" {
        return Err(Error::UnsupportedFormat(format!(
            "expected binary PGM magic P5, found {magic:?}"
        )));
    }
    let mut dim = |what: &str| -> Result<usize> {
        let tok = next_token(what)?;
        tok.parse()
            .map_err(|_| Error::parse(what, format!("not an integer: {tok:?}")))
    };
    let width = dim("width")?;
    let height = dim("height")?;
    let maxval = dim("maxval")?;
    if maxval != 255 {
        return Err(Error::UnsupportedFormat(format!(
            "PGM maxval must be 255, found {maxval}"
        )));
    }
    // exactly one whitespace byte separates the header from the raster
    let data_start = pos + 1;
    let expected = width * height;
    let data = bytes.get(data_start..).unwrap_or(&[]);
    if data.len() != expected {
        return Err(Error::Structure(format!(
            "PGM declares {width}x{height} = {expected} pixels, found {} bytes",
            data.len()
        )));
    }
    Ok((width, height, data.to_vec()))
}

pub fn encode_pgm(width: usize, height: usize, pixels: &[u8]) -> Vec<u8> {
    let mut out = format!("P5\n{width} {height}\n255\n").into_bytes();
    out.extend_from_slice(pixels);
    out
}

/// Parses a six-line world file into a corner-convention transform.
pub fn parse_world_file(text: &str) -> Result<GeoTransform> {
    const NAMES: [&str; 6] = [
        "x pixel size",
        "y rotation",
        "x rotation",
        "y pixel size",
        "x center of top-left pixel",
        "y center of top-left pixel",
    ];
    let lines: Vec<&str> = text.lines().map(str::trim).filter(|l| !l.is_empty()).collect();
    if lines.len() != 6 {
        return Err(Error::Structure(format!(
            "world file must have 6 lines, found {}",
            lines.len()
        )));
    }
    let mut p = [0.0f64; 6];
    for (i, line) in lines.iter().enumerate() {
        p[i] = line
            .parse()
            .map_err(|_| Error::parse(NAMES[i], format!("not a number: {line:?}")))?;
    }
    let [a, d, b, e, c, f] = p;
    if d != 0.0 || b != 0.0 {
        return Err(Error::UnsupportedGeometry(format!(
            "rotation terms must be zero, found {d} and {b}"
        )));
    }
    if !(a > 0.0) || e != -a {
        return Err(Error::UnsupportedGeometry(format!(
            "expected square north-up pixels (A > 0, E = -A), found A={a}, E={e}"
        )));
    }
    GeoTransform::new(c - a / 2.0, f + a / 2.0, a)
}

pub fn format_world_file(t: &GeoTransform) -> String {
    let h = t.pixel_size / 2.0;
    format!(
        "{:?}\n0.0\n0.0\n{:?}\n{:?}\n{:?}\n",
        t.pixel_size,
        -t.pixel_size,
        t.origin_x + h,
        t.origin_y - h
    )
}

pub fn load_ortho_pgm(path: impl AsRef<Path>, worldfile: impl AsRef<Path>) -> Result<Grid> {
    let path = path.as_ref();
    let worldfile = worldfile.as_ref();
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    let (w, h, px) = decode_pgm(&bytes)?;
    let wf = fs::read_to_string(worldfile).map_err(|e| Error::io(worldfile, e))?;
    let transform = parse_world_file(&wf)?;
    Grid::new(w, h, px.into_iter().map(f64::from).collect(), None, transform)
}

/// Writes a grid whose values are integers in 0..=255 as PGM + world file.
pub fn write_ortho_pgm(
    grid: &Grid,
    path: impl AsRef<Path>,
    worldfile: impl AsRef<Path>,
) -> Result<()> {
    let pixels = grid
        .values()
        .iter()
        .map(|&v| {
            if v.fract() == 0.0 && (0.0..=255.0).contains(&v) {
                Ok(v as u8)
            } else {
                Err(Error::UnsupportedFormat(format!(
                    "value {v} does not fit an 8-bit gray level"
                )))
            }
        })
        .collect::<Result<Vec<u8>>>()?;
    let path = path.as_ref();
    let worldfile = worldfile.as_ref();
    fs::write(path, encode_pgm(grid.width(), grid.height(), &pixels))
        .map_err(|e| Error::io(path, e))?;
    fs::write(worldfile, format_world_file(grid.transform())).map_err(|e| Error::io(worldfile, e))
}
