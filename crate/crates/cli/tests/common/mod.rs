// SPDX-License-Identifier: Apache-2.0

//! Synthetic river scene shared by the CLI tests.
//!
//! A 100 m × 40 m reach flowing along +x with the water surface at
//! `150 - 0.001 x`. The channel occupies 15 m ≤ y ≤ 25 m, banks rise at
//! 0.15 m/m, bushes sit on the left-bank edge row, a 5 m block stands in the
//! channel near x = 80 and one DSM cell on the edge row is nodata.

#![allow(dead_code)]

use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use wse_core::linear_ref::{write_polyline_csv, Polyline};
use wse_core::pipeline::{write_predictions_csv, Prediction};
use wse_core::raster::{write_dsm_ascii, write_ortho_pgm, GeoTransform, Grid};
use wse_core::regress::{FitDocument, LinearFit};

pub const NODATA: f64 = -9999.0;
pub const EDGE_Y: f64 = 14.75;
pub const SUBSETS: [&str; 2] = ["AMO18", "GRO20"];

pub fn true_wse(x: f64) -> f64 {
    150.0 - 0.001 * x
}

pub struct Scene {
    pub root: PathBuf,
    pub dsm: PathBuf,
    pub ortho: PathBuf,
    pub centerline: PathBuf,
    pub edge: PathBuf,
    pub squares: PathBuf,
    pub truth_points: PathBuf,
    pub truth_fit: PathBuf,
    pub preds: PathBuf,
    pub truth_dir: PathBuf,
    pub manifest: PathBuf,
}

fn dsm_grid(rng: &mut ChaCha8Rng) -> Grid {
    let (cols, rows, cell) = (200usize, 80usize, 0.5);
    let t = GeoTransform::new(0.0, 40.0, cell).unwrap();
    let mut values = Vec::with_capacity(cols * rows);
    for row in 0..rows {
        for col in 0..cols {
            let (x, y) = t.center_to_world(col, row);
            let wse = true_wse(x);
            let mut z = if y < 15.0 {
                wse + 0.02 + (15.0 - y) * 0.15 + rng.gen_range(-0.015..0.015)
            } else if y > 25.0 {
                wse + 0.02 + (y - 25.0) * 0.15 + rng.gen_range(-0.015..0.015)
            } else {
                wse + rng.gen_range(-0.08..0.08)
            };
            if (y - EDGE_Y).abs() < 1e-9 && rng.gen_bool(0.1) {
                z += rng.gen_range(0.5..1.5);
            }
            if (78.0..82.0).contains(&x) && (21.0..23.0).contains(&y) {
                z += 5.0;
            }
            if (y - EDGE_Y).abs() < 1e-9 && (x - 60.25).abs() < 1e-9 {
                z = NODATA;
            }
            values.push(z);
        }
    }
    Grid::new(cols, rows, values, Some(NODATA), t).unwrap()
}

fn ortho_grid() -> Grid {
    let (cols, rows) = (400usize, 160usize);
    let t = GeoTransform::new(0.0, 40.0, 0.25).unwrap();
    let mut values = Vec::with_capacity(cols * rows);
    for row in 0..rows {
        for col in 0..cols {
            let (_, y) = t.center_to_world(col, row);
            let base = if (15.0..=25.0).contains(&y) { 60 } else { 150 };
            values.push(f64::from(base + ((col * 7 + row * 13) % 40) as u8));
        }
    }
    Grid::new(cols, rows, values, None, t).unwrap()
}

fn predictions(rng: &mut ChaCha8Rng) -> Vec<Prediction> {
    let mut out = Vec::new();
    for (k, subset) in SUBSETS.iter().enumerate() {
        for i in 0..60 {
            let c = 5.0 + i as f64 * 15.0 + rng.gen_range(0.0..3.0);
            let truth = 180.0 - 40.0 * k as f64 - 0.0005 * c;
            let err = if i % 2 == 0 { 0.04 } else { -0.04 } + rng.gen_range(-0.02..0.02);
            out.push(Prediction {
                subset_id: subset.to_string(),
                sample_id: format!("{subset}_{i:04}"),
                chainage: c,
                wse_pred: truth + err,
                uncertainty: Some(0.03 + rng.gen_range(0.0..0.03)),
            });
        }
    }
    out
}

/// Writes every fixture file under `root`.
pub fn build(root: &Path) -> Scene {
    let mut rng = ChaCha8Rng::seed_from_u64(2022);
    let s = Scene {
        root: root.to_path_buf(),
        dsm: root.join("reach.asc"),
        ortho: root.join("reach.pgm"),
        centerline: root.join("centerline.csv"),
        edge: root.join("edge.csv"),
        squares: root.join("squares.csv"),
        truth_points: root.join("truth_points.csv"),
        truth_fit: root.join("truth_fit.json"),
        preds: root.join("predictions.csv"),
        truth_dir: root.join("truth"),
        manifest: root.join("manifest.json"),
    };
    write_dsm_ascii(&dsm_grid(&mut rng), &s.dsm).unwrap();
    write_ortho_pgm(&ortho_grid(), &s.ortho, root.join("reach.pgw")).unwrap();
    write_polyline_csv(&Polyline::new(vec![(0.0, 20.0), (100.0, 20.0)]).unwrap(), &s.centerline).unwrap();
    write_polyline_csv(&Polyline::new(vec![(1.0, EDGE_Y), (99.0, EDGE_Y)]).unwrap(), &s.edge).unwrap();
    fs::write(
        &s.squares,
        "center_x,center_y,lat,lon\n20,20,50.061,19.937\n50,20,50.061,19.938\n80,20,50.061,19.939\n",
    )
    .unwrap();

    let mut pts = String::from("chainage_m,wse_m\n");
    for i in 0..=20 {
        let c = i as f64 * 5.0;
        let jitter = if i % 2 == 0 { 0.003 } else { -0.003 };
        pts.push_str(&format!("{c},{}\n", true_wse(c) + jitter));
    }
    fs::write(&s.truth_points, pts).unwrap();
    let line = FitDocument::linear(&LinearFit { slope: -0.001, intercept: 150.0, n: 21 }, None);
    fs::write(&s.truth_fit, serde_json::to_string_pretty(&line).unwrap()).unwrap();

    write_predictions_csv(&predictions(&mut rng), &s.preds).unwrap();
    fs::create_dir_all(&s.truth_dir).unwrap();
    for (k, subset) in SUBSETS.iter().enumerate() {
        let fit = LinearFit { slope: -0.0005, intercept: 180.0 - 40.0 * k as f64, n: 2 };
        fs::write(
            s.truth_dir.join(format!("{subset}.json")),
            serde_json::to_string(&FitDocument::linear(&fit, None)).unwrap(),
        )
        .unwrap();
    }
    fs::write(
        &s.manifest,
        r#"{"samples": [], "subsets": ["AMO18", "GRO20", "RYB21", "SOL21", "WIS21"]}"#,
    )
    .unwrap();
    s
}

pub fn wse(args: &[&dyn AsRef<std::ffi::OsStr>]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_wse"))
        .args(args.iter().map(|a| a.as_ref()))
        .output()
        .expect("wse binary runs")
}

pub fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

pub fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

/// Relative path -> contents of every file under `dir`, sorted.
pub fn snapshot(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let mut out = Vec::new();
    let mut stack = vec![dir.to_path_buf()];
    while let Some(d) = stack.pop() {
        for entry in fs::read_dir(&d).unwrap() {
            let p = entry.unwrap().path();
            if p.is_dir() {
                stack.push(p);
            } else {
                let rel = p.strip_prefix(dir).unwrap().to_string_lossy().into_owned();
                out.push((rel, fs::read(&p).unwrap()));
            }
        }
    }
    out.sort();
    out
}
