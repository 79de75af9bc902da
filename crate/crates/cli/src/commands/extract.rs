// SPDX-License-Identifier: Apache-2.0

use std::path::PathBuf;

use clap::Args;
use wse_core::dataset::{range_filter, write_manifest, write_sample, Manifest, SampleRecord, MANIFEST_FILE};
use wse_core::linear_ref::{read_polyline_csv, Polyline};
use wse_core::numfmt::fmt_sig;
use wse_core::pipeline::{assign_truth, ground_truth_build};
use wse_core::raster::{load_dsm_ascii, load_ortho_pgm, BoundingBox, Grid};
use wse_core::regress::{FitDocument, PiecewisePolyFit};

use crate::config::RunConfig;
use crate::error::{CliError, CliResult};
use crate::inputs::{read_squares, read_truth_points, SquareSpec};
use crate::output::{ensure_dir, write_json};

#[derive(Debug, Args)]
pub struct ExtractArgs {
    /// DSM as an ESRI ASCII grid.
    #[arg(long)]
    pub dsm: PathBuf,
    /// Grayscale orthophoto, binary PGM.
    #[arg(long)]
    pub ortho: PathBuf,
    /// World file of the orthophoto. Defaults to the PGM path with a `.pgw`
    /// extension.
    #[arg(long)]
    pub ortho_world: Option<PathBuf>,
    /// River centerline, CSV with `x,y` columns.
    #[arg(long)]
    pub centerline: PathBuf,
    /// Sample squares, CSV with `center_x,center_y` and optional `lat,lon`.
    #[arg(long)]
    pub squares: PathBuf,
    /// Ground-truth WSE points, `chainage_m,wse_m` or `x,y,wse_m`.
    #[arg(long)]
    pub truth_points: PathBuf,
    #[arg(long)]
    pub subset_id: String,
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub out: PathBuf,
}

struct Scene<'a> {
    dsm: &'a Grid,
    ortho: &'a Grid,
    centerline: &'a Polyline,
    truth: &'a PiecewisePolyFit,
    side: f64,
    px: usize,
}

impl Scene<'_> {
    fn sample(&self, sq: &SquareSpec, subset_id: &str) -> wse_core::Result<SampleRecord> {
        let (cx, cy) = (sq.center_x, sq.center_y);
        let dsm = self.dsm.extract_patch(cx, cy, self.side, self.px)?;
        let ortho = self.ortho.extract_patch(cx, cy, self.side, self.px)?;
        let wse = assign_truth(self.truth, self.centerline, &BoundingBox::square(cx, cy, self.side)?)?;
        SampleRecord::new(
            ortho.values().iter().map(|v| v.round().clamp(0.0, 255.0) as u8).collect(),
            dsm.values().iter().map(|&v| v as f32).collect(),
            wse,
            sq.lat_lon,
            self.centerline.project_chainage(cx, cy),
            subset_id,
        )
    }
}

pub fn run(args: &ExtractArgs) -> CliResult<()> {
    let cfg = RunConfig::load(args.config.as_deref())?;
    if args.subset_id.trim().is_empty() || args.subset_id.contains(['/', '\\']) {
        return Err(CliError::Usage(format!(
            "subset id `{}` must be non-empty and contain no path separators",
            args.subset_id
        )));
    }
    let dsm = load_dsm_ascii(&args.dsm)?;
    let world = args
        .ortho_world
        .clone()
        .unwrap_or_else(|| args.ortho.with_extension("pgw"));
    let ortho = load_ortho_pgm(&args.ortho, &world)?;
    let centerline = read_polyline_csv(&args.centerline)?;
    let squares = read_squares(&args.squares)?;
    let points = read_truth_points(&args.truth_points, Some(&centerline))?;
    let (truth, s_e) = ground_truth_build(&points, cfg.truth_degree, &cfg.truth_breakpoints_m)?;

    let out = args.out.as_path();
    ensure_dir(&out.join("truth"))?;
    write_json(
        &out.join("truth").join(format!("{}.json", args.subset_id)),
        &FitDocument::piecewise(&truth, Some(s_e)),
    )?;
    write_json(&out.join("standardization.json"), &cfg.standardization())?;
    println!("ground truth: {} points, S_e = {} m", points.len(), fmt_sig(s_e));

    let scene = Scene {
        dsm: &dsm,
        ortho: &ortho,
        centerline: &centerline,
        truth: &truth,
        side: cfg.patch_side_m,
        px: cfg.patch_px,
    };
    let mut manifest = Manifest {
        samples: Vec::new(),
        subsets: vec![args.subset_id.clone()],
    };
    let (mut filtered, mut skipped) = (0usize, 0usize);
    for (i, sq) in squares.iter().enumerate() {
        let name = format!("{}_{i:04}", args.subset_id);
        let sample = match scene.sample(sq, &args.subset_id) {
            Ok(s) => s,
            Err(e) => {
                eprintln!("note: square {i} ({name}) skipped [{}]: {e}", e.class());
                skipped += 1;
                continue;
            }
        };
        if !range_filter(&sample, cfg.range_threshold_m) {
            eprintln!(
                "note: square {i} ({name}) filtered: DSM range {} m",
                fmt_sig(sample.dsm_stats.max - sample.dsm_stats.min)
            );
            filtered += 1;
            continue;
        }
        write_sample(&sample, out.join(&name))?;
        manifest.samples.push(name);
    }
    write_manifest(&manifest, out.join(MANIFEST_FILE))?;
    println!(
        "squares: {}  written: {}  filtered: {}  skipped: {}",
        squares.len(),
        manifest.samples.len(),
        filtered,
        skipped
    );
    Ok(())
}
