// SPDX-License-Identifier: Apache-2.0

use std::path::{Path, PathBuf};

use clap::Args;
use wse_core::linear_ref::{read_polyline_csv, Polyline};
use wse_core::numfmt::fmt_sig;
use wse_core::pipeline::{evaluate_series, water_edge_workflow};
use wse_core::raster::load_dsm_ascii;
use wse_core::regress::{std_error_estimate, FitDocument, PiecewisePolyFit, Predict};
use wse_core::smoothing::write_series_csv;

use crate::config::RunConfig;
use crate::error::CliResult;
use crate::inputs::load_fit;
use crate::output::{ensure_dir, write_json, write_text};
use crate::svg::{Band, Chart, Series};

#[derive(Debug, Args)]
pub struct WaterEdgeArgs {
    /// DSM as an ESRI ASCII grid.
    #[arg(long)]
    pub dsm: PathBuf,
    /// Water-edge line, CSV with `x,y` columns.
    #[arg(long)]
    pub edge: PathBuf,
    /// Ground-truth fit JSON; adds report.json.
    #[arg(long)]
    pub truth: Option<PathBuf>,
    /// Centerline the truth fit is referenced to. Without it the truth is
    /// read at edge-line chainage.
    #[arg(long, requires = "truth")]
    pub centerline: Option<PathBuf>,
    /// Subset name used in the report. Defaults to the DSM file stem.
    #[arg(long)]
    pub subset_id: Option<String>,
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub out: PathBuf,
}

/// Truth profile on the centerline, read at edge-line chainage by
/// projecting each edge point across.
struct AcrossChannel<'a> {
    edge: &'a Polyline,
    centerline: &'a Polyline,
    truth: &'a PiecewisePolyFit,
}

impl Predict for AcrossChannel<'_> {
    fn predict(&self, chainage: f64) -> f64 {
        let p = self.edge.point_at(chainage);
        self.truth.predict(self.centerline.project_chainage(p.x, p.y))
    }
}

pub fn run(args: &WaterEdgeArgs) -> CliResult<()> {
    let cfg = RunConfig::load(args.config.as_deref())?;
    let dsm = load_dsm_ascii(&args.dsm)?;
    let edge = read_polyline_csv(&args.edge)?;
    let result = water_edge_workflow(&dsm, &edge, &cfg.water_edge_options())?;

    let out = args.out.as_path();
    ensure_dir(out)?;
    write_series_csv(&result.kept, out.join("kept.csv"))?;
    write_series_csv(&result.removed, out.join("removed.csv"))?;
    let kept_pts: Vec<(f64, f64)> = result.kept.points().collect();
    let s_e = std_error_estimate(&kept_pts, &result.fit).ok();
    write_json(&out.join("fit.json"), &FitDocument::linear(&result.fit, s_e))?;
    result.band.write_csv(out.join("band.csv"))?;
    write_text(&out.join("water_edge.svg"), &figure(&result))?;

    println!(
        "readings: {}  kept: {}  removed: {}  nodata dropped: {}",
        result.raw.len(),
        result.kept.len(),
        result.removed.len(),
        result.nodata_dropped
    );
    println!(
        "fit: wse = {} * chainage + {}",
        fmt_sig(result.fit.slope),
        fmt_sig(result.fit.intercept)
    );

    if let Some(truth_path) = &args.truth {
        let (truth, _) = load_fit(truth_path)?;
        let subset = subset_name(args.subset_id.as_deref(), &args.dsm);
        let opts = cfg.eval_options(cfg.edge_sd_window);
        let eval = match &args.centerline {
            Some(c) => {
                let centerline = read_polyline_csv(c)?;
                let across = AcrossChannel {
                    edge: &edge,
                    centerline: &centerline,
                    truth: &truth,
                };
                evaluate_series(&subset, &result.kept, &across, None, &opts)?
            }
            None => evaluate_series(&subset, &result.kept, &truth, None, &opts)?,
        };
        let report = eval.report.rounded();
        println!(
            "rmse points: {} m  rmse regression: {} m",
            report.rmse_points_m, report.rmse_regression_m
        );
        write_json(&out.join("report.json"), &vec![report])?;
    }
    Ok(())
}

fn subset_name(explicit: Option<&str>, dsm: &Path) -> String {
    explicit.map(str::to_string).unwrap_or_else(|| {
        dsm.file_stem()
            .map(|s| s.to_string_lossy().into_owned())
            .unwrap_or_else(|| "subset".into())
    })
}

fn figure(r: &wse_core::pipeline::WaterEdgeResult) -> String {
    let fit_line: Vec<(f64, f64)> = r.band.points.iter().map(|b| (b.chainage, b.center)).collect();
    Chart {
        title: "Water-edge DSM readings".into(),
        x_label: "Chainage [m]".into(),
        y_label: "Elevation [m MSL]".into(),
        bands: vec![Band {
            label: "fit ± moving SD".into(),
            color: "#9ecae1",
            points: r
                .band
                .points
                .iter()
                .map(|b| (b.chainage, b.center - b.half_width, b.center + b.half_width))
                .collect(),
        }],
        series: vec![
            Series::line("raw", "#bbbbbb", r.raw.points().collect()),
            Series::line("filtered", "#1f77b4", r.kept.points().collect()),
            Series::line("regression", "#d62728", fit_line),
        ],
    }
    .render()
}
