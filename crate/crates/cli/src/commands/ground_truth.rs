// SPDX-License-Identifier: Apache-2.0

use std::path::PathBuf;

use clap::Args;
use wse_core::linear_ref::read_polyline_csv;
use wse_core::numfmt::fmt_sig;
use wse_core::pipeline::ground_truth_build;
use wse_core::regress::FitDocument;

use crate::config::RunConfig;
use crate::error::CliResult;
use crate::inputs::read_truth_points;
use crate::output::{ensure_dir, write_json};

#[derive(Debug, Args)]
pub struct GroundTruthArgs {
    /// WSE points, `chainage_m,wse_m` or `x,y,wse_m`.
    #[arg(long)]
    pub points: PathBuf,
    /// Centerline for projecting `x,y` points.
    #[arg(long)]
    pub centerline: Option<PathBuf>,
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Output fit JSON.
    #[arg(long)]
    pub out: PathBuf,
}

pub fn run(args: &GroundTruthArgs) -> CliResult<()> {
    let cfg = RunConfig::load(args.config.as_deref())?;
    let centerline = args.centerline.as_deref().map(read_polyline_csv).transpose()?;
    let points = read_truth_points(&args.points, centerline.as_ref())?;
    let (fit, s_e) = ground_truth_build(&points, cfg.truth_degree, &cfg.truth_breakpoints_m)?;
    if let Some(parent) = args.out.parent().filter(|p| !p.as_os_str().is_empty()) {
        ensure_dir(parent)?;
    }
    write_json(&args.out, &FitDocument::piecewise(&fit, Some(s_e)))?;
    println!(
        "{} points, degree {}, {} segment(s), S_e = {} m",
        points.len(),
        fit.degree,
        fit.segments.len(),
        fmt_sig(s_e)
    );
    Ok(())
}
