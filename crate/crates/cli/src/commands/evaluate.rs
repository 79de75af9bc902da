// SPDX-License-Identifier: Apache-2.0

use std::collections::{BTreeMap, BTreeSet};
use std::path::PathBuf;

use clap::Args;
use wse_core::pipeline::{evaluate_predictions, read_predictions_csv, SubsetEvaluation};
use wse_core::regress::{PiecewisePolyFit, Predict};
use wse_core::Error;

use crate::config::RunConfig;
use crate::error::{CliError, CliResult};
use crate::inputs::load_fit;
use crate::output::{ensure_dir, write_json, write_text};
use crate::svg::{Band, Chart, Series};

#[derive(Debug, Args)]
pub struct EvaluateArgs {
    /// Predictions CSV: `subset_id,sample_id,chainage_m,wse_pred_m[,uncertainty_m]`.
    #[arg(long)]
    pub preds: PathBuf,
    /// Directory holding one `<subset_id>.json` truth fit per subset.
    #[arg(long)]
    pub truth: PathBuf,
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub out: PathBuf,
}

pub fn run(args: &EvaluateArgs) -> CliResult<()> {
    let cfg = RunConfig::load(args.config.as_deref())?;
    if !args.truth.is_dir() {
        return Err(CliError::Usage(format!(
            "--truth {} is not a directory",
            args.truth.display()
        )));
    }
    let preds = read_predictions_csv(&args.preds)?;
    let ids: BTreeSet<&str> = preds.iter().map(|p| p.subset_id.as_str()).collect();
    let mut truth: BTreeMap<String, PiecewisePolyFit> = BTreeMap::new();
    for id in ids {
        let path = args.truth.join(format!("{id}.json"));
        if id.contains(['/', '\\']) || !path.is_file() {
            eprintln!("note: no truth fit at {}", path.display());
            return Err(CliError::Core(Error::UnknownSubset(id.to_string())));
        }
        truth.insert(id.to_string(), load_fit(&path)?.0);
    }

    let evals = evaluate_predictions(&preds, &truth, &cfg.eval_options(cfg.prediction_sd_window))?;
    let out = args.out.as_path();
    ensure_dir(out)?;
    let reports: Vec<_> = evals.iter().map(|e| e.report.rounded()).collect();
    write_json(&out.join("report.json"), &reports)?;
    for e in &evals {
        let id = &e.report.subset_id;
        e.band.write_csv(out.join(format!("{id}_band.csv")))?;
        write_text(&out.join(format!("{id}_predictions.svg")), &predictions_figure(e, &truth[id]))?;
        write_text(&out.join(format!("{id}_band.svg")), &band_figure(e))?;
    }
    for r in &reports {
        println!(
            "{}: n={}  rmse points {} m  rmse regression {} m  mean uncertainty {} m  uce {}",
            r.subset_id, r.n, r.rmse_points_m, r.rmse_regression_m, r.mean_uncertainty_m, r.uce_native
        );
    }
    Ok(())
}

fn predictions_figure(e: &SubsetEvaluation, truth: &PiecewisePolyFit) -> String {
    let chain = e.series.chainage();
    Chart {
        title: format!("{}: predictions against ground truth", e.report.subset_id),
        x_label: "Chainage [m]".into(),
        y_label: "WSE [m MSL]".into(),
        bands: Vec::new(),
        series: vec![
            Series::line("ground truth", "#2ca02c", chain.iter().map(|&c| (c, truth.predict(c))).collect()),
            Series::markers("predictions", "#1f77b4", e.series.points().collect()),
            Series::line(
                "regression",
                "#d62728",
                chain.iter().map(|&c| (c, e.report.fit.predict(c))).collect(),
            ),
        ],
    }
    .render()
}

fn band_figure(e: &SubsetEvaluation) -> String {
    Chart {
        title: format!("{}: uncertainty band", e.report.subset_id),
        x_label: "Chainage [m]".into(),
        y_label: "WSE [m MSL]".into(),
        bands: vec![Band {
            label: "regression ± moving SD".into(),
            color: "#9ecae1",
            points: e
                .band
                .points
                .iter()
                .map(|b| (b.chainage, b.center - b.half_width, b.center + b.half_width))
                .collect(),
        }],
        series: vec![Series::line(
            "regression",
            "#d62728",
            e.band.points.iter().map(|b| (b.chainage, b.center)).collect(),
        )],
    }
    .render()
}
