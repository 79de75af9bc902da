// SPDX-License-Identifier: Apache-2.0

//! `wse`: water surface elevation workflows from UAV photogrammetry.

mod commands;
mod config;
mod error;
mod inputs;
mod output;
mod svg;

use std::process::ExitCode;

use clap::{Parser, Subcommand};

use commands::{evaluate, extract, ground_truth, kfold, water_edge};

#[derive(Debug, Parser)]
#[command(name = "wse", version, about = "Water surface elevation from UAV photogrammetry")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Read the DSM along a water-edge line, filter outliers and fit a line.
    WaterEdge(water_edge::WaterEdgeArgs),
    /// Cut DSM/orthophoto samples at squares and label them with ground truth.
    ExtractDataset(extract::ExtractArgs),
    /// Score per-sample predictions against ground-truth fits.
    Evaluate(evaluate::EvaluateArgs),
    /// Leave-one-subset-out fold plan from a dataset manifest.
    KfoldPlan(kfold::KfoldArgs),
    /// Fit a ground-truth WSE profile to point measurements.
    GroundTruth(ground_truth::GroundTruthArgs),
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::WaterEdge(a) => water_edge::run(a),
        Command::ExtractDataset(a) => extract::run(a),
        Command::Evaluate(a) => evaluate::run(a),
        Command::KfoldPlan(a) => kfold::run(a),
        Command::GroundTruth(a) => ground_truth::run(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("wse: error[{}]: {e}", e.class());
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
