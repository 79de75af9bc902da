// SPDX-License-Identifier: Apache-2.0

use std::path::PathBuf;

use clap::Args;
use wse_core::dataset::read_manifest;
use wse_core::pipeline::kfold_plan;

use crate::error::CliResult;
use crate::output::{ensure_dir, write_json};

#[derive(Debug, Args)]
pub struct KfoldArgs {
    #[arg(long)]
    pub manifest: PathBuf,
    /// Output fold plan JSON.
    #[arg(long)]
    pub out: PathBuf,
}

pub fn run(args: &KfoldArgs) -> CliResult<()> {
    let manifest = read_manifest(&args.manifest)?;
    let plan = kfold_plan(&manifest.subsets)?;
    if let Some(parent) = args.out.parent().filter(|p| !p.as_os_str().is_empty()) {
        ensure_dir(parent)?;
    }
    write_json(&args.out, &plan)?;
    println!("{} folds", plan.folds.len());
    Ok(())
}
