//! `ggmlink export`: re-emit networks from an existing summary in the
//! requested formats.

use std::path::PathBuf;

use anyhow::{bail, Result};
use clap::Args;
use serde::{Deserialize, Serialize};

use ggmlink::export as net;

use crate::config::{self, load_file_config, resolve_out_dir, write_manifest};
use crate::summary::load_summary;

#[derive(Debug, Args)]
pub struct ExportArgs {
    /// TOML configuration file (flags override file values).
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Summary JSON produced by `select`.
    #[arg(long)]
    pub summary: Option<PathBuf>,
    /// Output directory; relative paths resolve against $GGMLINK_OUTPUT_ROOT.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Formats to write: any of `edges`, `graphml`, `dot` (default all).
    #[arg(long, value_delimiter = ',')]
    pub formats: Option<Vec<String>>,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct ResolvedExport {
    pub summary: PathBuf,
    pub out: PathBuf,
    pub formats: Vec<String>,
}

pub fn run(args: &ExportArgs) -> Result<()> {
    let file = load_file_config(args.config.as_deref())?;
    let summary_path = config::require(
        args.summary.clone(),
        file.export.summary.clone(),
        "--summary (or [export] summary in the config file)",
    )?;
    let out = config::require(
        args.out.clone(),
        file.global.out.clone(),
        "--out (or [global] out in the config file)",
    )?;
    let formats = args
        .formats
        .clone()
        .or_else(|| file.export.formats.clone())
        .unwrap_or_else(|| vec!["edges".into(), "graphml".into(), "dot".into()]);
    for f in &formats {
        if !matches!(f.as_str(), "edges" | "graphml" | "dot") {
            bail!("unknown export format '{f}' (expected edges, graphml, or dot)");
        }
    }
    let resolved = ResolvedExport {
        summary: summary_path.clone(),
        out: resolve_out_dir(&out),
        formats,
    };
    super::ensure_out_dir(&resolved.out)?;
    write_manifest(&resolved.out, "export", &resolved)?;

    let dto = load_summary(&summary_path)?;
    let selected = dto.selected_matrices()?;
    let ppi = dto.ppi_matrices()?;
    let names = dto.var_names.as_deref();

    if resolved.formats.iter().any(|f| f == "edges") {
        net::write_edge_list_csv(&resolved.out.join("edges.csv"), &selected, &ppi)?;
    }
    for (g, graph) in selected.iter().enumerate() {
        if resolved.formats.iter().any(|f| f == "graphml") {
            net::write_graphml(
                &resolved.out.join(super::group_file("group", g, "graphml")),
                graph,
                Some(&ppi[g]),
                names,
            )?;
        }
        if resolved.formats.iter().any(|f| f == "dot") {
            net::write_dot(
                &resolved.out.join(super::group_file("group", g, "dot")),
                graph,
                Some(&ppi[g]),
                names,
            )?;
        }
    }
    println!("exported {} format(s) to {}", resolved.formats.len(), resolved.out.display());
    Ok(())
}
