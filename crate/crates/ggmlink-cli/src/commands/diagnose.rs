//! `ggmlink diagnose`: convergence diagnostics across chains.

use std::collections::BTreeMap;
use std::path::PathBuf;

use anyhow::{bail, Context, Result};
use clap::Args;
use serde::Serialize;

use ggmlink::inference::{ppi_cross_chain_correlation, rhat_report};
use ggmlink::io;
use ggmlink::model::ChainOutput;

use crate::config::{resolve_out_dir, write_manifest};

#[derive(Debug, Args)]
pub struct DiagnoseArgs {
    /// Chain output JSON files produced by `fit` (need >= 2 for R-hat).
    #[arg(long, value_delimiter = ',', required = true)]
    pub chains: Vec<PathBuf>,
    /// Output directory; relative paths resolve against $GGMLINK_OUTPUT_ROOT.
    #[arg(long, required = true)]
    pub out: PathBuf,
}

#[derive(Debug, Serialize)]
pub struct DiagnosticsReport {
    pub schema: String,
    pub n_chains: usize,
    pub rhat_available: bool,
    pub rhat_max: Option<f64>,
    pub rhat_over_threshold: usize,
    /// The ten largest R-hat values, worst first.
    pub worst: Vec<(String, f64)>,
    pub rhat: BTreeMap<String, f64>,
    pub ppi_cross_chain: Option<f64>,
    pub phi_acceptance: Vec<Option<f64>>,
    pub kept_counts: Vec<usize>,
}

#[derive(Debug, Serialize)]
struct ResolvedDiagnose {
    chains: Vec<PathBuf>,
    out: PathBuf,
}

pub fn run(args: &DiagnoseArgs) -> Result<()> {
    let out = resolve_out_dir(&args.out);
    super::ensure_out_dir(&out)?;
    write_manifest(
        &out,
        "diagnose",
        &ResolvedDiagnose { chains: args.chains.clone(), out: out.clone() },
    )?;

    let outputs: Vec<ChainOutput> = args
        .chains
        .iter()
        .map(|p| io::load_chain_output(p).with_context(|| format!("loading {}", p.display())))
        .collect::<Result<_>>()?;
    if outputs.is_empty() {
        bail!("no chain files given");
    }

    let (rhat, available) = if outputs.len() >= 2 {
        (rhat_report(&outputs)?, true)
    } else {
        eprintln!("warning: only one chain supplied; R-hat diagnostics skipped");
        (BTreeMap::new(), false)
    };
    let mut sorted: Vec<(String, f64)> = rhat.iter().map(|(k, &v)| (k.clone(), v)).collect();
    sorted.sort_by(|a, b| b.1.total_cmp(&a.1));
    let report = DiagnosticsReport {
        schema: "ggmlink.diagnostics.v1".to_string(),
        n_chains: outputs.len(),
        rhat_available: available,
        rhat_max: sorted.first().map(|&(_, v)| v),
        rhat_over_threshold: rhat.values().filter(|&&v| v > 1.1).count(),
        worst: sorted.into_iter().take(10).collect(),
        rhat,
        ppi_cross_chain: ppi_cross_chain_correlation(&outputs),
        phi_acceptance: outputs.iter().map(ChainOutput::phi_acceptance_rate).collect(),
        kept_counts: outputs.iter().map(|o| o.n_kept).collect(),
    };

    let text = serde_json::to_string_pretty(&report).context("serializing diagnostics")?;
    std::fs::write(out.join("diagnostics.json"), text + "\n")
        .context("writing diagnostics.json")?;

    if let Some(max) = report.rhat_max {
        println!(
            "max R-hat: {max:.4} over {} parameter(s); {} above 1.1",
            report.rhat.len(),
            report.rhat_over_threshold
        );
        for (name, value) in &report.worst {
            println!("  {name}: {value:.4}");
        }
    }
    if let Some(corr) = report.ppi_cross_chain {
        println!("cross-chain PPI correlation: {corr:.4}");
    }
    for (c, acc) in report.phi_acceptance.iter().enumerate() {
        match acc {
            Some(a) => println!("chain {}: phi acceptance {a:.3}", c + 1),
            None => println!("chain {}: phi fixed at identity", c + 1),
        }
    }
    println!("wrote {}", out.join("diagnostics.json").display());
    Ok(())
}
