//! `ggmlink select`: pool chains into a posterior summary, select the median
//! model, resample precision estimates, and export networks and tables.

use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use clap::Args;
use nalgebra::DMatrix;
use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;
use serde::{Deserialize, Serialize};

use ggmlink::inference::{edge_overlap_table, summarize, OverlapTable};
use ggmlink::metrics::graph_metrics;
use ggmlink::model::{default_pi, ChainOutput, Hyperparameters};
use ggmlink::sampler::{resample_omega, SamplerConfig};
use ggmlink::{export, io};

use crate::config::{self, load_file_config, pick, resolve_out_dir, write_manifest};
use crate::summary::{save_summary, SummaryDto};

#[derive(Debug, Args)]
pub struct SelectArgs {
    /// TOML configuration file (flags override file values).
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Chain output JSON files produced by `fit`.
    #[arg(long, value_delimiter = ',')]
    pub chains: Option<Vec<PathBuf>>,
    /// The data CSVs the chains were fit on (needed for resampling).
    #[arg(long, value_delimiter = ',')]
    pub data: Option<Vec<PathBuf>>,
    /// Output directory; relative paths resolve against $GGMLINK_OUTPUT_ROOT.
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// PPI threshold for the selected (median) model.
    #[arg(long)]
    pub threshold: Option<f64>,
    #[arg(long)]
    pub v0: Option<f64>,
    #[arg(long)]
    pub v1: Option<f64>,
    #[arg(long)]
    pub lambda: Option<f64>,
    #[arg(long)]
    pub pi: Option<f64>,
    /// Standardize columns during ingestion (must match the fit run).
    #[arg(long)]
    pub scale: bool,
    /// Skip conditional resampling; report pooled posterior means instead.
    #[arg(long)]
    pub no_resample: bool,
    #[arg(long)]
    pub resample_burn_in: Option<usize>,
    #[arg(long)]
    pub resample_keep: Option<usize>,
    /// Variable-subset files (one name or 1-based index per line); each adds
    /// an overlap table restricted to that block.
    #[arg(long = "subset")]
    pub subsets: Vec<PathBuf>,
    /// Random-graph replicates behind the topology baselines.
    #[arg(long)]
    pub n_random_graphs: Option<usize>,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct ResolvedSelect {
    pub chains: Vec<PathBuf>,
    pub data: Option<Vec<PathBuf>>,
    pub out: PathBuf,
    pub seed: u64,
    pub threshold: f64,
    pub v0: f64,
    pub v1: f64,
    pub lambda: f64,
    pub pi: Option<f64>,
    pub scale: bool,
    pub resample: bool,
    pub resample_burn_in: usize,
    pub resample_keep: usize,
    pub subsets: Vec<PathBuf>,
    pub n_random_graphs: usize,
}

pub fn resolve(args: &SelectArgs) -> Result<ResolvedSelect> {
    let file = load_file_config(args.config.as_deref())?;
    let chains = config::require(
        args.chains.clone().filter(|v| !v.is_empty()),
        file.select.chains.clone(),
        "--chains (or [select] chains in the config file)",
    )?;
    let out = config::require(
        args.out.clone(),
        file.global.out.clone(),
        "--out (or [global] out in the config file)",
    )?;
    let no_resample = args.no_resample || file.select.no_resample.unwrap_or(false);
    Ok(ResolvedSelect {
        chains,
        data: args.data.clone().or_else(|| file.select.data.clone()),
        out: resolve_out_dir(&out),
        seed: pick(args.seed, file.global.seed, 0),
        threshold: pick(args.threshold, file.select.threshold, 0.5),
        v0: pick(args.v0, file.select.v0, 0.01),
        v1: pick(args.v1, file.select.v1, 0.1),
        lambda: pick(args.lambda, file.select.lambda, 1.0),
        pi: args.pi.or(file.select.pi),
        scale: args.scale || file.select.scale.unwrap_or(false),
        resample: !no_resample,
        resample_burn_in: pick(args.resample_burn_in, file.select.resample_burn_in, 500),
        resample_keep: pick(args.resample_keep, file.select.resample_keep, 2_000),
        subsets: if args.subsets.is_empty() {
            file.select.subsets.clone().unwrap_or_default()
        } else {
            args.subsets.clone()
        },
        n_random_graphs: pick(args.n_random_graphs, file.select.n_random_graphs, 100),
    })
}

pub fn run(args: &SelectArgs) -> Result<()> {
    let resolved = resolve(args)?;
    if !(0.0..=1.0).contains(&resolved.threshold) {
        bail!("--threshold must lie in [0, 1]");
    }
    super::ensure_out_dir(&resolved.out)?;
    write_manifest(&resolved.out, "select", &resolved)?;

    let outputs: Vec<ChainOutput> = resolved
        .chains
        .iter()
        .map(|p| io::load_chain_output(p).with_context(|| format!("loading {}", p.display())))
        .collect::<Result<_>>()?;
    let mut summary = summarize(&outputs, resolved.threshold)?;

    // Conditional resampling of the precision estimates needs the data.
    let dataset = match &resolved.data {
        Some(paths) => Some(io::read_group_csvs(paths, resolved.scale)?),
        None => None,
    };
    let mut resampled = false;
    if resolved.resample {
        let dataset = dataset.as_ref().context(
            "conditional resampling needs --data; pass --no-resample to skip it",
        )?;
        let pi = match resolved.pi {
            Some(v) => v,
            None => default_pi(dataset.p())?,
        };
        let hyper = Hyperparameters::new(resolved.v0, resolved.v1, resolved.lambda, pi)?;
        let config = SamplerConfig {
            burn_in: resolved.resample_burn_in,
            keep: resolved.resample_keep,
            thin: 1,
            seed: resolved.seed,
            fix_phi_identity: false,
            ..SamplerConfig::default()
        };
        summary.omega_hat =
            resample_omega(dataset, &summary.selected_graphs, &summary.phi_hat, &hyper, &config)?;
        resampled = true;
    }

    let var_names = dataset.as_ref().and_then(|d| d.var_names().map(<[String]>::to_vec));
    let phi_acceptance: Vec<Option<f64>> =
        outputs.iter().map(ChainOutput::phi_acceptance_rate).collect();
    let dto = SummaryDto::from_summary(
        &summary,
        resolved.threshold,
        var_names.as_deref(),
        resampled,
        phi_acceptance,
    );
    save_summary(&resolved.out.join("summary.json"), &dto)?;

    export::write_edge_list_csv(
        &resolved.out.join("edges.csv"),
        &summary.selected_graphs,
        &summary.ppi,
    )?;
    for (g, graph) in summary.selected_graphs.iter().enumerate() {
        export::write_graphml(
            &resolved.out.join(super::group_file("group", g, "graphml")),
            graph,
            Some(&summary.ppi[g]),
            var_names.as_deref(),
        )?;
        export::write_dot(
            &resolved.out.join(super::group_file("group", g, "dot")),
            graph,
            Some(&summary.ppi[g]),
            var_names.as_deref(),
        )?;
    }

    let full_overlap = edge_overlap_table(&summary.selected_graphs, None)?;
    write_overlap_csv(&resolved.out.join("overlap.csv"), &full_overlap)?;
    for subset_path in &resolved.subsets {
        let indices = parse_subset_file(subset_path, var_names.as_deref(), dto.p)?;
        let table = edge_overlap_table(&summary.selected_graphs, Some(&indices))?;
        let stem = subset_path
            .file_stem()
            .and_then(|s| s.to_str())
            .unwrap_or("subset");
        write_overlap_csv(&resolved.out.join(format!("overlap_{stem}.csv")), &table)?;
    }

    write_topology_csv(
        &resolved.out.join("graph_metrics.csv"),
        &summary.selected_graphs,
        resolved.n_random_graphs,
        resolved.seed,
    )?;

    let edge_counts: Vec<usize> =
        summary.selected_graphs.iter().map(|g| ggmlink::simgen::edge_count(g)).collect();
    println!(
        "selected edges per group: {edge_counts:?}; kept sweeps pooled: {}",
        summary.n_kept_total
    );
    if let Some(corr) = summary.ppi_cross_chain {
        println!("cross-chain PPI correlation: {corr:.4}");
    }
    if let Some(max) = dto.rhat_max {
        println!("max R-hat: {max:.4} ({} parameter(s) above 1.1)", dto.rhat_over_threshold);
    }
    println!("wrote {}", resolved.out.join("summary.json").display());
    Ok(())
}

/// Subset files: one entry per line, either a variable name from the data
/// header or a 1-based index; blank lines and `#` comments are skipped.
pub fn parse_subset_file(
    path: &Path,
    var_names: Option<&[String]>,
    p: usize,
) -> Result<Vec<usize>> {
    let text = std::fs::read_to_string(path)
        .with_context(|| format!("reading subset file {}", path.display()))?;
    let mut indices = Vec::new();
    for (lineno, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        if let Ok(idx) = line.parse::<usize>() {
            if idx < 1 || idx > p {
                bail!(
                    "{}:{}: index {idx} outside 1..={p}",
                    path.display(),
                    lineno + 1
                );
            }
            indices.push(idx - 1);
        } else {
            let names = var_names.with_context(|| {
                format!(
                    "{}:{}: subset entry '{line}' is a name but no variable names are available \
                     (pass --data with a named header)",
                    path.display(),
                    lineno + 1
                )
            })?;
            let idx = names.iter().position(|n| n == line).with_context(|| {
                format!("{}:{}: unknown variable '{line}'", path.display(), lineno + 1)
            })?;
            indices.push(idx);
        }
    }
    indices.sort_unstable();
    indices.dedup();
    if indices.is_empty() {
        bail!("subset file {} selects no variables", path.display());
    }
    Ok(indices)
}

pub fn write_overlap_csv(path: &Path, table: &OverlapTable) -> Result<()> {
    let k = table.counts.nrows();
    let mut writer = csv::Writer::from_path(path)
        .with_context(|| format!("writing overlap table {}", path.display()))?;
    let mut header = vec!["group".to_string(), "edges".to_string(), "unique".to_string()];
    header.extend((1..=k).map(|g| format!("shared_with_{g}")));
    writer.write_record(&header)?;
    for a in 0..k {
        let mut row = vec![
            (a + 1).to_string(),
            table.counts[(a, a)].to_string(),
            table.unique[a].to_string(),
        ];
        row.extend((0..k).map(|b| table.counts[(a, b)].to_string()));
        writer.write_record(&row)?;
    }
    writer.flush()?;
    Ok(())
}

/// Per-group small-world summary rows; groups whose graphs are too sparse for
/// the metrics emit `NA` fields.
pub fn write_topology_csv(
    path: &Path,
    graphs: &[DMatrix<u8>],
    n_random: usize,
    seed: u64,
) -> Result<()> {
    let mut writer = csv::Writer::from_path(path)
        .with_context(|| format!("writing graph metrics {}", path.display()))?;
    writer.write_record(["group", "clustering", "path_length", "gamma", "lambda", "sigma"])?;
    for (g, graph) in graphs.iter().enumerate() {
        let mut rng = ChaCha20Rng::seed_from_u64(seed ^ ((g as u64) << 32));
        match graph_metrics(graph, n_random, &mut rng) {
            Some(m) => writer.write_record([
                (g + 1).to_string(),
                format!("{:.6}", m.clustering),
                format!("{:.6}", m.path_length),
                format!("{:.6}", m.gamma),
                format!("{:.6}", m.lambda),
                format!("{:.6}", m.sigma),
            ])?,
            None => writer.write_record([
                (g + 1).to_string(),
                "NA".into(),
                "NA".into(),
                "NA".into(),
                "NA".into(),
                "NA".into(),
            ])?,
        }
    }
    writer.flush()?;
    Ok(())
}
