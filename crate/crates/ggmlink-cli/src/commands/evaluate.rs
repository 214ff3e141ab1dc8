//! `ggmlink evaluate`: score summaries (and external edge lists) against
//! simulated ground truth, per replicate and aggregated.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use clap::Args;
use nalgebra::DMatrix;
use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;
use serde::{Deserialize, Serialize};

use ggmlink::metrics::{
    confusion, differential_eval, frobenius_loss, graph_metrics, mean_sem, rates_and_mcc,
    Confusion,
};
use ggmlink::{export, io};

use crate::config::{self, load_file_config, pick, resolve_out_dir, write_manifest};
use crate::summary::load_summary;

#[derive(Debug, Args)]
pub struct EvaluateArgs {
    /// TOML configuration file (flags override file values).
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Replicate truth directories produced by `simulate` (paired with
    /// --summary by position).
    #[arg(long, value_delimiter = ',')]
    pub truth: Option<Vec<PathBuf>>,
    /// Summary JSON files produced by `select`, one per truth directory.
    /// May be omitted when only external methods are being scored.
    #[arg(long, value_delimiter = ',')]
    pub summary: Option<Vec<PathBuf>>,
    /// External method edge lists: `label=path1,path2,...` with one edge-list
    /// CSV per replicate. Repeatable.
    #[arg(long = "external")]
    pub externals: Vec<String>,
    /// Output directory; relative paths resolve against $GGMLINK_OUTPUT_ROOT.
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Random-graph replicates behind the topology baselines.
    #[arg(long)]
    pub n_random_graphs: Option<usize>,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct ResolvedEvaluate {
    pub truth: Vec<PathBuf>,
    pub summary: Vec<PathBuf>,
    pub externals: Vec<(String, Vec<PathBuf>)>,
    pub out: PathBuf,
    pub seed: u64,
    pub n_random_graphs: usize,
}

fn parse_external(raw: &str) -> Result<(String, Vec<PathBuf>)> {
    let (label, paths) = raw
        .split_once('=')
        .with_context(|| format!("--external '{raw}' must look like label=path[,path...]"))?;
    if label.is_empty() {
        bail!("--external '{raw}' has an empty label");
    }
    let paths: Vec<PathBuf> = paths.split(',').map(PathBuf::from).collect();
    Ok((label.to_string(), paths))
}

pub fn resolve(args: &EvaluateArgs) -> Result<ResolvedEvaluate> {
    let file = load_file_config(args.config.as_deref())?;
    let truth = config::require(
        args.truth.clone().filter(|v| !v.is_empty()),
        file.evaluate.truth.clone(),
        "--truth (or [evaluate] truth in the config file)",
    )?;
    let summary = args
        .summary
        .clone()
        .filter(|v| !v.is_empty())
        .or_else(|| file.evaluate.summary.clone())
        .unwrap_or_default();
    let out = config::require(
        args.out.clone(),
        file.global.out.clone(),
        "--out (or [global] out in the config file)",
    )?;
    if !summary.is_empty() && truth.len() != summary.len() {
        bail!(
            "--truth lists {} replicate(s) but --summary lists {}",
            truth.len(),
            summary.len()
        );
    }
    let externals = args
        .externals
        .iter()
        .map(|raw| parse_external(raw))
        .collect::<Result<Vec<_>>>()?;
    if summary.is_empty() && externals.is_empty() {
        bail!("nothing to evaluate: pass --summary and/or --external");
    }
    for (label, paths) in &externals {
        if paths.len() != truth.len() {
            bail!(
                "external method '{label}' lists {} file(s) for {} replicate(s)",
                paths.len(),
                truth.len()
            );
        }
    }
    Ok(ResolvedEvaluate {
        truth,
        summary,
        externals,
        out: resolve_out_dir(&out),
        seed: pick(args.seed, file.global.seed, 0),
        n_random_graphs: pick(args.n_random_graphs, file.evaluate.n_random_graphs, 100),
    })
}

/// Truth matrices loaded from one replicate directory.
pub struct ReplicateTruth {
    pub graphs: Vec<DMatrix<u8>>,
    pub omegas: Vec<DMatrix<f64>>,
}

pub fn load_truth_dir(dir: &Path) -> Result<ReplicateTruth> {
    let mut graphs = Vec::new();
    let mut omegas = Vec::new();
    for g in 0.. {
        let graph_path = dir.join(super::group_file("truth_graph", g, "csv"));
        if !graph_path.exists() {
            break;
        }
        graphs.push(io::read_graph_csv(&graph_path)?);
        omegas.push(io::read_matrix_csv(&dir.join(super::group_file("truth_omega", g, "csv")))?);
    }
    if graphs.is_empty() {
        bail!("no truth_graph*.csv files found in {}", dir.display());
    }
    Ok(ReplicateTruth { graphs, omegas })
}

/// A scored method for one replicate: selected graphs, full score matrices
/// when available, and precision estimates when available.
pub struct MethodReplicate {
    pub selected: Vec<DMatrix<u8>>,
    pub scores: Option<Vec<DMatrix<f64>>>,
    pub omega_hat: Option<Vec<DMatrix<f64>>>,
}

/// Flat metric rows for one method on one replicate. Pooled confusion runs
/// over all groups' upper-triangle positions.
pub fn score_replicate(
    method: &MethodReplicate,
    truth: &ReplicateTruth,
    n_random_graphs: usize,
    rng_seed: u64,
) -> Result<Vec<(String, f64)>> {
    let k = truth.graphs.len();
    if method.selected.len() != k {
        bail!("method reports {} group(s), truth has {k}", method.selected.len());
    }
    let mut rows: Vec<(String, f64)> = Vec::new();

    let mut pooled = Confusion::default();
    for g in 0..k {
        pooled.merge(&confusion(&method.selected[g], &truth.graphs[g])?);
    }
    let rates = rates_and_mcc(&pooled);
    rows.push(("tpr".into(), rates.tpr));
    rows.push(("fpr".into(), rates.fpr));
    rows.push(("mcc".into(), rates.mcc));

    if let Some(scores) = &method.scores {
        let mut scored: Vec<(f64, bool)> = Vec::new();
        let p = truth.graphs[0].nrows();
        for g in 0..k {
            for j in 0..p {
                for i in 0..j {
                    scored.push((scores[g][(i, j)], truth.graphs[g][(i, j)] == 1));
                }
            }
        }
        if let Some(auc) = ggmlink::metrics::auc_from_scores(&scored) {
            rows.push(("auc".into(), auc));
        }
    }

    if k >= 2 {
        let diff = differential_eval(&method.selected, method.scores.as_deref(), &truth.graphs)?;
        rows.push(("diff_tpr".into(), diff.rates.tpr));
        rows.push(("diff_fpr".into(), diff.rates.fpr));
        rows.push(("diff_mcc".into(), diff.rates.mcc));
        if let Some(auc) = diff.auc {
            rows.push(("diff_auc".into(), auc));
        }
    }

    if let Some(omega_hat) = &method.omega_hat {
        rows.push(("frobenius".into(), frobenius_loss(omega_hat, &truth.omegas)?));
    }

    let mut edge_total = 0usize;
    for (g, graph) in method.selected.iter().enumerate() {
        let count = ggmlink::simgen::edge_count(graph);
        edge_total += count;
        rows.push((format!("edges_g{}", g + 1), count as f64));
    }
    rows.push(("edges_mean".into(), edge_total as f64 / k as f64));

    for (g, graph) in method.selected.iter().enumerate() {
        let mut rng = ChaCha20Rng::seed_from_u64(rng_seed ^ ((g as u64) << 32));
        if let Some(m) = graph_metrics(graph, n_random_graphs, &mut rng) {
            rows.push((format!("gamma_g{}", g + 1), m.gamma));
            rows.push((format!("lambda_g{}", g + 1), m.lambda));
            rows.push((format!("sigma_g{}", g + 1), m.sigma));
        }
    }

    Ok(rows)
}

#[derive(Debug, Serialize)]
struct AggregateEntry {
    mean: f64,
    sem: f64,
    n: usize,
}

pub fn run(args: &EvaluateArgs) -> Result<()> {
    let resolved = resolve(args)?;
    super::ensure_out_dir(&resolved.out)?;
    write_manifest(&resolved.out, "evaluate", &resolved)?;

    let mut csv_writer = csv::Writer::from_path(resolved.out.join("metrics.csv"))
        .context("writing metrics.csv")?;
    csv_writer.write_record(["replicate", "method", "metric", "value"])?;

    // method -> metric -> per-replicate values
    let mut collected: BTreeMap<String, BTreeMap<String, Vec<f64>>> = BTreeMap::new();

    for (rep, truth_dir) in resolved.truth.iter().enumerate() {
        let truth = load_truth_dir(truth_dir)?;
        let p = truth.graphs[0].nrows();
        let k = truth.graphs.len();

        let mut methods: Vec<(String, MethodReplicate)> = Vec::new();
        if let Some(summary_path) = resolved.summary.get(rep) {
            let dto = load_summary(summary_path)?;
            if dto.k != k || dto.p != p {
                bail!(
                    "summary {} is {}x{} groups/vars, truth {} is {k}x{p}",
                    summary_path.display(),
                    dto.k,
                    dto.p,
                    truth_dir.display()
                );
            }
            let ours = MethodReplicate {
                selected: dto.selected_matrices()?,
                scores: Some(dto.ppi_matrices()?),
                omega_hat: Some(dto.omega_matrices()?),
            };
            methods.push(("ggmlink".into(), ours));
        }

        for (label, paths) in &resolved.externals {
            let parsed = export::read_edge_list_csv(&paths[rep], k, p)?;
            methods.push((
                label.clone(),
                MethodReplicate {
                    selected: parsed.graphs,
                    scores: Some(parsed.scores),
                    omega_hat: None,
                },
            ));
        }

        for (label, method) in &methods {
            let rows = score_replicate(
                method,
                &truth,
                resolved.n_random_graphs,
                resolved.seed + rep as u64,
            )?;
            for (metric, value) in rows {
                csv_writer.write_record([
                    (rep + 1).to_string(),
                    label.clone(),
                    metric.clone(),
                    format!("{value:.10}"),
                ])?;
                collected
                    .entry(label.clone())
                    .or_default()
                    .entry(metric)
                    .or_default()
                    .push(value);
            }
        }
    }
    csv_writer.flush()?;

    let aggregate: BTreeMap<String, BTreeMap<String, AggregateEntry>> = collected
        .iter()
        .map(|(label, metrics)| {
            let table = metrics
                .iter()
                .map(|(metric, values)| {
                    let (mean, sem) = mean_sem(values);
                    (metric.clone(), AggregateEntry { mean, sem, n: values.len() })
                })
                .collect();
            (label.clone(), table)
        })
        .collect();
    let text = serde_json::to_string_pretty(&aggregate).context("serializing aggregate")?;
    std::fs::write(resolved.out.join("aggregate.json"), text + "\n")
        .context("writing aggregate.json")?;

    for (label, metrics) in &collected {
        let fetch = |name: &str| {
            metrics.get(name).map(|v| mean_sem(v).0).map_or("-".to_string(), |m| format!("{m:.4}"))
        };
        println!(
            "{label}: mcc={} fpr={} auc={} diff_mcc={} frobenius={}",
            fetch("mcc"),
            fetch("fpr"),
            fetch("auc"),
            fetch("diff_mcc"),
            fetch("frobenius"),
        );
    }
    println!("wrote {}", resolved.out.join("metrics.csv").display());
    Ok(())
}
