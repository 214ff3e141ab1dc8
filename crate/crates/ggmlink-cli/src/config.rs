//! Configuration loading and the run manifest.
//!
//! Every subcommand accepts `--config <file.toml>` holding per-command
//! sections plus a `[global]` section; command-line flags override file
//! values. Each run writes `manifest.json` into its output directory echoing
//! the fully resolved configuration and the software version, so a run can be
//! reproduced exactly from its manifest.

use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use serde::{Deserialize, Serialize};

/// Environment variable naming the directory that relative `--out` paths are
/// resolved against.
pub const OUTPUT_ROOT_ENV: &str = "GGMLINK_OUTPUT_ROOT";

#[derive(Debug, Default, Clone, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct FileConfig {
    pub global: GlobalSection,
    pub simulate: SimulateSection,
    pub fit: FitSection,
    pub select: SelectSection,
    pub evaluate: EvaluateSection,
    pub export: ExportSection,
}

#[derive(Debug, Default, Clone, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct GlobalSection {
    pub seed: Option<u64>,
    pub out: Option<PathBuf>,
}

#[derive(Debug, Default, Clone, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SimulateSection {
    pub replicates: Option<usize>,
    pub n_communities: Option<usize>,
    pub community_size: Option<usize>,
    pub n_per_group: Option<usize>,
    pub derivations: Option<Vec<ggmlink::simgen::GroupDerivation>>,
}

#[derive(Debug, Default, Clone, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct FitSection {
    pub data: Option<Vec<PathBuf>>,
    pub chains: Option<usize>,
    pub burn_in: Option<usize>,
    pub keep: Option<usize>,
    pub thin: Option<usize>,
    pub v0: Option<f64>,
    pub v1: Option<f64>,
    pub lambda: Option<f64>,
    pub pi: Option<f64>,
    pub fix_phi_identity: Option<bool>,
    pub phi_proposal_floor: Option<f64>,
    pub scale: Option<bool>,
    pub checkpoint_every: Option<usize>,
}

#[derive(Debug, Default, Clone, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SelectSection {
    pub chains: Option<Vec<PathBuf>>,
    pub data: Option<Vec<PathBuf>>,
    pub threshold: Option<f64>,
    pub resample_burn_in: Option<usize>,
    pub resample_keep: Option<usize>,
    pub no_resample: Option<bool>,
    pub subsets: Option<Vec<PathBuf>>,
    pub v0: Option<f64>,
    pub v1: Option<f64>,
    pub lambda: Option<f64>,
    pub pi: Option<f64>,
    pub scale: Option<bool>,
    pub n_random_graphs: Option<usize>,
}

#[derive(Debug, Default, Clone, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct EvaluateSection {
    pub truth: Option<Vec<PathBuf>>,
    pub summary: Option<Vec<PathBuf>>,
    pub n_random_graphs: Option<usize>,
}

#[derive(Debug, Default, Clone, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ExportSection {
    pub summary: Option<PathBuf>,
    pub formats: Option<Vec<String>>,
}

/// Load a TOML config file, or the empty default when no path is given.
pub fn load_file_config(path: Option<&Path>) -> Result<FileConfig> {
    match path {
        None => Ok(FileConfig::default()),
        Some(p) => {
            let text = std::fs::read_to_string(p)
                .with_context(|| format!("reading config file {}", p.display()))?;
            toml::from_str(&text).with_context(|| format!("parsing config file {}", p.display()))
        }
    }
}

/// Resolve the output directory: absolute paths pass through; relative paths
/// are joined onto `GGMLINK_OUTPUT_ROOT` when that variable is set.
pub fn resolve_out_dir(out: &Path) -> PathBuf {
    if out.is_absolute() {
        return out.to_path_buf();
    }
    match std::env::var_os(OUTPUT_ROOT_ENV) {
        Some(root) if !root.is_empty() => PathBuf::from(root).join(out),
        _ => out.to_path_buf(),
    }
}

/// Run manifest: fully resolved configuration plus provenance of the run.
#[derive(Debug, Serialize, Deserialize)]
pub struct Manifest<C> {
    pub schema: String,
    pub version: String,
    pub command: String,
    pub config: C,
}

pub fn write_manifest<C: Serialize>(out_dir: &Path, command: &str, config: &C) -> Result<PathBuf> {
    let manifest = Manifest {
        schema: "ggmlink.manifest.v1".to_string(),
        version: env!("CARGO_PKG_VERSION").to_string(),
        command: command.to_string(),
        config,
    };
    let path = out_dir.join("manifest.json");
    let text = serde_json::to_string_pretty(&manifest).context("serializing manifest")?;
    std::fs::write(&path, text + "\n")
        .with_context(|| format!("writing manifest {}", path.display()))?;
    Ok(path)
}

/// Flag-over-file precedence helper.
pub fn pick<T>(flag: Option<T>, file: Option<T>, default: T) -> T {
    flag.or(file).unwrap_or(default)
}

/// Flag-over-file precedence for values with no default (must be present).
pub fn require<T>(flag: Option<T>, file: Option<T>, what: &str) -> Result<T> {
    flag.or(file).with_context(|| format!("missing required option: {what}"))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn toml_sections_parse_and_reject_typos() {
        let text = r#"
[global]
seed = 7

[fit]
chains = 2
burn_in = 100
v0 = 0.02

[simulate]
replicates = 3
n_communities = 2
community_size = 20

[[simulate.derivations]]
kind = "perturb"
n_remove = 2
n_add = 2

[[simulate.derivations]]
kind = "remove"
n = 8
"#;
        let cfg: FileConfig = toml::from_str(text).unwrap();
        assert_eq!(cfg.global.seed, Some(7));
        assert_eq!(cfg.fit.chains, Some(2));
        assert_eq!(cfg.simulate.derivations.as_ref().unwrap().len(), 2);
        assert!(matches!(
            cfg.simulate.derivations.as_ref().unwrap()[1],
            ggmlink::simgen::GroupDerivation::Remove { n: 8 }
        ));

        let bad = "[fit]\nchians = 2\n";
        assert!(toml::from_str::<FileConfig>(bad).is_err(), "typo must be rejected");
    }

    #[test]
    fn precedence_flag_over_file_over_default() {
        assert_eq!(pick(Some(1), Some(2), 3), 1);
        assert_eq!(pick(None, Some(2), 3), 2);
        assert_eq!(pick::<i32>(None, None, 3), 3);
        assert!(require::<i32>(None, None, "x").is_err());
        assert_eq!(require(None, Some(5), "x").unwrap(), 5);
    }
}
