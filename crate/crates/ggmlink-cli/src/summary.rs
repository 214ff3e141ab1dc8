//! JSON schema for the posterior summary written by `select` and consumed by
//! `evaluate` and `export` (`ggmlink.summary.v1`).

use std::collections::BTreeMap;
use std::path::Path;

use anyhow::{bail, Context, Result};
use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use ggmlink::inference::PosteriorSummary;
use ggmlink::io::MatrixDto;

pub const SUMMARY_SCHEMA: &str = "ggmlink.summary.v1";

#[derive(Debug, Serialize, Deserialize)]
pub struct SummaryDto {
    pub schema: String,
    pub k: usize,
    pub p: usize,
    pub threshold: f64,
    pub n_chains: usize,
    pub n_kept_total: usize,
    pub var_names: Option<Vec<String>>,
    pub ppi: Vec<MatrixDto<f64>>,
    pub selected_graphs: Vec<MatrixDto<u8>>,
    pub phi_hat: MatrixDto<f64>,
    /// Precision estimates: conditional resamples when `resampled` is true,
    /// otherwise the pooled posterior mean across all retained sweeps.
    pub omega_hat: Vec<MatrixDto<f64>>,
    pub resampled: bool,
    pub rhat: BTreeMap<String, f64>,
    pub rhat_max: Option<f64>,
    pub rhat_over_threshold: usize,
    pub ppi_cross_chain: Option<f64>,
    pub phi_acceptance: Vec<Option<f64>>,
}

impl SummaryDto {
    pub fn from_summary(
        summary: &PosteriorSummary,
        threshold: f64,
        var_names: Option<&[String]>,
        resampled: bool,
        phi_acceptance: Vec<Option<f64>>,
    ) -> Self {
        let finite_rhats: Vec<f64> = summary.rhat.values().copied().collect();
        let rhat_max = finite_rhats.iter().copied().reduce(f64::max);
        let (k, p) = match summary.ppi.first() {
            Some(m) => (summary.ppi.len(), m.nrows()),
            None => (0, 0),
        };
        SummaryDto {
            schema: SUMMARY_SCHEMA.to_string(),
            k,
            p,
            threshold,
            n_chains: summary.n_chains,
            n_kept_total: summary.n_kept_total,
            var_names: var_names.map(<[String]>::to_vec),
            ppi: summary.ppi.iter().map(MatrixDto::from_matrix).collect(),
            selected_graphs: summary.selected_graphs.iter().map(MatrixDto::from_matrix).collect(),
            phi_hat: MatrixDto::from_matrix(&summary.phi_hat),
            omega_hat: summary.omega_hat.iter().map(MatrixDto::from_matrix).collect(),
            resampled,
            rhat: summary.rhat.clone(),
            rhat_max,
            rhat_over_threshold: summary.rhat.values().filter(|&&r| r > 1.1).count(),
            ppi_cross_chain: summary.ppi_cross_chain,
            phi_acceptance,
        }
    }

    pub fn ppi_matrices(&self) -> Result<Vec<DMatrix<f64>>> {
        self.ppi.iter().map(|m| m.to_matrix().map_err(Into::into)).collect()
    }

    pub fn selected_matrices(&self) -> Result<Vec<DMatrix<u8>>> {
        self.selected_graphs.iter().map(|m| m.to_matrix().map_err(Into::into)).collect()
    }

    pub fn omega_matrices(&self) -> Result<Vec<DMatrix<f64>>> {
        self.omega_hat.iter().map(|m| m.to_matrix().map_err(Into::into)).collect()
    }
}

pub fn save_summary(path: &Path, dto: &SummaryDto) -> Result<()> {
    let text = serde_json::to_string_pretty(dto).context("serializing summary")?;
    std::fs::write(path, text + "\n")
        .with_context(|| format!("writing summary {}", path.display()))?;
    Ok(())
}

pub fn load_summary(path: &Path) -> Result<SummaryDto> {
    let text = std::fs::read_to_string(path)
        .with_context(|| format!("reading summary {}", path.display()))?;
    let dto: SummaryDto =
        serde_json::from_str(&text).with_context(|| format!("parsing summary {}", path.display()))?;
    if dto.schema != SUMMARY_SCHEMA {
        bail!("unsupported summary schema '{}' in {}", dto.schema, path.display());
    }
    Ok(dto)
}
