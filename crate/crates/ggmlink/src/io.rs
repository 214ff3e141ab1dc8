//! Serialization contracts.
//!
//! JSON artifacts use explicit row-major matrix DTOs (`{rows, cols, data}`)
//! so files are self-describing and independent of in-memory layout:
//!
//! * chain output: `{"schema": "ggmlink.chain_output.v1", k, p, seed, n_kept,
//!   edge_counts, phi_draws, omega_mean, omega_m2, phi_proposals, phi_accepts,
//!   sweeps_run, invalid_retained}`
//! * checkpoint: `{"schema": "ggmlink.checkpoint.v1", config, sweeps_done,
//!   state: {omega, graphs, phi}, rng, partial}` — `rng` is the serialized
//!   ChaCha20 stream state and should be treated as opaque.
//!
//! Tabular data uses CSV: group data files carry a header row of variable
//! names (required, identical across groups); matrix files (precisions,
//! graphs) are plain numeric grids without headers.

use std::fs::File;
use std::io::{BufReader, BufWriter, Write};
use std::path::Path;

use nalgebra::DMatrix;
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{ChainOutput, ChainState, GroupDataset};
use crate::sampler::{Checkpoint, SamplerConfig};

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MatrixDto<T> {
    pub rows: usize,
    pub cols: usize,
    /// Row-major entries, length rows*cols.
    pub data: Vec<T>,
}

impl<T: nalgebra::Scalar + Copy> MatrixDto<T> {
    pub fn from_matrix(m: &DMatrix<T>) -> Self {
        let (rows, cols) = (m.nrows(), m.ncols());
        let mut data = Vec::with_capacity(rows * cols);
        for r in 0..rows {
            for c in 0..cols {
                data.push(m[(r, c)]);
            }
        }
        MatrixDto { rows, cols, data }
    }

    pub fn to_matrix(&self) -> Result<DMatrix<T>>
    where
        T: num_default::Zeroed,
    {
        if self.data.len() != self.rows * self.cols {
            return Err(Error::Dimension(format!(
                "matrix dto {}x{} with {} entries",
                self.rows,
                self.cols,
                self.data.len()
            )));
        }
        let mut m = DMatrix::from_element(self.rows, self.cols, num_default::Zeroed::zeroed());
        for r in 0..self.rows {
            for c in 0..self.cols {
                m[(r, c)] = self.data[r * self.cols + c];
            }
        }
        Ok(m)
    }
}

/// Tiny helper trait so the DTO can build matrices for every element type we
/// serialize without pulling in a numeric-traits dependency.
#[doc(hidden)]
pub mod num_default {
    pub trait Zeroed: Copy {
        fn zeroed() -> Self;
    }
    impl Zeroed for f64 {
        fn zeroed() -> Self {
            0.0
        }
    }
    impl Zeroed for u32 {
        fn zeroed() -> Self {
            0
        }
    }
    impl Zeroed for u8 {
        fn zeroed() -> Self {
            0
        }
    }
}

#[derive(Debug, Serialize, Deserialize)]
pub struct ChainStateDto {
    pub omega: Vec<MatrixDto<f64>>,
    pub graphs: Vec<MatrixDto<u8>>,
    pub phi: MatrixDto<f64>,
}

impl ChainStateDto {
    pub fn from_state(s: &ChainState) -> Self {
        ChainStateDto {
            omega: s.omega.iter().map(MatrixDto::from_matrix).collect(),
            graphs: s.graphs.iter().map(MatrixDto::from_matrix).collect(),
            phi: MatrixDto::from_matrix(&s.phi),
        }
    }

    pub fn to_state(&self) -> Result<ChainState> {
        Ok(ChainState {
            omega: self.omega.iter().map(MatrixDto::to_matrix).collect::<Result<_>>()?,
            graphs: self.graphs.iter().map(MatrixDto::to_matrix).collect::<Result<_>>()?,
            phi: self.phi.to_matrix()?,
        })
    }
}

pub const CHAIN_OUTPUT_SCHEMA: &str = "ggmlink.chain_output.v1";
pub const CHECKPOINT_SCHEMA: &str = "ggmlink.checkpoint.v1";

#[derive(Debug, Serialize, Deserialize)]
pub struct ChainOutputDto {
    pub schema: String,
    pub k: usize,
    pub p: usize,
    pub seed: u64,
    pub n_kept: usize,
    pub edge_counts: Vec<MatrixDto<u32>>,
    pub phi_draws: Vec<MatrixDto<f64>>,
    pub omega_mean: Vec<MatrixDto<f64>>,
    pub omega_m2: Vec<MatrixDto<f64>>,
    pub phi_proposals: usize,
    pub phi_accepts: usize,
    pub sweeps_run: usize,
    pub invalid_retained: usize,
}

impl ChainOutputDto {
    pub fn from_output(o: &ChainOutput) -> Self {
        ChainOutputDto {
            schema: CHAIN_OUTPUT_SCHEMA.to_string(),
            k: o.k,
            p: o.p,
            seed: o.seed,
            n_kept: o.n_kept,
            edge_counts: o.edge_counts.iter().map(MatrixDto::from_matrix).collect(),
            phi_draws: o.phi_draws.iter().map(MatrixDto::from_matrix).collect(),
            omega_mean: o.omega_mean.iter().map(MatrixDto::from_matrix).collect(),
            omega_m2: o.omega_m2.iter().map(MatrixDto::from_matrix).collect(),
            phi_proposals: o.phi_proposals,
            phi_accepts: o.phi_accepts,
            sweeps_run: o.sweeps_run,
            invalid_retained: o.invalid_retained,
        }
    }

    pub fn to_output(&self) -> Result<ChainOutput> {
        if self.schema != CHAIN_OUTPUT_SCHEMA {
            return Err(Error::MalformedInput {
                path: String::new(),
                detail: format!("unexpected schema {}", self.schema),
            });
        }
        Ok(ChainOutput {
            k: self.k,
            p: self.p,
            seed: self.seed,
            n_kept: self.n_kept,
            edge_counts: self.edge_counts.iter().map(MatrixDto::to_matrix).collect::<Result<_>>()?,
            phi_draws: self.phi_draws.iter().map(MatrixDto::to_matrix).collect::<Result<_>>()?,
            omega_mean: self.omega_mean.iter().map(MatrixDto::to_matrix).collect::<Result<_>>()?,
            omega_m2: self.omega_m2.iter().map(MatrixDto::to_matrix).collect::<Result<_>>()?,
            phi_proposals: self.phi_proposals,
            phi_accepts: self.phi_accepts,
            sweeps_run: self.sweeps_run,
            invalid_retained: self.invalid_retained,
        })
    }
}

#[derive(Debug, Serialize, Deserialize)]
pub struct CheckpointDto {
    pub schema: String,
    pub config: SamplerConfig,
    pub sweeps_done: usize,
    pub state: ChainStateDto,
    pub rng: rand_chacha::ChaCha20Rng,
    pub partial: ChainOutputDto,
}

pub fn save_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let file = File::create(path).map_err(|e| Error::io(path.display().to_string(), e))?;
    let mut w = BufWriter::new(file);
    serde_json::to_writer(&mut w, value)?;
    w.flush().map_err(|e| Error::io(path.display().to_string(), e))?;
    Ok(())
}

pub fn load_json<T: DeserializeOwned>(path: &Path) -> Result<T> {
    let file = File::open(path).map_err(|e| Error::io(path.display().to_string(), e))?;
    let r = BufReader::new(file);
    Ok(serde_json::from_reader(r)?)
}

pub fn save_chain_output(path: &Path, output: &ChainOutput) -> Result<()> {
    save_json(path, &ChainOutputDto::from_output(output))
}

pub fn load_chain_output(path: &Path) -> Result<ChainOutput> {
    let dto: ChainOutputDto = load_json(path)?;
    dto.to_output().map_err(|e| match e {
        Error::MalformedInput { detail, .. } => Error::MalformedInput {
            path: path.display().to_string(),
            detail,
        },
        other => other,
    })
}

pub fn save_checkpoint(path: &Path, cp: &Checkpoint) -> Result<()> {
    let dto = CheckpointDto {
        schema: CHECKPOINT_SCHEMA.to_string(),
        config: cp.config,
        sweeps_done: cp.sweeps_done,
        state: ChainStateDto::from_state(&cp.state),
        rng: cp.rng.clone(),
        partial: ChainOutputDto::from_output(&cp.partial),
    };
    save_json(path, &dto)
}

pub fn load_checkpoint(path: &Path) -> Result<Checkpoint> {
    let dto: CheckpointDto = load_json(path)?;
    if dto.schema != CHECKPOINT_SCHEMA {
        return Err(Error::MalformedInput {
            path: path.display().to_string(),
            detail: format!("unexpected schema {}", dto.schema),
        });
    }
    Ok(Checkpoint {
        config: dto.config,
        sweeps_done: dto.sweeps_done,
        state: dto.state.to_state()?,
        rng: dto.rng,
        partial: dto.partial.to_output()?,
    })
}

/// Writes a numeric matrix as a headerless CSV grid.
pub fn write_matrix_csv(path: &Path, m: &DMatrix<f64>) -> Result<()> {
    let mut w = csv::Writer::from_path(path).map_err(|e| Error::csv(path.display().to_string(), e))?;
    for r in 0..m.nrows() {
        let row: Vec<String> = (0..m.ncols()).map(|c| format!("{:.17e}", m[(r, c)])).collect();
        w.write_record(&row).map_err(|e| Error::csv(path.display().to_string(), e))?;
    }
    w.flush().map_err(|e| Error::io(path.display().to_string(), e))?;
    Ok(())
}

pub fn read_matrix_csv(path: &Path) -> Result<DMatrix<f64>> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(false)
        .from_path(path)
        .map_err(|e| Error::csv(path.display().to_string(), e))?;
    let mut rows: Vec<Vec<f64>> = Vec::new();
    for rec in rdr.records() {
        let rec = rec.map_err(|e| Error::csv(path.display().to_string(), e))?;
        let row: std::result::Result<Vec<f64>, _> =
            rec.iter().map(|f| f.trim().parse::<f64>()).collect();
        let row = row.map_err(|e| Error::MalformedInput {
            path: path.display().to_string(),
            detail: format!("non-numeric cell: {e}"),
        })?;
        rows.push(row);
    }
    matrix_from_rows(path, rows)
}

/// Writes a binary adjacency matrix as a headerless CSV grid of 0/1.
pub fn write_graph_csv(path: &Path, g: &DMatrix<u8>) -> Result<()> {
    let mut w = csv::Writer::from_path(path).map_err(|e| Error::csv(path.display().to_string(), e))?;
    for r in 0..g.nrows() {
        let row: Vec<String> = (0..g.ncols()).map(|c| g[(r, c)].to_string()).collect();
        w.write_record(&row).map_err(|e| Error::csv(path.display().to_string(), e))?;
    }
    w.flush().map_err(|e| Error::io(path.display().to_string(), e))?;
    Ok(())
}

pub fn read_graph_csv(path: &Path) -> Result<DMatrix<u8>> {
    let m = read_matrix_csv(path)?;
    let mut g = DMatrix::<u8>::zeros(m.nrows(), m.ncols());
    for c in 0..m.ncols() {
        for r in 0..m.nrows() {
            let v = m[(r, c)];
            if v != 0.0 && v != 1.0 {
                return Err(Error::MalformedInput {
                    path: path.display().to_string(),
                    detail: format!("graph cell ({r},{c}) = {v}, expected 0/1"),
                });
            }
            g[(r, c)] = v as u8;
        }
    }
    Ok(g)
}

fn matrix_from_rows(path: &Path, rows: Vec<Vec<f64>>) -> Result<DMatrix<f64>> {
    if rows.is_empty() {
        return Err(Error::MalformedInput {
            path: path.display().to_string(),
            detail: "empty matrix file".into(),
        });
    }
    let cols = rows[0].len();
    if rows.iter().any(|r| r.len() != cols) {
        return Err(Error::MalformedInput {
            path: path.display().to_string(),
            detail: "ragged rows".into(),
        });
    }
    let mut m = DMatrix::<f64>::zeros(rows.len(), cols);
    for (r, row) in rows.iter().enumerate() {
        for (c, &v) in row.iter().enumerate() {
            m[(r, c)] = v;
        }
    }
    Ok(m)
}

/// Writes one group's observations with a variable-name header row.
pub fn write_data_csv(path: &Path, x: &DMatrix<f64>, var_names: &[String]) -> Result<()> {
    if var_names.len() != x.ncols() {
        return Err(Error::Dimension(format!(
            "{} names for {} columns",
            var_names.len(),
            x.ncols()
        )));
    }
    let mut w = csv::Writer::from_path(path).map_err(|e| Error::csv(path.display().to_string(), e))?;
    w.write_record(var_names).map_err(|e| Error::csv(path.display().to_string(), e))?;
    for r in 0..x.nrows() {
        let row: Vec<String> = (0..x.ncols()).map(|c| format!("{:.10}", x[(r, c)])).collect();
        w.write_record(&row).map_err(|e| Error::csv(path.display().to_string(), e))?;
    }
    w.flush().map_err(|e| Error::io(path.display().to_string(), e))?;
    Ok(())
}

fn read_data_csv(path: &Path) -> Result<(Vec<String>, DMatrix<f64>)> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(true)
        .from_path(path)
        .map_err(|e| Error::csv(path.display().to_string(), e))?;
    let names: Vec<String> = rdr
        .headers()
        .map_err(|e| Error::csv(path.display().to_string(), e))?
        .iter()
        .map(|s| s.trim().to_string())
        .collect();
    let mut rows: Vec<Vec<f64>> = Vec::new();
    for rec in rdr.records() {
        let rec = rec.map_err(|e| Error::csv(path.display().to_string(), e))?;
        let row: std::result::Result<Vec<f64>, _> =
            rec.iter().map(|f| f.trim().parse::<f64>()).collect();
        rows.push(row.map_err(|e| Error::MalformedInput {
            path: path.display().to_string(),
            detail: format!("non-numeric cell: {e}"),
        })?);
    }
    let m = matrix_from_rows(path, rows)?;
    if m.ncols() != names.len() {
        return Err(Error::MalformedInput {
            path: path.display().to_string(),
            detail: format!("{} header names but {} data columns", names.len(), m.ncols()),
        });
    }
    Ok((names, m))
}

/// Reads one CSV per group (header row of variable names required and
/// identical across files), centers, and optionally scales.
pub fn read_group_csvs(paths: &[impl AsRef<Path>], scale: bool) -> Result<GroupDataset> {
    if paths.is_empty() {
        return Err(Error::InvalidArgument("no data files given".into()));
    }
    let mut names: Option<Vec<String>> = None;
    let mut raw = Vec::with_capacity(paths.len());
    for p in paths {
        let (file_names, x) = read_data_csv(p.as_ref())?;
        match &names {
            None => names = Some(file_names),
            Some(expect) => {
                if *expect != file_names {
                    return Err(Error::MalformedInput {
                        path: p.as_ref().display().to_string(),
                        detail: "variable names differ from the first group file".into(),
                    });
                }
            }
        }
        raw.push(x);
    }
    GroupDataset::from_matrices(&raw, scale)?.with_var_names(names.unwrap())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::Hyperparameters;
    use crate::sampler::{run_chain, SamplerConfig};
    use rand::SeedableRng;
    use rand_chacha::ChaCha20Rng;
    use rand_distr::{Distribution, StandardNormal};

    #[test]
    fn matrix_dto_round_trip_row_major() {
        let m = DMatrix::from_row_slice(2, 3, &[1.0, 2.0, 3.0, 4.0, 5.0, 6.0]);
        let dto = MatrixDto::from_matrix(&m);
        assert_eq!(dto.data, vec![1.0, 2.0, 3.0, 4.0, 5.0, 6.0]);
        let back = dto.to_matrix().unwrap();
        assert_eq!(m, back);
    }

    #[test]
    fn chain_output_json_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let mut rng = ChaCha20Rng::seed_from_u64(0);
        let raw: Vec<DMatrix<f64>> = (0..2)
            .map(|_| DMatrix::from_fn(20, 4, |_, _| StandardNormal.sample(&mut rng)))
            .collect();
        let data = crate::model::center_by_group(&raw).unwrap();
        let hyper = Hyperparameters::new(0.05, 0.5, 1.0, 0.2).unwrap();
        let config = SamplerConfig { burn_in: 10, keep: 30, thin: 1, seed: 4, ..Default::default() };
        let out = run_chain(&data, &hyper, &config).unwrap();
        let path = dir.path().join("chain.json");
        save_chain_output(&path, &out).unwrap();
        let back = load_chain_output(&path).unwrap();
        assert_eq!(back.n_kept, out.n_kept);
        assert_eq!(back.edge_counts, out.edge_counts);
        assert_eq!(back.phi_draws.len(), out.phi_draws.len());
        assert!((&back.omega_mean[0] - &out.omega_mean[0]).amax() == 0.0);
    }

    #[test]
    fn matrix_csv_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let m = DMatrix::from_row_slice(2, 2, &[1.25, -0.5, 1e-12, 3.0]);
        let path = dir.path().join("m.csv");
        write_matrix_csv(&path, &m).unwrap();
        let back = read_matrix_csv(&path).unwrap();
        assert!((&m - &back).amax() < 1e-15);
    }

    #[test]
    fn group_csv_contract() {
        let dir = tempfile::tempdir().unwrap();
        let names = vec!["a".to_string(), "b".to_string()];
        let x1 = DMatrix::from_row_slice(3, 2, &[1.0, 2.0, 3.0, 4.0, 5.0, 6.0]);
        let x2 = DMatrix::from_row_slice(2, 2, &[1.0, 0.0, 0.0, 1.0]);
        let p1 = dir.path().join("g1.csv");
        let p2 = dir.path().join("g2.csv");
        write_data_csv(&p1, &x1, &names).unwrap();
        write_data_csv(&p2, &x2, &names).unwrap();
        let ds = read_group_csvs(&[&p1, &p2], false).unwrap();
        assert_eq!(ds.k(), 2);
        assert_eq!(ds.p(), 2);
        assert_eq!(ds.var_names().unwrap(), &["a".to_string(), "b".to_string()]);
        assert!(ds.is_centered());

        // Mismatched headers are rejected.
        let bad = dir.path().join("g3.csv");
        write_data_csv(&bad, &x2, &["a".to_string(), "z".to_string()]).unwrap();
        assert!(read_group_csvs(&[&p1, &bad], false).is_err());
    }

    #[test]
    fn graph_csv_rejects_non_binary() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("g.csv");
        let m = DMatrix::from_row_slice(2, 2, &[0.0, 0.5, 0.5, 0.0]);
        write_matrix_csv(&path, &m).unwrap();
        assert!(read_graph_csv(&path).is_err());
        let g = DMatrix::<u8>::from_row_slice(2, 2, &[0, 1, 1, 0]);
        write_graph_csv(&path, &g).unwrap();
        assert_eq!(read_graph_csv(&path).unwrap(), g);
    }
}
