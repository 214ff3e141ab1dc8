//! Network export: selected graphs as edge-list CSV (the interchange format
//! for scoring external methods), GraphML, and DOT.
//!
//! Edge-list CSV contract: header `group,node_i,node_j,ppi`; one row per
//! selected edge; `group` and the node indices are 1-based; `ppi` is the
//! inclusion probability (or any score in [0, 1]) of that edge. Unlisted
//! pairs are non-edges with score 0.

use std::io::Write as _;
use std::path::Path;

use nalgebra::DMatrix;

use crate::error::{Error, Result};

/// Graphs plus per-edge scores parsed from an edge-list CSV.
#[derive(Debug, Clone)]
pub struct EdgeListFile {
    pub graphs: Vec<DMatrix<u8>>,
    pub scores: Vec<DMatrix<f64>>,
}

/// Write selected graphs (with their edge scores) in the edge-list contract.
pub fn write_edge_list_csv(
    path: &Path,
    graphs: &[DMatrix<u8>],
    scores: &[DMatrix<f64>],
) -> Result<()> {
    if graphs.len() != scores.len() {
        return Err(Error::Dimension("graph/score group counts differ".into()));
    }
    let mut writer = csv::Writer::from_path(path).map_err(|e| Error::csv(path, e))?;
    writer
        .write_record(["group", "node_i", "node_j", "ppi"])
        .map_err(|e| Error::csv(path, e))?;
    for (g, (graph, score)) in graphs.iter().zip(scores).enumerate() {
        let p = graph.nrows();
        if score.nrows() != p || score.ncols() != p {
            return Err(Error::Dimension("score matrix shape mismatch".into()));
        }
        for j in 0..p {
            for i in 0..j {
                if graph[(i, j)] == 1 {
                    writer
                        .write_record([
                            (g + 1).to_string(),
                            (i + 1).to_string(),
                            (j + 1).to_string(),
                            format!("{:.6}", score[(i, j)]),
                        ])
                        .map_err(|e| Error::csv(path, e))?;
                }
            }
        }
    }
    writer.flush().map_err(|e| Error::io(path, e))?;
    Ok(())
}

/// Parse an edge-list CSV into `k` graphs over `p` nodes.
pub fn read_edge_list_csv(path: &Path, k: usize, p: usize) -> Result<EdgeListFile> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .from_path(path)
        .map_err(|e| Error::csv(path, e))?;
    let mut graphs = vec![DMatrix::<u8>::zeros(p, p); k];
    let mut scores = vec![DMatrix::<f64>::zeros(p, p); k];
    for (row_idx, record) in reader.records().enumerate() {
        let record = record.map_err(|e| Error::csv(path, e))?;
        if record.len() != 4 {
            return Err(Error::malformed(path, format!("row {}: expected 4 columns, got {}", row_idx + 2, record.len())));
        }
        let parse_index = |field: usize, name: &str, max: usize| -> Result<usize> {
            let raw = record.get(field).unwrap_or("").trim();
            let value: usize = raw.parse().map_err(|_| Error::malformed(path, format!("row {}: bad {name} '{raw}'", row_idx + 2)))?;
            if value < 1 || value > max {
                return Err(Error::malformed(path, format!("row {}: {name} {value} outside 1..={max}", row_idx + 2)));
            }
            Ok(value - 1)
        };
        let group = parse_index(0, "group", k)?;
        let a = parse_index(1, "node_i", p)?;
        let b = parse_index(2, "node_j", p)?;
        if a == b {
            return Err(Error::malformed(path, format!("row {}: self-loop on node {}", row_idx + 2, a + 1)));
        }
        let raw_score = record.get(3).unwrap_or("").trim();
        let score: f64 = raw_score.parse().map_err(|_| Error::malformed(path, format!("row {}: bad ppi '{raw_score}'", row_idx + 2)))?;
        if !(0.0..=1.0).contains(&score) {
            return Err(Error::malformed(path, format!("row {}: ppi {score} outside [0, 1]", row_idx + 2)));
        }
        let (i, j) = if a < b { (a, b) } else { (b, a) };
        graphs[group][(i, j)] = 1;
        graphs[group][(j, i)] = 1;
        scores[group][(i, j)] = score;
        scores[group][(j, i)] = score;
    }
    Ok(EdgeListFile { graphs, scores })
}

fn xml_escape(s: &str) -> String {
    s.replace('&', "&amp;")
        .replace('<', "&lt;")
        .replace('>', "&gt;")
        .replace('"', "&quot;")
        .replace('\'', "&apos;")
}

fn node_label(names: Option<&[String]>, index: usize) -> String {
    match names {
        Some(list) => list[index].clone(),
        None => format!("v{}", index + 1),
    }
}

/// Write one group's selected graph as GraphML with a string `label` node
/// attribute and a double `ppi` edge attribute.
pub fn write_graphml(
    path: &Path,
    graph: &DMatrix<u8>,
    scores: Option<&DMatrix<f64>>,
    var_names: Option<&[String]>,
) -> Result<()> {
    let p = graph.nrows();
    if let Some(names) = var_names {
        if names.len() != p {
            return Err(Error::Dimension("variable name count mismatch".into()));
        }
    }
    let file = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = std::io::BufWriter::new(file);
    let io_err = |e: std::io::Error| Error::io(path, e);
    writeln!(w, r#"<?xml version="1.0" encoding="UTF-8"?>"#).map_err(io_err)?;
    writeln!(w, r#"<graphml xmlns="http://graphml.graphdrawing.org/xmlns">"#).map_err(io_err)?;
    writeln!(w, r#"  <key id="label" for="node" attr.name="label" attr.type="string"/>"#)
        .map_err(io_err)?;
    writeln!(w, r#"  <key id="ppi" for="edge" attr.name="ppi" attr.type="double"/>"#)
        .map_err(io_err)?;
    writeln!(w, r#"  <graph id="G" edgedefault="undirected">"#).map_err(io_err)?;
    for i in 0..p {
        writeln!(
            w,
            r#"    <node id="n{i}"><data key="label">{}</data></node>"#,
            xml_escape(&node_label(var_names, i))
        )
        .map_err(io_err)?;
    }
    for j in 0..p {
        for i in 0..j {
            if graph[(i, j)] == 1 {
                let ppi = scores.map_or(1.0, |s| s[(i, j)]);
                writeln!(
                    w,
                    r#"    <edge source="n{i}" target="n{j}"><data key="ppi">{ppi:.6}</data></edge>"#
                )
                .map_err(io_err)?;
            }
        }
    }
    writeln!(w, "  </graph>").map_err(io_err)?;
    writeln!(w, "</graphml>").map_err(io_err)?;
    w.flush().map_err(io_err)?;
    Ok(())
}

fn dot_escape(s: &str) -> String {
    s.replace('\\', "\\\\").replace('"', "\\\"")
}

/// Write one group's selected graph in DOT format (undirected), edge scores
/// as `weight` attributes.
pub fn write_dot(
    path: &Path,
    graph: &DMatrix<u8>,
    scores: Option<&DMatrix<f64>>,
    var_names: Option<&[String]>,
) -> Result<()> {
    let p = graph.nrows();
    if let Some(names) = var_names {
        if names.len() != p {
            return Err(Error::Dimension("variable name count mismatch".into()));
        }
    }
    let file = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = std::io::BufWriter::new(file);
    let io_err = |e: std::io::Error| Error::io(path, e);
    writeln!(w, "graph network {{").map_err(io_err)?;
    writeln!(w, "  node [shape=ellipse];").map_err(io_err)?;
    for i in 0..p {
        writeln!(w, "  \"{}\";", dot_escape(&node_label(var_names, i))).map_err(io_err)?;
    }
    for j in 0..p {
        for i in 0..j {
            if graph[(i, j)] == 1 {
                let ppi = scores.map_or(1.0, |s| s[(i, j)]);
                writeln!(
                    w,
                    "  \"{}\" -- \"{}\" [weight={ppi:.6}];",
                    dot_escape(&node_label(var_names, i)),
                    dot_escape(&node_label(var_names, j)),
                )
                .map_err(io_err)?;
            }
        }
    }
    writeln!(w, "}}").map_err(io_err)?;
    w.flush().map_err(io_err)?;
    Ok(())
}
