//! DC network model, sensitivity factors and direct flow solves.

mod dcflow;
mod model;
mod sensitivity;

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use nalgebra::DMatrix;

pub use dcflow::dc_power_flow;
pub use model::{Branch, GridIssue, GridModel, HvdcLink, Node, PhaseShifter, Topology};
pub use sensitivity::{compute_lodf, compute_psdf, compute_ptdf, SensitivityBundle};

#[derive(Debug, thiserror::Error)]
pub enum GridError {
    #[error("invalid grid: {}", .0.join("; "))]
    Validation(Vec<String>),
    #[error("grid is not connected")]
    Disconnected,
    #[error("islanding contingency: outage of branch '{0}' splits the grid")]
    IslandingContingency(String),
    #[error("dimension mismatch for {what}: expected {expected}, got {got}")]
    DimensionMismatch {
        what: &'static str,
        expected: usize,
        got: usize,
    },
    #[error("node deltas are unbalanced by {0} MW")]
    Unbalanced(f64),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// Writes `ptdf.csv`, `psdf.csv` and `lodf.csv` into `dir`. Rows are branch
/// ids, columns node / phase shifter / outage branch ids.
pub fn write_sensitivities(bundle: &SensitivityBundle, dir: &Path) -> Result<(), GridError> {
    std::fs::create_dir_all(dir)?;
    let topo = &bundle.topology;
    let all_branches: Vec<&str> = topo.branch_ids.iter().map(String::as_str).collect();
    let monitored: Vec<&str> = topo
        .monitored
        .iter()
        .map(|&b| topo.branch_ids[b].as_str())
        .collect();
    let outages: Vec<&str> = topo
        .outages
        .iter()
        .map(|&b| topo.branch_ids[b].as_str())
        .collect();
    let nodes: Vec<&str> = topo.node_ids.iter().map(String::as_str).collect();
    let psts: Vec<&str> = topo.pst_ids.iter().map(String::as_str).collect();
    write_matrix(&dir.join("ptdf.csv"), &all_branches, &nodes, &bundle.ptdf)?;
    write_matrix(&dir.join("psdf.csv"), &all_branches, &psts, &bundle.psdf)?;
    write_matrix(&dir.join("lodf.csv"), &monitored, &outages, &bundle.lodf)?;
    Ok(())
}

fn write_matrix(
    path: &Path,
    rows: &[&str],
    cols: &[&str],
    m: &DMatrix<f64>,
) -> std::io::Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    write!(w, "branch")?;
    for c in cols {
        write!(w, ",{c}")?;
    }
    writeln!(w)?;
    for (i, r) in rows.iter().enumerate() {
        write!(w, "{r}")?;
        for j in 0..cols.len() {
            write!(w, ",{:?}", m[(i, j)])?;
        }
        writeln!(w)?;
    }
    w.flush()
}
