//! Direct DC power flow solve, used to cross-check the linear sensitivity
//! predictions against a fresh network solution.

use nalgebra::{DMatrix, DVector};

use super::model::Topology;
use super::GridError;

/// Solves `B theta = P` on the network with `outage` removed and returns
/// branch flows in MW (`NaN` for the outaged branch).
///
/// `injections` are MW per node; any imbalance is taken by the slack.
/// `shifts` are phase-shift angles in degrees per branch, modelled as an
/// angle source in series with the branch reactance.
pub fn dc_power_flow(
    topo: &Topology,
    injections: &[f64],
    shifts: &[f64],
    outage: Option<usize>,
) -> Result<Vec<f64>, GridError> {
    let n = topo.n_nodes();
    if injections.len() != n {
        return Err(GridError::DimensionMismatch {
            what: "injections",
            expected: n,
            got: injections.len(),
        });
    }
    if shifts.len() != topo.n_branches() {
        return Err(GridError::DimensionMismatch {
            what: "shifts",
            expected: topo.n_branches(),
            got: shifts.len(),
        });
    }
    if !topo.is_connected_without(outage) {
        let b = outage
            .map(|b| topo.branch_ids[b].clone())
            .unwrap_or_default();
        return Err(GridError::IslandingContingency(b));
    }
    let base = topo.base_mva;
    let deg = std::f64::consts::PI / 180.0;
    let mut b = DMatrix::<f64>::zeros(n, n);
    let mut rhs = DVector::<f64>::from_iterator(n, injections.iter().map(|p| p / base));
    for (k, &(f, t)) in topo.ends.iter().enumerate() {
        if Some(k) == outage {
            continue;
        }
        let s = topo.susceptance[k];
        b[(f, f)] += s;
        b[(t, t)] += s;
        b[(f, t)] -= s;
        b[(t, f)] -= s;
        let a = shifts[k] * deg;
        rhs[f] -= s * a;
        rhs[t] += s * a;
    }
    // Ground the slack angle.
    let slack = topo.slack;
    for j in 0..n {
        b[(slack, j)] = 0.0;
        b[(j, slack)] = 0.0;
    }
    b[(slack, slack)] = 1.0;
    rhs[slack] = 0.0;
    let theta = b.lu().solve(&rhs).ok_or(GridError::Disconnected)?;
    Ok(topo
        .ends
        .iter()
        .enumerate()
        .map(|(k, &(f, t))| {
            if Some(k) == outage {
                f64::NAN
            } else {
                base * topo.susceptance[k] * (theta[f] - theta[t] + shifts[k] * deg)
            }
        })
        .collect())
}
