//! Linear sensitivity factors of the DC network.
//!
//! All factors derive from the reduced nodal susceptance matrix (slack row and
//! column removed), factorized once per grid. Flows are positive in the
//! direction `from -> to` of each branch.

use nalgebra::DMatrix;

use super::model::Topology;
use super::GridError;

/// Degrees to radians, used to express phase-shift sensitivities per degree.
const DEG: f64 = std::f64::consts::PI / 180.0;

/// Inverse of the reduced susceptance matrix, expanded to full node size with
/// a zero row and column at the slack.
fn reduced_inverse(topo: &Topology) -> Result<DMatrix<f64>, GridError> {
    let n = topo.n_nodes();
    let slack = topo.slack;
    let reduce = |i: usize| if i < slack { i } else { i - 1 };
    let mut b = DMatrix::<f64>::zeros(n - 1, n - 1);
    for (k, &(f, t)) in topo.ends.iter().enumerate() {
        let s = topo.susceptance[k];
        if f != slack {
            b[(reduce(f), reduce(f))] += s;
        }
        if t != slack {
            b[(reduce(t), reduce(t))] += s;
        }
        if f != slack && t != slack {
            b[(reduce(f), reduce(t))] -= s;
            b[(reduce(t), reduce(f))] -= s;
        }
    }
    let inv = b.lu().try_inverse().ok_or(GridError::Disconnected)?;
    let mut full = DMatrix::<f64>::zeros(n, n);
    for i in (0..n).filter(|&i| i != slack) {
        for j in (0..n).filter(|&j| j != slack) {
            full[(i, j)] = inv[(reduce(i), reduce(j))];
        }
    }
    Ok(full)
}

/// Power transfer distribution factors, `[branch x node]`.
///
/// Entry `(l, n)` is the flow change on `l` for 1 MW injected at `n` and
/// withdrawn at the slack.
pub fn compute_ptdf(topo: &Topology) -> Result<DMatrix<f64>, GridError> {
    let x = reduced_inverse(topo)?;
    let mut ptdf = DMatrix::<f64>::zeros(topo.n_branches(), topo.n_nodes());
    for (l, &(f, t)) in topo.ends.iter().enumerate() {
        let s = topo.susceptance[l];
        for n in 0..topo.n_nodes() {
            ptdf[(l, n)] = s * (x[(f, n)] - x[(t, n)]);
        }
    }
    Ok(ptdf)
}

/// Phase shift distribution factors, `[branch x pst]`, in MW per degree.
pub fn compute_psdf(topo: &Topology, ptdf: &DMatrix<f64>) -> DMatrix<f64> {
    let mut psdf = DMatrix::<f64>::zeros(topo.n_branches(), topo.pst_branch.len());
    for (p, &k) in topo.pst_branch.iter().enumerate() {
        let (f, t) = topo.ends[k];
        let scale = topo.base_mva * topo.susceptance[k] * DEG;
        for l in 0..topo.n_branches() {
            let direct = if l == k { 1.0 } else { 0.0 };
            psdf[(l, p)] = scale * (direct - (ptdf[(l, f)] - ptdf[(l, t)]));
        }
    }
    psdf
}

/// Line outage distribution factors, `[monitored x outage]`.
///
/// The diagonal case (a monitored branch that is itself the outage) is
/// undefined and stored as NaN; callers skip it.
pub fn compute_lodf(topo: &Topology, ptdf: &DMatrix<f64>) -> Result<DMatrix<f64>, GridError> {
    for &c in &topo.outages {
        if !topo.is_connected_without(Some(c)) {
            return Err(GridError::IslandingContingency(topo.branch_ids[c].clone()));
        }
    }
    let mut lodf = DMatrix::<f64>::zeros(topo.monitored.len(), topo.outages.len());
    for (ci, &c) in topo.outages.iter().enumerate() {
        let (f, t) = topo.ends[c];
        let denom = 1.0 - (ptdf[(c, f)] - ptdf[(c, t)]);
        if denom.abs() < 1e-10 {
            return Err(GridError::IslandingContingency(topo.branch_ids[c].clone()));
        }
        for (li, &l) in topo.monitored.iter().enumerate() {
            lodf[(li, ci)] = if l == c {
                f64::NAN
            } else {
                (ptdf[(l, f)] - ptdf[(l, t)]) / denom
            };
        }
    }
    Ok(lodf)
}

/// Immutable set of sensitivities for one grid, shared across intervals.
#[derive(Clone, Debug)]
pub struct SensitivityBundle {
    pub topology: Topology,
    pub ptdf: DMatrix<f64>,
    pub psdf: DMatrix<f64>,
    pub lodf: DMatrix<f64>,
}

impl SensitivityBundle {
    pub fn compute(topo: Topology) -> Result<Self, GridError> {
        let ptdf = compute_ptdf(&topo)?;
        let psdf = compute_psdf(&topo, &ptdf);
        let lodf = compute_lodf(&topo, &ptdf)?;
        Ok(Self {
            topology: topo,
            ptdf,
            psdf,
            lodf,
        })
    }

    /// LODF of monitored position `li` with respect to outage position `ci`,
    /// `None` when both refer to the same branch.
    pub fn lodf_at(&self, li: usize, ci: usize) -> Option<f64> {
        let v = self.lodf[(li, ci)];
        (!v.is_nan()).then_some(v)
    }

    /// Branch flows for a nodal injection vector (MW), with the slack
    /// absorbing any imbalance.
    pub fn flows_from_injections(&self, injections: &[f64]) -> Vec<f64> {
        (0..self.topology.n_branches())
            .map(|l| {
                injections
                    .iter()
                    .enumerate()
                    .map(|(n, p)| self.ptdf[(l, n)] * p)
                    .sum()
            })
            .collect()
    }

    /// N-0 flows after adjustments: initial flows plus PTDF-weighted nodal
    /// deltas plus PSDF-weighted angle deltas.
    pub fn n0_flow(
        &self,
        initial_flows: &[f64],
        node_deltas: &[f64],
        pst_deltas: &[f64],
    ) -> Result<Vec<f64>, GridError> {
        let topo = &self.topology;
        check_len("initial_flows", topo.n_branches(), initial_flows.len())?;
        check_len("node_deltas", topo.n_nodes(), node_deltas.len())?;
        check_len("pst_deltas", topo.pst_branch.len(), pst_deltas.len())?;
        let sum: f64 = node_deltas.iter().sum();
        if sum.abs() > 1e-6 {
            return Err(GridError::Unbalanced(sum));
        }
        Ok((0..topo.n_branches())
            .map(|l| {
                let nodal: f64 = node_deltas
                    .iter()
                    .enumerate()
                    .map(|(n, d)| self.ptdf[(l, n)] * d)
                    .sum();
                let shift: f64 = pst_deltas
                    .iter()
                    .enumerate()
                    .map(|(p, a)| self.psdf[(l, p)] * a)
                    .sum();
                initial_flows[l] + nodal + shift
            })
            .collect())
    }

    /// Post-contingency flow on monitored position `li` for outage position
    /// `ci`, given N-0 flows on all branches.
    pub fn n1_flow(&self, n0: &[f64], li: usize, ci: usize) -> Option<f64> {
        let l = self.topology.monitored[li];
        let c = self.topology.outages[ci];
        self.lodf_at(li, ci).map(|f| n0[l] + f * n0[c])
    }
}

fn check_len(what: &'static str, expected: usize, got: usize) -> Result<(), GridError> {
    if expected != got {
        return Err(GridError::DimensionMismatch {
            what,
            expected,
            got,
        });
    }
    Ok(())
}
