//! Network topology and DC parameters.

use std::collections::{BTreeSet, HashMap};

use serde::{Deserialize, Serialize};

use super::GridError;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Node {
    pub id: String,
    /// Longitude in degrees.
    pub lon: f64,
    /// Latitude in degrees.
    pub lat: f64,
    #[serde(default)]
    pub slack: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Branch {
    pub id: String,
    pub from: String,
    pub to: String,
    /// Series reactance in per unit on the system base.
    pub reactance: f64,
    /// Thermal limit in MW, applied symmetrically.
    pub flow_limit: f64,
    #[serde(default = "default_true")]
    pub monitored: bool,
    #[serde(default)]
    pub outage_candidate: bool,
}

fn default_true() -> bool {
    true
}

/// Phase-shifting transformer installed on a branch. Angle limits bound the
/// set-point change relative to the market state, in degrees.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PhaseShifter {
    pub id: String,
    pub branch: String,
    pub angle_min: f64,
    pub angle_max: f64,
    pub cost_per_degree: f64,
}

/// Controllable point-to-point link. Positive transfer moves power from
/// `from` to `to`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HvdcLink {
    pub id: String,
    pub from: String,
    pub to: String,
    pub capacity_mw: f64,
    #[serde(default = "default_hvdc_cost")]
    pub cost_per_mwh: f64,
}

fn default_hvdc_cost() -> f64 {
    1.0
}

fn default_base() -> f64 {
    100.0
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GridModel {
    #[serde(default = "default_base")]
    pub base_mva: f64,
    pub nodes: Vec<Node>,
    pub branches: Vec<Branch>,
    #[serde(default)]
    pub phase_shifters: Vec<PhaseShifter>,
    #[serde(default)]
    pub hvdc_links: Vec<HvdcLink>,
}

/// Index-resolved view of a [`GridModel`]. All sensitivity and flow routines
/// work on this form.
#[derive(Clone, Debug)]
pub struct Topology {
    pub base_mva: f64,
    pub node_ids: Vec<String>,
    pub branch_ids: Vec<String>,
    pub slack: usize,
    /// (from, to) node indices per branch.
    pub ends: Vec<(usize, usize)>,
    /// Susceptance 1/x per branch, per unit.
    pub susceptance: Vec<f64>,
    pub limits: Vec<f64>,
    pub monitored: Vec<usize>,
    pub outages: Vec<usize>,
    /// Branch index per phase shifter.
    pub pst_branch: Vec<usize>,
    pub pst_ids: Vec<String>,
    node_index: HashMap<String, usize>,
    branch_index: HashMap<String, usize>,
}

impl Topology {
    pub fn node(&self, id: &str) -> Option<usize> {
        self.node_index.get(id).copied()
    }

    pub fn branch(&self, id: &str) -> Option<usize> {
        self.branch_index.get(id).copied()
    }

    pub fn n_nodes(&self) -> usize {
        self.node_ids.len()
    }

    pub fn n_branches(&self) -> usize {
        self.branch_ids.len()
    }

    /// True if the graph restricted to branches other than `skip` connects
    /// all nodes.
    pub fn is_connected_without(&self, skip: Option<usize>) -> bool {
        let mut dsu = DisjointSet::new(self.n_nodes());
        for (b, &(f, t)) in self.ends.iter().enumerate() {
            if Some(b) != skip {
                dsu.union(f, t);
            }
        }
        let root = dsu.find(0);
        (0..self.n_nodes()).all(|n| dsu.find(n) == root)
    }
}

struct DisjointSet {
    parent: Vec<usize>,
}

impl DisjointSet {
    fn new(n: usize) -> Self {
        Self {
            parent: (0..n).collect(),
        }
    }

    fn find(&mut self, mut x: usize) -> usize {
        while self.parent[x] != x {
            self.parent[x] = self.parent[self.parent[x]];
            x = self.parent[x];
        }
        x
    }

    fn union(&mut self, a: usize, b: usize) {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra != rb {
            self.parent[ra.max(rb)] = ra.min(rb);
        }
    }
}

/// One structural problem of a grid: the offending record (e.g.
/// `branches/l1`), its field and a message.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct GridIssue {
    pub record: String,
    pub field: &'static str,
    pub message: String,
}

fn issue(record: String, field: &'static str, message: String) -> GridIssue {
    GridIssue {
        record,
        field,
        message,
    }
}

impl GridModel {
    /// Collects every structural violation without stopping at the first.
    pub fn violations(&self) -> Vec<GridIssue> {
        let mut out = Vec::new();
        let mut seen = BTreeSet::new();
        for n in &self.nodes {
            if !seen.insert(n.id.as_str()) {
                out.push(issue(
                    format!("nodes/{}", n.id),
                    "id",
                    format!("duplicate node id '{}'", n.id),
                ));
            }
            if !n.lon.is_finite() || !n.lat.is_finite() {
                out.push(issue(
                    format!("nodes/{}", n.id),
                    "lon",
                    format!("node '{}' has non-finite coordinates", n.id),
                ));
            }
        }
        let slacks = self.nodes.iter().filter(|n| n.slack).count();
        if slacks != 1 {
            out.push(issue(
                "nodes".into(),
                "slack",
                format!("expected exactly one slack node, found {slacks}"),
            ));
        }
        if !(self.base_mva > 0.0) {
            out.push(issue(
                "grid".into(),
                "base_mva",
                format!("base_mva must be positive, got {}", self.base_mva),
            ));
        }
        let mut branch_seen = BTreeSet::new();
        for b in &self.branches {
            if !branch_seen.insert(b.id.as_str()) {
                out.push(issue(
                    format!("branches/{}", b.id),
                    "id",
                    format!("duplicate branch id '{}'", b.id),
                ));
            }
            let rec = format!("branches/{}", b.id);
            for (field, end) in [("from", &b.from), ("to", &b.to)] {
                if !seen.contains(end.as_str()) {
                    out.push(issue(
                        rec.clone(),
                        field,
                        format!("branch '{}' references unknown node '{}'", b.id, end),
                    ));
                }
            }
            if b.from == b.to {
                out.push(issue(
                    rec.clone(),
                    "to",
                    format!("branch '{}' connects node '{}' to itself", b.id, b.from),
                ));
            }
            if !(b.reactance > 0.0) || !b.reactance.is_finite() {
                out.push(issue(
                    rec.clone(),
                    "reactance",
                    format!(
                        "branch '{}' has non-positive reactance {}",
                        b.id, b.reactance
                    ),
                ));
            }
            if !(b.flow_limit >= 0.0) {
                out.push(issue(
                    rec,
                    "flow_limit",
                    format!("branch '{}' has negative flow limit {}", b.id, b.flow_limit),
                ));
            }
        }
        let mut pst_seen = BTreeSet::new();
        for p in &self.phase_shifters {
            let rec = format!("phase_shifters/{}", p.id);
            if !pst_seen.insert(p.id.as_str()) {
                out.push(issue(
                    rec.clone(),
                    "id",
                    format!("duplicate phase shifter id '{}'", p.id),
                ));
            }
            if !branch_seen.contains(p.branch.as_str()) {
                out.push(issue(
                    rec.clone(),
                    "branch",
                    format!(
                        "phase shifter '{}' references unknown branch '{}'",
                        p.id, p.branch
                    ),
                ));
            }
            if !(p.angle_min <= 0.0 && 0.0 <= p.angle_max) {
                let field = if p.angle_min > 0.0 {
                    "angle_min"
                } else {
                    "angle_max"
                };
                out.push(issue(
                    rec.clone(),
                    field,
                    format!(
                        "phase shifter '{}' angle range [{}, {}] must contain 0",
                        p.id, p.angle_min, p.angle_max
                    ),
                ));
            }
            if !(p.cost_per_degree >= 0.0) {
                out.push(issue(
                    rec,
                    "cost_per_degree",
                    format!("phase shifter '{}' has negative cost", p.id),
                ));
            }
        }
        let mut hvdc_seen = BTreeSet::new();
        for h in &self.hvdc_links {
            let rec = format!("hvdc_links/{}", h.id);
            if !hvdc_seen.insert(h.id.as_str()) {
                out.push(issue(
                    rec.clone(),
                    "id",
                    format!("duplicate HVDC id '{}'", h.id),
                ));
            }
            for (field, end) in [("from", &h.from), ("to", &h.to)] {
                if !seen.contains(end.as_str()) {
                    out.push(issue(
                        rec.clone(),
                        field,
                        format!("HVDC link '{}' references unknown node '{}'", h.id, end),
                    ));
                }
            }
            if h.from == h.to {
                out.push(issue(
                    rec.clone(),
                    "to",
                    format!("HVDC link '{}' has identical terminals", h.id),
                ));
            }
            if !(h.capacity_mw >= 0.0) || !(h.cost_per_mwh >= 0.0) {
                out.push(issue(
                    rec,
                    "capacity_mw",
                    format!("HVDC link '{}' has invalid capacity or cost", h.id),
                ));
            }
        }
        out
    }

    /// Validates the model and resolves ids to indices.
    pub fn topology(&self) -> Result<Topology, GridError> {
        let problems = self.violations();
        if !problems.is_empty() {
            return Err(GridError::Validation(
                problems.into_iter().map(|p| p.message).collect(),
            ));
        }
        let node_index: HashMap<String, usize> = self
            .nodes
            .iter()
            .enumerate()
            .map(|(i, n)| (n.id.clone(), i))
            .collect();
        let branch_index: HashMap<String, usize> = self
            .branches
            .iter()
            .enumerate()
            .map(|(i, b)| (b.id.clone(), i))
            .collect();
        let slack = self.nodes.iter().position(|n| n.slack).expect("validated");
        let topo = Topology {
            base_mva: self.base_mva,
            node_ids: self.nodes.iter().map(|n| n.id.clone()).collect(),
            branch_ids: self.branches.iter().map(|b| b.id.clone()).collect(),
            slack,
            ends: self
                .branches
                .iter()
                .map(|b| (node_index[&b.from], node_index[&b.to]))
                .collect(),
            susceptance: self.branches.iter().map(|b| 1.0 / b.reactance).collect(),
            limits: self.branches.iter().map(|b| b.flow_limit).collect(),
            monitored: (0..self.branches.len())
                .filter(|&b| self.branches[b].monitored)
                .collect(),
            outages: (0..self.branches.len())
                .filter(|&b| self.branches[b].outage_candidate)
                .collect(),
            pst_branch: self
                .phase_shifters
                .iter()
                .map(|p| branch_index[&p.branch])
                .collect(),
            pst_ids: self.phase_shifters.iter().map(|p| p.id.clone()).collect(),
            node_index,
            branch_index,
        };
        if !topo.is_connected_without(None) {
            return Err(GridError::Disconnected);
        }
        Ok(topo)
    }
}
