//! Grid fixtures and a plain Gaussian-elimination DC flow used as oracle.

use rand::seq::SliceRandom;
use rand::Rng;
use redispatch_core::grid::{Branch, GridModel, Node, PhaseShifter};

pub fn node(id: &str, slack: bool) -> Node {
    Node {
        id: id.into(),
        lon: 0.0,
        lat: 0.0,
        slack,
    }
}

pub fn branch(id: &str, from: &str, to: &str, x: f64, limit: f64) -> Branch {
    Branch {
        id: id.into(),
        from: from.into(),
        to: to.into(),
        reactance: x,
        flow_limit: limit,
        monitored: true,
        outage_candidate: false,
    }
}

/// Grid with the first node as slack.
pub fn grid(nodes: &[&str], branches: Vec<Branch>) -> GridModel {
    GridModel {
        base_mva: 100.0,
        nodes: nodes
            .iter()
            .enumerate()
            .map(|(i, n)| node(n, i == 0))
            .collect(),
        branches,
        phase_shifters: vec![],
        hvdc_links: vec![],
    }
}

/// Equal-reactance triangle a-b-c, slack at a.
pub fn triangle(limit: f64) -> GridModel {
    grid(
        &["a", "b", "c"],
        vec![
            branch("ab", "a", "b", 0.1, limit),
            branch("ac", "a", "c", 0.1, limit),
            branch("bc", "b", "c", 0.1, limit),
        ],
    )
}

fn components(n: usize, edges: &[(usize, usize)]) -> usize {
    let mut parent: Vec<usize> = (0..n).collect();
    fn find(p: &mut [usize], x: usize) -> usize {
        let mut r = x;
        while p[r] != r {
            r = p[r];
        }
        r
    }
    for &(a, b) in edges {
        let (ra, rb) = (find(&mut parent, a), find(&mut parent, b));
        parent[ra] = rb;
    }
    (0..n).filter(|&i| find(&mut parent, i) == i).count()
}

/// Random connected grid: a random spanning tree plus extra edges. Every
/// branch whose removal keeps the grid connected is an outage candidate and
/// up to two of them carry phase shifters.
pub fn random_grid<R: Rng>(rng: &mut R, n: usize) -> GridModel {
    let names: Vec<String> = (0..n).map(|i| format!("n{i}")).collect();
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(rng);
    let mut edges: Vec<(usize, usize)> = Vec::new();
    for i in 1..n {
        let parent = order[rng.gen_range(0..i)];
        edges.push((parent, order[i]));
    }
    let extra = rng.gen_range(1..=n);
    for _ in 0..extra {
        let a = rng.gen_range(0..n);
        let b = rng.gen_range(0..n);
        if a != b {
            edges.push((a, b));
        }
    }
    let mut branches: Vec<Branch> = edges
        .iter()
        .enumerate()
        .map(|(k, &(a, b))| {
            branch(
                &format!("b{k}"),
                &names[a],
                &names[b],
                rng.gen_range(0.02..0.3),
                100.0,
            )
        })
        .collect();
    for k in 0..edges.len() {
        let rest: Vec<(usize, usize)> = edges
            .iter()
            .enumerate()
            .filter(|(j, _)| *j != k)
            .map(|(_, e)| *e)
            .collect();
        branches[k].outage_candidate = components(n, &rest) == 1;
    }
    let candidates: Vec<usize> = (0..branches.len())
        .filter(|&k| branches[k].outage_candidate)
        .collect();
    let phase_shifters = candidates
        .iter()
        .take(2)
        .enumerate()
        .map(|(i, &k)| PhaseShifter {
            id: format!("pst{i}"),
            branch: branches[k].id.clone(),
            angle_min: -30.0,
            angle_max: 30.0,
            cost_per_degree: 1.0,
        })
        .collect();
    let slack = rng.gen_range(0..n);
    GridModel {
        base_mva: 100.0,
        nodes: (0..n).map(|i| node(&names[i], i == slack)).collect(),
        branches,
        phase_shifters,
        hvdc_links: vec![],
    }
}

/// Dense Gaussian elimination with partial pivoting.
fn gauss(mut a: Vec<Vec<f64>>, mut b: Vec<f64>) -> Vec<f64> {
    let n = b.len();
    for col in 0..n {
        let p = (col..n)
            .max_by(|&i, &j| a[i][col].abs().partial_cmp(&a[j][col].abs()).unwrap())
            .unwrap();
        a.swap(col, p);
        b.swap(col, p);
        for r in col + 1..n {
            let f = a[r][col] / a[col][col];
            for c in col..n {
                a[r][c] -= f * a[col][c];
            }
            b[r] -= f * b[col];
        }
    }
    let mut x = vec![0.0; n];
    for r in (0..n).rev() {
        let s: f64 = (r + 1..n).map(|c| a[r][c] * x[c]).sum();
        x[r] = (b[r] - s) / a[r][r];
    }
    x
}

/// Branch flows in MW from a full DC solve with angle `shifts` (degrees per
/// branch id) and one branch optionally removed. Injections are balanced at
/// the slack. The removed branch reports 0.
pub fn oracle_flows(
    g: &GridModel,
    injections: &[f64],
    shifts: &[(String, f64)],
    outage: Option<&str>,
) -> Vec<f64> {
    let idx = |id: &str| g.nodes.iter().position(|n| n.id == id).unwrap();
    let slack = g.nodes.iter().position(|n| n.slack).unwrap();
    let others: Vec<usize> = (0..g.nodes.len()).filter(|&i| i != slack).collect();
    let pos = |i: usize| others.iter().position(|&o| o == i);
    let m = others.len();
    let mut a = vec![vec![0.0; m]; m];
    let mut rhs: Vec<f64> = others.iter().map(|&i| injections[i] / g.base_mva).collect();
    let shift_of = |id: &str| {
        shifts
            .iter()
            .filter(|(b, _)| b == id)
            .map(|(_, s)| s.to_radians())
            .sum::<f64>()
    };
    for br in &g.branches {
        if Some(br.id.as_str()) == outage {
            continue;
        }
        let (f, t) = (idx(&br.from), idx(&br.to));
        let s = 1.0 / br.reactance;
        let phi = shift_of(&br.id);
        // Flow s (th_f - th_t + phi) leaves f and enters t.
        if let Some(pf) = pos(f) {
            a[pf][pf] += s;
            rhs[pf] -= s * phi;
            if let Some(pt) = pos(t) {
                a[pf][pt] -= s;
            }
        }
        if let Some(pt) = pos(t) {
            a[pt][pt] += s;
            rhs[pt] += s * phi;
            if let Some(pf) = pos(f) {
                a[pt][pf] -= s;
            }
        }
    }
    let x = gauss(a, rhs);
    let theta = |i: usize| pos(i).map_or(0.0, |p| x[p]);
    g.branches
        .iter()
        .map(|br| {
            if Some(br.id.as_str()) == outage {
                return 0.0;
            }
            let (f, t) = (idx(&br.from), idx(&br.to));
            g.base_mva / br.reactance * (theta(f) - theta(t) + shift_of(&br.id))
        })
        .collect()
}
