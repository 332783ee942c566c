//! Textbook dense two-phase tableau simplex with Bland's rule. Test-only
//! oracle; shares no code with the library solver.

use redispatch_core::lp::{LinearProgram, Relation};

pub enum TableauResult {
    Optimal(f64, Vec<f64>),
    Infeasible,
    Unbounded,
}

/// Solves `lp` whose variables all have finite bounds.
pub fn solve(lp: &LinearProgram) -> TableauResult {
    let n = lp.num_variables();
    // Shift x = l + z, z >= 0, with z <= u - l as extra rows.
    let lower: Vec<f64> = lp.variables.iter().map(|v| v.lower).collect();
    let mut rows: Vec<(Vec<f64>, char, f64)> = Vec::new();
    for c in &lp.constraints {
        let mut a = vec![0.0; n];
        for (v, coef) in &c.terms {
            a[v.0] += coef;
        }
        let shift: f64 = (0..n).map(|j| a[j] * lower[j]).sum();
        match c.relation {
            Relation::Le(b) => rows.push((a, 'L', b - shift)),
            Relation::Ge(b) => rows.push((a, 'G', b - shift)),
            Relation::Eq(b) => rows.push((a, 'E', b - shift)),
            Relation::Range(l, u) => {
                rows.push((a.clone(), 'G', l - shift));
                rows.push((a, 'L', u - shift));
            }
        }
    }
    for (j, v) in lp.variables.iter().enumerate() {
        assert!(v.upper.is_finite() && v.lower.is_finite());
        let mut a = vec![0.0; n];
        a[j] = 1.0;
        rows.push((a, 'L', v.upper - v.lower));
    }
    // Normalize to b >= 0.
    for r in rows.iter_mut() {
        if r.2 < 0.0 {
            r.0.iter_mut().for_each(|x| *x = -*x);
            r.2 = -r.2;
            r.1 = match r.1 {
                'L' => 'G',
                'G' => 'L',
                e => e,
            };
        }
    }
    let m = rows.len();
    let n_slack = rows.iter().filter(|r| r.1 != 'E').count();
    let n_art = rows.iter().filter(|r| r.1 != 'L').count();
    let width = n + n_slack + n_art + 1;
    let mut t = vec![vec![0.0; width]; m];
    let mut basis = vec![0usize; m];
    let (mut s, mut a) = (n, n + n_slack);
    for (i, (coef, kind, b)) in rows.iter().enumerate() {
        t[i][..n].copy_from_slice(coef);
        t[i][width - 1] = *b;
        match kind {
            'L' => {
                t[i][s] = 1.0;
                basis[i] = s;
                s += 1;
            }
            'G' => {
                t[i][s] = -1.0;
                s += 1;
                t[i][a] = 1.0;
                basis[i] = a;
                a += 1;
            }
            _ => {
                t[i][a] = 1.0;
                basis[i] = a;
                a += 1;
            }
        }
    }
    let art_start = n + n_slack;
    // Phase 1: minimize sum of artificials.
    let mut c1 = vec![0.0; width - 1];
    for j in art_start..width - 1 {
        c1[j] = 1.0;
    }
    if !run(&mut t, &mut basis, &c1, width - 1) {
        return TableauResult::Unbounded;
    }
    let infeas: f64 = basis
        .iter()
        .enumerate()
        .filter(|(_, &b)| b >= art_start)
        .map(|(i, _)| t[i][width - 1])
        .sum();
    if infeas > 1e-7 {
        return TableauResult::Infeasible;
    }
    // Drive degenerate artificials out where possible.
    for i in 0..m {
        if basis[i] >= art_start {
            if let Some(j) = (0..art_start).find(|&j| t[i][j].abs() > 1e-9) {
                pivot(&mut t, &mut basis, i, j);
            }
        }
    }
    // Phase 2 with artificial columns barred.
    let mut c2 = vec![0.0; width - 1];
    for j in 0..n {
        c2[j] = lp.variables[j].cost;
    }
    for row in t.iter_mut() {
        for j in art_start..width - 1 {
            row[j] = 0.0;
        }
    }
    if !run(&mut t, &mut basis, &c2, art_start) {
        return TableauResult::Unbounded;
    }
    let mut x = lower.clone();
    for (i, &b) in basis.iter().enumerate() {
        if b < n {
            x[b] += t[i][width - 1];
        }
    }
    let obj = (0..n).map(|j| lp.variables[j].cost * x[j]).sum();
    TableauResult::Optimal(obj, x)
}

fn pivot(t: &mut [Vec<f64>], basis: &mut [usize], r: usize, c: usize) {
    let p = t[r][c];
    t[r].iter_mut().for_each(|v| *v /= p);
    let prow = t[r].clone();
    for (i, row) in t.iter_mut().enumerate() {
        if i != r {
            let f = row[c];
            if f != 0.0 {
                row.iter_mut().zip(&prow).for_each(|(v, pv)| *v -= f * pv);
            }
        }
    }
    basis[r] = c;
}

/// Bland's rule over columns `< ncols`. Returns false if unbounded.
fn run(t: &mut [Vec<f64>], basis: &mut [usize], c: &[f64], ncols: usize) -> bool {
    let w = t[0].len();
    loop {
        let mut entering = None;
        for j in 0..ncols {
            if basis.contains(&j) {
                continue;
            }
            let mut d = c[j];
            for (i, &b) in basis.iter().enumerate() {
                d -= c[b] * t[i][j];
            }
            if d < -1e-10 {
                entering = Some(j);
                break;
            }
        }
        let Some(q) = entering else { return true };
        let mut leave: Option<(usize, f64)> = None;
        for i in 0..t.len() {
            if t[i][q] > 1e-10 {
                let ratio = t[i][w - 1] / t[i][q];
                match leave {
                    Some((li, lr))
                        if ratio > lr + 1e-12
                            || ((ratio - lr).abs() <= 1e-12 && basis[i] > basis[li]) => {}
                    _ => leave = Some((i, ratio)),
                }
            }
        }
        let Some((r, _)) = leave else { return false };
        pivot(t, basis, r, q);
    }
}
