//! Bounded-variable revised primal simplex.
//!
//! Every row `i` gets a logical variable `r_i` with the row's bounds, so the
//! working system is `A x - r = 0` over boxed variables. The starting basis
//! is all-logical. Infeasible basics are driven into their boxes by a
//! composite phase 1 that minimizes the sum of infeasibilities, then the true
//! objective is minimized.
//!
//! The basis inverse is held explicitly (dense, column-major) and updated in
//! product form; updates only touch the nonzeros of the pivot column and
//! pivot row, which stay sparse for the block-structured programs built by
//! the engine. The inverse is rebuilt periodically from the basis.
//!
//! Pricing is Dantzig's rule with ties going to the smallest variable index.
//! After a run of degenerate pivots the solver switches to Bland's rule until
//! the objective moves again.

use super::model::{LinearProgram, LpSolution, LpStatus, SolveOptions};
use super::{LpError, LpSolver};

/// Pivots between recomputation of primal values and reduced costs.
const REFRESH_EVERY: usize = 100;
/// Pivots between full rebuilds of the basis inverse.
const REINVERT_EVERY: usize = 2000;

#[derive(Clone, Copy, Debug, Default)]
pub struct RevisedSimplex;

impl LpSolver for RevisedSimplex {
    fn solve(&self, lp: &LinearProgram, opts: &SolveOptions) -> Result<LpSolution, LpError> {
        lp.validate()?;
        let mut s = Simplex::new(lp, *opts);
        let status = s.run();
        Ok(s.into_solution(lp, status))
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
enum State {
    Basic(usize),
    AtLower,
    AtUpper,
    /// Nonbasic strictly between its bounds (starts at zero).
    Between,
}

struct Simplex {
    n: usize,
    m: usize,
    opts: SolveOptions,
    col_start: Vec<usize>,
    col_rows: Vec<usize>,
    col_vals: Vec<f64>,
    row_start: Vec<usize>,
    row_cols: Vec<usize>,
    row_vals: Vec<f64>,
    lb: Vec<f64>,
    ub: Vec<f64>,
    cost: Vec<f64>,
    x: Vec<f64>,
    state: Vec<State>,
    basis: Vec<usize>,
    /// Column-major basis inverse: `binv[k * m + i] = (B^-1)[i][k]`.
    binv: Vec<f64>,
    y: Vec<f64>,
    d: Vec<f64>,
    iterations: usize,
    since_refresh: usize,
    since_reinvert: usize,
    degenerate_run: usize,
    bland: bool,
    // scratch
    alpha: Vec<f64>,
    alpha_nz: Vec<usize>,
    rho: Vec<f64>,
    rho_nz: Vec<usize>,
    prow: Vec<f64>,
}

enum Step {
    Flip,
    Pivot { pos: usize, to_upper: bool },
}

impl Simplex {
    fn new(lp: &LinearProgram, opts: SolveOptions) -> Self {
        let n = lp.num_variables();
        let m = lp.num_constraints();
        let mut col_count = vec![0usize; n];
        for c in &lp.constraints {
            for (v, _) in &c.terms {
                col_count[v.0] += 1;
            }
        }
        let mut col_start = vec![0usize; n + 1];
        for j in 0..n {
            col_start[j + 1] = col_start[j] + col_count[j];
        }
        let nnz = col_start[n];
        let mut col_rows = vec![0usize; nnz];
        let mut col_vals = vec![0.0; nnz];
        let mut fill = col_start.clone();
        let mut row_start = Vec::with_capacity(m + 1);
        let mut row_cols = Vec::with_capacity(nnz);
        let mut row_vals = Vec::with_capacity(nnz);
        row_start.push(0);
        for (i, c) in lp.constraints.iter().enumerate() {
            for &(v, a) in &c.terms {
                col_rows[fill[v.0]] = i;
                col_vals[fill[v.0]] = a;
                fill[v.0] += 1;
                row_cols.push(v.0);
                row_vals.push(a);
            }
            row_start.push(row_cols.len());
        }
        let mut lb = Vec::with_capacity(n + m);
        let mut ub = Vec::with_capacity(n + m);
        let mut cost = Vec::with_capacity(n + m);
        for v in &lp.variables {
            lb.push(v.lower);
            ub.push(v.upper);
            cost.push(v.cost);
        }
        for c in &lp.constraints {
            let (l, u) = c.relation.bounds();
            lb.push(l);
            ub.push(u);
            cost.push(0.0);
        }
        let mut x = vec![0.0; n + m];
        let mut state = vec![State::Between; n + m];
        for j in 0..n {
            let (l, u) = (lb[j], ub[j]);
            if l == u || l >= 0.0 {
                x[j] = l;
                state[j] = State::AtLower;
            } else if u <= 0.0 {
                x[j] = u;
                state[j] = State::AtUpper;
            } else {
                x[j] = 0.0;
                state[j] = State::Between;
            }
        }
        let basis: Vec<usize> = (n..n + m).collect();
        for (p, &j) in basis.iter().enumerate() {
            state[j] = State::Basic(p);
        }
        let mut binv = vec![0.0; m * m];
        for i in 0..m {
            binv[i * m + i] = -1.0;
        }
        let mut s = Simplex {
            n,
            m,
            opts,
            col_start,
            col_rows,
            col_vals,
            row_start,
            row_cols,
            row_vals,
            lb,
            ub,
            cost,
            x,
            state,
            basis,
            binv,
            y: vec![0.0; m],
            d: vec![0.0; n + m],
            iterations: 0,
            since_refresh: 0,
            since_reinvert: 0,
            degenerate_run: 0,
            bland: false,
            alpha: vec![0.0; m],
            alpha_nz: Vec::with_capacity(m),
            rho: vec![0.0; m],
            rho_nz: Vec::with_capacity(m),
            prow: vec![0.0; n + m],
        };
        s.recompute_basics();
        s
    }

    /// Calls `f(row, value)` for each nonzero of column `j` of `[A -I]`.
    #[inline]
    fn for_column(&self, j: usize, mut f: impl FnMut(usize, f64)) {
        if j < self.n {
            for k in self.col_start[j]..self.col_start[j + 1] {
                f(self.col_rows[k], self.col_vals[k]);
            }
        } else {
            f(j - self.n, -1.0);
        }
    }

    fn recompute_basics(&mut self) {
        let m = self.m;
        let mut w = vec![0.0; m];
        for j in 0..self.n + self.m {
            if matches!(self.state[j], State::Basic(_)) {
                continue;
            }
            let xj = self.x[j];
            if xj != 0.0 {
                self.for_column(j, |i, a| w[i] += a * xj);
            }
        }
        let mut xb = vec![0.0; m];
        for (k, &wk) in w.iter().enumerate() {
            if wk != 0.0 {
                let col = &self.binv[k * m..(k + 1) * m];
                for (p, v) in xb.iter_mut().enumerate() {
                    *v -= col[p] * wk;
                }
            }
        }
        for p in 0..m {
            self.x[self.basis[p]] = xb[p];
        }
        // One step of iterative refinement against the full residual.
        let mut res = vec![0.0; m];
        for j in 0..self.n + self.m {
            let xj = self.x[j];
            if xj != 0.0 {
                self.for_column(j, |i, a| res[i] += a * xj);
            }
        }
        for (k, &rk) in res.iter().enumerate() {
            if rk != 0.0 {
                let col = &self.binv[k * m..(k + 1) * m];
                for p in 0..m {
                    self.x[self.basis[p]] -= col[p] * rk;
                }
            }
        }
    }

    /// Duals and reduced costs for the given basic cost vector. In phase 1
    /// nonbasic variables carry no cost.
    fn recompute_duals(&mut self, cb: &[f64], nonbasic_costs: bool) {
        let m = self.m;
        for k in 0..m {
            let col = &self.binv[k * m..(k + 1) * m];
            let mut acc = 0.0;
            for p in 0..m {
                if cb[p] != 0.0 {
                    acc += cb[p] * col[p];
                }
            }
            self.y[k] = acc;
        }
        for j in 0..self.n + self.m {
            if let State::Basic(_) = self.state[j] {
                self.d[j] = 0.0;
                continue;
            }
            let mut dj = if nonbasic_costs { self.cost[j] } else { 0.0 };
            let y = &self.y;
            self.for_column(j, |i, a| dj -= y[i] * a);
            self.d[j] = dj;
        }
    }

    fn run(&mut self) -> LpStatus {
        let tol = self.opts.feasibility_tol;
        let mut in_phase_two = false;
        loop {
            if self.iterations >= self.opts.max_iterations {
                return LpStatus::IterationLimit;
            }
            if self.since_reinvert >= REINVERT_EVERY {
                self.reinvert();
                self.recompute_basics();
                self.since_reinvert = 0;
                in_phase_two = false;
            } else if self.since_refresh >= REFRESH_EVERY {
                self.recompute_basics();
                self.since_refresh = 0;
                in_phase_two = false;
            }
            let infeasible = self.phase_one_costs(tol);
            let phase_one = infeasible.iter().any(|&c| c != 0.0);
            if phase_one {
                self.recompute_duals(&infeasible, false);
                in_phase_two = false;
            } else if !in_phase_two {
                let cb: Vec<f64> = self.basis.iter().map(|&j| self.cost[j]).collect();
                self.recompute_duals(&cb, true);
                in_phase_two = true;
            }
            let Some((q, dir)) = self.price() else {
                return if phase_one {
                    LpStatus::Infeasible
                } else {
                    LpStatus::Optimal
                };
            };
            self.ftran(q);
            let (theta, step) = match self.ratio_test(q, dir, phase_one) {
                Some(r) => r,
                None => {
                    if phase_one {
                        // Stale reduced costs; rebuild and retry.
                        self.reinvert();
                        self.recompute_basics();
                        self.since_reinvert = 0;
                        self.iterations += 1;
                        continue;
                    }
                    return LpStatus::Unbounded;
                }
            };
            if theta <= 1e-12 {
                self.degenerate_run += 1;
                if self.degenerate_run > self.opts.degenerate_limit {
                    self.bland = true;
                }
            } else {
                self.degenerate_run = 0;
                self.bland = false;
            }
            self.apply(q, dir, theta, step, in_phase_two && !phase_one);
            self.iterations += 1;
            self.since_refresh += 1;
            self.since_reinvert += 1;
        }
    }

    /// Phase 1 cost per basic position: -1 below the box, +1 above, else 0.
    fn phase_one_costs(&self, tol: f64) -> Vec<f64> {
        self.basis
            .iter()
            .map(|&j| {
                let v = self.x[j];
                if v < self.lb[j] - tol {
                    -1.0
                } else if v > self.ub[j] + tol {
                    1.0
                } else {
                    0.0
                }
            })
            .collect()
    }

    fn price(&self) -> Option<(usize, f64)> {
        let tol = self.opts.optimality_tol;
        let mut best: Option<(usize, f64)> = None;
        let mut best_score = 0.0;
        for j in 0..self.n + self.m {
            let dj = self.d[j];
            let dir = match self.state[j] {
                State::Basic(_) => continue,
                _ if self.lb[j] == self.ub[j] => continue,
                State::AtLower if dj < -tol => 1.0,
                State::AtUpper if dj > tol => -1.0,
                State::Between if dj.abs() > tol => -dj.signum(),
                _ => continue,
            };
            if self.bland {
                return Some((j, dir));
            }
            if dj.abs() > best_score {
                best_score = dj.abs();
                best = Some((j, dir));
            }
        }
        best
    }

    fn ftran(&mut self, q: usize) {
        let m = self.m;
        self.alpha.iter_mut().for_each(|a| *a = 0.0);
        let mut col: Vec<(usize, f64)> = Vec::new();
        self.for_column(q, |i, a| col.push((i, a)));
        for (k, a) in col {
            let c = &self.binv[k * m..(k + 1) * m];
            for (p, v) in self.alpha.iter_mut().enumerate() {
                *v += a * c[p];
            }
        }
        self.alpha_nz.clear();
        for p in 0..m {
            if self.alpha[p].abs() > 1e-13 {
                self.alpha_nz.push(p);
            } else {
                self.alpha[p] = 0.0;
            }
        }
    }

    /// Two-pass (Harris) ratio test. Returns the step length and whether the
    /// entering variable flips bounds or replaces a basic variable.
    fn ratio_test(&self, q: usize, dir: f64, phase_one: bool) -> Option<(f64, Step)> {
        let tol = self.opts.feasibility_tol;
        let ptol = self.opts.pivot_tol;
        let flip = if dir > 0.0 {
            self.ub[q] - self.x[q]
        } else {
            self.x[q] - self.lb[q]
        };
        // Limit for a basic variable: (distance to bound, relaxed distance, hits upper)
        let limit = |p: usize| -> Option<(f64, f64, bool)> {
            let a = self.alpha[p];
            if a.abs() <= ptol {
                return None;
            }
            let j = self.basis[p];
            let rate = -dir * a;
            let (v, l, u) = (self.x[j], self.lb[j], self.ub[j]);
            let below = v < l - tol;
            let above = v > u + tol;
            if phase_one && below {
                return (rate > 0.0).then(|| ((l - v) / rate, (l - v + tol) / rate, false));
            }
            if phase_one && above {
                return (rate < 0.0).then(|| ((u - v) / rate, (u - v - tol) / rate, true));
            }
            if rate > 0.0 && u.is_finite() {
                Some((
                    ((u - v) / rate).max(0.0),
                    ((u - v + tol) / rate).max(0.0),
                    true,
                ))
            } else if rate < 0.0 && l.is_finite() {
                Some((
                    ((l - v) / rate).max(0.0),
                    ((l - v - tol) / rate).max(0.0),
                    false,
                ))
            } else {
                None
            }
        };
        let mut relaxed_min = f64::INFINITY;
        for &p in &self.alpha_nz {
            if let Some((_, r, _)) = limit(p) {
                relaxed_min = relaxed_min.min(r);
            }
        }
        if relaxed_min == f64::INFINITY {
            return flip.is_finite().then_some((flip, Step::Flip));
        }
        let mut chosen: Option<(usize, f64, bool)> = None;
        for &p in &self.alpha_nz {
            if let Some((t, _, upper)) = limit(p) {
                if t > relaxed_min {
                    continue;
                }
                let better = match chosen {
                    None => true,
                    Some((cp, _, _)) => {
                        if self.bland {
                            self.basis[p] < self.basis[cp]
                        } else {
                            let (a, b) = (self.alpha[p].abs(), self.alpha[cp].abs());
                            a > b || (a == b && self.basis[p] < self.basis[cp])
                        }
                    }
                };
                if better {
                    chosen = Some((p, t, upper));
                }
            }
        }
        let (pos, t, to_upper) = chosen.expect("a candidate within the relaxed bound exists");
        if flip <= t {
            return Some((flip, Step::Flip));
        }
        Some((t, Step::Pivot { pos, to_upper }))
    }

    fn apply(&mut self, q: usize, dir: f64, theta: f64, step: Step, track_duals: bool) {
        if theta != 0.0 {
            self.x[q] += dir * theta;
            for &p in &self.alpha_nz {
                let j = self.basis[p];
                self.x[j] -= dir * self.alpha[p] * theta;
            }
        }
        match step {
            Step::Flip => {
                if dir > 0.0 {
                    self.x[q] = self.ub[q];
                    self.state[q] = State::AtUpper;
                } else {
                    self.x[q] = self.lb[q];
                    self.state[q] = State::AtLower;
                }
            }
            Step::Pivot { pos, to_upper } => {
                let leaving = self.basis[pos];
                let ar = self.alpha[pos];
                self.load_rho(pos);
                if track_duals {
                    let dq = self.d[q];
                    self.pivot_row();
                    let ratio = dq / ar;
                    for j in 0..self.n + self.m {
                        if self.prow[j] != 0.0 && !matches!(self.state[j], State::Basic(_)) {
                            self.d[j] -= ratio * self.prow[j];
                        }
                    }
                    for &k in &self.rho_nz {
                        self.y[k] += ratio * self.rho[k];
                    }
                    self.d[q] = 0.0;
                    self.d[leaving] = -ratio;
                }
                self.update_inverse(pos, ar);
                if to_upper {
                    self.x[leaving] = self.ub[leaving];
                    self.state[leaving] = State::AtUpper;
                } else {
                    self.x[leaving] = self.lb[leaving];
                    self.state[leaving] = State::AtLower;
                }
                if self.lb[leaving] == self.ub[leaving] {
                    self.state[leaving] = State::AtLower;
                }
                self.basis[pos] = q;
                self.state[q] = State::Basic(pos);
            }
        }
    }

    fn load_rho(&mut self, pos: usize) {
        let m = self.m;
        self.rho_nz.clear();
        for k in 0..m {
            let v = self.binv[k * m + pos];
            self.rho[k] = v;
            if v != 0.0 {
                self.rho_nz.push(k);
            }
        }
    }

    /// `prow[j] = rho . a_j` for every column, using the row-wise matrix.
    fn pivot_row(&mut self) {
        self.prow.iter_mut().for_each(|v| *v = 0.0);
        for &k in &self.rho_nz {
            let r = self.rho[k];
            for idx in self.row_start[k]..self.row_start[k + 1] {
                self.prow[self.row_cols[idx]] += r * self.row_vals[idx];
            }
            self.prow[self.n + k] = -r;
        }
    }

    fn update_inverse(&mut self, pos: usize, ar: f64) {
        let m = self.m;
        for &k in &self.rho_nz {
            let v = self.rho[k] / ar;
            let col = &mut self.binv[k * m..(k + 1) * m];
            for &p in &self.alpha_nz {
                if p != pos {
                    col[p] -= self.alpha[p] * v;
                }
            }
            col[pos] = v;
        }
    }

    /// Rebuilds the basis inverse from scratch by pivoting the basic
    /// structural columns into an all-logical basis with partial pivoting.
    /// Columns that turn out dependent are dropped to a bound and replaced by
    /// logicals.
    fn reinvert(&mut self) {
        let m = self.m;
        let n = self.n;
        let target: Vec<usize> = self.basis.clone();
        let in_target = {
            let mut v = vec![false; n + m];
            for &j in &target {
                v[j] = true;
            }
            v
        };
        self.binv.iter_mut().for_each(|v| *v = 0.0);
        for i in 0..m {
            self.binv[i * m + i] = -1.0;
        }
        // Position i currently holds logical n+i.
        let mut holder: Vec<usize> = (n..n + m).collect();
        let mut structurals: Vec<usize> = target.iter().copied().filter(|&j| j < n).collect();
        structurals.sort_unstable();
        for j in structurals {
            self.ftran(j);
            let mut best: Option<usize> = None;
            let mut best_abs = 1e-11;
            for &p in &self.alpha_nz {
                let h = holder[p];
                if h >= n && !in_target[h] && self.alpha[p].abs() > best_abs {
                    best_abs = self.alpha[p].abs();
                    best = Some(p);
                }
            }
            match best {
                Some(p) => {
                    let ar = self.alpha[p];
                    self.load_rho(p);
                    self.update_inverse(p, ar);
                    holder[p] = j;
                }
                None => {
                    // Dependent column: leave it nonbasic at its nearest bound.
                    let (l, u) = (self.lb[j], self.ub[j]);
                    let v = self.x[j];
                    if l.is_finite() && (!u.is_finite() || (v - l).abs() <= (u - v).abs()) {
                        self.x[j] = l;
                        self.state[j] = State::AtLower;
                    } else if u.is_finite() {
                        self.x[j] = u;
                        self.state[j] = State::AtUpper;
                    } else {
                        self.x[j] = 0.0;
                        self.state[j] = State::Between;
                    }
                }
            }
        }
        // Logicals that were not replaced keep their positions.
        self.basis = holder;
        for (p, &j) in self.basis.iter().enumerate() {
            self.state[j] = State::Basic(p);
        }
    }

    fn into_solution(mut self, lp: &LinearProgram, status: LpStatus) -> LpSolution {
        if status == LpStatus::Optimal {
            self.reinvert();
            self.recompute_basics();
            let cb: Vec<f64> = self.basis.iter().map(|&j| self.cost[j]).collect();
            self.recompute_duals(&cb, true);
        }
        let values: Vec<f64> = self.x[..self.n].to_vec();
        let objective_value = lp.objective_value(&values);
        LpSolution {
            status,
            values,
            objective_value,
            duals: self.y.clone(),
            iterations: self.iterations,
        }
    }
}
