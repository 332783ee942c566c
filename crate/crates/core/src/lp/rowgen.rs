//! Delayed row generation over lazy constraints.
//!
//! Lazy rows start outside the working program unless the all-zero point
//! already violates them. After each solve the violated lazy rows are added
//! and the program is solved again from scratch. The final point is optimal
//! for a relaxation and feasible for every row, hence optimal for the full
//! program.

use super::model::{LinearProgram, LpSolution, LpStatus, SolveOptions};
use super::{LpError, LpSolver};

/// Violation above which a lazy row is pulled into the working program.
const ADMIT_TOL: f64 = 1e-7;

#[derive(Clone, Debug)]
pub struct RowGeneration<S> {
    pub inner: S,
    pub max_rounds: usize,
}

impl<S> RowGeneration<S> {
    pub fn new(inner: S) -> Self {
        Self {
            inner,
            max_rounds: 50,
        }
    }
}

fn violation(lp: &LinearProgram, row: usize, values: &[f64]) -> f64 {
    let (l, u) = lp.constraints[row].relation.bounds();
    let a = lp.row_activity(row, values);
    (l - a).max(a - u).max(0.0)
}

impl<S: LpSolver> LpSolver for RowGeneration<S> {
    fn solve(&self, lp: &LinearProgram, opts: &SolveOptions) -> Result<LpSolution, LpError> {
        lp.validate()?;
        let zero = vec![0.0; lp.num_variables()];
        let mut active: Vec<bool> = (0..lp.num_constraints())
            .map(|i| !lp.constraints[i].lazy || violation(lp, i, &zero) > ADMIT_TOL)
            .collect();
        let mut iterations = 0;
        let mut round = 0;
        loop {
            round += 1;
            let rows: Vec<usize> = (0..lp.num_constraints()).filter(|&i| active[i]).collect();
            let sub = LinearProgram {
                variables: lp.variables.clone(),
                constraints: rows.iter().map(|&i| lp.constraints[i].clone()).collect(),
            };
            let mut sub_opts = *opts;
            sub_opts.max_iterations = opts.max_iterations.saturating_sub(iterations);
            let sol = self.inner.solve(&sub, &sub_opts)?;
            iterations += sol.iterations;
            let mut duals = vec![0.0; lp.num_constraints()];
            for (k, &i) in rows.iter().enumerate() {
                duals[i] = sol.duals[k];
            }
            let finish = |status| LpSolution {
                status,
                objective_value: sol.objective_value,
                values: sol.values.clone(),
                duals: duals.clone(),
                iterations,
            };
            if sol.status != LpStatus::Optimal {
                return Ok(finish(sol.status));
            }
            let violated: Vec<usize> = (0..lp.num_constraints())
                .filter(|&i| !active[i] && violation(lp, i, &sol.values) > ADMIT_TOL)
                .collect();
            log::debug!(
                "row generation round {round}: {} rows, {} iterations, {} violated",
                rows.len(),
                sol.iterations,
                violated.len()
            );
            if violated.is_empty() {
                return Ok(finish(LpStatus::Optimal));
            }
            if round >= self.max_rounds {
                return Ok(finish(LpStatus::IterationLimit));
            }
            for i in violated {
                active[i] = true;
            }
        }
    }
}
