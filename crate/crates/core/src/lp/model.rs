use serde::{Deserialize, Serialize};

use super::LpError;

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct VarId(pub usize);

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct RowId(pub usize);

#[derive(Clone, Debug, PartialEq)]
pub struct Variable {
    pub name: String,
    pub lower: f64,
    pub upper: f64,
    /// Objective coefficient (minimization).
    pub cost: f64,
}

/// Relation of a constraint row to its right-hand side.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Relation {
    Le(f64),
    Ge(f64),
    Eq(f64),
    /// Two-sided row `lower <= a x <= upper`.
    Range(f64, f64),
}

impl Relation {
    pub fn bounds(self) -> (f64, f64) {
        match self {
            Relation::Le(b) => (f64::NEG_INFINITY, b),
            Relation::Ge(b) => (b, f64::INFINITY),
            Relation::Eq(b) => (b, b),
            Relation::Range(l, u) => (l, u),
        }
    }

    /// Same relation with its right-hand side(s) shifted by `-offset`.
    pub fn shifted(self, offset: f64) -> Relation {
        match self {
            Relation::Le(b) => Relation::Le(b - offset),
            Relation::Ge(b) => Relation::Ge(b - offset),
            Relation::Eq(b) => Relation::Eq(b - offset),
            Relation::Range(l, u) => Relation::Range(l - offset, u - offset),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Constraint {
    pub name: String,
    pub terms: Vec<(VarId, f64)>,
    pub relation: Relation,
    /// Lazy rows may be left out of the working problem until violated.
    pub lazy: bool,
}

/// A minimization LP over bounded variables with sparse rows.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct LinearProgram {
    pub variables: Vec<Variable>,
    pub constraints: Vec<Constraint>,
}

impl LinearProgram {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add_variable(
        &mut self,
        name: impl Into<String>,
        lower: f64,
        upper: f64,
        cost: f64,
    ) -> VarId {
        self.variables.push(Variable {
            name: name.into(),
            lower,
            upper,
            cost,
        });
        VarId(self.variables.len() - 1)
    }

    pub fn add_constraint(
        &mut self,
        name: impl Into<String>,
        terms: Vec<(VarId, f64)>,
        relation: Relation,
    ) -> RowId {
        self.push_row(name.into(), terms, relation, false)
    }

    /// Adds a row that a row-generating solver may defer until violated.
    pub fn add_lazy_constraint(
        &mut self,
        name: impl Into<String>,
        terms: Vec<(VarId, f64)>,
        relation: Relation,
    ) -> RowId {
        self.push_row(name.into(), terms, relation, true)
    }

    fn push_row(
        &mut self,
        name: String,
        mut terms: Vec<(VarId, f64)>,
        relation: Relation,
        lazy: bool,
    ) -> RowId {
        terms.sort_by_key(|t| t.0);
        // Merge duplicate references and drop exact zeros.
        let mut merged: Vec<(VarId, f64)> = Vec::with_capacity(terms.len());
        for (v, c) in terms {
            match merged.last_mut() {
                Some(last) if last.0 == v => last.1 += c,
                _ => merged.push((v, c)),
            }
        }
        merged.retain(|t| t.1 != 0.0);
        self.constraints.push(Constraint {
            name,
            terms: merged,
            relation,
            lazy,
        });
        RowId(self.constraints.len() - 1)
    }

    pub fn set_bounds(&mut self, var: VarId, lower: f64, upper: f64) {
        let v = &mut self.variables[var.0];
        v.lower = lower;
        v.upper = upper;
    }

    pub fn num_variables(&self) -> usize {
        self.variables.len()
    }

    pub fn num_constraints(&self) -> usize {
        self.constraints.len()
    }

    pub fn objective_value(&self, values: &[f64]) -> f64 {
        self.variables
            .iter()
            .zip(values)
            .map(|(v, x)| v.cost * x)
            .sum()
    }

    pub fn row_activity(&self, row: usize, values: &[f64]) -> f64 {
        self.constraints[row]
            .terms
            .iter()
            .map(|(v, c)| c * values[v.0])
            .sum()
    }

    pub fn validate(&self) -> Result<(), LpError> {
        for v in &self.variables {
            if !(v.lower <= v.upper) || v.lower == f64::INFINITY || v.upper == f64::NEG_INFINITY {
                return Err(LpError::InvalidBounds(v.name.clone(), v.lower, v.upper));
            }
            if !v.cost.is_finite() {
                return Err(LpError::NonFinite(v.name.clone()));
            }
        }
        for c in &self.constraints {
            let (l, u) = c.relation.bounds();
            if !(l <= u) || l.is_nan() || u.is_nan() {
                return Err(LpError::InvalidBounds(c.name.clone(), l, u));
            }
            for (v, a) in &c.terms {
                if v.0 >= self.variables.len() {
                    return Err(LpError::UnknownVariable(c.name.clone(), v.0));
                }
                if !a.is_finite() {
                    return Err(LpError::NonFinite(c.name.clone()));
                }
            }
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LpStatus {
    Optimal,
    Infeasible,
    Unbounded,
    /// The iteration limit was reached before optimality was proven.
    IterationLimit,
}

#[derive(Clone, Debug, PartialEq)]
pub struct LpSolution {
    pub status: LpStatus,
    pub values: Vec<f64>,
    pub objective_value: f64,
    /// Row duals (prices), one per constraint of the original program.
    pub duals: Vec<f64>,
    pub iterations: usize,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SolveOptions {
    /// Primal feasibility tolerance for bounds and rows.
    pub feasibility_tol: f64,
    /// Dual feasibility tolerance on reduced costs.
    pub optimality_tol: f64,
    /// Smallest acceptable pivot magnitude.
    pub pivot_tol: f64,
    pub max_iterations: usize,
    /// Consecutive degenerate pivots tolerated before switching to Bland's rule.
    pub degenerate_limit: usize,
}

impl Default for SolveOptions {
    fn default() -> Self {
        Self {
            feasibility_tol: 1e-9,
            optimality_tol: 1e-9,
            pivot_tol: 1e-9,
            max_iterations: 500_000,
            degenerate_limit: 50,
        }
    }
}

/// Largest absolute violations of a candidate point, per constraint class.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct FeasibilityReport {
    pub bounds: f64,
    pub equalities: f64,
    pub inequalities: f64,
}

impl FeasibilityReport {
    pub fn max(&self) -> f64 {
        self.bounds.max(self.equalities).max(self.inequalities)
    }
}

pub fn check_feasibility(lp: &LinearProgram, values: &[f64]) -> Result<FeasibilityReport, LpError> {
    if values.len() != lp.num_variables() {
        return Err(LpError::Dimension(lp.num_variables(), values.len()));
    }
    let mut rep = FeasibilityReport::default();
    for (v, &x) in lp.variables.iter().zip(values) {
        let viol = (v.lower - x).max(x - v.upper).max(0.0);
        rep.bounds = rep.bounds.max(viol);
    }
    for (i, c) in lp.constraints.iter().enumerate() {
        let a = lp.row_activity(i, values);
        let (l, u) = c.relation.bounds();
        let viol = (l - a).max(a - u).max(0.0);
        if matches!(c.relation, Relation::Eq(_)) {
            rep.equalities = rep.equalities.max(viol);
        } else {
            rep.inequalities = rep.inequalities.max(viol);
        }
    }
    Ok(rep)
}

/// Lagrangian dual bound for the given row prices: the minimum over the
/// variable box of `c x - y (A x - r)` with `r` in its row range. Equals the
/// primal optimum at an optimal dual; never exceeds it otherwise.
pub fn dual_objective(lp: &LinearProgram, duals: &[f64]) -> f64 {
    let mut reduced: Vec<f64> = lp.variables.iter().map(|v| v.cost).collect();
    for (c, &y) in lp.constraints.iter().zip(duals) {
        for (v, a) in &c.terms {
            reduced[v.0] -= y * a;
        }
    }
    let box_min = |d: f64, l: f64, u: f64| -> f64 {
        if d > 0.0 {
            d * l
        } else if d < 0.0 {
            d * u
        } else {
            0.0
        }
    };
    let mut total = 0.0;
    for (v, &d) in lp.variables.iter().zip(&reduced) {
        total += box_min(d, v.lower, v.upper);
    }
    for (c, &y) in lp.constraints.iter().zip(duals) {
        let (l, u) = c.relation.bounds();
        // Term +y r, minimized over r in [l, u].
        total += box_min(y, l, u);
    }
    total
}
