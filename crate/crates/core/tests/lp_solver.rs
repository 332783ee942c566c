mod common;

use common::tableau::{self, TableauResult};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use redispatch_core::lp::{
    check_feasibility, dual_objective, LinearProgram, LpSolver, LpStatus, Relation, RevisedSimplex,
    RowGeneration, SolveOptions,
};

fn solve(lp: &LinearProgram) -> redispatch_core::lp::LpSolution {
    RevisedSimplex.solve(lp, &SolveOptions::default()).unwrap()
}

#[test]
fn single_variable_lower_bound_row() {
    let mut lp = LinearProgram::new();
    let x = lp.add_variable("x", f64::NEG_INFINITY, f64::INFINITY, 1.0);
    lp.add_constraint("lo", vec![(x, 1.0)], Relation::Ge(3.0));
    lp.add_constraint("hi", vec![(x, 1.0)], Relation::Le(10.0));
    let s = solve(&lp);
    assert_eq!(s.status, LpStatus::Optimal);
    assert!((s.values[0] - 3.0).abs() < 1e-12);
    assert!((s.objective_value - 3.0).abs() < 1e-12);
}

#[test]
fn degenerate_facet_reports_smallest_index_vertex() {
    let mut lp = LinearProgram::new();
    let x = lp.add_variable("x", 0.0, 1.0, -1.0);
    let y = lp.add_variable("y", 0.0, 1.0, -1.0);
    lp.add_constraint("cap", vec![(x, 1.0), (y, 1.0)], Relation::Le(1.0));
    let s = solve(&lp);
    assert_eq!(s.status, LpStatus::Optimal);
    assert!((s.objective_value + 1.0).abs() < 1e-12);
    assert_eq!(s.values, vec![1.0, 0.0]);
}

#[test]
fn detects_infeasibility() {
    let mut lp = LinearProgram::new();
    let x = lp.add_variable("x", 0.0, 5.0, 1.0);
    lp.add_constraint("r", vec![(x, 1.0)], Relation::Ge(6.0));
    assert_eq!(solve(&lp).status, LpStatus::Infeasible);
}

#[test]
fn detects_unboundedness() {
    let mut lp = LinearProgram::new();
    let x = lp.add_variable("x", 0.0, f64::INFINITY, -1.0);
    let y = lp.add_variable("y", 0.0, f64::INFINITY, 0.0);
    lp.add_constraint("r", vec![(x, 1.0), (y, -1.0)], Relation::Le(2.0));
    assert_eq!(solve(&lp).status, LpStatus::Unbounded);
}

#[test]
fn iteration_limit_is_reported() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let lp = common::random_lp(&mut rng, 20, 15);
    let opts = SolveOptions {
        max_iterations: 1,
        ..SolveOptions::default()
    };
    let s = RevisedSimplex.solve(&lp, &opts).unwrap();
    assert_eq!(s.status, LpStatus::IterationLimit);
}

#[test]
fn rejects_inverted_bounds() {
    let mut lp = LinearProgram::new();
    lp.add_variable("x", 1.0, 0.0, 1.0);
    assert!(RevisedSimplex.solve(&lp, &SolveOptions::default()).is_err());
}

#[test]
fn check_feasibility_reports_equality_violation() {
    let mut lp = LinearProgram::new();
    let x = lp.add_variable("x", 0.0, 10.0, 0.0);
    let y = lp.add_variable("y", 0.0, 10.0, 0.0);
    lp.add_constraint("e", vec![(x, 1.0), (y, 1.0)], Relation::Eq(2.0));
    lp.add_constraint("l", vec![(x, 1.0)], Relation::Le(5.0));
    let ok = check_feasibility(&lp, &[1.0, 1.0]).unwrap();
    assert_eq!(ok.max(), 0.0);
    let bad = check_feasibility(&lp, &[1.0, 1.5]).unwrap();
    assert!((bad.equalities - 0.5).abs() < 1e-15);
    assert_eq!(bad.inequalities, 0.0);
    assert_eq!(bad.bounds, 0.0);
    assert!(check_feasibility(&lp, &[1.0]).is_err());
}

#[test]
fn random_programs_match_tableau_oracle() {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    for case in 0..40 {
        let lp = common::random_lp(&mut rng, 20, 14);
        let s = solve(&lp);
        match tableau::solve(&lp) {
            TableauResult::Optimal(obj, _) => {
                assert_eq!(s.status, LpStatus::Optimal, "case {case}");
                let rel = (s.objective_value - obj).abs() / obj.abs().max(1.0);
                assert!(rel < 1e-6, "case {case}: {} vs {}", s.objective_value, obj);
                let f = check_feasibility(&lp, &s.values).unwrap();
                assert!(f.max() < 1e-6, "case {case}: {f:?}");
                let dual = dual_objective(&lp, &s.duals);
                assert!(
                    (dual - s.objective_value).abs() / obj.abs().max(1.0) < 1e-6,
                    "case {case}: dual {dual} vs primal {}",
                    s.objective_value
                );
            }
            TableauResult::Infeasible => assert_eq!(s.status, LpStatus::Infeasible),
            TableauResult::Unbounded => assert_eq!(s.status, LpStatus::Unbounded),
        }
    }
}

#[test]
fn solving_is_deterministic() {
    let mut rng = ChaCha8Rng::seed_from_u64(99);
    let lp = common::random_lp(&mut rng, 30, 25);
    let a = solve(&lp);
    let b = solve(&lp);
    let bits = |v: &[f64]| v.iter().map(|x| x.to_bits()).collect::<Vec<_>>();
    assert_eq!(bits(&a.values), bits(&b.values));
    assert_eq!(a.objective_value.to_bits(), b.objective_value.to_bits());
}

#[test]
fn row_generation_matches_full_solve() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for _ in 0..10 {
        let mut lp = common::random_lp(&mut rng, 20, 16);
        for c in lp.constraints.iter_mut().skip(4) {
            if !matches!(c.relation, Relation::Eq(_)) {
                c.lazy = true;
            }
        }
        let full = solve(&lp);
        let lazy = RowGeneration::new(RevisedSimplex)
            .solve(&lp, &SolveOptions::default())
            .unwrap();
        assert_eq!(full.status, lazy.status);
        if full.status == LpStatus::Optimal {
            assert!((full.objective_value - lazy.objective_value).abs() < 1e-6);
            assert!(check_feasibility(&lp, &lazy.values).unwrap().max() < 1e-6);
        }
    }
}
