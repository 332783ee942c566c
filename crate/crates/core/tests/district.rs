mod common;

use approx::assert_abs_diff_eq;
use common::scenarios::{pth_pocket, solve};
use proptest::prelude::*;
use redispatch_core::adjust::{Domain, Interval, TechClass};
use redispatch_core::district::{
    build_chp_block, build_tes_block, chp_fuel_delta, ChpUnit, DhnPart, ThermalStorage, Turbine,
};
use redispatch_core::engine::Mode;
use redispatch_core::lp::{
    LinearProgram, LpSolver, LpStatus, Relation, RevisedSimplex, SolveOptions,
};
use redispatch_core::market::{Field, MarketSchedule};

fn chp(turbine: Turbine) -> ChpUnit {
    ChpUnit {
        id: "chp".into(),
        node: None,
        turbine,
        eta_cond: 0.5,
        eta_total_max: Some(0.9),
        sigma: 0.5,
        p_min: 0.0,
        p_max: 100.0,
        q_max: 80.0,
        fuel_cost: 30.0,
        cost_th_up: None,
        cost_th_down: None,
    }
}

fn schedule_with(unit: &str, hours: usize, p: f64, q: f64) -> MarketSchedule {
    let mut s = MarketSchedule::new(hours);
    for t in 0..hours {
        s.set(unit, t, Field::P, p);
        s.set(unit, t, Field::Q, q);
    }
    s
}

/// Forces the heat change of `part` to `dq` and, optionally, its electric
/// change to `dp`, then solves.
fn solve_forced(
    mut lp: LinearProgram,
    part: &DhnPart,
    dq: f64,
    dp: Option<f64>,
) -> (f64, Vec<f64>) {
    let heat: Vec<_> = part.heat.iter().map(|h| (h.var, h.coeff)).collect();
    lp.add_constraint("heat", heat, Relation::Eq(dq));
    if let Some(dp) = dp {
        let el: Vec<_> = part.injections.iter().map(|i| (i.var, i.coeff)).collect();
        lp.add_constraint("power", el, Relation::Eq(dp));
    }
    let sol = RevisedSimplex.solve(&lp, &SolveOptions::default()).unwrap();
    assert_eq!(sol.status, LpStatus::Optimal);
    (sol.objective_value, sol.values)
}

#[test]
fn back_pressure_power_follows_heat() {
    let u = chp(Turbine::Bkp);
    let sched = schedule_with("chp", 1, 20.0, 40.0);
    let mut lp = LinearProgram::new();
    let part = build_chp_block(&mut lp, 0, &u, &sched, Interval::new(0, 1)).unwrap();
    let (obj, x) = solve_forced(lp, &part, 10.0, None);
    let adj = part.extract(&x);
    let el = adj.iter().find(|a| a.domain == Domain::Electric).unwrap();
    assert_abs_diff_eq!(el.net(), 5.0, epsilon = 1e-9);
    // Fuel 5 MW / 0.5 = 10 MWh at 30.
    assert_abs_diff_eq!(obj, 300.0, epsilon = 1e-9);
    assert_abs_diff_eq!(
        chp_fuel_delta(&u, 5.0, 0.0, 0.0).unwrap() * u.fuel_cost,
        obj,
        epsilon = 1e-9
    );
}

#[test]
fn extraction_unit_trades_condensing_power_for_heat() {
    let u = chp(Turbine::Ext);
    // P = 50 with Q = 40: condensing part 30.
    let sched = schedule_with("chp", 1, 50.0, 40.0);
    let mut lp = LinearProgram::new();
    let part = build_chp_block(&mut lp, 0, &u, &sched, Interval::new(0, 1)).unwrap();
    let (obj, x) = solve_forced(lp, &part, 10.0, Some(0.0));
    // Total power held: the condensing part drops by sigma * dQ = 5.
    let fuel = chp_fuel_delta(&u, 0.0, -5.0, 10.0).unwrap();
    assert!(fuel > 0.0);
    assert_abs_diff_eq!(obj, fuel * u.fuel_cost, epsilon = 1e-9);
    let th = part
        .extract(&x)
        .into_iter()
        .find(|a| a.domain == Domain::Thermal)
        .unwrap();
    assert_abs_diff_eq!(th.net(), 10.0, epsilon = 1e-9);
}

#[test]
fn extraction_power_range_is_respected() {
    let u = chp(Turbine::Ext);
    let sched = schedule_with("chp", 1, 95.0, 40.0);
    let mut lp = LinearProgram::new();
    let part = build_chp_block(&mut lp, 0, &u, &sched, Interval::new(0, 1)).unwrap();
    let el: Vec<_> = part.injections.iter().map(|i| (i.var, i.coeff)).collect();
    lp.add_constraint("power", el, Relation::Ge(10.0));
    let sol = RevisedSimplex.solve(&lp, &SolveOptions::default()).unwrap();
    assert_eq!(sol.status, LpStatus::Infeasible);
}

#[test]
fn inconsistent_market_storage_level_names_storage_and_hour() {
    let store = ThermalStorage {
        id: "tes".into(),
        e_max: 100.0,
        q_max: 20.0,
        eta: 1.0,
        e_init: 50.0,
    };
    let mut sched = MarketSchedule::new(3);
    for (t, (q, e)) in [(0.0, 50.0), (10.0, 60.0), (0.0, 59.5)]
        .into_iter()
        .enumerate()
    {
        sched.set("tes", t, Field::Q, q);
        sched.set("tes", t, Field::E, e);
    }
    let err = build_tes_block(
        &mut LinearProgram::new(),
        &store,
        &sched,
        Interval::new(0, 3),
    )
    .unwrap_err();
    let msg = err.to_string();
    assert!(msg.contains("'tes'") && msg.contains("hour 2"), "{msg}");
}

#[test]
fn base_mode_keeps_power_to_heat_at_the_market_point() {
    let s = pth_pocket(&[20.0, 10.0], true);
    let (_, base) = solve(&s, Mode::Base);
    assert!(base[0]
        .adjustments
        .iter()
        .all(|a| a.class != TechClass::PowerToHeat));
    let (_, flex) = solve(&s, Mode::Flex);
    assert!(flex[0]
        .adjustments
        .iter()
        .any(|a| a.class == TechClass::PowerToHeat));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn storage_levels_follow_the_recursion(
        eta in 0.9f64..=1.0,
        e_init in 0.0f64..100.0,
        flows in prop::collection::vec(-20.0f64..20.0, 2..10),
        costs in prop::collection::vec(-5.0f64..5.0, 10),
    ) {
        let store = ThermalStorage { id: "tes".into(), e_max: 200.0, q_max: 30.0, eta, e_init };
        let n = flows.len();
        let mut sched = MarketSchedule::new(n);
        let mut level = e_init;
        for (t, &q) in flows.iter().enumerate() {
            let q = q.clamp(-level * eta, store.e_max - level * eta);
            level = level * eta + q;
            sched.set("tes", t, Field::Q, q);
            sched.set("tes", t, Field::E, level);
        }
        let mut lp = LinearProgram::new();
        let part = build_tes_block(&mut lp, &store, &sched, Interval::new(0, n)).unwrap();
        // Random prices on the charge changes make the optimum move the store.
        let mut priced = 0;
        for v in lp.variables.iter_mut().filter(|v| v.name.contains("_dq_")) {
            v.cost = costs[priced];
            priced += 1;
        }
        let sol = RevisedSimplex.solve(&lp, &SolveOptions::default()).unwrap();
        prop_assert_eq!(sol.status, LpStatus::Optimal);
        let states = part.tes_states(&sol.values);
        let mut prev = e_init;
        for (t, st) in states.iter().enumerate() {
            let q = sched.get("tes", t, Field::Q).unwrap() + st.delta_q;
            prop_assert!((prev * eta + q - st.level).abs() < 1e-6, "hour {}", t);
            prop_assert!(st.level >= -1e-6 && st.level <= store.e_max + 1e-6);
            prop_assert!(q.abs() <= store.q_max + 1e-6);
            prev = st.level;
        }
        prop_assert!(states[n - 1].delta_e.abs() < 1e-9);
    }
}
