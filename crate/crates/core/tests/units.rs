mod common;

use approx::assert_abs_diff_eq;
use common::grids::{branch, grid, triangle};
use common::scenarios::{scenario, solve, unit};
use redispatch_core::adjust::{Domain, TechClass};
use redispatch_core::engine::{Engine, Mode, RedispatchSolution};
use redispatch_core::error::Error;
use redispatch_core::grid::{HvdcLink, PhaseShifter};
use redispatch_core::market::Field;
use redispatch_core::pipeline::market_schedule;
use redispatch_core::units::{check_slack_penalty, UnitKind};

fn objective(sols: &[RedispatchSolution]) -> f64 {
    sols.iter().map(|s| s.objective).sum()
}

fn totals(sols: &[RedispatchSolution], unit: &str) -> (f64, f64) {
    sols.iter()
        .flat_map(|s| &s.adjustments)
        .filter(|a| a.unit == unit)
        .fold((0.0, 0.0), |acc, a| (acc.0 + a.up, acc.1 + a.down))
}

#[test]
fn curtailment_never_exceeds_the_market_feed_in() {
    // A dead line forces the full 40 MW of wind out; gas replaces it.
    let g = grid(&["a", "b"], vec![branch("ab", "a", "b", 0.1, 0.0)]);
    let mut s = scenario(g, 2);
    s.units = vec![
        unit("wind", "a", UnitKind::Res, 60.0, 0.0, 30.0, 30.0),
        unit("gas", "b", UnitKind::Pp, 100.0, 50.0, 70.0, 20.0),
    ];
    s.res_availability.insert("wind".into(), vec![40.0, 40.0]);
    s.electric_demand.insert("b".into(), vec![40.0, 25.0]);
    let (sched, sols) = solve(&s, Mode::Base);
    assert_abs_diff_eq!(sched.get("wind", 1, Field::P).unwrap(), 25.0);
    for sol in &sols {
        for a in sol.adjustments.iter().filter(|a| a.unit == "wind") {
            assert_eq!(a.up, 0.0, "wind cannot rise above its market point");
        }
    }
    assert_abs_diff_eq!(totals(&sols, "wind").1, 65.0, epsilon = 1e-6);
    assert_abs_diff_eq!(objective(&sols), 65.0 * (30.0 + 70.0), epsilon = 1e-6);
    assert_eq!(sols[0].slack_energy(), 0.0);
}

/// Cheap generation at a, load at b behind a 50 MW line, storage at b.
fn storage_pocket(demand: &[f64], interval: usize) -> Vec<RedispatchSolution> {
    let g = grid(&["a", "b"], vec![branch("ab", "a", "b", 0.1, 50.0)]);
    let mut s = scenario(g, demand.len());
    s.config.interval_hours = interval;
    let mut ps = unit("ps", "b", UnitKind::Ps, 50.0, 0.0, 1.0, 1.0);
    ps.p_min = -50.0;
    s.units = vec![
        unit("g_a", "a", UnitKind::Pp, 200.0, 10.0, 30.0, 10.0),
        unit("g_b", "b", UnitKind::Pp, 100.0, 100.0, 200.0, 5.0),
        ps,
    ];
    s.electric_demand.insert("b".into(), demand.to_vec());
    solve(&s, Mode::Base).1
}

#[test]
fn pumped_storage_is_energy_neutral_per_interval() {
    let sols = storage_pocket(&[80.0, 20.0], 2);
    // Storage covers the 30 MW gap in hour 0 and refills in hour 1.
    assert_abs_diff_eq!(
        objective(&sols),
        30.0 * (1.0 + 10.0) + 30.0 * (1.0 + 30.0),
        epsilon = 1e-6
    );
    let (up, down) = totals(&sols, "ps");
    assert_abs_diff_eq!(up, 30.0, epsilon = 1e-6);
    assert_abs_diff_eq!(up - down, 0.0, epsilon = 1e-9);
}

#[test]
fn pumped_storage_cannot_help_within_a_single_hour() {
    let sols = storage_pocket(&[80.0, 20.0], 1);
    let (up, down) = totals(&sols, "ps");
    assert_abs_diff_eq!(up - down, 0.0, epsilon = 1e-9);
    assert_abs_diff_eq!(objective(&sols), 30.0 * (200.0 + 10.0), epsilon = 1e-6);
}

#[test]
fn hvdc_link_relieves_the_parallel_line_first() {
    let g = {
        let mut g = grid(&["a", "b"], vec![branch("ab", "a", "b", 0.1, 15.0)]);
        g.hvdc_links.push(HvdcLink {
            id: "dc".into(),
            from: "a".into(),
            to: "b".into(),
            capacity_mw: 20.0,
            cost_per_mwh: 1.0,
        });
        g
    };
    let mut s = scenario(g, 1);
    s.units = vec![
        unit("g_a", "a", UnitKind::Pp, 200.0, 10.0, 30.0, 10.0),
        unit("g_b", "b", UnitKind::Pp, 100.0, 50.0, 70.0, 20.0),
    ];
    s.electric_demand.insert("b".into(), vec![40.0]);
    let (_, sols) = solve(&s, Mode::Base);
    assert_abs_diff_eq!(
        objective(&sols),
        20.0 * 1.0 + 5.0 * (10.0 + 70.0),
        epsilon = 1e-6
    );
    let dc = sols[0].adjustments.iter().find(|a| a.unit == "dc").unwrap();
    assert_eq!(dc.class, TechClass::Hvdc);
    assert_abs_diff_eq!(dc.up, 20.0, epsilon = 1e-6);
}

#[test]
fn phase_shifter_moves_the_loop_flow() {
    let mut g = triangle(100.0);
    g.branches[1].flow_limit = 50.0;
    g.phase_shifters.push(PhaseShifter {
        id: "pst".into(),
        branch: "ac".into(),
        angle_min: -30.0,
        angle_max: 30.0,
        cost_per_degree: 1.0,
    });
    let mut s = scenario(g, 1);
    s.units = vec![
        unit("g_a", "a", UnitKind::Pp, 200.0, 10.0, 300.0, 100.0),
        unit("g_c", "c", UnitKind::Pp, 100.0, 50.0, 700.0, 200.0),
    ];
    s.electric_demand.insert("c".into(), vec![90.0]);
    let (_, sols) = solve(&s, Mode::Base);
    // Market flow on a-c is 60 MW; a loop of three 0.1 pu branches at
    // 100 MVA moves 100 / 0.3 MW per radian around it.
    let mw_per_degree = 100.0 / 0.3 * std::f64::consts::PI / 180.0;
    let degrees = 10.0 / mw_per_degree;
    let a = sols[0]
        .adjustments
        .iter()
        .find(|a| a.unit == "pst")
        .unwrap();
    assert_eq!(a.domain, Domain::Angle);
    assert_abs_diff_eq!(a.up + a.down, degrees, epsilon = 1e-6);
    assert_abs_diff_eq!(objective(&sols), degrees, epsilon = 1e-6);
    let ac = sols[0]
        .flows
        .iter()
        .find(|f| f.branch == "ac" && f.outage.is_none())
        .unwrap();
    assert_abs_diff_eq!(ac.flow.abs(), 50.0, epsilon = 1e-6);
}

#[test]
fn slack_penalty_must_exceed_every_unit_cost() {
    assert!(check_slack_penalty(1000.0, 999.0).is_ok());
    assert!(matches!(
        check_slack_penalty(70.0, 70.0),
        Err(Error::Config(_))
    ));
    assert!(check_slack_penalty(f64::INFINITY, 1.0).is_err());

    let g = grid(&["a", "b"], vec![branch("ab", "a", "b", 0.1, 15.0)]);
    let mut s = scenario(g, 1);
    s.units = vec![unit("g_a", "a", UnitKind::Pp, 200.0, 10.0, 30.0, 10.0)];
    s.electric_demand.insert("b".into(), vec![20.0]);
    s.config.slack_penalty = 25.0;
    let sched = market_schedule(&s).unwrap();
    let e = Engine::new(&s, &sched).unwrap();
    match e.run_horizon(1, 1, Mode::Base) {
        Err(Error::Config(m)) => assert!(m.contains("slack penalty"), "{m}"),
        other => panic!("expected a config error, got {other:?}"),
    }
}
