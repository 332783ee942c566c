//! In-memory scenario fixtures for engine-level tests.

use std::collections::BTreeMap;

use redispatch_core::district::{
    DistrictHeatingNetwork, HeatOnlyBoiler, PthKind, PthUnit, ThermalStorage,
};
use redispatch_core::engine::{Engine, Mode, RedispatchSolution};
use redispatch_core::grid::GridModel;
use redispatch_core::market::MarketSchedule;
use redispatch_core::pipeline::market_schedule;
use redispatch_core::scenario::{RunConfig, RunMode, Scenario, SeriesFiles, FORMAT_VERSION};
use redispatch_core::units::{ConventionalUnit, UnitKind, DEFAULT_SLACK_PENALTY};

use super::grids::{branch, grid};

pub fn scenario(grid: GridModel, hours: usize) -> Scenario {
    Scenario {
        format_version: FORMAT_VERSION.into(),
        name: "fixture".into(),
        grid,
        units: vec![],
        district_heating: vec![],
        heat_pumps: None,
        config: RunConfig {
            horizon_hours: hours,
            interval_hours: hours,
            mode: RunMode::Both,
            decompose_hp_hours: None,
            slack_penalty: DEFAULT_SLACK_PENALTY,
            histogram_bin_mw: 5.0,
            solver: Default::default(),
        },
        series_files: SeriesFiles {
            electric_demand: "electric_demand.csv".into(),
            ..Default::default()
        },
        electric_demand: BTreeMap::new(),
        res_availability: BTreeMap::new(),
        heat_demand: BTreeMap::new(),
        cop: BTreeMap::new(),
        outdoor_temp: BTreeMap::new(),
        thermal_res: BTreeMap::new(),
        market_schedule: None,
    }
}

pub fn unit(
    id: &str,
    node: &str,
    kind: UnitKind,
    p_max: f64,
    marginal: f64,
    up: f64,
    down: f64,
) -> ConventionalUnit {
    ConventionalUnit {
        id: id.into(),
        node: node.into(),
        kind,
        p_min: 0.0,
        p_max,
        marginal_cost: marginal,
        cost_up: up,
        cost_down: down,
        flex_mw: None,
    }
}

/// Market schedule from the built-in market stage.
pub fn solve(s: &Scenario, mode: Mode) -> (MarketSchedule, Vec<RedispatchSolution>) {
    let sched = market_schedule(s).unwrap();
    let sols = {
        let e = Engine::new(s, &sched).unwrap();
        e.run_horizon(s.horizon(), s.config.interval_hours, mode)
            .unwrap()
    };
    (sched, sols)
}

/// Triangle a-b-c with a cheap plant at the slack a, an expensive one at c,
/// demand at c and branch a-c limited to 50 MW.
pub fn three_bus(demand: &[f64]) -> Scenario {
    let g = grid(
        &["a", "b", "c"],
        vec![
            branch("ab", "a", "b", 0.1, 100.0),
            branch("ac", "a", "c", 0.1, 50.0),
            branch("bc", "b", "c", 0.1, 100.0),
        ],
    );
    let mut s = scenario(g, demand.len());
    s.units = vec![
        unit("g_a", "a", UnitKind::Pp, 200.0, 20.0, 30.0, 10.0),
        unit("g_c", "c", UnitKind::Pp, 100.0, 50.0, 60.0, 10.0),
    ];
    s.electric_demand.insert("c".into(), demand.to_vec());
    s
}

/// Wind at the slack a feeds an electric boiler (COP 1) in a district
/// heating network at b over a 15 MW line. Gas at b is the conventional
/// alternative; a boiler and optionally a storage back up the heat supply.
pub fn pth_pocket(heat: &[f64], with_storage: bool) -> Scenario {
    let g = grid(&["a", "b"], vec![branch("ab", "a", "b", 0.1, 15.0)]);
    let hours = heat.len();
    let mut s = scenario(g, hours);
    s.units = vec![
        unit("wind", "a", UnitKind::Res, 40.0, 0.0, 30.0, 30.0),
        unit("gas", "b", UnitKind::Pp, 100.0, 50.0, 70.0, 20.0),
    ];
    s.res_availability.insert("wind".into(), vec![40.0; hours]);
    s.heat_demand.insert("dhn".into(), heat.to_vec());
    s.series_files.res_availability = Some("res_availability.csv".into());
    s.series_files.heat_demand = Some("heat_demand.csv".into());
    s.district_heating.push(DistrictHeatingNetwork {
        id: "dhn".into(),
        node: "b".into(),
        chp: vec![],
        pth: vec![PthUnit {
            id: "boiler_el".into(),
            node: None,
            kind: PthKind::ElectricBoiler,
            p_max: 50.0,
            cop: Some(1.0),
            cost_up: 0.0,
            cost_down: 0.0,
            heat_cost: 1.0,
        }],
        storage: if with_storage {
            vec![ThermalStorage {
                id: "tes".into(),
                e_max: 100.0,
                q_max: 50.0,
                eta: 1.0,
                e_init: 10.0,
            }]
        } else {
            vec![]
        },
        boilers: vec![HeatOnlyBoiler {
            id: "hob".into(),
            q_max: 50.0,
            fuel_cost: 40.0,
            cost_down: 0.0,
        }],
        thermal_res: vec![],
    });
    s
}

/// Wind at the slack a and 10 000 heat-pump-heated buildings at b behind a
/// 20 MW line. Local demand at b follows `demand`.
pub fn hp_pocket(demand: &[f64]) -> Scenario {
    use redispatch_core::heatpump::{BuildingType, HeatPumpConfig, WeatherCluster};
    let mut g = grid(&["a", "b"], vec![branch("ab", "a", "b", 0.1, 20.0)]);
    g.nodes[0].lon = 0.0;
    g.nodes[1].lon = 10.0;
    let hours = demand.len();
    let mut s = scenario(g, hours);
    s.units = vec![
        unit("wind", "a", UnitKind::Res, 100.0, 0.0, 30.0, 30.0),
        unit("gas", "b", UnitKind::Pp, 100.0, 50.0, 70.0, 20.0),
    ];
    s.res_availability.insert("wind".into(), vec![100.0; hours]);
    s.electric_demand.insert("b".into(), demand.to_vec());
    s.heat_pumps = Some(HeatPumpConfig {
        building_types: vec![BuildingType {
            id: "house".into(),
            r: 5.0,
            c: 10.0,
            max_heating_kw: 10.0,
        }],
        clusters: vec![WeatherCluster {
            id: "wc".into(),
            lon: 9.0,
            lat: 0.0,
            buildings: [("house".to_string(), 10_000)].into_iter().collect(),
        }],
        setpoint_c: 21.0,
        corridor_k: 1.0,
        cost_up: 5.0,
        cost_down: 5.0,
    });
    s.cop.insert("wc".into(), vec![3.0; hours]);
    s.outdoor_temp.insert("wc".into(), vec![1.0; hours]);
    s
}
