//! Interval LP assembly, the horizon loop and the two-stage heat pump
//! decomposition.

mod assemble;
mod verify;

use std::collections::BTreeMap;
use std::path::PathBuf;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::adjust::{Adjustment, Interval, TechClass};
use crate::district::TesState;
use crate::error::{Error, Result};
use crate::grid::SensitivityBundle;
use crate::heatpump::{HpState, VirtualBuilding};
use crate::lp::{write_mps, LpSolver, LpStatus, RevisedSimplex, RowGeneration, SolveOptions};
use crate::market::{hp_buildings, hp_key, Field, MarketSchedule};
use crate::scenario::Scenario;

pub use assemble::IntervalModel;
pub use verify::{Verification, TOLERANCE};

#[derive(
    Clone, Copy, Debug, Default, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize,
)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    #[default]
    /// Conventional measures only; heating systems keep their market points.
    Base,
    /// Heat pumps and power-to-heat may also be adjusted.
    Flex,
}

impl Mode {
    pub fn as_str(self) -> &'static str {
        match self {
            Mode::Base => "base",
            Mode::Flex => "flex",
        }
    }
}

/// How heat pumps enter an interval model.
#[derive(Clone, Debug, PartialEq)]
pub enum HeatPumpTreatment {
    /// Full building dynamics and free operating points.
    Dynamic,
    /// Consumption changes fixed per node and absolute hour, MW (up, down).
    Fixed(BTreeMap<String, BTreeMap<usize, (f64, f64)>>),
}

#[derive(Clone, Debug, PartialEq)]
pub struct IntervalSpec {
    pub interval: Interval,
    pub mode: Mode,
    pub heat_pumps: HeatPumpTreatment,
}

impl IntervalSpec {
    pub fn new(interval: Interval, mode: Mode) -> Self {
        Self {
            interval,
            mode,
            heat_pumps: HeatPumpTreatment::Dynamic,
        }
    }
}

/// Flow on a monitored branch at one hour, either intact (`outage = None`)
/// or after the outage of another branch.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FlowRecord {
    pub hour: usize,
    pub branch: String,
    pub outage: Option<String>,
    pub market_flow: f64,
    pub flow: f64,
    pub limit: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct RedispatchSolution {
    pub interval: Interval,
    pub mode: Mode,
    pub objective: f64,
    pub iterations: usize,
    pub adjustments: Vec<Adjustment>,
    /// Net injection change per local hour and node index, MW.
    pub node_deltas: Vec<Vec<f64>>,
    /// Angle change per local hour and phase shifter index, degrees.
    pub pst_deltas: Vec<Vec<f64>>,
    pub hp_states: Vec<HpState>,
    pub tes_states: Vec<TesState>,
    pub flows: Vec<FlowRecord>,
}

impl RedispatchSolution {
    /// Slack energy used, MWh.
    pub fn slack_energy(&self) -> f64 {
        self.adjustments
            .iter()
            .filter(|a| a.class == TechClass::Slack)
            .map(|a| a.up + a.down)
            .sum()
    }
}

/// Splits `hours` into consecutive intervals of `len` hours; the last may be shorter.
pub fn tile(hours: usize, len: usize) -> Vec<Interval> {
    assert!(len > 0, "interval length must be positive");
    (0..hours)
        .step_by(len)
        .map(|s| Interval::new(s, len.min(hours - s)))
        .collect()
}

/// Immutable inputs shared by all interval solves.
pub struct Engine<'a> {
    pub scenario: &'a Scenario,
    pub schedule: &'a MarketSchedule,
    pub sensitivities: SensitivityBundle,
    pub buildings: Vec<VirtualBuilding>,
    /// Market injection per hour and node, MW.
    pub market_injections: Vec<Vec<f64>>,
    /// Market flow per hour and branch, MW.
    pub market_flows: Vec<Vec<f64>>,
    pub options: SolveOptions,
    /// Directory receiving one MPS file per interval model.
    pub dump_lp: Option<PathBuf>,
    solver: RowGeneration<RevisedSimplex>,
}

impl<'a> Engine<'a> {
    pub fn new(scenario: &'a Scenario, schedule: &'a MarketSchedule) -> Result<Self> {
        let topo = scenario.grid.topology()?;
        let sensitivities = SensitivityBundle::compute(topo)?;
        let buildings = hp_buildings(scenario, schedule)?;
        let market_injections = market_injections(scenario, schedule, &sensitivities, &buildings)?;
        let market_flows = market_injections
            .iter()
            .map(|inj| sensitivities.flows_from_injections(inj))
            .collect();
        Ok(Self {
            scenario,
            schedule,
            sensitivities,
            buildings,
            market_injections,
            market_flows,
            options: scenario.config.solver,
            dump_lp: None,
            solver: RowGeneration::new(RevisedSimplex),
        })
    }

    pub fn assemble_interval_lp(&self, spec: &IntervalSpec) -> Result<IntervalModel> {
        assemble::assemble(self, spec)
    }

    pub fn solve_interval(&self, spec: &IntervalSpec) -> Result<RedispatchSolution> {
        let model = self.assemble_interval_lp(spec)?;
        if let Some(dir) = &self.dump_lp {
            std::fs::create_dir_all(dir)?;
            let name = format!(
                "{}_{:05}_{}",
                spec.mode.as_str(),
                spec.interval.start,
                spec.interval.len
            );
            let file = std::fs::File::create(dir.join(format!("{name}.mps")))?;
            write_mps(&model.lp, &name, std::io::BufWriter::new(file))?;
        }
        let sol = self.solver.solve(&model.lp, &self.options)?;
        if sol.status != LpStatus::Optimal {
            return Err(Error::Solver {
                start: spec.interval.start,
                status: sol.status,
            });
        }
        log::debug!(
            "{} interval at hour {}: {} vars, {} rows, {} iterations, objective {}",
            spec.mode.as_str(),
            spec.interval.start,
            model.lp.num_variables(),
            model.lp.num_constraints(),
            sol.iterations,
            sol.objective_value
        );
        Ok(model.extract(self, &sol))
    }

    fn solve_all(&self, specs: &[IntervalSpec]) -> Result<Vec<RedispatchSolution>> {
        specs.par_iter().map(|s| self.solve_interval(s)).collect()
    }

    /// Independent solves of consecutive intervals, returned in time order.
    pub fn run_horizon(
        &self,
        horizon: usize,
        interval_len: usize,
        mode: Mode,
    ) -> Result<Vec<RedispatchSolution>> {
        if interval_len == 0 {
            return Err(Error::Config("interval length must be at least 1".into()));
        }
        let specs: Vec<IntervalSpec> = tile(horizon, interval_len)
            .into_iter()
            .map(|i| IntervalSpec::new(i, mode))
            .collect();
        self.solve_all(&specs)
    }

    /// Flex run in two stages: short intervals decide heat pump operation,
    /// long intervals then optimize everything else with those heat pump
    /// changes fixed. Heat pump states come from the first stage.
    pub fn run_flex_decomposed(
        &self,
        horizon: usize,
        inner: usize,
        outer: usize,
    ) -> Result<Vec<RedispatchSolution>> {
        if inner == 0 || outer % inner != 0 {
            return Err(Error::Config(format!(
                "outer interval {outer} must be a multiple of inner interval {inner}"
            )));
        }
        let stage1 = self.run_horizon(horizon, inner, Mode::Flex)?;
        let mut fixed: BTreeMap<String, BTreeMap<usize, (f64, f64)>> = BTreeMap::new();
        let mut states: Vec<HpState> = Vec::new();
        for sol in &stage1 {
            for a in sol
                .adjustments
                .iter()
                .filter(|a| a.class == TechClass::HeatPump)
            {
                let node = a.unit.strip_prefix("hp:").unwrap_or(&a.unit).to_string();
                fixed
                    .entry(node)
                    .or_default()
                    .insert(a.hour, (a.up, a.down));
            }
            states.extend(sol.hp_states.iter().cloned());
        }
        let specs: Vec<IntervalSpec> = tile(horizon, outer)
            .into_iter()
            .map(|i| IntervalSpec {
                interval: i,
                mode: Mode::Flex,
                heat_pumps: HeatPumpTreatment::Fixed(fixed.clone()),
            })
            .collect();
        let mut stage2 = self.solve_all(&specs)?;
        for sol in &mut stage2 {
            let range = sol.interval.hours();
            let mut own: Vec<HpState> = states
                .iter()
                .filter(|s| range.contains(&s.hour))
                .cloned()
                .collect();
            own.sort_by(|a, b| a.node.cmp(&b.node).then(a.hour.cmp(&b.hour)));
            sol.hp_states = own;
        }
        Ok(stage2)
    }

    /// Runs `mode` as configured in the scenario: decomposed when the scenario
    /// asks for it and the mode is flex, plain otherwise.
    pub fn run_configured(
        &self,
        mode: Mode,
        interval_len: usize,
        decompose: Option<usize>,
    ) -> Result<Vec<RedispatchSolution>> {
        let horizon = self.scenario.horizon();
        match (mode, decompose) {
            (Mode::Flex, Some(inner)) if inner < interval_len => {
                self.run_flex_decomposed(horizon, inner, interval_len)
            }
            _ => self.run_horizon(horizon, interval_len, mode),
        }
    }

    /// Independent post-solution checks of model equations and network security.
    pub fn verify(&self, solutions: &[RedispatchSolution]) -> Result<Verification> {
        verify::verify(self, solutions)
    }
}

/// Market net injection per hour and node.
fn market_injections(
    s: &Scenario,
    sched: &MarketSchedule,
    bundle: &SensitivityBundle,
    buildings: &[VirtualBuilding],
) -> Result<Vec<Vec<f64>>> {
    let topo = &bundle.topology;
    let idx = |id: &str| {
        topo.node(id)
            .ok_or_else(|| Error::Validation(format!("unknown node '{id}'")))
    };
    let mut out = Vec::with_capacity(s.horizon());
    for t in 0..s.horizon() {
        let mut inj: Vec<f64> = s
            .nodal_demand(&topo.node_ids, t)
            .iter()
            .map(|d| -d)
            .collect();
        for u in &s.units {
            inj[idx(&u.node)?] += sched.get(&u.id, t, Field::P)?;
        }
        for d in &s.district_heating {
            for c in &d.chp {
                inj[idx(c.node.as_deref().unwrap_or(&d.node))?] += sched.get(&c.id, t, Field::P)?;
            }
            for p in &d.pth {
                inj[idx(p.node.as_deref().unwrap_or(&d.node))?] -= sched.get(&p.id, t, Field::P)?;
            }
        }
        for vb in buildings {
            inj[idx(&vb.node)?] -= sched.get(&hp_key(&vb.node), t, Field::P)?;
        }
        for l in &s.grid.hvdc_links {
            let f = sched.try_get(&l.id, t, Field::P).unwrap_or(0.0);
            inj[idx(&l.from)?] -= f;
            inj[idx(&l.to)?] += f;
        }
        out.push(inj);
    }
    Ok(out)
}
