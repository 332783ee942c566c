//! District heating portfolios: CHP units, power-to-heat, thermal storage,
//! heat-only boilers and thermal RES feeding one shared heat balance per
//! network.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::adjust::{split, Adjustment, Domain, Injection, Interval, TechClass};
use crate::error::{Error, Result};
use crate::grid::Topology;
use crate::lp::{LinearProgram, Relation, VarId};
use crate::market::{Field, MarketSchedule};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Turbine {
    /// Back-pressure: power follows heat with a fixed ratio.
    Bkp,
    /// Extraction-condensing: power and heat adjustable separately.
    Ext,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ChpUnit {
    pub id: String,
    /// Grid node; defaults to the network node.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub node: Option<String>,
    pub turbine: Turbine,
    pub eta_cond: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub eta_total_max: Option<f64>,
    /// Power-to-heat ratio.
    pub sigma: f64,
    #[serde(default)]
    pub p_min: f64,
    pub p_max: f64,
    pub q_max: f64,
    /// Currency per MWh of fuel.
    pub fuel_cost: f64,
    /// Cost per MWh of additional fuel; defaults to `fuel_cost`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cost_th_up: Option<f64>,
    /// Cost per MWh of saved fuel; defaults to 0.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cost_th_down: Option<f64>,
}

impl ChpUnit {
    pub fn cost_up(&self) -> f64 {
        self.cost_th_up.unwrap_or(self.fuel_cost)
    }

    pub fn cost_down(&self) -> f64 {
        self.cost_th_down.unwrap_or(0.0)
    }

    /// Heat-dependent fuel factor of an extraction unit.
    fn ext_heat_factor(&self) -> Result<f64> {
        match self.eta_total_max {
            Some(eta) if eta > 0.0 => Ok((1.0 + self.sigma) / eta),
            _ => Err(Error::Validation(format!(
                "extraction CHP '{}' needs a positive eta_total_max",
                self.id
            ))),
        }
    }
}

/// Fuel change (MWh per hour) of a CHP unit. Back-pressure units use `dp`,
/// extraction units the condensing part `dp_cond` and the heat change `dq`.
pub fn chp_fuel_delta(unit: &ChpUnit, dp: f64, dp_cond: f64, dq: f64) -> Result<f64> {
    match unit.turbine {
        Turbine::Bkp => Ok(dp / unit.eta_cond),
        Turbine::Ext => Ok(dp_cond / unit.eta_cond + unit.ext_heat_factor()? * dq),
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PthKind {
    HeatPump,
    ElectricBoiler,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PthUnit {
    pub id: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub node: Option<String>,
    pub kind: PthKind,
    /// Electric capacity, MW.
    pub p_max: f64,
    /// Constant COP; when absent the `cop` series column named by the unit id is used.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cop: Option<f64>,
    /// Cost per MWh_el of added consumption.
    #[serde(default)]
    pub cost_up: f64,
    /// Cost per MWh_el of reduced consumption.
    #[serde(default)]
    pub cost_down: f64,
    /// Cost per MWh_th of changed heat output, either direction.
    #[serde(default = "one")]
    pub heat_cost: f64,
}

fn one() -> f64 {
    1.0
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ThermalStorage {
    pub id: String,
    /// MWh_th.
    pub e_max: f64,
    /// MW_th, charging and discharging.
    pub q_max: f64,
    /// Per-hour retention factor.
    pub eta: f64,
    /// Level before the first hour, MWh_th.
    pub e_init: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HeatOnlyBoiler {
    pub id: String,
    pub q_max: f64,
    /// Currency per MWh_th.
    pub fuel_cost: f64,
    /// Cost per MWh_th of reduced output.
    #[serde(default)]
    pub cost_down: f64,
}

/// Curtailable heat feed-in such as solar thermal.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ThermalRes {
    pub id: String,
    /// Capacity, MW_th; the `thermal_res` series column gives hourly availability.
    pub q_max: f64,
    #[serde(default = "one")]
    pub cost_up: f64,
    #[serde(default = "one")]
    pub cost_down: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DistrictHeatingNetwork {
    pub id: String,
    pub node: String,
    #[serde(default)]
    pub chp: Vec<ChpUnit>,
    #[serde(default)]
    pub pth: Vec<PthUnit>,
    #[serde(default)]
    pub storage: Vec<ThermalStorage>,
    #[serde(default)]
    pub boilers: Vec<HeatOnlyBoiler>,
    #[serde(default)]
    pub thermal_res: Vec<ThermalRes>,
}

impl DistrictHeatingNetwork {
    pub fn has_heat_source(&self) -> bool {
        !(self.chp.is_empty()
            && self.pth.is_empty()
            && self.boilers.is_empty()
            && self.thermal_res.is_empty())
    }

    pub fn unit_ids(&self) -> impl Iterator<Item = &str> {
        self.chp
            .iter()
            .map(|u| u.id.as_str())
            .chain(self.pth.iter().map(|u| u.id.as_str()))
            .chain(self.storage.iter().map(|u| u.id.as_str()))
            .chain(self.boilers.iter().map(|u| u.id.as_str()))
            .chain(self.thermal_res.iter().map(|u| u.id.as_str()))
    }
}

/// Hourly series a network's units read from the scenario: COP per PtH unit
/// and availability per thermal RES, keyed by unit id over the whole horizon.
#[derive(Clone, Copy, Debug)]
pub struct DhnSeries<'a> {
    pub cop: &'a BTreeMap<String, Vec<f64>>,
    pub thermal_res: &'a BTreeMap<String, Vec<f64>>,
}

impl DhnSeries<'_> {
    pub fn pth_cop(&self, unit: &PthUnit, hour: usize) -> Result<f64> {
        let cop = match unit.cop {
            Some(c) => c,
            None => self
                .cop
                .get(&unit.id)
                .and_then(|s| s.get(hour).copied())
                .ok_or_else(|| {
                    Error::Validation(format!("no COP for PtH unit '{}' at hour {hour}", unit.id))
                })?,
        };
        if !(cop > 0.0) {
            return Err(Error::Validation(format!(
                "COP of PtH unit '{}' at hour {hour} is not positive",
                unit.id
            )));
        }
        Ok(cop)
    }

    pub fn res_available(&self, unit: &ThermalRes, hour: usize) -> f64 {
        self.thermal_res
            .get(&unit.id)
            .and_then(|s| s.get(hour).copied())
            .unwrap_or(unit.q_max)
    }
}

/// Linear expression over LP variables.
type Expr = Vec<(VarId, f64)>;

fn eval(e: &Expr, values: &[f64]) -> f64 {
    e.iter().map(|(v, c)| c * values[v.0]).sum()
}

/// How one adjustment record is read back from the solution.
#[derive(Clone, Debug)]
struct Reporter {
    unit: String,
    class: TechClass,
    domain: Domain,
    hour: usize,
    up: Expr,
    down: Expr,
    /// Report the split of `up - down` rather than the two parts.
    net: bool,
}

impl Reporter {
    fn read(&self, start: usize, values: &[f64]) -> Adjustment {
        let (mut up, mut down) = (eval(&self.up, values), eval(&self.down, values));
        if self.net {
            (up, down) = split(up - down);
        }
        Adjustment {
            hour: start + self.hour,
            unit: self.unit.clone(),
            class: self.class,
            domain: self.domain,
            up,
            down,
        }
    }
}

/// Heat contribution `coeff * var` (MW_th) at local hour `hour`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct HeatTerm {
    pub hour: usize,
    pub var: VarId,
    pub coeff: f64,
}

/// Storage state at one hour.
#[derive(Clone, Debug, PartialEq)]
pub struct TesState {
    pub storage: String,
    pub hour: usize,
    pub delta_q: f64,
    pub delta_e: f64,
    /// Resulting level, MWh_th.
    pub level: f64,
}

#[derive(Clone, Debug)]
struct TesRecord {
    id: String,
    hour: usize,
    dq: Option<VarId>,
    de: Option<VarId>,
    market_level: f64,
}

/// LP fragment of one or more district heating units.
#[derive(Clone, Debug, Default)]
pub struct DhnPart {
    pub injections: Vec<Injection>,
    pub heat: Vec<HeatTerm>,
    reporters: Vec<Reporter>,
    tes: Vec<TesRecord>,
    start: usize,
}

impl DhnPart {
    fn new(interval: Interval) -> Self {
        Self {
            start: interval.start,
            ..Default::default()
        }
    }

    fn absorb(&mut self, other: DhnPart) {
        self.injections.extend(other.injections);
        self.heat.extend(other.heat);
        self.reporters.extend(other.reporters);
        self.tes.extend(other.tes);
    }

    pub fn extract(&self, values: &[f64]) -> Vec<Adjustment> {
        self.reporters
            .iter()
            .map(|r| r.read(self.start, values))
            .collect()
    }

    pub fn tes_states(&self, values: &[f64]) -> Vec<TesState> {
        self.tes
            .iter()
            .map(|r| {
                let de = r.de.map_or(0.0, |v| values[v.0]);
                TesState {
                    storage: r.id.clone(),
                    hour: r.hour,
                    delta_q: r.dq.map_or(0.0, |v| values[v.0]),
                    delta_e: de,
                    level: r.market_level + de,
                }
            })
            .collect()
    }

    /// Net heat change per local hour implied by `values`.
    pub fn heat_balance(&self, values: &[f64], len: usize) -> Vec<f64> {
        let mut out = vec![0.0; len];
        for h in &self.heat {
            out[h.hour] += h.coeff * values[h.var.0];
        }
        out
    }
}

fn node_of(
    topo: &Topology,
    unit_node: Option<&String>,
    dhn: &DistrictHeatingNetwork,
    unit: &str,
) -> Result<usize> {
    let id = unit_node.unwrap_or(&dhn.node);
    topo.node(id)
        .ok_or_else(|| Error::Validation(format!("unit '{unit}' at unknown node '{id}'")))
}

/// Power-to-heat consumption changes and their heat effect via the COP.
pub fn build_pth_block(
    lp: &mut LinearProgram,
    node: usize,
    unit: &PthUnit,
    schedule: &MarketSchedule,
    series: DhnSeries,
    interval: Interval,
) -> Result<DhnPart> {
    let mut part = DhnPart::new(interval);
    for (k, t) in interval.hours().enumerate() {
        let p = schedule.get(&unit.id, t, Field::P)?;
        let cop = series.pth_cop(unit, t)?;
        let up = lp.add_variable(
            format!("{}_up_{t}", unit.id),
            0.0,
            (unit.p_max - p).max(0.0),
            unit.cost_up + unit.heat_cost * cop,
        );
        let down = lp.add_variable(
            format!("{}_dn_{t}", unit.id),
            0.0,
            p.max(0.0),
            unit.cost_down + unit.heat_cost * cop,
        );
        part.injections.push(Injection {
            hour: k,
            node,
            var: up,
            coeff: -1.0,
        });
        part.injections.push(Injection {
            hour: k,
            node,
            var: down,
            coeff: 1.0,
        });
        part.heat.push(HeatTerm {
            hour: k,
            var: up,
            coeff: cop,
        });
        part.heat.push(HeatTerm {
            hour: k,
            var: down,
            coeff: -cop,
        });
        part.reporters.push(Reporter {
            unit: unit.id.clone(),
            class: TechClass::PowerToHeat,
            domain: Domain::Electric,
            hour: k,
            up: vec![(up, 1.0)],
            down: vec![(down, 1.0)],
            net: false,
        });
        part.reporters.push(Reporter {
            unit: unit.id.clone(),
            class: TechClass::PowerToHeat,
            domain: Domain::Thermal,
            hour: k,
            up: vec![(up, cop)],
            down: vec![(down, cop)],
            net: false,
        });
    }
    Ok(part)
}

/// CHP heat and power changes with fuel coupling. Thermal costs price the
/// fuel change.
pub fn build_chp_block(
    lp: &mut LinearProgram,
    node: usize,
    unit: &ChpUnit,
    schedule: &MarketSchedule,
    interval: Interval,
) -> Result<DhnPart> {
    if !(unit.eta_cond > 0.0 && unit.eta_cond <= 1.0) {
        return Err(Error::Validation(format!(
            "CHP '{}' eta_cond must lie in (0, 1]",
            unit.id
        )));
    }
    let mut part = DhnPart::new(interval);
    let (c_up, c_dn) = (unit.cost_up(), unit.cost_down());
    let sigma = unit.sigma;
    for (k, t) in interval.hours().enumerate() {
        let p = schedule.get(&unit.id, t, Field::P)?;
        let q = schedule.get(&unit.id, t, Field::Q)?;
        let mut q_hi = unit.q_max - q;
        let mut q_lo = -q;
        let el: Expr;
        match unit.turbine {
            Turbine::Bkp => {
                if sigma > 0.0 {
                    q_hi = q_hi.min(unit.p_max / sigma - q);
                    q_lo = q_lo.max(unit.p_min / sigma - q);
                }
                let fuel = sigma / unit.eta_cond;
                let up = lp.add_variable(
                    format!("{}_qup_{t}", unit.id),
                    0.0,
                    q_hi.max(0.0),
                    c_up * fuel,
                );
                let down = lp.add_variable(
                    format!("{}_qdn_{t}", unit.id),
                    0.0,
                    (-q_lo).max(0.0),
                    c_dn * fuel,
                );
                part.heat.push(HeatTerm {
                    hour: k,
                    var: up,
                    coeff: 1.0,
                });
                part.heat.push(HeatTerm {
                    hour: k,
                    var: down,
                    coeff: -1.0,
                });
                el = vec![(up, sigma), (down, -sigma)];
                part.reporters.push(Reporter {
                    unit: unit.id.clone(),
                    class: TechClass::Chp,
                    domain: Domain::Thermal,
                    hour: k,
                    up: vec![(up, 1.0)],
                    down: vec![(down, 1.0)],
                    net: false,
                });
            }
            Turbine::Ext => {
                let kq = unit.ext_heat_factor()?;
                let pc = p - sigma * q;
                let qu = lp.add_variable(format!("{}_qup_{t}", unit.id), 0.0, q_hi.max(0.0), 0.0);
                let qd =
                    lp.add_variable(format!("{}_qdn_{t}", unit.id), 0.0, (-q_lo).max(0.0), 0.0);
                let pu = lp.add_variable(
                    format!("{}_pcup_{t}", unit.id),
                    0.0,
                    (unit.p_max - pc).max(0.0),
                    0.0,
                );
                let pd = lp.add_variable(format!("{}_pcdn_{t}", unit.id), 0.0, pc.max(0.0), 0.0);
                let fu = lp.add_variable(format!("{}_fup_{t}", unit.id), 0.0, f64::INFINITY, c_up);
                let fd = lp.add_variable(format!("{}_fdn_{t}", unit.id), 0.0, f64::INFINITY, c_dn);
                let ie = 1.0 / unit.eta_cond;
                lp.add_constraint(
                    format!("{}_fuel_{t}", unit.id),
                    vec![
                        (fu, 1.0),
                        (fd, -1.0),
                        (pu, -ie),
                        (pd, ie),
                        (qu, -kq),
                        (qd, kq),
                    ],
                    Relation::Eq(0.0),
                );
                el = vec![(pu, 1.0), (pd, -1.0), (qu, sigma), (qd, -sigma)];
                lp.add_constraint(
                    format!("{}_power_{t}", unit.id),
                    el.clone(),
                    Relation::Range(unit.p_min - p, unit.p_max - p),
                );
                part.heat.push(HeatTerm {
                    hour: k,
                    var: qu,
                    coeff: 1.0,
                });
                part.heat.push(HeatTerm {
                    hour: k,
                    var: qd,
                    coeff: -1.0,
                });
                part.reporters.push(Reporter {
                    unit: unit.id.clone(),
                    class: TechClass::Chp,
                    domain: Domain::Thermal,
                    hour: k,
                    up: vec![(qu, 1.0)],
                    down: vec![(qd, 1.0)],
                    net: true,
                });
            }
        }
        for &(v, c) in &el {
            part.injections.push(Injection {
                hour: k,
                node,
                var: v,
                coeff: c,
            });
        }
        part.reporters.push(Reporter {
            unit: unit.id.clone(),
            class: TechClass::Chp,
            domain: Domain::Electric,
            hour: k,
            up: el,
            down: Vec::new(),
            net: true,
        });
    }
    Ok(part)
}

/// Storage charge changes and level deviations. The first hour keeps the
/// market state and the last hour returns to the market level.
pub fn build_tes_block(
    lp: &mut LinearProgram,
    storage: &ThermalStorage,
    schedule: &MarketSchedule,
    interval: Interval,
) -> Result<DhnPart> {
    let id = &storage.id;
    let mut part = DhnPart::new(interval);
    let mut levels = Vec::with_capacity(interval.len);
    for t in interval.hours() {
        let e = schedule.get(id, t, Field::E)?;
        let q = schedule.get(id, t, Field::Q)?;
        let prev = if t == 0 {
            storage.e_init
        } else {
            schedule.get(id, t - 1, Field::E)?
        };
        let expected = prev * storage.eta + q;
        if (expected - e).abs() > 1e-6 {
            return Err(Error::Validation(format!(
                "market level of storage '{id}' at hour {t} is {e}, recursion gives {expected}"
            )));
        }
        levels.push((e, q));
    }
    let last = interval.len - 1;
    let mut prev_de: Option<VarId> = None;
    for (k, t) in interval.hours().enumerate() {
        let (e, q) = levels[k];
        if k == 0 {
            part.tes.push(TesRecord {
                id: id.clone(),
                hour: t,
                dq: None,
                de: None,
                market_level: e,
            });
            continue;
        }
        let dq = lp.add_variable(
            format!("{id}_dq_{t}"),
            -storage.q_max - q,
            storage.q_max - q,
            0.0,
        );
        let (lo, hi) = if k == last {
            (0.0, 0.0)
        } else {
            (-e, storage.e_max - e)
        };
        let de = lp.add_variable(format!("{id}_de_{t}"), lo, hi, 0.0);
        let mut terms = vec![(de, 1.0), (dq, -1.0)];
        if let Some(p) = prev_de {
            terms.push((p, -storage.eta));
        }
        lp.add_constraint(format!("{id}_level_{t}"), terms, Relation::Eq(0.0));
        part.heat.push(HeatTerm {
            hour: k,
            var: dq,
            coeff: -1.0,
        });
        part.reporters.push(Reporter {
            unit: id.clone(),
            class: TechClass::Tes,
            domain: Domain::Thermal,
            hour: k,
            up: vec![(dq, 1.0)],
            down: Vec::new(),
            net: true,
        });
        part.tes.push(TesRecord {
            id: id.clone(),
            hour: t,
            dq: Some(dq),
            de: Some(de),
            market_level: e,
        });
        prev_de = Some(de);
    }
    Ok(part)
}

pub fn build_hob_block(
    lp: &mut LinearProgram,
    boiler: &HeatOnlyBoiler,
    schedule: &MarketSchedule,
    interval: Interval,
) -> Result<DhnPart> {
    let mut part = DhnPart::new(interval);
    for (k, t) in interval.hours().enumerate() {
        let q = schedule.get(&boiler.id, t, Field::Q)?;
        let up = lp.add_variable(
            format!("{}_up_{t}", boiler.id),
            0.0,
            (boiler.q_max - q).max(0.0),
            boiler.fuel_cost,
        );
        let down = lp.add_variable(
            format!("{}_dn_{t}", boiler.id),
            0.0,
            q.max(0.0),
            boiler.cost_down,
        );
        part.heat.push(HeatTerm {
            hour: k,
            var: up,
            coeff: 1.0,
        });
        part.heat.push(HeatTerm {
            hour: k,
            var: down,
            coeff: -1.0,
        });
        part.reporters.push(Reporter {
            unit: boiler.id.clone(),
            class: TechClass::Hob,
            domain: Domain::Thermal,
            hour: k,
            up: vec![(up, 1.0)],
            down: vec![(down, 1.0)],
            net: false,
        });
    }
    Ok(part)
}

pub fn build_thermal_res_block(
    lp: &mut LinearProgram,
    unit: &ThermalRes,
    schedule: &MarketSchedule,
    series: DhnSeries,
    interval: Interval,
) -> Result<DhnPart> {
    let mut part = DhnPart::new(interval);
    for (k, t) in interval.hours().enumerate() {
        let q = schedule.get(&unit.id, t, Field::Q)?;
        let avail = series.res_available(unit, t);
        let up = lp.add_variable(
            format!("{}_up_{t}", unit.id),
            0.0,
            (avail - q).max(0.0),
            unit.cost_up,
        );
        let down = lp.add_variable(
            format!("{}_dn_{t}", unit.id),
            0.0,
            q.max(0.0),
            unit.cost_down,
        );
        part.heat.push(HeatTerm {
            hour: k,
            var: up,
            coeff: 1.0,
        });
        part.heat.push(HeatTerm {
            hour: k,
            var: down,
            coeff: -1.0,
        });
        part.reporters.push(Reporter {
            unit: unit.id.clone(),
            class: TechClass::ThermalRes,
            domain: Domain::Thermal,
            hour: k,
            up: vec![(up, 1.0)],
            down: vec![(down, 1.0)],
            net: false,
        });
    }
    Ok(part)
}

/// All units of one network plus its hourly heat balance. Power-to-heat
/// units are left out when `include_pth` is false.
pub fn build_dhn_block(
    lp: &mut LinearProgram,
    topo: &Topology,
    dhn: &DistrictHeatingNetwork,
    schedule: &MarketSchedule,
    series: DhnSeries,
    interval: Interval,
    include_pth: bool,
) -> Result<DhnPart> {
    let mut part = DhnPart::new(interval);
    for u in &dhn.chp {
        let node = node_of(topo, u.node.as_ref(), dhn, &u.id)?;
        part.absorb(build_chp_block(lp, node, u, schedule, interval)?);
    }
    if include_pth {
        for u in &dhn.pth {
            let node = node_of(topo, u.node.as_ref(), dhn, &u.id)?;
            part.absorb(build_pth_block(lp, node, u, schedule, series, interval)?);
        }
    }
    for s in &dhn.storage {
        part.absorb(build_tes_block(lp, s, schedule, interval)?);
    }
    for b in &dhn.boilers {
        part.absorb(build_hob_block(lp, b, schedule, interval)?);
    }
    for r in &dhn.thermal_res {
        part.absorb(build_thermal_res_block(lp, r, schedule, series, interval)?);
    }
    let mut rows: Vec<Vec<(VarId, f64)>> = vec![Vec::new(); interval.len];
    for h in &part.heat {
        rows[h.hour].push((h.var, h.coeff));
    }
    for (k, terms) in rows.into_iter().enumerate() {
        if !terms.is_empty() {
            lp.add_constraint(
                format!("heat_{}_{}", dhn.id, interval.start + k),
                terms,
                Relation::Eq(0.0),
            );
        }
    }
    Ok(part)
}
