//! Conventional congestion-management measures: power plants, RES
//! curtailment, pumped storage, HVDC set-points, phase shifters and the
//! per-node slack.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::adjust::{Adjustment, Domain, Injection, Interval, TechClass};
use crate::error::{Error, Result};
use crate::grid::{HvdcLink, PhaseShifter, Topology};
use crate::lp::{LinearProgram, Relation, VarId};
use crate::market::{Field, MarketSchedule};

/// Default penalty for slack injections and withdrawals, currency/MWh.
pub const DEFAULT_SLACK_PENALTY: f64 = 10_000.0;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum UnitKind {
    Pp,
    Res,
    Ps,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConventionalUnit {
    pub id: String,
    pub node: String,
    pub kind: UnitKind,
    #[serde(default)]
    pub p_min: f64,
    pub p_max: f64,
    /// Marginal cost used by the market stage, currency/MWh.
    #[serde(default)]
    pub marginal_cost: f64,
    /// Redispatch cost of an increase, currency/MWh.
    pub cost_up: f64,
    /// Redispatch cost of a decrease (RES: curtailment compensation), currency/MWh.
    pub cost_down: f64,
    /// Pumped storage only: largest shift around the market point, MW.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub flex_mw: Option<f64>,
}

impl ConventionalUnit {
    pub fn class(&self) -> TechClass {
        match self.kind {
            UnitKind::Pp => TechClass::PowerPlant,
            UnitKind::Res => TechClass::Res,
            UnitKind::Ps => TechClass::PumpedStorage,
        }
    }
}

/// Up/down variable pair of one entity at one local hour.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct UpDown {
    pub hour: usize,
    pub up: VarId,
    pub down: VarId,
}

#[derive(Clone, Debug)]
struct UnitVars {
    id: String,
    class: TechClass,
    hours: Vec<UpDown>,
}

/// Variables created for the conventional units of one interval.
#[derive(Clone, Debug, Default)]
pub struct ConventionalBlock {
    pub injections: Vec<Injection>,
    units: Vec<UnitVars>,
    interval: Option<Interval>,
}

impl ConventionalBlock {
    /// Variable pair of `unit` at local hour `hour`.
    pub fn vars(&self, unit: &str, hour: usize) -> Option<UpDown> {
        self.units
            .iter()
            .find(|u| u.id == unit)
            .and_then(|u| u.hours.get(hour).copied())
    }

    pub fn extract(&self, values: &[f64]) -> Vec<Adjustment> {
        let t0 = self.interval.map_or(0, |i| i.start);
        let mut out = Vec::new();
        for u in &self.units {
            for v in &u.hours {
                out.push(Adjustment {
                    hour: t0 + v.hour,
                    unit: u.id.clone(),
                    class: u.class,
                    domain: Domain::Electric,
                    up: values[v.up.0],
                    down: values[v.down.0],
                });
            }
        }
        out
    }
}

/// Redispatch variables for power plants, RES and pumped storage.
///
/// `res_available` maps RES ids to hourly available feed-in over the whole
/// horizon; units without an entry use `p_max`.
pub fn build_conventional_block(
    lp: &mut LinearProgram,
    topo: &Topology,
    units: &[ConventionalUnit],
    res_available: &BTreeMap<String, Vec<f64>>,
    schedule: &MarketSchedule,
    interval: Interval,
) -> Result<ConventionalBlock> {
    let mut block = ConventionalBlock {
        interval: Some(interval),
        ..Default::default()
    };
    for u in units {
        let node = topo.node(&u.node).ok_or_else(|| {
            Error::Validation(format!("unit '{}' at unknown node '{}'", u.id, u.node))
        })?;
        let mut hours = Vec::with_capacity(interval.len);
        for (k, t) in interval.hours().enumerate() {
            let p = schedule.get(&u.id, t, Field::P)?;
            let (up_max, down_max) = match u.kind {
                UnitKind::Pp => (u.p_max - p, p - u.p_min),
                UnitKind::Res => {
                    let avail = res_available
                        .get(&u.id)
                        .and_then(|s| s.get(t).copied())
                        .unwrap_or(u.p_max);
                    (avail - p, p)
                }
                UnitKind::Ps => {
                    let flex = u.flex_mw.unwrap_or(f64::INFINITY);
                    ((u.p_max - p).min(flex), (p - u.p_min).min(flex))
                }
            };
            let up = lp.add_variable(format!("{}_up_{t}", u.id), 0.0, up_max.max(0.0), u.cost_up);
            let down = lp.add_variable(
                format!("{}_dn_{t}", u.id),
                0.0,
                down_max.max(0.0),
                u.cost_down,
            );
            block.injections.push(Injection {
                hour: k,
                node,
                var: up,
                coeff: 1.0,
            });
            block.injections.push(Injection {
                hour: k,
                node,
                var: down,
                coeff: -1.0,
            });
            hours.push(UpDown { hour: k, up, down });
        }
        if u.kind == UnitKind::Ps {
            let terms = hours
                .iter()
                .flat_map(|v| [(v.up, 1.0), (v.down, -1.0)])
                .collect();
            lp.add_constraint(format!("{}_energy", u.id), terms, Relation::Eq(0.0));
        }
        block.units.push(UnitVars {
            id: u.id.clone(),
            class: u.class(),
            hours,
        });
    }
    Ok(block)
}

/// Checks that the slack penalty exceeds every real unit cost.
pub fn check_slack_penalty(penalty: f64, max_unit_cost: f64) -> Result<()> {
    if !(penalty > max_unit_cost) || !penalty.is_finite() {
        return Err(Error::Config(format!(
            "slack penalty {penalty} must exceed the largest unit cost {max_unit_cost}"
        )));
    }
    Ok(())
}

/// Per-node, per-hour fictive injection and withdrawal.
#[derive(Clone, Debug, Default)]
pub struct SlackBlock {
    pub injections: Vec<Injection>,
    vars: Vec<(usize, UpDown)>,
    start: usize,
}

impl SlackBlock {
    pub fn extract(&self, topo: &Topology, values: &[f64]) -> Vec<Adjustment> {
        self.vars
            .iter()
            .map(|(n, v)| Adjustment {
                hour: self.start + v.hour,
                unit: format!("slack:{}", topo.node_ids[*n]),
                class: TechClass::Slack,
                domain: Domain::Electric,
                up: values[v.up.0],
                down: values[v.down.0],
            })
            .collect()
    }
}

pub fn build_slack_block(
    lp: &mut LinearProgram,
    topo: &Topology,
    interval: Interval,
    penalty: f64,
    max_unit_cost: f64,
) -> Result<SlackBlock> {
    check_slack_penalty(penalty, max_unit_cost)?;
    let mut block = SlackBlock {
        start: interval.start,
        ..Default::default()
    };
    for (k, t) in interval.hours().enumerate() {
        for (n, id) in topo.node_ids.iter().enumerate() {
            let up = lp.add_variable(format!("slack_up_{id}_{t}"), 0.0, f64::INFINITY, penalty);
            let down = lp.add_variable(format!("slack_dn_{id}_{t}"), 0.0, f64::INFINITY, penalty);
            block.injections.push(Injection {
                hour: k,
                node: n,
                var: up,
                coeff: 1.0,
            });
            block.injections.push(Injection {
                hour: k,
                node: n,
                var: down,
                coeff: -1.0,
            });
            block.vars.push((n, UpDown { hour: k, up, down }));
        }
    }
    Ok(block)
}

/// HVDC set-point changes. `up` moves power from `from` to `to`.
#[derive(Clone, Debug, Default)]
pub struct HvdcBlock {
    pub injections: Vec<Injection>,
    vars: Vec<(String, UpDown)>,
    start: usize,
}

impl HvdcBlock {
    pub fn extract(&self, values: &[f64]) -> Vec<Adjustment> {
        self.vars
            .iter()
            .map(|(id, v)| Adjustment {
                hour: self.start + v.hour,
                unit: id.clone(),
                class: TechClass::Hvdc,
                domain: Domain::Electric,
                up: values[v.up.0],
                down: values[v.down.0],
            })
            .collect()
    }
}

/// Market HVDC flows are read from the schedule's `p_mw` when present and
/// default to zero otherwise (the market stage is network-blind).
pub fn build_hvdc_block(
    lp: &mut LinearProgram,
    topo: &Topology,
    links: &[HvdcLink],
    schedule: &MarketSchedule,
    interval: Interval,
) -> Result<HvdcBlock> {
    let mut block = HvdcBlock {
        start: interval.start,
        ..Default::default()
    };
    for link in links {
        let from = topo.node(&link.from).ok_or_else(|| {
            Error::Validation(format!(
                "HVDC '{}' at unknown node '{}'",
                link.id, link.from
            ))
        })?;
        let to = topo.node(&link.to).ok_or_else(|| {
            Error::Validation(format!("HVDC '{}' at unknown node '{}'", link.id, link.to))
        })?;
        for (k, t) in interval.hours().enumerate() {
            let f = schedule.try_get(&link.id, t, Field::P).unwrap_or(0.0);
            let cap = link.capacity_mw;
            let up = lp.add_variable(
                format!("{}_up_{t}", link.id),
                0.0,
                (cap - f).max(0.0),
                link.cost_per_mwh,
            );
            let down = lp.add_variable(
                format!("{}_dn_{t}", link.id),
                0.0,
                (cap + f).max(0.0),
                link.cost_per_mwh,
            );
            block.injections.extend([
                Injection {
                    hour: k,
                    node: from,
                    var: up,
                    coeff: -1.0,
                },
                Injection {
                    hour: k,
                    node: from,
                    var: down,
                    coeff: 1.0,
                },
                Injection {
                    hour: k,
                    node: to,
                    var: up,
                    coeff: 1.0,
                },
                Injection {
                    hour: k,
                    node: to,
                    var: down,
                    coeff: -1.0,
                },
            ]);
            block
                .vars
                .push((link.id.clone(), UpDown { hour: k, up, down }));
        }
    }
    Ok(block)
}

/// Angle term `coeff * var` (degrees) of phase shifter `pst` at local hour `hour`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct AngleTerm {
    pub hour: usize,
    pub pst: usize,
    pub var: VarId,
    pub coeff: f64,
}

#[derive(Clone, Debug, Default)]
pub struct PstBlock {
    pub angles: Vec<AngleTerm>,
    vars: Vec<(String, UpDown)>,
    start: usize,
}

impl PstBlock {
    pub fn extract(&self, values: &[f64]) -> Vec<Adjustment> {
        self.vars
            .iter()
            .map(|(id, v)| Adjustment {
                hour: self.start + v.hour,
                unit: id.clone(),
                class: TechClass::Pst,
                domain: Domain::Angle,
                up: values[v.up.0],
                down: values[v.down.0],
            })
            .collect()
    }
}

/// Phase shifter angle changes relative to the neutral market position.
pub fn build_pst_block(
    lp: &mut LinearProgram,
    topo: &Topology,
    psts: &[PhaseShifter],
    interval: Interval,
) -> Result<PstBlock> {
    let mut block = PstBlock {
        start: interval.start,
        ..Default::default()
    };
    for ps in psts {
        let p = topo
            .pst_ids
            .iter()
            .position(|id| *id == ps.id)
            .ok_or_else(|| Error::Validation(format!("unknown phase shifter '{}'", ps.id)))?;
        for (k, t) in interval.hours().enumerate() {
            let up = lp.add_variable(
                format!("{}_up_{t}", ps.id),
                0.0,
                ps.angle_max.max(0.0),
                ps.cost_per_degree,
            );
            let down = lp.add_variable(
                format!("{}_dn_{t}", ps.id),
                0.0,
                (-ps.angle_min).max(0.0),
                ps.cost_per_degree,
            );
            block.angles.push(AngleTerm {
                hour: k,
                pst: p,
                var: up,
                coeff: 1.0,
            });
            block.angles.push(AngleTerm {
                hour: k,
                pst: p,
                var: down,
                coeff: -1.0,
            });
            block
                .vars
                .push((ps.id.clone(), UpDown { hour: k, up, down }));
        }
    }
    Ok(block)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::{Branch, GridModel, Node};

    fn two_bus() -> Topology {
        GridModel {
            base_mva: 100.0,
            nodes: vec![
                Node {
                    id: "a".into(),
                    lon: 0.0,
                    lat: 0.0,
                    slack: false,
                },
                Node {
                    id: "b".into(),
                    lon: 1.0,
                    lat: 0.0,
                    slack: true,
                },
            ],
            branches: vec![Branch {
                id: "ab".into(),
                from: "a".into(),
                to: "b".into(),
                reactance: 0.1,
                flow_limit: 100.0,
                monitored: true,
                outage_candidate: false,
            }],
            phase_shifters: vec![],
            hvdc_links: vec![],
        }
        .topology()
        .unwrap()
    }

    fn unit(kind: UnitKind, p_min: f64, p_max: f64) -> ConventionalUnit {
        ConventionalUnit {
            id: "g".into(),
            node: "a".into(),
            kind,
            p_min,
            p_max,
            marginal_cost: 0.0,
            cost_up: 60.0,
            cost_down: 20.0,
            flex_mw: None,
        }
    }

    fn schedule(p: f64) -> MarketSchedule {
        let mut s = MarketSchedule::new(1);
        s.set("g", 0, Field::P, p);
        s
    }

    #[test]
    fn unit_at_max_has_no_headroom() {
        let mut lp = LinearProgram::new();
        let u = unit(UnitKind::Pp, 20.0, 300.0);
        let b = build_conventional_block(
            &mut lp,
            &two_bus(),
            &[u],
            &BTreeMap::new(),
            &schedule(300.0),
            Interval::new(0, 1),
        )
        .unwrap();
        let v = b.vars("g", 0).unwrap();
        assert_eq!(lp.variables[v.up.0].upper, 0.0);
        assert_eq!(lp.variables[v.down.0].upper, 280.0);
    }

    #[test]
    fn res_curtailment_bounded_by_feed_in() {
        let mut lp = LinearProgram::new();
        let u = unit(UnitKind::Res, 0.0, 80.0);
        let avail = BTreeMap::from([("g".to_string(), vec![50.0])]);
        let b = build_conventional_block(
            &mut lp,
            &two_bus(),
            &[u],
            &avail,
            &schedule(50.0),
            Interval::new(0, 1),
        )
        .unwrap();
        let v = b.vars("g", 0).unwrap();
        assert_eq!(lp.variables[v.down.0].upper, 50.0);
        assert_eq!(lp.variables[v.up.0].upper, 0.0);
    }

    #[test]
    fn redispatch_cost_arithmetic() {
        let mut lp = LinearProgram::new();
        let u = unit(UnitKind::Pp, 20.0, 300.0);
        let b = build_conventional_block(
            &mut lp,
            &two_bus(),
            &[u],
            &BTreeMap::new(),
            &schedule(100.0),
            Interval::new(0, 1),
        )
        .unwrap();
        let v = b.vars("g", 0).unwrap();
        let mut x = vec![0.0; lp.num_variables()];
        x[v.up.0] = 50.0;
        assert_eq!(lp.objective_value(&x), 3000.0);
    }

    #[test]
    fn schedule_gap_names_unit_and_hour() {
        let mut lp = LinearProgram::new();
        let u = unit(UnitKind::Pp, 0.0, 10.0);
        let err = build_conventional_block(
            &mut lp,
            &two_bus(),
            &[u],
            &BTreeMap::new(),
            &MarketSchedule::new(2),
            Interval::new(1, 1),
        )
        .unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("'g'") && msg.contains("hour 1"), "{msg}");
    }

    #[test]
    fn slack_penalty_must_dominate() {
        let mut lp = LinearProgram::new();
        assert!(matches!(
            build_slack_block(&mut lp, &two_bus(), Interval::new(0, 1), 50.0, 60.0),
            Err(Error::Config(_))
        ));
        let b = build_slack_block(
            &mut lp,
            &two_bus(),
            Interval::new(0, 2),
            DEFAULT_SLACK_PENALTY,
            60.0,
        )
        .unwrap();
        assert_eq!(b.injections.len(), 8);
        assert!(lp
            .variables
            .iter()
            .all(|v| v.cost == 10_000.0 && v.upper == f64::INFINITY));
    }
}
