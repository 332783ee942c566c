use std::collections::BTreeMap;

use serde::Serialize;

use crate::adjust::{Domain, TechClass};
use crate::error::Result;
use crate::grid::dc_power_flow;
use crate::market::Field;

use super::{Engine, RedispatchSolution};

/// Tolerance of every post-solution check, in the native unit of the
/// quantity (MW, MW_th, MWh_th, K).
pub const TOLERANCE: f64 = 1e-6;

/// Largest residuals and overloads found by the post-solution checks.
#[derive(Clone, Debug, Default, PartialEq, Serialize)]
pub struct Verification {
    /// Hourly electric balance of all adjustments, MW.
    pub power_balance: f64,
    /// Hourly heat balance per network, MW_th.
    pub heat_balance: f64,
    /// Storage level recursion, MWh_th.
    pub tes_recursion: f64,
    /// Storage level or power outside its limits, MWh_th / MW_th.
    pub tes_bounds: f64,
    /// Building temperature recursion, K.
    pub hp_recursion: f64,
    /// Indoor temperature outside its corridor, K.
    pub hp_corridor: f64,
    /// Intact-grid overload from a direct DC solve, MW.
    pub n0_overload: f64,
    /// Post-contingency overload from direct DC solves, MW.
    pub n1_overload: f64,
    /// Difference between linear flow predictions and direct solves, MW.
    pub flow_model_gap: f64,
    /// Unit-hours with both an increase and a decrease above 1e-9.
    pub complementarity: usize,
    /// Slack energy used, MWh.
    pub slack_energy: f64,
}

impl Verification {
    pub fn residuals_ok(&self) -> bool {
        [
            self.power_balance,
            self.heat_balance,
            self.tes_recursion,
            self.hp_recursion,
        ]
        .iter()
        .all(|r| *r < TOLERANCE)
    }

    pub fn security_ok(&self) -> bool {
        self.n0_overload <= TOLERANCE
            && self.n1_overload <= TOLERANCE
            && self.flow_model_gap <= TOLERANCE
    }

    pub fn passes(&self) -> bool {
        self.residuals_ok()
            && self.security_ok()
            && self.tes_bounds <= TOLERANCE
            && self.hp_corridor <= TOLERANCE
            && self.complementarity == 0
    }
}

pub(super) fn verify(engine: &Engine, solutions: &[RedispatchSolution]) -> Result<Verification> {
    let s = engine.scenario;
    let topo = &engine.sensitivities.topology;
    let mut v = Verification::default();

    // Network of each heat-side unit.
    let mut network_of: BTreeMap<&str, &str> = BTreeMap::new();
    for d in &s.district_heating {
        for id in d.unit_ids() {
            network_of.insert(id, d.id.as_str());
        }
    }

    for sol in solutions {
        let iv = sol.interval;
        for row in &sol.node_deltas {
            v.power_balance = v.power_balance.max(row.iter().sum::<f64>().abs());
        }

        let mut heat: BTreeMap<(&str, usize), f64> = BTreeMap::new();
        for a in &sol.adjustments {
            if a.up > 1e-9 && a.down > 1e-9 {
                v.complementarity += 1;
            }
            if a.domain != Domain::Thermal {
                continue;
            }
            let Some(net) = network_of.get(a.unit.as_str()) else {
                continue;
            };
            let sign = if a.class == TechClass::Tes { -1.0 } else { 1.0 };
            *heat.entry((net, a.hour)).or_default() += sign * a.net();
        }
        for r in heat.values() {
            v.heat_balance = v.heat_balance.max(r.abs());
        }
        v.slack_energy += sol.slack_energy();

        // Storage levels must follow the loss recursion over absolute values.
        for d in &s.district_heating {
            for st in &d.storage {
                let states: Vec<_> = sol
                    .tes_states
                    .iter()
                    .filter(|x| x.storage == st.id)
                    .collect();
                for x in states {
                    let t = x.hour;
                    let prev = if t == iv.start {
                        if t == 0 {
                            st.e_init
                        } else {
                            engine.schedule.get(&st.id, t - 1, Field::E)?
                        }
                    } else {
                        sol.tes_states
                            .iter()
                            .find(|y| y.storage == st.id && y.hour == t - 1)
                            .map_or(f64::NAN, |y| y.level)
                    };
                    let q = engine.schedule.get(&st.id, t, Field::Q)? + x.delta_q;
                    let r = (x.level - (st.eta * prev + q)).abs();
                    v.tes_recursion =
                        v.tes_recursion
                            .max(if r.is_nan() { f64::INFINITY } else { r });
                    let over = (x.level - st.e_max).max(-x.level).max(q.abs() - st.q_max);
                    v.tes_bounds = v.tes_bounds.max(over);
                }
            }
        }

        // Building temperature deviations against an independent recursion.
        for vb in &engine.buildings {
            let mut prev = 0.0;
            let a = 1.0 - 1.0 / vb.tau();
            for st in sol.hp_states.iter().filter(|x| x.node == vb.node) {
                let r = if st.anchor {
                    st.delta_t.abs() + st.delta_phi_kw.abs()
                } else {
                    (st.delta_t - (a * prev + st.delta_phi_kw / vb.c)).abs()
                };
                v.hp_recursion = v.hp_recursion.max(r);
                let t = st.hour;
                let temp = vb.market_indoor_temp[t] + st.delta_t;
                let out = (vb.temp_min[t] - temp).max(temp - vb.temp_max[t]);
                let phi = vb.market_phi[t] + st.delta_phi_kw;
                let phi_out = ((-phi).max(phi - vb.phi_max[t])) / 1e3;
                v.hp_corridor = v.hp_corridor.max(out).max(phi_out);
                prev = st.delta_t;
            }
        }

        // Direct DC solves on the adjusted injections.
        let mut predicted: BTreeMap<(usize, &str, Option<&str>), f64> = BTreeMap::new();
        for f in &sol.flows {
            predicted.insert((f.hour, f.branch.as_str(), f.outage.as_deref()), f.flow);
        }
        for (k, t) in iv.hours().enumerate() {
            let inj: Vec<f64> = engine.market_injections[t]
                .iter()
                .zip(&sol.node_deltas[k])
                .map(|(a, b)| a + b)
                .collect();
            let mut shifts = vec![0.0; topo.n_branches()];
            for (p, &b) in topo.pst_branch.iter().enumerate() {
                shifts[b] += sol.pst_deltas[k][p];
            }
            let cases = std::iter::once(None).chain(topo.outages.iter().map(|&c| Some(c)));
            for outage in cases {
                let flows = dc_power_flow(topo, &inj, &shifts, outage)?;
                let out_id = outage.map(|c| topo.branch_ids[c].as_str());
                for &l in &topo.monitored {
                    if Some(l) == outage {
                        continue;
                    }
                    let over = flows[l].abs() - topo.limits[l];
                    match outage {
                        None => v.n0_overload = v.n0_overload.max(over),
                        Some(_) => v.n1_overload = v.n1_overload.max(over),
                    }
                    if let Some(p) = predicted.get(&(t, topo.branch_ids[l].as_str(), out_id)) {
                        v.flow_model_gap = v.flow_model_gap.max((p - flows[l]).abs());
                    }
                }
            }
        }
    }
    Ok(v)
}
