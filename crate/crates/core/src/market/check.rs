use std::path::Path;

use crate::district::Turbine;
use crate::error::{Error, Result};
use crate::heatpump::VirtualBuilding;
use crate::scenario::Scenario;
use crate::units::UnitKind;

use super::dispatch::pth_cop;
use super::schedule::{hp_key, Field, MarketSchedule};

const TOL: f64 = 1e-6;

struct Checker<'a> {
    sched: &'a MarketSchedule,
    problems: Vec<String>,
}

impl Checker<'_> {
    fn get(&mut self, unit: &str, t: usize, f: Field) -> Option<f64> {
        let v = self.sched.try_get(unit, t, f);
        if v.is_none() {
            self.problems
                .push(format!("missing {} for '{unit}' at hour {t}", f.name()));
        }
        v
    }

    fn within(&mut self, unit: &str, t: usize, f: Field, v: f64, lo: f64, hi: f64) {
        if v < lo - TOL || v > hi + TOL {
            self.problems.push(format!(
                "{} of '{unit}' at hour {t} is {v}, outside [{lo}, {hi}]",
                f.name()
            ));
        }
    }
}

/// Lists every violated schedule invariant: static bounds, coupling
/// relations, storage and building recursions, and hourly electric and heat
/// balances.
pub fn check_schedule(s: &Scenario, sched: &MarketSchedule) -> Vec<String> {
    let hours = s.horizon();
    let mut c = Checker {
        sched,
        problems: Vec::new(),
    };
    if sched.hours < hours {
        c.problems.push(format!(
            "schedule covers {} hours, horizon is {hours}",
            sched.hours
        ));
        return c.problems;
    }
    let node_ids: Vec<String> = s.grid.nodes.iter().map(|n| n.id.clone()).collect();
    let mut supply = vec![0.0; hours];

    for u in &s.units {
        for t in 0..hours {
            let Some(p) = c.get(&u.id, t, Field::P) else {
                continue;
            };
            let (lo, hi) = match u.kind {
                UnitKind::Res => (
                    0.0,
                    s.res_availability
                        .get(&u.id)
                        .map_or(u.p_max, |a| a[t])
                        .min(u.p_max),
                ),
                _ => (u.p_min, u.p_max),
            };
            c.within(&u.id, t, Field::P, p, lo, hi);
            supply[t] += p;
        }
    }

    for d in &s.district_heating {
        let demand = s.heat_demand_of(&d.id);
        let mut heat = vec![0.0; hours];
        for u in &d.chp {
            for t in 0..hours {
                let (Some(p), Some(q)) = (c.get(&u.id, t, Field::P), c.get(&u.id, t, Field::Q))
                else {
                    continue;
                };
                c.within(&u.id, t, Field::Q, q, 0.0, u.q_max);
                c.within(&u.id, t, Field::P, p, u.p_min, u.p_max);
                let cond = p - u.sigma * q;
                let ok = match u.turbine {
                    Turbine::Bkp => cond.abs() <= TOL,
                    Turbine::Ext => cond >= -TOL,
                };
                if !ok {
                    c.problems.push(format!(
                        "power and heat of CHP '{}' at hour {t} are inconsistent",
                        u.id
                    ));
                }
                supply[t] += p;
                heat[t] += q;
            }
        }
        for u in &d.pth {
            for t in 0..hours {
                let (Some(p), Some(q)) = (c.get(&u.id, t, Field::P), c.get(&u.id, t, Field::Q))
                else {
                    continue;
                };
                c.within(&u.id, t, Field::P, p, 0.0, u.p_max);
                match pth_cop(s, u, t) {
                    Ok(cop) if (q - cop * p).abs() <= TOL => {}
                    Ok(_) => c.problems.push(format!(
                        "heat of PtH '{}' at hour {t} does not match COP",
                        u.id
                    )),
                    Err(e) => c.problems.push(e.to_string()),
                }
                supply[t] -= p;
                heat[t] += q;
            }
        }
        for b in &d.boilers {
            for t in 0..hours {
                let Some(q) = c.get(&b.id, t, Field::Q) else {
                    continue;
                };
                c.within(&b.id, t, Field::Q, q, 0.0, b.q_max);
                heat[t] += q;
            }
        }
        for r in &d.thermal_res {
            for t in 0..hours {
                let Some(q) = c.get(&r.id, t, Field::Q) else {
                    continue;
                };
                let avail = s
                    .thermal_res
                    .get(&r.id)
                    .map_or(r.q_max, |a| a[t])
                    .min(r.q_max);
                c.within(&r.id, t, Field::Q, q, 0.0, avail);
                heat[t] += q;
            }
        }
        for st in &d.storage {
            let mut prev = Some(st.e_init);
            for t in 0..hours {
                let (q, e) = (c.get(&st.id, t, Field::Q), c.get(&st.id, t, Field::E));
                if let (Some(q), Some(e)) = (q, e) {
                    c.within(&st.id, t, Field::Q, q, -st.q_max, st.q_max);
                    c.within(&st.id, t, Field::E, e, 0.0, st.e_max);
                    if let Some(p) = prev {
                        let expected = p * st.eta + q;
                        if (expected - e).abs() > TOL {
                            c.problems.push(format!(
                                "storage '{}' at hour {t}: level {e} differs from recursion {expected} by {}",
                                st.id,
                                (e - expected).abs()
                            ));
                        }
                    }
                    heat[t] -= q;
                }
                prev = e;
            }
        }
        for t in 0..hours {
            if (heat[t] - demand[t]).abs() > TOL {
                c.problems.push(format!(
                    "heat balance of network '{}' at hour {t} off by {}",
                    d.id,
                    heat[t] - demand[t]
                ));
            }
        }
    }

    match s.virtual_buildings() {
        Ok(buildings) => {
            for vb in buildings {
                let key = hp_key(&vb.node);
                let setpoint = s.heat_pumps.as_ref().map_or(21.0, |h| h.setpoint_c);
                let mut prev = Some(setpoint);
                for t in 0..hours {
                    let (ti, phi, p) = (
                        c.get(&key, t, Field::TIn),
                        c.get(&key, t, Field::Phi),
                        c.get(&key, t, Field::P),
                    );
                    if let (Some(ti), Some(phi)) = (ti, phi) {
                        c.within(&key, t, Field::Phi, phi, 0.0, vb.phi_max[t]);
                        if let Some(pr) = prev {
                            let expected = vb.step(pr, phi, vb.outdoor_temp[t]);
                            if (expected - ti).abs() > TOL {
                                c.problems.push(format!(
                                    "indoor temperature at '{}' hour {t} violates the building recursion",
                                    vb.node
                                ));
                            }
                        }
                        if let Some(p) = p {
                            if (p * 1e3 * vb.cop[t] - phi).abs() > 1e-3 {
                                c.problems.push(format!(
                                    "electric load at '{key}' hour {t} does not match COP"
                                ));
                            }
                            supply[t] -= p;
                        }
                    }
                    prev = ti;
                }
            }
        }
        Err(e) => c.problems.push(e.to_string()),
    }

    for t in 0..hours {
        let demand: f64 = s.nodal_demand(&node_ids, t).iter().sum();
        if (supply[t] - demand).abs() > TOL {
            c.problems.push(format!(
                "electric balance at hour {t} off by {} MW",
                supply[t] - demand
            ));
        }
    }
    c.problems
}

/// Reads an external schedule and rejects it unless every invariant holds.
pub fn import_schedule(path: &Path, s: &Scenario) -> Result<MarketSchedule> {
    let file = std::fs::File::open(path)?;
    let sched = MarketSchedule::read_csv(file, s.horizon())?;
    let problems = check_schedule(s, &sched);
    if problems.is_empty() {
        Ok(sched)
    } else {
        Err(Error::Validation(format!(
            "schedule {} rejected: {}",
            path.display(),
            problems.join("; ")
        )))
    }
}

/// Virtual buildings with the market baseline from `sched` and the configured
/// corridor attached.
pub fn hp_buildings(s: &Scenario, sched: &MarketSchedule) -> Result<Vec<VirtualBuilding>> {
    let Some(cfg) = &s.heat_pumps else {
        return Ok(Vec::new());
    };
    s.virtual_buildings()?
        .into_iter()
        .map(|vb| {
            let key = hp_key(&vb.node);
            let mut t_in = Vec::with_capacity(s.horizon());
            let mut phi = Vec::with_capacity(s.horizon());
            for t in 0..s.horizon() {
                t_in.push(sched.get(&key, t, Field::TIn)?);
                phi.push(sched.get(&key, t, Field::Phi)?);
            }
            Ok(vb.with_market(t_in, phi, cfg.corridor_k))
        })
        .collect()
}
