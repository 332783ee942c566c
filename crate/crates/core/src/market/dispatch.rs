use std::cmp::Ordering;

use crate::district::{DistrictHeatingNetwork, Turbine};
use crate::error::{Error, Result};
use crate::heatpump::VirtualBuilding;
use crate::scenario::Scenario;
use crate::units::UnitKind;

use super::schedule::{hp_key, Field, MarketSchedule};

/// Supply offer for one hour: `min` is must-run, `max` the capacity.
#[derive(Clone, Debug, PartialEq)]
pub struct Offer {
    pub id: String,
    pub cost: f64,
    pub min: f64,
    pub max: f64,
}

/// Result of clearing one hour.
#[derive(Clone, Debug, PartialEq)]
pub struct Clearing {
    pub dispatch: Vec<f64>,
    /// Cost of the marginal offer.
    pub price: f64,
    /// Demand left unserved.
    pub deficit: f64,
    /// Must-run output in excess of demand.
    pub surplus: f64,
}

fn by_cost(offers: &[Offer]) -> Vec<usize> {
    let mut order: Vec<usize> = (0..offers.len()).collect();
    order.sort_by(|&a, &b| {
        offers[a]
            .cost
            .partial_cmp(&offers[b].cost)
            .unwrap_or(Ordering::Equal)
            .then_with(|| offers[a].id.cmp(&offers[b].id))
    });
    order
}

/// Least-cost dispatch of `offers` against `demand`, ties broken by id.
pub fn clear_merit_order(offers: &[Offer], demand: f64) -> Clearing {
    let mut dispatch: Vec<f64> = offers.iter().map(|o| o.min).collect();
    let must_run: f64 = dispatch.iter().sum();
    let mut rest = demand - must_run;
    let order = by_cost(offers);
    let mut price = order.first().map_or(0.0, |&i| offers[i].cost);
    if rest < 0.0 {
        return Clearing {
            dispatch,
            price,
            deficit: 0.0,
            surplus: -rest,
        };
    }
    for &i in &order {
        let head = (offers[i].max - offers[i].min).max(0.0);
        if head <= 0.0 {
            continue;
        }
        if rest <= 0.0 {
            break;
        }
        price = offers[i].cost;
        let take = head.min(rest);
        dispatch[i] += take;
        rest -= take;
    }
    Clearing {
        dispatch,
        price,
        deficit: rest.max(0.0),
        surplus: 0.0,
    }
}

fn electric_offers(s: &Scenario, t: usize) -> Vec<Offer> {
    s.units
        .iter()
        .map(|u| match u.kind {
            UnitKind::Pp => Offer {
                id: u.id.clone(),
                cost: u.marginal_cost,
                min: u.p_min,
                max: u.p_max,
            },
            UnitKind::Res => {
                let avail = s
                    .res_availability
                    .get(&u.id)
                    .map_or(u.p_max, |a| a[t])
                    .clamp(0.0, u.p_max);
                Offer {
                    id: u.id.clone(),
                    cost: u.marginal_cost,
                    min: 0.0,
                    max: avail,
                }
            }
            // Storage is left idle by the market stage.
            UnitKind::Ps => Offer {
                id: u.id.clone(),
                cost: u.marginal_cost,
                min: 0.0,
                max: 0.0,
            },
        })
        .collect()
}

/// Heat offers of one network at one hour given the electricity price.
fn heat_offers(
    s: &Scenario,
    d: &DistrictHeatingNetwork,
    t: usize,
    price: f64,
) -> Result<Vec<Offer>> {
    let mut offers = Vec::new();
    for r in &d.thermal_res {
        let avail = s
            .thermal_res
            .get(&r.id)
            .map_or(r.q_max, |a| a[t])
            .clamp(0.0, r.q_max);
        offers.push(Offer {
            id: r.id.clone(),
            cost: 0.0,
            min: 0.0,
            max: avail,
        });
    }
    for p in &d.pth {
        let cop = pth_cop(s, p, t)?;
        offers.push(Offer {
            id: p.id.clone(),
            cost: price / cop + p.heat_cost,
            min: 0.0,
            max: p.p_max * cop,
        });
    }
    for c in &d.chp {
        let (cost, min, max) = match c.turbine {
            Turbine::Bkp => (
                c.fuel_cost * c.sigma / c.eta_cond - price * c.sigma,
                c.p_min / c.sigma,
                c.q_max.min(c.p_max / c.sigma),
            ),
            Turbine::Ext => {
                let eta = c.eta_total_max.unwrap_or(1.0);
                let max = if c.sigma > 0.0 {
                    c.q_max.min(c.p_max / c.sigma)
                } else {
                    c.q_max
                };
                (
                    c.fuel_cost * (1.0 + c.sigma) / eta - price * c.sigma,
                    0.0,
                    max,
                )
            }
        };
        offers.push(Offer {
            id: c.id.clone(),
            cost,
            min,
            max,
        });
    }
    for b in &d.boilers {
        offers.push(Offer {
            id: b.id.clone(),
            cost: b.fuel_cost,
            min: 0.0,
            max: b.q_max,
        });
    }
    Ok(offers)
}

pub(crate) fn pth_cop(s: &Scenario, p: &crate::district::PthUnit, t: usize) -> Result<f64> {
    crate::district::DhnSeries {
        cop: &s.cop,
        thermal_res: &s.thermal_res,
    }
    .pth_cop(p, t)
}

/// Hours sorted ascending by `key`, ties by hour.
fn ranked(hours: &[usize], key: &[f64]) -> Vec<usize> {
    let mut h = hours.to_vec();
    h.sort_by(|&a, &b| {
        key[a]
            .partial_cmp(&key[b])
            .unwrap_or(Ordering::Equal)
            .then(a.cmp(&b))
    });
    h
}

/// Hours per storage cycling window and charge/discharge hours per window.
const TES_WINDOW: usize = 24;
const TES_CYCLE_HOURS: usize = 4;

/// Greedy storage schedule: charge in the cheapest hours of each day and
/// discharge in the priciest, within power, level and supply limits.
fn tes_profile(
    store: &crate::district::ThermalStorage,
    marginal: &[f64],
    demand: &[f64],
    headroom: &[f64],
    floor: &[f64],
) -> (Vec<f64>, Vec<f64>) {
    let h = marginal.len();
    let mut plan = vec![0.0; h];
    let mut start = 0;
    while start < h {
        let end = (start + TES_WINDOW).min(h);
        let hours: Vec<usize> = (start..end).collect();
        let k = TES_CYCLE_HOURS.min(hours.len() / 2);
        let rate = store.q_max.min(store.e_max / k.max(1) as f64);
        let r = ranked(&hours, marginal);
        for i in 0..k {
            let (cheap, dear) = (r[i], r[r.len() - 1 - i]);
            if marginal[dear] - marginal[cheap] > 1e-9 {
                plan[cheap] = rate;
                plan[dear] = -rate;
            }
        }
        start = end;
    }
    let mut q = vec![0.0; h];
    let mut e = vec![0.0; h];
    let mut level = store.e_init;
    for t in 0..h {
        let carried = level * store.eta;
        let flow = if plan[t] > 0.0 {
            plan[t].min(store.e_max - carried).min(headroom[t]).max(0.0)
        } else if plan[t] < 0.0 {
            -(-plan[t]).min(carried).min((demand[t] - floor[t]).max(0.0))
        } else {
            0.0
        };
        q[t] = flow;
        level = carried + flow;
        e[t] = level;
    }
    (q, e)
}

/// Copper-plate least-cost dispatch of electricity and district heat over the
/// scenario horizon, with heat pumps holding their set-point.
pub fn merit_order_dispatch(s: &Scenario) -> Result<MarketSchedule> {
    let hours = s.horizon();
    let mut sched = MarketSchedule::new(hours);
    let node_ids: Vec<String> = s.grid.nodes.iter().map(|n| n.id.clone()).collect();
    let base_demand: Vec<f64> = (0..hours)
        .map(|t| s.nodal_demand(&node_ids, t).iter().sum())
        .collect();

    // Electricity price without sector coupling.
    let price: Vec<f64> = (0..hours)
        .map(|t| clear_merit_order(&electric_offers(s, t), base_demand[t]).price)
        .collect();

    let mut extra_load = vec![0.0; hours];
    let mut chp_power = vec![0.0; hours];

    if let Some(cfg) = &s.heat_pumps {
        for vb in s.virtual_buildings()? {
            let (t_in, phi) = hp_baseline(&vb, cfg.setpoint_c);
            let key = hp_key(&vb.node);
            for t in 0..hours {
                let p = phi[t] / vb.cop[t] / 1e3;
                sched.set(&key, t, Field::P, p);
                sched.set(&key, t, Field::TIn, t_in[t]);
                sched.set(&key, t, Field::Phi, phi[t]);
                extra_load[t] += p;
            }
        }
    }

    let mut heat_deficits = Vec::new();
    for d in &s.district_heating {
        let demand = s.heat_demand_of(&d.id);
        let offers: Vec<Vec<Offer>> = (0..hours)
            .map(|t| heat_offers(s, d, t, price[t]))
            .collect::<Result<_>>()?;
        let mut net_demand = demand.clone();
        for store in &d.storage {
            let mut marginal = vec![0.0; hours];
            let mut headroom = vec![0.0; hours];
            let mut floor = vec![0.0; hours];
            for t in 0..hours {
                let c = clear_merit_order(&offers[t], net_demand[t]);
                marginal[t] = c.price;
                let cap: f64 = offers[t].iter().map(|o| o.max).sum();
                floor[t] = offers[t].iter().map(|o| o.min).sum();
                headroom[t] = (cap - net_demand[t]).max(0.0);
            }
            let (q, e) = tes_profile(store, &marginal, &net_demand, &headroom, &floor);
            for t in 0..hours {
                net_demand[t] += q[t];
                sched.set(&store.id, t, Field::Q, q[t]);
                sched.set(&store.id, t, Field::E, e[t]);
            }
        }
        for t in 0..hours {
            let c = clear_merit_order(&offers[t], net_demand[t]);
            if c.deficit > 1e-9 || c.surplus > 1e-9 {
                heat_deficits.push(format!("{}@{t}", d.id));
            }
            for (o, &q) in offers[t].iter().zip(&c.dispatch) {
                sched.set(&o.id, t, Field::Q, q);
            }
            for p in &d.pth {
                let q = sched.try_get(&p.id, t, Field::Q).unwrap_or(0.0);
                let el = q / pth_cop(s, p, t)?;
                sched.set(&p.id, t, Field::P, el);
                extra_load[t] += el;
            }
            for c in &d.chp {
                let q = sched.try_get(&c.id, t, Field::Q).unwrap_or(0.0);
                let p = match c.turbine {
                    Turbine::Bkp => c.sigma * q,
                    Turbine::Ext => {
                        let back = c.sigma * q;
                        let cond = if price[t] > c.fuel_cost / c.eta_cond {
                            c.p_max - back
                        } else {
                            (c.p_min - back).max(0.0)
                        };
                        back + cond.max(0.0)
                    }
                };
                sched.set(&c.id, t, Field::P, p);
                chp_power[t] += p;
            }
        }
    }
    if !heat_deficits.is_empty() {
        return Err(Error::Validation(format!(
            "heat demand cannot be met by the network portfolio at: {}",
            heat_deficits.join(", ")
        )));
    }

    let mut deficits = Vec::new();
    for t in 0..hours {
        let demand = base_demand[t] + extra_load[t] - chp_power[t];
        let offers = electric_offers(s, t);
        let c = clear_merit_order(&offers, demand);
        if c.deficit > 1e-9 {
            deficits.push(format!("hour {t} short by {:.3} MW", c.deficit));
        }
        if c.surplus > 1e-9 {
            deficits.push(format!("hour {t} must-run surplus of {:.3} MW", c.surplus));
        }
        for (o, &p) in offers.iter().zip(&c.dispatch) {
            sched.set(&o.id, t, Field::P, p);
        }
    }
    if !deficits.is_empty() {
        return Err(Error::Validation(format!(
            "electric demand exceeds available capacity: {}",
            deficits.join(", ")
        )));
    }

    let problems = super::check_schedule(s, &sched);
    if !problems.is_empty() {
        return Err(Error::Validation(format!(
            "generated market schedule is inconsistent: {}",
            problems.join("; ")
        )));
    }
    Ok(sched)
}

/// Indoor temperature and heating power (kW) that track the set-point as
/// closely as the heating capacity allows, starting at the set-point.
pub(crate) fn hp_baseline(vb: &VirtualBuilding, setpoint: f64) -> (Vec<f64>, Vec<f64>) {
    let hours = vb.cop.len();
    let mut t_in = Vec::with_capacity(hours);
    let mut phi = Vec::with_capacity(hours);
    let mut prev = setpoint;
    for t in 0..hours {
        let out = vb.outdoor_temp[t];
        let need = vb.c * (setpoint - prev) + (prev - out) / vb.r;
        let p = need.clamp(0.0, vb.phi_max[t]);
        let next = vb.step(prev, p, out);
        phi.push(p);
        t_in.push(next);
        prev = next;
    }
    (t_in, phi)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn offer(id: &str, cost: f64, max: f64) -> Offer {
        Offer {
            id: id.into(),
            cost,
            min: 0.0,
            max,
        }
    }

    #[test]
    fn merit_order_fills_cheapest_first() {
        let c = clear_merit_order(
            &[offer("dear", 80.0, 100.0), offer("cheap", 20.0, 100.0)],
            120.0,
        );
        assert_eq!(c.dispatch, vec![20.0, 100.0]);
        assert_eq!(c.price, 80.0);
        assert_eq!(c.deficit, 0.0);
    }

    #[test]
    fn shortfall_reported() {
        let c = clear_merit_order(&[offer("a", 1.0, 10.0)], 15.0);
        assert_eq!(c.deficit, 5.0);
    }

    #[test]
    fn cheap_pth_beats_boiler() {
        // 10/MWh electricity at COP 3 plus heat cost 1 against a boiler at 40.
        let pth = offer("pth", 10.0 / 3.0 + 1.0, 30.0);
        let hob = offer("hob", 40.0, 30.0);
        let c = clear_merit_order(&[hob, pth], 20.0);
        assert_eq!(c.dispatch, vec![0.0, 20.0]);
    }
}
