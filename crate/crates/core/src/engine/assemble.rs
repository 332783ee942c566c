use crate::adjust::{Injection, Interval};
use crate::district::{build_dhn_block, DhnPart, DhnSeries};
use crate::error::{Error, Result};
use crate::heatpump::{build_hp_block, build_hp_fixed_block, HpBlock};
use crate::lp::{LinearProgram, LpSolution, Relation, VarId};
use crate::units::{
    build_conventional_block, build_hvdc_block, build_pst_block, build_slack_block, AngleTerm,
    ConventionalBlock, HvdcBlock, PstBlock, SlackBlock,
};

use super::{Engine, FlowRecord, HeatPumpTreatment, IntervalSpec, Mode, RedispatchSolution};

/// Coefficients below this magnitude are dropped from flow rows.
const COEFF_EPS: f64 = 1e-12;

/// An assembled interval LP together with the blocks needed to read the
/// solution back.
pub struct IntervalModel {
    pub lp: LinearProgram,
    pub spec: IntervalSpec,
    conventional: ConventionalBlock,
    slack: SlackBlock,
    hvdc: HvdcBlock,
    pst: PstBlock,
    hp: HpBlock,
    dhn: Vec<DhnPart>,
    injections: Vec<Vec<Injection>>,
    angles: Vec<Vec<AngleTerm>>,
}

fn ctx<T>(r: Result<T>, what: impl FnOnce() -> String) -> Result<T> {
    r.map_err(|e| e.context(what()))
}

pub(super) fn assemble(engine: &Engine, spec: &IntervalSpec) -> Result<IntervalModel> {
    let s = engine.scenario;
    let sched = engine.schedule;
    let bundle = &engine.sensitivities;
    let topo = &bundle.topology;
    let iv: Interval = spec.interval;
    if iv.len == 0 || iv.end() > s.horizon() {
        return Err(Error::Config(format!(
            "interval [{}, {}) outside the {}-hour horizon",
            iv.start,
            iv.end(),
            s.horizon()
        )));
    }
    let flex = spec.mode == Mode::Flex;
    let mut lp = LinearProgram::new();

    let conventional = ctx(
        build_conventional_block(&mut lp, topo, &s.units, &s.res_availability, sched, iv),
        || "conventional units".into(),
    )?;
    let hvdc = ctx(
        build_hvdc_block(&mut lp, topo, &s.grid.hvdc_links, sched, iv),
        || "HVDC links".into(),
    )?;
    let pst = ctx(
        build_pst_block(&mut lp, topo, &s.grid.phase_shifters, iv),
        || "phase shifters".into(),
    )?;
    let hp = match (&s.heat_pumps, flex, &spec.heat_pumps) {
        (Some(cfg), true, HeatPumpTreatment::Dynamic) => ctx(
            build_hp_block(
                &mut lp,
                topo,
                &engine.buildings,
                iv,
                cfg.cost_up,
                cfg.cost_down,
            ),
            || "heat pumps".into(),
        )?,
        (Some(cfg), true, HeatPumpTreatment::Fixed(fixed)) => ctx(
            build_hp_fixed_block(&mut lp, topo, fixed, iv, cfg.cost_up, cfg.cost_down),
            || "heat pumps".into(),
        )?,
        _ => HpBlock::default(),
    };
    let series = DhnSeries {
        cop: &s.cop,
        thermal_res: &s.thermal_res,
    };
    let mut dhn = Vec::with_capacity(s.district_heating.len());
    for d in &s.district_heating {
        dhn.push(ctx(
            build_dhn_block(&mut lp, topo, d, sched, series, iv, flex),
            || format!("district heating network '{}'", d.id),
        )?);
    }
    let slack = build_slack_block(&mut lp, topo, iv, s.config.slack_penalty, s.max_unit_cost())?;

    let mut injections: Vec<Vec<Injection>> = vec![Vec::new(); iv.len];
    let all = conventional
        .injections
        .iter()
        .chain(&hvdc.injections)
        .chain(&hp.injections)
        .chain(dhn.iter().flat_map(|d| &d.injections))
        .chain(&slack.injections);
    for inj in all {
        injections[inj.hour].push(*inj);
    }
    let mut angles: Vec<Vec<AngleTerm>> = vec![Vec::new(); iv.len];
    for a in &pst.angles {
        angles[a.hour].push(*a);
    }

    for (k, t) in iv.hours().enumerate() {
        let terms = injections[k].iter().map(|i| (i.var, i.coeff)).collect();
        lp.add_constraint(format!("balance_{t}"), terms, Relation::Eq(0.0));
    }

    let n_branches = topo.n_branches();
    for (k, t) in iv.hours().enumerate() {
        let init = &engine.market_flows[t];
        // Flow change on every branch as a linear expression.
        let exprs: Vec<Vec<(VarId, f64)>> = (0..n_branches)
            .map(|b| {
                let mut e: Vec<(VarId, f64)> = Vec::new();
                for i in &injections[k] {
                    let c = bundle.ptdf[(b, i.node)] * i.coeff;
                    if c.abs() > COEFF_EPS {
                        e.push((i.var, c));
                    }
                }
                for a in &angles[k] {
                    let c = bundle.psdf[(b, a.pst)] * a.coeff;
                    if c.abs() > COEFF_EPS {
                        e.push((a.var, c));
                    }
                }
                e
            })
            .collect();
        for &l in &topo.monitored {
            let lim = topo.limits[l];
            lp.add_lazy_constraint(
                format!("n0_{}_{t}", topo.branch_ids[l]),
                exprs[l].clone(),
                Relation::Range(-lim - init[l], lim - init[l]),
            );
        }
        for (ci, &c) in topo.outages.iter().enumerate() {
            for (li, &l) in topo.monitored.iter().enumerate() {
                let Some(f) = bundle.lodf_at(li, ci) else {
                    continue;
                };
                let lim = topo.limits[l];
                let base = init[l] + f * init[c];
                let mut terms = exprs[l].clone();
                terms.extend(exprs[c].iter().filter_map(|&(v, a)| {
                    let x = f * a;
                    (x.abs() > COEFF_EPS).then_some((v, x))
                }));
                lp.add_lazy_constraint(
                    format!("n1_{}_{}_{t}", topo.branch_ids[l], topo.branch_ids[c]),
                    terms,
                    Relation::Range(-lim - base, lim - base),
                );
            }
        }
    }

    Ok(IntervalModel {
        lp,
        spec: spec.clone(),
        conventional,
        slack,
        hvdc,
        pst,
        hp,
        dhn,
        injections,
        angles,
    })
}

impl IntervalModel {
    pub(super) fn extract(&self, engine: &Engine, sol: &LpSolution) -> RedispatchSolution {
        let x = &sol.values;
        let bundle = &engine.sensitivities;
        let topo = &bundle.topology;
        let iv = self.spec.interval;

        let mut adjustments = self.conventional.extract(x);
        adjustments.extend(self.hvdc.extract(x));
        adjustments.extend(self.pst.extract(x));
        adjustments.extend(self.hp.extract(x));
        for d in &self.dhn {
            adjustments.extend(d.extract(x));
        }
        adjustments.extend(self.slack.extract(topo, x));
        adjustments.sort_by(|a, b| {
            (a.hour, a.class, &a.unit, a.domain).cmp(&(b.hour, b.class, &b.unit, b.domain))
        });

        let mut node_deltas = vec![vec![0.0; topo.n_nodes()]; iv.len];
        for (k, terms) in self.injections.iter().enumerate() {
            for i in terms {
                node_deltas[k][i.node] += i.coeff * x[i.var.0];
            }
        }
        let mut pst_deltas = vec![vec![0.0; topo.pst_ids.len()]; iv.len];
        for (k, terms) in self.angles.iter().enumerate() {
            for a in terms {
                pst_deltas[k][a.pst] += a.coeff * x[a.var.0];
            }
        }

        let mut flows = Vec::new();
        for (k, t) in iv.hours().enumerate() {
            let init = &engine.market_flows[t];
            // The balance row holds to solver tolerance; remove the tiny
            // residual at the slack node so the flow update accepts it.
            let mut deltas = node_deltas[k].clone();
            let residual: f64 = deltas.iter().sum();
            deltas[topo.slack] -= residual;
            let n0 = bundle
                .n0_flow(init, &deltas, &pst_deltas[k])
                .expect("dimensions fixed by construction");
            for &l in &topo.monitored {
                flows.push(FlowRecord {
                    hour: t,
                    branch: topo.branch_ids[l].clone(),
                    outage: None,
                    market_flow: init[l],
                    flow: n0[l],
                    limit: topo.limits[l],
                });
            }
            for (ci, &c) in topo.outages.iter().enumerate() {
                for (li, &l) in topo.monitored.iter().enumerate() {
                    let Some(f) = bundle.lodf_at(li, ci) else {
                        continue;
                    };
                    flows.push(FlowRecord {
                        hour: t,
                        branch: topo.branch_ids[l].clone(),
                        outage: Some(topo.branch_ids[c].clone()),
                        market_flow: init[l] + f * init[c],
                        flow: n0[l] + f * n0[c],
                        limit: topo.limits[l],
                    });
                }
            }
        }

        let mut tes_states = Vec::new();
        for d in &self.dhn {
            tes_states.extend(d.tes_states(x));
        }
        tes_states.sort_by(|a, b| a.storage.cmp(&b.storage).then(a.hour.cmp(&b.hour)));

        RedispatchSolution {
            interval: iv,
            mode: self.spec.mode,
            objective: sol.objective_value,
            iterations: sol.iterations,
            adjustments,
            node_deltas,
            pst_deltas,
            hp_states: self.hp.states(&engine.buildings, x, iv.len),
            tes_states,
            flows,
        }
    }
}
