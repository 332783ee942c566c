use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::adjust::{Adjustment, Domain, TechClass};
use crate::engine::{Mode, RedispatchSolution};
use crate::error::{Error, Result};
use crate::scenario::Scenario;

use super::{
    CaseData, Correlation, Histogram, IntervalSummary, VolumeReport, ELECTRIC_ROWS, THERMAL_ROWS,
};

pub const RUN_FILE: &str = "run.json";

#[derive(Serialize, Deserialize)]
struct AdjustmentRow {
    hour: usize,
    unit: String,
    class: String,
    domain: String,
    up: f64,
    down: f64,
}

#[derive(Serialize)]
struct FlowRow<'a> {
    hour: usize,
    branch: &'a str,
    outage: &'a str,
    market_flow: f64,
    flow: f64,
    limit: f64,
}

#[derive(Serialize)]
struct HpRow<'a> {
    node: &'a str,
    hour: usize,
    delta_t: f64,
    delta_phi_kw: f64,
    delta_p_kw: f64,
    anchor: bool,
}

#[derive(Serialize)]
struct TesRow<'a> {
    storage: &'a str,
    hour: usize,
    delta_q: f64,
    delta_e: f64,
    level: f64,
}

#[derive(Serialize)]
struct NodeRow<'a> {
    node: &'a str,
    injection_up_mwh: f64,
    injection_down_mwh: f64,
    hp_net_mwh: f64,
    pth_net_mwh: f64,
}

/// CSV writer that emits `header` even when no records follow.
fn writer(path: &Path, header: &[&str]) -> Result<csv::Writer<fs::File>> {
    let mut w = csv::WriterBuilder::new()
        .has_headers(false)
        .from_path(path)?;
    w.write_record(header)?;
    Ok(w)
}

/// Writes the solution files of one case into `dir`.
pub fn write_case(dir: &Path, scenario: &Scenario, sols: &[RedispatchSolution]) -> Result<()> {
    fs::create_dir_all(dir)?;
    let mut w = writer(
        &dir.join("adjustments.csv"),
        &["hour", "unit", "class", "domain", "up", "down"],
    )?;
    for s in sols {
        for a in &s.adjustments {
            if a.up == 0.0 && a.down == 0.0 {
                continue;
            }
            w.serialize(AdjustmentRow {
                hour: a.hour,
                unit: a.unit.clone(),
                class: a.class.as_str().into(),
                domain: a.domain.as_str().into(),
                up: a.up,
                down: a.down,
            })?;
        }
    }
    w.flush()?;

    let mut w = writer(
        &dir.join("flows.csv"),
        &["hour", "branch", "outage", "market_flow", "flow", "limit"],
    )?;
    for s in sols {
        for f in &s.flows {
            w.serialize(FlowRow {
                hour: f.hour,
                branch: &f.branch,
                outage: f.outage.as_deref().unwrap_or(""),
                market_flow: f.market_flow,
                flow: f.flow,
                limit: f.limit,
            })?;
        }
    }
    w.flush()?;

    let mut w = writer(
        &dir.join("hp.csv"),
        &[
            "node",
            "hour",
            "delta_t",
            "delta_phi_kw",
            "delta_p_kw",
            "anchor",
        ],
    )?;
    for s in sols {
        for h in &s.hp_states {
            w.serialize(HpRow {
                node: &h.node,
                hour: h.hour,
                delta_t: h.delta_t,
                delta_phi_kw: h.delta_phi_kw,
                delta_p_kw: h.delta_p_kw,
                anchor: h.anchor,
            })?;
        }
    }
    w.flush()?;

    let mut w = writer(
        &dir.join("tes.csv"),
        &["storage", "hour", "delta_q", "delta_e", "level"],
    )?;
    for s in sols {
        for t in &s.tes_states {
            w.serialize(TesRow {
                storage: &t.storage,
                hour: t.hour,
                delta_q: t.delta_q,
                delta_e: t.delta_e,
                level: t.level,
            })?;
        }
    }
    w.flush()?;

    let mut w = writer(
        &dir.join("intervals.csv"),
        &["start", "len", "objective", "iterations", "slack_mwh"],
    )?;
    for s in sols {
        w.serialize(IntervalSummary {
            start: s.interval.start,
            len: s.interval.len,
            objective: s.objective,
            iterations: s.iterations,
            slack_mwh: s.slack_energy(),
        })?;
    }
    w.flush()?;

    write_nodes(dir, scenario, sols)
}

fn write_nodes(dir: &Path, scenario: &Scenario, sols: &[RedispatchSolution]) -> Result<()> {
    let nodes: Vec<&str> = scenario.grid.nodes.iter().map(|n| n.id.as_str()).collect();
    let mut pth_node: BTreeMap<&str, &str> = BTreeMap::new();
    for d in &scenario.district_heating {
        for p in &d.pth {
            pth_node.insert(&p.id, p.node.as_deref().unwrap_or(&d.node));
        }
    }
    let mut up = vec![0.0; nodes.len()];
    let mut down = vec![0.0; nodes.len()];
    let mut hp: BTreeMap<&str, f64> = BTreeMap::new();
    let mut pth: BTreeMap<&str, f64> = BTreeMap::new();
    for s in sols {
        for row in &s.node_deltas {
            for (n, d) in row.iter().enumerate() {
                if *d > 0.0 {
                    up[n] += d;
                } else {
                    down[n] -= d;
                }
            }
        }
        for a in &s.adjustments {
            if a.domain != Domain::Electric {
                continue;
            }
            match a.class {
                TechClass::HeatPump => {
                    *hp.entry(a.unit.strip_prefix("hp:").unwrap_or(&a.unit))
                        .or_default() += a.net()
                }
                TechClass::PowerToHeat => {
                    if let Some(n) = pth_node.get(a.unit.as_str()) {
                        *pth.entry(n).or_default() += a.net();
                    }
                }
                _ => {}
            }
        }
    }
    let topo_order = scenario.grid.topology()?.node_ids;
    let mut w = writer(
        &dir.join("nodes.csv"),
        &[
            "node",
            "injection_up_mwh",
            "injection_down_mwh",
            "hp_net_mwh",
            "pth_net_mwh",
        ],
    )?;
    for (i, id) in topo_order.iter().enumerate() {
        w.serialize(NodeRow {
            node: id,
            injection_up_mwh: up[i],
            injection_down_mwh: down[i],
            hp_net_mwh: hp.get(id.as_str()).copied().unwrap_or(0.0),
            pth_net_mwh: pth.get(id.as_str()).copied().unwrap_or(0.0),
        })?;
    }
    w.flush()?;
    Ok(())
}

/// Reads back the adjustment and interval files of one case.
pub fn read_case(dir: &Path, mode: Mode) -> Result<CaseData> {
    let path = dir.join("adjustments.csv");
    let mut rd = csv::Reader::from_path(&path)?;
    let mut adjustments = Vec::new();
    for (i, rec) in rd.deserialize::<AdjustmentRow>().enumerate() {
        let r = rec?;
        let bad = |what: &str| {
            Error::Validation(format!("{} row {}: unknown {what}", path.display(), i + 2))
        };
        adjustments.push(Adjustment {
            hour: r.hour,
            unit: r.unit,
            class: TechClass::parse(&r.class).ok_or_else(|| bad("class"))?,
            domain: Domain::parse(&r.domain).ok_or_else(|| bad("domain"))?,
            up: r.up,
            down: r.down,
        });
    }
    let mut rd = csv::Reader::from_path(dir.join("intervals.csv"))?;
    let intervals = rd
        .deserialize()
        .collect::<std::result::Result<Vec<IntervalSummary>, _>>()?;
    Ok(CaseData {
        mode,
        adjustments,
        intervals,
    })
}

/// Writes `report.txt`, `volumes.csv`, and when given `histogram.csv` and
/// `correlation.csv`.
pub fn write_report_files(
    dir: &Path,
    text: &str,
    volumes: &VolumeReport,
    histogram: Option<&Histogram>,
    correlation: Option<&Correlation>,
) -> Result<()> {
    fs::write(dir.join("report.txt"), text)?;
    let mut w = writer(
        &dir.join("volumes.csv"),
        &["mode", "domain", "row", "direction", "mwh"],
    )?;
    for c in &volumes.cases {
        for (domain, rows, table) in [
            ("el", &ELECTRIC_ROWS, &c.electric),
            ("th", &THERMAL_ROWS, &c.thermal),
        ] {
            for r in rows.iter() {
                let (p, m) = table[*r];
                w.write_record([c.mode.as_str(), domain, r, "+", &p.to_string()])?;
                w.write_record([c.mode.as_str(), domain, r, "-", &m.to_string()])?;
            }
        }
    }
    w.flush()?;
    if let Some(h) = histogram {
        let mut header = vec!["bin_lower_mw", "bin_upper_mw"];
        header.extend(h.counts.keys().map(String::as_str));
        let mut w = writer(&dir.join("histogram.csv"), &header)?;
        for b in 0..h.bins() {
            let mut row = vec![
                (b as f64 * h.bin_width).to_string(),
                ((b + 1) as f64 * h.bin_width).to_string(),
            ];
            row.extend(
                h.counts
                    .values()
                    .map(|c| c.get(b).copied().unwrap_or(0).to_string()),
            );
            w.write_record(&row)?;
        }
        w.flush()?;
    }
    if let Some(c) = correlation {
        let mut w = writer(
            &dir.join("correlation.csv"),
            &["delta_pth_heat_mw", "delta_tes_charge_mw"],
        )?;
        for (x, y) in &c.pairs {
            w.write_record([x.to_string(), y.to_string()])?;
        }
        w.flush()?;
    }
    Ok(())
}
