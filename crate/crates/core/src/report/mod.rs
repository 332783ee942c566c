//! Aggregation of solved runs into volume tables, operating-point
//! histograms and PtH/TES correlation data.

mod io;

use std::collections::BTreeMap;
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::adjust::{Adjustment, Domain, TechClass};
use crate::engine::{Mode, RedispatchSolution};
use crate::error::{Error, Result};
use crate::market::{Field, MarketSchedule};
use crate::scenario::Scenario;

pub use io::{read_case, write_case, write_report_files, RUN_FILE};

/// Per-interval summary line of a solved case.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct IntervalSummary {
    pub start: usize,
    pub len: usize,
    pub objective: f64,
    pub iterations: usize,
    pub slack_mwh: f64,
}

/// Everything the aggregations need from one solved case.
#[derive(Clone, Debug, PartialEq)]
pub struct CaseData {
    pub mode: Mode,
    pub adjustments: Vec<Adjustment>,
    pub intervals: Vec<IntervalSummary>,
}

impl CaseData {
    pub fn from_solutions(mode: Mode, sols: &[RedispatchSolution]) -> Self {
        Self {
            mode,
            adjustments: sols
                .iter()
                .flat_map(|s| s.adjustments.iter().cloned())
                .collect(),
            intervals: sols
                .iter()
                .map(|s| IntervalSummary {
                    start: s.interval.start,
                    len: s.interval.len,
                    objective: s.objective,
                    iterations: s.iterations,
                    slack_mwh: s.slack_energy(),
                })
                .collect(),
        }
    }

    pub fn horizon(&self) -> usize {
        self.intervals
            .iter()
            .map(|i| i.start + i.len)
            .max()
            .unwrap_or(0)
    }

    pub fn total_cost(&self) -> f64 {
        self.intervals.iter().map(|i| i.objective).sum()
    }

    pub fn slack_mwh(&self) -> f64 {
        self.intervals.iter().map(|i| i.slack_mwh).sum()
    }
}

/// Facts about the scenario that the aggregations need, stored with the run
/// outputs so reports can be rebuilt from files alone.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct RunMeta {
    pub scenario: String,
    pub horizon: usize,
    pub interval_hours: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub decompose_hp_hours: Option<usize>,
    pub modes: Vec<Mode>,
    pub histogram_bin_mw: f64,
    /// PtH unit id to network id.
    pub pth_units: BTreeMap<String, String>,
    /// Storage id to network id.
    pub tes_units: BTreeMap<String, String>,
}

impl RunMeta {
    pub fn new(
        s: &Scenario,
        interval_hours: usize,
        decompose: Option<usize>,
        modes: Vec<Mode>,
    ) -> Self {
        let mut pth_units = BTreeMap::new();
        let mut tes_units = BTreeMap::new();
        for d in &s.district_heating {
            for p in &d.pth {
                pth_units.insert(p.id.clone(), d.id.clone());
            }
            for t in &d.storage {
                tes_units.insert(t.id.clone(), d.id.clone());
            }
        }
        Self {
            scenario: s.name.clone(),
            horizon: s.horizon(),
            interval_hours,
            decompose_hp_hours: decompose,
            modes,
            histogram_bin_mw: s.config.histogram_bin_mw,
            pth_units,
            tes_units,
        }
    }
}

/// Row labels of the volume table.
pub const ELECTRIC_ROWS: [&str; 4] = ["RES", "PP and dummy", "S-s HPs", "L-s PtH"];
pub const THERMAL_ROWS: [&str; 4] = ["RES", "CHP", "L-s PtH", "HOB"];

/// Table row of an adjustment, or `None` when it does not enter the table.
fn row_of(a: &Adjustment) -> Option<&'static str> {
    match (a.domain, a.class) {
        (Domain::Electric, TechClass::Res) => Some("RES"),
        (
            Domain::Electric,
            TechClass::PowerPlant | TechClass::PumpedStorage | TechClass::Chp | TechClass::Slack,
        ) => Some("PP and dummy"),
        (Domain::Electric, TechClass::HeatPump) => Some("S-s HPs"),
        (Domain::Electric, TechClass::PowerToHeat) => Some("L-s PtH"),
        (Domain::Thermal, TechClass::ThermalRes) => Some("RES"),
        (Domain::Thermal, TechClass::Chp) => Some("CHP"),
        (Domain::Thermal, TechClass::PowerToHeat) => Some("L-s PtH"),
        (Domain::Thermal, TechClass::Hob) => Some("HOB"),
        _ => None,
    }
}

/// Energy per (row, direction) of one case, MWh.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct CaseVolumes {
    pub mode: Mode,
    /// Electric volumes keyed by row; `.0` is the injection increase (more
    /// generation or less consumption), `.1` the injection decrease.
    pub electric: BTreeMap<String, (f64, f64)>,
    /// Thermal volumes keyed by row; `.0` heat output increase, `.1` decrease.
    pub thermal: BTreeMap<String, (f64, f64)>,
    pub total_cost: f64,
    pub slack_mwh: f64,
}

impl CaseVolumes {
    pub fn electric_totals(&self) -> (f64, f64) {
        self.electric
            .values()
            .fold((0.0, 0.0), |acc, v| (acc.0 + v.0, acc.1 + v.1))
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct VolumeReport {
    pub cases: Vec<CaseVolumes>,
    /// Relative cost saving of flex against base, when both are present.
    pub cost_saving: Option<f64>,
}

/// Sums adjustment energies by table row and direction for each case.
pub fn build_volume_report(cases: &[CaseData]) -> Result<VolumeReport> {
    if let Some(first) = cases.first() {
        if cases.iter().any(|c| c.horizon() != first.horizon()) {
            return Err(Error::Validation("cases cover different horizons".into()));
        }
    }
    let mut out = Vec::with_capacity(cases.len());
    for c in cases {
        let mut v = CaseVolumes {
            mode: c.mode,
            total_cost: c.total_cost(),
            slack_mwh: c.slack_mwh(),
            ..Default::default()
        };
        for r in ELECTRIC_ROWS {
            v.electric.insert(r.into(), (0.0, 0.0));
        }
        for r in THERMAL_ROWS {
            v.thermal.insert(r.into(), (0.0, 0.0));
        }
        for a in &c.adjustments {
            let Some(row) = row_of(a) else { continue };
            let (inc, dec) = if a.domain == Domain::Electric && a.class.is_load() {
                (a.down, a.up)
            } else {
                (a.up, a.down)
            };
            let table = if a.domain == Domain::Electric {
                &mut v.electric
            } else {
                &mut v.thermal
            };
            let e = table.get_mut(row).expect("rows preinserted");
            e.0 += inc;
            e.1 += dec;
        }
        out.push(v);
    }
    let cost = |m: Mode| out.iter().find(|c| c.mode == m).map(|c| c.total_cost);
    let cost_saving = match (cost(Mode::Base), cost(Mode::Flex)) {
        (Some(b), Some(f)) if b > 0.0 => Some((b - f) / b),
        _ => None,
    };
    Ok(VolumeReport {
        cases: out,
        cost_saving,
    })
}

/// Hourly aggregate PtH consumption, MW: the market schedule alone, or with
/// the electric PtH adjustments of `case` applied.
pub fn pth_consumption(
    meta: &RunMeta,
    schedule: &MarketSchedule,
    case: Option<&CaseData>,
) -> Vec<f64> {
    let mut out = vec![0.0; meta.horizon];
    for id in meta.pth_units.keys() {
        for (t, o) in out.iter_mut().enumerate() {
            *o += schedule.try_get(id, t, Field::P).unwrap_or(0.0);
        }
    }
    if let Some(c) = case {
        for a in &c.adjustments {
            if a.class == TechClass::PowerToHeat
                && a.domain == Domain::Electric
                && a.hour < out.len()
            {
                out[a.hour] += a.net();
            }
        }
    }
    out
}

#[derive(Clone, Debug, PartialEq)]
pub struct Histogram {
    pub bin_width: f64,
    /// Scheme label to count per bin; bin `i` covers `[i*w, (i+1)*w)`.
    pub counts: BTreeMap<String, Vec<usize>>,
}

impl Histogram {
    pub fn bins(&self) -> usize {
        self.counts.values().map(Vec::len).max().unwrap_or(0)
    }

    pub fn bin_of(&self, value: f64) -> usize {
        (value / self.bin_width).floor().max(0.0) as usize
    }

    pub fn count(&self, scheme: &str, bin: usize) -> usize {
        self.counts
            .get(scheme)
            .and_then(|c| c.get(bin).copied())
            .unwrap_or(0)
    }
}

/// Frequency of hourly values per scheme in bins of `bin_width` starting at 0.
pub fn build_histogram(schemes: &[(&str, &[f64])], bin_width: f64) -> Result<Histogram> {
    if !(bin_width > 0.0) || !bin_width.is_finite() {
        return Err(Error::Validation(format!(
            "histogram bin width must be positive, got {bin_width}"
        )));
    }
    let mut h = Histogram {
        bin_width,
        counts: BTreeMap::new(),
    };
    let max = schemes
        .iter()
        .flat_map(|(_, v)| v.iter())
        .fold(0.0_f64, |m, &x| m.max(x));
    let n = h.bin_of(max) + 1;
    for (label, values) in schemes {
        let mut c = vec![0; n];
        for &v in values.iter() {
            c[h.bin_of(v).min(n - 1)] += 1;
        }
        h.counts.insert(label.to_string(), c);
    }
    Ok(h)
}

#[derive(Clone, Debug, PartialEq)]
pub struct Correlation {
    pub pairs: Vec<(f64, f64)>,
    /// Pearson coefficient; `None` with fewer than two samples or no variance.
    pub coefficient: Option<f64>,
}

pub fn build_correlation(x: &[f64], y: &[f64]) -> Correlation {
    let pairs: Vec<(f64, f64)> = x.iter().copied().zip(y.iter().copied()).collect();
    let n = pairs.len() as f64;
    if pairs.len() < 2 {
        return Correlation {
            pairs,
            coefficient: None,
        };
    }
    let mx = pairs.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pairs.iter().map(|p| p.1).sum::<f64>() / n;
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (a, b) in &pairs {
        sxy += (a - mx) * (b - my);
        sxx += (a - mx) * (a - mx);
        syy += (b - my) * (b - my);
    }
    let coefficient = (sxx > 0.0 && syy > 0.0).then(|| (sxy / (sxx * syy).sqrt()).clamp(-1.0, 1.0));
    Correlation { pairs, coefficient }
}

/// Paired per network-hour changes of PtH heat output and TES charging,
/// MW_th, keeping only network-hours where either moved.
pub fn pth_tes_changes(meta: &RunMeta, case: &CaseData) -> (Vec<f64>, Vec<f64>) {
    let mut acc: BTreeMap<(&str, usize), (f64, f64)> = BTreeMap::new();
    for a in case
        .adjustments
        .iter()
        .filter(|a| a.domain == Domain::Thermal)
    {
        if let Some(net) = meta.pth_units.get(&a.unit) {
            acc.entry((net, a.hour)).or_default().0 += a.net();
        } else if let Some(net) = meta.tes_units.get(&a.unit) {
            acc.entry((net, a.hour)).or_default().1 += a.net();
        }
    }
    acc.values()
        .filter(|(p, s)| p.abs() > 1e-9 || s.abs() > 1e-9)
        .map(|&(p, s)| (p, s))
        .unzip()
}

/// Rounds away residue below the printed precision so it never shows as "-0.000".
fn shown(x: f64) -> f64 {
    if x.abs() < 5e-4 {
        0.0
    } else {
        x
    }
}

/// Plain-text report of volumes, costs, histogram and correlation.
pub fn render_report(
    meta: &RunMeta,
    volumes: &VolumeReport,
    histogram: Option<&Histogram>,
    correlation: Option<&Correlation>,
) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "Scenario: {}", meta.scenario);
    let _ = writeln!(
        s,
        "Horizon: {} h, interval {} h",
        meta.horizon, meta.interval_hours
    );
    if let Some(d) = meta.decompose_hp_hours {
        let _ = writeln!(s, "Heat pump stage: {d} h intervals");
    }
    let _ = writeln!(s);
    let header = |s: &mut String, title: &str| {
        let _ = write!(s, "{title:<16}");
        for c in &volumes.cases {
            let _ = write!(
                s,
                "{:>14}{:>14}",
                format!("{} (+)", c.mode.as_str()),
                format!("{} (-)", c.mode.as_str())
            );
        }
        let _ = writeln!(s);
    };
    header(&mut s, "Electric [MWh]");
    for r in ELECTRIC_ROWS {
        let _ = write!(s, "{r:<16}");
        for c in &volumes.cases {
            let (a, b) = c.electric[r];
            let _ = write!(s, "{:>14.3}{:>14.3}", shown(a), shown(b));
        }
        let _ = writeln!(s);
    }
    let _ = writeln!(s);
    header(&mut s, "Thermal [MWh]");
    for r in THERMAL_ROWS {
        let _ = write!(s, "{r:<16}");
        for c in &volumes.cases {
            let (a, b) = c.thermal[r];
            let _ = write!(s, "{:>14.3}{:>14.3}", shown(a), shown(b));
        }
        let _ = writeln!(s);
    }
    let _ = writeln!(s);
    for c in &volumes.cases {
        let _ = writeln!(
            s,
            "Total cost {:<5} {:>16.2}",
            c.mode.as_str(),
            c.total_cost
        );
        if c.slack_mwh > 1e-6 {
            let _ = writeln!(
                s,
                "WARNING: unresolvable congestion in {} case, slack energy {:.6} MWh",
                c.mode.as_str(),
                c.slack_mwh
            );
        }
    }
    if let Some(r) = volumes.cost_saving {
        let _ = writeln!(s, "Cost saving flex vs base: {:.2} %", 100.0 * r);
    }
    if let Some(h) = histogram {
        let _ = writeln!(s);
        let _ = writeln!(s, "PtH operating points, {} MW bins:", h.bin_width);
        for (label, counts) in &h.counts {
            let _ = writeln!(s, "  {label:<8} {counts:?}");
        }
    }
    if let Some(c) = correlation {
        let _ = writeln!(s);
        match c.coefficient {
            Some(r) => {
                let _ = writeln!(s, "PtH/TES correlation: {r:.4} ({} samples)", c.pairs.len());
            }
            None => {
                let _ = writeln!(
                    s,
                    "PtH/TES correlation: undefined ({} samples)",
                    c.pairs.len()
                );
            }
        }
    }
    s
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn constant_series_fills_one_bin() {
        let v = [7.0; 10];
        let h = build_histogram(&[("m", &v)], 5.0).unwrap();
        assert_eq!(h.counts["m"].iter().filter(|&&c| c > 0).count(), 1);
        assert!(build_histogram(&[("m", &v)], 0.0).is_err());
    }

    #[test]
    fn correlation_signs() {
        let x = [1.0, 2.0, 4.0, -1.0];
        let neg: Vec<f64> = x.iter().map(|v| -v).collect();
        assert!((build_correlation(&x, &x).coefficient.unwrap() - 1.0).abs() < 1e-12);
        assert!((build_correlation(&x, &neg).coefficient.unwrap() + 1.0).abs() < 1e-12);
        assert_eq!(build_correlation(&[1.0], &[1.0]).coefficient, None);
    }
}
