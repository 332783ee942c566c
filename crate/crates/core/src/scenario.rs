//! Scenario file set: one JSON document for structure and configuration
//! plus hour-indexed CSV files for time series.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::district::{DistrictHeatingNetwork, PthKind, Turbine};
use crate::error::{Error, Result};
use crate::grid::GridModel;
use crate::heatpump::{aggregate_buildings, map_cluster_to_node, HeatPumpConfig, VirtualBuilding};
use crate::lp::SolveOptions;
use crate::market::MarketSchedule;
use crate::units::{ConventionalUnit, UnitKind, DEFAULT_SLACK_PENALTY};

pub const FORMAT_VERSION: &str = "1.0";
pub const SCENARIO_FILE: &str = "scenario.json";

/// Hourly values per entity id.
pub type Series = BTreeMap<String, Vec<f64>>;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Violation {
    pub file: String,
    pub record: String,
    pub field: String,
    pub message: String,
}

impl Violation {
    fn new(
        file: &str,
        record: impl Into<String>,
        field: impl Into<String>,
        message: impl Into<String>,
    ) -> Self {
        Self {
            file: file.to_string(),
            record: record.into(),
            field: field.into(),
            message: message.into(),
        }
    }
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{} [{}].{}: {}",
            self.file, self.record, self.field, self.message
        )
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RunMode {
    Base,
    Flex,
    #[default]
    Both,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    pub horizon_hours: usize,
    #[serde(default = "default_interval")]
    pub interval_hours: usize,
    #[serde(default)]
    pub mode: RunMode,
    /// Inner interval length for deciding heat pump operation first.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub decompose_hp_hours: Option<usize>,
    #[serde(default = "default_penalty")]
    pub slack_penalty: f64,
    #[serde(default = "default_bin")]
    pub histogram_bin_mw: f64,
    #[serde(default)]
    pub solver: SolveOptions,
}

fn default_interval() -> usize {
    168
}
fn default_penalty() -> f64 {
    DEFAULT_SLACK_PENALTY
}
fn default_bin() -> f64 {
    5.0
}

/// File names of the time series, relative to the scenario directory.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct SeriesFiles {
    /// MW per node.
    pub electric_demand: String,
    /// Available feed-in per RES unit, MW.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub res_availability: Option<String>,
    /// MW_th per district heating network.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub heat_demand: Option<String>,
    /// Per weather cluster and per PtH unit without a constant COP.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cop: Option<String>,
    /// Degrees C per weather cluster.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub outdoor_temp: Option<String>,
    /// Available heat per thermal RES unit, MW_th.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub thermal_res: Option<String>,
    /// Externally produced market schedule replacing the built-in market stage.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub market_schedule: Option<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
struct ScenarioDoc {
    format_version: String,
    #[serde(default)]
    name: String,
    grid: GridModel,
    #[serde(default)]
    units: Vec<ConventionalUnit>,
    #[serde(default)]
    district_heating: Vec<DistrictHeatingNetwork>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    heat_pumps: Option<HeatPumpConfig>,
    series: SeriesFiles,
    config: RunConfig,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Scenario {
    pub format_version: String,
    pub name: String,
    pub grid: GridModel,
    pub units: Vec<ConventionalUnit>,
    pub district_heating: Vec<DistrictHeatingNetwork>,
    pub heat_pumps: Option<HeatPumpConfig>,
    pub config: RunConfig,
    pub series_files: SeriesFiles,
    pub electric_demand: Series,
    pub res_availability: Series,
    pub heat_demand: Series,
    pub cop: Series,
    pub outdoor_temp: Series,
    pub thermal_res: Series,
    pub market_schedule: Option<MarketSchedule>,
}

impl Scenario {
    pub fn horizon(&self) -> usize {
        self.config.horizon_hours
    }

    /// Largest per-MWh cost of any real measure; the slack penalty must exceed it.
    pub fn max_unit_cost(&self) -> f64 {
        let mut m: f64 = 0.0;
        for u in &self.units {
            m = m.max(u.cost_up).max(u.cost_down);
        }
        for l in &self.grid.hvdc_links {
            m = m.max(l.cost_per_mwh);
        }
        for p in &self.grid.phase_shifters {
            m = m.max(p.cost_per_degree);
        }
        for d in &self.district_heating {
            for c in &d.chp {
                let fuel_per_mwh = match c.turbine {
                    Turbine::Bkp => c.sigma / c.eta_cond,
                    Turbine::Ext => {
                        1.0 / c.eta_cond + c.eta_total_max.map_or(0.0, |e| (1.0 + c.sigma) / e)
                    }
                };
                m = m
                    .max(c.cost_up() * fuel_per_mwh)
                    .max(c.cost_down() * fuel_per_mwh);
            }
            for p in &d.pth {
                m = m.max(p.cost_up).max(p.cost_down);
            }
            for b in &d.boilers {
                m = m.max(b.fuel_cost).max(b.cost_down);
            }
            for r in &d.thermal_res {
                m = m.max(r.cost_up).max(r.cost_down);
            }
        }
        if let Some(hp) = &self.heat_pumps {
            m = m.max(hp.cost_up).max(hp.cost_down);
        }
        m
    }

    /// Virtual buildings per node from the heat pump configuration, without
    /// market baselines attached.
    pub fn virtual_buildings(&self) -> Result<Vec<VirtualBuilding>> {
        let Some(hp) = &self.heat_pumps else {
            return Ok(Vec::new());
        };
        let assignment = map_cluster_to_node(&hp.clusters, &self.grid.nodes)?;
        aggregate_buildings(
            &assignment,
            &hp.clusters,
            &hp.building_types,
            &self.cop,
            &self.outdoor_temp,
            self.horizon(),
        )
    }

    /// Heat demand of a network over the horizon (zero when absent).
    pub fn heat_demand_of(&self, dhn: &str) -> Vec<f64> {
        self.heat_demand
            .get(dhn)
            .cloned()
            .unwrap_or_else(|| vec![0.0; self.horizon()])
    }

    /// Electric demand per node index and hour.
    pub fn nodal_demand(&self, node_ids: &[String], hour: usize) -> Vec<f64> {
        node_ids
            .iter()
            .map(|n| self.electric_demand.get(n).map_or(0.0, |s| s[hour]))
            .collect()
    }
}

fn read_series(dir: &Path, file: &str, out: &mut Vec<Violation>) -> Series {
    let path = dir.join(file);
    let mut rd = match csv::Reader::from_path(&path) {
        Ok(r) => r,
        Err(e) => {
            out.push(Violation::new(file, "-", "-", format!("cannot read: {e}")));
            return Series::new();
        }
    };
    let headers = match rd.headers() {
        Ok(h) => h.clone(),
        Err(e) => {
            out.push(Violation::new(file, "header", "-", e.to_string()));
            return Series::new();
        }
    };
    if headers.get(0) != Some("hour") {
        out.push(Violation::new(
            file,
            "header",
            "hour",
            "first column must be 'hour'",
        ));
        return Series::new();
    }
    let ids: Vec<String> = headers.iter().skip(1).map(str::to_string).collect();
    let distinct: BTreeSet<&String> = ids.iter().collect();
    if distinct.len() != ids.len() {
        out.push(Violation::new(file, "header", "-", "duplicate column"));
    }
    let mut cols: Vec<Vec<f64>> = vec![Vec::new(); ids.len()];
    for (i, rec) in rd.records().enumerate() {
        let line = format!("row {}", i + 2);
        let rec = match rec {
            Ok(r) => r,
            Err(e) => {
                out.push(Violation::new(file, line, "-", e.to_string()));
                continue;
            }
        };
        match rec.get(0).map(str::trim).map(str::parse::<usize>) {
            Some(Ok(h)) if h == i => {}
            _ => out.push(Violation::new(
                file,
                line.clone(),
                "hour",
                format!("expected hour {i}"),
            )),
        }
        for (j, id) in ids.iter().enumerate() {
            match rec.get(j + 1).map(str::trim).map(str::parse::<f64>) {
                Some(Ok(v)) if v.is_finite() => cols[j].push(v),
                _ => {
                    out.push(Violation::new(
                        file,
                        line.clone(),
                        id.clone(),
                        "not a finite number",
                    ));
                    cols[j].push(f64::NAN);
                }
            }
        }
    }
    ids.into_iter().zip(cols).collect()
}

fn write_series(dir: &Path, file: &str, series: &Series, hours: usize) -> Result<()> {
    let mut w = csv::Writer::from_path(dir.join(file))?;
    let mut header = vec!["hour".to_string()];
    header.extend(series.keys().cloned());
    w.write_record(&header)?;
    let len = series.values().map(Vec::len).max().unwrap_or(hours);
    for h in 0..len {
        let mut row = vec![h.to_string()];
        row.extend(
            series
                .values()
                .map(|s| s.get(h).map_or(String::new(), |v| v.to_string())),
        );
        w.write_record(&row)?;
    }
    w.flush()?;
    Ok(())
}

/// Loads and validates the scenario in `dir`, reporting every problem found.
pub fn load_scenario(dir: &Path) -> Result<Scenario> {
    let json_path = dir.join(SCENARIO_FILE);
    let text = fs::read_to_string(&json_path).map_err(|e| {
        Error::Scenario(vec![Violation::new(
            SCENARIO_FILE,
            "-",
            "-",
            format!("cannot read {}: {e}", json_path.display()),
        )])
    })?;
    let doc: ScenarioDoc = serde_json::from_str(&text).map_err(|e| {
        Error::Scenario(vec![Violation::new(
            SCENARIO_FILE,
            format!("line {} column {}", e.line(), e.column()),
            "-",
            e.to_string(),
        )])
    })?;
    let mut v = Vec::new();
    check_version(&doc.format_version, &mut v);
    if !v.is_empty() {
        return Err(Error::Scenario(v));
    }
    let files = doc.series.clone();
    let mut load = |f: &Option<String>| {
        f.as_ref()
            .map(|f| read_series(dir, f, &mut v))
            .unwrap_or_default()
    };
    let electric_demand = load(&Some(files.electric_demand.clone()));
    let res_availability = load(&files.res_availability);
    let heat_demand = load(&files.heat_demand);
    let cop = load(&files.cop);
    let outdoor_temp = load(&files.outdoor_temp);
    let thermal_res = load(&files.thermal_res);
    let market_schedule = match &files.market_schedule {
        Some(f) => match fs::File::open(dir.join(f)) {
            Ok(file) => match MarketSchedule::read_csv(file, doc.config.horizon_hours) {
                Ok(s) => Some(s),
                Err(e) => {
                    v.push(Violation::new(f, "-", "-", e.to_string()));
                    None
                }
            },
            Err(e) => {
                v.push(Violation::new(f, "-", "-", format!("cannot read: {e}")));
                None
            }
        },
        None => None,
    };
    let scenario = Scenario {
        format_version: doc.format_version,
        name: doc.name,
        grid: doc.grid,
        units: doc.units,
        district_heating: doc.district_heating,
        heat_pumps: doc.heat_pumps,
        config: doc.config,
        series_files: files,
        electric_demand,
        res_availability,
        heat_demand,
        cop,
        outdoor_temp,
        thermal_res,
        market_schedule,
    };
    v.extend(validate_cross_references(&scenario));
    if v.is_empty() {
        Ok(scenario)
    } else {
        Err(Error::Scenario(v))
    }
}

/// Writes the scenario to `dir` using its recorded series file names.
pub fn save_scenario(s: &Scenario, dir: &Path) -> Result<()> {
    fs::create_dir_all(dir)?;
    let doc = ScenarioDoc {
        format_version: s.format_version.clone(),
        name: s.name.clone(),
        grid: s.grid.clone(),
        units: s.units.clone(),
        district_heating: s.district_heating.clone(),
        heat_pumps: s.heat_pumps.clone(),
        series: s.series_files.clone(),
        config: s.config.clone(),
    };
    fs::write(
        dir.join(SCENARIO_FILE),
        serde_json::to_string_pretty(&doc)? + "\n",
    )?;
    let h = s.horizon();
    let f = &s.series_files;
    write_series(dir, &f.electric_demand, &s.electric_demand, h)?;
    for (name, series) in [
        (&f.res_availability, &s.res_availability),
        (&f.heat_demand, &s.heat_demand),
        (&f.cop, &s.cop),
        (&f.outdoor_temp, &s.outdoor_temp),
        (&f.thermal_res, &s.thermal_res),
    ] {
        if let Some(name) = name {
            write_series(dir, name, series, h)?;
        }
    }
    if let (Some(name), Some(sched)) = (&f.market_schedule, &s.market_schedule) {
        sched.write_csv(fs::File::create(dir.join(name))?)?;
    }
    Ok(())
}

fn check_version(version: &str, v: &mut Vec<Violation>) {
    let expected = FORMAT_VERSION.split('.').next().unwrap_or("1");
    let major = version.split('.').next().unwrap_or("");
    if major != expected {
        v.push(Violation::new(
            SCENARIO_FILE,
            "-",
            "format_version",
            format!("unsupported format version '{version}' (expected {expected}.x)"),
        ));
    }
}

/// Collects every violated scenario invariant. Empty means valid.
pub fn validate_cross_references(s: &Scenario) -> Vec<Violation> {
    const F: &str = SCENARIO_FILE;
    let mut v = Vec::new();
    check_version(&s.format_version, &mut v);
    for g in s.grid.violations() {
        v.push(Violation::new(
            F,
            format!("grid/{}", g.record),
            g.field,
            g.message,
        ));
    }
    let nodes: BTreeSet<&str> = s.grid.nodes.iter().map(|n| n.id.as_str()).collect();
    let horizon = s.horizon();

    let mut ids: BTreeSet<&str> = BTreeSet::new();
    for l in &s.grid.hvdc_links {
        claim(&mut ids, &l.id, &mut v);
    }
    let mut res_ids = BTreeSet::new();
    for u in &s.units {
        claim(&mut ids, &u.id, &mut v);
        let rec = format!("units/{}", u.id);
        if !nodes.contains(u.node.as_str()) {
            v.push(Violation::new(
                F,
                rec.clone(),
                "node",
                format!("unknown node '{}'", u.node),
            ));
        }
        if !(u.p_min <= u.p_max) {
            v.push(Violation::new(
                F,
                rec.clone(),
                "p_min",
                "p_min exceeds p_max",
            ));
        }
        if !(u.cost_up >= 0.0 && u.cost_down >= 0.0) {
            v.push(Violation::new(
                F,
                rec.clone(),
                "cost_up",
                "redispatch costs must be non-negative",
            ));
        }
        match u.kind {
            UnitKind::Res => {
                res_ids.insert(u.id.as_str());
                if u.p_min != 0.0 {
                    v.push(Violation::new(
                        F,
                        rec.clone(),
                        "p_min",
                        "RES units must have p_min = 0",
                    ));
                }
            }
            UnitKind::Ps => {
                if u.flex_mw.is_some_and(|f| f < 0.0) {
                    v.push(Violation::new(
                        F,
                        rec.clone(),
                        "flex_mw",
                        "must be non-negative",
                    ));
                }
                if !(u.p_min <= 0.0 && 0.0 <= u.p_max) {
                    v.push(Violation::new(
                        F,
                        rec.clone(),
                        "p_min",
                        "pumped storage range must contain 0",
                    ));
                }
            }
            UnitKind::Pp => {}
        }
        if u.flex_mw.is_some() && u.kind != UnitKind::Ps {
            v.push(Violation::new(
                F,
                rec,
                "flex_mw",
                "only pumped storage units take flex_mw",
            ));
        }
    }

    let mut pth_cop_needed = BTreeSet::new();
    let mut thermal_res_ids = BTreeSet::new();
    let mut dhn_ids = BTreeSet::new();
    for d in &s.district_heating {
        let rec = format!("district_heating/{}", d.id);
        if !dhn_ids.insert(d.id.as_str()) {
            v.push(Violation::new(F, rec.clone(), "id", "duplicate network id"));
        }
        if !nodes.contains(d.node.as_str()) {
            v.push(Violation::new(
                F,
                rec.clone(),
                "node",
                format!("unknown node '{}'", d.node),
            ));
        }
        if !d.has_heat_source() {
            v.push(Violation::new(
                F,
                rec.clone(),
                "-",
                "network has no heat source",
            ));
        }
        if !s.heat_demand.contains_key(&d.id) {
            v.push(Violation::new(
                s.series_files.heat_demand.as_deref().unwrap_or(F),
                rec.clone(),
                &d.id,
                "no heat demand series for network",
            ));
        }
        for id in d.unit_ids() {
            claim(&mut ids, id, &mut v);
        }
        for c in &d.chp {
            let rec = format!("{rec}/chp/{}", c.id);
            if let Some(n) = &c.node {
                if !nodes.contains(n.as_str()) {
                    v.push(Violation::new(
                        F,
                        rec.clone(),
                        "node",
                        format!("unknown node '{n}'"),
                    ));
                }
            }
            if !(c.eta_cond > 0.0 && c.eta_cond <= 1.0) {
                v.push(Violation::new(
                    F,
                    rec.clone(),
                    "eta_cond",
                    "must lie in (0, 1]",
                ));
            }
            if !(c.sigma >= 0.0) {
                v.push(Violation::new(
                    F,
                    rec.clone(),
                    "sigma",
                    "must be non-negative",
                ));
            }
            match c.turbine {
                Turbine::Ext => {
                    if !c.eta_total_max.is_some_and(|e| e > 0.0 && e <= 1.0) {
                        v.push(Violation::new(
                            F,
                            rec.clone(),
                            "eta_total_max",
                            "extraction units need a value in (0, 1]",
                        ));
                    }
                }
                Turbine::Bkp => {
                    if c.eta_total_max.is_some() {
                        v.push(Violation::new(
                            F,
                            rec.clone(),
                            "eta_total_max",
                            "only for extraction units",
                        ));
                    }
                    if !(c.sigma > 0.0) {
                        v.push(Violation::new(
                            F,
                            rec.clone(),
                            "sigma",
                            "back-pressure units need a positive ratio",
                        ));
                    }
                }
            }
            if !(0.0 <= c.p_min && c.p_min <= c.p_max && c.q_max > 0.0) {
                v.push(Violation::new(
                    F,
                    rec.clone(),
                    "p_max",
                    "need 0 <= p_min <= p_max and q_max > 0",
                ));
            }
            if c.fuel_cost < 0.0 || c.cost_up() < 0.0 || c.cost_down() < 0.0 {
                v.push(Violation::new(
                    F,
                    rec,
                    "fuel_cost",
                    "costs must be non-negative",
                ));
            }
        }
        for p in &d.pth {
            let rec = format!("{rec}/pth/{}", p.id);
            if let Some(n) = &p.node {
                if !nodes.contains(n.as_str()) {
                    v.push(Violation::new(
                        F,
                        rec.clone(),
                        "node",
                        format!("unknown node '{n}'"),
                    ));
                }
            }
            if !(p.p_max > 0.0) {
                v.push(Violation::new(F, rec.clone(), "p_max", "must be positive"));
            }
            if p.cost_up < 0.0 || p.cost_down < 0.0 || p.heat_cost < 0.0 {
                v.push(Violation::new(
                    F,
                    rec.clone(),
                    "cost_up",
                    "costs must be non-negative",
                ));
            }
            let cops: Vec<f64> = match p.cop {
                Some(c) => vec![c],
                None => {
                    pth_cop_needed.insert(p.id.as_str());
                    s.cop.get(&p.id).cloned().unwrap_or_default()
                }
            };
            if cops.iter().any(|c| !(*c > 0.0)) {
                v.push(Violation::new(F, rec.clone(), "cop", "must be positive"));
            }
            if p.kind == PthKind::ElectricBoiler && cops.iter().any(|c| *c > 1.0) {
                v.push(Violation::new(
                    F,
                    rec,
                    "cop",
                    "electric boilers cannot exceed COP 1",
                ));
            }
        }
        for t in &d.storage {
            let rec = format!("{rec}/storage/{}", t.id);
            if !(t.eta > 0.0 && t.eta <= 1.0) {
                v.push(Violation::new(F, rec.clone(), "eta", "must lie in (0, 1]"));
            }
            if !(t.e_max > 0.0 && t.q_max > 0.0) {
                v.push(Violation::new(
                    F,
                    rec.clone(),
                    "e_max",
                    "capacities must be positive",
                ));
            }
            if !(0.0 <= t.e_init && t.e_init <= t.e_max) {
                v.push(Violation::new(F, rec, "e_init", "must lie in [0, e_max]"));
            }
        }
        for b in &d.boilers {
            let rec = format!("{rec}/boilers/{}", b.id);
            if !(b.q_max > 0.0) {
                v.push(Violation::new(F, rec.clone(), "q_max", "must be positive"));
            }
            if b.fuel_cost < 0.0 || b.cost_down < 0.0 {
                v.push(Violation::new(
                    F,
                    rec,
                    "fuel_cost",
                    "costs must be non-negative",
                ));
            }
        }
        for r in &d.thermal_res {
            thermal_res_ids.insert(r.id.as_str());
            let rec = format!("{rec}/thermal_res/{}", r.id);
            if !(r.q_max > 0.0) {
                v.push(Violation::new(F, rec.clone(), "q_max", "must be positive"));
            }
            if r.cost_up < 0.0 || r.cost_down < 0.0 {
                v.push(Violation::new(
                    F,
                    rec,
                    "cost_up",
                    "costs must be non-negative",
                ));
            }
        }
    }

    let mut cluster_ids = BTreeSet::new();
    if let Some(hp) = &s.heat_pumps {
        let types: BTreeSet<&str> = hp.building_types.iter().map(|b| b.id.as_str()).collect();
        for b in &hp.building_types {
            if !(b.r > 0.0 && b.c > 0.0 && b.max_heating_kw >= 0.0) {
                v.push(Violation::new(
                    F,
                    format!("heat_pumps/building_types/{}", b.id),
                    "r",
                    "need r > 0, c > 0, max_heating_kw >= 0",
                ));
            }
        }
        for c in &hp.clusters {
            cluster_ids.insert(c.id.as_str());
            let rec = format!("heat_pumps/clusters/{}", c.id);
            for bt in c.buildings.keys() {
                if !types.contains(bt.as_str()) {
                    v.push(Violation::new(
                        F,
                        rec.clone(),
                        "buildings",
                        format!("unknown building type '{bt}'"),
                    ));
                }
            }
            if !c.lon.is_finite() || !c.lat.is_finite() {
                v.push(Violation::new(F, rec.clone(), "lon", "coordinates missing"));
            }
            let cop_file = s.series_files.cop.as_deref().unwrap_or("cop series");
            match s.cop.get(&c.id) {
                None => v.push(Violation::new(
                    cop_file,
                    "header",
                    &c.id,
                    "no COP series for cluster",
                )),
                Some(sr) if sr.iter().any(|x| !(*x > 0.0)) => {
                    v.push(Violation::new(cop_file, "-", &c.id, "COP must be positive"))
                }
                _ => {}
            }
            if !s.outdoor_temp.contains_key(&c.id) {
                v.push(Violation::new(
                    s.series_files
                        .outdoor_temp
                        .as_deref()
                        .unwrap_or("outdoor_temp series"),
                    "header",
                    &c.id,
                    "no outdoor temperature series for cluster",
                ));
            }
        }
        if !(hp.corridor_k >= 0.0) {
            v.push(Violation::new(
                F,
                "heat_pumps",
                "corridor_k",
                "must be non-negative",
            ));
        }
        if hp.cost_up < 0.0 || hp.cost_down < 0.0 {
            v.push(Violation::new(
                F,
                "heat_pumps",
                "cost_up",
                "costs must be non-negative",
            ));
        }
        if s.grid
            .nodes
            .iter()
            .any(|n| !n.lon.is_finite() || !n.lat.is_finite())
        {
            v.push(Violation::new(
                F,
                "grid",
                "lon",
                "heat pump mapping needs node coordinates",
            ));
        }
    }

    // Series coverage and column ids.
    let f = &s.series_files;
    let checks: [(&str, &Series, Box<dyn Fn(&str) -> bool + '_>); 6] = [
        (
            &f.electric_demand,
            &s.electric_demand,
            Box::new(|id| nodes.contains(id)),
        ),
        (
            f.res_availability.as_deref().unwrap_or(""),
            &s.res_availability,
            Box::new(|id| res_ids.contains(id)),
        ),
        (
            f.heat_demand.as_deref().unwrap_or(""),
            &s.heat_demand,
            Box::new(|id| dhn_ids.contains(id)),
        ),
        (
            f.cop.as_deref().unwrap_or(""),
            &s.cop,
            Box::new(|id| cluster_ids.contains(id) || pth_cop_needed.contains(id)),
        ),
        (
            f.outdoor_temp.as_deref().unwrap_or(""),
            &s.outdoor_temp,
            Box::new(|id| cluster_ids.contains(id)),
        ),
        (
            f.thermal_res.as_deref().unwrap_or(""),
            &s.thermal_res,
            Box::new(|id| thermal_res_ids.contains(id)),
        ),
    ];
    for (file, series, known) in checks.iter() {
        for (id, values) in series.iter() {
            if !known(id) {
                v.push(Violation::new(
                    file,
                    "header",
                    id,
                    "column does not match any entity",
                ));
            }
            if values.len() < horizon {
                v.push(Violation::new(
                    file,
                    "-",
                    id,
                    format!(
                        "series too short: {} hours for a {horizon}-hour horizon",
                        values.len()
                    ),
                ));
            }
        }
    }
    for p in &pth_cop_needed {
        if !s.cop.contains_key(*p) {
            v.push(Violation::new(
                f.cop.as_deref().unwrap_or("cop series"),
                "header",
                *p,
                "no COP series for PtH unit",
            ));
        }
    }

    let c = &s.config;
    if c.horizon_hours == 0 {
        v.push(Violation::new(
            F,
            "config",
            "horizon_hours",
            "must be at least 1",
        ));
    }
    if c.interval_hours == 0 {
        v.push(Violation::new(
            F,
            "config",
            "interval_hours",
            "must be at least 1",
        ));
    }
    if let Some(inner) = c.decompose_hp_hours {
        if inner == 0 || c.interval_hours % inner != 0 {
            v.push(Violation::new(
                F,
                "config",
                "decompose_hp_hours",
                "must divide interval_hours",
            ));
        }
    }
    if !(c.slack_penalty > s.max_unit_cost()) {
        v.push(Violation::new(
            F,
            "config",
            "slack_penalty",
            format!("must exceed the largest unit cost {}", s.max_unit_cost()),
        ));
    }
    if !(c.histogram_bin_mw > 0.0) {
        v.push(Violation::new(
            F,
            "config",
            "histogram_bin_mw",
            "must be positive",
        ));
    }
    v
}

fn claim<'a>(ids: &mut BTreeSet<&'a str>, id: &'a str, v: &mut Vec<Violation>) {
    if !ids.insert(id) {
        v.push(Violation::new(SCENARIO_FILE, id, "id", "duplicate unit id"));
    }
}
