//! End-to-end runs: market stage, redispatch cases, output files and
//! reports rebuilt from those files.

use std::fs::{self, File};
use std::io::BufWriter;
use std::path::{Path, PathBuf};

use crate::engine::{Engine, Mode, RedispatchSolution, Verification};
use crate::error::{Error, Result};
use crate::market::{check_schedule, merit_order_dispatch, MarketSchedule};
use crate::report::{
    build_correlation, build_histogram, build_volume_report, pth_consumption, pth_tes_changes,
    read_case, render_report, write_case, write_report_files, CaseData, Correlation, Histogram,
    RunMeta, VolumeReport, RUN_FILE,
};
use crate::scenario::Scenario;

pub const SCHEDULE_FILE: &str = "market_schedule.csv";

#[derive(Clone, Debug, PartialEq)]
pub struct SimulateOptions {
    pub modes: Vec<Mode>,
    pub interval_hours: usize,
    pub decompose_hp_hours: Option<usize>,
    pub dump_lp: Option<PathBuf>,
}

impl SimulateOptions {
    /// Options taken from the scenario's run configuration.
    pub fn from_scenario(s: &Scenario) -> Self {
        use crate::scenario::RunMode;
        let modes = match s.config.mode {
            RunMode::Base => vec![Mode::Base],
            RunMode::Flex => vec![Mode::Flex],
            RunMode::Both => vec![Mode::Base, Mode::Flex],
        };
        Self {
            modes,
            interval_hours: s.config.interval_hours,
            decompose_hp_hours: s.config.decompose_hp_hours,
            dump_lp: None,
        }
    }
}

#[derive(Clone, Debug)]
pub struct CaseRun {
    pub mode: Mode,
    pub solutions: Vec<RedispatchSolution>,
    pub verification: Verification,
}

/// The market schedule of a scenario: the imported one when given, the
/// built-in merit order otherwise. Either way it must pass the consistency
/// checks.
pub fn market_schedule(s: &Scenario) -> Result<MarketSchedule> {
    let sched = match &s.market_schedule {
        Some(m) => m.clone(),
        None => merit_order_dispatch(s)?,
    };
    let problems = check_schedule(s, &sched);
    if !problems.is_empty() {
        return Err(Error::Validation(format!(
            "market schedule is inconsistent: {}",
            problems.join("; ")
        )));
    }
    Ok(sched)
}

/// Solves each requested mode and verifies the results.
pub fn simulate(
    s: &Scenario,
    schedule: &MarketSchedule,
    opts: &SimulateOptions,
) -> Result<Vec<CaseRun>> {
    if opts.interval_hours == 0 {
        return Err(Error::Config("interval length must be at least 1".into()));
    }
    let mut engine = Engine::new(s, schedule)?;
    engine.options = s.config.solver;
    engine.dump_lp = opts.dump_lp.clone();
    let mut out = Vec::new();
    for &mode in &opts.modes {
        log::info!(
            "solving {} case, {} h intervals",
            mode.as_str(),
            opts.interval_hours
        );
        let solutions =
            engine.run_configured(mode, opts.interval_hours, opts.decompose_hp_hours)?;
        let verification = engine.verify(&solutions)?;
        if !verification.passes() {
            log::warn!(
                "{} case fails post-solution checks: {verification:?}",
                mode.as_str()
            );
        }
        out.push(CaseRun {
            mode,
            solutions,
            verification,
        });
    }
    Ok(out)
}

/// Writes the run metadata, the market schedule and one directory per case.
pub fn write_run(
    out: &Path,
    s: &Scenario,
    opts: &SimulateOptions,
    schedule: &MarketSchedule,
    runs: &[CaseRun],
) -> Result<RunMeta> {
    fs::create_dir_all(out)?;
    let meta = RunMeta::new(
        s,
        opts.interval_hours,
        opts.decompose_hp_hours,
        runs.iter().map(|r| r.mode).collect(),
    );
    serde_json::to_writer_pretty(BufWriter::new(File::create(out.join(RUN_FILE))?), &meta)?;
    schedule.write_csv(BufWriter::new(File::create(out.join(SCHEDULE_FILE))?))?;
    for r in runs {
        let dir = out.join(r.mode.as_str());
        write_case(&dir, s, &r.solutions)?;
        serde_json::to_writer_pretty(
            BufWriter::new(File::create(dir.join("verification.json"))?),
            &r.verification,
        )?;
    }
    Ok(meta)
}

/// Everything a report contains, computed from in-memory case data.
#[derive(Clone, Debug)]
pub struct Report {
    pub volumes: VolumeReport,
    pub histogram: Histogram,
    /// Index of the bin holding the largest market PtH aggregate.
    pub top_bin: usize,
    pub correlation: Option<Correlation>,
    pub text: String,
}

pub fn build_report(
    meta: &RunMeta,
    schedule: &MarketSchedule,
    cases: &[CaseData],
) -> Result<Report> {
    let volumes = build_volume_report(cases)?;
    let market = pth_consumption(meta, schedule, None);
    let per_case: Vec<(String, Vec<f64>)> = cases
        .iter()
        .map(|c| {
            (
                c.mode.as_str().to_string(),
                pth_consumption(meta, schedule, Some(c)),
            )
        })
        .collect();
    let mut schemes: Vec<(&str, &[f64])> = vec![("market", &market)];
    schemes.extend(per_case.iter().map(|(l, v)| (l.as_str(), v.as_slice())));
    let histogram = build_histogram(&schemes, meta.histogram_bin_mw)?;
    let top_bin = histogram.bin_of(market.iter().fold(0.0_f64, |m, &x| m.max(x)));
    let correlation = cases.iter().find(|c| c.mode == Mode::Flex).map(|c| {
        let (x, y) = pth_tes_changes(meta, c);
        build_correlation(&x, &y)
    });
    let text = render_report(meta, &volumes, Some(&histogram), correlation.as_ref());
    Ok(Report {
        volumes,
        histogram,
        top_bin,
        correlation,
        text,
    })
}

/// Rebuilds the report of a finished run from its output files alone and
/// writes the report files next to them.
pub fn report_from_dir(dir: &Path) -> Result<Report> {
    let run_path = dir.join(RUN_FILE);
    let meta: RunMeta = serde_json::from_reader(
        File::open(&run_path)
            .map_err(|e| Error::Validation(format!("cannot open {}: {e}", run_path.display())))?,
    )?;
    let schedule = MarketSchedule::read_csv(File::open(dir.join(SCHEDULE_FILE))?, meta.horizon)?;
    let cases = meta
        .modes
        .iter()
        .map(|&m| read_case(&dir.join(m.as_str()), m))
        .collect::<Result<Vec<_>>>()?;
    let report = build_report(&meta, &schedule, &cases)?;
    write_report_files(
        dir,
        &report.text,
        &report.volumes,
        Some(&report.histogram),
        report.correlation.as_ref(),
    )?;
    Ok(report)
}
