use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::Context;
use clap::{Parser, Subcommand, ValueEnum};
use redispatch_core::engine::Mode;
use redispatch_core::grid::{write_sensitivities, SensitivityBundle};
use redispatch_core::pipeline::{self, SimulateOptions};
use redispatch_core::scenario::load_scenario;
use redispatch_core::Error;

#[derive(Parser)]
#[command(
    name = "redispatch",
    version,
    about = "Interval-based redispatch with flexible heating systems"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the market stage and the redispatch cases, then write all outputs.
    Simulate {
        #[arg(long)]
        scenario: PathBuf,
        #[arg(long, value_enum)]
        mode: Option<ModeArg>,
        #[arg(long)]
        interval_hours: Option<usize>,
        /// Decide heat pump operation first in intervals of this many hours.
        #[arg(long)]
        decompose_hp: Option<usize>,
        #[arg(long)]
        out: PathBuf,
        /// Write every interval model as an MPS file into this directory.
        #[arg(long)]
        dump_lp: Option<PathBuf>,
    },
    /// Export PTDF, PSDF and LODF matrices as CSV.
    Sensitivities {
        #[arg(long)]
        scenario: PathBuf,
        #[arg(long)]
        dump_sensitivities: PathBuf,
    },
    /// Rebuild the report of a finished run from its output directory.
    Report {
        #[arg(long)]
        from: PathBuf,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum ModeArg {
    Base,
    Flex,
    Both,
}

impl ModeArg {
    fn modes(self) -> Vec<Mode> {
        match self {
            ModeArg::Base => vec![Mode::Base],
            ModeArg::Flex => vec![Mode::Flex],
            ModeArg::Both => vec![Mode::Base, Mode::Flex],
        }
    }
}

fn run(cli: Cli) -> anyhow::Result<()> {
    match cli.command {
        Command::Simulate {
            scenario,
            mode,
            interval_hours,
            decompose_hp,
            out,
            dump_lp,
        } => {
            let s = load_scenario(&scenario)?;
            let mut opts = SimulateOptions::from_scenario(&s);
            if let Some(m) = mode {
                opts.modes = m.modes();
            }
            if let Some(h) = interval_hours {
                opts.interval_hours = h;
            }
            if decompose_hp.is_some() {
                opts.decompose_hp_hours = decompose_hp;
            }
            opts.dump_lp = dump_lp;
            let schedule = pipeline::market_schedule(&s)?;
            let runs = pipeline::simulate(&s, &schedule, &opts)?;
            pipeline::write_run(&out, &s, &opts, &schedule, &runs)
                .with_context(|| format!("writing results to {}", out.display()))?;
            let report = pipeline::report_from_dir(&out)?;
            print!("{}", report.text);
        }
        Command::Sensitivities {
            scenario,
            dump_sensitivities,
        } => {
            let s = load_scenario(&scenario)?;
            let bundle = SensitivityBundle::compute(s.grid.topology()?).map_err(Error::from)?;
            write_sensitivities(&bundle, &dump_sensitivities).map_err(Error::from)?;
        }
        Command::Report { from } => {
            let report = pipeline::report_from_dir(&from)?;
            print!("{}", report.text);
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(1)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            let solver_failure = e
                .chain()
                .any(|c| matches!(c.downcast_ref::<Error>(), Some(err) if !err.is_validation()));
            ExitCode::from(if solver_failure { 2 } else { 1 })
        }
    }
}
