//! `hydride`: command-line front end of the solver.
//!
//! Exit codes: 0 success, 1 usage or I/O error, 2 configuration error,
//! 3 solver failure, 4 invariant violation, 5 failed validation or self
//! test.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use hydride_core::config::{parse_config, ParsedConfig};
use hydride_core::driver::{refine_study, run, RefineReport};
use hydride_core::output::write_run;
use hydride_core::selftest::selftest;
use hydride_core::Error;

#[derive(Parser)]
#[command(name = "hydride", version, about = "Semi-implicit metal-hydride simulator with energy audit")]
struct Cli {
    /// More log output (repeat for debug).
    #[arg(short, long, action = clap::ArgAction::Count, global = true)]
    verbose: u8,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a configuration and write energy.csv, field snapshots and the
    /// run manifest.
    Simulate {
        config: PathBuf,
        /// Output directory; overrides `[output] dir`.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Check the material assumptions and the configuration invariants.
    Validate { config: PathBuf },
    /// Run a time-step refinement study.
    Refine {
        config: PathBuf,
        #[arg(long, default_value_t = 3)]
        levels: usize,
    },
    /// Run the built-in invariant and oracle suite.
    Selftest,
}

fn exit_code(e: &Error) -> u8 {
    match e {
        Error::Io(_) => 1,
        Error::Config(_) | Error::StepTooLarge { .. } | Error::Mesh(_) | Error::Domain(_) => 2,
        Error::Solver { .. } | Error::Internal(_) => 3,
        Error::Invariant { .. } | Error::Audit(_) => 4,
        Error::Validation(_) => 5,
    }
}

fn load(path: &Path) -> Result<ParsedConfig, Error> {
    let p = parse_config(path)?;
    for d in &p.defaults {
        log::debug!("defaulted {d}");
    }
    Ok(p)
}

fn simulate(path: &Path, out: Option<PathBuf>) -> Result<(), Error> {
    let parsed = load(path)?;
    let cfg = &parsed.config;
    let dir = out.or_else(|| cfg.output.dir.clone()).unwrap_or_else(|| PathBuf::from("out"));
    let tr = run(cfg)?;
    let files = write_run(&dir, cfg, &parsed.defaults, &path.display().to_string(), &tr)?;
    let last = tr.ledger.rows.last().expect("a run has at least one row");
    let slack = tr.ledger.slack_nu05().into_iter().fold(f64::INFINITY, f64::min);
    println!(
        "{} steps, t = {:e}: min chi {:e}, min w {:e}, min slack {:e}, hydrogen defect {:e}",
        tr.num_steps(),
        last.t,
        tr.ledger.rows.iter().map(|r| r.min_chi).fold(f64::INFINITY, f64::min),
        tr.ledger.rows.iter().map(|r| r.min_w).fold(f64::INFINITY, f64::min),
        slack,
        tr.ledger.hydrogen_defect(&tr.influx()),
    );
    println!("wrote {} files to {}", files.len(), dir.display());
    Ok(())
}

fn validate(path: &Path) -> Result<(), Error> {
    let parsed = load(path)?;
    let cfg = &parsed.config;
    let mesh = cfg.check()?;
    let report = cfg.validate_material(&mesh);
    print!("{report}");
    println!("tau = {:e}, tau_max = {:e}, steps = {}", cfg.tau, cfg.tau_max(&mesh), cfg.num_steps()?);
    report.ensure()?;
    println!("configuration valid");
    Ok(())
}

fn print_refine(r: &RefineReport) {
    println!("tau: {:?}", r.taus);
    println!("terminal nu=1 defect: {:?}  ratios {:?}", r.defects_nu1, r.defect_ratios());
    println!("terminal nu=1/2 slack: {:?}", r.slack_nu05);
    println!("hydrogen defect: {:?}", r.hydrogen_defects);
    let ratios = r.ratios();
    for (f, name) in RefineReport::FIELDS.iter().enumerate() {
        println!("{name:<12} differences {:?}  ratios {:?}", r.diffs[f], ratios[f]);
    }
    let spread = r.monitor_spread();
    for (j, name) in hydride_core::audit::AprioriMonitor::NAMES.iter().enumerate() {
        let vals: Vec<f64> = r.monitors.iter().map(|m| m.values()[j]).collect();
        println!("{name:<16} {vals:?}  spread {:.3}%", 100.0 * spread[j]);
    }
}

fn refine(path: &Path, levels: usize) -> Result<(), Error> {
    let parsed = load(path)?;
    let report = refine_study(&parsed.config, levels)?;
    print_refine(&report);
    let monotone = report.ratios().iter().all(|r| r.iter().all(|&q| q > 1.0));
    if !monotone {
        return Err(Error::Validation("successive differences do not decrease".into()));
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 1 } else { 0 });
        }
    };
    let level = match cli.verbose {
        0 => log::LevelFilter::Warn,
        1 => log::LevelFilter::Info,
        _ => log::LevelFilter::Debug,
    };
    env_logger::Builder::new().filter_level(level).format_timestamp(None).init();
    let result = match cli.command {
        Command::Simulate { config, out } => simulate(&config, out),
        Command::Validate { config } => validate(&config),
        Command::Refine { config, levels } => refine(&config, levels),
        Command::Selftest => {
            let report = selftest();
            print!("{report}");
            if report.ok() {
                println!("selftest passed");
                Ok(())
            } else {
                Err(Error::Validation("selftest failed".into()))
            }
        }
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}
