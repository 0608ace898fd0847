//! `spectral-hom` command-line driver.

mod config;
mod format;

use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context};
use clap::{Args, Parser, Subcommand};
use serde::Serialize;
use spectral_hom::simulation::{self, EventDataset};
use spectral_hom::{fisher, interference, oracle};

use config::{Overrides, RunConfig};
use format::num;

#[derive(Parser, Debug)]
#[command(name = "spectral-hom", version, about = "Frequency-resolved two-photon interference and delay estimation")]
struct Cli {
    #[command(subcommand)]
    command: Command,

    #[command(flatten)]
    common: Common,
}

#[derive(Args, Debug, Clone)]
struct Common {
    /// JSON run configuration.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[arg(long, global = true, allow_negative_numbers = true)]
    delta_t: Option<f64>,
    #[arg(long, global = true)]
    eta: Option<f64>,
    #[arg(long, global = true)]
    gamma: Option<f64>,
    /// Bandwidth of the Gaussian spectrum.
    #[arg(long, global = true)]
    sigma: Option<f64>,
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Output file; standard output when absent.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Bunch and coincidence densities against the frequency difference (CSV).
    Beats,
    /// Fisher information and bounds along a parameter axis (CSV).
    FisherScan,
    /// Sample detection events (CSV).
    Simulate {
        #[arg(long)]
        n_events: Option<usize>,
    },
    /// Maximum-likelihood delay estimate (JSON).
    Estimate {
        /// Events CSV as written by `simulate`.
        #[arg(long)]
        events: Option<PathBuf>,
        #[arg(long)]
        n_events: Option<usize>,
        #[arg(long)]
        search_max: Option<f64>,
    },
    /// Repeated estimation against the Cramér–Rao bound (JSON).
    ValidateCrb {
        #[arg(long)]
        n_events: Option<usize>,
        #[arg(long)]
        n_trials: Option<usize>,
    },
    /// Discrete-mode verification of densities and Fisher information (JSON).
    OracleCheck {
        #[arg(long)]
        grid_points: Option<usize>,
    },
}

/// Some results could not be computed; the rest were written.
#[derive(Debug)]
struct NumericalFailure(String);

impl std::fmt::Display for NumericalFailure {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for NumericalFailure {}

fn exit_code(err: &anyhow::Error) -> u8 {
    for cause in err.chain() {
        if cause.is::<NumericalFailure>() {
            return 2;
        }
        if let Some(e) = cause.downcast_ref::<spectral_hom::Error>() {
            return if e.is_numerical() { 2 } else { 1 };
        }
    }
    1
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err:#}");
            ExitCode::from(exit_code(&err))
        }
    }
}

fn configure_threads() -> anyhow::Result<()> {
    let Ok(v) = std::env::var("SPECTRAL_HOM_THREADS") else {
        return Ok(());
    };
    let n: usize = v
        .trim()
        .parse()
        .ok()
        .filter(|&n| n > 0)
        .with_context(|| format!("SPECTRAL_HOM_THREADS must be a positive integer, got {v:?}"))?;
    rayon::ThreadPoolBuilder::new().num_threads(n).build_global()?;
    Ok(())
}

fn run(cli: Cli) -> anyhow::Result<()> {
    configure_threads()?;
    let c = &cli.common;
    let mut rc = RunConfig::load(c.config.as_deref())?;
    rc.apply(&Overrides {
        delta_t: c.delta_t,
        eta: c.eta,
        gamma: c.gamma,
        sigma: c.sigma,
        seed: c.seed,
        out: c.out.clone(),
    })?;
    match cli.command {
        Command::Beats => beats(&rc),
        Command::FisherScan => fisher_scan(&rc),
        Command::Simulate { n_events } => simulate(&rc, n_events),
        Command::Estimate { events, n_events, search_max } => estimate(&rc, events, n_events, search_max),
        Command::ValidateCrb { n_events, n_trials } => validate(&rc, n_events, n_trials),
        Command::OracleCheck { grid_points } => oracle_check(&rc, grid_points),
    }
}

fn output(path: Option<&Path>) -> anyhow::Result<Box<dyn Write>> {
    Ok(match path {
        Some(p) => Box::new(BufWriter::new(
            File::create(p).with_context(|| format!("cannot create {}", p.display()))?,
        )),
        None => Box::new(BufWriter::new(io::stdout().lock())),
    })
}

fn csv_writer(rc: &RunConfig) -> anyhow::Result<csv::Writer<Box<dyn Write>>> {
    Ok(csv::Writer::from_writer(output(rc.out.as_deref())?))
}

fn write_json<T: Serialize>(rc: &RunConfig, value: &T) -> anyhow::Result<()> {
    let mut w = output(rc.out.as_deref())?;
    serde_json::to_writer_pretty(&mut w, value)?;
    writeln!(w)?;
    w.flush()?;
    Ok(())
}

fn beats(rc: &RunConfig) -> anyhow::Result<()> {
    let cfg = rc.experiment()?;
    let profile = interference::beat_profile(&cfg, rc.beats.n_points)?;
    let mut w = csv_writer(rc)?;
    w.write_record(["delta", "bunch_density", "coincidence_density"])?;
    for p in &profile {
        w.write_record([num(p.delta), num(p.bunch), num(p.coincidence)])?;
    }
    w.flush()?;
    eprintln!("visibility {}", num(interference::beat_visibility(&profile, cfg.delta_t())));
    Ok(())
}

fn fisher_scan(rc: &RunConfig) -> anyhow::Result<()> {
    let cfg = rc.experiment()?;
    let grid = rc.scan.grid()?;
    let points = fisher::fisher_scan(&cfg, rc.scan.axis(), &grid, rc.scan.n_repetitions)?;
    let mut w = csv_writer(rc)?;
    w.write_record([
        "axis_value",
        "fi_resolved",
        "fi_nonresolved",
        "fi_eta1",
        "fi_large_delay",
        "qfi",
        "crb_resolved",
        "crb_nonresolved",
        "qcrb",
    ])?;
    let mut failures = Vec::new();
    let mut numerical = false;
    for p in &points {
        let values = match &p.report {
            Ok(r) => [
                r.fi_resolved,
                r.fi_nonresolved,
                r.fi_eta1,
                r.fi_large_delay,
                r.qfi,
                r.crb_resolved,
                r.crb_nonresolved,
                r.qcrb,
            ],
            Err(e) => {
                numerical |= e.is_numerical();
                failures.push(format!("{}: {e}", num(p.axis_value)));
                [f64::NAN; 8]
            }
        };
        let mut row = vec![num(p.axis_value)];
        row.extend(values.iter().map(|&v| num(v)));
        w.write_record(&row)?;
    }
    w.flush()?;
    if !failures.is_empty() {
        let msg = format!("{} scan point(s) failed: {}", failures.len(), failures.join("; "));
        if numerical {
            return Err(NumericalFailure(msg).into());
        }
        bail!(msg);
    }
    Ok(())
}

fn simulate(rc: &RunConfig, n_events: Option<usize>) -> anyhow::Result<()> {
    let cfg = rc.experiment()?;
    let n = n_events.unwrap_or(rc.simulate.n_events);
    let data = simulation::sample_events(&cfg, n, rc.seed);
    let mut w = csv_writer(rc)?;
    w.write_record(format::EVENT_HEADER)?;
    for e in &data.events {
        w.write_record(format::event_record(e))?;
    }
    w.flush()?;
    Ok(())
}

fn read_events(path: &Path) -> anyhow::Result<Vec<spectral_hom::DetectionEvent>> {
    let mut r = csv::Reader::from_path(path).with_context(|| format!("cannot read events {}", path.display()))?;
    let header = r.headers()?.clone();
    if header.iter().map(str::trim).ne(format::EVENT_HEADER) {
        bail!("events file {} must have header {}", path.display(), format::EVENT_HEADER.join(","));
    }
    r.records()
        .enumerate()
        .map(|(i, rec)| {
            let rec = rec?;
            format::parse_event(&rec).with_context(|| format!("{} line {}", path.display(), i + 2))
        })
        .collect()
}

fn estimate(
    rc: &RunConfig,
    events: Option<PathBuf>,
    n_events: Option<usize>,
    search_max: Option<f64>,
) -> anyhow::Result<()> {
    let cfg = rc.experiment()?;
    let data = match events.or_else(|| rc.estimate.events.clone()) {
        Some(path) => EventDataset::from_events(cfg.clone(), read_events(&path)?),
        None => simulation::sample_events(&cfg, n_events.unwrap_or(rc.estimate.n_events), rc.seed),
    };
    let search_max = search_max
        .or(rc.estimate.search_max)
        .unwrap_or_else(|| simulation::default_search_max(&cfg));
    let est = simulation::mle(&data, search_max)?;
    write_json(rc, &est)
}

fn validate(rc: &RunConfig, n_events: Option<usize>, n_trials: Option<usize>) -> anyhow::Result<()> {
    let cfg = rc.experiment()?;
    let v = &rc.validate;
    let search_max = v.search_max.unwrap_or_else(|| simulation::default_search_max(&cfg));
    let report = simulation::crb_validation_with(
        &cfg,
        n_events.unwrap_or(v.n_events),
        n_trials.unwrap_or(v.n_trials),
        rc.seed,
        search_max,
    )?;
    write_json(rc, &report)
}

fn oracle_check(rc: &RunConfig, grid_points: Option<usize>) -> anyhow::Result<()> {
    let cfg = rc.experiment()?;
    let m = grid_points.unwrap_or(rc.oracle.grid_points);
    let report = oracle::oracle_check(&cfg, m, rc.oracle.step / cfg.sigma())?;
    write_json(rc, &report)
}
