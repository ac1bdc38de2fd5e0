//! `simulate`: runs a BER sweep described by a scenario file and writes CSV.

use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;
use mumimo::harness::{
    load_config, parse_snr_list, run_sweep_with, write_csv, DetectorChoice, Execution, ScenarioSpec,
};
use mumimo::Error;

#[derive(Debug, Parser)]
#[command(
    name = "simulate",
    version,
    about = "Monte Carlo BER sweep for multiuser MIMO uplinks"
)]
struct Cli {
    /// Scenario file in `key = value` format.
    #[arg(long)]
    config: PathBuf,
    /// SNR sweep `a:b:step` (dB) or a comma separated list; overrides `snr`.
    #[arg(long)]
    snr: Option<String>,
    /// Detector name; overrides `detector`.
    #[arg(long)]
    detector: Option<String>,
    #[arg(long)]
    seed: Option<u64>,
    /// Packets per SNR point.
    #[arg(long)]
    packets: Option<usize>,
    /// CSV destination; overrides `output`. Without either, CSV goes to stdout.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Worker threads (default: all cores).
    #[arg(long)]
    threads: Option<usize>,
}

const EXIT_CONFIG: u8 = 2;
const EXIT_NUMERICAL: u8 = 3;
const EXIT_IO: u8 = 1;

fn config_error(message: String) -> (u8, String) {
    (EXIT_CONFIG, message)
}

fn apply_overrides(cli: &Cli, spec: &mut ScenarioSpec) -> Result<(), (u8, String)> {
    if let Some(s) = &cli.snr {
        spec.snr_db = parse_snr_list(s).ok_or_else(|| config_error(format!("--snr: cannot parse `{s}`")))?;
    }
    if let Some(d) = &cli.detector {
        spec.detector =
            DetectorChoice::from_name(d).ok_or_else(|| config_error(format!("--detector: unknown detector `{d}`")))?;
    }
    if let Some(seed) = cli.seed {
        spec.seed = seed;
    }
    if let Some(p) = cli.packets {
        spec.packets = p;
    }
    if let Some(out) = &cli.out {
        spec.output = Some(out.clone());
    }
    spec.validate().map_err(|e| config_error(e.to_string()))
}

fn classify(e: &Error) -> u8 {
    if e.is_config() {
        EXIT_CONFIG
    } else {
        match e {
            Error::Io(_) | Error::Csv(_) => EXIT_IO,
            _ => EXIT_NUMERICAL,
        }
    }
}

fn run(cli: &Cli) -> Result<(), (u8, String)> {
    let mut spec = load_config(&cli.config).map_err(|e| match e {
        Error::Io(io) => config_error(format!("{}: {io}", cli.config.display())),
        other => config_error(format!("{}: {other}", cli.config.display())),
    })?;
    apply_overrides(cli, &mut spec)?;
    let execution = cli.threads.map_or(Execution::Parallel, Execution::Workers);
    let result = run_sweep_with(&spec, execution).map_err(|e| (classify(&e), e.to_string()))?;

    for p in &result.points {
        eprintln!(
            "snr {:>6} dB  ber {:.3e}  [{:.3e}, {:.3e}]  {:.2} s",
            p.snr_db, p.ber, p.ci_low, p.ci_high, p.wall_time_s
        );
    }
    eprintln!(
        "scenario {} seed {} version {}",
        result.scenario_hash, result.seed, result.version
    );
    match &spec.output {
        Some(path) => write_csv(&result, path).map_err(|e| (EXIT_IO, e.to_string()))?,
        None => {
            let text = result.to_csv_string().map_err(|e| (EXIT_IO, e.to_string()))?;
            std::io::stdout()
                .write_all(text.as_bytes())
                .map_err(|e| (EXIT_IO, e.to_string()))?;
        }
    }
    let failed: Vec<String> = result
        .failed_points()
        .map(|p| format!("{} dB: {}", p.snr_db, p.failure.as_deref().unwrap_or("")))
        .collect();
    if failed.is_empty() {
        Ok(())
    } else {
        Err((EXIT_NUMERICAL, format!("failed points:\n  {}", failed.join("\n  "))))
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err((code, message)) => {
            eprintln!("error: {message}");
            ExitCode::from(code)
        }
    }
}
