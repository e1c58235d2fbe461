use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use dwlab_cli::acceptance::summary_lines;
use dwlab_cli::commands;
use dwlab_cli::config::{load_config, Format, RunConfig};
use dwlab_cli::export::Sink;
use dwlab_cli::{exit, CliError};

#[derive(Parser)]
#[command(
    name = "dwlab",
    version,
    about = "Strongly damped wave equations: forms, spectra and evolution"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,

    /// Model description file.
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    /// Output directory (overrides `[output] directory`).
    #[arg(long, global = true)]
    out: Option<PathBuf>,

    #[arg(long, global = true, default_value_t = 42)]
    seed: u64,

    #[arg(long, global = true, env = "DWLAB_THREADS")]
    threads: Option<usize>,

    /// csv, json or both.
    #[arg(long, global = true, value_parser = parse_format)]
    format: Option<Format>,
}

#[derive(Subcommand, Clone, Copy)]
enum Command {
    /// Continuity, ellipticity, sector and parabola checks.
    Analyze,
    /// Eigenvalues, numerical range and frequency response.
    Spectrum,
    /// Time integration.
    Evolve,
    /// Runs the acceptance suite.
    Verify,
}

fn parse_format(s: &str) -> Result<Format, String> {
    Format::parse(s).ok_or_else(|| format!("unknown format '{s}' (csv, json, both)"))
}

fn sink(cli: &Cli, cfg: Option<&RunConfig>) -> Sink {
    let dir = cli
        .out
        .clone()
        .or_else(|| cfg.and_then(|c| c.output.directory.clone()))
        .unwrap_or_else(|| PathBuf::from("dwlab-out"));
    let format = cli
        .format
        .or_else(|| cfg.and_then(|c| c.output.format))
        .unwrap_or(Format::Both);
    Sink {
        dir,
        csv: format.csv(),
        json: format.json(),
    }
}

fn required_config(path: Option<&Path>) -> Result<RunConfig, CliError> {
    let path = path.ok_or_else(|| CliError::Config("--config PATH is required for this command".into()))?;
    load_config(path)
}

fn run(cli: &Cli) -> Result<u8, CliError> {
    if let Some(n) = cli.threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| CliError::Config(format!("thread pool: {e}")))?;
    }
    match cli.command {
        Command::Analyze => {
            let cfg = required_config(cli.config.as_deref())?;
            let report = commands::analyze(&cfg, cli.seed, &sink(cli, Some(&cfg)))?;
            for c in &report.checks {
                println!("{}  {}", if c.pass { "PASS" } else { "FAIL" }, c.name);
            }
            verdict(report.pass, report.failing())
        }
        Command::Spectrum => {
            let cfg = required_config(cli.config.as_deref())?;
            let s = commands::spectrum_command(&cfg, &sink(cli, Some(&cfg)))?;
            println!(
                "eigenvalues {}  max Re {:.6e}  sup resolvent {:.6e}  omega {:.6e}",
                s.eigenvalue_count, s.max_real_part, s.sup_norm, s.omega
            );
            let mut failing = Vec::new();
            if !s.certified_shift {
                failing.push("ellipticity".to_string());
            }
            if !s.sector_pass {
                failing.push("sector".to_string());
            }
            if !s.parabola_pass {
                failing.push("parabola".to_string());
            }
            verdict(s.pass, failing)
        }
        Command::Evolve => {
            let cfg = required_config(cli.config.as_deref())?;
            let s = commands::evolve(&cfg, &sink(cli, Some(&cfg)))?;
            println!(
                "{} steps {}  final energy {:.6e}  reality drift {:.3e}",
                s.method, s.steps, s.final_energy, s.max_reality_drift
            );
            if let Some(e) = s.oracle_relative_error {
                println!("oracle relative error {e:.3e}");
            }
            Ok(exit::PASS)
        }
        Command::Verify => {
            let cfg = cli.config.as_deref().map(load_config).transpose()?;
            let report = commands::verify(cfg.as_ref(), cli.seed, &sink(cli, cfg.as_ref()))?;
            for line in summary_lines(&report) {
                println!("{line}");
            }
            verdict(report.pass, report.failing())
        }
    }
}

fn verdict(pass: bool, failing: Vec<String>) -> Result<u8, CliError> {
    if pass {
        Ok(exit::PASS)
    } else {
        Err(CliError::Verification(failing))
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("dwlab: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
