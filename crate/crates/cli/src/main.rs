//! `fermibath`: run Green's function and density-matrix experiments from a
//! config file and write figure-ready tables.

mod commands;
mod config;
mod error;
mod presets;
mod table;

use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use config::{ExperimentConfig, Format, WindowConfig};
use error::CliError;
use presets::Preset;

#[derive(Debug, Parser)]
#[command(
    name = "fermibath",
    version,
    about = "Fermions in a damped harmonic trap: propagators and density matrices"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// Experiment config (TOML). Flags below override its values.
    #[arg(long, global = true, value_name = "PATH", conflicts_with = "preset")]
    config: Option<PathBuf>,
    /// Start from a bundled preset instead of a config file.
    #[arg(long, global = true, value_enum)]
    preset: Option<Preset>,
    /// Write the table here instead of stdout.
    #[arg(long, global = true, value_name = "PATH")]
    out: Option<PathBuf>,
    #[arg(long, global = true, value_enum)]
    format: Option<Format>,
    /// Level window, `n_lo:n_hi` inclusive.
    #[arg(long, global = true, value_name = "N_LO:N_HI", value_parser = parse_window)]
    window: Option<WindowConfig>,
    /// High-excitation limiting form of the density matrix.
    #[arg(long, global = true)]
    limiting: bool,
    /// Weak-coupling closed form of the propagator.
    #[arg(long, global = true)]
    closed_form: bool,
    /// Exact center-of-mass correlators instead of weak coupling.
    #[arg(long, global = true)]
    exact_cm: bool,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Hole or particle propagator on the time grid.
    Greens,
    /// Density matrix after injecting one particle.
    Evolve,
    /// Populations when the bath drives every boson mode of the profile.
    Generic,
    /// Compare against the quadrature, Wick and finite-bath oracles.
    Verify,
    /// Print the resolved config as TOML.
    ShowConfig,
}

fn parse_window(s: &str) -> Result<WindowConfig, String> {
    let (lo, hi) = s
        .split_once(':')
        .ok_or_else(|| format!("expected n_lo:n_hi, got \"{s}\""))?;
    let lo: i32 = lo.trim().parse().map_err(|e| format!("bad n_lo: {e}"))?;
    let hi: i32 = hi.trim().parse().map_err(|e| format!("bad n_hi: {e}"))?;
    if lo < 0 || hi < lo {
        return Err(format!("need 0 <= n_lo <= n_hi, got {lo}:{hi}"));
    }
    Ok(WindowConfig { lo, hi })
}

fn load(cli: &Cli) -> Result<ExperimentConfig, CliError> {
    let mut cfg = match (&cli.config, cli.preset) {
        (Some(path), _) => {
            let text = std::fs::read_to_string(path).map_err(|source| CliError::Read {
                path: path.clone(),
                source,
            })?;
            ExperimentConfig::parse(&text)?
        }
        (None, Some(p)) => ExperimentConfig::parse(p.text())?,
        (None, None) => {
            return Err(CliError::Usage(
                "one of --config or --preset is required".into(),
            ))
        }
    };
    if let Some(f) = cli.format {
        cfg.output.format = f;
    }
    if cli.window.is_some() {
        cfg.window = cli.window;
    }
    cfg.flags.limiting |= cli.limiting;
    cfg.flags.closed_form |= cli.closed_form;
    cfg.flags.exact_cm |= cli.exact_cm;
    cfg.validate()?;
    Ok(cfg)
}

fn run(cli: &Cli) -> Result<(), CliError> {
    let cfg = load(cli)?;
    let (table, failed) = match cli.command {
        Command::Greens => (commands::greens(&cfg)?, 0),
        Command::Evolve => (commands::evolve(&cfg)?, 0),
        Command::Generic => (commands::generic(&cfg)?, 0),
        Command::Verify => commands::verify(&cfg)?,
        Command::ShowConfig => {
            let text = cfg.to_toml()?;
            return emit(cli, |w| w.write_all(text.as_bytes()));
        }
    };
    emit(cli, |w| table.write(cfg.output.format, w))?;
    if failed > 0 {
        return Err(CliError::Verification(failed));
    }
    Ok(())
}

fn emit(cli: &Cli, write: impl FnOnce(&mut dyn Write) -> io::Result<()>) -> Result<(), CliError> {
    match &cli.out {
        Some(path) => {
            let mut w = BufWriter::new(File::create(path)?);
            write(&mut w)?;
            w.flush()?;
        }
        None => {
            let stdout = io::stdout();
            let mut w = BufWriter::new(stdout.lock());
            write(&mut w)?;
            w.flush()?;
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        // a closed downstream pipe (`| head`) is not an error
        Err(CliError::Write(e)) if e.kind() == io::ErrorKind::BrokenPipe => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("fermibath: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
