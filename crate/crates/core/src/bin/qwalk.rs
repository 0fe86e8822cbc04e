use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use qwalk::expcli::{self, Command, Overrides};
use qwalk::virtlab::NoiseMode;

#[derive(Parser)]
#[command(
    name = "qwalk",
    version,
    about = "Two-photon experiments on a simulated multimode fiber"
)]
struct Cli {
    #[command(subcommand)]
    command: Cmd,

    /// Configuration file (`key = value` lines).
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    /// Seed for the fiber and the detector noise.
    #[arg(long, global = true)]
    seed: Option<u64>,

    #[arg(long, global = true, value_enum)]
    noise: Option<Noise>,

    /// Output directory.
    #[arg(long, global = true)]
    out: Option<PathBuf>,

    /// Recompute artifacts and compare against the existing manifest.
    #[arg(long, global = true)]
    verify: bool,
}

#[derive(Subcommand, Clone, Copy)]
enum Cmd {
    /// Measure the transmission matrix by phase stepping.
    MeasureTm,
    /// 16 x 4 coincidence and contrast matrices for basis-mode inputs.
    TtmMatrix,
    /// Independent and superposition two-photon focusing.
    Focus,
    /// Contrast over a grid of superposition phases.
    PhaseGrid,
    /// Coincidences versus delay for three phase settings.
    HomScan,
}

#[derive(ValueEnum, Clone, Copy)]
enum Noise {
    Off,
    Poisson,
}

impl From<Cmd> for Command {
    fn from(c: Cmd) -> Self {
        match c {
            Cmd::MeasureTm => Command::MeasureTm,
            Cmd::TtmMatrix => Command::TtmMatrix,
            Cmd::Focus => Command::Focus,
            Cmd::PhaseGrid => Command::PhaseGrid,
            Cmd::HomScan => Command::HomScan,
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let overrides = Overrides {
        seed: cli.seed,
        noise: cli.noise.map(|n| match n {
            Noise::Off => NoiseMode::Noiseless,
            Noise::Poisson => NoiseMode::Poisson,
        }),
        out_dir: cli.out.clone(),
    };
    let command = Command::from(cli.command);
    let result = expcli::resolve_config(cli.config.as_deref(), &overrides).and_then(|cfg| {
        if cli.verify {
            let report = expcli::verify(command, &cfg)?;
            for name in &report.mismatched {
                eprintln!("mismatch: {name}");
            }
            println!(
                "verified {} files, {} mismatched",
                report.checked,
                report.mismatched.len()
            );
            Ok(report.ok())
        } else {
            let manifest = expcli::run_and_write(command, &cfg)?;
            println!(
                "{}: wrote {} files to {}",
                command.name(),
                manifest.files.len() + 1,
                cfg.out_dir.display()
            );
            Ok(true)
        }
    });
    match result {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(expcli::exit_code(&e) as u8)
        }
    }
}
