use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use nlreg::config::{parse_config, RunConfig};
use nlreg::report::{run_command, Mode};

#[derive(Parser, Debug)]
#[command(name = "nlreg", version, about = "Closed-loop simulations of adaptive internal-model regulators")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(clap::Args, Debug)]
struct Overrides {
    /// Configuration file.
    config: PathBuf,
    /// Output directory (replaces [run] output).
    #[arg(long)]
    out: Option<PathBuf>,
    /// Final time.
    #[arg(long)]
    tfinal: Option<f64>,
    /// Fixed integration step.
    #[arg(long)]
    dt: Option<f64>,
    /// Replace earlier output files in the output directory.
    #[arg(long)]
    overwrite: bool,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Simulate the base configuration once.
    Run(Overrides),
    /// Simulate once per value of the [sweep] section.
    Sweep(Overrides),
    /// Parse the configuration and print it with all defaults resolved.
    Validate {
        config: PathBuf,
    },
}

fn load(path: &PathBuf) -> Result<RunConfig, ExitCode> {
    let text = std::fs::read_to_string(path).map_err(|e| {
        eprintln!("error: {}: {e}", path.display());
        ExitCode::from(2)
    })?;
    parse_config(&text).map_err(|e| {
        eprintln!("error: {}: {e}", path.display());
        ExitCode::from(1)
    })
}

fn apply(cfg: &mut RunConfig, o: &Overrides) -> Result<(), String> {
    if let Some(out) = &o.out {
        cfg.run.output = out.clone();
    }
    if let Some(t) = o.tfinal {
        if t <= 0.0 || !t.is_finite() {
            return Err(format!("--tfinal must be > 0, got {t}"));
        }
        cfg.run.tfinal = t;
    }
    if let Some(dt) = o.dt {
        if dt <= 0.0 || !dt.is_finite() {
            return Err(format!("--dt must be > 0, got {dt}"));
        }
        cfg.run.dt = Some(dt);
    }
    Ok(())
}

fn execute(o: &Overrides, mode: Mode) -> ExitCode {
    let mut cfg = match load(&o.config) {
        Ok(c) => c,
        Err(code) => return code,
    };
    if let Err(msg) = apply(&mut cfg, o) {
        eprintln!("error: {msg}");
        return ExitCode::from(1);
    }
    match run_command(&cfg, mode, o.overwrite) {
        Ok(outcome) => {
            for f in &outcome.files {
                println!("{}", f.display());
            }
            if outcome.any_diverged() {
                eprintln!("warning: at least one run diverged; see summary.txt");
            }
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    match &cli.command {
        Command::Run(o) => execute(o, Mode::Single),
        Command::Sweep(o) => execute(o, Mode::Sweep),
        Command::Validate { config } => match load(config) {
            Ok(cfg) => {
                print!("{}", cfg.emit());
                ExitCode::SUCCESS
            }
            Err(code) => code,
        },
    }
}
