use clap::{Parser, Subcommand};
use std::path::PathBuf;
use std::process::ExitCode;
use thinslab_cli::commands;
use thinslab_cli::config::RunConfig;
use thinslab_cli::error::CliResult;

#[derive(Parser)]
#[command(name = "thinslab", version, about = "Rotating flow in thin periodic slabs")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one member of the regime sequence.
    Run3d {
        config: PathBuf,
        /// Overrides `output.directory`.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run the limit system from matched data.
    Run2d {
        config: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run every member and emit the report.
    Sweep {
        config: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Check admissibility of the generated data for every member.
    CheckData { config: PathBuf },
    /// Recompute fits and verdicts from a report directory.
    Report { dir: PathBuf },
}

fn out_dir(cfg: &RunConfig, out: Option<PathBuf>) -> PathBuf {
    out.unwrap_or_else(|| cfg.output.directory.clone())
}

fn status(ok: bool) -> ExitCode {
    if ok {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(2)
    }
}

fn run(cli: Cli) -> CliResult<ExitCode> {
    match cli.command {
        Command::Run3d { config, out } => {
            let cfg = RunConfig::load(&config)?;
            let dir = out_dir(&cfg, out);
            let o = commands::run3d(&cfg, &dir)?;
            let last = o.ledger.rows.last();
            println!(
                "n = {} eps = {:.4e}: {} steps of {:.4e}, final kinetic {:.6e}, budget slack {:.6e}",
                o.regime.n,
                o.regime.epsilon,
                o.steps,
                o.dt,
                last.map_or(f64::NAN, |r| r.kinetic),
                last.map_or(f64::NAN, |r| r.budget_slack)
            );
            println!("wrote {}", dir.display());
            Ok(ExitCode::SUCCESS)
        }
        Command::Run2d { config, out } => {
            let cfg = RunConfig::load(&config)?;
            let dir = out_dir(&cfg, out);
            let rows = commands::run2d(&cfg, &dir)?;
            if let Some(r) = rows.last() {
                println!("t = {:.4e}: energy {:.6e}, enstrophy {:.6e}", r.t, r.energy, r.enstrophy);
            }
            println!("wrote {}", dir.display());
            Ok(ExitCode::SUCCESS)
        }
        Command::Sweep { config, out } => {
            let cfg = RunConfig::load(&config)?;
            let dir = out_dir(&cfg, out);
            let rep = commands::sweep(&cfg, &dir)?;
            print!("{}", thinslab_cli::output::render(&rep));
            println!("wrote {}", dir.display());
            Ok(status(rep.passed()))
        }
        Command::CheckData { config } => {
            let cfg = RunConfig::load(&config)?;
            let (text, ok) = commands::check_data(&cfg)?;
            print!("{text}");
            Ok(status(ok))
        }
        Command::Report { dir } => {
            let (text, ok) = commands::report(&dir)?;
            print!("{text}");
            Ok(status(ok))
        }
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
