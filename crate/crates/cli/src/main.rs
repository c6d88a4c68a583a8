use std::path::PathBuf;
use std::process::ExitCode;

use clap::error::ErrorKind;
use clap::{Args, Parser, Subcommand};
use maxwell_elliptic_cli::config::RunConfig;
use maxwell_elliptic_cli::run::{run_solve, run_symbol_check, Outcome};
use maxwell_elliptic_cli::{exit, CliError};

/// Elliptic least-squares solver for time-harmonic Maxwell transmission problems.
#[derive(Debug, Parser)]
#[command(name = "maxwell-elliptic", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Solve the configured case and write fields and a report.
    Solve(Common),
    /// Run the Lopatinsky sweep over random media.
    SymbolCheck(Common),
    /// Solve on a refinement list and write the error-vs-h table.
    Convergence(Common),
}

#[derive(Debug, Args)]
struct Common {
    /// TOML configuration file; defaults are used for missing keys.
    #[arg(short, long)]
    config: Option<PathBuf>,
    /// Override a configuration key, e.g. `--set solver.tol=1e-8`.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    set: Vec<String>,
    /// Output directory (`output.dir`).
    #[arg(short, long)]
    out_dir: Option<PathBuf>,
    /// Cells per axis (`geometry.n_cells`).
    #[arg(long)]
    n_cells: Option<usize>,
    /// Case name (`case.name`).
    #[arg(long)]
    case: Option<String>,
    /// Seed of the manufactured case or the sweep.
    #[arg(long)]
    seed: Option<u64>,
    /// Number of sweep samples (`symbol.samples`).
    #[arg(long)]
    samples: Option<usize>,
}

impl Common {
    fn overrides(&self, command: &Command) -> Vec<String> {
        let mut o = self.set.clone();
        if let Some(d) = &self.out_dir {
            o.push(format!("output.dir={}", toml_string(&d.display().to_string())));
        }
        if let Some(n) = self.n_cells {
            o.push(format!("geometry.n_cells={n}"));
        }
        if let Some(c) = &self.case {
            o.push(format!("case.name={}", toml_string(c)));
        }
        if let Some(s) = self.seed {
            let section = if matches!(command, Command::SymbolCheck(_)) { "symbol" } else { "case" };
            o.push(format!("{section}.seed={s}"));
        }
        if let Some(s) = self.samples {
            o.push(format!("symbol.samples={s}"));
        }
        o
    }
}

fn toml_string(s: &str) -> String {
    toml::Value::String(s.to_string()).to_string()
}

fn run(cli: &Cli) -> Result<Outcome, CliError> {
    let common = match &cli.command {
        Command::Solve(c) | Command::SymbolCheck(c) | Command::Convergence(c) => c,
    };
    let config = RunConfig::load(common.config.as_deref(), &common.overrides(&cli.command))?;
    match &cli.command {
        Command::Solve(_) => run_solve(&config, "solve", config.output.vtk),
        Command::Convergence(_) => {
            if config.geometry.cell_counts().len() < 2 {
                return Err(CliError::Usage(
                    "convergence needs geometry.refinement with at least two entries".into(),
                ));
            }
            run_solve(&config, "convergence", false)
        }
        Command::SymbolCheck(_) => run_symbol_check(&config),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => ExitCode::SUCCESS,
                _ => ExitCode::from(exit::CONFIG),
            };
        }
    };
    match run(&cli) {
        Ok(outcome) => {
            println!("{}", outcome.summary);
            ExitCode::from(outcome.code)
        }
        Err(e) => {
            eprintln!("{e}");
            ExitCode::from(e.exit_code())
        }
    }
}
