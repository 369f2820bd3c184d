//! `mitscherlich`: optimal three-point designs from the command line.

mod commands;
mod config;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use config::RunConfig;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Config(String),
    #[error(transparent)]
    Core(#[from] mitscherlich::Error),
    #[error("cannot write {path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("verification failed:\n{0}")]
    Verification(String),
}

impl CliError {
    fn exit_code(&self) -> u8 {
        use mitscherlich::Error as E;
        match self {
            CliError::Core(E::Infeasible(_) | E::Domain(_) | E::InvalidParams(_) | E::Order(_)) => 2,
            CliError::Verification(_) => 3,
            _ => 1,
        }
    }
}

#[derive(Debug, Parser)]
#[command(name = "mitscherlich", version, about = "Locally D-optimal designs for the Mitscherlich curve")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Optimal design for one family and parameter guess.
    Design(Flags),
    /// Optimal middle stimulus for the preset rows (Gaussian, Poisson, Gamma, binomial).
    Table1(Flags),
    /// Inverse Gaussian optima and dilution-design efficiencies for the preset rows.
    Table2(Flags),
    /// Efficiency of dilution designs (or one `--design`) against the optimum.
    Efficiency(Flags),
    /// Solver against the grid oracle, plus Monte-Carlo covariance checks.
    Verify(Flags),
    /// Simulate, fit by maximum likelihood and compare with the information matrix.
    Simulate(Flags),
}

#[derive(Debug, Args, Default)]
pub struct Flags {
    /// Key-value configuration file; flags override it.
    #[arg(long, value_name = "PATH")]
    config: Option<PathBuf>,
    /// gaussian, poisson, negative-binomial, gamma, binomial or inverse-gaussian.
    #[arg(long)]
    family: Option<String>,
    /// Binomial trial count N.
    #[arg(long)]
    trials: Option<u32>,
    #[arg(long, num_args = 3, value_names = ["B1", "B2", "B3"], allow_negative_numbers = true)]
    beta: Option<Vec<f64>>,
    /// Use preset parameter row 1-6 instead of --beta.
    #[arg(long)]
    row: Option<usize>,
    #[arg(long, num_args = 2, value_names = ["L", "U"], allow_negative_numbers = true)]
    bounds: Option<Vec<f64>>,
    /// Heteroscedastic normal with variance sigma2 * mu^p.
    #[arg(long)]
    power: Option<f64>,
    #[arg(long)]
    sigma2: Option<f64>,
    /// Transformation of the mean: id, sqrt or exp.
    #[arg(long)]
    transform: Option<String>,
    #[arg(long)]
    grid_step: Option<f64>,
    /// Fail instead of grid searching when the placement conditions fail.
    #[arg(long)]
    no_grid_fallback: bool,
    /// Dilution factors for `efficiency`.
    #[arg(long, num_args = 1..)]
    dilution: Option<Vec<f64>>,
    /// Candidate design for `efficiency`, or the design for `simulate`.
    #[arg(long, num_args = 3, value_names = ["X1", "X2", "X3"])]
    design: Option<Vec<f64>>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    replicates: Option<usize>,
    #[arg(long)]
    n_per_point: Option<u32>,
    /// Nuisance value: sigma^2 (Gaussian), shape (Gamma, negative binomial), lambda (inverse Gaussian).
    #[arg(long)]
    dispersion: Option<f64>,
    /// Grid oracle for `verify`: conditional or full.
    #[arg(long)]
    oracle: Option<String>,
    /// Skip the Monte-Carlo part of `verify`.
    #[arg(long)]
    no_simulation: bool,
    /// pretty, csv or json.
    #[arg(long)]
    format: Option<String>,
    #[arg(long, conflicts_with_all = ["format", "csv"])]
    json: bool,
    #[arg(long, conflicts_with = "format")]
    csv: bool,
    /// Write output here instead of stdout.
    #[arg(long, value_name = "PATH")]
    out: Option<PathBuf>,
    #[arg(long, hide = true)]
    corrupt_x2_equation: bool,
}

impl Flags {
    fn as_config(&self) -> RunConfig {
        let format = if self.json {
            Some("json".to_string())
        } else if self.csv {
            Some("csv".to_string())
        } else {
            self.format.clone()
        };
        RunConfig {
            family: self.family.clone(),
            trials: self.trials,
            beta: self.beta.as_ref().map(|b| [b[0], b[1], b[2]]),
            row: self.row,
            bounds: self.bounds.as_ref().map(|b| [b[0], b[1]]),
            power: self.power,
            sigma2: self.sigma2,
            transform: self.transform.clone(),
            grid_step: self.grid_step,
            grid_fallback: self.no_grid_fallback.then_some(false),
            format,
            dilution: self.dilution.clone(),
            design: self.design.as_ref().map(|d| [d[0], d[1], d[2]]),
            seed: self.seed,
            replicates: self.replicates,
            n_per_point: self.n_per_point,
            dispersion: self.dispersion,
            oracle: self.oracle.clone(),
            simulation: self.no_simulation.then_some(false),
        }
    }

    /// Flags over the config file.
    fn resolve(&self) -> Result<RunConfig, CliError> {
        let base = match &self.config {
            Some(p) => RunConfig::load(p)?,
            None => RunConfig::default(),
        };
        Ok(base.overlay(&self.as_config()))
    }
}

fn run(cli: Cli) -> Result<(), CliError> {
    let (flags, cmd): (&Flags, fn(&commands::Ctx) -> Result<commands::Outcome, CliError>) = match &cli.command {
        Command::Design(f) => (f, commands::design),
        Command::Table1(f) => (f, commands::table1),
        Command::Table2(f) => (f, commands::table2),
        Command::Efficiency(f) => (f, commands::efficiency),
        Command::Verify(f) => (f, commands::verify),
        Command::Simulate(f) => (f, commands::simulate),
    };
    let ctx = commands::Ctx::new(flags.resolve()?, flags.corrupt_x2_equation)?;
    let outcome = cmd(&ctx)?;
    // A failed verification still emits its report.
    emit(&outcome.text, flags.out.as_ref())?;
    match outcome.failures {
        Some(f) => Err(CliError::Verification(f)),
        None => Ok(()),
    }
}

fn emit(text: &str, out: Option<&PathBuf>) -> Result<(), CliError> {
    match out {
        Some(path) => std::fs::write(path, text).map_err(|source| CliError::Io { path: path.clone(), source }),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
