use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use hlab::cli::{
    cmd_check, cmd_example, cmd_selftest, cmd_solve, ExampleParams, Overrides, ProblemFile,
    RunReport, SelftestConfig,
};

#[derive(Parser)]
#[command(name = "hlab", version, about = "Helmholtz conditions for second-order ODE systems")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// Sample seed (overrides [domain] seed)
    #[arg(long)]
    seed: Option<u64>,
    /// Number of samples (overrides [domain] count)
    #[arg(long)]
    samples: Option<usize>,
    /// Residual tolerance (overrides [check] tol)
    #[arg(long)]
    tol: Option<f64>,
    /// Write the JSON report to this path (`-` for stdout)
    #[arg(long)]
    json: Option<PathBuf>,
}

impl Common {
    fn overrides(&self) -> Overrides {
        Overrides {
            seed: self.seed,
            samples: self.samples,
            tol: self.tol,
        }
    }
}

#[derive(Subcommand)]
enum Command {
    /// Run the conditions listed in [check]
    Check {
        file: PathBuf,
        #[command(flatten)]
        common: Common,
    },
    /// Search for multipliers as configured in [solve]
    Solve {
        file: PathBuf,
        #[command(flatten)]
        common: Common,
    },
    /// Run a built-in example: ex1, projective, gyro-class, classic-gyro
    Example {
        name: String,
        /// Parameter lambda of `projective`
        #[arg(long, default_value_t = 1.0, allow_negative_numbers = true)]
        lambda: f64,
        /// Dimension of `projective`
        #[arg(long, default_value_t = 2)]
        dim: usize,
        #[command(flatten)]
        common: Common,
    },
    /// Check derivatives, the integrator and reproducibility
    Selftest {
        #[command(flatten)]
        common: Common,
    },
}

fn emit(report: &RunReport, json: Option<&PathBuf>) -> hlab::error::Result<()> {
    match json {
        Some(p) if p.as_os_str() == "-" => println!("{}", report.to_json()?),
        Some(p) => {
            std::fs::write(p, report.to_json()? + "\n")?;
            print!("{}", report.summary());
        }
        None => print!("{}", report.summary()),
    }
    Ok(())
}

fn run(cli: Cli) -> hlab::error::Result<i32> {
    let (report, common) = match &cli.command {
        Command::Check { file, common } => (cmd_check(&ProblemFile::load(file)?, &common.overrides())?, common),
        Command::Solve { file, common } => (cmd_solve(&ProblemFile::load(file)?, &common.overrides())?, common),
        Command::Example {
            name,
            lambda,
            dim,
            common,
        } => {
            let params = ExampleParams {
                lambda: *lambda,
                dim: *dim,
            };
            (cmd_example(name, &params, &common.overrides())?, common)
        }
        Command::Selftest { common } => {
            let mut cfg = SelftestConfig::default();
            if let Some(s) = common.seed {
                cfg.seed = s;
            }
            if let Some(t) = common.tol {
                cfg.jet_tol = t;
            }
            if let Some(n) = common.samples {
                cfg.jet_pairs = n;
            }
            (cmd_selftest(&cfg)?, common)
        }
    };
    emit(&report, common.json.as_ref())?;
    Ok(report.exit_code())
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(code) => ExitCode::from(code as u8),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
