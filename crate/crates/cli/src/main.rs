use std::io;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use liepnm::commands::{self, CliError, TmgArgs};
use liepnm::config::FamilyTag;

#[derive(Parser)]
#[command(name = "liepnm", version, about = "Probabilistic ODE solutions through Lie symmetry reduction")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum Family {
    #[value(name = "first_order", alias = "first-order")]
    FirstOrder,
    #[value(name = "second_order", alias = "second-order")]
    SecondOrder,
}

#[derive(Subcommand)]
enum Command {
    /// Run the solver from a key = value config and write CSV (and SVG) output.
    Solve { config: PathBuf },
    /// Print the commutator table and check each generator is a symmetry.
    VerifySymmetry {
        #[arg(long, value_enum)]
        family: Family,
        /// Right-hand side F(r) of y' = F(y/x) for the first order family.
        #[arg(long = "F")]
        f: Option<String>,
    },
    /// Sample a standard Gaussian restricted to {x : F x + g >= 0}.
    SampleTmg {
        #[arg(long)]
        dims: usize,
        /// One row `f_1 ... f_d g` per constraint.
        #[arg(long)]
        constraints: PathBuf,
        #[arg(long, default_value_t = 1000)]
        count: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = liepnm_core::tmg::DEFAULT_BURN_IN)]
        burn_in: usize,
        #[arg(long, default_value_t = liepnm_core::tmg::DEFAULT_TRAVEL_TIME)]
        travel_time: f64,
        #[arg(long, default_value = "tmg_samples.csv")]
        out: PathBuf,
    },
    /// Draw an ensemble CSV as SVG.
    ExportPlot {
        ensemble: PathBuf,
        out: PathBuf,
        /// Config of the run, used to draw the envelope over an r column.
        #[arg(long)]
        config: Option<PathBuf>,
    },
}

fn run(cli: Cli) -> Result<(), CliError> {
    let mut stdout = io::stdout();
    match cli.command {
        Command::Solve { config } => commands::cmd_solve(&config, &mut stdout).map(|_| ()),
        Command::VerifySymmetry { family, f } => {
            let tag = match family {
                Family::FirstOrder => FamilyTag::FirstOrder,
                Family::SecondOrder => FamilyTag::SecondOrder,
            };
            if commands::cmd_verify_symmetry(tag, f.as_deref(), &mut stdout)? {
                Ok(())
            } else {
                Err(CliError::Runtime(format!(
                    "a generator is not admitted (residual >= {:e})",
                    commands::SYMMETRY_TOL
                )))
            }
        }
        Command::SampleTmg {
            dims,
            constraints,
            count,
            seed,
            burn_in,
            travel_time,
            out,
        } => commands::cmd_sample_tmg(
            &TmgArgs {
                dims,
                constraints: &constraints,
                count,
                seed,
                burn_in,
                travel_time,
                out: &out,
            },
            &mut stdout,
        ),
        Command::ExportPlot {
            ensemble,
            out,
            config,
        } => commands::cmd_export_plot(&ensemble, &out, config.as_deref()),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
