//! Command-line interface: certify channels, compute bounds, sweep the
//! MISO Z-channel region and reproduce the reference examples.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use noisy_ic::cli_report::{
    cmd_bounds, cmd_certify, cmd_examples, cmd_sweep, render_report, Format, RunConfig, SweepConfig, EXIT_ERROR, EXIT_PASS,
};

#[derive(Parser)]
#[command(name = "noisy-ic", version, about = "Sum-rate bounds and noisy-interference certificates for two-user MIMO interference channels")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
struct Common {
    /// Stationarity tolerance of the ascent solvers.
    #[arg(long, default_value_t = 1e-8)]
    tol: f64,
    /// Random restarts of the TIN solver.
    #[arg(long, default_value_t = 16)]
    restarts: usize,
    /// Seed of the restart generator.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Iteration cap per ascent run.
    #[arg(long, default_value_t = 5000)]
    max_iters: usize,
    /// Output format.
    #[arg(long, value_enum, default_value_t = Format::Text)]
    format: Format,
    /// Also run MISO and SIMO channels through the MIMO certifier.
    #[arg(long)]
    cross_check: bool,
}

impl Common {
    fn config(&self) -> RunConfig {
        RunConfig { tol: self.tol, restarts: self.restarts, seed: self.seed, max_iters: self.max_iters, cross_check: self.cross_check }
    }
}

#[derive(Subcommand)]
enum Command {
    /// Certify whether treating interference as noise achieves the sum capacity.
    Certify {
        /// Channel file (JSON with H1, F1, H2, F2, P1, P2).
        channel: PathBuf,
        #[command(flatten)]
        common: Common,
    },
    /// Report the TIN lower bound and a genie upper bound.
    Bounds {
        /// Channel file.
        channel: PathBuf,
        /// Genie file (JSON with A1, A2, Sigma1, Sigma2).
        #[arg(long)]
        genie: Option<PathBuf>,
        #[command(flatten)]
        common: Common,
    },
    /// Largest noisy-interference a2 of MISO Z channels over a grid, as CSV.
    Sweep {
        /// Power of the non-interfering user.
        #[arg(long, default_value_t = 1.0)]
        p1: f64,
        /// Powers of the interfering user, comma separated.
        #[arg(long, value_delimiter = ',', default_value = "1,10,100")]
        p2: Vec<f64>,
        /// Number of intervals of the theta2 grid on [0, pi/2].
        #[arg(long, default_value_t = 16)]
        theta2_grid: usize,
        /// Bisection tolerance on a2.
        #[arg(long, default_value_t = 1e-4)]
        a2_resolution: f64,
        /// Channel family to sweep.
        #[arg(long, value_parser = ["miso-z"], default_value = "miso-z")]
        mode: String,
        #[command(flatten)]
        common: Common,
    },
    /// Reproduce the reference examples and compare with their published values.
    Examples {
        #[command(flatten)]
        common: Common,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let code = match cli.command {
        Command::Certify { channel, common } => match cmd_certify(&channel, &common.config()) {
            Ok(report) => {
                print!("{}", render_report(&report, common.format));
                report.exit_code()
            }
            Err(e) => {
                eprintln!("error: {e}");
                EXIT_ERROR
            }
        },
        Command::Bounds { channel, genie, common } => match cmd_bounds(&channel, genie.as_deref(), &common.config()) {
            Ok(report) => {
                print!("{}", render_report(&report, common.format));
                EXIT_PASS
            }
            Err(e) => {
                eprintln!("error: {e}");
                EXIT_ERROR
            }
        },
        Command::Sweep { p1, p2, theta2_grid, a2_resolution, mode: _, common } => {
            let sw = SweepConfig { p1, p2, theta2_grid, a2_resolution };
            match cmd_sweep(&sw, &common.config()) {
                Ok(csv) => {
                    print!("{csv}");
                    EXIT_PASS
                }
                Err(e) => {
                    eprintln!("error: {e}");
                    EXIT_ERROR
                }
            }
        }
        Command::Examples { common } => {
            let (out, code) = cmd_examples(&common.config(), common.format);
            print!("{out}");
            code
        }
    };
    ExitCode::from(code as u8)
}
