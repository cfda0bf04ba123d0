use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

mod commands;
mod sweep;

#[derive(Parser, Debug)]
#[command(
    name = "scm",
    version,
    about = "Scalar capacity traffic model: simulate, solve and analyse"
)]
struct Cli {
    /// More log output (-v info, -vv debug).
    #[arg(short, long, action = clap::ArgAction::Count, global = true)]
    verbose: u8,

    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug, Clone)]
pub struct RunFlags {
    /// Scenario configuration file (TOML).
    #[arg(long)]
    pub config: std::path::PathBuf,
    /// End time (s); overrides the file.
    #[arg(long)]
    pub horizon: Option<f64>,
    /// Step size (s); overrides the file.
    #[arg(long)]
    pub dt: Option<f64>,
    /// Keep every k-th step in the trace; overrides the file.
    #[arg(long)]
    pub sample_every: Option<usize>,
    /// Accept unknown config keys and initial states with congestion above 1.
    #[arg(long)]
    pub permissive: bool,
}

#[derive(Args, Debug, Clone)]
pub struct FigureFlags {
    /// Also write SVG figures next to --out.
    #[arg(long)]
    pub svg: bool,
    /// Time-space diagram shows every k-th vehicle.
    #[arg(long, default_value_t = 1)]
    pub every_kth: usize,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Integrate a scenario numerically and write its trace.
    Simulate {
        #[command(flatten)]
        run: RunFlags,
        #[command(flatten)]
        figures: FigureFlags,
        /// Trace CSV; standard output when omitted.
        #[arg(long)]
        out: Option<std::path::PathBuf>,
        /// Passing events CSV.
        #[arg(long)]
        events: Option<std::path::PathBuf>,
    },
    /// Solve an open-link scenario exactly and write the sampled trajectory.
    Solve {
        #[command(flatten)]
        run: RunFlags,
        #[command(flatten)]
        figures: FigureFlags,
        #[arg(long)]
        out: Option<std::path::PathBuf>,
        #[arg(long)]
        events: Option<std::path::PathBuf>,
    },
    /// Ring-road flow-density curve.
    Diagram {
        #[arg(long)]
        kappa: f64,
        #[arg(long)]
        omega: f64,
        #[arg(long)]
        vmax: f64,
        /// Ring length (m).
        #[arg(long = "L", value_name = "L")]
        length: f64,
        /// Density grid START:STOP:STEP (veh/m).
        #[arg(long)]
        rho: String,
        #[arg(long)]
        out: Option<std::path::PathBuf>,
        #[arg(long)]
        svg: bool,
    },
    /// Predicted and measured string-stability decay rates of a platoon.
    Stability {
        /// Maximum speeds, leader first, comma separated.
        #[arg(long, value_delimiter = ',', required = true)]
        speeds: Vec<f64>,
        #[arg(long)]
        kappa: f64,
        #[arg(long)]
        omega: f64,
        /// Perturbation as a fraction of each equilibrium gap.
        #[arg(long, default_value_t = 0.01)]
        amplitude: f64,
        #[arg(long, default_value_t = 60.0)]
        horizon: f64,
        #[arg(long, default_value_t = 0.01)]
        dt: f64,
        /// Report CSV; standard output when omitted.
        #[arg(long)]
        out: Option<std::path::PathBuf>,
    },
    /// Check the model's guarantees on a run; exit status 3 on a violation.
    Verify {
        #[command(flatten)]
        run: RunFlags,
        #[arg(long, value_enum, default_value_t = Solver::Numeric)]
        solver: Solver,
    },
    /// Two-density ring experiment: jam dissolution and convergence to equilibrium.
    Jamwave(commands::JamwaveArgs),
    /// Run a scenario over a parameter grid.
    Sweep(sweep::SweepArgs),
}

#[derive(ValueEnum, Debug, Clone, Copy, PartialEq, Eq)]
pub enum Solver {
    Numeric,
    Analytic,
    /// Both solvers; their verdicts must also agree.
    Both,
}

/// Failure with the exit status it maps to.
pub struct Failure {
    pub code: u8,
    pub message: String,
}

impl From<scm_core::Error> for Failure {
    fn from(e: scm_core::Error) -> Self {
        let code = match e.kind() {
            scm_core::ErrorKind::Validation => 1,
            scm_core::ErrorKind::Numerical => 2,
        };
        Failure {
            code,
            message: e.to_string(),
        }
    }
}

impl Failure {
    pub fn validation(message: impl Into<String>) -> Self {
        Failure {
            code: 1,
            message: message.into(),
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(1)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    let level = match cli.verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).init();

    let result = match cli.command {
        Command::Simulate {
            run,
            figures,
            out,
            events,
        } => commands::simulate(&run, &figures, out.as_deref(), events.as_deref()),
        Command::Solve {
            run,
            figures,
            out,
            events,
        } => commands::solve(&run, &figures, out.as_deref(), events.as_deref()),
        Command::Diagram {
            kappa,
            omega,
            vmax,
            length,
            rho,
            out,
            svg,
        } => commands::diagram(kappa, omega, vmax, length, &rho, out.as_deref(), svg),
        Command::Stability {
            speeds,
            kappa,
            omega,
            amplitude,
            horizon,
            dt,
            out,
        } => commands::stability(
            &speeds,
            kappa,
            omega,
            amplitude,
            horizon,
            dt,
            out.as_deref(),
        ),
        Command::Verify { run, solver } => commands::verify(&run, solver),
        Command::Jamwave(args) => commands::jamwave(&args),
        Command::Sweep(args) => sweep::run(&args),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}
