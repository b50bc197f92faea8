//! Command-line front end. `run` parses arguments, executes one subcommand
//! and returns the process exit code:
//!
//! | code | meaning |
//! |------|---------|
//! | 0 | success |
//! | 1 | usage, parse or validation error |
//! | 2 | no convergence, no intersection, no horizon |
//! | 3 | numerical failure inside a solver |

mod commands;
mod experiments;
mod output;

use std::ffi::OsString;
use std::io::Write;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use thiserror::Error;

use crate::analysis::AnalysisError;
use crate::expr::Expression;
use crate::ivp::{GridConfig, IvpError, Method};
use crate::shooting::ShootingError;

pub use experiments::{
    converge, example_rhs, figure1, table1, ConvergeRow, Figure1, Table1, Table1Reference,
    Table1Row, EXAMPLE_ALPHA, EXAMPLE_B0, EXAMPLE_B1, EXAMPLE_HORIZON, FIGURE1_SLOPES, TABLE1_ROWS,
};
pub use output::{format_significant, trajectory_csv};

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 1;
pub const EXIT_INCONCLUSIVE: i32 = 2;
pub const EXIT_NUMERICAL: i32 = 3;

/// Version of the JSON report layout.
pub const REPORT_SCHEMA: u32 = 1;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("{0}")]
    Inconclusive(String),
    #[error("{0}")]
    Numerical(String),
    #[error("cannot write {path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) | CliError::Io { .. } => EXIT_USAGE,
            CliError::Inconclusive(_) => EXIT_INCONCLUSIVE,
            CliError::Numerical(_) => EXIT_NUMERICAL,
        }
    }

    pub(crate) fn from_ivp(e: IvpError, rhs: Option<&Expression>) -> CliError {
        match e {
            IvpError::NonFiniteRhs { t, y } => {
                let detail = match rhs.map(|x| x.evaluate(t, y)) {
                    Some(Err(ev)) => ev.to_string(),
                    _ => format!("at t = {t}, y = {y}"),
                };
                CliError::Numerical(format!("right-hand side is not finite: {detail}"))
            }
            IvpError::NewtonFailed { .. } | IvpError::SingularStartSystem(_) => {
                CliError::Numerical(e.to_string())
            }
            _ => CliError::Usage(e.to_string()),
        }
    }

    pub(crate) fn from_shooting(e: ShootingError, rhs: Option<&Expression>) -> CliError {
        match e {
            ShootingError::BadConfig(msg) => CliError::Usage(msg),
            ShootingError::NotConverged { .. } | ShootingError::DegenerateSecant { .. } => {
                CliError::Inconclusive(e.to_string())
            }
            ShootingError::Ivp { source, .. } => CliError::from_ivp(source, rhs),
        }
    }

    pub(crate) fn from_analysis(e: AnalysisError, rhs: Option<&Expression>) -> CliError {
        match e {
            AnalysisError::Ivp(source) => CliError::from_ivp(source, rhs),
            AnalysisError::NoIntersection { .. } | AnalysisError::NoSignChange { .. } => {
                CliError::Inconclusive(e.to_string())
            }
            AnalysisError::NonFiniteRhs { .. } => CliError::Numerical(e.to_string()),
            AnalysisError::Ml(ref m) if matches!(m, crate::mlf::MlError::Overflow { .. }) => {
                CliError::Numerical(e.to_string())
            }
            _ => CliError::Usage(e.to_string()),
        }
    }
}

#[derive(Debug, Parser)]
#[command(
    name = "fracbvp",
    version,
    about = "Shooting solver for Caputo fractional boundary value problems, 1 < alpha < 2"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Solve D^alpha y = f(t, y), y(0) = b0, y(T) = b1 by shooting.
    SolveBvp(SolveBvpArgs),
    /// Solve D^alpha y = f(t, y), y(0) = y0, y'(0) = yp0.
    SolveIvp(SolveIvpArgs),
    /// Rerun the six step-size/tolerance rows of the example boundary value problem.
    Table1(Table1Args),
    /// Solve the two example IVPs and locate where they cross.
    Figure1(Figure1Args),
    /// Terminal errors and observed orders over a list of step counts.
    Converge(ConvergeArgs),
    /// Evaluate the Mittag-Leffler function E_{alpha,beta}(z).
    Ml(MlArgs),
    /// Uniqueness horizon from a lower bound on df/dy.
    Horizon(HorizonArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum MethodArg {
    Abm,
    Bdf2,
}

impl From<MethodArg> for Method {
    fn from(m: MethodArg) -> Method {
        match m {
            MethodArg::Abm => Method::Abm,
            MethodArg::Bdf2 => Method::Bdf2,
        }
    }
}

#[derive(Debug, Clone, Args)]
#[group(required = true, multiple = false)]
pub struct Resolution {
    /// Number of steps.
    #[arg(long)]
    pub n: Option<usize>,
    /// Step size; must divide the horizon.
    #[arg(long, allow_negative_numbers = true)]
    pub h: Option<f64>,
}

impl Resolution {
    fn grid(&self, horizon: f64, method: Method) -> Result<GridConfig, CliError> {
        match (self.n, self.h) {
            (Some(n), _) => Ok(GridConfig::new(n, method)),
            (None, Some(h)) => GridConfig::from_step(horizon, h, method)
                .map_err(|e| CliError::Usage(e.to_string())),
            (None, None) => Err(CliError::Usage("one of --n or --h is required".into())),
        }
    }
}

#[derive(Debug, Clone, Args)]
pub struct SolveBvpArgs {
    #[arg(long, allow_negative_numbers = true)]
    pub alpha: f64,
    #[arg(long = "t-end", allow_negative_numbers = true)]
    pub t_end: f64,
    #[arg(long, allow_negative_numbers = true)]
    pub b0: f64,
    #[arg(long, allow_negative_numbers = true)]
    pub b1: f64,
    /// Right-hand side f(t, y), e.g. "sin(1.3*t*y)/(t+5)^0.65".
    #[arg(long, allow_hyphen_values = true)]
    pub rhs: String,
    #[command(flatten)]
    pub resolution: Resolution,
    #[arg(long, value_enum, default_value_t = MethodArg::Bdf2)]
    pub method: MethodArg,
    /// Accept once |y(T) - b1| <= tol.
    #[arg(long, default_value_t = 1e-8)]
    pub tol: f64,
    /// Cap on the number of IVP solves.
    #[arg(long = "max-iter", default_value_t = 25)]
    pub max_iter: usize,
    /// Trajectory CSV; written to stdout when absent.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// JSON run report.
    #[arg(long)]
    pub report: Option<PathBuf>,
    /// Include wall time in the report.
    #[arg(long)]
    pub timings: bool,
}

#[derive(Debug, Clone, Args)]
pub struct SolveIvpArgs {
    #[arg(long, allow_negative_numbers = true)]
    pub alpha: f64,
    #[arg(long = "t-end", allow_negative_numbers = true)]
    pub t_end: f64,
    #[arg(long, allow_negative_numbers = true)]
    pub y0: f64,
    #[arg(long, allow_negative_numbers = true)]
    pub yp0: f64,
    #[arg(long, allow_hyphen_values = true)]
    pub rhs: String,
    #[command(flatten)]
    pub resolution: Resolution,
    #[arg(long, value_enum, default_value_t = MethodArg::Bdf2)]
    pub method: MethodArg,
    /// Trajectory CSV; written to stdout when absent.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Args)]
pub struct Table1Args {
    /// Divide every step size (and the reference step) by this factor.
    #[arg(long = "step-scale", default_value_t = 1, value_parser = clap::value_parser!(u64).range(1..))]
    pub step_scale: u64,
    /// Reference grid is this many times finer than the finest row.
    #[arg(long = "reference-factor", default_value_t = 16, value_parser = clap::value_parser!(u64).range(2..))]
    pub reference_factor: u64,
    /// Machine-readable results.
    #[arg(long)]
    pub json: Option<PathBuf>,
    #[arg(long)]
    pub timings: bool,
}

#[derive(Debug, Clone, Args)]
pub struct Figure1Args {
    #[arg(long, default_value_t = 1e-4)]
    pub h: f64,
    #[arg(long = "t-end", default_value_t = 5.5)]
    pub t_end: f64,
    #[arg(long, value_enum, default_value_t = MethodArg::Bdf2)]
    pub method: MethodArg,
    /// Directory for the two trajectory CSVs.
    #[arg(long = "out-dir")]
    pub out_dir: Option<PathBuf>,
    #[arg(long)]
    pub report: Option<PathBuf>,
    #[arg(long)]
    pub timings: bool,
}

#[derive(Debug, Clone, Args)]
pub struct ConvergeArgs {
    #[arg(long, allow_negative_numbers = true)]
    pub alpha: f64,
    #[arg(long = "t-end", default_value_t = 1.0)]
    pub t_end: f64,
    #[arg(long, allow_negative_numbers = true)]
    pub y0: f64,
    #[arg(long, allow_negative_numbers = true)]
    pub yp0: f64,
    #[arg(long, allow_hyphen_values = true)]
    pub rhs: String,
    #[arg(long, value_enum, default_value_t = MethodArg::Bdf2)]
    pub method: MethodArg,
    /// Step counts, comma separated.
    #[arg(
        long = "n-list",
        value_delimiter = ',',
        default_value = "100,200,400,800"
    )]
    pub n_list: Vec<usize>,
    /// Exact y(T); otherwise a refined solve serves as reference.
    #[arg(long, allow_negative_numbers = true)]
    pub exact: Option<f64>,
    /// Reference grid is this many times finer than the largest N.
    #[arg(long = "refine-factor", default_value_t = 16)]
    pub refine_factor: usize,
    #[arg(long)]
    pub json: Option<PathBuf>,
}

#[derive(Debug, Clone, Args)]
pub struct MlArgs {
    #[arg(long, allow_negative_numbers = true)]
    pub alpha: f64,
    #[arg(long, allow_negative_numbers = true)]
    pub beta: f64,
    #[arg(long, allow_negative_numbers = true)]
    pub z: f64,
}

#[derive(Debug, Clone, Args)]
pub struct HorizonArgs {
    #[arg(long, allow_negative_numbers = true)]
    pub alpha: f64,
    /// Lower bound on the difference quotients of f in y.
    #[arg(long = "a-lower", allow_negative_numbers = true)]
    pub a_lower: f64,
}

/// Parses `args` (program name first), runs the subcommand and returns the
/// exit code. Results go to `out`, diagnostics to `err`.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let text = e.render().to_string();
            if e.use_stderr() {
                let _ = write!(err, "{text}");
                return EXIT_USAGE;
            }
            let _ = write!(out, "{text}");
            return EXIT_OK;
        }
    };
    match commands::execute(cli.command, out, err) {
        Ok(()) => EXIT_OK,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            e.exit_code()
        }
    }
}
