//! `fput-kdv`: command-line runner for the lattice-wave experiments.
//!
//! Exit codes: 0 on success, 2 on flag/spec errors, 3 on numerical abort
//! (partial CSV output is flushed before exiting).

use clap::{Args, Parser, Subcommand, ValueEnum};
use fput_kdv_core::harness::{
    execute, threads_from_env, ExperimentKind, ExperimentSpec, HarnessError,
};
use fput_kdv_core::lattice::MassModel;
use std::path::PathBuf;

#[derive(Parser)]
#[command(
    name = "fput-kdv",
    version,
    about = "Lattice-wave simulation and validation laboratory"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum MassArg {
    Constant,
    Periodic,
    Transparent,
    Iid,
    Translucent,
}

impl From<MassArg> for MassModel {
    fn from(m: MassArg) -> Self {
        match m {
            MassArg::Constant => MassModel::Constant,
            MassArg::Periodic => MassModel::Periodic2,
            MassArg::Transparent => MassModel::Transparent,
            MassArg::Iid => MassModel::Iid,
            MassArg::Translucent => MassModel::Translucent,
        }
    }
}

#[derive(Args)]
struct CommonArgs {
    /// Comma-separated epsilon values in (0, 1)
    #[arg(long, value_delimiter = ',', default_value = "0.5,0.25,0.125")]
    epsilon: Vec<f64>,
    /// Macroscopic horizon T0 (runs last until T0 / eps^3)
    #[arg(long, default_value_t = 3.0)]
    t0: f64,
    /// Mass model
    #[arg(long, value_enum, default_value_t = MassArg::Transparent)]
    mass: MassArg,
    /// Master seed; realization r derives its own substream
    #[arg(long, default_value_t = 42)]
    seed: u64,
    /// Ensemble size [default: 1; error-sweep defaults to 3]
    #[arg(long)]
    realizations: Option<u32>,
    /// Output CSV path
    #[arg(long)]
    out: PathBuf,
    /// Integrator step override (default: min(0.1, sqrt(min mass)/2))
    #[arg(long)]
    dt: Option<f64>,
    /// Lattice half-width override (default: 8 (T0/eps^3 + 1/eps))
    #[arg(long = "lattice-size")]
    lattice_size: Option<i64>,
    /// Number of uniformly spaced sample times
    #[arg(long, default_value_t = 200)]
    samples: usize,
    /// Record wall-clock runtimes in the CSV (breaks byte-reproducibility)
    #[arg(long)]
    timings: bool,
    /// Write a companion gnuplot script next to the CSV
    #[arg(long = "plot-script")]
    plot_script: bool,
}

#[derive(Subcommand)]
enum Command {
    /// Scaled sup-amplitude vs scaled time for one mass model
    Amplitude(CommonArgs),
    /// Error against the travelling solitary wave across epsilon, with a
    /// log-log slope fit per realization (transparent masses)
    #[command(name = "error-sweep", alias = "error_sweep")]
    ErrorSweep {
        #[command(flatten)]
        common: CommonArgs,
    },
    /// Monte-Carlo growth statistics of the correction sequences
    #[command(name = "gamma-bound", alias = "gamma_bound")]
    GammaBound(CommonArgs),
    /// Monte-Carlo growth statistics of plain AR(1) sums
    #[command(name = "ar-bound", alias = "ar_bound")]
    ArBound {
        #[command(flatten)]
        common: CommonArgs,
        /// Comma-separated contraction parameters in (-1, 1)
        #[arg(long, value_delimiter = ',', default_value = "0.5,0.9,0.99")]
        theta: Vec<f64>,
        /// Series length per realization
        #[arg(long, default_value_t = 100_000)]
        len: usize,
    },
    /// Long-wave l2 scaling table for noise-times-profile products
    #[command(name = "scaling-check", alias = "scaling_check")]
    ScalingCheck {
        #[command(flatten)]
        common: CommonArgs,
        /// Profile window half-span (sites out to span / eps)
        #[arg(long, default_value_t = 16.0)]
        span: f64,
    },
    /// Normalized size/residual diagnostics of the extended ansatz
    #[command(name = "residual-check", alias = "residual_check")]
    ResidualCheck {
        #[command(flatten)]
        common: CommonArgs,
        /// Flag normalized columns with max/min spread above this
        #[arg(long = "spread-limit", default_value_t = 10.0)]
        spread_limit: f64,
    },
    /// One lattice run with norm and energy diagnostics
    Simulate(CommonArgs),
}

fn build_spec(kind: ExperimentKind, common: &CommonArgs) -> Result<ExperimentSpec, HarnessError> {
    let mut spec = ExperimentSpec::new(kind);
    spec.epsilon_list = common.epsilon.clone();
    spec.t0 = common.t0;
    spec.mass_model = common.mass.into();
    spec.seed = common.seed;
    if let Some(r) = common.realizations {
        spec.realizations = r;
    }
    spec.output_path = common.out.clone();
    spec.dt_override = common.dt;
    spec.m_override = common.lattice_size;
    spec.samples = common.samples;
    spec.timings = common.timings;
    spec.plot_script = common.plot_script;
    spec.threads = threads_from_env()?;
    Ok(spec)
}

fn run(cli: &Cli, invocation: &str) -> Result<Vec<String>, HarnessError> {
    let spec = match &cli.command {
        Command::Amplitude(c) => build_spec(ExperimentKind::Amplitude, c)?,
        Command::ErrorSweep { common } => build_spec(ExperimentKind::ErrorSweep, common)?,
        Command::GammaBound(c) => build_spec(ExperimentKind::GammaBound, c)?,
        Command::ArBound { common, theta, len } => {
            let mut s = build_spec(ExperimentKind::ArBound, common)?;
            s.theta_list = theta.clone();
            s.series_len = *len;
            s
        }
        Command::ScalingCheck { common, span } => {
            let mut s = build_spec(ExperimentKind::ScalingCheck, common)?;
            s.span = *span;
            s
        }
        Command::ResidualCheck {
            common,
            spread_limit,
        } => {
            let mut s = build_spec(ExperimentKind::ResidualCheck, common)?;
            s.spread_limit = *spread_limit;
            s
        }
        Command::Simulate(c) => build_spec(ExperimentKind::Simulate, c)?,
    };
    let summary = execute(&spec, invocation)?;
    let mut lines = summary.lines;
    lines.push(format!("wrote {}", spec.output_path.display()));
    Ok(lines)
}

fn main() {
    let cli = Cli::parse();
    let invocation = std::env::args().collect::<Vec<String>>().join(" ");
    match run(&cli, &invocation) {
        Ok(lines) => {
            for line in lines {
                println!("{line}");
            }
        }
        Err(e) => {
            eprintln!("error: {e}");
            let code = match e {
                HarnessError::NonFinite { .. } => 3,
                HarnessError::Io(_) => 1,
                _ => 2,
            };
            std::process::exit(code);
        }
    }
}
