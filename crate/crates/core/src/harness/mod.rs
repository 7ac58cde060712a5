//! Experiment runner: reproduces the amplitude-attenuation and
//! error-vs-epsilon experiments, the Monte-Carlo bound checks, and the
//! residual diagnostics; fits log-log slopes and emits deterministic CSV.
//!
//! Every experiment fans (epsilon, realization) cells out to a worker
//! pool; each cell is an independent single-threaded pipeline whose
//! randomness is derived from the master seed and the realization index
//! only, so output files are byte-identical across thread counts.

pub mod csv;
mod experiments;

pub use experiments::{
    execute, run_amplitude, run_ar_bound, run_error_sweep, run_gamma_bound, run_residual_check,
    run_scaling_check, run_simulate, write_plot_script, AmplitudeReport, AmplitudeRow, BoundReport,
    BoundRow, ErrorSweepReport, ErrorSweepRow, ExecSummary, Outcome, RealizationFit,
    ResidualReport, ResidualRow, ScalingReport, SimulateReport, SimulateRow,
};

use crate::lattice::MassModel;
use rayon::prelude::*;
use std::path::PathBuf;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("invalid experiment: {0}")]
    InvalidSpec(String),
    #[error("non-finite state (epsilon = {epsilon}, realization = {realization}, t = {t})")]
    NonFinite {
        epsilon: f64,
        realization: u32,
        t: f64,
    },
    #[error("slope fit needs at least two distinct positive abscissae")]
    DegenerateFit,
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ExperimentKind {
    Amplitude,
    ErrorSweep,
    GammaBound,
    ArBound,
    ScalingCheck,
    ResidualCheck,
    Simulate,
}

/// Fully resolved experiment description (one CLI invocation).
#[derive(Debug, Clone)]
pub struct ExperimentSpec {
    pub kind: ExperimentKind,
    pub epsilon_list: Vec<f64>,
    pub t0: f64,
    pub mass_model: MassModel,
    pub realizations: u32,
    pub seed: u64,
    pub dt_override: Option<f64>,
    pub m_override: Option<i64>,
    /// Number of uniformly spaced sample times (the discrete stand-in for
    /// suprema over the horizon).
    pub samples: usize,
    pub output_path: PathBuf,
    /// Worker count; 0 picks the rayon default.
    pub threads: usize,
    /// Emit wall-clock runtimes in the CSV.  Off by default: timing data
    /// is not reproducible and would break byte-identical output.
    pub timings: bool,
    /// AR-bound contraction parameters.
    pub theta_list: Vec<f64>,
    /// AR-bound series length.
    pub series_len: usize,
    /// Scaling-check window span (sites out to span / epsilon).
    pub span: f64,
    /// Residual-check: flag normalized columns whose max/min ratio across
    /// the sweep exceeds this.
    pub spread_limit: f64,
    /// Also write a companion gnuplot script next to the CSV.
    pub plot_script: bool,
}

impl ExperimentSpec {
    pub fn new(kind: ExperimentKind) -> Self {
        Self {
            kind,
            epsilon_list: vec![0.5, 0.25, 0.125],
            t0: 3.0,
            mass_model: MassModel::Transparent,
            realizations: if kind == ExperimentKind::ErrorSweep {
                3
            } else {
                1
            },
            seed: 42,
            dt_override: None,
            m_override: None,
            samples: 200,
            output_path: PathBuf::from("out.csv"),
            threads: 0,
            timings: false,
            theta_list: vec![0.5, 0.9, 0.99],
            series_len: 100_000,
            span: 16.0,
            spread_limit: 10.0,
            plot_script: false,
        }
    }

    pub fn validate(&self) -> Result<(), HarnessError> {
        if self.epsilon_list.is_empty() {
            return Err(HarnessError::InvalidSpec("empty epsilon list".into()));
        }
        for &e in &self.epsilon_list {
            if !(e > 0.0 && e < 1.0) {
                return Err(HarnessError::InvalidSpec(format!(
                    "epsilon {e} outside (0, 1)"
                )));
            }
        }
        if self.realizations < 1 {
            return Err(HarnessError::InvalidSpec(
                "realizations must be >= 1".into(),
            ));
        }
        if !(self.t0 > 0.0) {
            return Err(HarnessError::InvalidSpec(format!("t0 = {}", self.t0)));
        }
        if self.samples < 2 {
            return Err(HarnessError::InvalidSpec("need at least 2 samples".into()));
        }
        if let Some(dt) = self.dt_override {
            if !(dt > 0.0) {
                return Err(HarnessError::InvalidSpec(format!("dt = {dt}")));
            }
        }
        if let Some(m) = self.m_override {
            if m < 4 {
                return Err(HarnessError::InvalidSpec(format!("lattice size {m} < 4")));
            }
        }
        match self.kind {
            ExperimentKind::ErrorSweep | ExperimentKind::ResidualCheck => {
                if self.mass_model != MassModel::Transparent {
                    return Err(HarnessError::InvalidSpec(format!(
                        "{:?} requires the transparent mass model",
                        self.kind
                    )));
                }
            }
            ExperimentKind::ArBound => {
                for &th in &self.theta_list {
                    if !(th.abs() < 1.0) {
                        return Err(HarnessError::InvalidSpec(format!(
                            "theta {th} outside (-1, 1)"
                        )));
                    }
                }
                if self.series_len < 2 {
                    return Err(HarnessError::InvalidSpec("series length < 2".into()));
                }
            }
            _ => {}
        }
        Ok(())
    }
}

/// Worker count from `FPUT_KDV_THREADS` (absent or 0 means auto).
pub fn threads_from_env() -> Result<usize, HarnessError> {
    match std::env::var("FPUT_KDV_THREADS") {
        Err(_) => Ok(0),
        Ok(s) if s.trim().is_empty() => Ok(0),
        Ok(s) => s
            .trim()
            .parse::<usize>()
            .map_err(|_| HarnessError::InvalidSpec(format!("FPUT_KDV_THREADS = {s:?}"))),
    }
}

/// Map cells through a worker pool, preserving input order in the output.
pub fn run_cells<C: Sync, T: Send>(
    threads: usize,
    cells: &[C],
    f: impl Fn(&C) -> T + Sync + Send,
) -> Vec<T> {
    if threads == 1 || cells.len() <= 1 {
        return cells.iter().map(f).collect();
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .expect("worker pool construction cannot fail for sane thread counts");
    pool.install(|| cells.par_iter().map(f).collect())
}

/// Least-squares line through `(ln x, ln y)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SlopeFit {
    pub slope: f64,
    pub intercept: f64,
    /// Root-mean-square residual of the log-log fit.
    pub residual: f64,
}

pub fn fit_slope(points: &[(f64, f64)]) -> Result<SlopeFit, HarnessError> {
    if points.len() < 2 {
        return Err(HarnessError::DegenerateFit);
    }
    for &(x, y) in points {
        if !(x > 0.0 && y > 0.0) {
            return Err(HarnessError::InvalidSpec(format!(
                "log-log fit needs positive data, got ({x}, {y})"
            )));
        }
    }
    let n = points.len() as f64;
    let lx: Vec<f64> = points.iter().map(|p| p.0.ln()).collect();
    let ly: Vec<f64> = points.iter().map(|p| p.1.ln()).collect();
    let mx = lx.iter().sum::<f64>() / n;
    let my = ly.iter().sum::<f64>() / n;
    let sxx: f64 = lx.iter().map(|x| (x - mx) * (x - mx)).sum();
    let sxy: f64 = lx.iter().zip(&ly).map(|(x, y)| (x - mx) * (y - my)).sum();
    if sxx < 1e-24 {
        return Err(HarnessError::DegenerateFit);
    }
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let ss: f64 = lx
        .iter()
        .zip(&ly)
        .map(|(x, y)| {
            let d = y - (intercept + slope * x);
            d * d
        })
        .sum();
    Ok(SlopeFit {
        slope,
        intercept,
        residual: (ss / n).sqrt(),
    })
}

pub(crate) fn median(mut v: Vec<f64>) -> f64 {
    assert!(!v.is_empty());
    v.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fit_recovers_exact_power_laws() {
        let pts: Vec<(f64, f64)> = [0.5, 0.25, 0.125, 0.0625]
            .iter()
            .map(|&x| (x, x * x))
            .collect();
        let fit = fit_slope(&pts).unwrap();
        assert!((fit.slope - 2.0).abs() < 1e-12);
        assert!(fit.residual < 1e-12);

        let pts: Vec<(f64, f64)> = [0.5f64, 0.25, 0.125]
            .iter()
            .map(|&x| (x, 5.0 * x.powf(2.5)))
            .collect();
        let fit = fit_slope(&pts).unwrap();
        assert!((fit.slope - 2.5).abs() < 1e-12);
        assert!((fit.intercept - 5.0f64.ln()).abs() < 1e-12);
    }

    #[test]
    fn fit_rejects_degenerate_input() {
        assert!(matches!(
            fit_slope(&[(0.5, 1.0)]),
            Err(HarnessError::DegenerateFit)
        ));
        assert!(matches!(
            fit_slope(&[(0.5, 1.0), (0.5, 2.0)]),
            Err(HarnessError::DegenerateFit)
        ));
        assert!(fit_slope(&[(0.5, -1.0), (0.25, 1.0)]).is_err());
    }

    #[test]
    fn median_handles_even_and_odd() {
        assert_eq!(median(vec![3.0, 1.0, 2.0]), 2.0);
        assert_eq!(median(vec![4.0, 1.0, 2.0, 3.0]), 2.5);
    }

    #[test]
    fn run_cells_is_order_stable() {
        let cells: Vec<u64> = (0..100).collect();
        let one = run_cells(1, &cells, |&c| c * c);
        let many = run_cells(4, &cells, |&c| c * c);
        assert_eq!(one, many);
    }

    #[test]
    fn spec_validation_catches_bad_input() {
        let mut spec = ExperimentSpec::new(ExperimentKind::Amplitude);
        spec.epsilon_list = vec![1.5];
        assert!(spec.validate().is_err());
        let mut spec = ExperimentSpec::new(ExperimentKind::ErrorSweep);
        spec.mass_model = MassModel::Iid;
        assert!(spec.validate().is_err());
        let spec = ExperimentSpec::new(ExperimentKind::ErrorSweep);
        assert_eq!(spec.realizations, 3);
        assert!(spec.validate().is_ok());
    }
}
