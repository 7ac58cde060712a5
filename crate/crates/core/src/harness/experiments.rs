//! The experiment implementations behind the CLI subcommands.
//!
//! Randomness convention: the master seed spawns one substream per
//! realization; inside a member, role 0 is the transparency noise, role 1
//! the i.i.d. mass draws, role 2 the AR drivers.  A realization therefore
//! sees the same disorder at every epsilon and lattice size, matching the
//! fix-a-realization-then-sweep protocol of the error experiment.

use super::csv::{self, Field};
use super::{fit_slope, median, run_cells, ExperimentKind, ExperimentSpec, HarnessError, SlopeFit};
use crate::approximator::{
    alpha_beta, ar1_recursive, gamma_build, gamma_normalized_sup, lwa_scaling_check, ratio_spread,
    Approximator, ApproximatorConfig, ExpansionOrder, ScalingRow, DEFAULT_TIME_DIFF,
};
use crate::integrator::{default_dt, integrate, IntegrationPlan, IntegratorError};
use crate::kdv::WaveFamily;
use crate::lattice::{
    default_half_width, fput_hamiltonian, make_mass, seq_norms, LatticeState, MassModel,
    MassProfile, MassSpec, NoiseSequence,
};
use crate::rng::CounterRng;
use std::path::Path;
use std::time::Instant;

const ROLE_NOISE: u64 = 0;
const ROLE_IID_MASS: u64 = 1;
const ROLE_AR_DRIVER: u64 = 2;

fn member_rng(seed: u64, realization: u32) -> CounterRng {
    CounterRng::new(seed).substream(realization as u64)
}

fn noise_for(spec: &ExperimentSpec, realization: u32, half_width: i64) -> NoiseSequence {
    let seed = member_rng(spec.seed, realization)
        .substream(ROLE_NOISE)
        .seed();
    NoiseSequence::sample_default(seed, -(half_width + 2)..=(half_width + 2))
}

fn mass_for(
    spec: &ExperimentSpec,
    realization: u32,
    noise: &NoiseSequence,
    half_width: i64,
) -> Result<MassProfile, HarnessError> {
    let recipe = match spec.mass_model {
        MassModel::Constant => MassSpec::Constant,
        MassModel::Periodic2 => MassSpec::Periodic2,
        MassModel::Transparent => MassSpec::Transparent(noise),
        MassModel::Translucent => MassSpec::Translucent(noise),
        MassModel::Iid => MassSpec::Iid {
            seed: member_rng(spec.seed, realization)
                .substream(ROLE_IID_MASS)
                .seed(),
        },
    };
    make_mass(recipe, half_width).map_err(|e| HarnessError::InvalidSpec(e.to_string()))
}

/// Long-wave solitary initial data: the leading-order ansatz at `t = 0`.
fn soliton_initial_state(sigma2: f64, epsilon: f64, t0: f64, half_width: i64) -> LatticeState {
    let family = WaveFamily::soliton(sigma2);
    let cfg = ApproximatorConfig::new(epsilon, t0, ExpansionOrder::Leading);
    let approx = Approximator::leading(cfg, &family, half_width);
    let (q, p) = approx
        .evaluate(0.0)
        .expect("closed-form evaluation is total");
    let mut state = LatticeState::zeros(half_width);
    state.q = q;
    state.p = p;
    state
}

fn lift_integrator(e: IntegratorError, epsilon: f64, realization: u32) -> HarnessError {
    match e {
        IntegratorError::NonFinite { t } => HarnessError::NonFinite {
            epsilon,
            realization,
            t,
        },
        other => HarnessError::InvalidSpec(other.to_string()),
    }
}

/// Report plus the first per-cell failure, if any; rows of successful
/// cells are kept so partial output can be flushed.
#[derive(Debug)]
pub struct Outcome<R> {
    pub report: R,
    pub error: Option<HarnessError>,
}

impl<R> Outcome<R> {
    fn clean(report: R) -> Self {
        Self {
            report,
            error: None,
        }
    }
}

// ---------------------------------------------------------------------------
// Amplitude attenuation
// ---------------------------------------------------------------------------

#[derive(Debug, Clone)]
pub struct AmplitudeRow {
    pub t_scaled: f64,
    /// `(|q|_linf + |p|_linf) / eps^2` (the pair-norm convention).
    pub amplitude_sum: f64,
    /// `max(|q|_linf, |p|_linf) / eps^2`.
    pub amplitude_max: f64,
    pub epsilon: f64,
    pub mass_model: MassModel,
    pub seed: u64,
    pub realization: u32,
}

#[derive(Debug, Clone)]
pub struct AmplitudeReport {
    pub rows: Vec<AmplitudeRow>,
}

impl AmplitudeReport {
    pub fn write_csv(&self, path: &Path, invocation: &str) -> std::io::Result<()> {
        // the documented five columns first, extra diagnostics appended
        let columns = [
            "T",
            "scaled_amplitude",
            "epsilon",
            "mass_model",
            "seed",
            "scaled_amplitude_max",
            "realization",
        ];
        let rows: Vec<Vec<Field>> = self
            .rows
            .iter()
            .map(|r| {
                vec![
                    Field::F(r.t_scaled),
                    Field::F(r.amplitude_sum),
                    Field::F(r.epsilon),
                    Field::S(r.mass_model.name().into()),
                    Field::U(r.seed),
                    Field::F(r.amplitude_max),
                    Field::U(r.realization as u64),
                ]
            })
            .collect();
        csv::write(path, invocation, &columns, &rows)
    }

    /// The scaled-amplitude series of one `(epsilon, realization)` run.
    pub fn series(&self, epsilon: f64, realization: u32) -> Vec<(f64, f64)> {
        self.rows
            .iter()
            .filter(|r| r.epsilon == epsilon && r.realization == realization)
            .map(|r| (r.t_scaled, r.amplitude_sum))
            .collect()
    }
}

fn amplitude_cell(
    spec: &ExperimentSpec,
    epsilon: f64,
    realization: u32,
) -> Result<Vec<AmplitudeRow>, HarnessError> {
    let m = spec
        .m_override
        .unwrap_or_else(|| default_half_width(epsilon, spec.t0));
    let noise = noise_for(spec, realization, m);
    let mass = mass_for(spec, realization, &noise, m)?;
    let state = soliton_initial_state(0.0, epsilon, spec.t0, m);
    let dt = spec.dt_override.unwrap_or_else(|| default_dt(&mass));
    let t_end = spec.t0 / epsilon.powi(3);
    let plan = IntegrationPlan::uniform(dt, t_end, spec.samples)
        .map_err(|e| HarnessError::InvalidSpec(e.to_string()))?;
    let eps3 = epsilon.powi(3);
    let inv_eps2 = 1.0 / (epsilon * epsilon);
    let mut rows = Vec::with_capacity(spec.samples);
    integrate(state, &mass, &plan, |t, s| {
        let q = seq_norms(&s.q).linf;
        let p = seq_norms(&s.p).linf;
        rows.push(AmplitudeRow {
            t_scaled: t * eps3,
            amplitude_sum: (q + p) * inv_eps2,
            amplitude_max: q.max(p) * inv_eps2,
            epsilon,
            mass_model: spec.mass_model,
            seed: spec.seed,
            realization,
        });
    })
    .map_err(|e| lift_integrator(e, epsilon, realization))?;
    Ok(rows)
}

/// Integrate to `t = T0 / eps^3` for each `(epsilon, realization)` cell and
/// record the scaled sup amplitude at uniformly spaced scaled times.
pub fn run_amplitude(spec: &ExperimentSpec) -> Result<Outcome<AmplitudeReport>, HarnessError> {
    spec.validate()?;
    let mut cells = Vec::new();
    for ei in 0..spec.epsilon_list.len() {
        for r in 0..spec.realizations {
            cells.push((ei, r));
        }
    }
    let results = run_cells(spec.threads, &cells, |&(ei, r)| {
        amplitude_cell(spec, spec.epsilon_list[ei], r)
    });
    let mut rows = Vec::new();
    let mut error = None;
    for res in results {
        match res {
            Ok(mut cell_rows) => rows.append(&mut cell_rows),
            Err(e) if error.is_none() => error = Some(e),
            Err(_) => {}
        }
    }
    Ok(Outcome {
        report: AmplitudeReport { rows },
        error,
    })
}

// ---------------------------------------------------------------------------
// Error sweep
// ---------------------------------------------------------------------------

#[derive(Debug, Clone)]
pub struct ErrorSweepRow {
    pub epsilon: f64,
    pub e_eps: f64,
    pub runtime_s: f64,
    pub seed: u64,
    pub realization: u32,
}

#[derive(Debug, Clone, Copy)]
pub struct RealizationFit {
    pub realization: u32,
    pub fit: SlopeFit,
}

#[derive(Debug, Clone)]
pub struct ErrorSweepReport {
    pub rows: Vec<ErrorSweepRow>,
    pub fits: Vec<RealizationFit>,
}

impl ErrorSweepReport {
    pub fn write_csv(&self, path: &Path, invocation: &str) -> std::io::Result<()> {
        let columns = ["epsilon", "E_eps", "runtime_s", "seed", "realization"];
        let rows: Vec<Vec<Field>> = self
            .rows
            .iter()
            .map(|r| {
                vec![
                    Field::F(r.epsilon),
                    Field::F(r.e_eps),
                    Field::F(r.runtime_s),
                    Field::U(r.seed),
                    Field::U(r.realization as u64),
                ]
            })
            .collect();
        csv::write(path, invocation, &columns, &rows)
    }
}

fn sweep_cell(
    spec: &ExperimentSpec,
    epsilon: f64,
    realization: u32,
) -> Result<ErrorSweepRow, HarnessError> {
    let started = Instant::now();
    let m = spec
        .m_override
        .unwrap_or_else(|| default_half_width(epsilon, spec.t0));
    let noise = noise_for(spec, realization, m);
    let mass = mass_for(spec, realization, &noise, m)?;
    let family = WaveFamily::soliton(noise.sigma2);
    let cfg = ApproximatorConfig::new(epsilon, spec.t0, ExpansionOrder::Leading);
    let reference = Approximator::leading(cfg, &family, m);

    let state = soliton_initial_state(noise.sigma2, epsilon, spec.t0, m);
    let dt = spec.dt_override.unwrap_or_else(|| default_dt(&mass));
    let t_end = spec.t0 / epsilon.powi(3);
    let plan = IntegrationPlan::uniform(dt, t_end, spec.samples)
        .map_err(|e| HarnessError::InvalidSpec(e.to_string()))?;

    let mut sup_q: f64 = 0.0;
    let mut sup_p: f64 = 0.0;
    integrate(state, &mass, &plan, |t, s| {
        let (qr, pr) = reference
            .evaluate(t)
            .expect("closed-form evaluation is total");
        let mut dq = 0.0;
        let mut dp = 0.0;
        for j in 0..qr.len() {
            let a = s.q[j] - qr[j];
            dq += a * a;
            let b = s.p[j] - pr[j];
            dp += b * b;
        }
        sup_q = sup_q.max(dq.sqrt());
        sup_p = sup_p.max(dp.sqrt());
    })
    .map_err(|e| lift_integrator(e, epsilon, realization))?;

    Ok(ErrorSweepRow {
        epsilon,
        e_eps: sup_q + sup_p,
        runtime_s: if spec.timings {
            started.elapsed().as_secs_f64()
        } else {
            0.0
        },
        seed: spec.seed,
        realization,
    })
}

/// The convergence experiment: transparent masses, solitary-wave data, sup
/// over sampled times of the l2 distances to the travelling reference
/// (`q`-part plus `p`-part), then a log-log fit per realization.
pub fn run_error_sweep(spec: &ExperimentSpec) -> Result<Outcome<ErrorSweepReport>, HarnessError> {
    spec.validate()?;
    let mut cells = Vec::new();
    for r in 0..spec.realizations {
        for ei in 0..spec.epsilon_list.len() {
            cells.push((r, ei));
        }
    }
    let results = run_cells(spec.threads, &cells, |&(r, ei)| {
        sweep_cell(spec, spec.epsilon_list[ei], r)
    });
    let mut rows = Vec::new();
    let mut error = None;
    for res in results {
        match res {
            Ok(row) => rows.push(row),
            Err(e) if error.is_none() => error = Some(e),
            Err(_) => {}
        }
    }
    let mut fits = Vec::new();
    if error.is_none() && spec.epsilon_list.len() >= 2 {
        for r in 0..spec.realizations {
            let points: Vec<(f64, f64)> = rows
                .iter()
                .filter(|row| row.realization == r)
                .map(|row| (row.epsilon, row.e_eps))
                .collect();
            fits.push(RealizationFit {
                realization: r,
                fit: fit_slope(&points)?,
            });
        }
    }
    Ok(Outcome {
        report: ErrorSweepReport { rows, fits },
        error,
    })
}

// ---------------------------------------------------------------------------
// Monte-Carlo bound experiments
// ---------------------------------------------------------------------------

#[derive(Debug, Clone)]
pub struct BoundRow {
    pub param: f64,
    pub realization: u32,
    pub max_normalized: f64,
    /// Companion statistic for the first correction sequence (gamma runs).
    pub gamma1_normalized: Option<f64>,
    pub seed: u64,
}

#[derive(Debug, Clone)]
pub struct BoundReport {
    pub rows: Vec<BoundRow>,
    /// `(param, median over realizations of max_normalized)`
    pub medians: Vec<(f64, f64)>,
    /// Log-log fit of the medians against `1/eps` (gamma) or
    /// `1/(1 - theta^2)` (AR); `None` with fewer than two parameters.
    pub fit: Option<SlopeFit>,
}

impl BoundReport {
    pub fn write_csv(&self, path: &Path, invocation: &str) -> std::io::Result<()> {
        let with_gamma1 = self.rows.iter().any(|r| r.gamma1_normalized.is_some());
        let columns: Vec<&str> = if with_gamma1 {
            vec![
                "param",
                "realization",
                "max_normalized",
                "max_normalized_gamma1",
                "seed",
            ]
        } else {
            vec!["param", "realization", "max_normalized", "seed"]
        };
        let rows: Vec<Vec<Field>> = self
            .rows
            .iter()
            .map(|r| {
                let mut row = vec![
                    Field::F(r.param),
                    Field::U(r.realization as u64),
                    Field::F(r.max_normalized),
                ];
                if with_gamma1 {
                    row.push(Field::F(r.gamma1_normalized.unwrap_or(0.0)));
                }
                row.push(Field::U(r.seed));
                row
            })
            .collect();
        csv::write(path, invocation, &columns, &rows)
    }

    pub fn median_for(&self, param: f64) -> Option<f64> {
        self.medians
            .iter()
            .find(|(p, _)| *p == param)
            .map(|(_, m)| *m)
    }
}

fn finish_bound_report(
    params: &[f64],
    rows: Vec<BoundRow>,
    abscissa: impl Fn(f64) -> f64,
) -> Result<BoundReport, HarnessError> {
    let mut medians = Vec::new();
    for &p in params {
        let vals: Vec<f64> = rows
            .iter()
            .filter(|r| r.param == p)
            .map(|r| r.max_normalized)
            .collect();
        medians.push((p, median(vals)));
    }
    let fit = if params.len() >= 2 {
        let pts: Vec<(f64, f64)> = medians.iter().map(|&(p, m)| (abscissa(p), m)).collect();
        Some(fit_slope(&pts)?)
    } else {
        None
    };
    Ok(BoundReport { rows, medians, fit })
}

/// Normalized suprema of the correction sequences across the epsilon list;
/// the regression of `ln median` on `ln(1/eps)` targets slope 1/2.
/// Default window `M = ceil(10 / eps^3)`.
pub fn run_gamma_bound(spec: &ExperimentSpec) -> Result<BoundReport, HarnessError> {
    spec.validate()?;
    let mut cells = Vec::new();
    for ei in 0..spec.epsilon_list.len() {
        for r in 0..spec.realizations {
            cells.push((ei, r));
        }
    }
    let sigma2 = 1.0 / 192.0;
    let rows = run_cells(spec.threads, &cells, |&(ei, r)| {
        let epsilon = spec.epsilon_list[ei];
        let m = spec
            .m_override
            .unwrap_or_else(|| (10.0 / epsilon.powi(3)).ceil() as i64);
        let rng = member_rng(spec.seed, r).substream(ROLE_NOISE);
        let zeta = |j: i64| rng.symmetric_f64(CounterRng::site_counter(j), 0.125);
        let (s1, s2) = gamma_normalized_sup(zeta, sigma2, epsilon, m);
        BoundRow {
            param: epsilon,
            realization: r,
            max_normalized: s2,
            gamma1_normalized: Some(s1),
            seed: spec.seed,
        }
    });
    finish_bound_report(&spec.epsilon_list, rows, |eps| 1.0 / eps)
}

/// Normalized suprema `sup_n |chi(n)| / sqrt(ln(e + n))` of plain AR(1)
/// sums across the theta list; the regression abscissa is
/// `1/(1 - theta^2)`, target slope 1/2.
pub fn run_ar_bound(spec: &ExperimentSpec) -> Result<BoundReport, HarnessError> {
    spec.validate()?;
    let mut cells = Vec::new();
    for ti in 0..spec.theta_list.len() {
        for r in 0..spec.realizations {
            cells.push((ti, r));
        }
    }
    let rows = run_cells(spec.threads, &cells, |&(ti, r)| {
        let theta = spec.theta_list[ti];
        let rng = member_rng(spec.seed, r).substream(ROLE_AR_DRIVER);
        let z: Vec<f64> = (0..=spec.series_len)
            .map(|n| rng.symmetric_f64(n as u64, 0.125))
            .collect();
        let chi = ar1_recursive(&z, theta);
        let mut sup: f64 = 0.0;
        for (n, &c) in chi.iter().enumerate().skip(1) {
            sup = sup.max(c.abs() / (std::f64::consts::E + n as f64).ln().sqrt());
        }
        BoundRow {
            param: theta,
            realization: r,
            max_normalized: sup,
            gamma1_normalized: None,
            seed: spec.seed,
        }
    });
    finish_bound_report(&spec.theta_list, rows, |th| 1.0 / (1.0 - th * th))
}

// ---------------------------------------------------------------------------
// Residual diagnostics
// ---------------------------------------------------------------------------

#[derive(Debug, Clone)]
pub struct ResidualRow {
    pub epsilon: f64,
    /// `alpha1 / eps^{3/2}`
    pub a1n: f64,
    /// `alpha2 / eps^3`
    pub a2n: f64,
    /// `alpha3 / (eps^5 sqrt|ln eps|)`
    pub a3n: f64,
    /// `beta1 / eps^{3/2}`
    pub b1n: f64,
    pub seed: u64,
    pub realization: u32,
}

#[derive(Debug, Clone)]
pub struct ResidualReport {
    pub rows: Vec<ResidualRow>,
    /// Normalized columns whose spread exceeded the configured limit.
    pub flagged: Vec<String>,
}

impl ResidualReport {
    pub fn write_csv(&self, path: &Path, invocation: &str) -> std::io::Result<()> {
        let columns = ["epsilon", "a1n", "a2n", "a3n", "b1n", "seed", "realization"];
        let rows: Vec<Vec<Field>> = self
            .rows
            .iter()
            .map(|r| {
                vec![
                    Field::F(r.epsilon),
                    Field::F(r.a1n),
                    Field::F(r.a2n),
                    Field::F(r.a3n),
                    Field::F(r.b1n),
                    Field::U(r.seed),
                    Field::U(r.realization as u64),
                ]
            })
            .collect();
        csv::write(path, invocation, &columns, &rows)
    }

    pub fn column_spread(&self, pick: impl Fn(&ResidualRow) -> f64) -> f64 {
        ratio_spread(self.rows.iter().map(pick))
    }
}

fn residual_cell(
    spec: &ExperimentSpec,
    epsilon: f64,
    realization: u32,
) -> Result<ResidualRow, HarnessError> {
    let m = spec
        .m_override
        .unwrap_or_else(|| default_half_width(epsilon, spec.t0));
    let noise = noise_for(spec, realization, m);
    let mass = mass_for(spec, realization, &noise, m)?;
    let family = WaveFamily::soliton(noise.sigma2);
    let gammas =
        gamma_build(&noise, epsilon, m).map_err(|e| HarnessError::InvalidSpec(e.to_string()))?;
    let cfg = ApproximatorConfig::new(epsilon, spec.t0, ExpansionOrder::Extended);
    let approx = Approximator::extended(cfg, &family, &noise, &gammas)
        .map_err(|e| HarnessError::InvalidSpec(e.to_string()))?;
    let horizon = spec.t0 / epsilon.powi(3);
    let times: Vec<f64> = (0..spec.samples)
        .map(|i| horizon * i as f64 / (spec.samples - 1) as f64)
        .collect();
    let ab = alpha_beta(&approx, &mass, &times, DEFAULT_TIME_DIFF)
        .map_err(|e| HarnessError::InvalidSpec(e.to_string()))?;
    Ok(ResidualRow {
        epsilon,
        a1n: ab.alpha1 / epsilon.powf(1.5),
        a2n: ab.alpha2 / epsilon.powi(3),
        a3n: ab.alpha3 / (epsilon.powi(5) * (-epsilon.ln()).sqrt()),
        b1n: ab.beta1 / epsilon.powf(1.5),
        seed: spec.seed,
        realization,
    })
}

/// Tabulate the normalized size/residual diagnostics of the extended
/// ansatz per epsilon and flag columns whose spread exceeds the limit.
pub fn run_residual_check(spec: &ExperimentSpec) -> Result<ResidualReport, HarnessError> {
    spec.validate()?;
    let mut cells = Vec::new();
    for ei in 0..spec.epsilon_list.len() {
        for r in 0..spec.realizations {
            cells.push((ei, r));
        }
    }
    let results = run_cells(spec.threads, &cells, |&(ei, r)| {
        residual_cell(spec, spec.epsilon_list[ei], r)
    });
    let mut rows = Vec::new();
    for res in results {
        rows.push(res?);
    }
    let flagged = flag_spread_columns(&rows, spec.spread_limit);
    Ok(ResidualReport { rows, flagged })
}

/// Columns whose max/min ratio exceeds `limit`.  Degenerate all-zero data
/// raises no flags.
fn flag_spread_columns(rows: &[ResidualRow], limit: f64) -> Vec<String> {
    let mut flagged = Vec::new();
    if !rows.iter().any(|r| r.a1n > 0.0) {
        return flagged;
    }
    let checks: [(&str, fn(&ResidualRow) -> f64); 4] = [
        ("a1n", |r| r.a1n),
        ("a2n", |r| r.a2n),
        ("a3n", |r| r.a3n),
        ("b1n", |r| r.b1n),
    ];
    for (name, pick) in checks {
        if ratio_spread(rows.iter().map(pick)) > limit {
            flagged.push(name.to_string());
        }
    }
    flagged
}

// ---------------------------------------------------------------------------
// Long-wave scaling check
// ---------------------------------------------------------------------------

#[derive(Debug, Clone)]
pub struct ScalingReport {
    pub rows: Vec<ScalingRow>,
    pub l2_spread: f64,
    pub e0_plus_spread: f64,
    pub e0_minus_spread: f64,
    pub seed: u64,
}

impl ScalingReport {
    pub fn write_csv(&self, path: &Path, invocation: &str) -> std::io::Result<()> {
        let columns = [
            "epsilon",
            "scaled_l2",
            "scaled_e0_plus",
            "scaled_e0_minus",
            "seed",
        ];
        let rows: Vec<Vec<Field>> = self
            .rows
            .iter()
            .map(|r| {
                vec![
                    Field::F(r.epsilon),
                    Field::F(r.scaled_l2),
                    Field::F(r.scaled_e0_plus),
                    Field::F(r.scaled_e0_minus),
                    Field::U(self.seed),
                ]
            })
            .collect();
        csv::write(path, invocation, &columns, &rows)
    }
}

/// Long-wave l2 scaling of `d+zeta(j) sech^2(eps j)` products across the
/// sweep; all scaled columns should stay O(1).
pub fn run_scaling_check(spec: &ExperimentSpec) -> Result<ScalingReport, HarnessError> {
    spec.validate()?;
    let eps_min = spec
        .epsilon_list
        .iter()
        .cloned()
        .fold(f64::INFINITY, f64::min);
    let reach = (spec.span / eps_min).ceil() as i64 + 2;
    let seed = member_rng(spec.seed, 0).substream(ROLE_NOISE).seed();
    let noise = NoiseSequence::sample_default(seed, -reach..=reach);
    let sech2 = |x: f64| {
        let e = (-x.abs()).exp();
        let s = 2.0 * e / (1.0 + e * e);
        s * s
    };
    let rows = lwa_scaling_check(
        |j| noise.forward_diff(j),
        sech2,
        &spec.epsilon_list,
        spec.span,
    );
    Ok(ScalingReport {
        l2_spread: ratio_spread(rows.iter().map(|r| r.scaled_l2)),
        e0_plus_spread: ratio_spread(rows.iter().map(|r| r.scaled_e0_plus)),
        e0_minus_spread: ratio_spread(rows.iter().map(|r| r.scaled_e0_minus)),
        rows,
        seed: spec.seed,
    })
}

// ---------------------------------------------------------------------------
// Plain simulation dump
// ---------------------------------------------------------------------------

#[derive(Debug, Clone)]
pub struct SimulateRow {
    pub t: f64,
    pub t_scaled: f64,
    pub q_linf: f64,
    pub p_linf: f64,
    pub q_l2: f64,
    pub p_l2: f64,
    pub energy: f64,
}

#[derive(Debug, Clone)]
pub struct SimulateReport {
    pub rows: Vec<SimulateRow>,
    pub epsilon: f64,
    pub mass_model: MassModel,
    pub seed: u64,
}

impl SimulateReport {
    pub fn write_csv(&self, path: &Path, invocation: &str) -> std::io::Result<()> {
        let columns = [
            "t",
            "T",
            "q_linf",
            "p_linf",
            "q_l2",
            "p_l2",
            "energy",
            "epsilon",
            "mass_model",
            "seed",
        ];
        let rows: Vec<Vec<Field>> = self
            .rows
            .iter()
            .map(|r| {
                vec![
                    Field::F(r.t),
                    Field::F(r.t_scaled),
                    Field::F(r.q_linf),
                    Field::F(r.p_linf),
                    Field::F(r.q_l2),
                    Field::F(r.p_l2),
                    Field::F(r.energy),
                    Field::F(self.epsilon),
                    Field::S(self.mass_model.name().into()),
                    Field::U(self.seed),
                ]
            })
            .collect();
        csv::write(path, invocation, &columns, &rows)
    }
}

/// One lattice run (first epsilon, realization 0) with norm and energy
/// diagnostics at the sample times.  Initial data is the long-wave
/// solitary profile.
pub fn run_simulate(spec: &ExperimentSpec) -> Result<Outcome<SimulateReport>, HarnessError> {
    spec.validate()?;
    let epsilon = spec.epsilon_list[0];
    let m = spec
        .m_override
        .unwrap_or_else(|| default_half_width(epsilon, spec.t0));
    let noise = noise_for(spec, 0, m);
    let mass = mass_for(spec, 0, &noise, m)?;
    let state = soliton_initial_state(0.0, epsilon, spec.t0, m);
    let dt = spec.dt_override.unwrap_or_else(|| default_dt(&mass));
    let t_end = spec.t0 / epsilon.powi(3);
    let plan = IntegrationPlan::uniform(dt, t_end, spec.samples)
        .map_err(|e| HarnessError::InvalidSpec(e.to_string()))?;
    let eps3 = epsilon.powi(3);
    let mut rows = Vec::with_capacity(spec.samples);
    let outcome = integrate(state, &mass, &plan, |t, s| {
        let qn = seq_norms(&s.q);
        let pn = seq_norms(&s.p);
        rows.push(SimulateRow {
            t,
            t_scaled: t * eps3,
            q_linf: qn.linf,
            p_linf: pn.linf,
            q_l2: qn.l2,
            p_l2: pn.l2,
            energy: fput_hamiltonian(s, &mass),
        });
    });
    let report = SimulateReport {
        rows,
        epsilon,
        mass_model: spec.mass_model,
        seed: spec.seed,
    };
    match outcome {
        Ok(_) => Ok(Outcome::clean(report)),
        Err(e) => Ok(Outcome {
            report,
            error: Some(lift_integrator(e, epsilon, 0)),
        }),
    }
}

/// Companion gnuplot script for a written CSV (the `#` header line is a
/// gnuplot comment, the column row feeds `autotitle columnhead`).
pub fn write_plot_script(spec: &ExperimentSpec) -> std::io::Result<std::path::PathBuf> {
    let data = spec.output_path.display();
    let body = match spec.kind {
        ExperimentKind::Amplitude => format!(
            "plot '{data}' using 1:2 with lines title 'scaled amplitude', \\\n     '{data}' using 1:6 with lines title 'max variant'\n"
        ),
        ExperimentKind::ErrorSweep => format!(
            "set logscale xy\nset xlabel 'epsilon'\nset ylabel 'E_eps'\nplot '{data}' using 1:2 with points pt 7\n"
        ),
        ExperimentKind::GammaBound | ExperimentKind::ArBound => format!(
            "set logscale xy\nset xlabel 'param'\nplot '{data}' using 1:3 with points pt 6 title 'normalized sup'\n"
        ),
        ExperimentKind::ScalingCheck => format!(
            "set logscale x\nset xlabel 'epsilon'\nplot '{data}' using 1:2 with linespoints title 'scaled l2', \\\n     '{data}' using 1:3 with linespoints title 'E0+', \\\n     '{data}' using 1:4 with linespoints title 'E0-'\n"
        ),
        ExperimentKind::ResidualCheck => format!(
            "set logscale x\nset xlabel 'epsilon'\nplot '{data}' using 1:2 with linespoints title 'a1n', \\\n     '{data}' using 1:3 with linespoints title 'a2n', \\\n     '{data}' using 1:4 with linespoints title 'a3n', \\\n     '{data}' using 1:5 with linespoints title 'b1n'\n"
        ),
        ExperimentKind::Simulate => format!(
            "set xlabel 'T'\nplot '{data}' using 2:3 with lines title 'q linf', \\\n     '{data}' using 2:4 with lines title 'p linf'\n"
        ),
    };
    let text = format!("set datafile separator ','\nset key autotitle columnhead\n{body}");
    let path = std::path::PathBuf::from(format!("{data}.gnuplot"));
    std::fs::write(&path, text)?;
    Ok(path)
}

/// Dispatch by kind, write the CSV (including partial rows after a
/// numerical abort), and surface the first error.  This is the CLI's
/// entry point.
pub fn execute(spec: &ExperimentSpec, invocation: &str) -> Result<ExecSummary, HarnessError> {
    if spec.plot_script {
        write_plot_script(spec)?;
    }
    match spec.kind {
        ExperimentKind::Amplitude => {
            let out = run_amplitude(spec)?;
            out.report.write_csv(&spec.output_path, invocation)?;
            match out.error {
                Some(e) => Err(e),
                None => Ok(ExecSummary {
                    lines: vec![format!("{} amplitude rows", out.report.rows.len())],
                }),
            }
        }
        ExperimentKind::ErrorSweep => {
            let out = run_error_sweep(spec)?;
            out.report.write_csv(&spec.output_path, invocation)?;
            match out.error {
                Some(e) => Err(e),
                None => {
                    let mut lines = Vec::new();
                    for f in &out.report.fits {
                        lines.push(format!(
                            "realization {}: slope {:.4} (rms residual {:.2e})",
                            f.realization, f.fit.slope, f.fit.residual
                        ));
                    }
                    Ok(ExecSummary { lines })
                }
            }
        }
        ExperimentKind::GammaBound => {
            let report = run_gamma_bound(spec)?;
            report.write_csv(&spec.output_path, invocation)?;
            Ok(ExecSummary {
                lines: bound_summary(&report),
            })
        }
        ExperimentKind::ArBound => {
            let report = run_ar_bound(spec)?;
            report.write_csv(&spec.output_path, invocation)?;
            Ok(ExecSummary {
                lines: bound_summary(&report),
            })
        }
        ExperimentKind::ScalingCheck => {
            let report = run_scaling_check(spec)?;
            report.write_csv(&spec.output_path, invocation)?;
            Ok(ExecSummary {
                lines: vec![format!(
                    "scaled l2 spread {:.3}, E0+ spread {:.3}, E0- spread {:.3}",
                    report.l2_spread, report.e0_plus_spread, report.e0_minus_spread
                )],
            })
        }
        ExperimentKind::ResidualCheck => {
            let report = run_residual_check(spec)?;
            report.write_csv(&spec.output_path, invocation)?;
            let mut lines = vec![format!("{} diagnostic rows", report.rows.len())];
            for name in &report.flagged {
                lines.push(format!(
                    "warning: column {name} spread exceeds {}",
                    spec.spread_limit
                ));
            }
            Ok(ExecSummary { lines })
        }
        ExperimentKind::Simulate => {
            let out = run_simulate(spec)?;
            out.report.write_csv(&spec.output_path, invocation)?;
            match out.error {
                Some(e) => Err(e),
                None => Ok(ExecSummary {
                    lines: vec![format!("{} snapshots", out.report.rows.len())],
                }),
            }
        }
    }
}

/// Human-readable lines the CLI prints after a run.
#[derive(Debug, Clone)]
pub struct ExecSummary {
    pub lines: Vec<String>,
}

fn bound_summary(report: &BoundReport) -> Vec<String> {
    let mut lines = Vec::new();
    for (p, m) in &report.medians {
        lines.push(format!("param {p}: median normalized sup {m:.6}"));
    }
    if let Some(fit) = report.fit {
        lines.push(format!("log-log slope {:.4}", fit.slope));
    }
    lines
}

#[cfg(test)]
mod tests {
    use super::*;

    fn row(eps: f64, value: f64) -> ResidualRow {
        ResidualRow {
            epsilon: eps,
            a1n: value,
            a2n: 1.0,
            a3n: 1.0,
            b1n: 1.0,
            seed: 0,
            realization: 0,
        }
    }

    #[test]
    fn spread_flags_fire_and_stay_quiet_on_zero_data() {
        let zero = vec![row(0.5, 0.0), row(0.25, 0.0)];
        assert!(flag_spread_columns(&zero, 10.0).is_empty());

        let wild = vec![row(0.5, 1.0), row(0.25, 25.0)];
        assert_eq!(flag_spread_columns(&wild, 10.0), vec!["a1n".to_string()]);
    }
}
