//! Fixed-step classical RK4 for the truncated lattice ODE.
//!
//! One kernel, [`rk4_step_raw`], drives every integration in the crate
//! (including the scalar self-tests), so the stepper exercised by the
//! convergence checks is the stepper used by the experiments.  There is no
//! adaptivity: fixed `dt`, bit-deterministic for fixed inputs.

use crate::lattice::{fput_rhs_into, LatticeState, MassProfile};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum IntegratorError {
    #[error("non-finite state at t = {t}")]
    NonFinite { t: f64 },
    #[error("invalid integration plan: {0}")]
    InvalidPlan(String),
}

/// An autonomous ODE `y' = f(y)` over a flat state vector.
pub trait OdeSystem {
    fn rhs(&self, y: &[f64], dydt: &mut [f64]);
}

/// The lattice vector field over the packed state `y = [q | p]`.
pub struct FputSystem<'a> {
    mass: &'a MassProfile,
    cubic: bool,
}

impl<'a> FputSystem<'a> {
    pub fn new(mass: &'a MassProfile) -> Self {
        Self { mass, cubic: true }
    }

    /// Linear chain (`V'(q) = q`); used by order-of-convergence tests.
    pub fn linearized(mass: &'a MassProfile) -> Self {
        Self { mass, cubic: false }
    }
}

impl OdeSystem for FputSystem<'_> {
    fn rhs(&self, y: &[f64], dydt: &mut [f64]) {
        let n = self.mass.n_sites();
        debug_assert_eq!(y.len(), 2 * n);
        let (q, p) = y.split_at(n);
        let (dq, dp) = dydt.split_at_mut(n);
        fput_rhs_into(q, p, self.mass.inv_values(), self.cubic, dq, dp);
    }
}

/// Reusable stage storage for [`rk4_step_raw`].
pub struct Rk4Buffers {
    k1: Vec<f64>,
    k2: Vec<f64>,
    k3: Vec<f64>,
    k4: Vec<f64>,
    stage: Vec<f64>,
}

impl Rk4Buffers {
    pub fn new(dim: usize) -> Self {
        Self {
            k1: vec![0.0; dim],
            k2: vec![0.0; dim],
            k3: vec![0.0; dim],
            k4: vec![0.0; dim],
            stage: vec![0.0; dim],
        }
    }
}

/// One classical 4-stage step, in place.
pub fn rk4_step_raw(sys: &impl OdeSystem, y: &mut [f64], dt: f64, buf: &mut Rk4Buffers) {
    let n = y.len();
    sys.rhs(y, &mut buf.k1);
    for i in 0..n {
        buf.stage[i] = y[i] + 0.5 * dt * buf.k1[i];
    }
    sys.rhs(&buf.stage, &mut buf.k2);
    for i in 0..n {
        buf.stage[i] = y[i] + 0.5 * dt * buf.k2[i];
    }
    sys.rhs(&buf.stage, &mut buf.k3);
    for i in 0..n {
        buf.stage[i] = y[i] + dt * buf.k3[i];
    }
    sys.rhs(&buf.stage, &mut buf.k4);
    for i in 0..n {
        y[i] += dt / 6.0 * (buf.k1[i] + 2.0 * (buf.k2[i] + buf.k3[i]) + buf.k4[i]);
    }
}

fn pack(state: &LatticeState) -> Vec<f64> {
    let mut y = Vec::with_capacity(2 * state.n_sites());
    y.extend_from_slice(&state.q);
    y.extend_from_slice(&state.p);
    y
}

fn unpack(y: &[f64], half_width: i64, t: f64) -> LatticeState {
    let n = y.len() / 2;
    let mut state = LatticeState::zeros(half_width);
    state.q.copy_from_slice(&y[..n]);
    state.p.copy_from_slice(&y[n..]);
    state.t = t;
    state
}

/// One RK4 step of the lattice field.
pub fn rk4_step(
    state: &LatticeState,
    mass: &MassProfile,
    dt: f64,
) -> Result<LatticeState, IntegratorError> {
    assert!(dt > 0.0);
    assert_eq!(state.half_width(), mass.half_width());
    let sys = FputSystem::new(mass);
    let mut y = pack(state);
    let mut buf = Rk4Buffers::new(y.len());
    rk4_step_raw(&sys, &mut y, dt, &mut buf);
    let next = unpack(&y, state.half_width(), state.t + dt);
    if !next.all_finite() {
        return Err(IntegratorError::NonFinite { t: next.t });
    }
    Ok(next)
}

/// Fixed-step schedule: `n_steps` steps of size `dt` with observer calls at
/// selected step indices.  Requested times are snapped to the nearest step
/// multiple; the snapped values are what get reported.
#[derive(Debug, Clone)]
pub struct IntegrationPlan {
    dt: f64,
    n_steps: u64,
    sample_steps: Vec<u64>,
}

impl IntegrationPlan {
    pub fn new(dt: f64, t_end: f64, sample_times: &[f64]) -> Result<Self, IntegratorError> {
        if !(dt > 0.0) || !dt.is_finite() {
            return Err(IntegratorError::InvalidPlan(format!("dt = {dt}")));
        }
        if !(t_end >= 0.0) || !t_end.is_finite() {
            return Err(IntegratorError::InvalidPlan(format!("t_end = {t_end}")));
        }
        let n_steps = (t_end / dt).round() as u64;
        let mut sample_steps = Vec::with_capacity(sample_times.len());
        for &s in sample_times {
            if !(0.0..=t_end * (1.0 + 1e-12) + dt).contains(&s) {
                return Err(IntegratorError::InvalidPlan(format!(
                    "sample time {s} outside [0, {t_end}]"
                )));
            }
            let k = (s / dt).round() as u64;
            if k > n_steps {
                return Err(IntegratorError::InvalidPlan(format!(
                    "sample time {s} snaps past the final step"
                )));
            }
            sample_steps.push(k);
        }
        sample_steps.sort_unstable();
        sample_steps.dedup();
        Ok(Self {
            dt,
            n_steps,
            sample_steps,
        })
    }

    /// `n` samples uniformly spaced over `[0, t_end]`, endpoints included.
    pub fn uniform(dt: f64, t_end: f64, n: usize) -> Result<Self, IntegratorError> {
        let times: Vec<f64> = if n <= 1 || t_end == 0.0 {
            vec![0.0]
        } else {
            (0..n).map(|i| t_end * i as f64 / (n - 1) as f64).collect()
        };
        Self::new(dt, t_end, &times)
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn t_end(&self) -> f64 {
        self.n_steps as f64 * self.dt
    }

    pub fn sample_times(&self) -> Vec<f64> {
        self.sample_steps
            .iter()
            .map(|&k| k as f64 * self.dt)
            .collect()
    }
}

/// Advance `state` from `t = 0` through the plan, invoking `observer`
/// exactly at each sample time.  Returns the final state.
pub fn integrate(
    state: LatticeState,
    mass: &MassProfile,
    plan: &IntegrationPlan,
    mut observer: impl FnMut(f64, &LatticeState),
) -> Result<LatticeState, IntegratorError> {
    assert_eq!(state.half_width(), mass.half_width());
    let half_width = state.half_width();
    let sys = FputSystem::new(mass);
    let mut y = pack(&state);
    let mut buf = Rk4Buffers::new(y.len());
    let mut next_sample = plan.sample_steps.iter().peekable();

    let mut emit = |k: u64, y: &[f64]| {
        let t = k as f64 * plan.dt;
        let snapshot = unpack(y, half_width, t);
        observer(t, &snapshot);
    };

    if next_sample.peek() == Some(&&0) {
        emit(0, &y);
        next_sample.next();
    }
    for k in 1..=plan.n_steps {
        rk4_step_raw(&sys, &mut y, plan.dt, &mut buf);
        if !y.iter().all(|v| v.is_finite()) {
            return Err(IntegratorError::NonFinite {
                t: k as f64 * plan.dt,
            });
        }
        if next_sample.peek() == Some(&&k) {
            emit(k, &y);
            next_sample.next();
        }
    }
    Ok(unpack(&y, half_width, plan.t_end()))
}

/// Default step `min(0.1, 0.5 sqrt(min_j m(j)))`: the lattice dispersion
/// satisfies `|omega| <= 2 / sqrt(min m)`, so this sits well inside the RK4
/// stability region.
pub fn default_dt(mass: &MassProfile) -> f64 {
    (0.5 * mass.min().sqrt()).min(0.1)
}
