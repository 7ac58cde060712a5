//! Discrete operators, disorder generators, the FPUT right-hand side and
//! energy/norm diagnostics on the truncated periodic lattice.
//!
//! The chain is the first-order system
//!
//! ```text
//! dq(j)/dt = d+ p(j),      m(j) dp(j)/dt = d- V'(q)(j),
//! ```
//!
//! with spring potential `V(q) = q^2/2 + q^3/3`, truncated to the window
//! `j in [-M, M]` with periodic wrap.  Sequences over the window are stored
//! with site `j` at offset `j + M`.

use crate::rng::CounterRng;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum LatticeError {
    #[error("support bound {0} outside (0, 1/4)")]
    SupportBound(f64),
    #[error("noise window [{have_lo}, {have_hi}] does not cover required [{need_lo}, {need_hi}]")]
    NoiseWindow {
        have_lo: i64,
        have_hi: i64,
        need_lo: i64,
        need_hi: i64,
    },
    #[error("nonpositive mass {value} at site {site}")]
    NonpositiveMass { site: i64, value: f64 },
}

// ---------------------------------------------------------------------------
// Difference and shift operators
// ---------------------------------------------------------------------------

/// The four elementary lattice operators, all with periodic wrap.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ShiftOp {
    /// `d+ f(j) = f(j+1) - f(j)`
    ForwardDiff,
    /// `d- f(j) = f(j) - f(j-1)`
    BackwardDiff,
    /// `S+ f(j) = f(j+1)`
    ShiftFwd,
    /// `S- f(j) = f(j-1)`
    ShiftBack,
}

pub fn shift_op(op: ShiftOp, f: &[f64]) -> Vec<f64> {
    let mut out = vec![0.0; f.len()];
    match op {
        ShiftOp::ForwardDiff => forward_diff_into(f, &mut out),
        ShiftOp::BackwardDiff => backward_diff_into(f, &mut out),
        ShiftOp::ShiftFwd => {
            let n = f.len();
            for j in 0..n {
                out[j] = f[(j + 1) % n];
            }
        }
        ShiftOp::ShiftBack => {
            let n = f.len();
            for j in 0..n {
                out[j] = f[(j + n - 1) % n];
            }
        }
    }
    out
}

/// `d+` with periodic wrap.
pub fn forward_diff_into(f: &[f64], out: &mut [f64]) {
    let n = f.len();
    assert!(n > 0 && out.len() == n);
    for j in 0..n - 1 {
        out[j] = f[j + 1] - f[j];
    }
    out[n - 1] = f[0] - f[n - 1];
}

/// `d-` with periodic wrap.
pub fn backward_diff_into(f: &[f64], out: &mut [f64]) {
    let n = f.len();
    assert!(n > 0 && out.len() == n);
    out[0] = f[0] - f[n - 1];
    for j in 1..n {
        out[j] = f[j] - f[j - 1];
    }
}

/// Spring force `V'(q) = q + q^2`.
#[inline]
pub fn spring_force(q: f64) -> f64 {
    q * (1.0 + q)
}

/// Spring potential `V(q) = q^2/2 + q^3/3`.
#[inline]
pub fn spring_potential(q: f64) -> f64 {
    q * q * (0.5 + q / 3.0)
}

// ---------------------------------------------------------------------------
// Disorder
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum NoiseDistribution {
    /// Uniform on `(-a, a)`; variance `a^2/3`.
    Uniform { bound: f64 },
}

/// An i.i.d. noise realization `zeta(j)` on an index window, together with
/// its distribution metadata.
///
/// Draws are addressed by absolute site index through the counter RNG, so
/// the realization attached to a seed does not depend on the window: the
/// same site sees the same value under any truncation.
#[derive(Debug, Clone)]
pub struct NoiseSequence {
    values: Vec<f64>,
    lo: i64,
    pub sigma2: f64,
    pub support_bound: f64,
    pub seed: u64,
    pub distribution: NoiseDistribution,
}

impl NoiseSequence {
    /// Sample i.i.d. noise on `window` (inclusive).  `support_bound` must
    /// lie in `(0, 1/4)` so that every derived mass stays positive.
    pub fn sample(
        distribution: NoiseDistribution,
        support_bound: f64,
        seed: u64,
        window: std::ops::RangeInclusive<i64>,
    ) -> Result<Self, LatticeError> {
        if !(support_bound > 0.0 && support_bound < 0.25) {
            return Err(LatticeError::SupportBound(support_bound));
        }
        let (lo, hi) = (*window.start(), *window.end());
        assert!(lo <= hi, "empty noise window");
        let rng = CounterRng::new(seed);
        let NoiseDistribution::Uniform { bound } = distribution;
        assert!(
            bound <= support_bound,
            "distribution bound exceeds declared support bound"
        );
        let values = (lo..=hi)
            .map(|j| rng.symmetric_f64(CounterRng::site_counter(j), bound))
            .collect();
        Ok(Self {
            values,
            lo,
            sigma2: bound * bound / 3.0,
            support_bound,
            seed,
            distribution,
        })
    }

    /// Uniform on `(-1/8, 1/8)`, the distribution used by the experiments
    /// (variance `1/192`).
    pub fn sample_default(seed: u64, window: std::ops::RangeInclusive<i64>) -> Self {
        Self::sample(
            NoiseDistribution::Uniform { bound: 0.125 },
            0.125,
            seed,
            window,
        )
        .expect("1/8 is a valid support bound")
    }

    /// Degenerate all-zero realization (test hook for the bound runners).
    pub fn zeros(window: std::ops::RangeInclusive<i64>) -> Self {
        let (lo, hi) = (*window.start(), *window.end());
        Self {
            values: vec![0.0; (hi - lo + 1) as usize],
            lo,
            sigma2: 0.0,
            support_bound: 0.125,
            seed: 0,
            distribution: NoiseDistribution::Uniform { bound: 0.0 },
        }
    }

    /// Explicit values (tests).  `sigma2` must match the generating law.
    pub fn from_values(values: Vec<f64>, lo: i64, sigma2: f64) -> Self {
        Self {
            values,
            lo,
            sigma2,
            support_bound: 0.25,
            seed: 0,
            distribution: NoiseDistribution::Uniform { bound: 0.25 },
        }
    }

    pub fn window(&self) -> (i64, i64) {
        (self.lo, self.lo + self.values.len() as i64 - 1)
    }

    #[inline]
    pub fn get(&self, j: i64) -> f64 {
        self.values[(j - self.lo) as usize]
    }

    /// `d+ zeta(j) = zeta(j+1) - zeta(j)` (unwrapped; needs `j+1` in window).
    #[inline]
    pub fn forward_diff(&self, j: i64) -> f64 {
        self.get(j + 1) - self.get(j)
    }

    /// `d+ d- zeta(j) = zeta(j+1) - 2 zeta(j) + zeta(j-1)` (unwrapped).
    #[inline]
    pub fn second_diff(&self, j: i64) -> f64 {
        self.get(j + 1) - 2.0 * self.get(j) + self.get(j - 1)
    }

    fn require_window(&self, need_lo: i64, need_hi: i64) -> Result<(), LatticeError> {
        let (have_lo, have_hi) = self.window();
        if need_lo < have_lo || need_hi > have_hi {
            return Err(LatticeError::NoiseWindow {
                have_lo,
                have_hi,
                need_lo,
                need_hi,
            });
        }
        Ok(())
    }
}

// ---------------------------------------------------------------------------
// Mass profiles
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MassModel {
    Constant,
    /// `m(j) = 1 + (-1)^j / 4`
    Periodic2,
    /// `m(j) = 1 + d+ d- zeta(j)` (wrapped on the window)
    Transparent,
    /// Independent uniform draws on `[1/2, 3/2)`
    Iid,
    /// `m(j) = 1 + d- zeta(j)` (wrapped on the window)
    Translucent,
}

impl MassModel {
    pub fn name(&self) -> &'static str {
        match self {
            MassModel::Constant => "constant",
            MassModel::Periodic2 => "periodic",
            MassModel::Transparent => "transparent",
            MassModel::Iid => "iid",
            MassModel::Translucent => "translucent",
        }
    }
}

/// Construction recipe for [`make_mass`].
#[derive(Debug, Clone, Copy)]
pub enum MassSpec<'a> {
    Constant,
    Periodic2,
    Transparent(&'a NoiseSequence),
    Translucent(&'a NoiseSequence),
    Iid { seed: u64 },
}

/// Strictly positive mass coefficients on `j in [-M, M]`.
#[derive(Debug, Clone)]
pub struct MassProfile {
    values: Vec<f64>,
    inv: Vec<f64>,
    pub model: MassModel,
    half_width: i64,
}

/// Build a mass profile on the window `[-M, M]`.
///
/// The noise-derived models apply their finite differences with periodic
/// wrap *of the window*, so that `sum_j (m(j) - 1)` telescopes to zero
/// exactly; the noise realization itself is never wrapped, which keeps the
/// values at interior sites identical to the untruncated profile.
pub fn make_mass(spec: MassSpec<'_>, half_width: i64) -> Result<MassProfile, LatticeError> {
    let m = half_width;
    assert!(m >= 1, "half-width must be at least 1");
    let n = (2 * m + 1) as usize;
    let (model, values) = match spec {
        MassSpec::Constant => (MassModel::Constant, vec![1.0; n]),
        MassSpec::Periodic2 => {
            let v = (-m..=m)
                .map(|j| if j.rem_euclid(2) == 0 { 1.25 } else { 0.75 })
                .collect();
            (MassModel::Periodic2, v)
        }
        MassSpec::Transparent(noise) => {
            noise.require_window(-m, m)?;
            let wrap = |j: i64| {
                let span = 2 * m + 1;
                let mut k = j;
                if k > m {
                    k -= span;
                } else if k < -m {
                    k += span;
                }
                noise.get(k)
            };
            let v = (-m..=m)
                .map(|j| 1.0 + wrap(j + 1) - 2.0 * wrap(j) + wrap(j - 1))
                .collect();
            (MassModel::Transparent, v)
        }
        MassSpec::Translucent(noise) => {
            noise.require_window(-m, m)?;
            let wrap = |j: i64| {
                let span = 2 * m + 1;
                let mut k = j;
                if k < -m {
                    k += span;
                }
                noise.get(k)
            };
            let v = (-m..=m).map(|j| 1.0 + wrap(j) - wrap(j - 1)).collect();
            (MassModel::Translucent, v)
        }
        MassSpec::Iid { seed } => {
            let rng = CounterRng::new(seed);
            let v = (-m..=m)
                .map(|j| 0.5 + rng.unit_f64(CounterRng::site_counter(j)))
                .collect();
            (MassModel::Iid, v)
        }
    };
    for (off, &v) in values.iter().enumerate() {
        if !(v > 0.0) {
            return Err(LatticeError::NonpositiveMass {
                site: off as i64 - m,
                value: v,
            });
        }
    }
    let inv = values.iter().map(|&v| 1.0 / v).collect();
    Ok(MassProfile {
        values,
        inv,
        model,
        half_width: m,
    })
}

impl MassProfile {
    pub fn half_width(&self) -> i64 {
        self.half_width
    }

    pub fn n_sites(&self) -> usize {
        self.values.len()
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub(crate) fn inv_values(&self) -> &[f64] {
        &self.inv
    }

    #[inline]
    pub fn get(&self, j: i64) -> f64 {
        self.values[(j + self.half_width) as usize]
    }

    pub fn min(&self) -> f64 {
        self.values.iter().cloned().fold(f64::INFINITY, f64::min)
    }

    pub fn max(&self) -> f64 {
        self.values.iter().cloned().fold(0.0, f64::max)
    }
}

// ---------------------------------------------------------------------------
// Lattice state and vector field
// ---------------------------------------------------------------------------

/// Paired `(q, p)` sequences at one instant on the truncated lattice.
#[derive(Debug, Clone, PartialEq)]
pub struct LatticeState {
    pub q: Vec<f64>,
    pub p: Vec<f64>,
    pub t: f64,
    half_width: i64,
}

impl LatticeState {
    pub fn zeros(half_width: i64) -> Self {
        let n = (2 * half_width + 1) as usize;
        Self {
            q: vec![0.0; n],
            p: vec![0.0; n],
            t: 0.0,
            half_width,
        }
    }

    /// Sample `q` and `p` from site profiles at `t = 0`.
    pub fn from_profiles(
        half_width: i64,
        q_of: impl Fn(i64) -> f64,
        p_of: impl Fn(i64) -> f64,
    ) -> Self {
        let q = (-half_width..=half_width).map(&q_of).collect();
        let p = (-half_width..=half_width).map(&p_of).collect();
        Self {
            q,
            p,
            t: 0.0,
            half_width,
        }
    }

    pub fn half_width(&self) -> i64 {
        self.half_width
    }

    pub fn n_sites(&self) -> usize {
        self.q.len()
    }

    #[inline]
    pub fn offset(&self, j: i64) -> usize {
        (j + self.half_width) as usize
    }

    pub fn all_finite(&self) -> bool {
        self.q.iter().all(|v| v.is_finite()) && self.p.iter().all(|v| v.is_finite())
    }
}

/// Right-hand side of the chain: `dq = d+ p`, `dp = d- V'(q) / m`.
///
/// `cubic = false` drops the `q^2` term of the spring force (linear chain,
/// used by convergence tests).
pub fn fput_rhs_into(
    q: &[f64],
    p: &[f64],
    inv_mass: &[f64],
    cubic: bool,
    dq: &mut [f64],
    dp: &mut [f64],
) {
    let n = q.len();
    assert!(n > 0 && p.len() == n && inv_mass.len() == n);
    forward_diff_into(p, dq);
    let force = |x: f64| if cubic { x * (1.0 + x) } else { x };
    dp[0] = (force(q[0]) - force(q[n - 1])) * inv_mass[0];
    for j in 1..n {
        dp[j] = (force(q[j]) - force(q[j - 1])) * inv_mass[j];
    }
}

/// Allocating wrapper around [`fput_rhs_into`] for the full spring force.
pub fn fput_rhs(state: &LatticeState, mass: &MassProfile) -> (Vec<f64>, Vec<f64>) {
    assert_eq!(state.half_width(), mass.half_width());
    let mut dq = vec![0.0; state.n_sites()];
    let mut dp = vec![0.0; state.n_sites()];
    fput_rhs_into(
        &state.q,
        &state.p,
        mass.inv_values(),
        true,
        &mut dq,
        &mut dp,
    );
    (dq, dp)
}

// ---------------------------------------------------------------------------
// Energy and norms
// ---------------------------------------------------------------------------

/// The quadratic-plus-cubic energy
/// `sum_j [ m(j) v(j)^2 / 2 + (1 + 2 b(j)) u(j)^2 / 2 + u(j)^3 / 3 ]`
/// whose `u`-part is the spring increment `W(u, b) = V(b+u) - V(b) - V'(b) u`
/// around the background `b`.
pub fn energy_h(u: &[f64], v: &[f64], background: &[f64], mass: &MassProfile) -> f64 {
    let n = u.len();
    assert!(v.len() == n && background.len() == n && mass.n_sites() == n);
    let mv: f64 = (0..n).map(|j| 0.5 * mass.values()[j] * v[j] * v[j]).sum();
    mv + spring_increment_sum(u, background)
}

/// Just the `u`-part of [`energy_h`]: `sum_j W(u(j), b(j))`.
pub fn spring_increment_sum(u: &[f64], background: &[f64]) -> f64 {
    u.iter()
        .zip(background)
        .map(|(&a, &b)| 0.5 * (1.0 + 2.0 * b) * a * a + a * a * a / 3.0)
        .sum()
}

/// Conserved energy of the chain, `sum_j [ m(j) p(j)^2 / 2 + V(q(j)) ]`.
pub fn fput_hamiltonian(state: &LatticeState, mass: &MassProfile) -> f64 {
    assert_eq!(state.half_width(), mass.half_width());
    state
        .q
        .iter()
        .zip(&state.p)
        .zip(mass.values())
        .map(|((&q, &p), &m)| 0.5 * m * p * p + spring_potential(q))
        .sum()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Norms {
    pub l2: f64,
    pub linf: f64,
}

pub fn seq_norms(f: &[f64]) -> Norms {
    let mut sq = 0.0;
    let mut sup: f64 = 0.0;
    for &x in f {
        sq += x * x;
        sup = sup.max(x.abs());
    }
    Norms {
        l2: sq.sqrt(),
        linf: sup,
    }
}

/// Pair norms with the sum convention: `|f, g| = |f| + |g|` in both l2
/// and linf.
pub fn pair_norms(f: &[f64], g: &[f64]) -> Norms {
    let a = seq_norms(f);
    let b = seq_norms(g);
    Norms {
        l2: a.l2 + b.l2,
        linf: a.linf + b.linf,
    }
}

/// Default truncation half-width `M = ceil(8 (T0 / eps^3 + 1 / eps))`,
/// sized so the wave support stays far from the window edge over the whole
/// run.
pub fn default_half_width(epsilon: f64, t0: f64) -> i64 {
    (8.0 * (t0 / epsilon.powi(3) + 1.0 / epsilon)).ceil() as i64
}
