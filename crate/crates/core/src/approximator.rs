//! The extended lattice approximators and their diagnostics.
//!
//! A long-wave ansatz `q ~ sum_n eps^(n+2) Q_n(j, eps j, eps t, eps^3 t)`
//! (same for `p`) is assembled from a KdV [`WaveFamily`] plus the disorder
//! realization.  With `X = eps j`, `tau = eps t`, `T = eps^3 t`,
//! `w = X - tau`, `l = X + tau`, the orders are
//!
//! ```text
//! Q0 = A + B                             P0 = -A + B
//! Q1 = dX Q0 / 2 + d+zeta dtau P0        P1 = 0
//! Q2 = A2 + B2 - zeta dX^2 Q0            P2 = -A2 + B2 + zeta dX^2 P0
//! Q3 = (g2 + zeta/2) dX^3 Q0             P3 = g1 dX^3 P0
//!      - d+zeta dX(Q0^2)
//!      + d+zeta (dT P0 - dtau A2 + dtau B2)
//! ```
//!
//! where `g1`, `g2` are the autoregressive correction sequences of
//! [`gamma_build`].  The mixed derivatives are expanded through
//! `dX = dw + dl`, `dtau = -dw + dl`, and slow-time derivatives through the
//! KdV equations; nothing is discretized symbolically.
//!
//! Residuals of the assembled pair under the lattice equations use a
//! centered difference in `t` (default width 1e-2); the bias `h^2/6 d3q/dt3`
//! sits far below the residual sizes being measured.

use crate::kdv::{correctors, KdvError, WaveFamily};
use crate::lattice::{pair_norms, spring_force, LatticeError, MassProfile, NoiseSequence};

/// Default centered-difference width for time derivatives of the ansatz.
pub const DEFAULT_TIME_DIFF: f64 = 1e-2;

// ---------------------------------------------------------------------------
// Autoregressive correction sequences
// ---------------------------------------------------------------------------

/// The AR(1) correction sequences `g1(j)`, `g2(j)` on `j in [-M, M]`,
/// vanishing at `j = 0` and iterated exactly outward:
///
/// ```text
/// d+ g1(j) = -eps sgn(j) g1(j) - (zeta(j) + zeta(j+1))
/// d- g2(j) = -eps sgn(j) g2(j) + (zeta(j) + zeta(j-1)
///            + zeta(j) d+d- zeta(j) + 2 sigma^2)
/// ```
///
/// with `sgn(0) = 0`.  Away from zero each direction is a contraction with
/// factor `theta = 1/(1+eps)` or `vartheta = 1-eps`.
#[derive(Debug, Clone)]
pub struct GammaProcesses {
    gamma1: Vec<f64>,
    gamma2: Vec<f64>,
    half_width: i64,
    pub epsilon: f64,
    pub theta: f64,
    pub vartheta: f64,
    pub sigma2: f64,
}

impl GammaProcesses {
    pub fn half_width(&self) -> i64 {
        self.half_width
    }

    #[inline]
    pub fn gamma1(&self, j: i64) -> f64 {
        self.gamma1[(j + self.half_width) as usize]
    }

    #[inline]
    pub fn gamma2(&self, j: i64) -> f64 {
        self.gamma2[(j + self.half_width) as usize]
    }

    /// `max_j |g(j)| / sqrt(ln(e + |j|))` over the window, for the bound
    /// experiments.
    pub fn normalized_sup(&self) -> (f64, f64) {
        let mut s1: f64 = 0.0;
        let mut s2: f64 = 0.0;
        for j in -self.half_width..=self.half_width {
            let scale = (std::f64::consts::E + j.unsigned_abs() as f64).ln().sqrt();
            s1 = s1.max(self.gamma1(j).abs() / scale);
            s2 = s2.max(self.gamma2(j).abs() / scale);
        }
        (s1, s2)
    }
}

/// Drivers of the two recursions.
#[inline]
fn driver1(noise: &NoiseSequence, j: i64) -> f64 {
    -(noise.get(j) + noise.get(j + 1))
}

#[inline]
fn driver2(noise: &NoiseSequence, j: i64, sigma2: f64) -> f64 {
    noise.get(j) + noise.get(j - 1) + noise.get(j) * noise.second_diff(j) + 2.0 * sigma2
}

/// Build both correction sequences by exact iteration from `g(0) = 0`.
/// The noise window must cover `[-M-1, M+1]`.
pub fn gamma_build(
    noise: &NoiseSequence,
    epsilon: f64,
    half_width: i64,
) -> Result<GammaProcesses, LatticeError> {
    assert!(epsilon > 0.0 && epsilon <= 1.0);
    let m = half_width;
    let (lo, hi) = noise.window();
    if lo > -m - 1 || hi < m + 1 {
        return Err(LatticeError::NoiseWindow {
            have_lo: lo,
            have_hi: hi,
            need_lo: -m - 1,
            need_hi: m + 1,
        });
    }
    let sigma2 = noise.sigma2;
    let n = (2 * m + 1) as usize;
    let off = |j: i64| (j + m) as usize;

    let mut gamma1 = vec![0.0; n];
    // forward: g1(j+1) = (1 - eps sgn(j)) g1(j) - (zeta(j) + zeta(j+1))
    for j in 0..m {
        let contraction = if j == 0 { 1.0 } else { 1.0 - epsilon };
        gamma1[off(j + 1)] = contraction * gamma1[off(j)] + driver1(noise, j);
    }
    // backward: g1(j) = (g1(j+1) + zeta(j) + zeta(j+1)) / (1 + eps)
    for j in (-m..=-1).rev() {
        gamma1[off(j)] = (gamma1[off(j + 1)] - driver1(noise, j)) / (1.0 + epsilon);
    }

    let mut gamma2 = vec![0.0; n];
    // forward: g2(j) = (g2(j-1) + d2(j)) / (1 + eps)
    for j in 1..=m {
        gamma2[off(j)] = (gamma2[off(j - 1)] + driver2(noise, j, sigma2)) / (1.0 + epsilon);
    }
    // backward: g2(j-1) = (1 - eps sgn(j)) g2(j) - d2(j), starting at j = 0
    for j in (-m + 1..=0).rev() {
        let contraction = if j == 0 { 1.0 } else { 1.0 - epsilon };
        gamma2[off(j - 1)] = contraction * gamma2[off(j)] - driver2(noise, j, sigma2);
    }

    Ok(GammaProcesses {
        gamma1,
        gamma2,
        half_width: m,
        epsilon,
        theta: 1.0 / (1.0 + epsilon),
        vartheta: 1.0 - epsilon,
        sigma2,
    })
}

/// Streaming variant of [`gamma_build`] + [`GammaProcesses::normalized_sup`]
/// for very large windows: iterates the same recursions in the same order
/// without storing the sequences, returning
/// `(sup |g1|/sqrt(ln(e+|j|)), sup |g2|/sqrt(ln(e+|j|)))`.
///
/// Bitwise identical to the stored path (asserted by tests).
pub fn gamma_normalized_sup(
    zeta: impl Fn(i64) -> f64,
    sigma2: f64,
    epsilon: f64,
    half_width: i64,
) -> (f64, f64) {
    assert!(epsilon > 0.0 && epsilon <= 1.0);
    let m = half_width;
    let scale = |j: i64| (std::f64::consts::E + j.unsigned_abs() as f64).ln().sqrt();
    let d1 = |j: i64| -(zeta(j) + zeta(j + 1));
    let d2 = |j: i64| {
        zeta(j) + zeta(j - 1) + zeta(j) * (zeta(j + 1) - 2.0 * zeta(j) + zeta(j - 1)) + 2.0 * sigma2
    };

    let mut sup1: f64 = 0.0;
    let mut g = 0.0;
    for j in 0..m {
        let contraction = if j == 0 { 1.0 } else { 1.0 - epsilon };
        g = contraction * g + d1(j);
        sup1 = sup1.max(g.abs() / scale(j + 1));
    }
    g = 0.0;
    for j in (-m..=-1).rev() {
        g = (g - d1(j)) / (1.0 + epsilon);
        sup1 = sup1.max(g.abs() / scale(j));
    }

    let mut sup2: f64 = 0.0;
    g = 0.0;
    for j in 1..=m {
        g = (g + d2(j)) / (1.0 + epsilon);
        sup2 = sup2.max(g.abs() / scale(j));
    }
    g = 0.0;
    for j in (-m + 1..=0).rev() {
        let contraction = if j == 0 { 1.0 } else { 1.0 - epsilon };
        g = contraction * g - d2(j);
        sup2 = sup2.max(g.abs() / scale(j - 1));
    }
    (sup1, sup2)
}

/// The explicit AR(1) sum `chi(n) = sum_{k=0}^{n-1} theta^k z(n-k)`,
/// `chi(0) = 0`.  Independent oracle for [`gamma_build`]; each value is
/// summed term by term.
///
/// Terms with `theta^k < 1e-15` are dropped; the truncation error is below
/// `1e-15 max|z| / (1 - theta)`, orders of magnitude under every tolerance
/// used against this routine.
pub fn ar1_reference(z: &[f64], theta: f64) -> Vec<f64> {
    assert!(theta.abs() < 1.0);
    let kmax = if theta == 0.0 {
        0
    } else {
        ((-15.0 * std::f64::consts::LN_10) / theta.abs().ln()).ceil() as usize
    };
    let mut chi = vec![0.0; z.len()];
    for n in 1..z.len() {
        let kk = kmax.min(n - 1);
        let mut acc = 0.0;
        let mut pow = 1.0;
        for k in 0..=kk {
            acc += pow * z[n - k];
            pow *= theta;
        }
        chi[n] = acc;
    }
    chi
}

/// Horner evaluation of the same sum (`chi(n) = theta chi(n-1) + z(n)`),
/// O(n) overall; used by the Monte-Carlo runner where the term-by-term
/// form would be quadratic.  Agrees with [`ar1_reference`] to rounding.
pub fn ar1_recursive(z: &[f64], theta: f64) -> Vec<f64> {
    assert!(theta.abs() < 1.0);
    let mut chi = vec![0.0; z.len()];
    for n in 1..z.len() {
        chi[n] = theta * chi[n - 1] + z[n];
    }
    chi
}

// ---------------------------------------------------------------------------
// The approximator
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ExpansionOrder {
    /// Only the order-`eps^2` pair `(Q0, P0)`.
    Leading,
    /// All four orders, including the autoregressive corrections.
    Extended,
}

#[derive(Debug, Clone, Copy)]
pub struct ApproximatorConfig {
    pub epsilon: f64,
    /// Macroscopic horizon: the ansatz is meant for `|t| <= t0 / eps^3`.
    pub t0: f64,
    pub order: ExpansionOrder,
}

impl ApproximatorConfig {
    pub fn new(epsilon: f64, t0: f64, order: ExpansionOrder) -> Self {
        assert!(epsilon > 0.0 && epsilon < 1.0, "epsilon outside (0, 1)");
        assert!(t0 > 0.0);
        Self { epsilon, t0, order }
    }

    pub fn horizon(&self) -> f64 {
        self.t0 / self.epsilon.powi(3)
    }
}

/// Evaluable lattice ansatz over the window `[-M, M]`.
pub struct Approximator<'a> {
    config: ApproximatorConfig,
    family: &'a WaveFamily,
    noise: Option<&'a NoiseSequence>,
    gammas: Option<&'a GammaProcesses>,
    half_width: i64,
}

impl<'a> Approximator<'a> {
    pub fn leading(config: ApproximatorConfig, family: &'a WaveFamily, half_width: i64) -> Self {
        Self {
            config: ApproximatorConfig {
                order: ExpansionOrder::Leading,
                ..config
            },
            family,
            noise: None,
            gammas: None,
            half_width,
        }
    }

    pub fn extended(
        config: ApproximatorConfig,
        family: &'a WaveFamily,
        noise: &'a NoiseSequence,
        gammas: &'a GammaProcesses,
    ) -> Result<Self, LatticeError> {
        let m = gammas.half_width();
        let (lo, hi) = noise.window();
        if lo > -m - 1 || hi < m + 1 {
            return Err(LatticeError::NoiseWindow {
                have_lo: lo,
                have_hi: hi,
                need_lo: -m - 1,
                need_hi: m + 1,
            });
        }
        Ok(Self {
            config: ApproximatorConfig {
                order: ExpansionOrder::Extended,
                ..config
            },
            family,
            noise: Some(noise),
            gammas: Some(gammas),
            half_width: m,
        })
    }

    pub fn config(&self) -> &ApproximatorConfig {
        &self.config
    }

    pub fn half_width(&self) -> i64 {
        self.half_width
    }

    /// Assemble `(q, p)` at lattice time `t` over the window.
    pub fn evaluate(&self, t: f64) -> Result<(Vec<f64>, Vec<f64>), KdvError> {
        let n = (2 * self.half_width + 1) as usize;
        let mut q = vec![0.0; n];
        let mut p = vec![0.0; n];
        self.evaluate_into(t, &mut q, &mut p)?;
        Ok((q, p))
    }

    pub fn evaluate_into(&self, t: f64, q: &mut [f64], p: &mut [f64]) -> Result<(), KdvError> {
        let eps = self.config.epsilon;
        let slow_t = eps.powi(3) * t;
        let sigma2 = self.family.sigma2();
        let m = self.half_width;
        match self.config.order {
            ExpansionOrder::Leading => {
                for (i, j) in (-m..=m).enumerate() {
                    let a = self.family.a_jet(eps * (j as f64 - t), slow_t)?;
                    let b = self.family.b_jet(eps * (j as f64 + t), slow_t)?;
                    q[i] = eps * eps * (a.value + b.value);
                    p[i] = eps * eps * (-a.value + b.value);
                }
            }
            ExpansionOrder::Extended => {
                let noise = self.noise.expect("extended order carries noise");
                let gammas = self.gammas.expect("extended order carries gammas");
                for (i, j) in (-m..=m).enumerate() {
                    let a = self.family.a_jet(eps * (j as f64 - t), slow_t)?;
                    let b = self.family.b_jet(eps * (j as f64 + t), slow_t)?;
                    let q0 = a.value + b.value;
                    let p0 = -a.value + b.value;
                    let zeta = noise.get(j);
                    let dzeta = noise.forward_diff(j);
                    let cor = correctors(&a, &b, sigma2);

                    let dx_q0 = a.d1 + b.d1; // also dtau P0
                    let q1 = (0.5 + dzeta) * dx_q0;
                    let q2 = cor.a2 + cor.b2 - zeta * (a.d2 + b.d2);
                    let p2 = -cor.a2 + cor.b2 + zeta * (-a.d2 + b.d2);
                    let d3_q0 = a.d3 + b.d3;
                    let d3_p0 = -a.d3 + b.d3;
                    let dt_p0 = -a.dt + b.dt;
                    let dtau_a2 = -cor.a2_w + cor.a2_l;
                    let dtau_b2 = -cor.b2_w + cor.b2_l;
                    let q3 = (gammas.gamma2(j) + 0.5 * zeta) * d3_q0 - dzeta * 2.0 * q0 * dx_q0
                        + dzeta * (dt_p0 - dtau_a2 + dtau_b2);
                    let p3 = gammas.gamma1(j) * d3_p0;

                    q[i] = eps * eps * (q0 + eps * (q1 + eps * (q2 + eps * q3)));
                    p[i] = eps * eps * (p0 + eps * eps * (p2 + eps * p3));
                }
            }
        }
        Ok(())
    }

    /// Residual norms of the ansatz under the lattice field at time `t`.
    pub fn residual_norms(
        &self,
        mass: &MassProfile,
        t: f64,
        h: f64,
    ) -> Result<ResidualNorms, KdvError> {
        residual_norms_of(|s| self.evaluate(s), mass, t, h)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ResidualNorms {
    pub res1_l2: f64,
    pub res2_l2: f64,
}

/// `Res1 = d+ p - dq/dt`, `Res2 = d- V'(q) / m - dp/dt` in the discrete l2
/// norm, with `d/dt` taken as a centered difference of width `h` of the
/// supplied evaluator.  Generic so that tests can feed exact trajectories.
pub fn residual_norms_of<F>(
    pair_at: F,
    mass: &MassProfile,
    t: f64,
    h: f64,
) -> Result<ResidualNorms, KdvError>
where
    F: Fn(f64) -> Result<(Vec<f64>, Vec<f64>), KdvError>,
{
    assert!(h > 0.0);
    let (q0, p0) = pair_at(t)?;
    let (qp, pp) = pair_at(t + h)?;
    let (qm, pm) = pair_at(t - h)?;
    let n = q0.len();
    assert!(n == mass.n_sites() && p0.len() == n);
    let inv_m = mass.inv_values();
    let mut res1_sq = 0.0;
    let mut res2_sq = 0.0;
    for j in 0..n {
        let dplus_p = p0[(j + 1) % n] - p0[j];
        let dq_dt = (qp[j] - qm[j]) / (2.0 * h);
        let r1 = dplus_p - dq_dt;
        res1_sq += r1 * r1;

        let dminus_force = spring_force(q0[j]) - spring_force(q0[(j + n - 1) % n]);
        let dp_dt = (pp[j] - pm[j]) / (2.0 * h);
        let r2 = dminus_force * inv_m[j] - dp_dt;
        res2_sq += r2 * r2;
    }
    Ok(ResidualNorms {
        res1_l2: res1_sq.sqrt(),
        res2_l2: res2_sq.sqrt(),
    })
}

/// Size and residual diagnostics over a set of sampled times (the discrete
/// surrogate for suprema over the long horizon).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AlphaBeta {
    /// `sup_t |q, p|_l2`
    pub alpha1: f64,
    /// `sup_t |dq/dt|_linf`
    pub alpha2: f64,
    /// `sup_t (|Res1|_l2 + |Res2|_l2)`
    pub alpha3: f64,
    /// `inf_t |q, p|_l2`
    pub beta1: f64,
}

pub fn alpha_beta(
    approx: &Approximator<'_>,
    mass: &MassProfile,
    times: &[f64],
    h: f64,
) -> Result<AlphaBeta, KdvError> {
    assert!(!times.is_empty());
    let n = mass.n_sites();
    let inv_m = mass.inv_values();
    let mut alpha1: f64 = 0.0;
    let mut alpha2: f64 = 0.0;
    let mut alpha3: f64 = 0.0;
    let mut beta1: f64 = f64::INFINITY;
    for &t in times {
        let (q0, p0) = approx.evaluate(t)?;
        let (qp, pp) = approx.evaluate(t + h)?;
        let (qm, pm) = approx.evaluate(t - h)?;
        let size = pair_norms(&q0, &p0).l2;
        alpha1 = alpha1.max(size);
        beta1 = beta1.min(size);

        let mut dq_linf: f64 = 0.0;
        let mut res1_sq = 0.0;
        let mut res2_sq = 0.0;
        for j in 0..n {
            let dq_dt = (qp[j] - qm[j]) / (2.0 * h);
            dq_linf = dq_linf.max(dq_dt.abs());
            let r1 = (p0[(j + 1) % n] - p0[j]) - dq_dt;
            res1_sq += r1 * r1;
            let r2 = (spring_force(q0[j]) - spring_force(q0[(j + n - 1) % n])) * inv_m[j]
                - (pp[j] - pm[j]) / (2.0 * h);
            res2_sq += r2 * r2;
        }
        alpha2 = alpha2.max(dq_linf);
        alpha3 = alpha3.max(res1_sq.sqrt() + res2_sq.sqrt());
    }
    Ok(AlphaBeta {
        alpha1,
        alpha2,
        alpha3,
        beta1,
    })
}

// ---------------------------------------------------------------------------
// Long-wave scaling diagnostics
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScalingRow {
    pub epsilon: f64,
    /// `sqrt(eps) * | f(.) F(eps .) |_l2`
    pub scaled_l2: f64,
    /// same scaling applied to `E0+` of the product
    pub scaled_e0_plus: f64,
    /// same scaling applied to `E0-` of the product
    pub scaled_e0_minus: f64,
}

/// Check the long-wave l2 scaling: for bounded `f` and smooth decaying `F`
/// the scaled norms should stay O(1) across the sweep.  `E0+-` are the
/// first-order truncation remainders of the total difference operators,
/// evaluated directly:
///
/// ```text
/// E0+ u(j) = f(j+1) (F(eps j + eps) - F(eps j)) / eps
/// E0- u(j) = f(j-1) (F(eps j) - F(eps j - eps)) / eps
/// ```
pub fn lwa_scaling_check(
    f: impl Fn(i64) -> f64,
    profile: impl Fn(f64) -> f64,
    epsilons: &[f64],
    span: f64,
) -> Vec<ScalingRow> {
    epsilons
        .iter()
        .map(|&eps| {
            let m = (span / eps).ceil() as i64;
            let mut u_sq = 0.0;
            let mut ep_sq = 0.0;
            let mut em_sq = 0.0;
            for j in -m..=m {
                let x = eps * j as f64;
                let u = f(j) * profile(x);
                u_sq += u * u;
                let e_plus = f(j + 1) * (profile(x + eps) - profile(x)) / eps;
                ep_sq += e_plus * e_plus;
                let e_minus = f(j - 1) * (profile(x) - profile(x - eps)) / eps;
                em_sq += e_minus * e_minus;
            }
            ScalingRow {
                epsilon: eps,
                scaled_l2: (eps * u_sq).sqrt(),
                scaled_e0_plus: (eps * ep_sq).sqrt(),
                scaled_e0_minus: (eps * em_sq).sqrt(),
            }
        })
        .collect()
}

/// Convenience: `sup / inf` of one scaled column.
pub fn ratio_spread(values: impl IntoIterator<Item = f64>) -> f64 {
    let mut lo = f64::INFINITY;
    let mut hi = 0.0f64;
    for v in values {
        lo = lo.min(v);
        hi = hi.max(v);
    }
    hi / lo
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kdv::{soliton_wavenumber, WaveComponent, WaveFamily};
    use crate::lattice::{make_mass, MassSpec};

    fn window_noise(seed: u64, m: i64) -> NoiseSequence {
        NoiseSequence::sample_default(seed, -(m + 2)..=(m + 2))
    }

    #[test]
    fn gamma_of_zero_noise_is_zero() {
        let noise = NoiseSequence::zeros(-22..=22);
        let g = gamma_build(&noise, 0.25, 20).unwrap();
        for j in -20..=20 {
            assert_eq!(g.gamma1(j), 0.0);
            assert_eq!(g.gamma2(j), 0.0);
        }
    }

    #[test]
    fn gamma2_hand_value() {
        // zeta(0) = 0.1, zeta(1) = -0.1, sigma^2 = 0, eps = 1:
        // d2(1) = -0.1 + 0.1 + (-0.1)(0 - 2(-0.1) + 0.1) = -0.03
        // g2(1) = d2(1) / 2 = -0.015
        let mut vals = vec![0.0; 13];
        vals[6] = 0.1;
        vals[7] = -0.1;
        let noise = NoiseSequence::from_values(vals, -6, 0.0);
        let g = gamma_build(&noise, 1.0, 4).unwrap();
        assert!((g.gamma2(1) + 0.015).abs() < 1e-16, "{}", g.gamma2(1));
    }

    #[test]
    fn recursions_hold_exactly_on_window() {
        for seed in [1u64, 7, 42] {
            for &eps in &[0.5, 0.25, 0.0625] {
                let m = 60;
                let noise = window_noise(seed, m);
                let g = gamma_build(&noise, eps, m).unwrap();
                let sgn = |j: i64| (j.signum()) as f64;
                for j in -m..m {
                    let lhs = g.gamma1(j + 1) - g.gamma1(j);
                    let rhs = -eps * sgn(j) * g.gamma1(j) + driver1(&noise, j);
                    assert!(
                        (lhs - rhs).abs() <= 1e-14 * (1.0 + g.gamma1(j).abs()),
                        "gamma1 recursion off at j = {j}"
                    );
                }
                for j in (-m + 1)..=m {
                    let lhs = g.gamma2(j) - g.gamma2(j - 1);
                    let rhs = -eps * sgn(j) * g.gamma2(j) + driver2(&noise, j, noise.sigma2);
                    assert!(
                        (lhs - rhs).abs() <= 1e-13 * (1.0 + g.gamma2(j).abs()),
                        "gamma2 recursion off at j = {j}"
                    );
                }
            }
        }
    }

    #[test]
    fn gamma_matches_explicit_ar1_sums() {
        let m = 400;
        let eps = 0.125;
        let noise = window_noise(11, m);
        let g = gamma_build(&noise, eps, m).unwrap();
        let theta = 1.0 / (1.0 + eps);
        let vartheta = 1.0 - eps;

        // forward g1 is an AR(1) sum with factor (1 - eps)
        let z1: Vec<f64> = (0..=m).map(|i| driver1(&noise, i - 1)).collect();
        let chi = ar1_reference(&z1, vartheta);
        for j in 1..=m {
            let rel = (g.gamma1(j) - chi[j as usize]).abs() / g.gamma1(j).abs().max(1e-300);
            assert!(rel < 1e-12, "gamma1 fwd at {j}: rel {rel:e}");
        }
        // backward g1: theta * AR(1) sum of zeta(-i) + zeta(-i+1)
        let zb: Vec<f64> = (0..=m).map(|i| -driver1(&noise, -i)).collect();
        let chib = ar1_reference(&zb, theta);
        for l in 1..=m {
            let expect = theta * chib[l as usize];
            let rel = (g.gamma1(-l) - expect).abs() / expect.abs().max(1e-300);
            assert!(rel < 1e-12, "gamma1 bwd at {l}: rel {rel:e}");
        }
        // forward g2: theta * AR(1) sum of d2
        let z2: Vec<f64> = (0..=m).map(|i| driver2(&noise, i, noise.sigma2)).collect();
        let chi2 = ar1_reference(&z2, theta);
        for j in 1..=m {
            let expect = theta * chi2[j as usize];
            let rel = (g.gamma2(j) - expect).abs() / expect.abs().max(1e-300);
            assert!(rel < 1e-12, "gamma2 fwd at {j}: rel {rel:e}");
        }
        // backward g2: -AR(1) sum of d2(1 - i) with factor (1 - eps)
        let z2b: Vec<f64> = (0..=m)
            .map(|i| -driver2(&noise, 1 - i, noise.sigma2))
            .collect();
        let chi2b = ar1_reference(&z2b, vartheta);
        for l in 1..=m {
            let expect = chi2b[l as usize];
            let rel = (g.gamma2(-l) - expect).abs() / expect.abs().max(1e-300);
            assert!(rel < 1e-12, "gamma2 bwd at {l}: rel {rel:e}");
        }
    }

    #[test]
    fn streamed_sup_matches_stored_path_bitwise() {
        for seed in [2u64, 31] {
            for &eps in &[0.5, 0.0625] {
                let m = 300;
                let noise = window_noise(seed, m);
                let g = gamma_build(&noise, eps, m).unwrap();
                let stored = g.normalized_sup();
                let streamed = gamma_normalized_sup(|j| noise.get(j), noise.sigma2, eps, m);
                assert_eq!(stored.0, streamed.0);
                assert_eq!(stored.1, streamed.1);
            }
        }
    }

    #[test]
    fn ar1_reference_simple_cases() {
        let z = vec![0.5, -1.0, 2.0, 0.25];
        let chi = ar1_reference(&z, 0.0);
        assert_eq!(chi, vec![0.0, -1.0, 2.0, 0.25]);

        let ones = vec![1.0; 30];
        let chi = ar1_reference(&ones, 0.5);
        for n in 1..30 {
            let expect = 2.0 * (1.0 - 0.5f64.powi(n as i32));
            assert!((chi[n] - expect).abs() < 1e-12);
        }

        // explicit sum agrees with the Horner form
        let rng = crate::rng::CounterRng::new(5);
        let z: Vec<f64> = (0..2000).map(|i| rng.symmetric_f64(i, 0.125)).collect();
        for theta in [0.7, 0.99, -0.4] {
            let chi = ar1_reference(&z, theta);
            let rec = ar1_recursive(&z, theta);
            for n in 0..z.len() {
                assert!((chi[n] - rec[n]).abs() < 1e-12, "theta {theta}, n {n}");
            }
        }
    }

    #[test]
    fn evaluate_zero_family_is_zero() {
        let fam = WaveFamily::zero(0.0);
        let cfg = ApproximatorConfig::new(0.25, 3.0, ExpansionOrder::Extended);
        let m = 30;
        let noise = window_noise(3, m);
        let g = gamma_build(&noise, 0.25, m).unwrap();
        let approx = Approximator::extended(cfg, &fam, &noise, &g).unwrap();
        let (q, p) = approx.evaluate(10.0).unwrap();
        assert!(q.iter().chain(&p).all(|&x| x == 0.0));
    }

    #[test]
    fn leading_order_reproduces_initial_data() {
        let sigma2 = 1.0 / 192.0;
        let fam = WaveFamily::soliton(sigma2);
        let eps = 0.25;
        let cfg = ApproximatorConfig::new(eps, 3.0, ExpansionOrder::Leading);
        let m = 80;
        let approx = Approximator::leading(cfg, &fam, m);
        let (q, p) = approx.evaluate(0.0).unwrap();
        let k = soliton_wavenumber(sigma2);
        for (i, j) in (-m..=m).enumerate() {
            // mirror the jet's operation order exactly
            let x = k * (eps * (j as f64 - 0.0));
            let e = (-x.abs()).exp();
            let sch = 2.0 * e / (1.0 + e * e);
            let s = sch * sch;
            let phi = if x.abs() > 40.0 { 0.0 } else { 3.0 * s };
            assert_eq!(q[i], eps * eps * phi);
            assert_eq!(p[i], eps * eps * -phi);
        }
    }

    /// Closed constant-mass expansion (no disorder terms), assembled
    /// independently of `evaluate`.
    fn constant_mass_oracle(fam: &WaveFamily, eps: f64, m: i64, t: f64) -> (Vec<f64>, Vec<f64>) {
        let slow_t = eps.powi(3) * t;
        let mut q = Vec::new();
        let mut p = Vec::new();
        for j in -m..=m {
            let a = fam.a_jet(eps * (j as f64 - t), slow_t).unwrap();
            let b = fam.b_jet(eps * (j as f64 + t), slow_t).unwrap();
            let cor = correctors(&a, &b, fam.sigma2());
            let q0 = a.value + b.value;
            let p0 = -a.value + b.value;
            let q1 = 0.5 * (a.d1 + b.d1);
            let q2 = cor.a2 + cor.b2;
            let p2 = -cor.a2 + cor.b2;
            q.push(eps * eps * (q0 + eps * (q1 + eps * q2)));
            p.push(eps * eps * (p0 + eps * eps * p2));
        }
        (q, p)
    }

    #[test]
    fn extended_with_zero_noise_reduces_to_constant_mass_expansion() {
        // two-sided family so every corrector term is exercised
        let k = soliton_wavenumber(0.01);
        let fam = WaveFamily::from_components(
            WaveComponent::Soliton(crate::kdv::SolitonWave { k }),
            WaveComponent::Soliton(crate::kdv::SolitonWave { k: 0.8 * k }),
            0.01,
        );
        let eps = 0.25;
        let m = 60;
        let noise = NoiseSequence::zeros(-(m + 2)..=(m + 2));
        let g = gamma_build(&noise, eps, m).unwrap();
        let cfg = ApproximatorConfig::new(eps, 3.0, ExpansionOrder::Extended);
        let approx = Approximator::extended(cfg, &fam, &noise, &g).unwrap();
        for &t in &[0.0, 1.7, 12.0] {
            let (q, p) = approx.evaluate(t).unwrap();
            let (qo, po) = constant_mass_oracle(&fam, eps, m, t);
            for i in 0..q.len() {
                assert!(
                    (q[i] - qo[i]).abs() <= 4.0 * f64::EPSILON * qo[i].abs().max(1e-300)
                        || q[i] == qo[i],
                    "q mismatch at {i}: {} vs {}",
                    q[i],
                    qo[i]
                );
                assert!(
                    (p[i] - po[i]).abs() <= 4.0 * f64::EPSILON * po[i].abs().max(1e-300)
                        || p[i] == po[i],
                    "p mismatch at {i}"
                );
            }
        }
    }

    #[test]
    fn residuals_of_zero_ansatz_vanish() {
        let mass = make_mass(MassSpec::Constant, 10).unwrap();
        let r =
            residual_norms_of(|_| Ok((vec![0.0; 21], vec![0.0; 21])), &mass, 1.0, 1e-2).unwrap();
        assert_eq!(r.res1_l2, 0.0);
        assert_eq!(r.res2_l2, 0.0);
    }

    #[test]
    fn alpha_beta_of_zero_family_is_zero() {
        let fam = WaveFamily::zero(0.0);
        let m = 20;
        let noise = window_noise(4, m);
        let g = gamma_build(&noise, 0.25, m).unwrap();
        let mass = make_mass(MassSpec::Transparent(&noise), m).unwrap();
        let cfg = ApproximatorConfig::new(0.25, 3.0, ExpansionOrder::Extended);
        let approx = Approximator::extended(cfg, &fam, &noise, &g).unwrap();
        let ab = alpha_beta(&approx, &mass, &[0.0, 5.0, 11.0], 1e-2).unwrap();
        assert_eq!(ab.alpha1, 0.0);
        assert_eq!(ab.alpha2, 0.0);
        assert_eq!(ab.alpha3, 0.0);
        assert_eq!(ab.beta1, 0.0);
    }

    #[test]
    fn residual_centered_difference_is_second_order() {
        let sigma2 = 1.0 / 192.0;
        let fam = WaveFamily::soliton(sigma2);
        let eps = 0.25;
        let m = 200;
        let noise = window_noise(17, m);
        let g = gamma_build(&noise, eps, m).unwrap();
        let mass = make_mass(MassSpec::Transparent(&noise), m).unwrap();
        let cfg = ApproximatorConfig::new(eps, 3.0, ExpansionOrder::Extended);
        let approx = Approximator::extended(cfg, &fam, &noise, &g).unwrap();
        let t = 7.0;

        // the centered time difference itself must converge at second
        // order: successive halvings of h change it by a factor ~4 less
        let diff_at = |h: f64| -> Vec<f64> {
            let (qp, _) = approx.evaluate(t + h).unwrap();
            let (qm, _) = approx.evaluate(t - h).unwrap();
            qp.iter()
                .zip(&qm)
                .map(|(a, b)| (a - b) / (2.0 * h))
                .collect()
        };
        let l2 = |v: &[f64]| v.iter().map(|x| x * x).sum::<f64>().sqrt();
        let d1 = diff_at(0.08);
        let d2 = diff_at(0.04);
        let d3 = diff_at(0.02);
        let e1: Vec<f64> = d1.iter().zip(&d2).map(|(a, b)| a - b).collect();
        let e2: Vec<f64> = d2.iter().zip(&d3).map(|(a, b)| a - b).collect();
        let ratio = l2(&e1) / l2(&e2);
        assert!(
            (3.3..4.7).contains(&ratio),
            "centered-difference order ratio {ratio}"
        );

        // and the reported norms agree to O(h^2)
        let r_h = approx.residual_norms(&mass, t, 0.04).unwrap();
        let r_h2 = approx.residual_norms(&mass, t, 0.02).unwrap();
        assert!((r_h.res1_l2 - r_h2.res1_l2).abs() <= 1.0 * 0.04f64.powi(2));
        assert!((r_h.res2_l2 - r_h2.res2_l2).abs() <= 1.0 * 0.04f64.powi(2));
    }

    #[test]
    fn residual_order_discriminates_all_expansion_terms() {
        // The t = 0 residual on a window riding the wave drops like
        // eps^5 sqrt|ln eps| only if every order of the expansion cancels.
        // A defect in the eps^(n+2) term leaves an l2 residual of order
        // eps^(n+1.5), so over two octaves the ratio falls from ~830 to
        // 512 (broken fifth order) or 128 (broken fourth order).  Seeds
        // are fixed, so the measured ratio is deterministic.
        let alpha3_at_zero = |eps: f64, seed: u64| -> f64 {
            let m = (4.0 / eps).ceil() as i64;
            let noise = NoiseSequence::sample_default(seed, -(m + 2)..=(m + 2));
            let mass = make_mass(MassSpec::Transparent(&noise), m).unwrap();
            let fam = WaveFamily::soliton(noise.sigma2);
            let g = gamma_build(&noise, eps, m).unwrap();
            let ext = Approximator::extended(
                ApproximatorConfig::new(eps, 3.0, ExpansionOrder::Extended),
                &fam,
                &noise,
                &g,
            )
            .unwrap();
            alpha_beta(&ext, &mass, &[0.0], 1e-3).unwrap().alpha3
        };
        let median_of = |eps: f64| -> f64 {
            let mut v: Vec<f64> = (0..9).map(|s| alpha3_at_zero(eps, s)).collect();
            v.sort_by(|a, b| a.partial_cmp(b).unwrap());
            v[4]
        };
        let ratio = median_of(0.25) / median_of(0.0625);
        assert!(
            (650.0..1050.0).contains(&ratio),
            "two-octave residual ratio {ratio}, expected ~830 for a full cancellation"
        );
    }

    #[test]
    fn scaling_check_riemann_limit_and_zero() {
        let rows = lwa_scaling_check(
            |_| 1.0,
            |x| (-x * x).exp(),
            &[0.25, 0.125, 0.0625, 0.03125],
            14.0,
        );
        // eps * sum F(eps j)^2 -> int F^2 = sqrt(pi/2)
        let target = (std::f64::consts::PI / 2.0).sqrt().sqrt();
        for row in &rows {
            assert!((row.scaled_l2 - target).abs() < 0.02, "{row:?}");
        }

        let zero_rows = lwa_scaling_check(|_| 0.0, |x| (-x * x).exp(), &[0.25], 10.0);
        assert_eq!(zero_rows[0].scaled_l2, 0.0);
        assert_eq!(zero_rows[0].scaled_e0_plus, 0.0);
    }

    #[test]
    fn scaling_check_noise_times_sech2_is_flat() {
        let noise = NoiseSequence::sample_default(23, -700..=700);
        let sech2 = |x: f64| {
            let e = (-x.abs()).exp();
            let s = 2.0 * e / (1.0 + e * e);
            s * s
        };
        let epsilons = [0.25, 0.125, 0.0625, 0.03125];
        let rows = lwa_scaling_check(|j| noise.forward_diff(j), sech2, &epsilons, 16.0);
        let spread = ratio_spread(rows.iter().map(|r| r.scaled_l2));
        assert!(spread < 2.0, "scaled l2 spread {spread}");
        let spread_e = ratio_spread(rows.iter().map(|r| r.scaled_e0_plus));
        assert!(spread_e < 2.0, "scaled E0+ spread {spread_e}");
    }
}
