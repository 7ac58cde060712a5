//! Periodic Fourier machinery: transforms, spectral derivatives and the
//! spectral antiderivative with an explicit zero-mode ramp.

use rustfft::num_complex::Complex64;
use rustfft::{Fft, FftPlanner};
use std::f64::consts::TAU;
use std::sync::Arc;

/// Uniform periodic grid `x_i = x0 + i L / n` with cached FFT plans and
/// wavenumbers in transform order.
pub struct SpectralGrid {
    pub n: usize,
    pub x0: f64,
    pub length: f64,
    fwd: Arc<dyn Fft<f64>>,
    inv: Arc<dyn Fft<f64>>,
    k: Vec<f64>,
}

impl SpectralGrid {
    pub fn new(n: usize, x0: f64, length: f64) -> Self {
        assert!(
            n >= 8 && n.is_power_of_two(),
            "mode count must be a power of two >= 8"
        );
        assert!(length > 0.0);
        let mut planner = FftPlanner::new();
        let fwd = planner.plan_fft_forward(n);
        let inv = planner.plan_fft_inverse(n);
        let k = (0..n)
            .map(|i| {
                let m = if i <= n / 2 {
                    i as f64
                } else {
                    i as f64 - n as f64
                };
                TAU * m / length
            })
            .collect();
        Self {
            n,
            x0,
            length,
            fwd,
            inv,
            k,
        }
    }

    pub fn dx(&self) -> f64 {
        self.length / self.n as f64
    }

    pub fn x(&self, i: usize) -> f64 {
        self.x0 + i as f64 * self.dx()
    }

    pub fn wavenumbers(&self) -> &[f64] {
        &self.k
    }

    /// Forward transform of real samples (unnormalized).
    pub fn forward(&self, real: &[f64]) -> Vec<Complex64> {
        assert_eq!(real.len(), self.n);
        let mut buf: Vec<Complex64> = real.iter().map(|&v| Complex64::new(v, 0.0)).collect();
        self.fwd.process(&mut buf);
        buf
    }

    /// Inverse transform to real samples (applies the 1/n normalization).
    pub fn inverse_real(&self, spec: &[Complex64]) -> Vec<f64> {
        let mut buf = spec.to_vec();
        self.inv.process(&mut buf);
        let scale = 1.0 / self.n as f64;
        buf.iter().map(|c| c.re * scale).collect()
    }

    /// Multiply by `(ik)^order` in place.  The Nyquist mode is zeroed for
    /// odd orders (its derivative has no consistent sign on a real grid).
    pub fn apply_derivative(&self, spec: &mut [Complex64], order: u32) {
        let i = Complex64::new(0.0, 1.0);
        for (m, c) in spec.iter_mut().enumerate() {
            let ik = i * self.k[m];
            *c *= ik.powu(order);
        }
        if order % 2 == 1 {
            spec[self.n / 2] = Complex64::new(0.0, 0.0);
        }
    }

    /// Spectral derivative of given order of real samples.
    pub fn derivative(&self, real: &[f64], order: u32) -> Vec<f64> {
        let mut spec = self.forward(real);
        self.apply_derivative(&mut spec, order);
        self.inverse_real(&spec)
    }

    /// Antiderivative based at `x = 0`: the mean-free part is integrated
    /// spectrally (`/(ik)`), the zero mode contributes the explicit ramp
    /// `mean * x`, and the whole thing is pinned to vanish at the origin.
    /// The origin must be a grid point.
    pub fn antiderivative(&self, real: &[f64]) -> Vec<f64> {
        let spec = self.forward(real);
        let mean = spec[0].re / self.n as f64;
        let mut anti = spec.clone();
        anti[0] = Complex64::new(0.0, 0.0);
        for m in 1..self.n {
            anti[m] /= Complex64::new(0.0, self.k[m]);
        }
        // Nyquist: 1/(ik) of a real cosine mode is a real sine mode, which
        // samples to zero on the grid; dropping it is exact at the nodes.
        anti[self.n / 2] = Complex64::new(0.0, 0.0);
        let periodic = self.inverse_real(&anti);
        let i0 = self.origin_index();
        let p0 = periodic[i0];
        (0..self.n)
            .map(|i| periodic[i] - p0 + mean * self.x(i))
            .collect()
    }

    pub(crate) fn origin_index(&self) -> usize {
        let g = -self.x0 / self.dx();
        let i0 = g.round() as i64;
        assert!(
            (g - i0 as f64).abs() < 1e-9 && (0..self.n as i64).contains(&i0),
            "origin must be a grid point"
        );
        i0 as usize
    }

    /// `max |spec| over the top third of wavenumbers / max |spec|`; the
    /// aliasing monitor.
    pub fn top_third_ratio(&self, spec: &[Complex64]) -> f64 {
        let n = self.n;
        let cut = n / 3;
        let mut peak: f64 = 0.0;
        let mut top: f64 = 0.0;
        for (i, c) in spec.iter().enumerate() {
            let m = if i <= n / 2 { i } else { n - i };
            let mag = c.norm_sqr();
            peak = peak.max(mag);
            if m >= cut {
                top = top.max(mag);
            }
        }
        if peak == 0.0 {
            0.0
        } else {
            (top / peak).sqrt()
        }
    }
}
