//! Grid-backed wave components: snapshot storage produced by the
//! pseudospectral evolver, sixth-order local interpolation in space, and
//! an optional CSV dump of the profile arrays.

use super::{KdvError, RawJet};
use std::io::Write;
use std::path::Path;

/// One stored slow-time slice: the field, its first three spectral
/// derivatives and the based antiderivative, all on the grid.
#[derive(Debug, Clone)]
pub struct GridSnapshot {
    pub value: Vec<f64>,
    pub d1: Vec<f64>,
    pub d2: Vec<f64>,
    pub d3: Vec<f64>,
    pub anti: Vec<f64>,
}

/// A wave component computed on a periodic grid at uniformly spaced slow
/// times, evaluated as a decayed profile on the whole line.
///
/// Spatial evaluation between nodes uses six-point Lagrange interpolation
/// (error `O(dx^6)`, far below the spectral resolution); outside the
/// window the profile is zero-extended.  Slow-time evaluation snaps to a
/// stored slice when within 1e-9 and otherwise blends the two bracketing
/// slices linearly.
#[derive(Debug, Clone)]
pub struct GridComponent {
    pub x0: f64,
    pub dx: f64,
    pub length: f64,
    pub t_start: f64,
    pub dt_snap: f64,
    pub snaps: Vec<GridSnapshot>,
}

impl GridComponent {
    pub fn n(&self) -> usize {
        self.snaps[0].value.len()
    }

    pub fn t_end(&self) -> f64 {
        self.t_start + (self.snaps.len() - 1) as f64 * self.dt_snap
    }

    fn snapshot_weight(&self, t: f64) -> Result<(usize, usize, f64), KdvError> {
        if self.snaps.len() == 1 {
            if (t - self.t_start).abs() <= 1e-9 * t.abs().max(1.0) {
                return Ok((0, 0, 0.0));
            }
            return Err(KdvError::TimeOutsideRange { t });
        }
        let s = (t - self.t_start) / self.dt_snap;
        let nearest = s.round();
        if (s - nearest).abs() * self.dt_snap <= 1e-9 * t.abs().max(1.0) {
            let i = nearest as i64;
            if i < 0 || i >= self.snaps.len() as i64 {
                return Err(KdvError::TimeOutsideRange { t });
            }
            return Ok((i as usize, i as usize, 0.0));
        }
        if s < 0.0 || s > (self.snaps.len() - 1) as f64 {
            return Err(KdvError::TimeOutsideRange { t });
        }
        let lo = s.floor() as usize;
        Ok((lo, lo + 1, s - lo as f64))
    }

    pub(super) fn raw_jet(&self, x: f64, t: f64) -> Result<RawJet, KdvError> {
        let (lo, hi, blend) = self.snapshot_weight(t)?;
        let n = self.n();
        // The stored field represents a decayed profile on the line, so
        // outside the window the value and derivatives are zero and the
        // antiderivative freezes at its edge value.  A periodic wrap here
        // would hallucinate far-field copies of the wave on the (much
        // wider) lattice window.
        let u = (x - self.x0) / self.dx;
        if u < 0.0 || u > (n - 1) as f64 {
            let edge = |snap: &GridSnapshot| {
                if u < 0.0 {
                    snap.anti[0]
                } else {
                    snap.anti[n - 1]
                }
            };
            let a = edge(&self.snaps[lo]);
            let anti = if lo == hi {
                a
            } else {
                (1.0 - blend) * a + blend * edge(&self.snaps[hi])
            };
            return Ok(RawJet {
                anti,
                ..RawJet::default()
            });
        }
        let i0 = (u.floor() as usize).min(n - 1);
        let s = u - i0 as f64;
        let w = lagrange6(s);
        let idx = |off: i64| -> usize { (i0 as i64 + off).clamp(0, n as i64 - 1) as usize };
        let nodes: [usize; 6] = [idx(-2), idx(-1), idx(0), idx(1), idx(2), idx(3)];
        let gather = |arr: &[f64]| -> f64 {
            nodes
                .iter()
                .zip(&w)
                .map(|(&i, &wi)| wi * arr[i])
                .sum::<f64>()
        };
        let sample = |snap: &GridSnapshot| RawJet {
            value: gather(&snap.value),
            d1: gather(&snap.d1),
            d2: gather(&snap.d2),
            d3: gather(&snap.d3),
            anti: gather(&snap.anti),
        };
        let a = sample(&self.snaps[lo]);
        if lo == hi {
            return Ok(a);
        }
        let b = sample(&self.snaps[hi]);
        let mix = |x: f64, y: f64| (1.0 - blend) * x + blend * y;
        Ok(RawJet {
            value: mix(a.value, b.value),
            d1: mix(a.d1, b.d1),
            d2: mix(a.d2, b.d2),
            d3: mix(a.d3, b.d3),
            anti: mix(a.anti, b.anti),
        })
    }

    /// Snapshot index whose slow time is nearest to `t`.
    pub fn nearest_snapshot(&self, t: f64) -> usize {
        if self.snaps.len() == 1 {
            return 0;
        }
        let s = ((t - self.t_start) / self.dt_snap).round();
        (s.max(0.0) as usize).min(self.snaps.len() - 1)
    }

    pub fn snapshot(&self, i: usize) -> &GridSnapshot {
        &self.snaps[i]
    }
}

/// Six-point Lagrange weights on nodes {-2,...,3} at offset `s in [0, 1)`.
fn lagrange6(s: f64) -> [f64; 6] {
    const NODES: [f64; 6] = [-2.0, -1.0, 0.0, 1.0, 2.0, 3.0];
    let mut w = [0.0; 6];
    for (m, wm) in w.iter_mut().enumerate() {
        let mut prod = 1.0;
        for r in 0..6 {
            if r != m {
                prod *= (s - NODES[r]) / (NODES[m] - NODES[r]);
            }
        }
        *wm = prod;
    }
    w
}

/// Dump one snapshot as CSV with columns `w, A, A_w, A_ww, A_www`
/// (debugging aid).
pub fn write_profile_csv(component: &GridComponent, t: f64, path: &Path) -> std::io::Result<()> {
    let snap = component.snapshot(component.nearest_snapshot(t));
    let mut out = String::from("w,A,A_w,A_ww,A_www\n");
    for i in 0..component.n() {
        let x = component.x0 + i as f64 * component.dx;
        out.push_str(&format!(
            "{:.16e},{:.16e},{:.16e},{:.16e},{:.16e}\n",
            x, snap.value[i], snap.d1[i], snap.d2[i], snap.d3[i]
        ));
    }
    let mut file = std::fs::File::create(path)?;
    file.write_all(out.as_bytes())
}
