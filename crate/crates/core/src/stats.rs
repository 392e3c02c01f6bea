//! Mean and variance of the energy and gradient norms of Burgers chaos
//! states, and relative-error series for model comparison.

use std::f64::consts::PI;
use std::io::Write;

use num_complex::Complex64;

use crate::error::{MzError, Result};
use crate::galerkin::BurgersSystem;
use crate::integrate::Trajectory;
use crate::polybasis::QuadTensor;
use crate::scalar::Scalar;

/// Reference magnitudes below this give an undefined relative error.
pub const RELATIVE_ERROR_FLOOR: f64 = 1e-13;
/// Negative variances down to this are round-off and clipped to zero.
const CLIP: f64 = -1e-12;
/// Anything more negative is reported.
const INCONSISTENT: f64 = -1e-9;

#[derive(Debug, Clone, Default, PartialEq)]
pub struct StatSeries {
    pub times: Vec<f64>,
    pub mean_energy: Vec<f64>,
    pub std_energy: Vec<f64>,
    pub mean_gradient: Vec<f64>,
    pub std_gradient: Vec<f64>,
}

impl StatSeries {
    /// Statistics of every recorded state using chaos orders `0..=r_max`.
    /// States may hold only the resolved orders.
    pub fn from_trajectory(sys: &BurgersSystem, traj: &Trajectory<Complex64>, quad: &QuadTensor, r_max: usize) -> Result<Self> {
        let mut s = Self::default();
        for (t, u) in traj.times.iter().zip(&traj.states) {
            s.times.push(*t);
            s.mean_energy.push(mean_energy(sys, u, r_max));
            s.std_energy.push(var_energy(sys, u, quad, r_max)?.sqrt());
            s.mean_gradient.push(mean_gradient(sys, u, r_max));
            s.std_gradient.push(var_gradient(sys, u, quad, r_max)?.sqrt());
        }
        Ok(s)
    }

    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(w);
        w.write_record(["t", "mean_energy", "std_energy", "mean_gradient", "std_gradient"])?;
        for i in 0..self.times.len() {
            w.write_record(
                [self.times[i], self.mean_energy[i], self.std_energy[i], self.mean_gradient[i], self.std_gradient[i]]
                    .map(|v| v.to_string()),
            )?;
        }
        w.flush()?;
        Ok(())
    }
}

fn check_rmax(sys: &BurgersSystem, u: &[Complex64], r_max: usize) {
    assert!(r_max < sys.chaos(), "r_max {r_max} exceeds the chaos order");
    assert!(u.len() >= (r_max + 1) * sys.modes(), "state holds fewer than r_max + 1 chaos blocks");
}

fn weighted_mean(sys: &BurgersSystem, u: &[Complex64], r_max: usize, gradient: bool) -> f64 {
    check_rmax(sys, u, r_max);
    let n = sys.modes();
    let mut s = 0.0;
    for r in 0..=r_max {
        for (j, k) in sys.wavenumbers().enumerate() {
            let wk = if gradient { (k * k) as f64 } else { 1.0 };
            s += wk * u[r * n + j].norm_sqr() / (2 * r + 1) as f64;
        }
    }
    2.0 * PI * s
}

fn weighted_var(sys: &BurgersSystem, u: &[Complex64], quad: &QuadTensor, r_max: usize, gradient: bool) -> Result<f64> {
    check_rmax(sys, u, r_max);
    if quad.size() <= r_max {
        return Err(MzError::Config(format!("quadruple tensor covers orders < {}, need {r_max}", quad.size())));
    }
    let n = sys.modes();
    let nr = r_max + 1;
    // A_{r1 r2} = Σ_k w_k u_{k r1} conj(u_{k r2})
    let mut a = vec![Complex64::new(0.0, 0.0); nr * nr];
    for r1 in 0..nr {
        for r2 in 0..nr {
            a[r1 * nr + r2] = sys
                .wavenumbers()
                .enumerate()
                .map(|(j, k)| {
                    let wk = if gradient { (k * k) as f64 } else { 1.0 };
                    u[r1 * n + j] * u[r2 * n + j].conj() * wk
                })
                .fold(Complex64::new(0.0, 0.0), |x, y| x + y);
        }
    }
    let mut second = 0.0;
    for r1 in 0..nr {
        for r2 in 0..nr {
            for r3 in 0..nr {
                for r4 in 0..nr {
                    let d = quad.get(r1, r2, r3, r4);
                    if d != 0.0 {
                        second += (a[r1 * nr + r2] * a[r3 * nr + r4]).re * d;
                    }
                }
            }
        }
    }
    let mean_unit = weighted_mean(sys, u, r_max, gradient) / (2.0 * PI);
    // energy carries ½·2π, the gradient 2π
    let scale = if gradient { 2.0 * PI } else { PI };
    let var = scale * scale * (second - mean_unit * mean_unit);
    if var >= 0.0 {
        Ok(var)
    } else if var >= CLIP * (scale * scale * second).max(1.0) {
        Ok(0.0)
    } else if var >= INCONSISTENT * (scale * scale * second).max(1.0) {
        log::warn!("variance {var:e} clipped to zero");
        Ok(0.0)
    } else {
        Err(MzError::NumericalInconsistency(format!("negative variance {var:e}")))
    }
}

/// `E[E] = ½ Σ_k Σ_{r≤r_max} 2π |u_kr|²/(2r+1)`.
pub fn mean_energy(sys: &BurgersSystem, u: &[Complex64], r_max: usize) -> f64 {
    0.5 * weighted_mean(sys, u, r_max, false)
}

/// `Var[E]` through the standard-Legendre quadruple products `d_{r1r2r3r4}`.
pub fn var_energy(sys: &BurgersSystem, u: &[Complex64], quad: &QuadTensor, r_max: usize) -> Result<f64> {
    weighted_var(sys, u, quad, r_max, false)
}

/// `E[G] = Σ_k Σ_{r≤r_max} 2π k² |u_kr|²/(2r+1)`.
pub fn mean_gradient(sys: &BurgersSystem, u: &[Complex64], r_max: usize) -> f64 {
    weighted_mean(sys, u, r_max, true)
}

pub fn var_gradient(sys: &BurgersSystem, u: &[Complex64], quad: &QuadTensor, r_max: usize) -> Result<f64> {
    weighted_var(sys, u, quad, r_max, true)
}

/// `|cand − ref|/|ref|` per recorded time of component `index`; `None` where
/// `|ref| < RELATIVE_ERROR_FLOOR`.
pub fn relative_error<E: Scalar>(reference: &Trajectory<E>, candidate: &Trajectory<E>, index: usize) -> Result<Vec<Option<f64>>> {
    if reference.len() != candidate.len() {
        return Err(MzError::Alignment(format!("{} reference times vs {} candidate times", reference.len(), candidate.len())));
    }
    for (a, b) in reference.times.iter().zip(&candidate.times) {
        if (a - b).abs() > 1e-9 * a.abs().max(1.0) {
            return Err(MzError::Alignment(format!("time grids differ at t = {a} vs {b}")));
        }
    }
    Ok(reference
        .states
        .iter()
        .zip(&candidate.states)
        .map(|(r, c)| {
            let rv = r[index];
            (rv.abs() >= RELATIVE_ERROR_FLOOR).then(|| (c[index] - rv).abs() / rv.abs())
        })
        .collect())
}
