use super::{GalerkinSystem, Partition};
use crate::error::{MzError, Result};
use crate::polybasis::{quad_tensor, LegendreFamily, QuadTensor};

/// Galerkin system of the forced double-well particle
/// `du/dt = u − u³ + sin(t + t₀) ξ` in the orthonormal Legendre basis:
/// `du_i/dt = u_i − Σ u_j u_k u_m e_{jkmi} + f_i(t)`.
///
/// Time enters only through the forcing; [`ParticleSystem::autonomous_rhs`]
/// exposes the equivalent autonomous system with `τ` appended to the state.
#[derive(Debug, Clone)]
pub struct ParticleSystem {
    order: usize,
    resolved_order: usize,
    u_init: f64,
    phase: f64,
    forcing_amplitude: f64,
    tensor: QuadTensor,
}

impl ParticleSystem {
    pub fn new(order: usize, resolved_order: usize, u_init: f64, phase: f64) -> Result<Self> {
        if order < 1 {
            return Err(MzError::Config("particle needs chaos order M ≥ 1".into()));
        }
        if resolved_order < 1 || resolved_order > order {
            return Err(MzError::Config(format!("resolved order {resolved_order} must lie in 1..={order}")));
        }
        let tensor = quad_tensor(&LegendreFamily::orthonormal(order), order);
        Ok(Self { order, resolved_order, u_init, phase, forcing_amplitude: 1.0, tensor })
    }

    /// Scales the random forcing; zero gives the deterministic double well.
    pub fn with_forcing_amplitude(mut self, amplitude: f64) -> Self {
        self.forcing_amplitude = amplitude;
        self
    }

    pub fn tensor(&self) -> &QuadTensor {
        &self.tensor
    }

    /// Chaos coefficients of `sin(t + t₀) ξ`; since `ξ = φ_1/√3` only `f_1` is nonzero.
    pub fn forcing(&self, t: f64) -> Vec<f64> {
        let mut f = vec![0.0; self.order + 1];
        f[1] = self.forcing_amplitude * (t + self.phase).sin() / 3f64.sqrt();
        f
    }

    fn cubic(&self, u: &[f64], out: &mut [f64]) {
        let n = self.order + 1;
        out.fill(0.0);
        for j in 0..n {
            if u[j] == 0.0 {
                continue;
            }
            for k in 0..n {
                let ujk = u[j] * u[k];
                if ujk == 0.0 {
                    continue;
                }
                for m in 0..n {
                    let ujkm = ujk * u[m];
                    if ujkm == 0.0 {
                        continue;
                    }
                    for (i, o) in out.iter_mut().enumerate() {
                        *o += ujkm * self.tensor.get(j, k, m, i);
                    }
                }
            }
        }
    }

    /// Right-hand side of the autonomous extension: state `(u_0, …, u_M, τ)`, `dτ/dt = 1`.
    pub fn autonomous_rhs(&self, state: &[f64], out: &mut [f64]) {
        let n = self.order + 1;
        let tau = state[n];
        self.rhs(tau, &state[..n], &mut out[..n]);
        out[n] = 1.0;
    }
}

impl GalerkinSystem for ParticleSystem {
    type Elem = f64;

    fn partition(&self) -> Partition {
        Partition::new(self.resolved_order + 1, self.order + 1)
    }

    fn initial_state(&self) -> Vec<f64> {
        let mut u = vec![0.0; self.order + 1];
        u[0] = self.u_init;
        u
    }

    fn rhs(&self, t: f64, u: &[f64], out: &mut [f64]) {
        self.cubic(u, out);
        let f1 = self.forcing_amplitude * (t + self.phase).sin() / 3f64.sqrt();
        for (i, o) in out.iter_mut().enumerate() {
            *o = u[i] - *o;
        }
        out[1] += f1;
    }

    fn jvp(&self, _t: f64, u: &[f64], v: &[f64], out: &mut [f64]) {
        // d/du (Σ u_j u_k u_m e_jkmi) · v = 3 Σ v_j u_k u_m e_jkmi by symmetry
        let n = self.order + 1;
        out.fill(0.0);
        for j in 0..n {
            if v[j] == 0.0 {
                continue;
            }
            for k in 0..n {
                let vu = v[j] * u[k];
                for m in 0..n {
                    let vuu = vu * u[m];
                    if vuu == 0.0 {
                        continue;
                    }
                    for (i, o) in out.iter_mut().enumerate() {
                        *o += vuu * self.tensor.get(j, k, m, i);
                    }
                }
            }
        }
        for (i, o) in out.iter_mut().enumerate() {
            *o = v[i] - 3.0 * *o;
        }
    }
}
