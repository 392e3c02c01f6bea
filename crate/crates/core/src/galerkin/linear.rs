use super::{plql_via_jacobian, GalerkinSystem, Partition};
use crate::error::{MzError, Result};
use crate::polybasis::{gauss_legendre, triple_tensor, LegendreFamily, TripleConvention, TripleTensor};

/// Points of the Gauss-Legendre rule used for the exact-solution projection.
const EXACT_POINTS: usize = 64;

/// Galerkin system of `du/dt = -κu`, `κ = (ξ+1)/2`, `ξ ~ U[-1,1]`, in the
/// orthonormal Legendre basis: `du_r/dt = -Σ_i Σ_j k_i u_j e_{ijr}`.
#[derive(Debug, Clone)]
pub struct LinearOdeSystem {
    order: usize,
    resolved_order: usize,
    u_init: f64,
    kappa: [f64; 2],
    tensor: TripleTensor,
    // row-major (M+1)×(M+1), rhs = matrix · u
    matrix: Vec<f64>,
}

impl LinearOdeSystem {
    /// `order` is the highest chaos index `M`; indices `0..=resolved_order` are resolved.
    pub fn new(order: usize, resolved_order: usize, u_init: f64) -> Result<Self> {
        if order < 1 {
            return Err(MzError::Config("linear ODE needs chaos order M ≥ 1".into()));
        }
        if resolved_order < 1 || resolved_order > order {
            return Err(MzError::Config(format!("resolved order {resolved_order} must lie in 1..={order}")));
        }
        let n = order + 1;
        let tensor = triple_tensor(&LegendreFamily::orthonormal(order), order, TripleConvention::ENormalized);
        let kappa = [0.5, 0.5 / 3f64.sqrt()];
        let mut matrix = vec![0.0; n * n];
        for r in 0..n {
            for j in 0..n {
                matrix[r * n + j] = -(0..2).map(|i| kappa[i] * tensor.get(i, j, r)).sum::<f64>();
            }
        }
        Ok(Self { order, resolved_order, u_init, kappa, tensor, matrix })
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn u_init(&self) -> f64 {
        self.u_init
    }

    /// Chaos coefficients `(k_0, k_1)` of `κ`.
    pub fn kappa(&self) -> [f64; 2] {
        self.kappa
    }

    pub fn tensor(&self) -> &TripleTensor {
        &self.tensor
    }

    /// Linear operator in row-major form.
    pub fn matrix(&self) -> &[f64] {
        &self.matrix
    }

    /// `u_r(t) = ∫ u° e^{-κ(ξ)t} φ_r(ξ) dξ/2`, the projection of the exact solution.
    pub fn exact_coefficients(&self, t: f64) -> Vec<f64> {
        let fam = LegendreFamily::orthonormal(self.order);
        let (x, w) = gauss_legendre(EXACT_POINTS);
        let mut out = vec![0.0; self.order + 1];
        for (&xi, &wi) in x.iter().zip(&w) {
            let val = self.u_init * (-(xi + 1.0) * 0.5 * t).exp();
            for (o, p) in out.iter_mut().zip(fam.eval_all(xi)) {
                *o += 0.5 * wi * val * p;
            }
        }
        out
    }

    fn apply(&self, v: &[f64], out: &mut [f64]) {
        let n = self.order + 1;
        for r in 0..n {
            out[r] = self.matrix[r * n..(r + 1) * n].iter().zip(v).map(|(a, b)| a * b).sum();
        }
    }
}

impl GalerkinSystem for LinearOdeSystem {
    type Elem = f64;

    fn partition(&self) -> Partition {
        Partition::new(self.resolved_order + 1, self.order + 1)
    }

    fn initial_state(&self) -> Vec<f64> {
        let mut u = vec![0.0; self.order + 1];
        u[0] = self.u_init;
        u
    }

    fn rhs(&self, _t: f64, u: &[f64], out: &mut [f64]) {
        self.apply(u, out);
    }

    fn jvp(&self, _t: f64, _u: &[f64], v: &[f64], out: &mut [f64]) {
        self.apply(v, out);
    }

    fn plql(&self, t: f64, uhat: &[f64], out: &mut [f64]) -> Result<()> {
        plql_via_jacobian(self, t, uhat, out);
        Ok(())
    }

    fn projected_depth(&self) -> usize {
        1
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::integrate::{integrate, StepperConfig};
    use approx::assert_abs_diff_eq;

    #[test]
    fn kappa_expansion() {
        let s = LinearOdeSystem::new(6, 1, 1.0).unwrap();
        assert_eq!(s.kappa()[0], 0.5);
        assert_abs_diff_eq!(s.kappa()[1], 1.0 / (2.0 * 3f64.sqrt()), epsilon = 1e-16);
        // κ(ξ) = k0 φ0 + k1 φ1
        for xi in [-1.0, -0.3, 0.4, 1.0] {
            assert_abs_diff_eq!(s.kappa()[0] + s.kappa()[1] * 3f64.sqrt() * xi, (xi + 1.0) / 2.0, epsilon = 1e-15);
        }
    }

    #[test]
    fn m1_truncation() {
        let s = LinearOdeSystem::new(1, 1, 1.0).unwrap();
        let [k0, k1] = s.kappa();
        let u = [0.7, -0.2];
        let mut out = [0.0; 2];
        s.rhs(0.0, &u, &mut out);
        assert_abs_diff_eq!(out[0], -(k0 * u[0] + k1 * u[1]), epsilon = 1e-15);
        assert_abs_diff_eq!(out[1], -(k0 * u[1] + k1 * u[0]), epsilon = 1e-15);
    }

    #[test]
    fn initial_state() {
        let s = LinearOdeSystem::new(6, 1, 2.5).unwrap();
        assert_eq!(s.initial_state(), vec![2.5, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0]);
        assert_eq!(s.partition(), Partition::new(2, 7));
    }

    #[test]
    fn matches_exact_solution() {
        let exact_run = |order: usize| {
            let s = LinearOdeSystem::new(order, 1, 1.0).unwrap();
            let tr = integrate(|t, u: &[f64], o: &mut [f64]| s.rhs(t, u, o), &s.initial_state(), &StepperConfig::new(1e-3, 10.0))
                .unwrap();
            let (t, u) = tr.last().unwrap();
            assert_abs_diff_eq!(t, 10.0, epsilon = 1e-9);
            (u.to_vec(), s.exact_coefficients(10.0))
        };
        // at M = 6 the chaos truncation error dominates the top two coefficients
        let (u, exact) = exact_run(6);
        for r in 0..=4 {
            assert!((u[r] - exact[r]).abs() < 1e-4, "r {r}: {} vs {}", u[r], exact[r]);
        }
        let (u, exact) = exact_run(14);
        for r in 0..=14 {
            assert!((u[r] - exact[r]).abs() < 1e-6, "r {r}: {} vs {}", u[r], exact[r]);
        }
        // closed form for the mean
        assert_abs_diff_eq!(exact[0], (1.0 - (-10.0f64).exp()) / 10.0, epsilon = 1e-14);
    }

    #[test]
    fn richardson_order_two() {
        let s = LinearOdeSystem::new(6, 1, 1.0).unwrap();
        let exact = s.exact_coefficients(10.0);
        // chaos truncation error at M = 6 is far below the time error at these steps
        let err = |dt: f64| {
            let tr = integrate(|t, u: &[f64], o: &mut [f64]| s.rhs(t, u, o), &s.initial_state(), &StepperConfig::new(dt, 10.0))
                .unwrap();
            (tr.last().unwrap().1[0] - exact[0]).abs()
        };
        let (e1, e2) = (err(0.2), err(0.1));
        let ratio = e1 / e2;
        assert!((3.6..=4.4).contains(&ratio), "ratio {ratio}");
    }

    #[test]
    fn plql_matches_hand_contraction() {
        let s = LinearOdeSystem::new(6, 1, 1.0).unwrap();
        let n = 7;
        let a = s.matrix();
        let uhat = [0.9, -0.1];
        let mut got = [0.0; 2];
        s.plql(0.0, &uhat, &mut got).unwrap();
        for r in 0..2 {
            // Σ_{j unresolved} A_rj (A (û,0))_j
            let mut want = 0.0;
            for j in 2..n {
                let rj: f64 = (0..2).map(|i| a[j * n + i] * uhat[i]).sum();
                want += a[r * n + j] * rj;
            }
            assert_abs_diff_eq!(got[r], want, epsilon = 1e-15);
        }
    }
}
