use crate::error::{MzError, Result};

/// Scaling of the Legendre polynomials under the half-weight `dξ/2` on `[-1, 1]`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Normalization {
    /// `P_n(1) = 1`, `E[P_n²] = 1/(2n+1)`.
    Standard,
    /// `φ_n = √(2n+1) P_n`, `E[φ_n²] = 1`.
    Orthonormal,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct LegendreFamily {
    pub max_order: usize,
    pub normalization: Normalization,
}

impl LegendreFamily {
    pub fn new(max_order: usize, normalization: Normalization) -> Self {
        Self { max_order, normalization }
    }

    pub fn orthonormal(max_order: usize) -> Self {
        Self::new(max_order, Normalization::Orthonormal)
    }

    pub fn standard(max_order: usize) -> Self {
        Self::new(max_order, Normalization::Standard)
    }

    /// `φ_n(ξ)` by the three-term recurrence.
    pub fn eval(&self, n: usize, xi: f64) -> Result<f64> {
        if n > self.max_order {
            return Err(MzError::Order { order: n, max: self.max_order });
        }
        let p = standard_upto(n, xi)[n];
        Ok(p * self.scale(n))
    }

    /// `[φ_0(ξ), …, φ_max(ξ)]`.
    pub fn eval_all(&self, xi: f64) -> Vec<f64> {
        let mut p = standard_upto(self.max_order, xi);
        for (n, v) in p.iter_mut().enumerate() {
            *v *= self.scale(n);
        }
        p
    }

    /// `E[φ_n²]` under the uniform density on `[-1, 1]`.
    pub fn norm_sq(&self, n: usize) -> f64 {
        match self.normalization {
            Normalization::Standard => 1.0 / (2 * n + 1) as f64,
            Normalization::Orthonormal => 1.0,
        }
    }

    fn scale(&self, n: usize) -> f64 {
        match self.normalization {
            Normalization::Standard => 1.0,
            Normalization::Orthonormal => ((2 * n + 1) as f64).sqrt(),
        }
    }
}

fn standard_upto(n: usize, x: f64) -> Vec<f64> {
    let mut p = Vec::with_capacity(n + 1);
    p.push(1.0);
    if n >= 1 {
        p.push(x);
    }
    for k in 1..n {
        let kf = k as f64;
        let next = ((2.0 * kf + 1.0) * x * p[k] - kf * p[k - 1]) / (kf + 1.0);
        p.push(next);
    }
    p
}

/// `(P_n(x), P_n'(x))` for the standard family.
fn legendre_with_derivative(n: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    if n == 0 {
        return (1.0, 0.0);
    }
    for k in 1..n {
        let kf = k as f64;
        let p2 = ((2.0 * kf + 1.0) * x * p1 - kf * p0) / (kf + 1.0);
        p0 = p1;
        p1 = p2;
    }
    let dp = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, dp)
}

/// `n`-point Gauss-Legendre rule on `[-1, 1]` (weights sum to 2), nodes ascending.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    assert!(n >= 1, "gauss_legendre needs at least one node");
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    let m = n.div_ceil(2);
    for i in 0..m {
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (p, d) = legendre_with_derivative(n, x);
            dp = d;
            let dx = p / d;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        let (_, d) = legendre_with_derivative(n, x);
        if d.is_finite() {
            dp = d;
        }
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        nodes[i] = -x;
        nodes[n - 1 - i] = x;
        weights[i] = w;
        weights[n - 1 - i] = w;
    }
    if n % 2 == 1 {
        nodes[n / 2] = 0.0;
    }
    (nodes, weights)
}
