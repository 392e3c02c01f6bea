use crate::error::{MzError, Result};
use crate::scalar::Scalar;

/// Newton settings for the memory-length equation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NewtonOptions {
    pub tol: f64,
    pub max_iter: usize,
    pub bracket: (f64, f64),
}

impl Default for NewtonOptions {
    fn default() -> Self {
        Self { tol: 1e-14, max_iter: 50, bracket: (1e-12, 1.0 - 1e-12) }
    }
}

/// Accepted root of the estimation polynomial.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct YEstimate {
    pub y: f64,
    pub iterations: usize,
    pub bisection: bool,
}

/// One estimator step; `None` marks quantities not available at that step.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DiagnosticRow {
    pub t: f64,
    pub y_hat: Option<f64>,
    pub t0_hat: Option<f64>,
    pub epsilon: Option<f64>,
    pub newton_iters: usize,
}

/// Samples `f_k(jδt) = 2·PLQLu_0` along the full flow and the running
/// estimator state.
#[derive(Debug, Clone)]
pub struct EstimatorHistory<E> {
    dt: f64,
    samples: Vec<Vec<E>>,
    y_hat: Option<f64>,
    y_prev: Option<f64>,
    min_epsilon: Option<(usize, f64)>,
    pub rows: Vec<DiagnosticRow>,
}

impl<E: Scalar> EstimatorHistory<E> {
    pub fn new(dt: f64) -> Self {
        Self { dt, samples: Vec::new(), y_hat: None, y_prev: None, min_epsilon: None, rows: Vec::new() }
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn push_sample(&mut self, f: Vec<E>) {
        self.samples.push(f);
    }

    pub fn samples(&self) -> &[Vec<E>] {
        &self.samples
    }

    /// Index of the newest sample, `n_t`.
    pub fn n_t(&self) -> usize {
        self.samples.len().saturating_sub(1)
    }

    pub fn y_hat(&self) -> Option<f64> {
        self.y_hat
    }

    /// Step index and value of the running ε minimum.
    pub fn min_epsilon(&self) -> Option<(usize, f64)> {
        self.min_epsilon
    }

    /// Records an accepted estimate at step `n_t`; returns ε when a previous
    /// estimate exists and whether it set a new minimum.
    pub fn accept(&mut self, y: f64) -> (Option<f64>, bool) {
        self.y_prev = self.y_hat;
        self.y_hat = Some(y);
        let Some(prev) = self.y_prev else { return (None, false) };
        let eps = epsilon_update(y, prev, self.n_t());
        let step = self.n_t();
        let improved = match self.min_epsilon {
            Some((_, m)) => eps < m,
            None => true,
        };
        if improved {
            self.min_epsilon = Some((step, eps));
        }
        (Some(eps), improved)
    }
}

/// `c_m = Σ_k 2 Re{f_k(t_{n−m}) conj(û_k(t_n))}` for `m = 0..=n`, the
/// coefficient of `y^m` in the trapezoidal memory integral.
pub fn polynomial_coefficients<E: Scalar>(samples: &[Vec<E>], resolved: &[E]) -> Vec<f64> {
    let n = samples.len() - 1;
    (0..=n)
        .map(|m| 2.0 * samples[n - m].iter().zip(resolved).map(|(f, u)| f.re_dot(*u)).sum::<f64>())
        .collect()
}

/// `I_k(t_n) = δt [½ f(0) y^n + Σ_{0<j<n} f(j) y^{n−j} + ½ f(n)]`, the
/// trapezoidal rule for `∫_0^t e^{−λ(t−s)} f_k(s) ds` with `y = e^{−λδt}`.
pub fn memory_integral<E: Scalar>(samples: &[Vec<E>], y: f64, dt: f64) -> Vec<E> {
    let n = samples.len() - 1;
    let width = samples[0].len();
    let mut out = vec![E::zero(); width];
    if n == 0 {
        return out;
    }
    let mut pw = 1.0;
    for m in 0..=n {
        let w = if m == 0 || m == n { 0.5 * dt * pw } else { dt * pw };
        for (o, &f) in out.iter_mut().zip(&samples[n - m]) {
            *o += f * w;
        }
        pw *= y;
    }
    out
}

/// Polynomial `P(y) = (δt/2)[c_0 + 2Σ_{0<m<n} c_m y^m + c_n y^n] − b` and `P'(y)` by Horner.
fn poly_eval(coeffs: &[f64], dt: f64, target: f64, y: f64) -> (f64, f64) {
    let n = coeffs.len() - 1;
    let weight = |m: usize| if m == 0 || m == n { 0.5 * dt } else { dt };
    let mut p = 0.0;
    let mut dp = 0.0;
    for m in (0..=n).rev() {
        dp = dp * y + p;
        p = p * y + weight(m) * coeffs[m];
    }
    (p - target, dp)
}

/// Solves `Σ_k 2 Re{I_k(t, t_0) conj(û_k)} = target` for `y = e^{−2δt/t_0}`.
///
/// Newton from `seed`; bisection on `opts.bracket` when Newton leaves (0, 1),
/// stalls or exceeds `opts.max_iter`.
pub fn estimate_y<E: Scalar>(
    history: &EstimatorHistory<E>,
    resolved: &[E],
    target: f64,
    seed: f64,
    opts: &NewtonOptions,
) -> Result<YEstimate> {
    if history.samples.len() < 2 {
        return Err(MzError::EstimationFailed("need at least two samples".into()));
    }
    let coeffs = polynomial_coefficients(&history.samples, resolved);
    if coeffs.iter().all(|c| *c == 0.0) {
        return Err(MzError::EstimationFailed(format!("degenerate memory polynomial at step {}", history.n_t())));
    }
    let dt = history.dt;
    let mut y = seed;
    for it in 1..=opts.max_iter {
        let (p, dp) = poly_eval(&coeffs, dt, target, y);
        if dp == 0.0 || !dp.is_finite() {
            break;
        }
        let step = p / dp;
        y -= step;
        if !(y > 0.0 && y < 1.0) || !y.is_finite() {
            break;
        }
        if step.abs() < opts.tol {
            return Ok(YEstimate { y, iterations: it, bisection: false });
        }
    }
    // bisection fallback
    let (mut lo, mut hi) = opts.bracket;
    let (mut plo, phi) = (poly_eval(&coeffs, dt, target, lo).0, poly_eval(&coeffs, dt, target, hi).0);
    if plo == 0.0 {
        return Ok(YEstimate { y: lo, iterations: 0, bisection: true });
    }
    if phi == 0.0 {
        return Ok(YEstimate { y: hi, iterations: 0, bisection: true });
    }
    if plo.signum() == phi.signum() {
        return Err(MzError::EstimationFailed(format!("no root in ({lo}, {hi}) at step {}", history.n_t())));
    }
    let mut iters = 0;
    while hi - lo > opts.tol && iters < 200 {
        let mid = 0.5 * (lo + hi);
        let pm = poly_eval(&coeffs, dt, target, mid).0;
        if pm.signum() == plo.signum() {
            lo = mid;
            plo = pm;
        } else {
            hi = mid;
        }
        iters += 1;
    }
    Ok(YEstimate { y: 0.5 * (lo + hi), iterations: iters, bisection: true })
}

/// `t̂_0 = −2δt / ln ŷ`.
pub fn t0_from_y(y: f64, dt: f64) -> Result<f64> {
    if !(y > 0.0 && y < 1.0) {
        return Err(MzError::Domain(format!("ŷ = {y} is outside (0, 1)")));
    }
    let t0 = -2.0 * dt / y.ln();
    if !t0.is_finite() {
        return Err(MzError::Domain(format!("ŷ = {y} gives an unbounded memory length")));
    }
    Ok(t0)
}

/// `ε = max_{l = 1..=n_t} |y_new^l − y_prev^l|` by direct scan.
pub fn epsilon_update(y_new: f64, y_prev: f64, n_t: usize) -> f64 {
    let (mut a, mut b) = (1.0f64, 1.0f64);
    let mut eps = 0.0f64;
    for _ in 0..n_t.max(1) {
        a *= y_new;
        b *= y_prev;
        eps = eps.max((a - b).abs());
    }
    eps
}
