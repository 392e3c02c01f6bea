use std::ops::Range;

use num_complex::Complex64;
use rayon::prelude::*;

use super::{GalerkinSystem, Partition};
use crate::error::{MzError, Result};
use crate::polybasis::{triple_tensor, LegendreFamily, TripleConvention, TripleTensor};

type C = Complex64;

#[derive(Debug, Clone, PartialEq)]
pub struct BurgersConfig {
    /// Number of Fourier modes `N` (even); wavenumbers `k ∈ [-N/2, N/2-1]`.
    pub modes: usize,
    /// Number of chaos coefficients `M`, orders `0..M`.
    pub chaos: usize,
    /// Chaos orders `< resolved` are resolved.
    pub resolved: usize,
    pub viscosity: f64,
    pub alpha0: f64,
    pub alpha1: f64,
    /// Pin the unpaired `k = -N/2` mode to zero so that real initial data
    /// stays exactly Hermitian.
    pub zero_nyquist: bool,
}

impl Default for BurgersConfig {
    fn default() -> Self {
        Self { modes: 196, chaos: 7, resolved: 2, viscosity: 0.03, alpha0: 1.0, alpha1: 1.0, zero_nyquist: true }
    }
}

impl BurgersConfig {
    pub fn validate(&self) -> Result<()> {
        if self.modes < 2 || self.modes % 2 != 0 {
            return Err(MzError::Config(format!("Fourier mode count must be even and ≥ 2, got {}", self.modes)));
        }
        if self.chaos < 2 {
            return Err(MzError::Config("Burgers needs at least two chaos coefficients".into()));
        }
        if self.resolved < 1 || self.resolved >= self.chaos {
            return Err(MzError::Config(format!("resolved order {} must lie in 1..{}", self.resolved, self.chaos)));
        }
        if !(self.viscosity.is_finite() && self.viscosity > 0.0) {
            return Err(MzError::Config(format!("viscosity must be finite and positive, got {}", self.viscosity)));
        }
        Ok(())
    }
}

/// One `(l, m)` product with its weighted tensor entries `weight·c_lmr` per target row.
#[derive(Debug, Clone)]
struct PairTerm {
    l: usize,
    m: usize,
    rows: Vec<(usize, f64)>,
}

/// Stochastic viscous Burgers equation projected on Fourier modes × Legendre chaos:
/// `du_kr/dt = -(ik/2) Σ_{l,m} Σ_{p+q=k} u_pl u_qm c_lmr − ν k² u_kr`.
///
/// Entry `(k, r)` sits at `r·N + (k + N/2)`, so the resolved orders form a prefix.
#[derive(Debug, Clone)]
pub struct BurgersSystem {
    cfg: BurgersConfig,
    half: usize,
    tensor: TripleTensor,
    full_pairs: Vec<PairTerm>,
    markov_pairs: Vec<PairTerm>,
    unresolved_from_resolved: Vec<PairTerm>,
    plql_pairs: Vec<PairTerm>,
    fluct_pairs: Vec<PairTerm>,
    jvp_pairs: Vec<PairTerm>,
}

fn build_pairs(
    tensor: &TripleTensor,
    pairs: impl Iterator<Item = (usize, usize, f64)>,
    rows: Range<usize>,
) -> Vec<PairTerm> {
    pairs
        .filter_map(|(l, m, w)| {
            let rs: Vec<(usize, f64)> =
                rows.clone().filter_map(|r| (tensor.get(l, m, r) != 0.0).then(|| (r, w * tensor.get(l, m, r)))).collect();
            (!rs.is_empty()).then_some(PairTerm { l, m, rows: rs })
        })
        .collect()
}

fn upper_pairs(range: Range<usize>) -> impl Iterator<Item = (usize, usize, f64)> {
    range.clone().flat_map(move |l| range.clone().filter(move |&m| m >= l).map(move |m| (l, m, if l == m { 1.0 } else { 2.0 })))
}

/// Truncated convolution `out_k = Σ_{p+q=k; p,q∈F} a_p b_q` on index-shifted arrays.
fn convolve(a: &[C], b: &[C], half: usize, out: &mut [C]) {
    let n = a.len();
    for (jk, o) in out.iter_mut().enumerate() {
        let lo = (jk + half + 1).saturating_sub(n);
        let hi = (jk + half).min(n - 1);
        let bs = &b[jk + half - hi..=jk + half - lo];
        let mut s = C::new(0.0, 0.0);
        for (x, y) in a[lo..=hi].iter().zip(bs.iter().rev()) {
            s += x * y;
        }
        *o = s;
    }
}

impl BurgersSystem {
    pub fn new(cfg: BurgersConfig) -> Result<Self> {
        cfg.validate()?;
        let m = cfg.chaos;
        let lam = cfg.resolved;
        let tensor = triple_tensor(&LegendreFamily::standard(m - 1), m - 1, TripleConvention::CRatio);
        let full_pairs = build_pairs(&tensor, upper_pairs(0..m), 0..m);
        let markov_pairs = build_pairs(&tensor, upper_pairs(0..lam), 0..lam);
        let unresolved_from_resolved = build_pairs(&tensor, upper_pairs(0..lam), lam..m);
        let cross = (lam..m).flat_map(|l| (0..lam).map(move |mm| (l, mm, 2.0)));
        let plql_pairs = build_pairs(&tensor, cross.clone(), 0..lam);
        let fluct_pairs = build_pairs(&tensor, cross.chain(upper_pairs(lam..m)), 0..lam);
        let jvp_pairs = build_pairs(&tensor, (0..m).flat_map(|l| (0..m).map(move |mm| (l, mm, 2.0))), 0..m);
        Ok(Self {
            half: cfg.modes / 2,
            cfg,
            tensor,
            full_pairs,
            markov_pairs,
            unresolved_from_resolved,
            plql_pairs,
            fluct_pairs,
            jvp_pairs,
        })
    }

    pub fn config(&self) -> &BurgersConfig {
        &self.cfg
    }

    pub fn tensor(&self) -> &TripleTensor {
        &self.tensor
    }

    pub fn modes(&self) -> usize {
        self.cfg.modes
    }

    pub fn chaos(&self) -> usize {
        self.cfg.chaos
    }

    /// Flat position of `(k, r)`.
    pub fn index(&self, k: i64, r: usize) -> usize {
        debug_assert!(k >= -(self.half as i64) && k < self.half as i64 && r < self.cfg.chaos);
        r * self.cfg.modes + (k + self.half as i64) as usize
    }

    /// Wavenumber stored at flat position `i`.
    pub fn wavenumber(&self, i: usize) -> i64 {
        (i % self.cfg.modes) as i64 - self.half as i64
    }

    pub fn wavenumbers(&self) -> impl Iterator<Item = i64> + '_ {
        (0..self.cfg.modes).map(|j| j as i64 - self.half as i64)
    }

    /// Largest `|u_{-k,r} − conj(u_{k,r})|` over the paired wavenumbers.
    pub fn hermitian_defect(&self, u: &[C]) -> f64 {
        let mut worst: f64 = 0.0;
        for r in 0..self.cfg.chaos {
            for k in 0..self.half as i64 {
                let d = (u[self.index(-k, r)] - u[self.index(k, r)].conj()).norm();
                worst = worst.max(d);
            }
        }
        worst
    }

    /// Accumulates `Σ_terms weight·c_lmr conv(left_l, right_m)` into `out`, whose
    /// blocks correspond to `rows`.
    fn quadratic(&self, left: &[C], right: &[C], terms: &[PairTerm], rows: Range<usize>, out: &mut [C]) {
        let n = self.cfg.modes;
        let block_zero = |v: &[C], b: usize| v[b * n..(b + 1) * n].iter().all(|z| z.re == 0.0 && z.im == 0.0);
        let convs: Vec<Option<Vec<C>>> = terms
            .par_iter()
            .map(|t| {
                if block_zero(left, t.l) || block_zero(right, t.m) {
                    return None;
                }
                let mut c = vec![C::new(0.0, 0.0); n];
                convolve(&left[t.l * n..(t.l + 1) * n], &right[t.m * n..(t.m + 1) * n], self.half, &mut c);
                Some(c)
            })
            .collect();
        for (t, c) in terms.iter().zip(&convs) {
            let Some(c) = c else { continue };
            for &(r, w) in &t.rows {
                let dst = &mut out[(r - rows.start) * n..(r - rows.start + 1) * n];
                for (d, s) in dst.iter_mut().zip(c) {
                    *d += s * w;
                }
            }
        }
    }

    /// Multiplies every entry by `-(ik/2)` and zeroes the unpaired mode when configured.
    fn finish_advection(&self, out: &mut [C]) {
        let n = self.cfg.modes;
        for (i, v) in out.iter_mut().enumerate() {
            let k = (i % n) as f64 - self.half as f64;
            *v *= C::new(0.0, -0.5 * k);
        }
        self.pin_nyquist(out);
    }

    fn pin_nyquist(&self, out: &mut [C]) {
        if self.cfg.zero_nyquist {
            for v in out.iter_mut().step_by(self.cfg.modes) {
                *v = C::new(0.0, 0.0);
            }
        }
    }

    fn add_viscous(&self, u: &[C], out: &mut [C]) {
        let n = self.cfg.modes;
        for (i, (o, x)) in out.iter_mut().zip(u).enumerate() {
            let k = (i % n) as f64 - self.half as f64;
            *o -= x * (self.cfg.viscosity * k * k);
        }
        self.pin_nyquist(out);
    }

    /// `R` on the unresolved rows at `(û, 0)`, placed in a full-length array.
    fn unresolved_rhs_at_zero_fill(&self, uhat: &[C]) -> Vec<C> {
        let n = self.cfg.modes;
        let (lam, m) = (self.cfg.resolved, self.cfg.chaos);
        let full = super::zero_fill(uhat, n * m);
        let mut pr = vec![C::new(0.0, 0.0); n * (m - lam)];
        self.quadratic(&full, &full, &self.unresolved_from_resolved, lam..m, &mut pr);
        self.finish_advection(&mut pr);
        let mut out = vec![C::new(0.0, 0.0); n * m];
        out[n * lam..].copy_from_slice(&pr);
        out
    }
}

impl GalerkinSystem for BurgersSystem {
    type Elem = C;

    fn partition(&self) -> Partition {
        Partition::new(self.cfg.resolved * self.cfg.modes, self.cfg.chaos * self.cfg.modes)
    }

    fn initial_state(&self) -> Vec<C> {
        let mut u = vec![C::new(0.0, 0.0); self.cfg.modes * self.cfg.chaos];
        // sin x = (e^{ix} − e^{-ix})/(2i)
        for (r, a) in [(0, self.cfg.alpha0), (1, self.cfg.alpha1)] {
            u[self.index(1, r)] = C::new(0.0, -a / 2.0);
            u[self.index(-1, r)] = C::new(0.0, a / 2.0);
        }
        u
    }

    fn rhs(&self, _t: f64, u: &[C], out: &mut [C]) {
        out.fill(C::new(0.0, 0.0));
        self.quadratic(u, u, &self.full_pairs, 0..self.cfg.chaos, out);
        self.finish_advection(out);
        self.add_viscous(u, out);
    }

    fn jvp(&self, _t: f64, u: &[C], v: &[C], out: &mut [C]) {
        out.fill(C::new(0.0, 0.0));
        self.quadratic(v, u, &self.jvp_pairs, 0..self.cfg.chaos, out);
        self.finish_advection(out);
        self.add_viscous(v, out);
    }

    fn markovian_rhs(&self, _t: f64, uhat: &[C], out: &mut [C]) {
        let nr = self.n_resolved();
        let full = super::zero_fill(uhat, self.dim());
        let out = &mut out[..nr];
        out.fill(C::new(0.0, 0.0));
        self.quadratic(&full, &full, &self.markov_pairs, 0..self.cfg.resolved, out);
        self.finish_advection(out);
        self.add_viscous(&uhat[..nr], out);
    }

    fn fluctuation(&self, _t: f64, u: &[C], out: &mut [C]) {
        let out = &mut out[..self.n_resolved()];
        out.fill(C::new(0.0, 0.0));
        self.quadratic(u, u, &self.fluct_pairs, 0..self.cfg.resolved, out);
        self.finish_advection(out);
    }

    fn plql(&self, _t: f64, uhat: &[C], out: &mut [C]) -> Result<()> {
        let pr = self.unresolved_rhs_at_zero_fill(uhat);
        let full = super::zero_fill(uhat, self.dim());
        let out = &mut out[..self.n_resolved()];
        out.fill(C::new(0.0, 0.0));
        self.quadratic(&pr, &full, &self.plql_pairs, 0..self.cfg.resolved, out);
        self.finish_advection(out);
        Ok(())
    }

    fn pe_ql(&self, t: f64, u: &[C], out: &mut [C]) -> Result<()> {
        self.fluctuation(t, u, out);
        Ok(())
    }

    fn projected_depth(&self) -> usize {
        1
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::galerkin::plql_via_jacobian;
    use crate::integrate::{integrate, StepperConfig};
    use rustfft::FftPlanner;

    fn small(n: usize) -> BurgersSystem {
        BurgersSystem::new(BurgersConfig { modes: n, ..BurgersConfig::default() }).unwrap()
    }

    fn pseudo_random(len: usize, seed: u64) -> Vec<C> {
        let mut s = seed ^ 0x9e37_79b9_7f4a_7c15;
        let mut next = move || {
            s ^= s << 13;
            s ^= s >> 7;
            s ^= s << 17;
            (s >> 11) as f64 / (1u64 << 53) as f64 - 0.5
        };
        (0..len).map(|_| C::new(next(), next())).collect()
    }

    #[test]
    fn initial_condition_from_sine() {
        let s = small(16);
        let u = s.initial_state();
        assert_eq!(u[s.index(1, 0)], C::new(0.0, -0.5));
        assert_eq!(u[s.index(-1, 1)], C::new(0.0, 0.5));
        assert_eq!(u.iter().filter(|z| z.norm() > 0.0).count(), 4);
        assert_eq!(s.hermitian_defect(&u), 0.0);
    }

    #[test]
    fn convolution_matches_padded_fft() {
        let (n, half) = (16usize, 8usize);
        let a = pseudo_random(n, 1);
        let b = pseudo_random(n, 2);
        let mut direct = vec![C::new(0.0, 0.0); n];
        convolve(&a, &b, half, &mut direct);
        // zero-padded linear convolution: index p + half ↦ slot, result slot 2·half + k
        let len = 2 * n;
        let mut fa: Vec<C> = a.iter().copied().chain(std::iter::repeat(C::new(0.0, 0.0)).take(n)).collect();
        let mut fb: Vec<C> = b.iter().copied().chain(std::iter::repeat(C::new(0.0, 0.0)).take(n)).collect();
        let mut planner = FftPlanner::new();
        planner.plan_fft_forward(len).process(&mut fa);
        planner.plan_fft_forward(len).process(&mut fb);
        let mut prod: Vec<C> = fa.iter().zip(&fb).map(|(x, y)| x * y).collect();
        planner.plan_fft_inverse(len).process(&mut prod);
        for jk in 0..n {
            let k = jk as i64 - half as i64;
            let slot = (k + 2 * half as i64) as usize;
            let want = prod[slot] / len as f64;
            assert!((direct[jk] - want).norm() < 1e-12, "k {k}");
        }
    }

    #[test]
    fn rhs_matches_brute_force_sum() {
        let s = BurgersSystem::new(BurgersConfig { modes: 8, chaos: 4, zero_nyquist: false, ..Default::default() }).unwrap();
        let u = pseudo_random(s.dim(), 7);
        let mut got = vec![C::new(0.0, 0.0); s.dim()];
        s.rhs(0.0, &u, &mut got);
        let c = s.tensor();
        for r in 0..4 {
            for k in -4i64..4 {
                let mut acc = C::new(0.0, 0.0);
                for l in 0..4 {
                    for m in 0..4 {
                        for p in -4i64..4 {
                            let q = k - p;
                            if (-4..4).contains(&q) {
                                acc += u[s.index(p, l)] * u[s.index(q, m)] * c.get(l, m, r);
                            }
                        }
                    }
                }
                let want = acc * C::new(0.0, -0.5 * k as f64) - u[s.index(k, r)] * (0.03 * (k * k) as f64);
                assert!((got[s.index(k, r)] - want).norm() < 1e-12);
            }
        }
    }

    #[test]
    fn plql_matches_jacobian_route() {
        let s = small(12);
        for seed in 0..5 {
            let uhat = pseudo_random(s.n_resolved(), seed);
            let mut a = vec![C::new(0.0, 0.0); s.n_resolved()];
            let mut b = a.clone();
            s.plql(0.0, &uhat, &mut a).unwrap();
            plql_via_jacobian(&s, 0.0, &uhat, &mut b);
            for (x, y) in a.iter().zip(&b) {
                assert!((x - y).norm() < 1e-12 * (1.0 + y.norm()));
            }
        }
    }

    #[test]
    fn plql_brute_force() {
        let s = BurgersSystem::new(BurgersConfig { modes: 8, chaos: 4, zero_nyquist: false, ..Default::default() }).unwrap();
        let uhat = pseudo_random(s.n_resolved(), 3);
        let mut full = vec![C::new(0.0, 0.0); s.dim()];
        s.rhs(0.0, &super::super::zero_fill(&uhat, s.dim()), &mut full);
        let mut got = vec![C::new(0.0, 0.0); s.n_resolved()];
        s.plql(0.0, &uhat, &mut got).unwrap();
        let c = s.tensor();
        for r in 0..2 {
            for k in -4i64..4 {
                let mut acc = C::new(0.0, 0.0);
                for l in 2..4 {
                    for m in 0..2 {
                        for p in -4i64..4 {
                            let q = k - p;
                            if (-4..4).contains(&q) {
                                acc += full[s.index(p, l)] * uhat[s.index(q, m)] * c.get(l, m, r);
                            }
                        }
                    }
                }
                let want = acc * C::new(0.0, -k as f64);
                assert!((got[s.index(k, r)] - want).norm() < 1e-12);
            }
        }
    }

    #[test]
    fn pe_ql_is_rhs_minus_markovian() {
        let s = small(12);
        let u = pseudo_random(s.dim(), 11);
        let nr = s.n_resolved();
        let mut pe = vec![C::new(0.0, 0.0); nr];
        s.pe_ql(0.0, &u, &mut pe).unwrap();
        let mut full = vec![C::new(0.0, 0.0); s.dim()];
        s.rhs(0.0, &u, &mut full);
        let mut mk = vec![C::new(0.0, 0.0); nr];
        s.markovian_rhs(0.0, &u[..nr], &mut mk);
        for i in 0..nr {
            assert!((pe[i] - (full[i] - mk[i])).norm() < 1e-12);
        }
    }

    #[test]
    fn jvp_matches_finite_difference() {
        let s = small(10);
        let u = pseudo_random(s.dim(), 21);
        let v = pseudo_random(s.dim(), 22);
        let h = 1e-6;
        let up: Vec<C> = u.iter().zip(&v).map(|(a, b)| a + b * h).collect();
        let um: Vec<C> = u.iter().zip(&v).map(|(a, b)| a - b * h).collect();
        let mut rp = vec![C::new(0.0, 0.0); s.dim()];
        let mut rm = rp.clone();
        let mut j = rp.clone();
        s.rhs(0.0, &up, &mut rp);
        s.rhs(0.0, &um, &mut rm);
        s.jvp(0.0, &u, &v, &mut j);
        for i in 0..s.dim() {
            assert!((j[i] - (rp[i] - rm[i]) / (2.0 * h)).norm() < 1e-7);
        }
    }

    #[test]
    fn hermitian_symmetry_along_trajectory() {
        let s = small(32);
        let tr = integrate(|t, u: &[C], o: &mut [C]| s.rhs(t, u, o), &s.initial_state(), &StepperConfig::new(1e-3, 1.0))
            .unwrap();
        for u in &tr.states {
            assert!(s.hermitian_defect(u) < 1e-10);
        }
    }

    #[test]
    fn deterministic_across_thread_counts() {
        let s = small(32);
        let run = |threads| {
            let pool = rayon::ThreadPoolBuilder::new().num_threads(threads).build().unwrap();
            pool.install(|| {
                integrate(|t, u: &[C], o: &mut [C]| s.rhs(t, u, o), &s.initial_state(), &StepperConfig::new(1e-3, 0.2))
                    .unwrap()
            })
        };
        let (a, b) = (run(1), run(4));
        assert_eq!(a.states, b.states);
    }

    #[test]
    fn rejects_bad_configs() {
        for cfg in [
            BurgersConfig { modes: 7, ..Default::default() },
            BurgersConfig { resolved: 7, ..Default::default() },
            BurgersConfig { resolved: 0, ..Default::default() },
            BurgersConfig { viscosity: -1.0, ..Default::default() },
        ] {
            assert!(matches!(BurgersSystem::new(cfg), Err(MzError::Config(_))));
        }
    }
}
