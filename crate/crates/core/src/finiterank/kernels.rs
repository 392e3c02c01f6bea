use std::fs;
use std::path::Path;

use rayon::prelude::*;

use crate::error::{MzError, Result};
use crate::galerkin::{zero_fill, GalerkinSystem};
use crate::integrate::{Heun, StepperConfig};
use crate::polybasis::{GaussianMeasure, HermiteBasisSet, QuadratureRule};
use crate::scalar::all_finite;

/// Nodes integrated by one task; reductions run in this fixed grouping.
const NODE_CHUNK: usize = 8;
/// Chunks held in memory at once during the ordered reduction.
const CHUNK_BATCH: usize = 16;

/// Memory kernels on a uniform grid `t_n = n·δt`, `n = 0..len`.
///
/// Layouts per time slice: `F[μ][j]`, `G[ν][μ]`, `Γ[ν][μ]`, `A[ν][j]`.
#[derive(Debug, Clone, PartialEq)]
pub struct KernelTable {
    dt: f64,
    n_basis: usize,
    n_resolved: usize,
    f: Vec<f64>,
    g: Vec<f64>,
    gamma: Vec<f64>,
    a: Option<Vec<f64>>,
}

impl KernelTable {
    /// Builds a table from flat slices, checking their lengths.
    pub fn from_parts(dt: f64, n_basis: usize, n_resolved: usize, f: Vec<f64>, g: Vec<f64>, gamma: Vec<f64>) -> Result<Self> {
        if !(dt > 0.0) {
            return Err(MzError::Config(format!("kernel grid step must be positive, got {dt}")));
        }
        let fs = n_basis * n_resolved;
        let gs = n_basis * n_basis;
        if fs == 0 || f.len() % fs != 0 {
            return Err(MzError::Config("F length is not a multiple of basis × resolved".into()));
        }
        let len = f.len() / fs;
        if len == 0 || g.len() != len * gs || gamma.len() != len * gs {
            return Err(MzError::Config("F, G and Γ disagree on the number of grid times".into()));
        }
        Ok(Self { dt, n_basis, n_resolved, f, g, gamma, a: None })
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    /// Number of grid times.
    pub fn len(&self) -> usize {
        self.f.len() / (self.n_basis * self.n_resolved)
    }

    pub fn is_empty(&self) -> bool {
        self.f.is_empty()
    }

    pub fn n_basis(&self) -> usize {
        self.n_basis
    }

    pub fn n_resolved(&self) -> usize {
        self.n_resolved
    }

    pub fn horizon(&self) -> f64 {
        (self.len() - 1) as f64 * self.dt
    }

    pub fn times(&self) -> Vec<f64> {
        (0..self.len()).map(|n| n as f64 * self.dt).collect()
    }

    pub fn f(&self, n: usize) -> &[f64] {
        let s = self.n_basis * self.n_resolved;
        &self.f[n * s..(n + 1) * s]
    }

    pub fn g(&self, n: usize) -> &[f64] {
        let s = self.n_basis * self.n_basis;
        &self.g[n * s..(n + 1) * s]
    }

    pub fn gamma(&self, n: usize) -> &[f64] {
        let s = self.n_basis * self.n_basis;
        &self.gamma[n * s..(n + 1) * s]
    }

    pub fn a(&self, n: usize) -> Option<&[f64]> {
        let s = self.n_basis * self.n_resolved;
        self.a.as_ref().map(|a| &a[n * s..(n + 1) * s])
    }

    pub fn has_memory_coefficients(&self) -> bool {
        self.a.is_some()
    }

    pub(crate) fn set_a(&mut self, a: Vec<f64>) {
        debug_assert_eq!(a.len(), self.f.len());
        self.a = Some(a);
    }

    /// Writes `F.csv`, `G.csv`, `Gamma.csv` and, when solved, `A.csv` into `dir`.
    pub fn write_dir(&self, dir: &Path) -> Result<()> {
        fs::create_dir_all(dir)?;
        let nb = self.n_basis;
        let nr = self.n_resolved;
        let fj: Vec<String> = (0..nb).flat_map(|m| (0..nr).map(move |j| format!("mu{m}_j{j}"))).collect();
        let gm: Vec<String> = (0..nb).flat_map(|v| (0..nb).map(move |m| format!("nu{v}_mu{m}"))).collect();
        let aj: Vec<String> = (0..nb).flat_map(|v| (0..nr).map(move |j| format!("nu{v}_j{j}"))).collect();
        self.write_block(&dir.join("F.csv"), &fj, &self.f)?;
        self.write_block(&dir.join("G.csv"), &gm, &self.g)?;
        self.write_block(&dir.join("Gamma.csv"), &gm, &self.gamma)?;
        if let Some(a) = &self.a {
            self.write_block(&dir.join("A.csv"), &aj, a)?;
        }
        Ok(())
    }

    fn write_block(&self, path: &Path, names: &[String], data: &[f64]) -> Result<()> {
        let mut w = csv::Writer::from_path(path)?;
        let mut header = vec!["t".to_string()];
        header.extend(names.iter().cloned());
        w.write_record(&header)?;
        for (n, row) in data.chunks(names.len()).enumerate() {
            let mut rec = vec![format!("{:e}", n as f64 * self.dt)];
            rec.extend(row.iter().map(|v| format!("{v:e}")));
            w.write_record(&rec)?;
        }
        w.flush()?;
        Ok(())
    }

    /// Reads a table written by [`KernelTable::write_dir`].
    pub fn read_dir(dir: &Path, n_basis: usize, n_resolved: usize) -> Result<Self> {
        let (t, f) = read_block(&dir.join("F.csv"), n_basis * n_resolved)?;
        let (_, g) = read_block(&dir.join("G.csv"), n_basis * n_basis)?;
        let (_, gamma) = read_block(&dir.join("Gamma.csv"), n_basis * n_basis)?;
        if t.len() < 2 {
            return Err(MzError::Io(format!("{} holds fewer than two grid times", dir.display())));
        }
        let mut table = Self::from_parts(t[1] - t[0], n_basis, n_resolved, f, g, gamma)?;
        let a_path = dir.join("A.csv");
        if a_path.exists() {
            let (_, a) = read_block(&a_path, n_basis * n_resolved)?;
            if a.len() != table.f.len() {
                return Err(MzError::Io("A.csv does not match F.csv".into()));
            }
            table.a = Some(a);
        }
        Ok(table)
    }
}

fn read_block(path: &Path, width: usize) -> Result<(Vec<f64>, Vec<f64>)> {
    let mut r = csv::Reader::from_path(path)?;
    if r.headers()?.len() != width + 1 {
        return Err(MzError::Io(format!("{}: expected {} columns", path.display(), width + 1)));
    }
    let mut times = Vec::new();
    let mut data = Vec::new();
    for rec in r.records() {
        let rec = rec?;
        let parse = |s: &str| s.trim().parse::<f64>().map_err(|e| MzError::Io(format!("{}: {e}", path.display())));
        times.push(parse(&rec[0])?);
        for v in rec.iter().skip(1) {
            data.push(parse(v)?);
        }
    }
    Ok((times, data))
}

/// Per-node contributions for one chunk, accumulated in node order.
struct Partial {
    f: Vec<f64>,
    g: Vec<f64>,
    gamma: Vec<f64>,
}

impl Partial {
    fn zeros(len: usize, nb: usize, nr: usize) -> Self {
        Self { f: vec![0.0; len * nb * nr], g: vec![0.0; len * nb * nb], gamma: vec![0.0; len * nb * nb] }
    }

    fn add(&mut self, other: &Partial) {
        for (a, b) in [(&mut self.f, &other.f), (&mut self.g, &other.g), (&mut self.gamma, &other.gamma)] {
            for (x, y) in a.iter_mut().zip(b) {
                *x += y;
            }
        }
    }
}

/// Estimates `f`, `g` and `γ` by evolving the full system from every node of
/// `rule`, a standard-normal rule mapped onto `measure`.
///
/// The basis lives on the resolved coordinates; derivatives along the flow use
/// analytic gradients of the Hermite factors and the system's Jacobian.
pub fn estimate_kernels<S>(
    system: &S,
    measure: &GaussianMeasure,
    basis: &HermiteBasisSet,
    rule: &QuadratureRule,
    cfg: &StepperConfig,
) -> Result<KernelTable>
where
    S: GalerkinSystem<Elem = f64>,
{
    cfg.validate()?;
    let p = system.partition();
    let (n, nr, nb) = (p.total, p.resolved, basis.len());
    if measure.dim() != n {
        return Err(MzError::Arity { rule: n, function: measure.dim() });
    }
    if basis.dim() != nr {
        return Err(MzError::Arity { rule: nr, function: basis.dim() });
    }
    let rule = measure.transform(rule)?;
    let steps = cfg.steps();
    let len = steps + 1;

    let run_node = |q: usize, acc: &mut Partial| -> Result<()> {
        let w = rule.weights()[q];
        let mut u = rule.node(q).to_vec();
        let wh0: Vec<f64> = basis.eval(&u[..nr]).iter().map(|h| w * h).collect();
        let mut vals = vec![0.0; nb];
        let mut grad = vec![0.0; nb * nr];
        let mut r = vec![0.0; n];
        let mut jf = vec![0.0; n];
        let mut jp = vec![0.0; n];
        let mut heun = Heun::new(n);
        for step in 0..len {
            let t = step as f64 * cfg.dt;
            system.rhs(t, &u, &mut r);
            if !all_finite(&r) || !all_finite(&u) {
                return Err(MzError::NodeDivergence { node: q, t });
            }
            basis.eval_with_gradient(&u[..nr], &mut vals, &mut grad);
            // d/dt F_j(u(t)) = J_R(u)R − J_R(û,0)(R̂,0) on the resolved rows
            system.jvp(t, &u, &r, &mut jf);
            let uh = zero_fill(&u[..nr], n);
            let rh = zero_fill(&r[..nr], n);
            system.jvp(t, &uh, &rh, &mut jp);
            let gamma = &mut acc.gamma[step * nb * nb..(step + 1) * nb * nb];
            let g = &mut acc.g[step * nb * nb..(step + 1) * nb * nb];
            for nu in 0..nb {
                let lh: f64 = (0..nr).map(|i| r[i] * grad[nu * nr + i]).sum();
                for mu in 0..nb {
                    gamma[nu * nb + mu] += vals[nu] * wh0[mu];
                    g[nu * nb + mu] += lh * wh0[mu];
                }
            }
            let f = &mut acc.f[step * nb * nr..(step + 1) * nb * nr];
            for mu in 0..nb {
                for j in 0..nr {
                    f[mu * nr + j] += (jf[j] - jp[j]) * wh0[mu];
                }
            }
            if step + 1 < len {
                heun.step(
                    &mut |t, x: &[f64], o: &mut [f64]| {
                        system.rhs(t, x, o);
                        Ok(())
                    },
                    t,
                    &mut u,
                    cfg.dt,
                )
                .map_err(|e| match e {
                    MzError::Divergence { t, .. } => MzError::NodeDivergence { node: q, t },
                    other => other,
                })?;
            }
        }
        Ok(())
    };

    let chunks: Vec<Vec<usize>> = (0..rule.len()).collect::<Vec<_>>().chunks(NODE_CHUNK).map(|c| c.to_vec()).collect();
    let mut total = Partial::zeros(len, nb, nr);
    for batch in chunks.chunks(CHUNK_BATCH) {
        let partials: Vec<Result<Partial>> = batch
            .par_iter()
            .map(|chunk| {
                let mut acc = Partial::zeros(len, nb, nr);
                for &q in chunk {
                    run_node(q, &mut acc)?;
                }
                Ok(acc)
            })
            .collect();
        for part in partials {
            total.add(&part?);
        }
    }
    KernelTable::from_parts(cfg.dt, nb, nr, total.f, total.g, total.gamma)
}

/// Coefficients `c_μ = Σ_q w_q f(x_q) h^μ(x_q)` of `f` in the basis, with `rule`
/// already in physical coordinates. The basis reads the leading coordinates.
pub fn project(basis: &HermiteBasisSet, rule: &QuadratureRule, f: impl Fn(&[f64]) -> f64) -> Result<Vec<f64>> {
    if rule.dim() < basis.dim() {
        return Err(MzError::Arity { rule: rule.dim(), function: basis.dim() });
    }
    let mut c = vec![0.0; basis.len()];
    let mut h = vec![0.0; basis.len()];
    for q in 0..rule.len() {
        let x = rule.node(q);
        basis.eval_into(x, &mut h);
        let wf = rule.weights()[q] * f(x);
        for (ci, hi) in c.iter_mut().zip(&h) {
            *ci += wf * hi;
        }
    }
    Ok(c)
}

/// `Σ_μ c_μ h^μ(x)`.
pub fn expand(basis: &HermiteBasisSet, coeffs: &[f64], x: &[f64]) -> f64 {
    basis.eval(x).iter().zip(coeffs).map(|(h, c)| h * c).sum()
}
