use crate::error::{MzError, Result};
use crate::galerkin::GalerkinSystem;
use crate::integrate::{integrate_from, StepperConfig, Trajectory};
use crate::scalar::Scalar;

/// Memory lengths `t_m` and subinterval counts `n_m` of a depth-`n` hierarchy
/// over `width` resolved variables.
///
/// Auxiliary state layout: level-major, then subinterval, then resolved index.
#[derive(Debug, Clone, PartialEq)]
pub struct MemoryHierarchy {
    lengths: Vec<f64>,
    subintervals: Vec<usize>,
    width: usize,
}

impl MemoryHierarchy {
    pub fn new(lengths: Vec<f64>, subintervals: Vec<usize>, width: usize) -> Result<Self> {
        if lengths.is_empty() || lengths.len() != subintervals.len() {
            return Err(MzError::Config("memory hierarchy needs one subinterval count per level".into()));
        }
        if lengths.iter().any(|&t| !(t > 0.0 && t.is_finite())) {
            return Err(MzError::Config(format!("memory lengths must be positive, got {lengths:?}")));
        }
        if lengths.windows(2).any(|w| w[1] > w[0]) {
            return Err(MzError::Config("memory lengths must be nonincreasing with level".into()));
        }
        if subintervals.contains(&0) {
            return Err(MzError::Config("each level needs at least one subinterval".into()));
        }
        Ok(Self { lengths, subintervals, width })
    }

    /// Depth one with `n0` subintervals.
    pub fn single(t0: f64, n0: usize, width: usize) -> Result<Self> {
        Self::new(vec![t0], vec![n0], width)
    }

    pub fn depth(&self) -> usize {
        self.lengths.len()
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn lengths(&self) -> &[f64] {
        &self.lengths
    }

    pub fn subintervals(&self) -> &[usize] {
        &self.subintervals
    }

    /// Total number of auxiliary unknowns.
    pub fn state_len(&self) -> usize {
        self.subintervals.iter().sum::<usize>() * self.width
    }

    fn offset(&self, level: usize, sub: usize) -> usize {
        (self.subintervals[..level].iter().sum::<usize>() + sub) * self.width
    }

    /// `w^{(i)}_m` for level `m`, subinterval `i` (0-based).
    pub fn block<'a, E>(&self, w: &'a [E], level: usize, sub: usize) -> &'a [E] {
        let o = self.offset(level, sub);
        &w[o..o + self.width]
    }

    /// `w_0 = Σ_i w^{(i)}_0`, the memory fed back into the resolved equations.
    pub fn level0_sum<E: Scalar>(&self, w: &[E], out: &mut [E]) {
        out[..self.width].fill(E::zero());
        for i in 0..self.subintervals[0] {
            for (o, &x) in out.iter_mut().zip(self.block(w, 0, i)) {
                *o += x;
            }
        }
    }

    /// Time derivative of every `w^{(i)}_m`.
    ///
    /// `projected[m]` holds the level-`m` projected term (`PLQLu_0` for
    /// `m = 0`), entering with factor `±2`; level `m + 1` feeds
    /// subinterval `i` of level `m` through its own subinterval `i` when it has
    /// one, and the level past the deepest is zero.
    pub fn hierarchy_rhs<E: Scalar>(&self, w: &[E], projected: &[&[E]], out: &mut [E]) -> Result<()> {
        if projected.len() < self.depth() {
            return Err(MzError::UnsupportedTerm(format!(
                "depth {} hierarchy needs {} projected terms, {} available",
                self.depth(),
                self.depth(),
                projected.len()
            )));
        }
        for m in 0..self.depth() {
            let n = self.subintervals[m];
            let rate = 2.0 * n as f64 / self.lengths[m];
            let src = projected[m];
            for i in 1..=n {
                let o = self.offset(m, i - 1);
                let sign = if i % 2 == 1 { 1.0 } else { -1.0 };
                for k in 0..self.width {
                    let mut d = w[o + k] * (-rate) + src[k] * (2.0 * sign);
                    for j in 1..i {
                        let s = if (i + j + 1) % 2 == 0 { 1.0 } else { -1.0 };
                        d += self.block(w, m, j - 1)[k] * (2.0 * rate * s);
                    }
                    if m + 1 < self.depth() && i <= self.subintervals[m + 1] {
                        d += self.block(w, m + 1, i - 1)[k];
                    }
                    out[o + k] = d;
                }
            }
        }
        Ok(())
    }
}

/// Resolved trajectory and auxiliary variables of a reformulated run.
#[derive(Debug, Clone, PartialEq)]
pub struct ReformulatedRun<E> {
    pub resolved: Trajectory<E>,
    pub memory: Trajectory<E>,
}

/// Integrates `dû/dt = PLu_0(û) + w_0` together with the hierarchy, starting
/// at `t_start` with auxiliary values `w_init` (zeros when absent). The
/// level-0 source is `PLQLu_0` at the current reduced state, which
/// [`MemoryHierarchy::hierarchy_rhs`] doubles.
pub fn run_reformulated_reduced<S: GalerkinSystem>(
    system: &S,
    uhat0: &[S::Elem],
    hierarchy: &MemoryHierarchy,
    cfg: &StepperConfig,
    t_start: f64,
    w_init: Option<&[S::Elem]>,
) -> Result<ReformulatedRun<S::Elem>> {
    let nr = system.n_resolved();
    if uhat0.len() != nr || hierarchy.width() != nr {
        return Err(MzError::Arity { rule: nr, function: uhat0.len() });
    }
    if hierarchy.depth() > system.projected_depth() {
        return Err(MzError::UnsupportedTerm(format!(
            "hierarchy depth {} exceeds the {} projected terms this problem provides",
            hierarchy.depth(),
            system.projected_depth()
        )));
    }
    let nw = hierarchy.state_len();
    let mut x0 = uhat0.to_vec();
    match w_init {
        Some(w) if w.len() == nw => x0.extend_from_slice(w),
        Some(w) => return Err(MzError::Arity { rule: nw, function: w.len() }),
        None => x0.extend(std::iter::repeat(S::Elem::zero()).take(nw)),
    }
    let mut src = vec![S::Elem::zero(); nr];
    let mut mem = vec![S::Elem::zero(); nr];
    let traj = integrate_from(
        |t, x: &[S::Elem], out: &mut [S::Elem]| {
            let (u, w) = x.split_at(nr);
            let (du, dw) = out.split_at_mut(nr);
            system.markovian_rhs(t, u, du);
            hierarchy.level0_sum(w, &mut mem);
            for (d, m) in du.iter_mut().zip(&mem) {
                *d += *m;
            }
            system.plql(t, u, &mut src)?;
            hierarchy.hierarchy_rhs(w, &[&src], dw)
        },
        t_start,
        &x0,
        cfg,
    )?;
    let mut resolved = Trajectory::new();
    let mut memory = Trajectory::new();
    for (t, x) in traj.times.iter().zip(&traj.states) {
        resolved.push(*t, x[..nr].to_vec());
        memory.push(*t, x[nr..].to_vec());
    }
    Ok(ReformulatedRun { resolved, memory })
}
