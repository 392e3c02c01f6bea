//! Chaos-Galerkin full systems with a resolved/unresolved split.
//!
//! State vectors are laid out so that the resolved variables form a prefix:
//! `u = (û, ũ)`. The projection `P` used throughout replaces the unresolved
//! variables by zero, so the Markovian term is the full right-hand side
//! evaluated at `(û, 0)` and restricted to the resolved rows.

mod burgers;
mod linear;
mod particle;

pub use burgers::{BurgersConfig, BurgersSystem};
pub use linear::LinearOdeSystem;
pub use particle::ParticleSystem;

use crate::error::{MzError, Result};
use crate::scalar::Scalar;

/// Split of the state into a resolved prefix and an unresolved suffix.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Partition {
    pub resolved: usize,
    pub total: usize,
}

impl Partition {
    pub fn new(resolved: usize, total: usize) -> Self {
        assert!(resolved <= total);
        Self { resolved, total }
    }

    pub fn unresolved(&self) -> usize {
        self.total - self.resolved
    }

    pub fn is_resolved(&self, i: usize) -> bool {
        i < self.resolved
    }
}

pub trait GalerkinSystem: Sync {
    type Elem: Scalar;

    fn partition(&self) -> Partition;

    fn dim(&self) -> usize {
        self.partition().total
    }

    fn n_resolved(&self) -> usize {
        self.partition().resolved
    }

    fn initial_state(&self) -> Vec<Self::Elem>;

    /// Full right-hand side `R(t, u)`.
    fn rhs(&self, t: f64, u: &[Self::Elem], out: &mut [Self::Elem]);

    /// Directional derivative `J_R(t, u) v`.
    fn jvp(&self, t: f64, u: &[Self::Elem], v: &[Self::Elem], out: &mut [Self::Elem]);

    /// `PLu_0`: the resolved rows of `R(t, (û, 0))`.
    fn markovian_rhs(&self, t: f64, uhat: &[Self::Elem], out: &mut [Self::Elem]) {
        let p = self.partition();
        let full = zero_fill(uhat, p.total);
        let mut r = vec![Self::Elem::zero(); p.total];
        self.rhs(t, &full, &mut r);
        out[..p.resolved].copy_from_slice(&r[..p.resolved]);
    }

    /// `QLu_0 = R(u)|_H − PLu_0` evaluated at a full state.
    fn fluctuation(&self, t: f64, u: &[Self::Elem], out: &mut [Self::Elem]) {
        let p = self.partition();
        let mut r = vec![Self::Elem::zero(); p.total];
        self.rhs(t, u, &mut r);
        let mut m = vec![Self::Elem::zero(); p.resolved];
        self.markovian_rhs(t, &u[..p.resolved], &mut m);
        for i in 0..p.resolved {
            out[i] = r[i] - m[i];
        }
    }

    /// `PLQLu_0` at a resolved state, where the system provides it.
    fn plql(&self, _t: f64, _uhat: &[Self::Elem], _out: &mut [Self::Elem]) -> Result<()> {
        Err(MzError::UnsupportedTerm("PLQL is not derived for this problem".into()))
    }

    /// `Pe^{tL}QLu_0` evaluated at the full state `u(t)` reached from
    /// zero unresolved initial data.
    fn pe_ql(&self, t: f64, u: &[Self::Elem], out: &mut [Self::Elem]) -> Result<()> {
        self.fluctuation(t, u, out);
        Ok(())
    }

    /// Number of projected terms `PL(QL)^m QLu_0`, `m = 0..depth`, available.
    fn projected_depth(&self) -> usize {
        0
    }
}

/// `(û, 0)` padded to length `total`.
pub fn zero_fill<E: Scalar>(uhat: &[E], total: usize) -> Vec<E> {
    let mut v = vec![E::zero(); total];
    v[..uhat.len()].copy_from_slice(uhat);
    v
}

/// `PLQLu_0` through the Jacobian: at `(û, 0)` the resolved derivatives of
/// `QLu_0` cancel, leaving `J_R(û,0) · (0, R̃(û,0))` on the resolved rows.
pub fn plql_via_jacobian<S: GalerkinSystem + ?Sized>(sys: &S, t: f64, uhat: &[S::Elem], out: &mut [S::Elem]) {
    let p = sys.partition();
    let full = zero_fill(uhat, p.total);
    let mut r = vec![S::Elem::zero(); p.total];
    sys.rhs(t, &full, &mut r);
    for v in r.iter_mut().take(p.resolved) {
        *v = S::Elem::zero();
    }
    let mut jv = vec![S::Elem::zero(); p.total];
    sys.jvp(t, &full, &r, &mut jv);
    out[..p.resolved].copy_from_slice(&jv[..p.resolved]);
}

/// Right-hand side closure for the full system.
pub fn full_rhs<S: GalerkinSystem>(sys: &S) -> impl Fn(f64, &[S::Elem], &mut [S::Elem]) + '_ {
    move |t, u, out| sys.rhs(t, u, out)
}
