use nalgebra::DMatrix;

use super::KernelTable;
use crate::error::{MzError, Result};

/// Fills `A` from `F` and `G` by trapezoidal product integration of
/// `a_j(t) = f_j(t) − ∫_0^t Gᵀ(t−s) a_j(s) ds`.
///
/// Each step solves `(I + δt/2 G(0)ᵀ) a_j(t_n) = f_j(t_n) − δt [½ G(t_n)ᵀ a_j(0) + Σ_{0<m<n} G(t_n−t_m)ᵀ a_j(t_m)]`
/// with one LU factorization shared by all steps and resolved indices.
pub fn solve_volterra(table: &mut KernelTable) -> Result<()> {
    let (nb, nr, len, dt) = (table.n_basis(), table.n_resolved(), table.len(), table.dt());
    let g0 = table.g(0);
    let lhs = DMatrix::from_fn(nb, nb, |mu, nu| f64::from(mu == nu) + 0.5 * dt * g0[nu * nb + mu]);
    let lu = lhs.lu();
    if !lu.is_invertible() {
        return Err(MzError::Conditioning("I + (δt/2)G(0)ᵀ is singular".into()));
    }
    let slice = nb * nr;
    let mut a = vec![0.0; len * slice];
    a[..slice].copy_from_slice(table.f(0));
    let mut rhs = DMatrix::<f64>::zeros(nb, nr);
    for n in 1..len {
        let f = table.f(n);
        for mu in 0..nb {
            for j in 0..nr {
                rhs[(mu, j)] = f[mu * nr + j];
            }
        }
        for m in 0..n {
            let w = if m == 0 { 0.5 * dt } else { dt };
            let g = table.g(n - m);
            let am = &a[m * slice..(m + 1) * slice];
            for nu in 0..nb {
                let grow = &g[nu * nb..(nu + 1) * nb];
                for j in 0..nr {
                    let anj = am[nu * nr + j];
                    if anj == 0.0 {
                        continue;
                    }
                    let s = w * anj;
                    for mu in 0..nb {
                        rhs[(mu, j)] -= s * grow[mu];
                    }
                }
            }
        }
        let sol = lu
            .solve(&rhs)
            .ok_or_else(|| MzError::Conditioning(format!("Volterra step {n} could not be solved")))?;
        let an = &mut a[n * slice..(n + 1) * slice];
        for nu in 0..nb {
            for j in 0..nr {
                an[nu * nr + j] = sol[(nu, j)];
            }
        }
        if !an.iter().all(|v| v.is_finite()) {
            return Err(MzError::Conditioning(format!("non-finite memory coefficients at step {n}")));
        }
    }
    table.set_a(a);
    Ok(())
}
