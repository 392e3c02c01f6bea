use super::KernelTable;
use crate::error::{MzError, Result};
use crate::galerkin::GalerkinSystem;
use crate::integrate::{integrate_from, StepperConfig, Trajectory};

/// Memory contribution `∫_0^{t_n} A(s)Γ(t_n−s)h(û_0) ds` for every grid time.
#[derive(Debug, Clone, PartialEq)]
pub struct MemorySeries {
    dt: f64,
    values: Vec<Vec<f64>>,
}

impl MemorySeries {
    pub fn new(table: &KernelTable, h0: &[f64]) -> Result<Self> {
        if !table.has_memory_coefficients() {
            return Err(MzError::Config("kernel table has no memory coefficients; solve the Volterra equation first".into()));
        }
        if h0.len() != table.n_basis() {
            return Err(MzError::Arity { rule: table.n_basis(), function: h0.len() });
        }
        let (nb, nr, len, dt) = (table.n_basis(), table.n_resolved(), table.len(), table.dt());
        // v(m) = Γ(t_m) h(û_0)
        let v: Vec<Vec<f64>> = (0..len)
            .map(|m| {
                let gm = table.gamma(m);
                (0..nb).map(|nu| (0..nb).map(|mu| gm[nu * nb + mu] * h0[mu]).sum()).collect()
            })
            .collect();
        let a_dot_v = |m: usize, lag: usize, j: usize| -> f64 {
            let am = table.a(m).unwrap();
            (0..nb).map(|nu| am[nu * nr + j] * v[lag][nu]).sum()
        };
        let values = (0..len)
            .map(|n| {
                (0..nr)
                    .map(|j| {
                        if n == 0 {
                            return 0.0;
                        }
                        let inner: f64 = (1..n).map(|m| a_dot_v(m, n - m, j)).sum();
                        dt * (0.5 * a_dot_v(0, n, j) + inner + 0.5 * a_dot_v(n, 0, j))
                    })
                    .collect()
            })
            .collect();
        Ok(Self { dt, values })
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn horizon(&self) -> f64 {
        (self.values.len() - 1) as f64 * self.dt
    }

    /// Value at grid time `t`; times off the grid or past its end are errors.
    pub fn at(&self, t: f64) -> Result<&[f64]> {
        let x = t / self.dt;
        let n = x.round();
        if (x - n).abs() > 1e-6 || n < 0.0 {
            return Err(MzError::Config(format!("time {t} is not on the kernel grid (δt = {})", self.dt)));
        }
        self.values
            .get(n as usize)
            .map(Vec::as_slice)
            .ok_or(MzError::Extent { t, max: self.horizon() })
    }

    pub fn values(&self) -> &[Vec<f64>] {
        &self.values
    }
}

/// Memory term at a single grid time.
pub fn memory_term(table: &KernelTable, h0: &[f64], t: f64) -> Result<Vec<f64>> {
    if t > table.horizon() * (1.0 + 1e-12) {
        return Err(MzError::Extent { t, max: table.horizon() });
    }
    Ok(MemorySeries::new(table, h0)?.at(t)?.to_vec())
}

/// Reduced model `dû/dt = R(û, 0) [+ memory(t)]` from `û_0`. With memory, the
/// basis is evaluated once at `û_0` and the kernels must cover the horizon.
pub fn run_reduced<S>(
    system: &S,
    uhat0: &[f64],
    cfg: &StepperConfig,
    memory: Option<(&KernelTable, &[f64])>,
) -> Result<Trajectory<f64>>
where
    S: GalerkinSystem<Elem = f64>,
{
    cfg.validate()?;
    if uhat0.len() != system.n_resolved() {
        return Err(MzError::Arity { rule: system.n_resolved(), function: uhat0.len() });
    }
    let series = match memory {
        Some((table, h0)) => {
            if (table.dt() - cfg.dt).abs() > 1e-12 * cfg.dt {
                return Err(MzError::Config(format!("reduced step {} differs from kernel step {}", cfg.dt, table.dt())));
            }
            let horizon = cfg.steps() as f64 * cfg.dt;
            if horizon > table.horizon() + 1e-9 * cfg.dt {
                return Err(MzError::Extent { t: horizon, max: table.horizon() });
            }
            Some(MemorySeries::new(table, h0)?)
        }
        None => None,
    };
    integrate_from(
        |t, u: &[f64], out: &mut [f64]| {
            system.markovian_rhs(t, u, out);
            if let Some(s) = &series {
                for (o, m) in out.iter_mut().zip(s.at(t)?) {
                    *o += m;
                }
            }
            Ok(())
        },
        0.0,
        uhat0,
        cfg,
    )
}
