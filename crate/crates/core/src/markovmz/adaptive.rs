use std::time::{Duration, Instant};

use super::estimator::{estimate_y, memory_integral, t0_from_y, DiagnosticRow, EstimatorHistory, NewtonOptions};
use super::hierarchy::{run_reformulated_reduced, MemoryHierarchy};
use crate::error::{MzError, Result};
use crate::galerkin::GalerkinSystem;
use crate::integrate::{Heun, StepperConfig, Trajectory};
use crate::scalar::{all_finite, Scalar};

/// Auxiliary values at the switch.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MemoryStart {
    /// `w(t_min) = I(t_min, t̂_0)` from the recorded samples.
    History,
    /// `w(t_min) = 0`.
    Zero,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AdaptiveConfig {
    pub dt: f64,
    pub horizon: f64,
    /// Accepted steps without a new ε minimum before switching.
    pub window: usize,
    pub newton: NewtonOptions,
    pub seed: f64,
    pub memory_start: MemoryStart,
}

impl AdaptiveConfig {
    pub fn new(dt: f64, horizon: f64) -> Self {
        Self { dt, horizon, window: 50, newton: NewtonOptions::default(), seed: 0.5, memory_start: MemoryStart::History }
    }
}

#[derive(Debug, Clone)]
pub struct AdaptiveOutcome<E> {
    pub t0_hat: f64,
    pub t_min: f64,
    pub switch_step: usize,
    /// Resolved variables: full system up to `t_min`, reduced model after.
    pub trajectory: Trajectory<E>,
    /// Full state at `t_min`.
    pub switch_state: Vec<E>,
    pub diagnostics: Vec<DiagnosticRow>,
    pub full_runtime: Duration,
    pub reduced_runtime: Duration,
}

/// Phase 1 and 2 result: estimator run up to the ε-minimum decision.
#[derive(Debug, Clone)]
pub struct EstimationPhase<E> {
    pub t0_hat: f64,
    pub switch_step: usize,
    pub switch_state: Vec<E>,
    pub w_switch: Vec<E>,
    pub resolved: Trajectory<E>,
    pub diagnostics: Vec<DiagnosticRow>,
    pub runtime: Duration,
}

/// Evolves the full system while estimating `ŷ` and `ε` at every step, until
/// ε has gone `window` accepted steps without a new minimum.
pub fn estimation_phase<S: GalerkinSystem>(system: &S, cfg: &AdaptiveConfig) -> Result<EstimationPhase<S::Elem>> {
    let scfg = StepperConfig::new(cfg.dt, cfg.horizon);
    scfg.validate()?;
    if cfg.window == 0 {
        return Err(MzError::Config("ε window must be at least 1".into()));
    }
    let started = Instant::now();
    let p = system.partition();
    let (n, nr) = (p.total, p.resolved);
    let steps = scfg.steps();
    let mut u = system.initial_state();
    let mut hist = EstimatorHistory::<S::Elem>::new(cfg.dt);
    let mut plql = vec![S::Elem::zero(); nr];
    let mut peql = vec![S::Elem::zero(); nr];
    let mut resolved = Trajectory::new();
    let mut best: Option<(usize, f64, Vec<S::Elem>)> = None;
    let mut since_best = 0usize;
    let mut heun = Heun::new(n);
    let mut rhs = |t: f64, x: &[S::Elem], o: &mut [S::Elem]| {
        system.rhs(t, x, o);
        Ok(())
    };

    for step in 0..=steps {
        let t = step as f64 * cfg.dt;
        if !all_finite(&u) {
            return Err(MzError::Divergence { t, step });
        }
        resolved.push(t, u[..nr].to_vec());
        system.plql(t, &u[..nr], &mut plql)?;
        hist.push_sample(plql.iter().map(|&x| x * 2.0).collect());
        let mut row = DiagnosticRow { t, y_hat: None, t0_hat: None, epsilon: None, newton_iters: 0 };
        if step >= 1 {
            system.pe_ql(t, &u, &mut peql)?;
            let target: f64 = peql.iter().zip(&u[..nr]).map(|(q, x)| 2.0 * q.re_dot(*x)).sum();
            let seed = hist.y_hat().unwrap_or(cfg.seed);
            match estimate_y(&hist, &u[..nr], target, seed, &cfg.newton) {
                Ok(est) => {
                    row.y_hat = Some(est.y);
                    row.newton_iters = est.iterations;
                    row.t0_hat = t0_from_y(est.y, cfg.dt).ok();
                    let (eps, improved) = hist.accept(est.y);
                    row.epsilon = eps;
                    if eps.is_some() {
                        if improved {
                            best = Some((step, est.y, u.clone()));
                            since_best = 0;
                        } else {
                            since_best += 1;
                        }
                    }
                }
                Err(MzError::EstimationFailed(msg)) => log::debug!("t = {t}: {msg}"),
                Err(e) => return Err(e),
            }
        }
        hist.rows.push(row);
        if since_best >= cfg.window {
            let (switch_step, y, state) = best.expect("a minimum precedes the window");
            let t0_hat = t0_from_y(y, cfg.dt)?;
            let w_switch = memory_integral(&hist.samples()[..=switch_step], y, cfg.dt);
            resolved.times.truncate(switch_step + 1);
            resolved.states.truncate(switch_step + 1);
            return Ok(EstimationPhase {
                t0_hat,
                switch_step,
                switch_state: state,
                w_switch,
                resolved,
                diagnostics: hist.rows,
                runtime: started.elapsed(),
            });
        }
        if step < steps {
            heun.step(&mut rhs, t, &mut u, cfg.dt).map_err(|e| match e {
                MzError::Divergence { t, .. } => MzError::Divergence { t, step },
                other => other,
            })?;
        }
    }
    Err(MzError::NoSwitch { t: steps as f64 * cfg.dt })
}

/// Full system with on-the-fly memory-length estimation, then the depth-one
/// reformulated model from `t_min` to the horizon.
pub fn adaptive_run<S: GalerkinSystem>(system: &S, cfg: &AdaptiveConfig) -> Result<AdaptiveOutcome<S::Elem>> {
    let phase = estimation_phase(system, cfg)?;
    let nr = system.n_resolved();
    let t_min = phase.switch_step as f64 * cfg.dt;
    let total = StepperConfig::new(cfg.dt, cfg.horizon).steps();
    let mut trajectory = phase.resolved;
    let started = Instant::now();
    if phase.switch_step < total {
        let hierarchy = MemoryHierarchy::single(phase.t0_hat, 1, nr)?;
        let w0 = match cfg.memory_start {
            MemoryStart::History => phase.w_switch.clone(),
            MemoryStart::Zero => vec![S::Elem::zero(); nr],
        };
        let rcfg = StepperConfig::new(cfg.dt, (total - phase.switch_step) as f64 * cfg.dt);
        let run = run_reformulated_reduced(system, &phase.switch_state[..nr], &hierarchy, &rcfg, t_min, Some(&w0))?;
        for (t, s) in run.resolved.times.iter().zip(run.resolved.states).skip(1) {
            trajectory.push(*t, s);
        }
    }
    Ok(AdaptiveOutcome {
        t0_hat: phase.t0_hat,
        t_min,
        switch_step: phase.switch_step,
        trajectory,
        switch_state: phase.switch_state,
        diagnostics: phase.diagnostics,
        full_runtime: phase.runtime,
        reduced_runtime: started.elapsed(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::galerkin::{BurgersConfig, BurgersSystem};

    #[test]
    fn switches_at_first_epsilon_minimum() {
        let sys = BurgersSystem::new(BurgersConfig { modes: 32, ..Default::default() }).unwrap();
        let cfg = AdaptiveConfig::new(1e-3, 0.6);
        let out = adaptive_run(&sys, &cfg).unwrap();
        assert!(out.t0_hat > 0.3 && out.t0_hat < 0.45, "t0 {}", out.t0_hat);
        assert_eq!(out.trajectory.len(), 601);
        assert!(out.trajectory.times.windows(2).all(|w| (w[1] - w[0] - 1e-3).abs() < 1e-9));
        let eps: Vec<f64> = out.diagnostics.iter().filter_map(|r| r.epsilon).collect();
        assert!(eps.iter().all(|e| *e >= 0.0));
        let (_, min) = eps.iter().enumerate().fold((0, f64::INFINITY), |acc, (i, &e)| if e < acc.1 { (i, e) } else { acc });
        let at_switch = out.diagnostics[out.switch_step].epsilon.unwrap();
        assert_eq!(at_switch, min);
        assert!(out.diagnostics.iter().filter(|r| r.y_hat.is_some()).all(|r| r.newton_iters <= 10));
        // the stitched prefix is the full system itself
        let full = crate::integrate::integrate(
            |t, u: &[crate::Complex64], o: &mut [crate::Complex64]| sys.rhs(t, u, o),
            &sys.initial_state(),
            &StepperConfig::new(1e-3, 0.6),
        )
        .unwrap();
        let nr = sys.n_resolved();
        assert_eq!(out.trajectory.states[out.switch_step], full.states[out.switch_step][..nr].to_vec());
        let last = out.trajectory.states.last().unwrap();
        let gap = last.iter().zip(&full.states[600][..nr]).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max);
        assert!(gap < 0.05, "gap {gap}");
    }

    #[test]
    fn deterministic_switch() {
        let sys = BurgersSystem::new(BurgersConfig { modes: 16, ..Default::default() }).unwrap();
        let cfg = AdaptiveConfig { window: 20, ..AdaptiveConfig::new(1e-3, 2.0) };
        let a = estimation_phase(&sys, &cfg);
        let b = estimation_phase(&sys, &cfg);
        match (a, b) {
            (Ok(a), Ok(b)) => {
                assert_eq!(a.switch_step, b.switch_step);
                assert_eq!(a.t0_hat, b.t0_hat);
            }
            (Err(a), Err(b)) => assert_eq!(a, b),
            _ => panic!("runs disagree"),
        }
    }

    #[test]
    fn short_horizon_reports_no_switch() {
        let sys = BurgersSystem::new(BurgersConfig { modes: 16, ..Default::default() }).unwrap();
        let cfg = AdaptiveConfig { window: 1000, ..AdaptiveConfig::new(1e-3, 0.05) };
        assert!(matches!(estimation_phase(&sys, &cfg), Err(MzError::NoSwitch { .. })));
    }
}
