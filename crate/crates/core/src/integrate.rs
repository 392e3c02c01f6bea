//! Fixed-step modified Euler (Heun) integration and trajectory recording.

use std::collections::BTreeMap;

use crate::error::{MzError, Result};
use crate::scalar::{all_finite, Scalar};

/// Relative slack when deciding whether `T/δt` is an integer.
const STEP_COUNT_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepperConfig {
    pub dt: f64,
    pub horizon: f64,
    pub record_every: usize,
}

impl StepperConfig {
    pub fn new(dt: f64, horizon: f64) -> Self {
        Self { dt, horizon, record_every: 1 }
    }

    pub fn with_record_every(mut self, every: usize) -> Self {
        self.record_every = every;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.dt > 0.0) || !self.dt.is_finite() {
            return Err(MzError::Config(format!("time step must be positive, got {}", self.dt)));
        }
        if !(self.horizon > 0.0) || !self.horizon.is_finite() {
            return Err(MzError::Config(format!("horizon must be positive, got {}", self.horizon)));
        }
        if self.record_every == 0 {
            return Err(MzError::Config("record_every must be at least 1".into()));
        }
        Ok(())
    }

    /// Number of steps, `⌊T/δt⌋` with round-off forgiveness.
    pub fn steps(&self) -> usize {
        let ratio = self.horizon / self.dt;
        let nearest = ratio.round();
        if (ratio - nearest).abs() <= STEP_COUNT_TOL * nearest.max(1.0) {
            let n = nearest as usize;
            if n % self.record_every != 0 {
                log::warn!("{n} steps is not a multiple of record_every = {}", self.record_every);
            }
            n
        } else {
            log::warn!("horizon {} is not a multiple of dt {}; truncating", self.horizon, self.dt);
            ratio.floor() as usize
        }
    }
}

/// Recorded states on a uniform grid, plus optional named scalar channels.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory<E> {
    pub times: Vec<f64>,
    pub states: Vec<Vec<E>>,
    pub aux: BTreeMap<String, Vec<f64>>,
}

impl<E: Scalar> Trajectory<E> {
    pub fn new() -> Self {
        Self { times: Vec::new(), states: Vec::new(), aux: BTreeMap::new() }
    }

    pub fn push(&mut self, t: f64, state: Vec<E>) {
        self.times.push(t);
        self.states.push(state);
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn last(&self) -> Option<(f64, &[E])> {
        self.times.last().map(|&t| (t, self.states.last().unwrap().as_slice()))
    }

    /// Time series of one component.
    pub fn component(&self, index: usize) -> Vec<E> {
        self.states.iter().map(|s| s[index]).collect()
    }

    /// Keeps only the first `n` components of every state.
    pub fn truncated(&self, n: usize) -> Self {
        Self {
            times: self.times.clone(),
            states: self.states.iter().map(|s| s[..n].to_vec()).collect(),
            aux: self.aux.clone(),
        }
    }
}

impl<E: Scalar> Default for Trajectory<E> {
    fn default() -> Self {
        Self::new()
    }
}

/// Reusable stage buffers for repeated Heun steps.
#[derive(Debug, Clone)]
pub struct Heun<E> {
    k1: Vec<E>,
    k2: Vec<E>,
    pred: Vec<E>,
}

impl<E: Scalar> Heun<E> {
    pub fn new(dim: usize) -> Self {
        Self { k1: vec![E::zero(); dim], k2: vec![E::zero(); dim], pred: vec![E::zero(); dim] }
    }

    /// Advances `u` in place from `t` to `t + dt`.
    pub fn step<F>(&mut self, rhs: &mut F, t: f64, u: &mut [E], dt: f64) -> Result<()>
    where
        F: FnMut(f64, &[E], &mut [E]) -> Result<()>,
    {
        rhs(t, u, &mut self.k1)?;
        if !all_finite(&self.k1) {
            return Err(MzError::Divergence { t, step: 0 });
        }
        for ((p, &x), &k) in self.pred.iter_mut().zip(u.iter()).zip(&self.k1) {
            *p = x + k * dt;
        }
        rhs(t + dt, &self.pred, &mut self.k2)?;
        if !all_finite(&self.k2) {
            return Err(MzError::Divergence { t: t + dt, step: 0 });
        }
        let half = 0.5 * dt;
        for ((x, &a), &b) in u.iter_mut().zip(&self.k1).zip(&self.k2) {
            *x += (a + b) * half;
        }
        Ok(())
    }

    /// `rhs(t, u)` from the most recent step.
    pub fn last_slope(&self) -> &[E] {
        &self.k1
    }
}

/// One modified Euler step: `u + δt/2 (R(t,u) + R(t+δt, u + δt R(t,u)))`.
pub fn heun_step<E, F>(mut rhs: F, t: f64, u: &[E], dt: f64) -> Result<Vec<E>>
where
    E: Scalar,
    F: FnMut(f64, &[E], &mut [E]),
{
    if !(dt > 0.0) {
        return Err(MzError::Config(format!("time step must be positive, got {dt}")));
    }
    let mut out = u.to_vec();
    let mut h = Heun::new(u.len());
    h.step(
        &mut |t, x: &[E], o: &mut [E]| {
            rhs(t, x, o);
            Ok(())
        },
        t,
        &mut out,
        dt,
    )?;
    Ok(out)
}

/// Integrates from `t = 0` over `cfg.horizon`, recording every `record_every` steps.
pub fn integrate<E, F>(mut rhs: F, u0: &[E], cfg: &StepperConfig) -> Result<Trajectory<E>>
where
    E: Scalar,
    F: FnMut(f64, &[E], &mut [E]),
{
    integrate_from(
        |t, x: &[E], o: &mut [E]| {
            rhs(t, x, o);
            Ok(())
        },
        0.0,
        u0,
        cfg,
    )
}

/// Like [`integrate`] but starting at `t_start` with a fallible right-hand side.
/// Step `n` lands on `t_start + n·δt`.
pub fn integrate_from<E, F>(mut rhs: F, t_start: f64, u0: &[E], cfg: &StepperConfig) -> Result<Trajectory<E>>
where
    E: Scalar,
    F: FnMut(f64, &[E], &mut [E]) -> Result<()>,
{
    cfg.validate()?;
    if !all_finite(u0) {
        return Err(MzError::Divergence { t: t_start, step: 0 });
    }
    let steps = cfg.steps();
    let mut traj = Trajectory::new();
    let mut u = u0.to_vec();
    traj.push(t_start, u.clone());
    let mut h = Heun::new(u.len());
    for n in 0..steps {
        let t = t_start + n as f64 * cfg.dt;
        h.step(&mut rhs, t, &mut u, cfg.dt).map_err(|e| match e {
            MzError::Divergence { t, .. } => MzError::Divergence { t, step: n },
            other => other,
        })?;
        if !all_finite(&u) {
            return Err(MzError::Divergence { t: t + cfg.dt, step: n + 1 });
        }
        if (n + 1) % cfg.record_every == 0 {
            traj.push(t_start + (n + 1) as f64 * cfg.dt, u.clone());
        }
    }
    Ok(traj)
}
