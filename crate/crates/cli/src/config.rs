//! Run configuration: TOML sections `[problem]`, `[time]`, `[model]`,
//! `[projection]`, `[estimator]` and `[output]`. Unset fields take the
//! problem's defaults; unknown keys are rejected.

use std::path::{Path, PathBuf};
use std::str::FromStr;

use mzuq_core::markovmz::{AdaptiveConfig, MemoryStart, NewtonOptions};
use mzuq_core::{BurgersConfig, MzError, QuadratureKind, Result, StepperConfig};
use serde::Deserialize;
use sha2::{Digest, Sha256};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ProblemKind {
    LinearOde,
    Particle,
    Burgers,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ModelKind {
    Full,
    Markovian,
    VolterraMemory,
    ReformulatedMemory,
    Adaptive,
}

impl FromStr for ModelKind {
    type Err = MzError;

    fn from_str(s: &str) -> Result<Self> {
        Ok(match s {
            "full" => Self::Full,
            "markovian" => Self::Markovian,
            "volterra-memory" => Self::VolterraMemory,
            "reformulated-memory" => Self::ReformulatedMemory,
            "adaptive" => Self::Adaptive,
            other => {
                return Err(MzError::Config(format!(
                    "unknown model '{other}' (full, markovian, volterra-memory, reformulated-memory, adaptive)"
                )))
            }
        })
    }
}

impl ModelKind {
    pub fn name(self) -> &'static str {
        match self {
            Self::Full => "full",
            Self::Markovian => "markovian",
            Self::VolterraMemory => "volterra-memory",
            Self::ReformulatedMemory => "reformulated-memory",
            Self::Adaptive => "adaptive",
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawProblem {
    kind: ProblemKind,
    order: Option<usize>,
    resolved: Option<usize>,
    u_init: Option<f64>,
    forcing_phase: Option<f64>,
    viscosity: Option<f64>,
    modes: Option<usize>,
    alpha0: Option<f64>,
    alpha1: Option<f64>,
    zero_nyquist: Option<bool>,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawTime {
    dt: Option<f64>,
    horizon: Option<f64>,
    record_every: Option<usize>,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawModel {
    name: Option<String>,
    t0: Option<f64>,
    subintervals: Option<usize>,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawProjection {
    order: Option<usize>,
    variances: Option<Vec<f64>>,
    quadrature: Option<String>,
    level: Option<usize>,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawEstimator {
    newton_tol: Option<f64>,
    max_iter: Option<usize>,
    window: Option<usize>,
    seed: Option<f64>,
    memory_start: Option<String>,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawOutput {
    dir: Option<PathBuf>,
    cache: Option<PathBuf>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConfig {
    problem: RawProblem,
    #[serde(default)]
    time: RawTime,
    #[serde(default)]
    model: RawModel,
    #[serde(default)]
    projection: RawProjection,
    #[serde(default)]
    estimator: RawEstimator,
    #[serde(default)]
    output: RawOutput,
}

/// Validated configuration with every default filled in.
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub kind: ProblemKind,
    /// Highest chaos index for scalar problems, number of chaos coefficients for Burgers.
    pub order: usize,
    /// Resolved orders `0..=resolved` (scalar) or `0..resolved` (Burgers).
    pub resolved: usize,
    pub u_init: f64,
    pub forcing_phase: f64,
    pub burgers: BurgersConfig,
    pub dt: f64,
    pub horizon: f64,
    pub record_every: usize,
    pub model: ModelKind,
    pub t0: Option<f64>,
    pub subintervals: usize,
    pub basis_order: usize,
    pub variances: Vec<f64>,
    pub quadrature: QuadratureKind,
    pub level: usize,
    pub newton: NewtonOptions,
    pub window: usize,
    pub seed: f64,
    pub memory_start: MemoryStart,
    pub out_dir: PathBuf,
    pub cache: Option<PathBuf>,
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| MzError::Config(format!("{}: {e}", path.display())))?;
        Self::parse(&text)
    }

    pub fn parse(text: &str) -> Result<Self> {
        let raw: RawConfig = toml::from_str(text).map_err(|e| MzError::Config(e.to_string().replace('\n', " ")))?;
        let p = &raw.problem;
        let kind = p.kind;
        let burgers = kind == ProblemKind::Burgers;
        if !burgers {
            for (name, set) in [
                ("viscosity", p.viscosity.is_some()),
                ("modes", p.modes.is_some()),
                ("alpha0", p.alpha0.is_some()),
                ("alpha1", p.alpha1.is_some()),
                ("zero_nyquist", p.zero_nyquist.is_some()),
            ] {
                if set {
                    return Err(MzError::Config(format!("problem.{name} only applies to burgers")));
                }
            }
        }
        if kind != ProblemKind::Particle && p.forcing_phase.is_some() {
            return Err(MzError::Config("problem.forcing_phase only applies to particle".into()));
        }
        let order = p.order.unwrap_or(if burgers { 7 } else { 6 });
        let resolved = p.resolved.unwrap_or(if burgers { 2 } else { 1 });
        let defaults = BurgersConfig::default();
        let bcfg = BurgersConfig {
            modes: p.modes.unwrap_or(defaults.modes),
            chaos: order,
            resolved,
            viscosity: p.viscosity.unwrap_or(defaults.viscosity),
            alpha0: p.alpha0.unwrap_or(defaults.alpha0),
            alpha1: p.alpha1.unwrap_or(defaults.alpha1),
            zero_nyquist: p.zero_nyquist.unwrap_or(defaults.zero_nyquist),
        };
        if burgers {
            bcfg.validate()?;
        } else if order < 1 || resolved < 1 || resolved > order {
            return Err(MzError::Config(format!("need 1 ≤ resolved ≤ order, got resolved {resolved}, order {order}")));
        }

        let dt = raw.time.dt.unwrap_or(if burgers { 1e-3 } else { 1e-2 });
        let horizon = raw.time.horizon.unwrap_or(if burgers { 3.0 } else { 10.0 });
        let record_every = raw.time.record_every.unwrap_or(if burgers { 10 } else { 1 });
        StepperConfig { dt, horizon, record_every }.validate()?;

        let model = raw.model.name.as_deref().unwrap_or("full").parse()?;
        if let Some(t0) = raw.model.t0 {
            if !(t0 > 0.0 && t0.is_finite()) {
                return Err(MzError::Config(format!("model.t0 must be positive, got {t0}")));
            }
        }
        let subintervals = raw.model.subintervals.unwrap_or(1);
        if subintervals == 0 {
            return Err(MzError::Config("model.subintervals must be at least 1".into()));
        }

        let n_state = order + 1;
        let basis_order = raw.projection.order.unwrap_or(if kind == ProblemKind::Particle { 3 } else { 5 });
        let variances = match raw.projection.variances {
            Some(v) if v.len() == 1 => vec![v[0]; n_state],
            Some(v) if v.len() == n_state => v,
            Some(v) => {
                return Err(MzError::Config(format!("projection.variances needs 1 or {n_state} entries, got {}", v.len())))
            }
            None if kind == ProblemKind::Particle => (0..n_state).map(|i| 10f64.powi(-2 * i as i32 - 2)).collect(),
            None => vec![0.01; n_state],
        };
        if variances.iter().any(|v| !(*v > 0.0 && v.is_finite())) {
            return Err(MzError::Config("projection.variances must be positive".into()));
        }
        let quadrature: QuadratureKind = raw.projection.quadrature.as_deref().unwrap_or("smolyak").parse()?;
        if quadrature == QuadratureKind::GaussLegendre {
            return Err(MzError::Config("projection.quadrature must be a Gauss-Hermite rule".into()));
        }
        let level = raw.projection.level.unwrap_or(3);
        if level == 0 {
            return Err(MzError::Config("projection.level must be at least 1".into()));
        }

        let e = &raw.estimator;
        let newton = NewtonOptions {
            tol: e.newton_tol.unwrap_or(1e-14),
            max_iter: e.max_iter.unwrap_or(50),
            ..NewtonOptions::default()
        };
        if !(newton.tol > 0.0) || newton.max_iter == 0 {
            return Err(MzError::Config("estimator.newton_tol and max_iter must be positive".into()));
        }
        let window = e.window.unwrap_or(50);
        if window == 0 {
            return Err(MzError::Config("estimator.window must be at least 1".into()));
        }
        let seed = e.seed.unwrap_or(0.5);
        if !(seed > 0.0 && seed < 1.0) {
            return Err(MzError::Config(format!("estimator.seed must lie in (0, 1), got {seed}")));
        }
        let memory_start = match e.memory_start.as_deref().unwrap_or("history") {
            "history" => MemoryStart::History,
            "zero" => MemoryStart::Zero,
            other => return Err(MzError::Config(format!("estimator.memory_start '{other}' is not history or zero"))),
        };

        Ok(Self {
            kind,
            order,
            resolved,
            u_init: p.u_init.unwrap_or(1.0),
            forcing_phase: p.forcing_phase.unwrap_or(0.0),
            burgers: bcfg,
            dt,
            horizon,
            record_every,
            model,
            t0: raw.model.t0,
            subintervals,
            basis_order,
            variances,
            quadrature,
            level,
            newton,
            window,
            seed,
            memory_start,
            out_dir: raw.output.dir.unwrap_or_else(|| PathBuf::from("out")),
            cache: raw.output.cache,
        })
    }

    pub fn stepper(&self) -> StepperConfig {
        StepperConfig::new(self.dt, self.horizon).with_record_every(self.record_every)
    }

    pub fn adaptive(&self) -> AdaptiveConfig {
        AdaptiveConfig {
            window: self.window,
            newton: self.newton,
            seed: self.seed,
            memory_start: self.memory_start,
            ..AdaptiveConfig::new(self.dt, self.horizon)
        }
    }

    /// Content hash of everything the kernel tables depend on.
    pub fn kernel_key(&self) -> String {
        let steps = self.stepper().steps();
        let desc = format!(
            "kernels|{:?}|M={}|L={}|u={:e}|phase={:e}|p={}|var={:?}|rule={:?}|level={}|dt={:e}|n={}",
            self.kind,
            self.order,
            self.resolved,
            self.u_init,
            self.forcing_phase,
            self.basis_order,
            self.variances,
            self.quadrature,
            self.level,
            self.dt,
            steps
        );
        hex::encode(Sha256::digest(desc.as_bytes()))
    }

    /// Content hash of everything the memory-length estimate depends on.
    /// The horizon is left out: a longer run reaches the same switch.
    pub fn estimate_key(&self) -> String {
        let desc = format!(
            "t0|{:?}|{:?}|M={}|L={}|u={:e}|dt={:e}|W={}|tol={:e}|seed={:e}",
            self.kind, self.burgers, self.order, self.resolved, self.u_init, self.dt, self.window, self.newton.tol, self.seed
        );
        hex::encode(Sha256::digest(desc.as_bytes()))
    }
}
