//! The four subcommands.

use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use mzuq_core::finiterank::{estimate_kernels, run_reduced, solve_volterra};
use mzuq_core::galerkin::full_rhs;
use mzuq_core::markovmz::{adaptive_run, estimation_phase, run_reformulated_reduced, DiagnosticRow};
use mzuq_core::polybasis::{quad_tensor, quadrature, triple_tensor};
use mzuq_core::stats::relative_error;
use mzuq_core::{
    integrate, BurgersSystem, GalerkinSystem, GaussianMeasure, HermiteBasisSet, KernelTable, LegendreFamily,
    LinearOdeSystem, MemoryHierarchy, MzError, ParticleSystem, Result, StatSeries, StepperConfig, Trajectory,
    TripleConvention,
};

use crate::config::{ModelKind, ProblemKind, RunConfig};
use crate::output::{self, num, Table};
use crate::svg::{Plot, Series};

/// Columns plotted per comparison; the error CSVs carry every shared column.
const MAX_PLOTTED_COLUMNS: usize = 6;

fn create_dir(dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| MzError::Io(format!("{}: {e}", dir.display())))
}

/// Dumps the `e`, `c` and `d` tensors for the configured order.
pub fn tensors(cfg: &RunConfig) -> Result<Vec<PathBuf>> {
    create_dir(&cfg.out_dir)?;
    // Burgers carries `order` coefficients, the scalar problems `order + 1`
    let max = if cfg.kind == ProblemKind::Burgers { cfg.order - 1 } else { cfg.order };
    let ortho = LegendreFamily::orthonormal(max);
    let e = triple_tensor(&ortho, max, TripleConvention::ENormalized);
    let c = triple_tensor(&LegendreFamily::standard(max), max, TripleConvention::CRatio);
    let d = quad_tensor(&ortho, max);
    let paths: Vec<PathBuf> = ["e.csv", "c.csv", "d.csv"].iter().map(|n| cfg.out_dir.join(n)).collect();
    e.write_csv(file(&paths[0])?)?;
    c.write_csv(file(&paths[1])?)?;
    d.write_csv(file(&paths[2])?)?;
    log::info!("c tensor: {} of {} entries nonzero", c.nonzero_count(), (max + 1).pow(3));
    Ok(paths)
}

fn file(path: &Path) -> Result<std::io::BufWriter<fs::File>> {
    let f = fs::File::create(path).map_err(|e| MzError::Io(format!("{}: {e}", path.display())))?;
    Ok(std::io::BufWriter::new(f))
}

struct ModelRun<E> {
    traj: Trajectory<E>,
    diagnostics: Option<Vec<DiagnosticRow>>,
    t0_hat: Option<f64>,
}

impl<E> ModelRun<E> {
    fn plain(traj: Trajectory<E>) -> Self {
        Self { traj, diagnostics: None, t0_hat: None }
    }
}

fn t0_cache_path(cfg: &RunConfig) -> Option<PathBuf> {
    cfg.cache.as_ref().map(|c| c.join(format!("t0-{}.txt", cfg.estimate_key())))
}

fn store_t0(cfg: &RunConfig, t0: f64) -> Result<()> {
    if let Some(path) = t0_cache_path(cfg) {
        create_dir(path.parent().unwrap())?;
        output::write_text(&path, &format!("{}\n", num(t0)))?;
    }
    Ok(())
}

/// `model.t0` if set, otherwise a memory length cached by `estimate`.
fn memory_length(cfg: &RunConfig) -> Result<f64> {
    if let Some(t0) = cfg.t0 {
        return Ok(t0);
    }
    let path = t0_cache_path(cfg)
        .ok_or_else(|| MzError::Config("reformulated-memory needs model.t0 or a cache holding an estimate".into()))?;
    let text = fs::read_to_string(&path)
        .map_err(|_| MzError::Config(format!("no cached memory length at {}; run `estimate` first", path.display())))?;
    text.trim().parse().map_err(|e| MzError::Config(format!("{}: {e}", path.display())))
}

/// Models shared by every problem; finite-rank memory is handled by the caller.
fn evolve<S: GalerkinSystem>(sys: &S, cfg: &RunConfig) -> Result<ModelRun<S::Elem>> {
    let step = StepperConfig::new(cfg.dt, cfg.horizon);
    let u0 = sys.initial_state();
    let nr = sys.n_resolved();
    let started = Instant::now();
    let run = match cfg.model {
        ModelKind::Full => ModelRun::plain(integrate(full_rhs(sys), &u0, &step)?),
        ModelKind::Markovian => ModelRun::plain(integrate(|t, u: &[S::Elem], o: &mut [S::Elem]| sys.markovian_rhs(t, u, o), &u0[..nr], &step)?),
        ModelKind::ReformulatedMemory => {
            let t0 = memory_length(cfg)?;
            let h = MemoryHierarchy::single(t0, cfg.subintervals, nr)?;
            let run = run_reformulated_reduced(sys, &u0[..nr], &h, &step, 0.0, None)?;
            ModelRun { traj: run.resolved, diagnostics: None, t0_hat: Some(t0) }
        }
        ModelKind::Adaptive => {
            let out = adaptive_run(sys, &cfg.adaptive())?;
            log::info!(
                "switched at t = {} with t0 = {}; full phase {:?}, reduced phase {:?}",
                out.t_min,
                out.t0_hat,
                out.full_runtime,
                out.reduced_runtime
            );
            store_t0(cfg, out.t0_hat)?;
            ModelRun { traj: out.trajectory, diagnostics: Some(out.diagnostics), t0_hat: Some(out.t0_hat) }
        }
        ModelKind::VolterraMemory => unreachable!("finite-rank memory is dispatched per problem"),
    };
    log::info!("{} model: {:?}", cfg.model.name(), started.elapsed());
    Ok(run)
}

/// Kernel tables with memory coefficients, from the cache when possible.
fn kernels<S: GalerkinSystem<Elem = f64>>(sys: &S, cfg: &RunConfig) -> Result<(KernelTable, HermiteBasisSet)> {
    let measure = GaussianMeasure::new(sys.initial_state(), cfg.variances.clone())?;
    let basis = HermiteBasisSet::new(measure.leading(sys.n_resolved())?, cfg.basis_order);
    let cached = cfg.cache.as_ref().map(|c| c.join(format!("kernels-{}", cfg.kernel_key())));
    if let Some(dir) = cached.as_ref().filter(|d| d.join("A.csv").exists()) {
        let table = KernelTable::read_dir(dir, basis.len(), sys.n_resolved())?;
        log::info!("kernels loaded from {}", dir.display());
        return Ok((table, basis));
    }
    let rule = quadrature(cfg.quadrature, sys.dim(), cfg.level)?;
    let started = Instant::now();
    let mut table = estimate_kernels(sys, &measure, &basis, &rule, &StepperConfig::new(cfg.dt, cfg.horizon))?;
    solve_volterra(&mut table)?;
    log::info!("kernels over {} nodes: {:?}", rule.len(), started.elapsed());
    if let Some(dir) = cached {
        let tmp = dir.with_extension(format!("tmp{}", std::process::id()));
        create_dir(&tmp)?;
        table.write_dir(&tmp)?;
        if fs::rename(&tmp, &dir).is_err() {
            // another process filled the slot first
            let _ = fs::remove_dir_all(&tmp);
        }
    }
    Ok((table, basis))
}

fn run_scalar<S: GalerkinSystem<Elem = f64>>(sys: &S, cfg: &RunConfig) -> Result<ModelRun<f64>> {
    if cfg.model != ModelKind::VolterraMemory {
        return evolve(sys, cfg);
    }
    let (table, basis) = kernels(sys, cfg)?;
    let uhat0 = sys.initial_state()[..sys.n_resolved()].to_vec();
    let h0 = basis.eval(&uhat0);
    let traj = run_reduced(sys, &uhat0, &StepperConfig::new(cfg.dt, cfg.horizon), Some((&table, &h0)))?;
    Ok(ModelRun::plain(traj))
}

fn write_extras<E>(cfg: &RunConfig, run: &ModelRun<E>, written: &mut Vec<PathBuf>) -> Result<()> {
    if let Some(d) = &run.diagnostics {
        let p = cfg.out_dir.join("diagnostics.csv");
        output::write_diagnostics(&p, d)?;
        written.push(p);
    }
    if let Some(t0) = run.t0_hat {
        let p = cfg.out_dir.join("t0_hat.txt");
        output::write_text(&p, &format!("{}\n", num(t0)))?;
        written.push(p);
    }
    Ok(())
}

/// Runs the configured model and writes `trajectory.csv` (plus `stats.csv`
/// for Burgers and estimator output for the adaptive model).
pub fn run(cfg: &RunConfig) -> Result<Vec<PathBuf>> {
    create_dir(&cfg.out_dir)?;
    let traj_path = cfg.out_dir.join("trajectory.csv");
    let mut written = vec![traj_path.clone()];
    match cfg.kind {
        ProblemKind::LinearOde => {
            let sys = LinearOdeSystem::new(cfg.order, cfg.resolved, cfg.u_init)?;
            let run = run_scalar(&sys, cfg)?;
            output::write_real_trajectory(&traj_path, &run.traj, cfg.record_every)?;
            write_extras(cfg, &run, &mut written)?;
        }
        ProblemKind::Particle => {
            let sys = ParticleSystem::new(cfg.order, cfg.resolved, cfg.u_init, cfg.forcing_phase)?;
            let run = run_scalar(&sys, cfg)?;
            output::write_real_trajectory(&traj_path, &run.traj, cfg.record_every)?;
            write_extras(cfg, &run, &mut written)?;
        }
        ProblemKind::Burgers => {
            if cfg.model == ModelKind::VolterraMemory {
                return Err(MzError::UnsupportedTerm("finite-rank memory needs a real-valued system".into()));
            }
            let sys = BurgersSystem::new(cfg.burgers.clone())?;
            let run = evolve(&sys, cfg)?;
            output::write_complex_trajectory(&traj_path, &sys, &run.traj, cfg.record_every)?;
            // statistics over the resolved orders, which every model carries
            let r_max = cfg.resolved - 1;
            let mut sampled = Trajectory::new();
            for i in (0..run.traj.len()).step_by(cfg.record_every) {
                sampled.push(run.traj.times[i], run.traj.states[i].clone());
            }
            let quad = quad_tensor(&LegendreFamily::standard(r_max), r_max);
            let stats = StatSeries::from_trajectory(&sys, &sampled, &quad, r_max)?;
            let p = cfg.out_dir.join("stats.csv");
            stats.write_csv(file(&p)?)?;
            written.push(p);
            write_extras(cfg, &run, &mut written)?;
        }
    }
    Ok(written)
}

/// Estimation phases only: `diagnostics.csv` and `t0_hat.txt`.
pub fn estimate(cfg: &RunConfig) -> Result<(f64, Vec<PathBuf>)> {
    create_dir(&cfg.out_dir)?;
    let phase = match cfg.kind {
        ProblemKind::LinearOde => {
            let sys = LinearOdeSystem::new(cfg.order, cfg.resolved, cfg.u_init)?;
            let p = estimation_phase(&sys, &cfg.adaptive())?;
            (p.t0_hat, p.switch_step, p.diagnostics)
        }
        ProblemKind::Particle => {
            let sys = ParticleSystem::new(cfg.order, cfg.resolved, cfg.u_init, cfg.forcing_phase)?;
            let p = estimation_phase(&sys, &cfg.adaptive())?;
            (p.t0_hat, p.switch_step, p.diagnostics)
        }
        ProblemKind::Burgers => {
            let sys = BurgersSystem::new(cfg.burgers.clone())?;
            let p = estimation_phase(&sys, &cfg.adaptive())?;
            (p.t0_hat, p.switch_step, p.diagnostics)
        }
    };
    let (t0, switch_step, diag) = phase;
    log::info!("epsilon minimum at step {switch_step}");
    let d = cfg.out_dir.join("diagnostics.csv");
    output::write_diagnostics(&d, &diag)?;
    let t = cfg.out_dir.join("t0_hat.txt");
    output::write_text(&t, &format!("{}\n", num(t0)))?;
    store_t0(cfg, t0)?;
    Ok((t0, vec![d, t]))
}

fn label_for(dir: &Path, i: usize, taken: &[String]) -> String {
    let base: String = dir
        .file_name()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| format!("run{i}"))
        .chars()
        .map(|c| if c.is_ascii_alphanumeric() || c == '-' || c == '_' { c } else { '_' })
        .collect();
    if taken.contains(&base) {
        format!("{base}_{i}")
    } else {
        base
    }
}

/// The memory model paired with the Markovian one in the default comparison.
fn memory_model(kind: ProblemKind) -> ModelKind {
    match kind {
        ProblemKind::Burgers => ModelKind::Adaptive,
        _ => ModelKind::VolterraMemory,
    }
}

/// Relative errors of every run against the first, with overlay and error
/// plots. Without run directories, the full, Markovian and memory models are
/// run first into subdirectories of the output directory.
pub fn compare(cfg: &RunConfig, dirs: &[PathBuf]) -> Result<Vec<PathBuf>> {
    create_dir(&cfg.out_dir)?;
    let dirs: Vec<PathBuf> = if dirs.is_empty() {
        let mut made = Vec::new();
        for model in [ModelKind::Full, ModelKind::Markovian, memory_model(cfg.kind)] {
            let sub = RunConfig { model, out_dir: cfg.out_dir.join(model.name()), ..cfg.clone() };
            run(&sub)?;
            made.push(sub.out_dir);
        }
        made
    } else {
        dirs.to_vec()
    };
    if dirs.len() < 2 {
        return Err(MzError::Config("compare needs a reference and at least one other run".into()));
    }
    let use_stats = dirs.iter().all(|d| d.join("stats.csv").exists());
    let file_name = if use_stats { "stats.csv" } else { "trajectory.csv" };
    let tables: Vec<Table> = dirs.iter().map(|d| Table::read(&d.join(file_name))).collect::<Result<_>>()?;
    let mut labels: Vec<String> = Vec::new();
    for (i, d) in dirs.iter().enumerate() {
        let l = label_for(d, i, &labels);
        labels.push(l);
    }

    let reference = &tables[0];
    let shared: Vec<String> = reference.header[1..]
        .iter()
        .filter(|h| tables.iter().all(|t| t.column_index(h).is_some()))
        .cloned()
        .collect();
    if shared.is_empty() {
        return Err(MzError::Alignment("runs share no columns".into()));
    }
    let columns = |t: &Table| -> Vec<usize> { shared.iter().map(|h| t.column_index(h).unwrap()).collect() };
    let ref_traj = reference.trajectory(&columns(reference));
    let mut written = Vec::new();
    // errors[candidate][column][row]
    let mut errors: Vec<Vec<Vec<Option<f64>>>> = Vec::new();
    for (table, label) in tables.iter().zip(&labels).skip(1) {
        let cand = table.trajectory(&columns(table));
        let errs: Vec<Vec<Option<f64>>> = (0..shared.len()).map(|c| relative_error(&ref_traj, &cand, c)).collect::<Result<_>>()?;
        let path = cfg.out_dir.join(format!("errors_{label}.csv"));
        let mut w = csv::Writer::from_writer(file(&path)?);
        let mut header = vec!["t".to_string()];
        header.extend(shared.iter().cloned());
        w.write_record(&header)?;
        for (i, t) in ref_traj.times.iter().enumerate() {
            let mut rec = vec![num(*t)];
            rec.extend(errs.iter().map(|e| output::opt(e[i])));
            w.write_record(&rec)?;
        }
        w.flush()?;
        written.push(path);
        errors.push(errs);
    }

    let times = ref_traj.times.clone();
    for (c, name) in shared.iter().enumerate().take(MAX_PLOTTED_COLUMNS) {
        let overlay = Plot {
            title: name.clone(),
            x_label: "t".into(),
            y_label: name.clone(),
            log_y: false,
            series: tables
                .iter()
                .zip(&labels)
                .map(|(t, l)| {
                    let idx = t.column_index(name).unwrap();
                    Series { label: l.clone(), x: t.times(), y: t.rows.iter().map(|r| r[idx]).collect() }
                })
                .collect(),
        };
        let p = cfg.out_dir.join(format!("overlay_{name}.svg"));
        output::write_text(&p, &overlay.render())?;
        written.push(p);
        for log_y in [false, true] {
            let plot = Plot {
                title: format!("relative error of {name}"),
                x_label: "t".into(),
                y_label: if log_y { "relative error (log10)".into() } else { "relative error".into() },
                log_y,
                series: errors
                    .iter()
                    .zip(&labels[1..])
                    .map(|(e, l)| Series {
                        label: l.clone(),
                        x: times.clone(),
                        y: e[c].iter().map(|v| v.unwrap_or(f64::NAN)).collect(),
                    })
                    .collect(),
            };
            let suffix = if log_y { "_log" } else { "" };
            let p = cfg.out_dir.join(format!("error_{name}{suffix}.svg"));
            output::write_text(&p, &plot.render())?;
            written.push(p);
        }
    }
    Ok(written)
}
