//! Acceptance suite: one PASS/FAIL line per criterion, exit status 1 if any fails.
//!
//! Run with `cargo test -p mzuq-core --test acceptance`.

use std::f64::consts::PI;
use std::process::ExitCode;
use std::time::{Duration, Instant};

use mzuq_core::finiterank::{estimate_kernels, run_reduced, solve_volterra};
use mzuq_core::galerkin::full_rhs;
use mzuq_core::markovmz::{estimation_phase, memory_integral, run_reformulated_reduced};
use mzuq_core::polybasis::{quad_tensor, quadrature, triple_tensor};
use mzuq_core::stats::{mean_energy, relative_error};
use mzuq_core::{
    integrate, AdaptiveConfig, BurgersConfig, BurgersSystem, Complex64, GalerkinSystem, GaussianMeasure,
    HermiteBasisSet, KernelTable, LegendreFamily, LinearOdeSystem, MemoryHierarchy, MzError, ParticleSystem,
    QuadratureKind, Scalar, StepperConfig, Trajectory, TripleConvention,
};
use rand::rngs::StdRng;
use rand::{RngExt, SeedableRng};

type Outcome = Result<(bool, Vec<String>), MzError>;

fn order(coarse: f64, fine: f64) -> f64 {
    (coarse / fine).log2()
}

fn secs(d: Duration) -> String {
    format!("{:.1}s", d.as_secs_f64())
}

/// Largest relative error per component over the first `upto` recorded times.
fn max_rel(reference: &Trajectory<f64>, cand: &Trajectory<f64>, comp: usize, upto: usize) -> Result<f64, MzError> {
    Ok(relative_error(reference, cand, comp)?[..upto].iter().flatten().fold(0.0, |a: f64, &b| a.max(b)))
}

fn linear_finite_rank() -> Outcome {
    let started = Instant::now();
    let sys = LinearOdeSystem::new(6, 1, 1.0)?;
    let measure = GaussianMeasure::new(sys.initial_state(), vec![0.01; 7])?;
    let basis = HermiteBasisSet::new(measure.leading(2)?, 5);
    let rule = quadrature(QuadratureKind::SmolyakGaussHermite, 7, 3)?;
    let cfg = StepperConfig::new(0.01, 10.0);
    let mut table = estimate_kernels(&sys, &measure, &basis, &rule, &cfg)?;
    solve_volterra(&mut table)?;
    let uhat0 = sys.initial_state()[..2].to_vec();
    let h0 = basis.eval(&uhat0);
    let mem = run_reduced(&sys, &uhat0, &cfg, Some((&table, &h0)))?;
    let mk = run_reduced(&sys, &uhat0, &cfg, None)?;
    let full = integrate(full_rhs(&sys), &sys.initial_state(), &cfg)?.truncated(2);
    let elapsed = started.elapsed();

    let mk_err: Vec<Vec<Option<f64>>> = (0..2).map(|c| relative_error(&full, &mk, c)).collect::<Result<_, _>>()?;
    let crossing = (0..full.len()).find(|&i| (0..2).any(|c| mk_err[c][i].is_some_and(|e| e > 0.5)));
    let upto = crossing.map_or(full.len(), |i| i + 1);
    let e0 = max_rel(&full, &mem, 0, upto)?;
    let e1 = max_rel(&full, &mem, 1, upto)?;
    let pass = basis.len() == 21 && crossing.is_some() && e0 < 0.02 && e1 < 0.02 && elapsed < Duration::from_secs(300);
    Ok((
        pass,
        vec![
            format!("{} basis functions, {} quadrature nodes, {}", basis.len(), rule.len(), secs(elapsed)),
            match crossing {
                Some(i) => format!("Markovian error first exceeds 50% at t = {:.2}", full.times[i]),
                None => "Markovian error never exceeds 50%".into(),
            },
            format!("memory model max relative error up to there: u0 {e0:.2e}, u1 {e1:.2e} (limit 2e-2)"),
        ],
    ))
}

/// `∫ u° e^{-(ξ+1)t/2} √(2r+1) P_r(ξ) dξ/2` by composite Simpson on 4000 panels.
fn projected_exact(t: f64, order: usize) -> Vec<f64> {
    let panels = 4000;
    let h = 2.0 / panels as f64;
    let mut out = vec![0.0; order + 1];
    for i in 0..=panels {
        let xi = -1.0 + i as f64 * h;
        let w = if i == 0 || i == panels { 1.0 } else if i % 2 == 1 { 4.0 } else { 2.0 };
        let u = (-(xi + 1.0) * 0.5 * t).exp();
        let (mut p0, mut p1) = (1.0, xi);
        for (r, o) in out.iter_mut().enumerate() {
            let p = match r {
                0 => 1.0,
                1 => xi,
                _ => {
                    let rf = r as f64;
                    let p2 = ((2.0 * rf - 1.0) * xi * p1 - (rf - 1.0) * p0) / rf;
                    p0 = p1;
                    p1 = p2;
                    p2
                }
            };
            *o += w * h / 3.0 * 0.5 * u * p * (2.0 * r as f64 + 1.0).sqrt();
        }
    }
    out
}

fn linear_exact_oracle() -> Outcome {
    let sys = LinearOdeSystem::new(6, 1, 1.0)?;
    let tr = integrate(full_rhs(&sys), &sys.initial_state(), &StepperConfig::new(1e-3, 10.0).with_record_every(10000))?;
    let (t, u) = tr.last().unwrap();
    let exact = projected_exact(t, 6);
    let errs: Vec<f64> = u.iter().zip(&exact).map(|(a, b)| (a - b).abs()).collect();
    let pass = errs.iter().all(|e| *e < 1e-4);
    let mut lines = vec![format!("t = {t}, |u_r - exact_r| for r = 0..=6 (limit 1e-4):")];
    lines.push(errs.iter().enumerate().map(|(r, e)| format!("r{r} {e:.1e}")).collect::<Vec<_>>().join(", "));
    if !pass {
        lines.push("the M = 6 truncation itself separates components 5 and 6 from the exact projection".into());
    }
    Ok((pass, lines))
}

fn particle_finite_rank() -> Outcome {
    let started = Instant::now();
    let sys = ParticleSystem::new(6, 1, 1.0, 0.0)?;
    let var: Vec<f64> = (0..7).map(|i| 10f64.powi(-2 * i - 2)).collect();
    let measure = GaussianMeasure::new(sys.initial_state(), var)?;
    let basis = HermiteBasisSet::new(measure.leading(2)?, 3);
    let rule = quadrature(QuadratureKind::SmolyakGaussHermite, 7, 3)?;
    let cfg = StepperConfig::new(0.01, 10.0);
    let mut table = estimate_kernels(&sys, &measure, &basis, &rule, &cfg)?;
    solve_volterra(&mut table)?;
    let uhat0 = sys.initial_state()[..2].to_vec();
    let h0 = basis.eval(&uhat0);
    let mem = run_reduced(&sys, &uhat0, &cfg, Some((&table, &h0)))?;
    let mk = run_reduced(&sys, &uhat0, &cfg, None)?;
    let full = integrate(full_rhs(&sys), &sys.initial_state(), &cfg)?.truncated(2);
    let elapsed = started.elapsed();

    let mut lines = vec![format!("{} basis functions, {}", basis.len(), secs(elapsed))];
    let mut pass = basis.len() == 10 && elapsed < Duration::from_secs(900);
    for c in 0..2 {
        let em = relative_error(&full, &mem, c)?;
        let ek = relative_error(&full, &mk, c)?;
        let (mut good, mut total) = (0usize, 0usize);
        // t = 0 is exact for both models
        for (m, k) in em.iter().zip(&ek).skip(1) {
            if let (Some(m), Some(k)) = (m, k) {
                total += 1;
                if 10.0 * m <= *k {
                    good += 1;
                }
            }
        }
        let frac = good as f64 / total.max(1) as f64;
        pass &= frac >= 0.7;
        lines.push(format!("u{c}: memory error ≥ 10x smaller at {good}/{total} times ({:.1}%, need 70%)", 100.0 * frac));
    }
    Ok((pass, lines))
}

fn burgers(modes: usize) -> Result<BurgersSystem, MzError> {
    BurgersSystem::new(BurgersConfig { modes, ..Default::default() })
}

/// Criteria 4 and 5 share the estimation run.
fn burgers_adaptive() -> Result<(Outcome, Outcome), MzError> {
    let sys = burgers(196)?;
    let nr = sys.n_resolved();
    let cfg = AdaptiveConfig::new(1e-3, 3.0);
    let phase = estimation_phase(&sys, &cfg)?;
    let t_min = phase.switch_step as f64 * cfg.dt;
    let accepted: Vec<usize> = phase.diagnostics.iter().filter(|r| r.y_hat.is_some()).map(|r| r.newton_iters).collect();
    let max_iters = accepted.iter().copied().max().unwrap_or(0);
    let mean_iters = accepted.iter().sum::<usize>() as f64 / accepted.len().max(1) as f64;
    let est_pass = (0.30..=0.45).contains(&phase.t0_hat) && max_iters <= 10 && phase.runtime < Duration::from_secs(1200);
    let est = Ok((
        est_pass,
        vec![
            format!("t0_hat = {:.4} at t_min = {t_min:.3} (range [0.30, 0.45])", phase.t0_hat),
            format!("Newton iterations per step: max {max_iters}, mean {mean_iters:.2} (limit 10); {}", secs(phase.runtime)),
        ],
    ));

    // pre-contraction window [t_min, t_min + t0_hat]
    let steps = ((phase.t0_hat / cfg.dt).round() as usize).min(3000 - phase.switch_step);
    let window = StepperConfig::new(cfg.dt, steps as f64 * cfg.dt);
    let integrate_at = |u0: &[Complex64], rhs: &dyn Fn(f64, &[Complex64], &mut [Complex64])| {
        mzuq_core::integrate::integrate_from(
            |t, u: &[Complex64], o: &mut [Complex64]| {
                rhs(t, u, o);
                Ok(())
            },
            t_min,
            u0,
            &window,
        )
    };
    let started = Instant::now();
    let full = integrate_at(&phase.switch_state, &|t, u, o| sys.rhs(t, u, o))?;
    let full_time = started.elapsed();
    let started = Instant::now();
    let h = MemoryHierarchy::single(phase.t0_hat, 1, nr)?;
    let mem = run_reformulated_reduced(&sys, &phase.switch_state[..nr], &h, &window, t_min, Some(&phase.w_switch))?.resolved;
    let mem_time = started.elapsed();
    let mk = integrate_at(&phase.switch_state[..nr], &|t, u, o| sys.markovian_rhs(t, u, o))?;

    let r_max = sys.config().resolved - 1;
    let avg_err = |tr: &Trajectory<Complex64>| {
        let n = tr.len();
        (0..n).map(|i| (mean_energy(&sys, &tr.states[i], r_max) - mean_energy(&sys, &full.states[i], r_max)).abs()).sum::<f64>() / n as f64
    };
    let (e_mem, e_mk) = (avg_err(&mem), avg_err(&mk));
    let speedup = full_time.as_secs_f64() / mem_time.as_secs_f64();
    let cmp = Ok((
        e_mem <= e_mk && speedup >= 2.0,
        vec![
            format!("window [{t_min:.3}, {:.3}], mean energy over resolved orders", t_min + steps as f64 * cfg.dt),
            format!("time-averaged |error|: memory {e_mem:.3e}, Markovian {e_mk:.3e}"),
            format!("full {} vs memory {}: {speedup:.1}x faster (need 2x)", secs(full_time), secs(mem_time)),
        ],
    ));
    Ok((est, cmp))
}

/// Largest gap between the auxiliary variable and the trapezoidal convolution
/// of `2·PLQL` along the same reduced run.
fn closure_gap(sys: &BurgersSystem, t0: f64, dt: f64, horizon: f64) -> Result<f64, MzError> {
    let nr = sys.n_resolved();
    let u0 = sys.initial_state();
    let h = MemoryHierarchy::single(t0, 1, nr)?;
    let run = run_reformulated_reduced(sys, &u0[..nr], &h, &StepperConfig::new(dt, horizon), 0.0, None)?;
    let y = (-2.0 * dt / t0).exp();
    let mut samples = Vec::new();
    let mut gap = 0.0f64;
    for (u, w) in run.resolved.states.iter().zip(&run.memory.states) {
        let mut f = vec![Complex64::new(0.0, 0.0); nr];
        sys.plql(0.0, u, &mut f)?;
        samples.push(f.iter().map(|x| x * 2.0).collect::<Vec<_>>());
        let direct = memory_integral(&samples, y, dt);
        gap = w.iter().zip(&direct).map(|(a, b)| (a - b).norm()).fold(gap, f64::max);
    }
    Ok(gap)
}

fn closure_equivalence() -> Outcome {
    let sys = burgers(196)?;
    let dts = [2e-3, 1e-3, 5e-4];
    let gaps: Vec<f64> = dts.iter().map(|&dt| closure_gap(&sys, 0.4, dt, 0.4)).collect::<Result<_, _>>()?;
    let orders: Vec<f64> = gaps.windows(2).map(|w| order(w[0], w[1])).collect();
    Ok((
        orders.iter().all(|p| (1.9..=2.1).contains(p)),
        vec![
            format!("t0 = 0.4 over [0, 0.4]; max gap {:.2e}, {:.2e}, {:.2e}", gaps[0], gaps[1], gaps[2]),
            format!("observed orders {:.3}, {:.3} (range [1.9, 2.1])", orders[0], orders[1]),
        ],
    ))
}

/// `a = f − ∫ g a` with `f = 1`, `g = γ0` has `a(t) = e^{−γ0 t}`.
fn volterra_error(dt: f64, gamma0: f64, horizon: f64) -> Result<f64, MzError> {
    let n = (horizon / dt).round() as usize + 1;
    let mut table = KernelTable::from_parts(dt, 1, 1, vec![1.0; n], vec![gamma0; n], vec![1.0; n])?;
    solve_volterra(&mut table)?;
    Ok((0..n).map(|i| (table.a(i).unwrap()[0] - (-gamma0 * i as f64 * dt).exp()).abs()).fold(0.0, f64::max))
}

fn volterra_synthetic() -> Outcome {
    let errs: Vec<f64> = [4e-3, 2e-3, 1e-3].iter().map(|&dt| volterra_error(dt, 1.0, 5.0)).collect::<Result<_, _>>()?;
    let orders: Vec<f64> = errs.windows(2).map(|w| order(w[0], w[1])).collect();
    Ok((
        errs[2] < 1e-5 && orders.iter().all(|p| (1.9..=2.1).contains(p)),
        vec![
            format!("max error at δt = 1e-3: {:.2e} (limit 1e-5)", errs[2]),
            format!("observed orders {:.3}, {:.3}", orders[0], orders[1]),
        ],
    ))
}

fn permutations(n: usize) -> Vec<Vec<usize>> {
    if n == 1 {
        return vec![vec![0]];
    }
    let mut out = Vec::new();
    for p in permutations(n - 1) {
        for pos in 0..n {
            let mut q = p.clone();
            q.insert(pos, n - 1);
            out.push(q);
        }
    }
    out
}

fn tensor_symmetry() -> bool {
    let p3 = permutations(3);
    let p4 = permutations(4);
    for m in 1..=8 {
        let e = triple_tensor(&LegendreFamily::orthonormal(m), m, TripleConvention::ENormalized);
        let c = triple_tensor(&LegendreFamily::standard(m), m, TripleConvention::CRatio);
        let d = quad_tensor(&LegendreFamily::orthonormal(m), m);
        for i in 0..=m {
            for j in 0..=m {
                for k in 0..=m {
                    let idx = [i, j, k];
                    let v = e.get(i, j, k);
                    if p3.iter().any(|p| e.get(idx[p[0]], idx[p[1]], idx[p[2]]).to_bits() != v.to_bits()) {
                        return false;
                    }
                    if c.get(i, j, k).to_bits() != c.get(j, i, k).to_bits() {
                        return false;
                    }
                    for l in 0..=m {
                        let idx = [i, j, k, l];
                        let v = d.get(i, j, k, l);
                        if p4.iter().any(|p| d.get(idx[p[0]], idx[p[1]], idx[p[2]], idx[p[3]]).to_bits() != v.to_bits()) {
                            return false;
                        }
                    }
                }
            }
        }
    }
    true
}

fn gram_defect() -> Result<f64, MzError> {
    let measure = GaussianMeasure::new(vec![1.0, 0.0], vec![0.01, 0.01])?;
    let basis = HermiteBasisSet::new(measure.clone(), 5);
    let rule = measure.transform(&quadrature(QuadratureKind::SmolyakGaussHermite, 2, 3)?)?;
    let vals: Vec<Vec<f64>> = (0..rule.len()).map(|q| basis.eval(rule.node(q))).collect();
    let mut worst = 0.0f64;
    for a in 0..basis.len() {
        for b in 0..basis.len() {
            let g: f64 = (0..rule.len()).map(|q| rule.weights()[q] * vals[q][a] * vals[q][b]).sum();
            worst = worst.max((g - if a == b { 1.0 } else { 0.0 }).abs());
        }
    }
    Ok(worst)
}

/// Largest `|QL − (L − PL)|` relative to `1 + |L|` over random states.
fn ql_defect<S: GalerkinSystem>(sys: &S, rng: &mut StdRng, gen: impl Fn(&mut StdRng) -> S::Elem) -> f64 {
    let p = sys.partition();
    let mut worst = 0.0f64;
    for trial in 0..100 {
        let u: Vec<S::Elem> = (0..p.total).map(|_| gen(rng)).collect();
        let t = 0.1 * trial as f64;
        let mut ql = vec![S::Elem::zero(); p.resolved];
        let mut l = vec![S::Elem::zero(); p.total];
        let mut pl = vec![S::Elem::zero(); p.resolved];
        sys.fluctuation(t, &u, &mut ql);
        sys.rhs(t, &u, &mut l);
        sys.markovian_rhs(t, &u[..p.resolved], &mut pl);
        for i in 0..p.resolved {
            worst = worst.max((ql[i] - (l[i] - pl[i])).abs() / (1.0 + l[i].abs()));
        }
    }
    worst
}

fn invariants() -> Outcome {
    let mut lines = Vec::new();
    let mut pass = true;
    let mut note = |ok: bool, text: String| {
        pass &= ok;
        lines.push(format!("{} {text}", if ok { "ok  " } else { "FAIL" }));
    };

    note(tensor_symmetry(), "e, c, d permutation symmetry (bitwise), M = 1..=8".into());
    let c = triple_tensor(&LegendreFamily::standard(6), 6, TripleConvention::CRatio);
    let frac = c.nonzero_count() as f64 / 343.0;
    note(
        frac <= 0.30,
        format!("c nonzero fraction at M = 7: {}/343 = {frac:.3} (limit 0.30; every admissible triple is nonzero)", c.nonzero_count()),
    );
    let g = gram_defect()?;
    note(g <= 1e-8, format!("Hermite Gram identity, p = 5, Smolyak level 3: max defect {g:.1e}"));

    let mut rng = StdRng::seed_from_u64(7);
    let real = |r: &mut StdRng| r.random_range(-1.0..1.0);
    let q_lin = ql_defect(&LinearOdeSystem::new(6, 1, 1.0)?, &mut rng, real);
    let q_par = ql_defect(&ParticleSystem::new(6, 1, 1.0, 0.3)?, &mut rng, real);
    let q_bur = ql_defect(&burgers(196)?, &mut rng, |r| Complex64::new(r.random_range(-0.5..0.5), r.random_range(-0.5..0.5)));
    let q = q_lin.max(q_par).max(q_bur);
    note(q <= 1e-12, format!("QL = L - PL on 100 random states per problem: max {q:.1e}"));

    let sys = burgers(196)?;
    let e0 = mean_energy(&sys, &sys.initial_state(), 6);
    note((e0 - 2.0 * PI / 3.0).abs() <= 1e-12, format!("mean energy at t = 0: {e0:.15} vs 2π/3"));

    let tr = integrate(full_rhs(&sys), &sys.initial_state(), &StepperConfig::new(1e-3, 3.0).with_record_every(10))?;
    let herm = tr.states.iter().map(|u| sys.hermitian_defect(u)).fold(0.0, f64::max);
    note(herm <= 1e-10, format!("Hermitian symmetry over [0, 3], N = 196: max defect {herm:.1e}"));
    let energy: Vec<f64> = tr.states.iter().map(|u| mean_energy(&sys, u, 6)).collect();
    let rise = energy.windows(2).map(|w| (w[1] - w[0]) / w[0]).fold(f64::NEG_INFINITY, f64::max);
    note(rise <= 1e-12, format!("full Burgers mean energy nonincreasing: largest relative step {rise:.1e}"));

    let short = StepperConfig::new(1e-3, 0.1);
    let pool = |n: usize| rayon::ThreadPoolBuilder::new().num_threads(n).build().unwrap();
    let run = || integrate(full_rhs(&sys), &sys.initial_state(), &short).unwrap();
    let a = pool(1).install(run);
    let b = pool(4).install(run);
    let c = run();
    let lin = LinearOdeSystem::new(6, 1, 1.0)?;
    let measure = GaussianMeasure::new(lin.initial_state(), vec![0.01; 7])?;
    let basis = HermiteBasisSet::new(measure.leading(2)?, 5);
    let rule = quadrature(QuadratureKind::SmolyakGaussHermite, 7, 2)?;
    let kern = || estimate_kernels(&lin, &measure, &basis, &rule, &StepperConfig::new(0.01, 1.0)).unwrap();
    let k1 = pool(1).install(kern);
    let k4 = pool(4).install(kern);
    note(a == b && b == c && k1 == k4, "bitwise determinism: Burgers runs (1, 4, default threads), kernel tables (1, 4)".into());
    Ok((pass, lines))
}

fn main() -> ExitCode {
    let mut failures = 0;
    let mut report = |id: usize, name: &str, outcome: Outcome| {
        let (pass, lines) = outcome.unwrap_or_else(|e| (false, vec![format!("error: {e}")]));
        println!("{} criterion {id}: {name}", if pass { "PASS" } else { "FAIL" });
        for l in lines {
            println!("    {l}");
        }
        if !pass {
            failures += 1;
        }
    };
    report(1, "linear ODE finite-rank memory", linear_finite_rank());
    report(2, "linear ODE exact-solution oracle", linear_exact_oracle());
    report(3, "particle finite-rank memory", particle_finite_rank());
    match burgers_adaptive() {
        Ok((est, cmp)) => {
            report(4, "Burgers adaptive memory-length estimation", est);
            report(5, "Burgers memory vs Markovian comparison", cmp);
        }
        Err(e) => {
            report(4, "Burgers adaptive memory-length estimation", Err(e.clone()));
            report(5, "Burgers memory vs Markovian comparison", Err(e));
        }
    }
    report(6, "auxiliary-ODE memory vs trapezoidal convolution", closure_equivalence());
    report(7, "Volterra solver synthetic exponential", volterra_synthetic());
    report(8, "invariant suites", invariants());
    println!("{} of 8 criteria passed", 8 - failures);
    if failures == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
