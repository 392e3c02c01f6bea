//! Shared fixtures for the criterion benches in `benches/`.

use mzuq_core::{integrate, BurgersConfig, BurgersSystem, Complex64, GalerkinSystem, StepperConfig};

/// Burgers system at the default parameters with `modes` Fourier modes.
pub fn burgers(modes: usize) -> BurgersSystem {
    BurgersSystem::new(BurgersConfig { modes, ..Default::default() }).expect("valid config")
}

/// State after `steps` steps of δt = 1e-3, so every chaos block is populated.
pub fn developed_state(sys: &BurgersSystem, steps: usize) -> Vec<Complex64> {
    let cfg = StepperConfig::new(1e-3, steps as f64 * 1e-3).with_record_every(steps.max(1));
    let tr = integrate(|t, u: &[Complex64], o: &mut [Complex64]| sys.rhs(t, u, o), &sys.initial_state(), &cfg)
        .expect("stable run");
    tr.states.last().expect("nonempty").clone()
}
