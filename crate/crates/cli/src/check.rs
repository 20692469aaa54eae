//! Seeded invariant checks on a configured arm, run by the `check` verb.

use octoarm_core::dynamics::tip_perturbation;
use octoarm_core::{
    solve_equilibrium, ActivationSet, DynamicState, PointProblem, RodModel, Simulator,
    SolverOptions, Strain,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::config::ScenarioConfig;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CheckResult {
    pub name: &'static str,
    pub passed: bool,
    pub worst: f64,
    pub tolerance: f64,
}

impl CheckResult {
    fn new(name: &'static str, worst: f64, tolerance: f64) -> Self {
        Self {
            name,
            passed: worst <= tolerance,
            worst,
            tolerance,
        }
    }

    pub fn line(&self) -> String {
        format!(
            "{} {}: worst {:.3e} (tolerance {:.1e})",
            if self.passed { "PASS" } else { "FAIL" },
            self.name,
            self.worst,
            self.tolerance
        )
    }
}

/// Number of random samples per pointwise check.
pub const SAMPLES: usize = 64;

fn random_alpha(rng: &mut ChaCha8Rng) -> [f64; 3] {
    [
        rng.gen_range(0.0..=1.0),
        rng.gen_range(0.0..=1.0),
        rng.gen_range(0.0..=1.0),
    ]
}

/// Pointwise equilibria have residual below the solver tolerance.
fn equilibrium_residuals(cfg: &ScenarioConfig, rng: &mut ChaCha8Rng) -> CheckResult {
    let model = &cfg.model;
    let mut worst: f64 = 0.0;
    for _ in 0..SAMPLES {
        let s = rng.gen_range(0.0..model.rest_length);
        let Ok(sec) = model.section_at(s) else {
            continue;
        };
        let problem = PointProblem::new(model, &cfg.musculature, sec, random_alpha(rng));
        worst = match problem.solve(&[model.rest_strain], &SolverOptions::default()) {
            Ok(sol) => worst.max(sol.residual),
            Err(_) => f64::INFINITY,
        };
    }
    CheckResult::new("pointwise equilibrium residual", worst, 1e-10)
}

/// Implicit activation sensitivities agree with re-solved differences.
fn sensitivities(cfg: &ScenarioConfig, rng: &mut ChaCha8Rng) -> CheckResult {
    let model = &cfg.model;
    let opts = SolverOptions::default();
    let mut worst: f64 = 0.0;
    for _ in 0..SAMPLES / 4 {
        let s = rng.gen_range(0.0..model.rest_length);
        let Ok(sec) = model.section_at(s) else {
            continue;
        };
        let alpha = [
            rng.gen_range(0.05..0.95),
            rng.gen_range(0.05..0.95),
            rng.gen_range(0.05..0.95),
        ];
        let problem = PointProblem::new(model, &cfg.musculature, sec, alpha);
        let Ok(sol) = problem.solve(&[model.rest_strain], &opts) else {
            return CheckResult::new("activation sensitivity", f64::INFINITY, 1e-4);
        };
        if !sol.positive_definite {
            continue;
        }
        let (Ok(exact), Ok(fd)) = (
            problem.sensitivity(sol.strain),
            problem.fd_sensitivity(sol.strain, 1e-5, &opts),
        ) else {
            continue;
        };
        for m in 0..3 {
            let scale = exact[m]
                .stretch
                .abs()
                .max(exact[m].curvature.abs() * sec.radius)
                .max(1e-12);
            let d = (exact[m].stretch - fd[m].stretch)
                .abs()
                .max((exact[m].curvature - fd[m].curvature).abs() * sec.radius);
            worst = worst.max(d / scale);
        }
    }
    CheckResult::new("activation sensitivity", worst, 1e-4)
}

/// Muscle loads are the strain gradient of the stored energy.
fn load_gradients(cfg: &ScenarioConfig, rng: &mut ChaCha8Rng) -> CheckResult {
    let model = &cfg.model;
    let mus = &cfg.musculature;
    let fl = &mus.force_length;
    let steps = [1e-6, 1e-6, 1e-4];
    let mut worst: f64 = 0.0;
    let mut taken = 0;
    while taken < SAMPLES {
        let s = rng.gen_range(0.0..model.rest_length);
        let Ok(sec) = model.section_at(s) else {
            continue;
        };
        let w = Strain::new(
            rng.gen_range(0.8..1.3),
            rng.gen_range(-0.1..0.1),
            rng.gen_range(-15.0..15.0),
        );
        let margin = 10.0 * (steps[0] + sec.radius * steps[2]);
        let near_kink = mus.muscles.iter().any(|spec| {
            let z = octoarm_core::muscles::muscle_strain(
                spec.kind,
                w,
                spec.offset(&sec),
                model.rest_strain.stretch,
            );
            (fl.value(z - margin) > 0.0) != (fl.value(z + margin) > 0.0)
        });
        if near_kink {
            continue;
        }
        taken += 1;
        let alpha = random_alpha(rng);
        let p = mus.total_gradient(model, &sec, w, alpha).to_array();
        let stiffness = model.elastic_stiffness(&sec);
        for k in 0..3 {
            let mut a = w.to_array();
            let mut b = w.to_array();
            a[k] += steps[k];
            b[k] -= steps[k];
            let fd = (mus.total_energy_density(model, &sec, Strain::from_array(a), alpha)
                - mus.total_energy_density(model, &sec, Strain::from_array(b), alpha))
                / (2.0 * steps[k]);
            let scale = (stiffness[k] * 1e-3).max(p[k].abs()).max(fd.abs());
            worst = worst.max((p[k] - fd).abs() / scale);
        }
    }
    CheckResult::new("loads are energy gradients", worst, 1e-5)
}

/// Undamped dynamics conserve the Hamiltonian.
fn energy_drift(cfg: &ScenarioConfig) -> CheckResult {
    let model = RodModel {
        damping: 0.0,
        ..cfg.model
    };
    let n = model.n_elements;
    let Ok(sim) = Simulator::new(&model, &cfg.musculature, ActivationSet::zeros(n)) else {
        return CheckResult::new("undamped energy drift", f64::INFINITY, 1e-5);
    };
    let dt = cfg.simulation.dt.min(sim.stable_time_step());
    let initial = DynamicState::from_configuration(tip_perturbation(sim.grid(), 0.01));
    match sim.simulate(initial, 2000.0 * dt, dt, 2000) {
        Ok(log) => {
            let h0 = log.samples[0].energies.total();
            let h1 = log
                .samples
                .last()
                .expect("terminal sample")
                .energies
                .total();
            CheckResult::new("undamped energy drift", ((h1 - h0) / h0).abs(), 1e-5)
        }
        Err(_) => CheckResult::new("undamped energy drift", f64::INFINITY, 1e-5),
    }
}

/// The static equilibrium is a rest state of the dynamics. The residual
/// force is measured against the restoring force of a 1 cm tip deflection.
fn static_rest_state(cfg: &ScenarioConfig, rng: &mut ChaCha8Rng) -> CheckResult {
    let model = &cfg.model;
    let grid = model.grid();
    let alpha = ActivationSet::uniform(grid.n_elements(), random_alpha(rng));
    let worst = solve_equilibrium(
        model,
        &cfg.musculature,
        &grid,
        &alpha,
        None,
        &SolverOptions::default(),
    )
    .ok()
    .and_then(|eq| {
        let sim = Simulator::new(model, &cfg.musculature, alpha).ok()?;
        let rhs = sim
            .rhs(&DynamicState::from_configuration(eq.configuration))
            .ok()?;
        let scale = sim
            .conservative_force(&tip_perturbation(&grid, 0.01))
            .ok()?
            .max_abs();
        Some(rhs.max_abs() / scale.max(1e-300))
    })
    .unwrap_or(f64::INFINITY);
    CheckResult::new("equilibrium is a dynamic rest state", worst, 1e-8)
}

pub fn run_checks(cfg: &ScenarioConfig) -> Vec<CheckResult> {
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    vec![
        load_gradients(cfg, &mut rng),
        equilibrium_residuals(cfg, &mut rng),
        sensitivities(cfg, &mut rng),
        static_rest_state(cfg, &mut rng),
        energy_drift(cfg),
    ]
}
