use octoarm_core::dynamics::tip_perturbation;
use octoarm_core::*;

fn uniform_rod(n: usize) -> RodModel {
    RodModel {
        tip_radius: RodModel::default().base_radius,
        n_elements: n,
        damping: 0.0,
        ..RodModel::default()
    }
}

/// Two-element uniform chain in pure axial motion: masses `(m, m/2)` joined
/// by springs `EA/Δs`, so `ω² = (2 − √2) EA / (m Δs)` for the slow mode.
#[test]
fn axial_chain_matches_closed_form_frequency() {
    let model = uniform_rod(2);
    let mus = Musculature::default();
    let sim = Simulator::new(&model, &mus, ActivationSet::zeros(2)).unwrap();
    let grid = sim.grid().clone();
    let ds = grid.lengths[0];
    let sec = grid.sections[0];
    let m = model.density * sec.area * ds;
    let k = model.youngs_modulus * sec.area / ds;
    let omega = ((2.0 - 2f64.sqrt()) * k / m).sqrt();
    let period = 2.0 * std::f64::consts::PI / omega;

    let eps = 1e-4;
    let mut config = Configuration::straight(&grid);
    config.positions[1].x += eps;
    config.positions[2].x += 2f64.sqrt() * eps;
    let mut state = DynamicState::from_configuration(config);
    let dt = period / 2000.0;
    let rest_tip = grid.nodes[2];
    let mut prev = state.configuration.positions[2].x - rest_tip;
    let mut t = 0.0;
    let crossing = loop {
        sim.step(&mut state, dt).unwrap();
        t += dt;
        let u = state.configuration.positions[2].x - rest_tip;
        if prev > 0.0 && u <= 0.0 {
            break t - dt * u / (u - prev);
        }
        prev = u;
        assert!(t < period, "no zero crossing within one period");
    };
    let measured = 4.0 * crossing;
    assert!(
        (measured - period).abs() / period < 0.01,
        "{measured} vs {period}"
    );
    // the motion stays axial
    assert!(state.configuration.angles.iter().all(|a| a.abs() < 1e-12));
}

fn end_state(sim: &Simulator, dt: f64, t_final: f64) -> Configuration {
    let initial = DynamicState::from_configuration(tip_perturbation(sim.grid(), 0.01));
    let steps = (t_final / dt).round() as usize;
    let mut state = initial;
    for _ in 0..steps {
        sim.step(&mut state, dt).unwrap();
    }
    state.configuration
}

fn distance(a: &Configuration, b: &Configuration) -> f64 {
    a.positions
        .iter()
        .zip(&b.positions)
        .map(|(p, q)| (p - q).norm())
        .fold(0.0, f64::max)
}

#[test]
fn verlet_is_second_order() {
    let model = RodModel {
        n_elements: 20,
        ..RodModel::default()
    };
    let mus = Musculature::default();
    let alpha = ActivationSet::uniform(20, [0.3, 0.0, 0.2]);
    let sim = Simulator::new(&model, &mus, alpha).unwrap();
    let t = 0.004;
    let base = 2e-5;
    let reference = end_state(&sim, base / 16.0, t);
    let coarse = distance(&end_state(&sim, base, t), &reference);
    let fine = distance(&end_state(&sim, base / 2.0, t), &reference);
    let ratio = coarse / fine;
    assert!(
        (3.0..5.5).contains(&ratio),
        "error ratio {ratio} ({coarse} / {fine})"
    );
}

#[test]
fn damped_energy_never_increases() {
    let model = RodModel::default();
    let mus = Musculature::default();
    let sim = Simulator::new(&model, &mus, ActivationSet::uniform(100, [0.2, 0.1, 0.3])).unwrap();
    let mut state = DynamicState::from_configuration(tip_perturbation(sim.grid(), 0.01));
    let h0 = sim.energies(&state).unwrap().total();
    let mut prev = h0;
    for _ in 0..5000 {
        sim.step(&mut state, 1e-5).unwrap();
        let h = sim.energies(&state).unwrap().total();
        assert!(h - prev <= 1e-8 * h0.abs(), "{prev} -> {h}");
        prev = h;
    }
    assert!(prev < h0);
}

#[test]
fn undamped_energy_is_conserved() {
    let model = RodModel {
        damping: 0.0,
        ..RodModel::default()
    };
    let mus = Musculature::default();
    let sim = Simulator::new(&model, &mus, ActivationSet::zeros(100)).unwrap();
    let mut state = DynamicState::from_configuration(tip_perturbation(sim.grid(), 0.01));
    let h0 = sim.energies(&state).unwrap().total();
    for _ in 0..4000 {
        sim.step(&mut state, 1e-5).unwrap();
    }
    let h = sim.energies(&state).unwrap().total();
    assert!((h - h0).abs() / h0 < 1e-5, "drift {}", (h - h0) / h0);
}

#[test]
fn base_stays_clamped_bit_for_bit() {
    let model = RodModel::default();
    let mus = Musculature::default();
    let sim = Simulator::new(&model, &mus, ActivationSet::uniform(100, [1.0, 0.0, 0.5])).unwrap();
    let log = sim
        .simulate(DynamicState::at_rest(sim.grid()), 0.01, 1e-5, 50)
        .unwrap();
    for s in &log.samples {
        assert_eq!(s.configuration.positions[0], Point::zeros());
        assert_eq!(s.configuration.angles[0], 0.0);
    }
    assert_eq!(log.final_state.momentum.linear[0], Point::zeros());
    assert_eq!(log.final_state.momentum.angular[0], 0.0);
}

#[test]
fn undamped_rhs_is_the_elastic_force() {
    let model = RodModel {
        damping: 0.0,
        ..RodModel::default()
    };
    let mus = Musculature::default();
    let sim = Simulator::new(&model, &mus, ActivationSet::zeros(100)).unwrap();
    let config = tip_perturbation(sim.grid(), 0.02);
    let mut state = DynamicState::from_configuration(config.clone());
    state.momentum.linear[50] = Point::new(1e-3, 2e-3);
    let rhs = sim.rhs(&state).unwrap();
    let mut elastic = model
        .elastic_generalized_force(sim.grid(), &config)
        .unwrap();
    elastic.forces[0] = Point::zeros();
    elastic.couples[0] = 0.0;
    assert_eq!(rhs, elastic);
}

#[test]
fn muscle_force_matches_energy_gradient() {
    let model = RodModel {
        n_elements: 10,
        ..RodModel::default()
    };
    let mus = Musculature::default();
    let alpha = ActivationSet::uniform(10, [0.7, 0.2, 0.4]);
    let sim = Simulator::new(&model, &mus, alpha).unwrap();
    let config = tip_perturbation(sim.grid(), 0.03);
    let force = sim.muscle_force(&config).unwrap();
    let h = 1e-7;
    for node in [1, 5, 10] {
        for channel in 0..3 {
            let bumped = |sign: f64| {
                let mut c = config.clone();
                match channel {
                    0 => c.positions[node].x += sign * h,
                    1 => c.positions[node].y += sign * h,
                    _ => c.angles[node] += sign * h,
                }
                sim.potential_energies(&c).unwrap().1
            };
            let fd = -(bumped(1.0) - bumped(-1.0)) / (2.0 * h);
            let analytic = match channel {
                0 => force.forces[node].x,
                1 => force.forces[node].y,
                _ => force.couples[node],
            };
            assert!(
                (fd - analytic).abs() < 1e-6 * force.max_abs(),
                "node {node} ch {channel}: {fd} vs {analytic}"
            );
        }
    }
}

#[test]
fn simulate_rejects_oversized_steps() {
    let model = RodModel::default();
    let mus = Musculature::default();
    let sim = Simulator::new(&model, &mus, ActivationSet::zeros(100)).unwrap();
    let limit = sim.stable_time_step();
    assert!(limit > 1e-5);
    let err = sim
        .simulate(DynamicState::at_rest(sim.grid()), 1.0, 2.0 * limit, 1)
        .unwrap_err();
    assert!(matches!(err, DynamicsError::TimeStepTooLarge { .. }));
}

#[test]
fn perturbation_decays_under_damping() {
    let model = RodModel::default();
    let mus = Musculature::default();
    let sim = Simulator::new(&model, &mus, ActivationSet::zeros(100)).unwrap();
    let initial = DynamicState::from_configuration(tip_perturbation(sim.grid(), 0.01));
    let log = sim.simulate(initial, 0.5, 1e-5, 100).unwrap();
    let first = log.samples.first().unwrap().energies.total();
    let last = log.samples.last().unwrap().energies.total();
    assert!(last < 0.5 * first, "{first} -> {last}");
    assert!(log.samples.windows(2).all(|w| w[1].time > w[0].time));
}
