use criterion::{criterion_group, criterion_main, Criterion};
use octoarm_core::dynamics::tip_perturbation;
use octoarm_core::shaping::evaluate;
use octoarm_core::{
    solve_equilibrium, solve_pointwise, ActivationSet, DynamicState, Musculature, Point, RodModel,
    Simulator, SolverOptions, Strain, TaskSpec,
};
use std::hint::black_box;

fn smooth_activations(n: usize) -> ActivationSet {
    let mut a = ActivationSet::zeros(n);
    for j in 0..n {
        let x = j as f64 / n as f64;
        a.set(
            j,
            [
                0.3 + 0.2 * (3.0 * x).sin(),
                0.1 + 0.05 * x,
                0.25 + 0.1 * (5.0 * x).cos(),
            ],
        );
    }
    a
}

fn pointwise(c: &mut Criterion) {
    let model = RodModel::default();
    let mus = Musculature::default();
    let sec = model.section_at(0.1).unwrap();
    let opts = SolverOptions::default();
    c.bench_function("pointwise_solve", |b| {
        b.iter(|| {
            solve_pointwise(
                &model,
                &mus,
                sec,
                black_box([0.4, 0.1, 0.3]),
                &[Strain::REST],
                &opts,
            )
            .unwrap()
        })
    });
}

fn equilibrium(c: &mut Criterion) {
    let model = RodModel::default();
    let mus = Musculature::default();
    let grid = model.grid();
    let alpha = smooth_activations(grid.n_elements());
    let opts = SolverOptions::default();
    c.bench_function("equilibrium_100_elements", |b| {
        b.iter(|| solve_equilibrium(&model, &mus, &grid, black_box(&alpha), None, &opts).unwrap())
    });
}

fn dynamics(c: &mut Criterion) {
    let model = RodModel::default();
    let mus = Musculature::default();
    let sim = Simulator::new(&model, &mus, smooth_activations(model.n_elements)).unwrap();
    let mut state = DynamicState::from_configuration(tip_perturbation(sim.grid(), 0.01));
    c.bench_function("dynamics_step", |b| {
        b.iter(|| sim.step(black_box(&mut state), 1e-5).unwrap())
    });
}

fn optimizer_iteration(c: &mut Criterion) {
    let model = RodModel::default();
    let mus = Musculature::default();
    let grid = model.grid();
    let alpha = smooth_activations(grid.n_elements());
    let task = TaskSpec::reaching(Point::new(0.12, 0.14));
    let opts = SolverOptions::default();
    let warm = solve_equilibrium(&model, &mus, &grid, &alpha, None, &opts)
        .unwrap()
        .strains;
    c.bench_function("optimizer_evaluation", |b| {
        b.iter(|| {
            evaluate(
                &model,
                &mus,
                &grid,
                black_box(&alpha),
                &task,
                Some(&warm),
                &opts,
            )
            .unwrap()
        })
    });
}

criterion_group!(
    benches,
    pointwise,
    equilibrium,
    dynamics,
    optimizer_iteration
);
criterion_main!(benches);
