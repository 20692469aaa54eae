//! Scenario drivers: design activations, simulate, and write artifacts.
//!
//! Every artifact except `timing.json` is a pure function of the
//! configuration, so two runs of the same scenario produce identical bytes.

use std::fs;
use std::io;
use std::path::{Path, PathBuf};
use std::time::Instant;

use octoarm_core::dynamics::{tip_perturbation, write_trajectory_csv};
use octoarm_core::shaping::{read_activation_csv, write_activation_csv, CostBreakdown};
use octoarm_core::{
    solve_task, ActivationSet, Circle, Configuration, DynamicState, DynamicsError, Energies,
    GraspDistance, GraspObjective, Grid, Obstacle, Point, RodError, RodModel, Sample, ShapingError,
    Simulator, TaskSolution, TaskSpec,
};
use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use crate::config::{ConfigError, ScenarioConfig};
use crate::svg::{render_svg, ArmShape, Canvas, Scene};

pub const SCHEMA_VERSION: u32 = 1;

/// Simulated time for a grasp when the config leaves `duration` unset [s].
pub const DEFAULT_GRASP_DURATION: f64 = 2.5;
/// Simulated time for `simulate` when `duration` is unset [s].
pub const DEFAULT_SIMULATION_DURATION: f64 = 1.0;
/// Minimum surface gap over the grasp window above which the object is
/// reported as out of reach [m].
pub const UNREACHABLE_GAP: f64 = 1e-3;

#[derive(Debug, Error)]
pub enum RunError {
    #[error("configuration error: {0}")]
    Config(#[from] ConfigError),
    #[error("solver failure: {0}")]
    Solver(String),
    #[error("numerical instability: {0}")]
    Instability(#[from] DynamicsError),
    #[error("geometry error: {0}")]
    Geometry(#[from] RodError),
    #[error("i/o error on {path}: {source}")]
    Io { path: PathBuf, source: io::Error },
}

impl RunError {
    /// Process exit code for this failure class.
    pub fn exit_code(&self) -> i32 {
        match self {
            RunError::Config(_) => 2,
            RunError::Solver(_) | RunError::Geometry(_) => 3,
            RunError::Instability(_) => 4,
            RunError::Io { .. } => 1,
        }
    }
}

impl From<ShapingError> for RunError {
    fn from(e: ShapingError) -> Self {
        RunError::Solver(e.to_string())
    }
}

#[derive(Debug, Clone, Copy, Default)]
pub struct RunOptions {
    pub quiet: bool,
}

/// Writes artifacts into one directory.
#[derive(Debug, Clone)]
pub struct OutputDir {
    root: PathBuf,
}

impl OutputDir {
    pub fn create(root: &Path) -> Result<Self, RunError> {
        fs::create_dir_all(root).map_err(|source| RunError::Io {
            path: root.to_path_buf(),
            source,
        })?;
        Ok(Self {
            root: root.to_path_buf(),
        })
    }

    pub fn path(&self, name: &str) -> PathBuf {
        self.root.join(name)
    }

    pub fn write(&self, name: &str, bytes: impl AsRef<[u8]>) -> Result<(), RunError> {
        let path = self.path(name);
        fs::write(&path, bytes).map_err(|source| RunError::Io { path, source })
    }

    fn json<T: Serialize>(&self, name: &str, value: &T) -> Result<(), RunError> {
        let mut text = serde_json::to_string_pretty(value).expect("summary types serialize");
        text.push('\n');
        self.write(name, text)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EnergySummary {
    #[serde(rename = "T")]
    pub kinetic: f64,
    #[serde(rename = "V")]
    pub potential: f64,
    #[serde(rename = "H")]
    pub total: f64,
}

impl From<Energies> for EnergySummary {
    fn from(e: Energies) -> Self {
        Self {
            kinetic: e.kinetic,
            potential: e.potential(),
            total: e.total(),
        }
    }
}

/// Static design outcome for one task.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DesignSummary {
    pub iterations: usize,
    pub converged: bool,
    pub initial_cost: CostBreakdown,
    pub final_cost: CostBreakdown,
    pub static_tip: [f64; 2],
    pub static_tip_error: Option<f64>,
    pub max_violation: f64,
    pub positive_definite_fraction: f64,
    pub final_learning_rate: f64,
    pub fd_fallback_count: usize,
}

impl DesignSummary {
    fn from_solution(sol: &TaskSolution) -> Self {
        let r = &sol.report;
        Self {
            iterations: r.iterations,
            converged: r.converged,
            initial_cost: r.initial_cost,
            final_cost: r.final_cost,
            static_tip: [r.static_tip.x, r.static_tip.y],
            static_tip_error: r.tip_error,
            max_violation: r.max_violation,
            positive_definite_fraction: r.positive_definite_fraction,
            final_learning_rate: r.final_learning_rate,
            fd_fallback_count: r.fd_fallback_count,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TargetSummary {
    pub index: usize,
    pub target: [f64; 2],
    pub status: &'static str,
    pub error: Option<String>,
    pub design: Option<DesignSummary>,
    pub start_time: f64,
    pub end_time: f64,
    /// Tip position in the last trajectory sample of this waypoint.
    pub dynamic_tip: [f64; 2],
    pub dynamic_tip_error: f64,
    pub final_energy: EnergySummary,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ReachSummary {
    pub schema_version: u32,
    pub scenario: &'static str,
    pub name: String,
    pub n_elements: usize,
    pub dt: f64,
    pub sample_stride: usize,
    pub warm_start: bool,
    pub targets: Vec<TargetSummary>,
    pub failed_targets: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ContactMetrics {
    /// Largest overlap of arm and object surfaces over the window [m].
    pub max_penetration: f64,
    /// Mean of the positive surface gap over the window [m].
    pub mean_gap: f64,
    pub min_gap: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GraspSummary {
    pub schema_version: u32,
    pub scenario: &'static str,
    pub name: String,
    pub n_elements: usize,
    pub dt: f64,
    pub object: [f64; 3],
    pub window: [f64; 2],
    pub distance: GraspDistance,
    pub design: DesignSummary,
    pub static_contact: ContactMetrics,
    pub dynamic_contact: ContactMetrics,
    pub unreachable: bool,
    pub duration: f64,
    pub final_energy: EnergySummary,
    pub final_tip: [f64; 2],
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SimulationSummary {
    pub schema_version: u32,
    pub scenario: &'static str,
    pub name: String,
    pub n_elements: usize,
    pub dt: f64,
    pub duration: f64,
    pub samples: usize,
    pub initial_energy: EnergySummary,
    pub final_energy: EnergySummary,
    pub peak_kinetic: f64,
    /// Largest increase of `H` between consecutive samples.
    pub max_energy_increase: f64,
    pub final_tip: [f64; 2],
}

#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct Timing {
    pub design_s: Vec<f64>,
    pub simulate_s: f64,
    pub total_s: f64,
}

/// Result of a scenario run; `failures` counts tasks whose design failed
/// without stopping the run.
#[derive(Debug, Clone)]
pub enum RunOutcome {
    Reach(ReachSummary),
    Grasp(GraspSummary),
    Simulate(SimulationSummary),
}

impl RunOutcome {
    pub fn failures(&self) -> usize {
        match self {
            RunOutcome::Reach(s) => s.failed_targets,
            _ => 0,
        }
    }
}

fn apply_optimizer(cfg: &ScenarioConfig, task: &mut TaskSpec) {
    let o = &cfg.optimizer;
    task.learning_rate = o.learning_rate;
    task.max_iters = o.max_iters;
    task.tolerance = o.tolerance;
    task.backoff_patience = o.backoff_patience;
    task.backoff_factor = o.backoff_factor;
}

pub fn reaching_task(cfg: &ScenarioConfig, target: Point) -> TaskSpec {
    let mut task = TaskSpec::reaching(target);
    task.tip_weight = cfg.tip_weight;
    task.obstacles = cfg.obstacles.clone();
    apply_optimizer(cfg, &mut task);
    task
}

/// Grasp task for the configured object, which doubles as an obstacle.
pub fn grasping_task(cfg: &ScenarioConfig) -> Result<TaskSpec, ConfigError> {
    let g = cfg.grasp.ok_or_else(|| ConfigError {
        line: None,
        key: Some("object_center".into()),
        message: "grasping needs object_center and object_radius".into(),
    })?;
    let mut task = TaskSpec::grasping(g.object, cfg.model.rest_length);
    task.grasp = Some(GraspObjective {
        object: g.object,
        weight: g.weight,
        window: g.window,
        distance: g.distance,
    });
    task.obstacles = std::iter::once(Obstacle {
        shape: g.object,
        penalty: cfg.obstacle_penalty,
    })
    .chain(cfg.obstacles.iter().copied())
    .collect();
    apply_optimizer(cfg, &mut task);
    Ok(task)
}

fn xy(p: Point) -> [f64; 2] {
    [p.x, p.y]
}

fn progress(opts: &RunOptions, msg: impl FnOnce() -> String) {
    if !opts.quiet {
        eprintln!("{}", msg());
    }
}

/// Surface contact statistics of `config` against `object` over the
/// arc-length window, sampled at element midpoints.
pub fn contact_metrics(
    grid: &Grid,
    config: &Configuration,
    object: &Circle,
    window: (f64, f64),
) -> ContactMetrics {
    let mut max_pen: f64 = 0.0;
    let mut sum = 0.0;
    let mut count = 0usize;
    let mut min_gap = f64::INFINITY;
    for j in 0..grid.n_elements() {
        let s = grid.centers[j];
        if s < window.0 || s > window.1 {
            continue;
        }
        let gap =
            (config.midpoint(j) - object.center).norm() - object.radius - grid.sections[j].radius;
        max_pen = max_pen.max(-gap);
        sum += gap.max(0.0);
        min_gap = min_gap.min(gap);
        count += 1;
    }
    ContactMetrics {
        max_penetration: max_pen,
        mean_gap: if count > 0 { sum / count as f64 } else { 0.0 },
        min_gap: if count > 0 { min_gap } else { 0.0 },
    }
}

fn write_design(
    out: &OutputDir,
    suffix: &str,
    grid: &Grid,
    sol: &TaskSolution,
) -> Result<(), RunError> {
    let mut buf = Vec::new();
    write_activation_csv(grid, &sol.activations, &mut buf).expect("writing to memory");
    out.write(&format!("activations{suffix}.csv"), &buf)?;
    buf.clear();
    sol.equilibrium
        .write_csv(grid, &mut buf)
        .expect("writing to memory");
    out.write(&format!("equilibrium{suffix}.csv"), &buf)?;
    let mut log = String::new();
    for rec in &sol.report.history {
        log.push_str(&serde_json::to_string(rec).expect("records serialize"));
        log.push('\n');
    }
    out.write(&format!("optimizer{suffix}.jsonl"), log)
}

fn write_trajectory(out: &OutputDir, samples: &[Sample]) -> Result<(), RunError> {
    let mut buf = Vec::new();
    write_trajectory_csv(samples, &mut buf).expect("writing to memory");
    out.write("trajectory.csv", buf)
}

fn initial_activations(grid: &Grid) -> ActivationSet {
    ActivationSet::zeros(grid.n_elements())
}

/// Design activations for every waypoint, then simulate the arm switching
/// between them. A failed design keeps the previous activations for its
/// waypoint and does not stop later targets.
pub fn run_reaching(
    cfg: &ScenarioConfig,
    out: &OutputDir,
    opts: &RunOptions,
) -> Result<ReachSummary, RunError> {
    if cfg.targets.is_empty() {
        return Err(ConfigError {
            line: None,
            key: Some("targets".into()),
            message: "empty task list".into(),
        }
        .into());
    }
    let started = Instant::now();
    let model = &cfg.model;
    let mus = &cfg.musculature;
    let grid = model.grid();
    let mut timing = Timing::default();

    let solve = |k: usize, warm: Option<&ActivationSet>| {
        let t0 = Instant::now();
        let target = cfg.targets[k];
        progress(opts, || {
            format!(
                "target {k}: designing for ({:.4}, {:.4}) m",
                target.x, target.y
            )
        });
        let result = solve_task(model, mus, &reaching_task(cfg, target), warm);
        (result, t0.elapsed().as_secs_f64())
    };
    let designs: Vec<(Result<TaskSolution, ShapingError>, f64)> = if cfg.warm_start {
        let mut results = Vec::with_capacity(cfg.targets.len());
        let mut warm: Option<ActivationSet> = None;
        for k in 0..cfg.targets.len() {
            let r = solve(k, warm.as_ref());
            if let Ok(sol) = &r.0 {
                warm = Some(sol.activations.clone());
            }
            results.push(r);
        }
        results
    } else {
        (0..cfg.targets.len())
            .into_par_iter()
            .map(|k| solve(k, None))
            .collect()
    };

    for (k, (result, secs)) in designs.iter().enumerate() {
        timing.design_s.push(*secs);
        match result {
            Ok(sol) => {
                write_design(out, &format!("_{k}"), &grid, sol)?;
                progress(opts, || {
                    format!(
                        "target {k}: {} iterations, static tip error {:.3e} m",
                        sol.report.iterations,
                        sol.report.tip_error.unwrap_or(f64::NAN)
                    )
                });
            }
            Err(e) => progress(opts, || format!("target {k}: design failed: {e}")),
        }
    }

    let t_sim = Instant::now();
    let durations = cfg.waypoint_durations();
    let mut sim = Simulator::new(model, mus, initial_activations(&grid))?;
    let mut state = DynamicState::at_rest(&grid);
    let mut samples: Vec<Sample> = Vec::new();
    let mut summaries = Vec::with_capacity(cfg.targets.len());
    let mut segment_ends: Vec<Configuration> = Vec::new();
    for (k, (result, _)) in designs.iter().enumerate() {
        if let Ok(sol) = result {
            sim.set_activations(sol.activations.clone())?;
        }
        let start_time = state.time;
        let log = sim.simulate(
            state,
            start_time + durations[k],
            cfg.simulation.dt,
            cfg.simulation.sample_stride,
        )?;
        let skip = usize::from(!samples.is_empty());
        samples.extend(log.samples.into_iter().skip(skip));
        state = log.final_state;
        let last = samples.last().expect("at least the initial sample");
        let tip = last.configuration.tip();
        let target = cfg.targets[k];
        segment_ends.push(last.configuration.clone());
        summaries.push(TargetSummary {
            index: k,
            target: xy(target),
            status: if result.is_ok() { "ok" } else { "failed" },
            error: result.as_ref().err().map(|e| e.to_string()),
            design: result.as_ref().ok().map(DesignSummary::from_solution),
            start_time,
            end_time: last.time,
            dynamic_tip: xy(tip),
            dynamic_tip_error: (tip - target).norm(),
            final_energy: last.energies.into(),
        });
        progress(opts, || {
            format!(
                "target {k}: tip error after {:.2} s of motion {:.3e} m",
                durations[k],
                (tip - target).norm()
            )
        });
    }
    timing.simulate_s = t_sim.elapsed().as_secs_f64();
    write_trajectory(out, &samples)?;

    let statics: Vec<&Configuration> = designs
        .iter()
        .filter_map(|(r, _)| r.as_ref().ok().map(|s| &s.equilibrium.configuration))
        .collect();
    let mut scene = Scene {
        title: format!("{}: static equilibria", cfg.name),
        targets: cfg.targets.clone(),
        circles: cfg.obstacles.iter().map(|o| o.shape).collect(),
        ..Scene::default()
    };
    scene.arms = statics
        .iter()
        .map(|c| ArmShape {
            configuration: c,
            color: "#1f5fa8",
            opacity: 0.5,
        })
        .collect();
    out.write("static.svg", render_svg(model, &scene, &Canvas::default())?)?;
    scene.title = format!("{}: arm at the end of each waypoint", cfg.name);
    scene.arms = segment_ends
        .iter()
        .map(|c| ArmShape {
            configuration: c,
            color: "#b3471b",
            opacity: 0.5,
        })
        .collect();
    out.write(
        "dynamic.svg",
        render_svg(model, &scene, &Canvas::default())?,
    )?;

    let summary = ReachSummary {
        schema_version: SCHEMA_VERSION,
        scenario: "reach",
        name: cfg.name.clone(),
        n_elements: model.n_elements,
        dt: cfg.simulation.dt,
        sample_stride: cfg.simulation.sample_stride,
        warm_start: cfg.warm_start,
        failed_targets: designs.iter().filter(|(r, _)| r.is_err()).count(),
        targets: summaries,
    };
    out.json("summary.json", &summary)?;
    timing.total_s = started.elapsed().as_secs_f64();
    out.json("timing.json", &timing)?;
    Ok(summary)
}

/// Design a grasp, then simulate the arm from rest under the designed
/// activations.
pub fn run_grasping(
    cfg: &ScenarioConfig,
    out: &OutputDir,
    opts: &RunOptions,
) -> Result<GraspSummary, RunError> {
    let started = Instant::now();
    let task = grasping_task(cfg)?;
    let g = task.grasp.expect("grasp task");
    let model = &cfg.model;
    let grid = model.grid();
    progress(opts, || {
        format!(
            "grasp: designing for object at ({:.4}, {:.4}) m, radius {:.4} m",
            g.object.center.x, g.object.center.y, g.object.radius
        )
    });
    let sol = solve_task(model, &cfg.musculature, &task, None)?;
    let design_s = started.elapsed().as_secs_f64();
    write_design(out, "", &grid, &sol)?;

    let t_sim = Instant::now();
    let duration = cfg.simulation.duration.unwrap_or(DEFAULT_GRASP_DURATION);
    let sim = Simulator::new(model, &cfg.musculature, sol.activations.clone())?;
    let log = sim.simulate(
        DynamicState::at_rest(&grid),
        duration,
        cfg.simulation.dt,
        cfg.simulation.sample_stride,
    )?;
    let simulate_s = t_sim.elapsed().as_secs_f64();
    write_trajectory(out, &log.samples)?;
    let last = log.samples.last().expect("terminal sample");

    let static_contact =
        contact_metrics(&grid, &sol.equilibrium.configuration, &g.object, g.window);
    let dynamic_contact = contact_metrics(&grid, &last.configuration, &g.object, g.window);
    let unreachable = static_contact.min_gap > UNREACHABLE_GAP;
    progress(opts, || {
        format!(
            "grasp: {} iterations, max penetration {:.3e} m, mean gap {:.3e} m{}",
            sol.report.iterations,
            static_contact.max_penetration,
            static_contact.mean_gap,
            if unreachable {
                ", object out of reach"
            } else {
                ""
            }
        )
    });

    let scene = Scene {
        title: format!("{}: grasp", cfg.name),
        circles: task.obstacles.iter().map(|o| o.shape).collect(),
        arms: vec![
            ArmShape {
                configuration: &sol.equilibrium.configuration,
                color: "#1f5fa8",
                opacity: 0.5,
            },
            ArmShape {
                configuration: &last.configuration,
                color: "#b3471b",
                opacity: 0.5,
            },
        ],
        targets: Vec::new(),
    };
    out.write("grasp.svg", render_svg(model, &scene, &Canvas::default())?)?;

    let summary = GraspSummary {
        schema_version: SCHEMA_VERSION,
        scenario: "grasp",
        name: cfg.name.clone(),
        n_elements: model.n_elements,
        dt: cfg.simulation.dt,
        object: [g.object.center.x, g.object.center.y, g.object.radius],
        window: [g.window.0, g.window.1],
        distance: g.distance,
        design: DesignSummary::from_solution(&sol),
        static_contact,
        dynamic_contact,
        unreachable,
        duration,
        final_energy: last.energies.into(),
        final_tip: xy(last.configuration.tip()),
    };
    out.json("summary.json", &summary)?;
    out.json(
        "timing.json",
        &Timing {
            design_s: vec![design_s],
            simulate_s,
            total_s: started.elapsed().as_secs_f64(),
        },
    )?;
    Ok(summary)
}

fn load_activations(
    cfg: &ScenarioConfig,
    base: Option<&Path>,
    n: usize,
) -> Result<ActivationSet, RunError> {
    let Some(file) = &cfg.simulation.activation_file else {
        return Ok(ActivationSet::uniform(n, cfg.simulation.activations));
    };
    let path = match base {
        Some(dir) if file.is_relative() => dir.join(file),
        _ => file.clone(),
    };
    let text = fs::read_to_string(&path).map_err(|source| RunError::Io {
        path: path.clone(),
        source,
    })?;
    let set = read_activation_csv(&text).map_err(|message| ConfigError {
        line: None,
        key: Some("activation_file".into()),
        message: format!("{}: {message}", path.display()),
    })?;
    if set.n_elements() != n {
        return Err(ConfigError {
            line: None,
            key: Some("activation_file".into()),
            message: format!(
                "{} has {} rows but the arm has {n} elements",
                path.display(),
                set.n_elements()
            ),
        }
        .into());
    }
    Ok(set)
}

/// Forward simulation under fixed activations. `config_dir` resolves a
/// relative `activation_file`.
pub fn run_simulation(
    cfg: &ScenarioConfig,
    config_dir: Option<&Path>,
    out: &OutputDir,
    opts: &RunOptions,
) -> Result<SimulationSummary, RunError> {
    let started = Instant::now();
    let model: &RodModel = &cfg.model;
    let grid = model.grid();
    let activations = load_activations(cfg, config_dir, grid.n_elements())?;
    let sim = Simulator::new(model, &cfg.musculature, activations)?;
    let initial = if cfg.simulation.perturbation != 0.0 {
        DynamicState::from_configuration(tip_perturbation(&grid, cfg.simulation.perturbation))
    } else {
        DynamicState::at_rest(&grid)
    };
    let duration = cfg
        .simulation
        .duration
        .unwrap_or(DEFAULT_SIMULATION_DURATION);
    progress(opts, || {
        format!("simulate: {duration} s at dt = {} s", cfg.simulation.dt)
    });
    let log = sim.simulate(
        initial,
        duration,
        cfg.simulation.dt,
        cfg.simulation.sample_stride,
    )?;
    write_trajectory(out, &log.samples)?;
    let first = log.samples.first().expect("initial sample");
    let last = log.samples.last().expect("terminal sample");
    let max_energy_increase = log
        .samples
        .windows(2)
        .map(|w| w[1].energies.total() - w[0].energies.total())
        .fold(f64::NEG_INFINITY, f64::max)
        .max(0.0);
    let snapshots: Vec<ArmShape> = log
        .samples
        .iter()
        .step_by((log.samples.len() / 10).max(1))
        .chain(std::iter::once(last))
        .map(|s| ArmShape {
            configuration: &s.configuration,
            color: "#1f5fa8",
            opacity: 0.25,
        })
        .collect();
    let scene = Scene {
        title: format!("{}: snapshots", cfg.name),
        arms: snapshots,
        circles: cfg.obstacles.iter().map(|o| o.shape).collect(),
        targets: cfg.targets.clone(),
    };
    out.write(
        "snapshots.svg",
        render_svg(model, &scene, &Canvas::default())?,
    )?;
    let summary = SimulationSummary {
        schema_version: SCHEMA_VERSION,
        scenario: "simulate",
        name: cfg.name.clone(),
        n_elements: model.n_elements,
        dt: cfg.simulation.dt,
        duration,
        samples: log.samples.len(),
        initial_energy: first.energies.into(),
        final_energy: last.energies.into(),
        peak_kinetic: log.peak_kinetic(),
        max_energy_increase,
        final_tip: xy(last.configuration.tip()),
    };
    out.json("summary.json", &summary)?;
    let total = started.elapsed().as_secs_f64();
    out.json(
        "timing.json",
        &Timing {
            design_s: Vec::new(),
            simulate_s: total,
            total_s: total,
        },
    )?;
    Ok(summary)
}
