//! Upper-level design of static activations.
//!
//! The activations `α` are chosen to minimize
//!
//! ```text
//! J(α) = ½∫ Σ_m (α^m)² ds + ∫ μ_grasp Φ_grasp(q) ds + μ_tip Φ_tip(q(L₀)) + Σ_j ξ_j q̂_j(L₀)
//! ```
//!
//! subject to `∂ₛq = g(q, w_α)` where `w_α` solves the lower-level
//! equilibrium. Obstacles enter through accumulators `∂ₛq̂_j = max(Ψ_j, 0)`.
//! Each iteration runs the lower-level solve, a forward sweep of the
//! kinematics, a backward sweep of the costate, and a projected gradient
//! ascent step on the control Hamiltonian.
//!
//! The backward sweep is the exact adjoint of the discrete forward
//! recursion, so the resulting gradient is the true derivative of the
//! discrete cost. `w_α` depends on `α` through implicit differentiation of
//! `P(w_α; α) = 0`.

use std::time::Instant;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::equilibrium::{
    solve_equilibrium, EquilibriumError, EquilibriumSolution, PointProblem, SolverOptions,
};
use crate::muscles::{ActivationSet, MuscleKind, Musculature};
use crate::rod::{
    frame, integrate_strains, Configuration, Grid, Point, RodModel, Strain, StrainField,
};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ShapingError {
    #[error("invalid task: {0}")]
    InvalidTask(String),
    #[error("lower-level solve failed at iteration {iteration}: {source}")]
    LowerLevel {
        iteration: usize,
        #[source]
        source: EquilibriumError,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Circle {
    pub center: Point,
    pub radius: f64,
}

impl Circle {
    pub fn new(x: f64, y: f64, radius: f64) -> Self {
        Self {
            center: Point::new(x, y),
            radius,
        }
    }
}

/// How the grasp running cost measures closeness to the object.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum GraspDistance {
    /// Gap between the arm surface and the object surface.
    #[default]
    Surface,
    /// Distance from the arm centerline to the object boundary.
    Centerline,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GraspObjective {
    pub object: Circle,
    /// `μ_grasp` inside the window.
    pub weight: f64,
    /// Arc-length window `[s₁, s₂]` [m] where the grasp cost applies.
    pub window: (f64, f64),
    pub distance: GraspDistance,
}

impl GraspObjective {
    /// `μ_grasp(s) = weight · χ_[s₁,s₂](s)`.
    pub fn weight_at(&self, s: f64) -> f64 {
        if s >= self.window.0 && s <= self.window.1 {
            self.weight
        } else {
            0.0
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Obstacle {
    pub shape: Circle,
    /// Penalty weight `ξ_j` on the accumulated violation.
    pub penalty: f64,
}

/// Everything defining one static design problem.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TaskSpec {
    pub tip_target: Option<Point>,
    pub tip_weight: f64,
    pub grasp: Option<GraspObjective>,
    pub obstacles: Vec<Obstacle>,
    /// Gradient-ascent step `η`.
    pub learning_rate: f64,
    pub max_iters: usize,
    /// Stop once the projected gradient ∞-norm drops below this.
    pub tolerance: f64,
    /// Halve `η` after this many consecutive iterations without a decrease of `J`.
    pub backoff_patience: usize,
    pub backoff_factor: f64,
}

pub const DEFAULT_LEARNING_RATE: f64 = 1e-8;
pub const DEFAULT_TIP_WEIGHT: f64 = 1e5;
pub const DEFAULT_GRASP_WEIGHT: f64 = 1e5;
/// The violation gradient has magnitude `2(φ_obj + φ)` regardless of depth,
/// so the penalty only holds the arm out once `ξ · 2(φ_obj + φ) · ℓ_contact`
/// exceeds the integrated grasp pull `μ_grasp (s₂ − s₁)`. For a 2 cm object
/// and a few millimetres of contact that needs `ξ ≳ 10⁸`.
pub const DEFAULT_OBSTACLE_PENALTY: f64 = 1e9;

impl TaskSpec {
    fn base() -> Self {
        Self {
            tip_target: None,
            tip_weight: 0.0,
            grasp: None,
            obstacles: Vec::new(),
            learning_rate: DEFAULT_LEARNING_RATE,
            max_iters: 100_000,
            tolerance: 1e-6,
            backoff_patience: 50,
            backoff_factor: 0.5,
        }
    }

    /// Tip reaching with `μ_tip = 10⁵`.
    pub fn reaching(target: Point) -> Self {
        Self {
            tip_target: Some(target),
            tip_weight: DEFAULT_TIP_WEIGHT,
            ..Self::base()
        }
    }

    /// Wrap the distal arm `[0.4 L₀, L₀]` around `object`, which is also an
    /// obstacle the arm may not penetrate.
    pub fn grasping(object: Circle, rest_length: f64) -> Self {
        Self {
            grasp: Some(GraspObjective {
                object,
                weight: DEFAULT_GRASP_WEIGHT,
                window: (0.4 * rest_length, rest_length),
                distance: GraspDistance::Surface,
            }),
            obstacles: vec![Obstacle {
                shape: object,
                penalty: DEFAULT_OBSTACLE_PENALTY,
            }],
            ..Self::base()
        }
    }

    pub fn validate(&self) -> Result<(), ShapingError> {
        let bad = |m: &str| Err(ShapingError::InvalidTask(m.to_string()));
        if self.tip_target.is_none() && self.grasp.is_none() {
            return bad("at least one of a tip target or a grasp objective is required");
        }
        if !(self.tip_weight >= 0.0 && self.tip_weight.is_finite()) {
            return bad("tip weight must be non-negative");
        }
        if let Some(t) = self.tip_target {
            if !(t.x.is_finite() && t.y.is_finite()) {
                return bad("tip target must be finite");
            }
        }
        if let Some(g) = &self.grasp {
            if !(g.weight >= 0.0 && g.weight.is_finite()) {
                return bad("grasp weight must be non-negative");
            }
            if !(g.object.radius > 0.0) || !(g.window.0 <= g.window.1) {
                return bad("grasp object needs a positive radius and an ordered window");
            }
        }
        for o in &self.obstacles {
            if !(o.penalty >= 0.0 && o.shape.radius > 0.0) {
                return bad("obstacles need a positive radius and a non-negative penalty");
            }
        }
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return bad("learning rate must be positive");
        }
        if !(self.backoff_factor > 0.0 && self.backoff_factor < 1.0) || self.backoff_patience == 0 {
            return bad("backoff factor must lie in (0, 1) with a positive patience");
        }
        Ok(())
    }
}

/// `Φ_tip = ½|r* − r(L₀)|²`; independent of the tip angle.
pub fn tip_cost(tip: Point, target: Point) -> f64 {
    0.5 * (target - tip).norm_squared()
}

/// `∂Φ_tip/∂r(L₀) = r(L₀) − r*`.
pub fn tip_cost_gradient(tip: Point, target: Point) -> Point {
    tip - target
}

/// Grasp distance and its subgradient with respect to the centerline point.
pub fn grasp_cost(
    point: Point,
    object: &Circle,
    arm_radius: f64,
    mode: GraspDistance,
) -> (f64, Point) {
    let reach = match mode {
        GraspDistance::Surface => object.radius + arm_radius,
        GraspDistance::Centerline => object.radius,
    };
    let offset = point - object.center;
    let d = offset.norm();
    if d == 0.0 {
        return (reach, Point::zeros());
    }
    let gap = d - reach;
    let sign = if gap > 0.0 {
        1.0
    } else if gap < 0.0 {
        -1.0
    } else {
        0.0
    };
    (gap.abs(), sign * offset / d)
}

/// `c = max(Ψ, 0)` with `Ψ = (φ_obj + φ)² − |r_obj − r|²`, and its gradient.
pub fn obstacle_violation(point: Point, shape: &Circle, arm_radius: f64) -> (f64, Point) {
    let reach = shape.radius + arm_radius;
    let offset = point - shape.center;
    let psi = reach * reach - offset.norm_squared();
    if psi > 0.0 {
        (psi, -2.0 * offset)
    } else {
        (0.0, Point::zeros())
    }
}

/// Result of integrating the augmented state forward in arc length.
#[derive(Debug, Clone, PartialEq)]
pub struct ForwardSweep {
    pub configuration: Configuration,
    /// `q̂_j` at every node, one vector per obstacle.
    pub accumulators: Vec<Vec<f64>>,
}

impl ForwardSweep {
    pub fn tip(&self) -> Point {
        self.configuration.tip()
    }
}

/// Integrate `∂ₛq = g(q, w_α)` and `∂ₛq̂_j = c_j(q)` from the clamped base.
/// Violations are sampled at element midpoints.
pub fn forward_sweep(grid: &Grid, strains: &StrainField, task: &TaskSpec) -> ForwardSweep {
    let configuration = integrate_strains(grid, strains);
    let accumulators = task
        .obstacles
        .iter()
        .map(|o| {
            let mut acc = Vec::with_capacity(grid.n_nodes());
            let mut total = 0.0;
            acc.push(total);
            for j in 0..grid.n_elements() {
                let (c, _) = obstacle_violation(
                    configuration.midpoint(j),
                    &o.shape,
                    grid.sections[j].radius,
                );
                total += c * grid.lengths[j];
                acc.push(total);
            }
            acc
        })
        .collect();
    ForwardSweep {
        configuration,
        accumulators,
    }
}

/// Terms of the upper-level cost.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct CostBreakdown {
    pub control: f64,
    pub grasp: f64,
    pub tip: f64,
    pub penalty: f64,
}

impl CostBreakdown {
    pub fn total(&self) -> f64 {
        self.control + self.grasp + self.tip + self.penalty
    }
}

pub fn evaluate_cost(
    grid: &Grid,
    activations: &ActivationSet,
    sweep: &ForwardSweep,
    task: &TaskSpec,
) -> CostBreakdown {
    let control = activations.control_cost(&grid.lengths);
    let grasp = match &task.grasp {
        Some(g) => (0..grid.n_elements())
            .map(|j| {
                let mu = g.weight_at(grid.centers[j]);
                if mu == 0.0 {
                    return 0.0;
                }
                let (phi, _) = grasp_cost(
                    sweep.configuration.midpoint(j),
                    &g.object,
                    grid.sections[j].radius,
                    g.distance,
                );
                mu * phi * grid.lengths[j]
            })
            .sum(),
        None => 0.0,
    };
    let tip = task
        .tip_target
        .map(|t| task.tip_weight * tip_cost(sweep.tip(), t))
        .unwrap_or(0.0);
    let penalty = task
        .obstacles
        .iter()
        .zip(&sweep.accumulators)
        .map(|(o, acc)| o.penalty * acc.last().copied().unwrap_or(0.0))
        .sum();
    CostBreakdown {
        control,
        grasp,
        tip,
        penalty,
    }
}

/// Costate `λ̂ = (λ̂_r, λ̂_θ)` at every node.
#[derive(Debug, Clone, PartialEq)]
pub struct CostateField {
    pub linear: Vec<Point>,
    pub angular: Vec<f64>,
}

/// Gradient of the running cost density with respect to the centerline
/// point at the midpoint of element `j`.
fn running_cost_gradient(grid: &Grid, config: &Configuration, task: &TaskSpec, j: usize) -> Point {
    let point = config.midpoint(j);
    let radius = grid.sections[j].radius;
    let mut g = Point::zeros();
    if let Some(grasp) = &task.grasp {
        let mu = grasp.weight_at(grid.centers[j]);
        if mu != 0.0 {
            g += mu * grasp_cost(point, &grasp.object, radius, grasp.distance).1;
        }
    }
    for o in &task.obstacles {
        g += o.penalty * obstacle_violation(point, &o.shape, radius).1;
    }
    g
}

/// Integrate the costate backward from the transversality condition
/// `λ̂(L₀) = −μ_tip ∂Φ_tip/∂q(L₀)`.
pub fn backward_sweep(
    grid: &Grid,
    strains: &StrainField,
    sweep: &ForwardSweep,
    task: &TaskSpec,
) -> CostateField {
    let n = grid.n_elements();
    let config = &sweep.configuration;
    let mut linear = vec![Point::zeros(); n + 1];
    let mut angular = vec![0.0; n + 1];
    if let Some(target) = task.tip_target {
        linear[n] = -task.tip_weight * tip_cost_gradient(config.tip(), target);
    }
    for j in (0..n).rev() {
        let ds = grid.lengths[j];
        let w = strains.get(j);
        let mid_angle = config.angles[j] + 0.5 * w.curvature * ds;
        let (a, b) = frame(mid_angle);
        let turn = w.stretch * b - w.shear * a;
        let grad = running_cost_gradient(grid, config, task, j);
        linear[j] = linear[j + 1] - ds * grad;
        angular[j] =
            angular[j + 1] + ds * linear[j + 1].dot(&turn) - 0.5 * ds * ds * grad.dot(&turn);
    }
    CostateField { linear, angular }
}

/// `∂Ĥ/∂w` on element `j`: `λ̂ᵀ ∂g/∂w` with the costate taken at the element
/// midpoint, as produced by the discrete adjoint.
pub fn strain_gradient(
    grid: &Grid,
    strains: &StrainField,
    sweep: &ForwardSweep,
    costate: &CostateField,
    task: &TaskSpec,
    j: usize,
) -> Strain {
    let ds = grid.lengths[j];
    let w = strains.get(j);
    let config = &sweep.configuration;
    let (a, b) = frame(config.angles[j] + 0.5 * w.curvature * ds);
    let turn = w.stretch * b - w.shear * a;
    let grad = running_cost_gradient(grid, config, task, j);
    let lam = costate.linear[j + 1] - 0.5 * ds * grad;
    Strain::new(
        lam.dot(&a),
        lam.dot(&b),
        costate.angular[j + 1] + 0.5 * ds * lam.dot(&turn),
    )
}

/// `∂Ĥ/∂α^m = λ̂ᵀ (∂g/∂w)(∂w_α/∂α^m) − α^m` for each muscle.
pub fn activation_gradient(
    strain_grad: Strain,
    sensitivity: &[Strain; 3],
    alpha: [f64; 3],
) -> [f64; 3] {
    let mut out = [0.0; 3];
    for m in 0..3 {
        let s = sensitivity[m];
        out[m] = strain_grad.stretch * s.stretch
            + strain_grad.shear * s.shear
            + strain_grad.curvature * s.curvature
            - alpha[m];
    }
    out
}

/// Everything computed for one activation iterate.
#[derive(Debug, Clone)]
pub struct Evaluation {
    pub equilibrium: EquilibriumSolution,
    pub sweep: ForwardSweep,
    pub cost: CostBreakdown,
    pub costate: CostateField,
    /// `∂Ĥ/∂α` per element, indexed by [`MuscleKind::index`].
    pub hamiltonian_gradient: Vec<[f64; 3]>,
    /// Elements where the finite-difference sensitivity fallback was used.
    pub fd_fallbacks: Vec<usize>,
}

impl Evaluation {
    /// `dJ/dα^m_j = −Δs_j ∂Ĥ/∂α^m_j`.
    pub fn cost_gradient(&self, grid: &Grid) -> Vec<[f64; 3]> {
        self.hamiltonian_gradient
            .iter()
            .zip(&grid.lengths)
            .map(|(g, ds)| g.map(|v| -ds * v))
            .collect()
    }

    pub fn max_violation(&self, grid: &Grid, task: &TaskSpec) -> f64 {
        max_violation(grid, &self.sweep.configuration, task)
    }
}

/// `max_s max_j max(Ψ_j, 0)` over element midpoints.
pub fn max_violation(grid: &Grid, config: &Configuration, task: &TaskSpec) -> f64 {
    let mut worst: f64 = 0.0;
    for o in &task.obstacles {
        for j in 0..grid.n_elements() {
            worst = worst
                .max(obstacle_violation(config.midpoint(j), &o.shape, grid.sections[j].radius).0);
        }
    }
    worst
}

/// Lower level, forward sweep, cost, backward sweep and gradient for one
/// activation iterate.
pub fn evaluate(
    model: &RodModel,
    musculature: &Musculature,
    grid: &Grid,
    activations: &ActivationSet,
    task: &TaskSpec,
    warm: Option<&StrainField>,
    opts: &SolverOptions,
) -> Result<Evaluation, EquilibriumError> {
    let equilibrium = solve_equilibrium(model, musculature, grid, activations, warm, opts)?;
    let sweep = forward_sweep(grid, &equilibrium.strains, task);
    let cost = evaluate_cost(grid, activations, &sweep, task);
    let costate = backward_sweep(grid, &equilibrium.strains, &sweep, task);
    let mut fd_fallbacks = Vec::new();
    let mut hamiltonian_gradient = Vec::with_capacity(grid.n_elements());
    for j in 0..grid.n_elements() {
        let alpha = activations.at(j);
        let sens = match equilibrium.sensitivities[j] {
            Some(s) => s,
            None => {
                fd_fallbacks.push(j);
                PointProblem::new(model, musculature, grid.sections[j], alpha).fd_sensitivity(
                    equilibrium.strains.get(j),
                    1e-6,
                    opts,
                )?
            }
        };
        let g = strain_gradient(grid, &equilibrium.strains, &sweep, &costate, task, j);
        hamiltonian_gradient.push(activation_gradient(g, &sens, alpha));
    }
    Ok(Evaluation {
        equilibrium,
        sweep,
        cost,
        costate,
        hamiltonian_gradient,
        fd_fallbacks,
    })
}

/// Per-iteration monitoring record.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IterationRecord {
    pub iter: usize,
    #[serde(rename = "J")]
    pub cost: f64,
    pub tip_error: Option<f64>,
    pub max_violation: f64,
    pub projected_gradient: f64,
    pub learning_rate: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OptimizationReport {
    pub history: Vec<IterationRecord>,
    pub iterations: usize,
    pub converged: bool,
    pub final_cost: CostBreakdown,
    pub initial_cost: CostBreakdown,
    pub static_tip: Point,
    pub tip_error: Option<f64>,
    pub max_violation: f64,
    pub positive_definite_fraction: f64,
    pub final_learning_rate: f64,
    pub fd_fallback_count: usize,
    /// Wall-clock seconds; excluded from serialized artifacts.
    #[serde(skip)]
    pub wall_time: f64,
}

/// Output of [`solve_task`].
#[derive(Debug, Clone)]
pub struct TaskSolution {
    pub activations: ActivationSet,
    pub equilibrium: EquilibriumSolution,
    pub report: OptimizationReport,
}

/// Projected gradient: components pushing an activation past a bound are dropped.
pub fn projected_gradient_norm(activations: &ActivationSet, gradient: &[[f64; 3]]) -> f64 {
    let mut worst: f64 = 0.0;
    for (j, g) in gradient.iter().enumerate() {
        let a = activations.at(j);
        for m in 0..3 {
            let blocked = (a[m] <= 0.0 && g[m] < 0.0) || (a[m] >= 1.0 && g[m] > 0.0);
            if !blocked {
                worst = worst.max(g[m].abs());
            }
        }
    }
    worst
}

/// Forward-backward iteration with projected gradient ascent on `Ĥ`.
pub fn solve_task(
    model: &RodModel,
    musculature: &Musculature,
    task: &TaskSpec,
    initial: Option<&ActivationSet>,
) -> Result<TaskSolution, ShapingError> {
    task.validate()?;
    model
        .validate()
        .map_err(|e| ShapingError::InvalidTask(e.to_string()))?;
    let started = Instant::now();
    let grid = model.grid();
    let opts = SolverOptions::default();
    let mut alpha = match initial {
        Some(a) if a.n_elements() == grid.n_elements() => a.clone(),
        Some(a) => {
            return Err(ShapingError::InvalidTask(format!(
                "initial activations have {} elements, rod has {}",
                a.n_elements(),
                grid.n_elements()
            )))
        }
        None => ActivationSet::zeros(grid.n_elements()),
    };
    alpha.clip();

    let mut eta = task.learning_rate;
    let mut history = Vec::new();
    let mut warm: Option<StrainField> = None;
    let mut last_cost = f64::INFINITY;
    let mut stalled = 0usize;
    let mut converged = false;
    let mut fd_fallback_count = 0usize;
    let mut initial_cost = None;
    let mut iter = 0usize;
    let lower = |iteration, source| ShapingError::LowerLevel { iteration, source };

    let last = loop {
        let eval = evaluate(
            model,
            musculature,
            &grid,
            &alpha,
            task,
            warm.as_ref(),
            &opts,
        )
        .map_err(|e| lower(iter, e))?;
        fd_fallback_count += eval.fd_fallbacks.len();
        let cost = eval.cost.total();
        initial_cost.get_or_insert(eval.cost);
        let pg = projected_gradient_norm(&alpha, &eval.hamiltonian_gradient);
        history.push(IterationRecord {
            iter,
            cost,
            tip_error: task.tip_target.map(|t| (eval.sweep.tip() - t).norm()),
            max_violation: eval.max_violation(&grid, task),
            projected_gradient: pg,
            learning_rate: eta,
        });
        if pg < task.tolerance {
            converged = true;
            break eval;
        }
        if iter >= task.max_iters {
            break eval;
        }
        if cost >= last_cost {
            stalled += 1;
            if stalled >= task.backoff_patience {
                eta *= task.backoff_factor;
                stalled = 0;
            }
        } else {
            stalled = 0;
        }
        last_cost = cost;
        for (j, g) in eval.hamiltonian_gradient.iter().enumerate() {
            let a = alpha.at(j);
            alpha.set(j, [a[0] + eta * g[0], a[1] + eta * g[1], a[2] + eta * g[2]]);
        }
        alpha.clip();
        warm = Some(eval.equilibrium.strains);
        iter += 1;
    };

    let report = OptimizationReport {
        iterations: iter,
        converged,
        final_cost: last.cost,
        initial_cost: initial_cost.unwrap_or_default(),
        static_tip: last.sweep.tip(),
        tip_error: task.tip_target.map(|t| (last.sweep.tip() - t).norm()),
        max_violation: last.max_violation(&grid, task),
        positive_definite_fraction: last.equilibrium.positive_definite_fraction(),
        final_learning_rate: eta,
        fd_fallback_count,
        history,
        wall_time: started.elapsed().as_secs_f64(),
    };
    Ok(TaskSolution {
        activations: alpha,
        equilibrium: last.equilibrium,
        report,
    })
}

/// CSV of activation profiles with columns `s,alpha_LMt,alpha_LMb,alpha_TM`.
pub fn write_activation_csv<W: std::io::Write>(
    grid: &Grid,
    activations: &ActivationSet,
    mut out: W,
) -> std::io::Result<()> {
    writeln!(out, "s,alpha_LMt,alpha_LMb,alpha_TM")?;
    for j in 0..grid.n_elements() {
        let a = activations.at(j);
        writeln!(out, "{},{},{},{}", grid.centers[j], a[0], a[1], a[2])?;
    }
    Ok(())
}

/// Inverse of [`write_activation_csv`].
pub fn read_activation_csv(text: &str) -> Result<ActivationSet, String> {
    let mut lines = text.lines();
    match lines.next() {
        Some(h) if h.trim() == "s,alpha_LMt,alpha_LMb,alpha_TM" => {}
        other => return Err(format!("unexpected activation CSV header {other:?}")),
    }
    let mut profiles: [Vec<f64>; 3] = Default::default();
    for (k, line) in lines.enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let cols: Vec<&str> = line.split(',').collect();
        if cols.len() != 4 {
            return Err(format!("line {}: expected 4 columns", k + 2));
        }
        for m in 0..3 {
            let v: f64 = cols[m + 1]
                .trim()
                .parse()
                .map_err(|e| format!("line {}: {e}", k + 2))?;
            profiles[m].push(v);
        }
    }
    ActivationSet::from_profiles(profiles).map_err(|e| e.to_string())
}

/// Index helper for readability at call sites.
pub fn muscle_column(kind: MuscleKind) -> usize {
    kind.index()
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn tip_cost_examples() {
        let rest_tip = Point::new(0.20, 0.0);
        assert_eq!(tip_cost(rest_tip, rest_tip), 0.0);
        assert_relative_eq!(
            tip_cost(rest_tip, Point::new(0.12, 0.14)),
            0.013,
            epsilon = 1e-15
        );
        let g = tip_cost_gradient(rest_tip, Point::new(0.12, 0.14));
        assert_relative_eq!(g.x, 0.08, epsilon = 1e-15);
        assert_relative_eq!(g.y, -0.14, epsilon = 1e-15);
    }

    #[test]
    fn grasp_cost_examples() {
        let obj = Circle::new(0.12, 0.12, 0.02);
        let (d, _) = grasp_cost(Point::new(0.12, 0.08), &obj, 0.005, GraspDistance::Surface);
        assert_relative_eq!(d, 0.015, epsilon = 1e-15);
        let (d, _) = grasp_cost(Point::new(0.12, 0.095), &obj, 0.005, GraspDistance::Surface);
        assert!(d < 1e-15);
        let (d, g) = grasp_cost(obj.center, &obj, 0.005, GraspDistance::Surface);
        assert_relative_eq!(d, 0.025);
        assert_eq!(g, Point::zeros());
        let (d, _) = grasp_cost(
            Point::new(0.12, 0.08),
            &obj,
            0.005,
            GraspDistance::Centerline,
        );
        assert_relative_eq!(d, 0.02, epsilon = 1e-15);
    }

    #[test]
    fn grasp_subgradient_matches_fd() {
        let obj = Circle::new(0.12, 0.12, 0.02);
        let h = 1e-7;
        for p in [
            Point::new(0.05, 0.02),
            Point::new(0.125, 0.11),
            Point::new(0.2, 0.13),
        ] {
            let (_, g) = grasp_cost(p, &obj, 0.004, GraspDistance::Surface);
            for k in 0..2 {
                let mut e = Point::zeros();
                e[k] = h;
                let fd = (grasp_cost(p + e, &obj, 0.004, GraspDistance::Surface).0
                    - grasp_cost(p - e, &obj, 0.004, GraspDistance::Surface).0)
                    / (2.0 * h);
                assert!((fd - g[k]).abs() < 1e-6, "{fd} vs {}", g[k]);
            }
        }
    }

    #[test]
    fn obstacle_violation_examples() {
        let obj = Circle::new(0.12, 0.12, 0.02);
        assert_eq!(obstacle_violation(Point::new(0.0, 0.0), &obj, 0.005).0, 0.0);
        assert_relative_eq!(
            obstacle_violation(obj.center, &obj, 0.005).0,
            0.025 * 0.025,
            epsilon = 1e-18
        );
        assert_eq!(
            obstacle_violation(Point::new(0.12, 0.0949), &obj, 0.005).0,
            0.0
        );
    }

    #[test]
    fn task_validation() {
        let mut t = TaskSpec::reaching(Point::new(0.1, 0.1));
        assert!(t.validate().is_ok());
        t.tip_target = None;
        assert!(t.validate().is_err());
        let mut t = TaskSpec::reaching(Point::new(0.1, 0.1));
        t.learning_rate = 0.0;
        assert!(t.validate().is_err());
        let t = TaskSpec::grasping(Circle::new(0.12, 0.12, 0.02), 0.2);
        assert!(t.validate().is_ok());
        assert_eq!(t.grasp.unwrap().window, (0.4 * 0.2, 0.2));
    }

    #[test]
    fn passive_sweeps() {
        let model = RodModel::default();
        let grid = model.grid();
        let strains = StrainField::uniform(grid.n_elements(), Strain::REST);
        let target = Point::new(0.12, 0.14);
        let task = TaskSpec::reaching(target);
        let sweep = forward_sweep(&grid, &strains, &task);
        assert!(sweep.accumulators.is_empty());
        assert_relative_eq!(sweep.tip().x, 0.2, epsilon = 1e-14);
        let costate = backward_sweep(&grid, &strains, &sweep, &task);
        let expect = -1e5 * (sweep.tip() - target);
        assert_eq!(costate.linear[grid.n_elements()], expect);
        assert_eq!(costate.angular[grid.n_elements()], 0.0);
        // no running cost: linear costate constant
        assert!(costate.linear.iter().all(|l| *l == expect));
    }

    #[test]
    fn activation_gradient_examples() {
        let zero = [Strain::ZERO; 3];
        assert_eq!(activation_gradient(Strain::ZERO, &zero, [0.0; 3]), [0.0; 3]);
        assert_eq!(
            activation_gradient(Strain::ZERO, &zero, [0.5; 3]),
            [-0.5; 3]
        );
    }

    #[test]
    fn activation_csv_round_trip() {
        let grid = RodModel::default().grid();
        let mut a = ActivationSet::zeros(grid.n_elements());
        a.set(3, [0.25, 0.5, 1.0 / 3.0]);
        let mut buf = Vec::new();
        write_activation_csv(&grid, &a, &mut buf).unwrap();
        let back = read_activation_csv(std::str::from_utf8(&buf).unwrap()).unwrap();
        assert_eq!(back, a);
    }
}
