//! Time integration of the damped, muscle-actuated rod.
//!
//! The momentum balance is `dp/dt = −δV/δq − γ M⁻¹p` where `V` is the
//! discrete elastic potential plus the activation-weighted muscle
//! potentials, so every conservative force is an exact gradient. Steps use
//! position Verlet (half drift, kick, half drift) with the damping term
//! evaluated at the mean of the old and new velocities, so each kick
//! removes exactly `c_i |v̄_i|² Δt` of kinetic energy at node `i`.
//!
//! The dissipation `γ` [kg/s] is spread uniformly over the rest length:
//! node `i` carries the linear coefficient `c_i = γ ℓ_i / L₀` with `ℓ_i` its
//! Voronoi length. The rotational coefficient is `c_i J_i / m_i`, which
//! damps spin at the same rate `c_i / m_i` as translation.

use std::io::{self, Write};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::muscles::{ActivationSet, MuscleError, Musculature};
use crate::rod::{
    compute_strains, generalized_force, Configuration, GeneralizedForce, Grid, Inertia, Loads,
    Momentum, RodError, RodModel, StrainField,
};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum DynamicsError {
    #[error("simulation became unstable at step {step} (t = {time} s): {reason}")]
    Instability {
        step: u64,
        time: f64,
        reason: String,
    },
    #[error("time step {dt} s exceeds the stability estimate {limit} s")]
    TimeStepTooLarge { dt: f64, limit: f64 },
    #[error("invalid time parameters: {0}")]
    InvalidTime(&'static str),
    #[error(transparent)]
    Rod(#[from] RodError),
    #[error(transparent)]
    Muscle(#[from] MuscleError),
}

/// Configuration, momentum and time. Node 0 is the clamped base.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DynamicState {
    pub configuration: Configuration,
    pub momentum: Momentum,
    pub time: f64,
}

impl DynamicState {
    pub fn at_rest(grid: &Grid) -> Self {
        Self::from_configuration(Configuration::straight(grid))
    }

    /// Zero-momentum state at `configuration`.
    pub fn from_configuration(configuration: Configuration) -> Self {
        let n = configuration.n_nodes();
        Self {
            configuration,
            momentum: Momentum::zeros(n),
            time: 0.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Energies {
    pub kinetic: f64,
    pub elastic: f64,
    pub muscle: f64,
}

impl Energies {
    pub fn potential(&self) -> f64 {
        self.elastic + self.muscle
    }

    /// `H_total = T + V^e + Σ V^m(α^m)`.
    pub fn total(&self) -> f64 {
        self.kinetic + self.elastic + self.muscle
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Sample {
    pub time: f64,
    pub configuration: Configuration,
    pub energies: Energies,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrajectoryLog {
    pub samples: Vec<Sample>,
    pub final_state: DynamicState,
}

pub const TRAJECTORY_CSV_HEADER: &str = "t,node,x,y,theta,T,V,H_total";

impl TrajectoryLog {
    /// One row per node per sample; `V` is the total potential.
    pub fn write_csv<W: Write>(&self, out: W) -> io::Result<()> {
        write_trajectory_csv(&self.samples, out)
    }

    pub fn peak_kinetic(&self) -> f64 {
        self.samples
            .iter()
            .map(|s| s.energies.kinetic)
            .fold(0.0, f64::max)
    }
}

pub fn write_trajectory_csv<W: Write>(samples: &[Sample], mut out: W) -> io::Result<()> {
    writeln!(out, "{TRAJECTORY_CSV_HEADER}")?;
    for s in samples {
        let e = &s.energies;
        for (i, (p, th)) in s
            .configuration
            .positions
            .iter()
            .zip(&s.configuration.angles)
            .enumerate()
        {
            writeln!(
                out,
                "{},{},{},{},{},{},{},{}",
                s.time,
                i,
                p.x,
                p.y,
                th,
                e.kinetic,
                e.potential(),
                e.total()
            )?;
        }
    }
    Ok(())
}

/// Rod, muscles and a fixed set of activations, ready to integrate.
#[derive(Debug, Clone)]
pub struct Simulator<'a> {
    model: &'a RodModel,
    musculature: &'a Musculature,
    grid: Grid,
    inertia: Inertia,
    /// Per-node damping rates `c_i / m_i` [1/s], shared by both channels.
    damping_rate: Vec<f64>,
    activations: ActivationSet,
}

impl<'a> Simulator<'a> {
    pub fn new(
        model: &'a RodModel,
        musculature: &'a Musculature,
        activations: ActivationSet,
    ) -> Result<Self, DynamicsError> {
        model.validate()?;
        activations.validate()?;
        let grid = model.grid();
        if activations.n_elements() != grid.n_elements() {
            return Err(MuscleError::ProfileLength {
                kind: crate::muscles::MuscleKind::LongitudinalTop,
                expected: grid.n_elements(),
                actual: activations.n_elements(),
            }
            .into());
        }
        let inertia = model.inertia(&grid);
        let damping_rate = grid
            .voronoi
            .iter()
            .zip(&inertia.mass)
            .map(|(ell, m)| model.damping * ell / (model.rest_length * m))
            .collect();
        Ok(Self {
            model,
            musculature,
            grid,
            inertia,
            damping_rate,
            activations,
        })
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn inertia(&self) -> &Inertia {
        &self.inertia
    }

    pub fn activations(&self) -> &ActivationSet {
        &self.activations
    }

    /// Switch to a new constant activation profile.
    pub fn set_activations(&mut self, activations: ActivationSet) -> Result<(), DynamicsError> {
        activations.validate()?;
        self.activations = activations;
        Ok(())
    }

    fn element_loads(&self, field: &StrainField, elastic: bool, muscles: bool) -> Vec<Loads> {
        (0..self.grid.n_elements())
            .map(|j| {
                let sec = &self.grid.sections[j];
                let w = field.get(j);
                let mut l = Loads::default();
                if elastic {
                    l += self.model.elastic_loads(sec, w);
                }
                if muscles {
                    l += self
                        .musculature
                        .loads(self.model, sec, w, self.activations.at(j));
                }
                l
            })
            .collect()
    }

    fn force(
        &self,
        config: &Configuration,
        elastic: bool,
        muscles: bool,
    ) -> Result<GeneralizedForce, RodError> {
        let field = compute_strains(&self.grid, config)?;
        let loads = self.element_loads(&field, elastic, muscles);
        Ok(generalized_force(&self.grid, config, &field, &loads))
    }

    /// `−δV^e/δq − Σ_m δV^m/δq`.
    pub fn conservative_force(&self, config: &Configuration) -> Result<GeneralizedForce, RodError> {
        self.force(config, true, true)
    }

    /// `−Σ_m δV^m/δq` only.
    pub fn muscle_force(&self, config: &Configuration) -> Result<GeneralizedForce, RodError> {
        self.force(config, false, true)
    }

    /// Momentum rate `dp/dt`, zero at the clamped base.
    pub fn rhs(&self, state: &DynamicState) -> Result<GeneralizedForce, RodError> {
        let mut f = self.conservative_force(&state.configuration)?;
        for i in 0..f.forces.len() {
            let rate = self.damping_rate[i];
            f.forces[i] -= rate * state.momentum.linear[i];
            f.couples[i] -= rate * state.momentum.angular[i];
        }
        f.forces[0] = nalgebra::Vector2::zeros();
        f.couples[0] = 0.0;
        Ok(f)
    }

    pub fn potential_energies(&self, config: &Configuration) -> Result<(f64, f64), RodError> {
        let field = compute_strains(&self.grid, config)?;
        let mut elastic = 0.0;
        let mut muscle = 0.0;
        for j in 0..self.grid.n_elements() {
            let sec = &self.grid.sections[j];
            let w = field.get(j);
            let ds = self.grid.lengths[j];
            elastic += self.model.elastic_energy_density(sec, w) * ds;
            muscle += self
                .musculature
                .energy_density(self.model, sec, w, self.activations.at(j))
                * ds;
        }
        Ok((elastic, muscle))
    }

    pub fn energies(&self, state: &DynamicState) -> Result<Energies, RodError> {
        let (elastic, muscle) = self.potential_energies(&state.configuration)?;
        Ok(Energies {
            kinetic: state.momentum.kinetic_energy(&self.inertia),
            elastic,
            muscle,
        })
    }

    /// Rough upper bound on a stable Verlet step from the stiffest element.
    pub fn stable_time_step(&self) -> f64 {
        let m = self.model;
        let mut omega2: f64 = 0.0;
        for j in 0..self.grid.n_elements() {
            let sec = &self.grid.sections[j];
            let ds = self.grid.lengths[j];
            let (ea, ga, ei) = (
                m.youngs_modulus * sec.area,
                m.shear_modulus * sec.area,
                m.youngs_modulus * sec.second_moment,
            );
            let mass = self.inertia.mass[j].min(self.inertia.mass[j + 1]);
            let rot = self.inertia.rotational[j].min(self.inertia.rotational[j + 1]);
            // muscles can at most add their force capacity per unit strain
            let active: f64 = self
                .musculature
                .muscles
                .iter()
                .map(|s| s.force_capacity(sec) * 6.0)
                .sum();
            omega2 = omega2.max(4.0 * (ea.max(ga) + active) / (ds * mass));
            omega2 = omega2.max(
                (ds * (ga + active) + 4.0 * (ei + active * sec.radius * sec.radius) / ds) / rot,
            );
        }
        2.0 / omega2.sqrt()
    }

    /// One position-Verlet step of size `dt`, honoring the base clamp.
    pub fn step(&self, state: &mut DynamicState, dt: f64) -> Result<(), RodError> {
        let n = state.configuration.n_nodes();
        let half = 0.5 * dt;
        let cfg = &mut state.configuration;
        let mom = &state.momentum;
        for i in 1..n {
            cfg.positions[i] += half * mom.linear[i] / self.inertia.mass[i];
            cfg.angles[i] += half * mom.angular[i] / self.inertia.rotational[i];
        }
        let f = self.conservative_force(cfg)?;
        let mom = &mut state.momentum;
        for i in 1..n {
            let c = 0.5 * dt * self.damping_rate[i];
            mom.linear[i] = (mom.linear[i] * (1.0 - c) + dt * f.forces[i]) / (1.0 + c);
            mom.angular[i] = (mom.angular[i] * (1.0 - c) + dt * f.couples[i]) / (1.0 + c);
        }
        for i in 1..n {
            cfg.positions[i] += half * mom.linear[i] / self.inertia.mass[i];
            cfg.angles[i] += half * mom.angular[i] / self.inertia.rotational[i];
        }
        state.time += dt;
        Ok(())
    }

    fn check_finite(state: &DynamicState, step: u64) -> Result<(), DynamicsError> {
        let ok = state
            .configuration
            .positions
            .iter()
            .all(|p| p.x.is_finite() && p.y.is_finite())
            && state.configuration.angles.iter().all(|t| t.is_finite())
            && state
                .momentum
                .linear
                .iter()
                .all(|p| p.x.is_finite() && p.y.is_finite())
            && state.momentum.angular.iter().all(|p| p.is_finite());
        if ok {
            Ok(())
        } else {
            Err(DynamicsError::Instability {
                step,
                time: state.time,
                reason: "non-finite state".into(),
            })
        }
    }

    /// Integrate to `t_final`, sampling every `stride` steps. The initial and
    /// terminal states are always sampled.
    pub fn simulate(
        &self,
        initial: DynamicState,
        t_final: f64,
        dt: f64,
        stride: usize,
    ) -> Result<TrajectoryLog, DynamicsError> {
        if !(dt > 0.0 && dt.is_finite()) {
            return Err(DynamicsError::InvalidTime("time step must be positive"));
        }
        if !(t_final >= initial.time && t_final.is_finite()) {
            return Err(DynamicsError::InvalidTime(
                "final time precedes the initial time",
            ));
        }
        if stride == 0 {
            return Err(DynamicsError::InvalidTime(
                "sample stride must be at least 1",
            ));
        }
        let limit = self.stable_time_step();
        if dt > limit {
            return Err(DynamicsError::TimeStepTooLarge { dt, limit });
        }
        let steps = ((t_final - initial.time) / dt).round() as u64;
        let t0 = initial.time;
        let mut state = initial;
        let mut samples = vec![self.sample(&state, 0)?];
        for k in 1..=steps {
            self.step(&mut state, dt)
                .map_err(|e| DynamicsError::Instability {
                    step: k,
                    time: state.time,
                    reason: e.to_string(),
                })?;
            // avoid accumulating roundoff in the clock
            state.time = t0 + k as f64 * dt;
            Self::check_finite(&state, k)?;
            if k % stride as u64 == 0 || k == steps {
                samples.push(self.sample(&state, k)?);
            }
        }
        Ok(TrajectoryLog {
            samples,
            final_state: state,
        })
    }

    fn sample(&self, state: &DynamicState, step: u64) -> Result<Sample, DynamicsError> {
        let energies = self
            .energies(state)
            .map_err(|e| DynamicsError::Instability {
                step,
                time: state.time,
                reason: e.to_string(),
            })?;
        Ok(Sample {
            time: state.time,
            configuration: state.configuration.clone(),
            energies,
        })
    }
}

/// Rest rod with its tip displaced transversely by `amplitude`, using the
/// quadratic profile `y = amplitude (s/L₀)²` with matching tangent angles.
pub fn tip_perturbation(grid: &Grid, amplitude: f64) -> Configuration {
    let l = grid.rest_length;
    Configuration {
        positions: grid
            .nodes
            .iter()
            .map(|&s| nalgebra::Vector2::new(s, amplitude * (s / l).powi(2)))
            .collect(),
        angles: grid
            .nodes
            .iter()
            .map(|&s| (2.0 * amplitude * s / (l * l)).atan())
            .collect(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rest_state_is_a_fixed_point() {
        let model = RodModel::default();
        let mus = Musculature::default();
        let sim = Simulator::new(&model, &mus, ActivationSet::zeros(model.n_elements)).unwrap();
        let mut state = DynamicState::at_rest(sim.grid());
        let start = state.clone();
        // the straight rod is only an equilibrium up to round-off in the strains
        assert!(sim.rhs(&state).unwrap().max_abs() < 1e-12);
        for _ in 0..100 {
            sim.step(&mut state, 1e-5).unwrap();
        }
        let drift = state
            .configuration
            .positions
            .iter()
            .zip(&start.configuration.positions)
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max);
        assert!(drift < 1e-14, "{drift}");
    }

    #[test]
    fn default_time_step_is_stable() {
        let model = RodModel::default();
        let mus = Musculature::default();
        let sim = Simulator::new(&model, &mus, ActivationSet::zeros(model.n_elements)).unwrap();
        assert!(sim.stable_time_step() > 1e-5);
    }

    #[test]
    fn bad_time_parameters() {
        let model = RodModel::default();
        let mus = Musculature::default();
        let sim = Simulator::new(&model, &mus, ActivationSet::zeros(model.n_elements)).unwrap();
        let s = DynamicState::at_rest(sim.grid());
        assert!(matches!(
            sim.simulate(s.clone(), 1.0, 0.0, 1),
            Err(DynamicsError::InvalidTime(_))
        ));
        assert!(matches!(
            sim.simulate(s.clone(), 1.0, 1e-5, 0),
            Err(DynamicsError::InvalidTime(_))
        ));
        assert!(matches!(
            sim.simulate(s, 1.0, 1.0, 1),
            Err(DynamicsError::TimeStepTooLarge { .. })
        ));
    }

    #[test]
    fn csv_layout() {
        let model = RodModel {
            n_elements: 4,
            ..RodModel::default()
        };
        let mus = Musculature::default();
        let sim = Simulator::new(&model, &mus, ActivationSet::zeros(4)).unwrap();
        let log = sim
            .simulate(DynamicState::at_rest(sim.grid()), 1e-4, 1e-5, 5)
            .unwrap();
        assert_eq!(log.samples.len(), 3);
        let mut buf = Vec::new();
        log.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let mut lines = text.lines();
        assert_eq!(lines.next(), Some(TRAJECTORY_CSV_HEADER));
        assert_eq!(lines.count(), 3 * 5);
    }
}
