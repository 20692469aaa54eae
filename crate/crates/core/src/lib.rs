//! Static and dynamic mechanics of a muscular, tapered planar arm.
//!
//! The arm is modelled as a planar Cosserat rod clamped at its base and
//! actuated by two longitudinal muscles and one transverse muscle. The crate
//! provides the rod kinematics and elastic energy ([`rod`]), Hill-type muscle
//! loads ([`muscles`]), damped symplectic time stepping ([`dynamics`]), the
//! pointwise static equilibrium solver ([`equilibrium`]) and the activation
//! design loop for reaching and grasping ([`shaping`]).

pub mod dynamics;
pub mod equilibrium;
pub mod muscles;
pub mod rod;
pub mod shaping;

pub use dynamics::{DynamicState, DynamicsError, Energies, Sample, Simulator, TrajectoryLog};
pub use equilibrium::{
    solve_equilibrium, solve_pointwise, EquilibriumError, EquilibriumSolution, PointProblem,
    PointSolution, SolverOptions,
};
pub use muscles::{ActivationSet, ForceLength, MuscleError, MuscleKind, MuscleSpec, Musculature};
pub use rod::{
    Configuration, GeneralizedForce, Grid, Inertia, Loads, Momentum, Point, RodError, RodModel,
    Section, Strain, StrainField,
};
pub use shaping::{
    solve_task, Circle, GraspDistance, GraspObjective, Obstacle, OptimizationReport, ShapingError,
    TaskSolution, TaskSpec,
};
