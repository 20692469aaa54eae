//! Planar Cosserat rod: geometry, discretization, kinematics and passive
//! elastic energetics.
//!
//! The rod is discretized into `n` straight elements. Positions `r_i` and
//! material-frame angles `θ_i` live at the `n + 1` nodes; the strains of
//! element `j` are all co-located at its midpoint:
//!
//! ```text
//! ν₁ a + ν₂ b = (r_{j+1} − r_j) / Δs_j    with the frame taken at θ̄_j = (θ_j + θ_{j+1}) / 2
//! κ           = (θ_{j+1} − θ_j) / Δs_j
//! ```
//!
//! With the base node clamped, this map from configuration to strains is a
//! bijection, so the discrete potential `Σ_j W(w_j) Δs_j` is minimized over
//! configurations exactly when it is minimized pointwise over strains.

use std::f64::consts::PI;
use std::ops::{Add, AddAssign, Mul, Sub};

use nalgebra::Vector2;
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// A point or vector in the plane of motion, in metres.
pub type Point = Vector2<f64>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum RodError {
    #[error("invalid rod parameter `{name}` = {value}: {reason}")]
    InvalidParameter {
        name: &'static str,
        value: f64,
        reason: &'static str,
    },
    #[error("arc length {s} outside [0, {length}]")]
    ArcLengthOutOfRange { s: f64, length: f64 },
    #[error("element {index} has zero reference length")]
    DegenerateElement { index: usize },
    #[error("element {index} is inverted (stretch {stretch})")]
    InvertedElement { index: usize, stretch: f64 },
    #[error("expected {expected} {what}, got {actual}")]
    LengthMismatch {
        what: &'static str,
        expected: usize,
        actual: usize,
    },
}

/// Pointwise deformation `w = (ν₁, ν₂, κ)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Strain {
    pub stretch: f64,
    pub shear: f64,
    pub curvature: f64,
}

impl Strain {
    /// Straight, unstretched rod.
    pub const REST: Strain = Strain {
        stretch: 1.0,
        shear: 0.0,
        curvature: 0.0,
    };
    pub const ZERO: Strain = Strain {
        stretch: 0.0,
        shear: 0.0,
        curvature: 0.0,
    };

    pub const fn new(stretch: f64, shear: f64, curvature: f64) -> Self {
        Self {
            stretch,
            shear,
            curvature,
        }
    }

    pub fn to_array(self) -> [f64; 3] {
        [self.stretch, self.shear, self.curvature]
    }

    pub fn from_array(a: [f64; 3]) -> Self {
        Self::new(a[0], a[1], a[2])
    }
}

impl Add for Strain {
    type Output = Strain;
    fn add(self, o: Strain) -> Strain {
        Strain::new(
            self.stretch + o.stretch,
            self.shear + o.shear,
            self.curvature + o.curvature,
        )
    }
}

impl Sub for Strain {
    type Output = Strain;
    fn sub(self, o: Strain) -> Strain {
        Strain::new(
            self.stretch - o.stretch,
            self.shear - o.shear,
            self.curvature - o.curvature,
        )
    }
}

impl Mul<f64> for Strain {
    type Output = Strain;
    fn mul(self, k: f64) -> Strain {
        Strain::new(self.stretch * k, self.shear * k, self.curvature * k)
    }
}

/// Internal loads in the material frame: axial force `n₁`, shear force `n₂`
/// and couple `m`.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct Loads {
    pub axial: f64,
    pub shear: f64,
    pub couple: f64,
}

impl Loads {
    pub const fn new(axial: f64, shear: f64, couple: f64) -> Self {
        Self {
            axial,
            shear,
            couple,
        }
    }

    pub fn to_array(self) -> [f64; 3] {
        [self.axial, self.shear, self.couple]
    }

    pub fn scale(self, k: f64) -> Loads {
        Loads::new(self.axial * k, self.shear * k, self.couple * k)
    }
}

impl Add for Loads {
    type Output = Loads;
    fn add(self, o: Loads) -> Loads {
        Loads::new(
            self.axial + o.axial,
            self.shear + o.shear,
            self.couple + o.couple,
        )
    }
}

impl AddAssign for Loads {
    fn add_assign(&mut self, o: Loads) {
        *self = *self + o;
    }
}

/// Cross-section of the arm at one arc-length location.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Section {
    pub radius: f64,
    pub area: f64,
    pub second_moment: f64,
}

impl Section {
    /// Solid circular section: `A = πφ²`, `I = A²/(4π)`.
    pub fn circular(radius: f64) -> Self {
        let area = PI * radius * radius;
        Self {
            radius,
            area,
            second_moment: area * area / (4.0 * PI),
        }
    }
}

/// Material and geometric description of the arm. All values in SI units.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RodModel {
    pub rest_length: f64,
    pub base_radius: f64,
    pub tip_radius: f64,
    pub youngs_modulus: f64,
    pub shear_modulus: f64,
    pub density: f64,
    /// Dissipation `γ` [kg/s], distributed uniformly over the rest length.
    pub damping: f64,
    pub rest_strain: Strain,
    pub n_elements: usize,
}

impl Default for RodModel {
    /// Octopus arm: 20 cm long, tapering from 1.2 cm to 0.12 cm radius.
    fn default() -> Self {
        Self {
            rest_length: 0.20,
            base_radius: 0.012,
            tip_radius: 0.0012,
            youngs_modulus: 10.0e3,
            shear_modulus: 40.0e3 / 9.0,
            density: 1050.0,
            damping: 0.02,
            rest_strain: Strain::REST,
            n_elements: 100,
        }
    }
}

impl RodModel {
    pub fn validate(&self) -> Result<(), RodError> {
        fn check(
            name: &'static str,
            value: f64,
            ok: bool,
            reason: &'static str,
        ) -> Result<(), RodError> {
            if ok && value.is_finite() {
                Ok(())
            } else {
                Err(RodError::InvalidParameter {
                    name,
                    value,
                    reason,
                })
            }
        }
        check(
            "rest_length",
            self.rest_length,
            self.rest_length > 0.0,
            "must be positive",
        )?;
        check(
            "tip_radius",
            self.tip_radius,
            self.tip_radius > 0.0,
            "must be positive",
        )?;
        check(
            "base_radius",
            self.base_radius,
            self.base_radius >= self.tip_radius,
            "must be at least the tip radius",
        )?;
        check(
            "youngs_modulus",
            self.youngs_modulus,
            self.youngs_modulus > 0.0,
            "must be positive",
        )?;
        check(
            "shear_modulus",
            self.shear_modulus,
            self.shear_modulus > 0.0,
            "must be positive",
        )?;
        check(
            "density",
            self.density,
            self.density > 0.0,
            "must be positive",
        )?;
        check(
            "damping",
            self.damping,
            self.damping >= 0.0,
            "must be non-negative",
        )?;
        check(
            "rest_stretch",
            self.rest_strain.stretch,
            self.rest_strain.stretch > 0.0,
            "must be positive",
        )?;
        check("rest_shear", self.rest_strain.shear, true, "")?;
        check("rest_curvature", self.rest_strain.curvature, true, "")?;
        check(
            "n_elements",
            self.n_elements as f64,
            self.n_elements >= 2,
            "need at least two elements",
        )?;
        Ok(())
    }

    /// Linear taper between the base and tip radii.
    pub fn radius_at(&self, s: f64) -> Result<f64, RodError> {
        let slack = 1e-12 * self.rest_length;
        if !(s >= -slack && s <= self.rest_length + slack) {
            return Err(RodError::ArcLengthOutOfRange {
                s,
                length: self.rest_length,
            });
        }
        let s = s.clamp(0.0, self.rest_length);
        Ok((self.tip_radius * s + self.base_radius * (self.rest_length - s)) / self.rest_length)
    }

    pub fn section_at(&self, s: f64) -> Result<Section, RodError> {
        self.radius_at(s).map(Section::circular)
    }

    /// Uniform grid with sections evaluated at element midpoints.
    pub fn grid(&self) -> Grid {
        let n = self.n_elements;
        let ds = self.rest_length / n as f64;
        let nodes: Vec<f64> = (0..=n).map(|i| i as f64 * ds).collect();
        let centers: Vec<f64> = (0..n).map(|j| (j as f64 + 0.5) * ds).collect();
        let lengths = vec![ds; n];
        let sections = centers
            .iter()
            .map(|&s| Section::circular(self.radius_at(s).expect("midpoint inside rod")))
            .collect();
        Grid::from_parts(self.rest_length, nodes, centers, lengths, sections)
    }

    /// Quadratic elastic stored energy per unit length.
    pub fn elastic_energy_density(&self, section: &Section, w: Strain) -> f64 {
        let d = w - self.rest_strain;
        0.5 * (self.youngs_modulus * section.area * d.stretch * d.stretch
            + self.shear_modulus * section.area * d.shear * d.shear
            + self.youngs_modulus * section.second_moment * d.curvature * d.curvature)
    }

    /// Linear stress-strain relation `n₁ = EA(ν₁−ν₁°)`, `n₂ = GA(ν₂−ν₂°)`, `m = EI(κ−κ°)`.
    pub fn elastic_loads(&self, section: &Section, w: Strain) -> Loads {
        let d = w - self.rest_strain;
        Loads::new(
            self.youngs_modulus * section.area * d.stretch,
            self.shear_modulus * section.area * d.shear,
            self.youngs_modulus * section.second_moment * d.curvature,
        )
    }

    /// Diagonal elastic stiffness `(EA, GA, EI)`.
    pub fn elastic_stiffness(&self, section: &Section) -> [f64; 3] {
        [
            self.youngs_modulus * section.area,
            self.shear_modulus * section.area,
            self.youngs_modulus * section.second_moment,
        ]
    }

    /// `V^e = Σ_j W^e(w_j) Δs_j`.
    pub fn elastic_energy(&self, grid: &Grid, field: &StrainField) -> f64 {
        (0..grid.n_elements())
            .map(|j| self.elastic_energy_density(&grid.sections[j], field.get(j)) * grid.lengths[j])
            .sum()
    }

    /// Negative gradient of the discrete elastic energy with respect to every
    /// nodal position and angle.
    pub fn elastic_generalized_force(
        &self,
        grid: &Grid,
        config: &Configuration,
    ) -> Result<GeneralizedForce, RodError> {
        let field = compute_strains(grid, config)?;
        let loads: Vec<Loads> = (0..grid.n_elements())
            .map(|j| self.elastic_loads(&grid.sections[j], field.get(j)))
            .collect();
        Ok(generalized_force(grid, config, &field, &loads))
    }

    pub fn inertia(&self, grid: &Grid) -> Inertia {
        let n = grid.n_elements();
        let mut mass = vec![0.0; n + 1];
        let mut rotational = vec![0.0; n + 1];
        for j in 0..n {
            let m = self.density * grid.sections[j].area * grid.lengths[j];
            let r = self.density * grid.sections[j].second_moment * grid.lengths[j];
            mass[j] += 0.5 * m;
            mass[j + 1] += 0.5 * m;
            rotational[j] += 0.5 * r;
            rotational[j + 1] += 0.5 * r;
        }
        Inertia { mass, rotational }
    }
}

/// Discretization grid of the rest arm.
#[derive(Debug, Clone, PartialEq)]
pub struct Grid {
    pub rest_length: f64,
    /// Arc length of the `n + 1` nodes.
    pub nodes: Vec<f64>,
    /// Arc length of the `n` element midpoints.
    pub centers: Vec<f64>,
    /// Reference element lengths `Δs_j`.
    pub lengths: Vec<f64>,
    /// Nodal Voronoi lengths (half an element at either end).
    pub voronoi: Vec<f64>,
    /// Cross-section at each element midpoint.
    pub sections: Vec<Section>,
}

impl Grid {
    pub fn from_parts(
        rest_length: f64,
        nodes: Vec<f64>,
        centers: Vec<f64>,
        lengths: Vec<f64>,
        sections: Vec<Section>,
    ) -> Self {
        let n = lengths.len();
        let mut voronoi = vec![0.0; n + 1];
        for (j, &ds) in lengths.iter().enumerate() {
            voronoi[j] += 0.5 * ds;
            voronoi[j + 1] += 0.5 * ds;
        }
        Self {
            rest_length,
            nodes,
            centers,
            lengths,
            voronoi,
            sections,
        }
    }

    pub fn n_elements(&self) -> usize {
        self.lengths.len()
    }

    pub fn n_nodes(&self) -> usize {
        self.lengths.len() + 1
    }
}

/// Discrete configuration `q = (r, θ)` at the nodes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Configuration {
    pub positions: Vec<Point>,
    pub angles: Vec<f64>,
}

impl Configuration {
    /// Straight rod along `e₁` with the base at the origin.
    pub fn straight(grid: &Grid) -> Self {
        Self {
            positions: grid.nodes.iter().map(|&s| Point::new(s, 0.0)).collect(),
            angles: vec![0.0; grid.n_nodes()],
        }
    }

    pub fn n_nodes(&self) -> usize {
        self.positions.len()
    }

    pub fn tip(&self) -> Point {
        *self.positions.last().expect("configuration has nodes")
    }

    /// Midpoint of element `j`.
    pub fn midpoint(&self, j: usize) -> Point {
        0.5 * (self.positions[j] + self.positions[j + 1])
    }

    /// Rigid motion: rotate by `angle` about the origin, then translate.
    pub fn rigidly_moved(&self, angle: f64, shift: Point) -> Self {
        let (s, c) = angle.sin_cos();
        Self {
            positions: self
                .positions
                .iter()
                .map(|p| Point::new(c * p.x - s * p.y, s * p.x + c * p.y) + shift)
                .collect(),
            angles: self.angles.iter().map(|t| t + angle).collect(),
        }
    }
}

/// Strains per element, all located at the element midpoint.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StrainField {
    pub stretch: Vec<f64>,
    pub shear: Vec<f64>,
    pub curvature: Vec<f64>,
}

impl StrainField {
    pub fn uniform(n: usize, w: Strain) -> Self {
        Self {
            stretch: vec![w.stretch; n],
            shear: vec![w.shear; n],
            curvature: vec![w.curvature; n],
        }
    }

    pub fn from_fn(n: usize, mut f: impl FnMut(usize) -> Strain) -> Self {
        let mut field = Self::uniform(n, Strain::ZERO);
        for j in 0..n {
            field.set(j, f(j));
        }
        field
    }

    pub fn len(&self) -> usize {
        self.stretch.len()
    }

    pub fn is_empty(&self) -> bool {
        self.stretch.is_empty()
    }

    pub fn get(&self, j: usize) -> Strain {
        Strain::new(self.stretch[j], self.shear[j], self.curvature[j])
    }

    pub fn set(&mut self, j: usize, w: Strain) {
        self.stretch[j] = w.stretch;
        self.shear[j] = w.shear;
        self.curvature[j] = w.curvature;
    }

    pub fn iter(&self) -> impl Iterator<Item = Strain> + '_ {
        (0..self.len()).map(|j| self.get(j))
    }
}

/// Lumped nodal inertia `diag(ρA, ρA, ρI)` integrated over Voronoi cells.
#[derive(Debug, Clone, PartialEq)]
pub struct Inertia {
    pub mass: Vec<f64>,
    pub rotational: Vec<f64>,
}

/// Discrete momentum `p = M ∂ₜq` at the nodes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Momentum {
    pub linear: Vec<Point>,
    pub angular: Vec<f64>,
}

impl Momentum {
    pub fn zeros(n_nodes: usize) -> Self {
        Self {
            linear: vec![Point::zeros(); n_nodes],
            angular: vec![0.0; n_nodes],
        }
    }

    pub fn kinetic_energy(&self, inertia: &Inertia) -> f64 {
        let linear: f64 = self
            .linear
            .iter()
            .zip(&inertia.mass)
            .map(|(p, m)| p.norm_squared() / (2.0 * m))
            .sum();
        let angular: f64 = self
            .angular
            .iter()
            .zip(&inertia.rotational)
            .map(|(p, j)| p * p / (2.0 * j))
            .sum();
        linear + angular
    }
}

/// Nodal forces and couples, i.e. `−δV/δq` of some discrete potential.
#[derive(Debug, Clone, PartialEq)]
pub struct GeneralizedForce {
    pub forces: Vec<Point>,
    pub couples: Vec<f64>,
}

impl GeneralizedForce {
    pub fn zeros(n_nodes: usize) -> Self {
        Self {
            forces: vec![Point::zeros(); n_nodes],
            couples: vec![0.0; n_nodes],
        }
    }

    pub fn max_abs(&self) -> f64 {
        self.forces
            .iter()
            .map(|f| f.x.abs().max(f.y.abs()))
            .chain(self.couples.iter().map(|c| c.abs()))
            .fold(0.0, f64::max)
    }
}

/// Material frame `(a, b)` for angle `θ`.
pub fn frame(theta: f64) -> (Point, Point) {
    let (s, c) = theta.sin_cos();
    (Point::new(c, s), Point::new(-s, c))
}

/// `g(q, w) = (ν₁a + ν₂b, κ)`: spatial rate of the configuration.
pub fn kinematic_rhs(theta: f64, w: Strain) -> (Point, f64) {
    let (a, b) = frame(theta);
    (w.stretch * a + w.shear * b, w.curvature)
}

/// Discrete inversion of the kinematic relation on each element.
pub fn compute_strains(grid: &Grid, config: &Configuration) -> Result<StrainField, RodError> {
    let n = grid.n_elements();
    if config.positions.len() != n + 1 {
        return Err(RodError::LengthMismatch {
            what: "node positions",
            expected: n + 1,
            actual: config.positions.len(),
        });
    }
    if config.angles.len() != n + 1 {
        return Err(RodError::LengthMismatch {
            what: "node angles",
            expected: n + 1,
            actual: config.angles.len(),
        });
    }
    let mut field = StrainField::uniform(n, Strain::ZERO);
    for j in 0..n {
        let ds = grid.lengths[j];
        if ds <= 0.0 {
            return Err(RodError::DegenerateElement { index: j });
        }
        let w = element_strain(config, j, ds);
        if !(w.stretch > 0.0) {
            return Err(RodError::InvertedElement {
                index: j,
                stretch: w.stretch,
            });
        }
        field.set(j, w);
    }
    Ok(field)
}

#[inline]
pub(crate) fn element_strain(config: &Configuration, j: usize, ds: f64) -> Strain {
    let tangent = (config.positions[j + 1] - config.positions[j]) / ds;
    let (a, b) = frame(0.5 * (config.angles[j] + config.angles[j + 1]));
    Strain::new(
        tangent.dot(&a),
        tangent.dot(&b),
        (config.angles[j + 1] - config.angles[j]) / ds,
    )
}

/// Integrate `∂ₛq = g(q, w)` from a clamped base at the origin.
///
/// Angles are exact for piecewise-constant curvature; positions use the
/// midpoint rule, which makes this the exact inverse of [`compute_strains`].
pub fn integrate_strains(grid: &Grid, field: &StrainField) -> Configuration {
    let n = grid.n_elements();
    let mut positions = Vec::with_capacity(n + 1);
    let mut angles = Vec::with_capacity(n + 1);
    let mut r = Point::zeros();
    let mut theta = 0.0;
    positions.push(r);
    angles.push(theta);
    for j in 0..n {
        let ds = grid.lengths[j];
        let w = field.get(j);
        let (dr, _) = kinematic_rhs(theta + 0.5 * w.curvature * ds, w);
        r += ds * dr;
        theta += w.curvature * ds;
        positions.push(r);
        angles.push(theta);
    }
    Configuration { positions, angles }
}

/// Assemble nodal forces and couples from per-element material-frame loads
/// `P_j = ∂W/∂w` evaluated at the strains of `config`.
///
/// The result is the exact negative gradient of `Σ_j W(w_j) Δs_j` with
/// respect to node positions and angles.
pub fn generalized_force(
    grid: &Grid,
    config: &Configuration,
    field: &StrainField,
    loads: &[Loads],
) -> GeneralizedForce {
    let n = grid.n_elements();
    let mut out = GeneralizedForce::zeros(n + 1);
    for j in 0..n {
        let ds = grid.lengths[j];
        let w = field.get(j);
        let p = loads[j];
        let (a, b) = frame(0.5 * (config.angles[j] + config.angles[j + 1]));
        let force = p.axial * a + p.shear * b;
        out.forces[j] += force;
        out.forces[j + 1] -= force;
        let lever = 0.5 * ds * (w.stretch * p.shear - w.shear * p.axial);
        out.couples[j] += p.couple + lever;
        out.couples[j + 1] += -p.couple + lever;
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn reference_arm() -> (RodModel, Grid) {
        let m = RodModel::default();
        let g = m.grid();
        (m, g)
    }

    #[test]
    fn taper_endpoints_and_midpoint() {
        let m = RodModel::default();
        assert_relative_eq!(m.radius_at(0.0).unwrap(), 0.012, epsilon = 1e-15);
        assert_relative_eq!(m.radius_at(0.2).unwrap(), 0.0012, epsilon = 1e-15);
        assert_relative_eq!(m.radius_at(0.1).unwrap(), 0.0066, epsilon = 1e-15);
        assert!(matches!(
            m.radius_at(-0.01),
            Err(RodError::ArcLengthOutOfRange { .. })
        ));
        assert!(m.radius_at(0.2001).is_err());
        assert!(m.radius_at(f64::NAN).is_err());
    }

    #[test]
    fn validation_rejects_bad_parameters() {
        let mut m = RodModel::default();
        m.tip_radius = 0.02;
        assert!(m.validate().is_err());
        let mut m = RodModel::default();
        m.n_elements = 1;
        assert!(m.validate().is_err());
        let mut m = RodModel::default();
        m.damping = -1.0;
        assert!(m.validate().is_err());
        assert!(RodModel::default().validate().is_ok());
    }

    #[test]
    fn grid_sums_and_sections() {
        let (m, g) = reference_arm();
        assert_relative_eq!(
            g.lengths.iter().sum::<f64>(),
            m.rest_length,
            epsilon = 1e-14
        );
        assert_relative_eq!(
            g.voronoi.iter().sum::<f64>(),
            m.rest_length,
            epsilon = 1e-14
        );
        for (s, sec) in g.centers.iter().zip(&g.sections) {
            let phi = m.radius_at(*s).unwrap();
            assert_relative_eq!(sec.area, PI * phi * phi, max_relative = 1e-14);
            assert_relative_eq!(
                sec.second_moment,
                sec.area * sec.area / (4.0 * PI),
                max_relative = 1e-14
            );
        }
    }

    #[test]
    fn kinematic_rhs_examples() {
        let (dr, dt) = kinematic_rhs(0.0, Strain::REST);
        assert_eq!((dr.x, dr.y, dt), (1.0, 0.0, 0.0));
        let (dr, _) = kinematic_rhs(PI / 2.0, Strain::REST);
        assert!(dr.x.abs() < 1e-16);
        assert_relative_eq!(dr.y, 1.0);
        let (dr, dt) = kinematic_rhs(0.0, Strain::new(1.1, 0.2, 3.0));
        assert_eq!((dr.x, dr.y, dt), (1.1, 0.2, 3.0));
    }

    #[test]
    fn strains_of_straight_and_stretched_rods() {
        let (_, g) = reference_arm();
        let c = Configuration::straight(&g);
        let f = compute_strains(&g, &c).unwrap();
        for w in f.iter() {
            assert_relative_eq!(w.stretch, 1.0, epsilon = 1e-12);
            assert_eq!(w.shear, 0.0);
            assert_eq!(w.curvature, 0.0);
        }
        let stretched = Configuration {
            positions: c.positions.iter().map(|p| p * 1.2).collect(),
            angles: c.angles.clone(),
        };
        let f = compute_strains(&g, &stretched).unwrap();
        for w in f.iter() {
            assert_relative_eq!(w.stretch, 1.2, epsilon = 1e-12);
            assert_eq!(w.shear, 0.0);
        }
    }

    #[test]
    fn circular_arc_curvature() {
        // Nodes sampled on a circle of radius R with tangent angles s/R.
        let (_, g) = reference_arm();
        let radius = 0.1;
        let c = Configuration {
            positions: g
                .nodes
                .iter()
                .map(|&s| {
                    Point::new(
                        radius * (s / radius).sin(),
                        radius * (1.0 - (s / radius).cos()),
                    )
                })
                .collect(),
            angles: g.nodes.iter().map(|&s| s / radius).collect(),
        };
        let f = compute_strains(&g, &c).unwrap();
        let ds = g.lengths[0];
        for w in f.iter() {
            assert_relative_eq!(w.curvature, 1.0 / radius, max_relative = 1e-12);
            // chord/arc ratio
            assert!((w.stretch - 1.0).abs() < ds * ds / (radius * radius));
            assert!(w.shear.abs() < 1e-12);
        }
    }

    #[test]
    fn inverted_and_mismatched_configurations_rejected() {
        let (_, g) = reference_arm();
        let mut c = Configuration::straight(&g);
        c.positions[5] = c.positions[7];
        assert!(matches!(
            compute_strains(&g, &c),
            Err(RodError::InvertedElement { index: 5, .. })
                | Err(RodError::InvertedElement { index: 6, .. })
        ));
        let mut c = Configuration::straight(&g);
        c.angles.pop();
        assert!(matches!(
            compute_strains(&g, &c),
            Err(RodError::LengthMismatch { .. })
        ));
    }

    #[test]
    fn integrate_then_invert_round_trip() {
        let (_, g) = reference_arm();
        let field = StrainField::from_fn(g.n_elements(), |j| {
            let s = g.centers[j];
            Strain::new(
                1.0 + 0.1 * (20.0 * s).sin(),
                0.05 * s,
                15.0 * (10.0 * s).cos(),
            )
        });
        let c = integrate_strains(&g, &field);
        let back = compute_strains(&g, &c).unwrap();
        for j in 0..g.n_elements() {
            let (a, b) = (field.get(j), back.get(j));
            assert_relative_eq!(a.stretch, b.stretch, epsilon = 1e-12);
            assert_relative_eq!(a.shear, b.shear, epsilon = 1e-12);
            assert_relative_eq!(a.curvature, b.curvature, epsilon = 1e-9);
        }
    }

    #[test]
    fn elastic_energy_closed_forms() {
        let (m, g) = reference_arm();
        let rest = StrainField::uniform(g.n_elements(), Strain::REST);
        assert_eq!(m.elastic_energy(&g, &rest), 0.0);

        let mut uniform = m.clone();
        uniform.tip_radius = uniform.base_radius;
        let ug = uniform.grid();
        let stretched = StrainField::uniform(ug.n_elements(), Strain::new(1.1, 0.0, 0.0));
        let area = PI * 0.012 * 0.012;
        assert_relative_eq!(
            uniform.elastic_energy(&ug, &stretched),
            0.5 * 1e4 * area * 0.01 * 0.2,
            max_relative = 1e-12
        );
    }

    #[test]
    fn elastic_loads_examples() {
        let m = RodModel::default();
        let base = Section::circular(0.012);
        let l = m.elastic_loads(&base, Strain::REST);
        assert_eq!(l, Loads::default());
        let l = m.elastic_loads(&base, Strain::new(1.1, 0.0, 0.0));
        assert_relative_eq!(l.axial, 10e3 * PI * 1.44e-4 * 0.1, max_relative = 1e-12);
        assert_relative_eq!(l.axial, 0.4524, epsilon = 1e-4);
        // finite difference of the energy density
        let h = 1e-6;
        let fd = (m.elastic_energy_density(&base, Strain::new(1.1 + h, 0.0, 0.0))
            - m.elastic_energy_density(&base, Strain::new(1.1 - h, 0.0, 0.0)))
            / (2.0 * h);
        assert_relative_eq!(l.axial, fd, max_relative = 1e-7);
        let l = m.elastic_loads(&base, Strain::new(1.0, 0.0, 5.0));
        assert_relative_eq!(
            l.couple,
            1e4 * base.area * base.area / (4.0 * PI) * 5.0,
            max_relative = 1e-12
        );
    }

    #[test]
    fn shear_only_perturbation_touches_shear_channel() {
        let m = RodModel::default();
        let sec = Section::circular(0.005);
        let w = Strain::new(1.05, 0.0, 3.0);
        let a = m.elastic_loads(&sec, w);
        let b = m.elastic_loads(&sec, Strain::new(1.05, 0.1, 3.0));
        assert_eq!(a.axial, b.axial);
        assert_eq!(a.couple, b.couple);
        assert!(b.shear != a.shear);
    }

    #[test]
    fn generalized_force_rest_and_stretched() {
        let (m, g) = reference_arm();
        let c = Configuration::straight(&g);
        assert!(m.elastic_generalized_force(&g, &c).unwrap().max_abs() < 1e-12);

        let stretched = Configuration {
            positions: c.positions.iter().map(|p| p * 1.2).collect(),
            angles: c.angles.clone(),
        };
        let f = m.elastic_generalized_force(&g, &stretched).unwrap();
        let n = g.n_elements();
        let tip_axial = m.youngs_modulus * g.sections[n - 1].area * 0.2;
        assert_relative_eq!(f.forces[n].x, -tip_axial, max_relative = 1e-10);
        assert!(f.forces[n].y.abs() < 1e-15);
        // interior forces telescope: the sum over all nodes vanishes
        let total: Point = f.forces.iter().sum();
        assert!(total.norm() < 1e-14);
        for j in 1..n {
            let expect = m.youngs_modulus * 0.2 * (g.sections[j].area - g.sections[j - 1].area);
            assert_relative_eq!(f.forces[j].x, expect, max_relative = 1e-8);
        }
    }

    #[test]
    fn inertia_totals() {
        let (m, g) = reference_arm();
        let inertia = m.inertia(&g);
        let mass: f64 = inertia.mass.iter().sum();
        let expect: f64 = g
            .sections
            .iter()
            .zip(&g.lengths)
            .map(|(s, l)| m.density * s.area * l)
            .sum();
        assert_relative_eq!(mass, expect, max_relative = 1e-14);
        let p = Momentum {
            linear: inertia.mass.iter().map(|m| Point::new(*m, 0.0)).collect(),
            angular: vec![0.0; g.n_nodes()],
        };
        // unit velocity everywhere: T = M/2
        assert_relative_eq!(p.kinetic_energy(&inertia), 0.5 * mass, max_relative = 1e-14);
    }
}
