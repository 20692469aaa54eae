//! Hill-type muscle actuation expressed through stored-energy functions.
//!
//! Each muscle contributes `u · W^m(w)` to the stored energy density, with
//! `W^m = n_max A^m F_l(ν^m(w))`. Because `ν^m` is affine in the strains,
//! the muscle loads are `u · n_max A^m f_l(ν^m) · ∂ν^m/∂w` and the
//! Hessian is a rank-one update along the same direction.

use std::fmt;

use nalgebra::Matrix3;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::rod::{Loads, RodModel, Section, Strain};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum MuscleError {
    #[error("activation of {kind} at element {index} is {value}, outside [0, 1]")]
    ActivationOutOfRange {
        kind: MuscleKind,
        index: usize,
        value: f64,
    },
    #[error("activation profile of {kind} has {actual} entries, expected {expected}")]
    ProfileLength {
        kind: MuscleKind,
        expected: usize,
        actual: usize,
    },
    #[error("invalid force-length model: {0}")]
    ForceLength(&'static str),
    #[error("invalid muscle parameter `{name}` = {value}")]
    InvalidParameter { name: &'static str, value: f64 },
}

/// Which side of a kink in `f_l` a derivative was taken from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum KinkSide {
    Left,
    Right,
}

/// Force-length relation: a cubic fit supported on `[lower, upper]`,
/// clamped at zero where the cubic dips negative.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ForceLength {
    /// `(c₃, c₂, c₁, c₀)`.
    coefficients: [f64; 4],
    lower: f64,
    upper: f64,
    /// Sorted breakpoints spanning `[lower, upper]`, including interior roots.
    breaks: Vec<f64>,
    /// Whether the cubic is positive on each segment between breakpoints.
    active: Vec<bool>,
    /// `F_l` at each breakpoint.
    cumulative: Vec<f64>,
}

impl Default for ForceLength {
    fn default() -> Self {
        Self::new([3.06, -13.64, 18.01, -6.44], 0.6, 1.6)
            .expect("default force-length fit is valid")
    }
}

impl ForceLength {
    pub fn new(coefficients: [f64; 4], lower: f64, upper: f64) -> Result<Self, MuscleError> {
        if !coefficients.iter().all(|c| c.is_finite()) {
            return Err(MuscleError::ForceLength("non-finite coefficient"));
        }
        if !(lower >= 0.0 && upper > lower && upper.is_finite()) {
            return Err(MuscleError::ForceLength(
                "support must satisfy 0 <= lower < upper",
            ));
        }
        let mut fl = Self {
            coefficients,
            lower,
            upper,
            breaks: Vec::new(),
            active: Vec::new(),
            cumulative: Vec::new(),
        };
        let mut breaks = vec![lower];
        breaks.extend(fl.cubic_roots_in(lower, upper));
        breaks.push(upper);
        let active: Vec<bool> = breaks
            .windows(2)
            .map(|w| fl.cubic(0.5 * (w[0] + w[1])) > 0.0)
            .collect();
        let mut cumulative = vec![0.0];
        for (k, w) in breaks.windows(2).enumerate() {
            let add = if active[k] {
                fl.antiderivative(w[1]) - fl.antiderivative(w[0])
            } else {
                0.0
            };
            cumulative.push(cumulative[k] + add);
        }
        fl.breaks = breaks;
        fl.active = active;
        fl.cumulative = cumulative;
        Ok(fl)
    }

    pub fn coefficients(&self) -> [f64; 4] {
        self.coefficients
    }

    pub fn support(&self) -> (f64, f64) {
        (self.lower, self.upper)
    }

    fn cubic(&self, z: f64) -> f64 {
        let [c3, c2, c1, c0] = self.coefficients;
        ((c3 * z + c2) * z + c1) * z + c0
    }

    fn cubic_slope(&self, z: f64) -> f64 {
        let [c3, c2, c1, _] = self.coefficients;
        (3.0 * c3 * z + 2.0 * c2) * z + c1
    }

    fn antiderivative(&self, z: f64) -> f64 {
        let [c3, c2, c1, c0] = self.coefficients;
        (((0.25 * c3 * z + c2 / 3.0) * z + 0.5 * c1) * z + c0) * z
    }

    /// Sign changes of the cubic strictly inside `(a, b)`, located by bisection
    /// on a fine scan.
    fn cubic_roots_in(&self, a: f64, b: f64) -> Vec<f64> {
        const SCAN: usize = 4096;
        let mut roots = Vec::new();
        let h = (b - a) / SCAN as f64;
        let mut x0 = a;
        let mut f0 = self.cubic(x0);
        for k in 1..=SCAN {
            let x1 = if k == SCAN { b } else { a + k as f64 * h };
            let f1 = self.cubic(x1);
            if f0 != 0.0 && f1 != 0.0 && (f0 < 0.0) != (f1 < 0.0) {
                let (mut lo, mut hi, mut flo) = (x0, x1, f0);
                for _ in 0..200 {
                    let mid = 0.5 * (lo + hi);
                    let fm = self.cubic(mid);
                    if (fm < 0.0) == (flo < 0.0) {
                        lo = mid;
                        flo = fm;
                    } else {
                        hi = mid;
                    }
                    if hi - lo <= f64::EPSILON * hi.abs() {
                        break;
                    }
                }
                roots.push(0.5 * (lo + hi));
            } else if f1 == 0.0 && k < SCAN {
                roots.push(x1);
            }
            x0 = x1;
            f0 = f1;
        }
        roots
    }

    fn segment(&self, z: f64) -> Option<usize> {
        if z < self.lower || z > self.upper {
            return None;
        }
        let k = self.breaks.partition_point(|&b| b <= z);
        Some(k.saturating_sub(1).min(self.active.len() - 1))
    }

    /// `f_l(z)`: zero outside the support, clamped cubic inside.
    pub fn value(&self, z: f64) -> f64 {
        if z < self.lower || z > self.upper {
            0.0
        } else {
            self.cubic(z).max(0.0)
        }
    }

    /// `F_l(z) = ∫₀ᶻ f_l`.
    pub fn integral(&self, z: f64) -> f64 {
        if z <= self.lower {
            return 0.0;
        }
        if z >= self.upper {
            return *self.cumulative.last().unwrap();
        }
        let k = self.segment(z).unwrap();
        let partial = if self.active[k] {
            self.antiderivative(z) - self.antiderivative(self.breaks[k])
        } else {
            0.0
        };
        self.cumulative[k] + partial
    }

    /// `f_l'(z)`. At a kink the derivative is taken from the side where the
    /// muscle produces force, and that side is reported.
    pub fn derivative(&self, z: f64) -> (f64, Option<KinkSide>) {
        if let Ok(idx) = self.breaks.binary_search_by(|b| b.total_cmp(&z)) {
            let left_active = idx > 0 && self.active[idx - 1];
            let right_active = idx < self.active.len() && self.active[idx];
            return match (left_active, right_active) {
                (_, true) => (self.cubic_slope(z), Some(KinkSide::Right)),
                (true, false) => (self.cubic_slope(z), Some(KinkSide::Left)),
                (false, false) => (0.0, Some(KinkSide::Right)),
            };
        }
        match self.segment(z) {
            Some(k) if self.active[k] => (self.cubic_slope(z), None),
            _ => (0.0, None),
        }
    }
}

/// The three planar muscle groups.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum MuscleKind {
    /// Top longitudinal muscle, offset `+φ^LM b` from the centerline.
    LongitudinalTop,
    /// Bottom longitudinal muscle, offset `−φ^LM b`.
    LongitudinalBottom,
    /// Transverse muscle surrounding the nerve cord.
    Transverse,
}

impl MuscleKind {
    pub const ALL: [MuscleKind; 3] = [
        MuscleKind::LongitudinalTop,
        MuscleKind::LongitudinalBottom,
        MuscleKind::Transverse,
    ];

    pub fn index(self) -> usize {
        match self {
            MuscleKind::LongitudinalTop => 0,
            MuscleKind::LongitudinalBottom => 1,
            MuscleKind::Transverse => 2,
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            MuscleKind::LongitudinalTop => "LM_top",
            MuscleKind::LongitudinalBottom => "LM_bottom",
            MuscleKind::Transverse => "TM",
        }
    }
}

impl fmt::Display for MuscleKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MuscleSpec {
    pub kind: MuscleKind,
    /// Maximum active stress `n^m_max` [Pa].
    pub max_stress: f64,
    /// `A^m / A`.
    pub area_fraction: f64,
    /// `φ^m / φ`; zero for the transverse muscle.
    pub offset_fraction: f64,
}

impl MuscleSpec {
    pub fn default_for(kind: MuscleKind) -> Self {
        match kind {
            MuscleKind::LongitudinalTop | MuscleKind::LongitudinalBottom => Self {
                kind,
                max_stress: 19.89e3,
                area_fraction: 1.0 / 9.0,
                offset_fraction: 2.0 / 3.0,
            },
            MuscleKind::Transverse => Self {
                kind,
                max_stress: 13.26e3,
                area_fraction: 1.0 / 12.0,
                offset_fraction: 0.0,
            },
        }
    }

    pub fn area(&self, section: &Section) -> f64 {
        self.area_fraction * section.area
    }

    pub fn offset(&self, section: &Section) -> f64 {
        self.offset_fraction * section.radius
    }

    /// Maximum force the muscle can exert at this section, `n_max A^m`.
    pub fn force_capacity(&self, section: &Section) -> f64 {
        self.max_stress * self.area(section)
    }

    /// `∂ν^m/∂w`, constant for a given section.
    pub fn strain_direction(&self, section: &Section, rest_stretch: f64) -> [f64; 3] {
        let offset = self.offset(section);
        match self.kind {
            MuscleKind::LongitudinalTop => [1.0, 0.0, -offset],
            MuscleKind::LongitudinalBottom => [1.0, 0.0, offset],
            MuscleKind::Transverse => [-1.0 / rest_stretch, 0.0, 0.0],
        }
    }
}

/// Local stretch strain `ν^m` of a muscle.
///
/// `offset` is the distance `φ^m` of the muscle from the centerline.
pub fn muscle_strain(kind: MuscleKind, w: Strain, offset: f64, rest_stretch: f64) -> f64 {
    match kind {
        MuscleKind::LongitudinalTop => w.stretch - offset * w.curvature,
        MuscleKind::LongitudinalBottom => w.stretch + offset * w.curvature,
        MuscleKind::Transverse => 2.0 - w.stretch / rest_stretch,
    }
}

/// Active muscle loads at activation `u`: `|n^m| = n_max A^m f_l(ν^m) u`,
/// directed along `∂ν^m/∂w`.
pub fn muscle_loads(
    spec: &MuscleSpec,
    fl: &ForceLength,
    w: Strain,
    section: &Section,
    rest_stretch: f64,
    u: f64,
) -> Loads {
    if u == 0.0 {
        return Loads::default();
    }
    let z = muscle_strain(spec.kind, w, spec.offset(section), rest_stretch);
    let magnitude = spec.force_capacity(section) * fl.value(z) * u;
    let g = spec.strain_direction(section, rest_stretch);
    Loads::new(magnitude * g[0], magnitude * g[1], magnitude * g[2])
}

/// `W^m = n_max A^m F_l(ν^m)` per unit length.
pub fn muscle_stored_energy(
    spec: &MuscleSpec,
    fl: &ForceLength,
    w: Strain,
    section: &Section,
    rest_stretch: f64,
) -> f64 {
    let z = muscle_strain(spec.kind, w, spec.offset(section), rest_stretch);
    spec.force_capacity(section) * fl.integral(z)
}

/// Activation profiles `α^m_j` over the elements, one per muscle kind.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ActivationSet {
    profiles: [Vec<f64>; 3],
}

impl ActivationSet {
    pub fn zeros(n: usize) -> Self {
        Self {
            profiles: [vec![0.0; n], vec![0.0; n], vec![0.0; n]],
        }
    }

    pub fn uniform(n: usize, values: [f64; 3]) -> Self {
        Self {
            profiles: values.map(|v| vec![v; n]),
        }
    }

    pub fn from_profiles(profiles: [Vec<f64>; 3]) -> Result<Self, MuscleError> {
        let n = profiles[0].len();
        for kind in MuscleKind::ALL {
            let p = &profiles[kind.index()];
            if p.len() != n {
                return Err(MuscleError::ProfileLength {
                    kind,
                    expected: n,
                    actual: p.len(),
                });
            }
        }
        let set = Self { profiles };
        set.validate()?;
        Ok(set)
    }

    pub fn n_elements(&self) -> usize {
        self.profiles[0].len()
    }

    pub fn profile(&self, kind: MuscleKind) -> &[f64] {
        &self.profiles[kind.index()]
    }

    pub fn profile_mut(&mut self, kind: MuscleKind) -> &mut [f64] {
        &mut self.profiles[kind.index()]
    }

    /// Activations of all three muscles at element `j`.
    pub fn at(&self, j: usize) -> [f64; 3] {
        [
            self.profiles[0][j],
            self.profiles[1][j],
            self.profiles[2][j],
        ]
    }

    pub fn set(&mut self, j: usize, values: [f64; 3]) {
        for (p, v) in self.profiles.iter_mut().zip(values) {
            p[j] = v;
        }
    }

    pub fn validate(&self) -> Result<(), MuscleError> {
        for kind in MuscleKind::ALL {
            for (index, &value) in self.profile(kind).iter().enumerate() {
                if !(0.0..=1.0).contains(&value) {
                    return Err(MuscleError::ActivationOutOfRange { kind, index, value });
                }
            }
        }
        Ok(())
    }

    /// Project every activation onto `[0, 1]`.
    pub fn clip(&mut self) {
        for p in &mut self.profiles {
            for v in p.iter_mut() {
                *v = v.clamp(0.0, 1.0);
            }
        }
    }

    /// `½ Σ_m Σ_j (α^m_j)² Δs_j`.
    pub fn control_cost(&self, lengths: &[f64]) -> f64 {
        self.profiles
            .iter()
            .map(|p| {
                p.iter()
                    .zip(lengths)
                    .map(|(a, ds)| 0.5 * a * a * ds)
                    .sum::<f64>()
            })
            .sum()
    }

    pub fn max_abs_difference(&self, other: &ActivationSet) -> f64 {
        self.profiles
            .iter()
            .zip(&other.profiles)
            .flat_map(|(a, b)| a.iter().zip(b).map(|(x, y)| (x - y).abs()))
            .fold(0.0, f64::max)
    }
}

/// Hessian of the total stored energy density with a record of any one-sided
/// derivatives of `f_l` that went into it.
#[derive(Debug, Clone, PartialEq)]
pub struct Hessian {
    pub matrix: Matrix3<f64>,
    pub one_sided: Vec<(MuscleKind, KinkSide)>,
}

/// The arm's muscular architecture: three muscle groups sharing one
/// force-length relation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Musculature {
    pub muscles: [MuscleSpec; 3],
    pub force_length: ForceLength,
}

impl Default for Musculature {
    fn default() -> Self {
        Self {
            muscles: MuscleKind::ALL.map(MuscleSpec::default_for),
            force_length: ForceLength::default(),
        }
    }
}

impl Musculature {
    pub fn validate(&self) -> Result<(), MuscleError> {
        for (k, spec) in MuscleKind::ALL.iter().zip(&self.muscles) {
            if spec.kind != *k {
                return Err(MuscleError::InvalidParameter {
                    name: "kind",
                    value: f64::NAN,
                });
            }
            if !(spec.max_stress >= 0.0 && spec.max_stress.is_finite()) {
                return Err(MuscleError::InvalidParameter {
                    name: "max_stress",
                    value: spec.max_stress,
                });
            }
            if !(spec.area_fraction > 0.0 && spec.area_fraction <= 1.0) {
                return Err(MuscleError::InvalidParameter {
                    name: "area_fraction",
                    value: spec.area_fraction,
                });
            }
            if !(0.0..=1.0).contains(&spec.offset_fraction) {
                return Err(MuscleError::InvalidParameter {
                    name: "offset_fraction",
                    value: spec.offset_fraction,
                });
            }
        }
        Ok(())
    }

    pub fn spec(&self, kind: MuscleKind) -> &MuscleSpec {
        &self.muscles[kind.index()]
    }

    /// `Σ_m α^m W^m(w)`.
    pub fn energy_density(
        &self,
        model: &RodModel,
        section: &Section,
        w: Strain,
        alpha: [f64; 3],
    ) -> f64 {
        let rest = model.rest_strain.stretch;
        self.muscles
            .iter()
            .zip(alpha)
            .filter(|(_, a)| *a != 0.0)
            .map(|(spec, a)| a * muscle_stored_energy(spec, &self.force_length, w, section, rest))
            .sum()
    }

    /// `Σ_m α^m (∂W^m/∂w)`.
    pub fn loads(&self, model: &RodModel, section: &Section, w: Strain, alpha: [f64; 3]) -> Loads {
        let rest = model.rest_strain.stretch;
        let mut total = Loads::default();
        for (spec, a) in self.muscles.iter().zip(alpha) {
            total += muscle_loads(spec, &self.force_length, w, section, rest, a);
        }
        total
    }

    /// Loads of each muscle at unit activation, i.e. `∂P/∂α^m`.
    pub fn unit_loads(&self, model: &RodModel, section: &Section, w: Strain) -> [Loads; 3] {
        let rest = model.rest_strain.stretch;
        self.muscles
            .map(|spec| muscle_loads(&spec, &self.force_length, w, section, rest, 1.0))
    }

    /// Total stored energy density `W(w; α) = W^e(w) + Σ α^m W^m(w)`.
    pub fn total_energy_density(
        &self,
        model: &RodModel,
        section: &Section,
        w: Strain,
        alpha: [f64; 3],
    ) -> f64 {
        model.elastic_energy_density(section, w) + self.energy_density(model, section, w, alpha)
    }

    /// `P(w; α) = ∂W/∂w`.
    pub fn total_gradient(
        &self,
        model: &RodModel,
        section: &Section,
        w: Strain,
        alpha: [f64; 3],
    ) -> Loads {
        model.elastic_loads(section, w) + self.loads(model, section, w, alpha)
    }

    /// `Q(w; α) = ∂P/∂w`.
    pub fn total_hessian(
        &self,
        model: &RodModel,
        section: &Section,
        w: Strain,
        alpha: [f64; 3],
    ) -> Hessian {
        let [ea, ga, ei] = model.elastic_stiffness(section);
        let mut matrix = Matrix3::from_diagonal(&nalgebra::Vector3::new(ea, ga, ei));
        let mut one_sided = Vec::new();
        let rest = model.rest_strain.stretch;
        for (spec, a) in self.muscles.iter().zip(alpha) {
            if a == 0.0 {
                continue;
            }
            let z = muscle_strain(spec.kind, w, spec.offset(section), rest);
            let (slope, side) = self.force_length.derivative(z);
            if let Some(side) = side {
                one_sided.push((spec.kind, side));
            }
            let g = nalgebra::Vector3::from(spec.strain_direction(section, rest));
            matrix += (a * spec.force_capacity(section) * slope) * g * g.transpose();
        }
        Hessian { matrix, one_sided }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use std::f64::consts::PI;

    #[test]
    fn force_length_values() {
        let fl = ForceLength::default();
        assert_relative_eq!(fl.value(1.0), 0.99, epsilon = 1e-12);
        assert_eq!(fl.value(0.5), 0.0);
        assert_eq!(fl.value(1.7), 0.0);
        assert_relative_eq!(
            fl.value(0.6),
            3.06 * 0.216 - 13.64 * 0.36 + 18.01 * 0.6 - 6.44,
            epsilon = 1e-12
        );
        assert_relative_eq!(fl.value(0.6), 0.1166, epsilon = 1e-4);
        // the raw cubic is slightly negative at the upper support edge
        assert_eq!(fl.value(1.6), 0.0);
        assert!(fl.value(1.59) > 0.0);
        assert_eq!(fl.value(1.596), 0.0);
    }

    #[test]
    fn force_length_integral_basics() {
        let fl = ForceLength::default();
        assert_eq!(fl.integral(0.3), 0.0);
        assert_eq!(fl.integral(0.6), 0.0);
        let h = 1e-5;
        let fd = (fl.integral(1.0 + h) - fl.integral(1.0 - h)) / (2.0 * h);
        assert!((fd - 0.99).abs() < 1e-6);
        assert_eq!(fl.integral(1.6), fl.integral(5.0));
    }

    #[test]
    fn force_length_integral_matches_simpson() {
        // Independent quadrature of the clamped integrand.
        let fl = ForceLength::default();
        let simpson = |a: f64, b: f64, n: usize| {
            let h = (b - a) / n as f64;
            let mut acc = fl.value(a) + fl.value(b);
            for k in 1..n {
                let x = a + k as f64 * h;
                acc += if k % 2 == 1 { 4.0 } else { 2.0 } * fl.value(x);
            }
            acc * h / 3.0
        };
        let q = simpson(0.6, 1.0, 2000);
        assert_relative_eq!(fl.integral(1.0), q, max_relative = 1e-12);
        assert_relative_eq!(fl.integral(1.0), 0.2885, epsilon = 1e-4);
    }

    #[test]
    fn derivative_at_kinks_is_one_sided() {
        let fl = ForceLength::default();
        let (d, side) = fl.derivative(0.6);
        assert_eq!(side, Some(KinkSide::Right));
        assert_relative_eq!(d, 9.18 * 0.36 - 27.28 * 0.6 + 18.01, epsilon = 1e-12);
        let cutoff = fl.breaks[1];
        assert!(cutoff > 1.5 && cutoff < 1.6);
        let (d, side) = fl.derivative(cutoff);
        assert_eq!(side, Some(KinkSide::Left));
        assert!(d < 0.0);
        assert_eq!(fl.derivative(1.0).1, None);
        assert_eq!(fl.derivative(2.0), (0.0, None));
    }

    #[test]
    fn muscle_strain_examples() {
        for kind in MuscleKind::ALL {
            assert_eq!(muscle_strain(kind, Strain::REST, 0.008, 1.0), 1.0);
        }
        let w = Strain::new(1.05, 0.0, 5.0);
        assert_relative_eq!(
            muscle_strain(MuscleKind::LongitudinalTop, w, 0.008, 1.0),
            1.01,
            epsilon = 1e-14
        );
        assert_relative_eq!(
            muscle_strain(MuscleKind::LongitudinalBottom, w, 0.008, 1.0),
            1.09,
            epsilon = 1e-14
        );
        assert_relative_eq!(
            muscle_strain(MuscleKind::Transverse, Strain::new(1.2, 0.0, 0.0), 0.0, 1.0),
            0.8,
            epsilon = 1e-14
        );
    }

    #[test]
    fn muscle_load_examples() {
        let fl = ForceLength::default();
        let base = Section::circular(0.012);
        let top = MuscleSpec::default_for(MuscleKind::LongitudinalTop);
        assert_eq!(
            muscle_loads(&top, &fl, Strain::REST, &base, 1.0, 0.0),
            Loads::default()
        );
        let l = muscle_loads(&top, &fl, Strain::REST, &base, 1.0, 1.0);
        let expect = 19.89e3 * (PI * 1.44e-4 / 9.0) * 0.99;
        assert_relative_eq!(l.axial, expect, max_relative = 1e-12);
        assert_relative_eq!(l.axial, 0.9898, epsilon = 1e-4);
        assert_relative_eq!(l.couple, -0.008 * expect, max_relative = 1e-12);
        assert_eq!(l.shear, 0.0);

        let tm = MuscleSpec::default_for(MuscleKind::Transverse);
        let l = muscle_loads(&tm, &fl, Strain::REST, &base, 1.0, 1.0);
        assert_relative_eq!(
            l.axial,
            -13.26e3 * base.area / 12.0 * 0.99,
            max_relative = 1e-12
        );
        assert_eq!(l.couple, 0.0);
    }

    #[test]
    fn stored_energy_vanishes_below_support() {
        let fl = ForceLength::default();
        let sec = Section::circular(0.006);
        for kind in MuscleKind::ALL {
            let spec = MuscleSpec::default_for(kind);
            let w = match kind {
                MuscleKind::Transverse => Strain::new(1.45, 0.0, 0.0),
                _ => Strain::new(0.55, 0.0, 0.0),
            };
            assert_eq!(muscle_stored_energy(&spec, &fl, w, &sec, 1.0), 0.0);
        }
    }

    #[test]
    fn passive_hessian_is_elastic_stiffness() {
        let model = RodModel::default();
        let mus = Musculature::default();
        let sec = Section::circular(0.01);
        let h = mus.total_hessian(&model, &sec, Strain::new(1.1, 0.03, 4.0), [0.0; 3]);
        let [ea, ga, ei] = model.elastic_stiffness(&sec);
        assert_eq!(
            h.matrix,
            Matrix3::from_diagonal(&nalgebra::Vector3::new(ea, ga, ei))
        );
        assert!(h.one_sided.is_empty());
    }

    #[test]
    fn symmetric_longitudinal_couples_cancel() {
        let model = RodModel::default();
        let mus = Musculature::default();
        let sec = Section::circular(0.01);
        let p = mus.total_gradient(&model, &sec, Strain::new(0.9, 0.0, 0.0), [0.4, 0.4, 0.0]);
        assert!(p.couple.abs() < 1e-18);
        let p = mus.total_gradient(&model, &sec, Strain::REST, [0.0; 3]);
        assert_eq!(p, Loads::default());
    }

    #[test]
    fn activation_set_validation_and_clip() {
        let mut a = ActivationSet::uniform(4, [0.2, 1.3, -0.1]);
        assert!(matches!(
            a.validate(),
            Err(MuscleError::ActivationOutOfRange { .. })
        ));
        a.clip();
        assert!(a.validate().is_ok());
        assert_eq!(a.at(2), [0.2, 1.0, 0.0]);
        assert!(ActivationSet::from_profiles([vec![0.0; 3], vec![0.0; 2], vec![0.0; 3]]).is_err());
    }

    #[test]
    fn custom_force_length_validation() {
        assert!(ForceLength::new([0.0, 0.0, 0.0, 1.0], 1.0, 0.5).is_err());
        assert!(ForceLength::new([f64::NAN, 0.0, 0.0, 1.0], 0.5, 1.5).is_err());
        let flat = ForceLength::new([0.0, 0.0, 0.0, 1.0], 0.5, 1.5).unwrap();
        assert_relative_eq!(flat.integral(1.0), 0.5, epsilon = 1e-15);
        assert_relative_eq!(flat.integral(9.0), 1.0, epsilon = 1e-15);
    }
}
