//! Static equilibria of the arm under constant activations.
//!
//! With a clamped base and a free tip the costate of the lower-level
//! problem vanishes, so an equilibrium is found element by element by
//! solving `P(w; α) = 0`. Shear decouples (`GA (ν₂ − ν₂°) = 0`), leaving a
//! 2×2 problem in `(ν₁, κ)` solved by damped Newton on the stored energy.

use std::io::{self, Write};

use thiserror::Error;

use crate::muscles::{ActivationSet, MuscleError, Musculature};
use crate::rod::{integrate_strains, Configuration, Grid, RodModel, Section, Strain, StrainField};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum EquilibriumError {
    #[error("equilibrium solve did not converge{}; best scaled residual {best_residual:e}", element_suffix(.element))]
    NonConvergence {
        element: Option<usize>,
        best_residual: f64,
    },
    #[error("stored-energy Hessian is not positive definite{}", element_suffix(.element))]
    NotPositiveDefinite { element: Option<usize> },
    #[error(transparent)]
    Muscle(#[from] MuscleError),
    #[error("activation set has {actual} elements, grid has {expected}")]
    SizeMismatch { expected: usize, actual: usize },
}

fn element_suffix(element: &Option<usize>) -> String {
    element
        .map(|j| format!(" at element {j}"))
        .unwrap_or_default()
}

impl EquilibriumError {
    fn at(self, j: usize) -> Self {
        match self {
            EquilibriumError::NonConvergence { best_residual, .. } => {
                EquilibriumError::NonConvergence {
                    element: Some(j),
                    best_residual,
                }
            }
            EquilibriumError::NotPositiveDefinite { .. } => {
                EquilibriumError::NotPositiveDefinite { element: Some(j) }
            }
            other => other,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolverOptions {
    /// Bound on the scaled residual `max(|P₁|/EA, |P₃| L₀/EI)`.
    pub tolerance: f64,
    pub max_iterations: usize,
}

impl Default for SolverOptions {
    fn default() -> Self {
        Self {
            tolerance: 1e-10,
            max_iterations: 60,
        }
    }
}

/// Equilibrium strain at one arc-length location.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PointSolution {
    pub strain: Strain,
    pub residual: f64,
    pub positive_definite: bool,
    pub energy: f64,
}

/// Everything needed to evaluate `P(w; α)` at one location.
#[derive(Debug, Clone, Copy)]
pub struct PointProblem<'a> {
    pub model: &'a RodModel,
    pub musculature: &'a Musculature,
    pub section: Section,
    pub alpha: [f64; 3],
}

impl<'a> PointProblem<'a> {
    pub fn new(
        model: &'a RodModel,
        musculature: &'a Musculature,
        section: Section,
        alpha: [f64; 3],
    ) -> Self {
        Self {
            model,
            musculature,
            section,
            alpha,
        }
    }

    fn strain(&self, stretch: f64, curvature: f64) -> Strain {
        Strain::new(stretch, self.model.rest_strain.shear, curvature)
    }

    pub fn energy(&self, w: Strain) -> f64 {
        self.musculature
            .total_energy_density(self.model, &self.section, w, self.alpha)
    }

    /// Scaled residual `max(|P₁|/EA, |P₃| L₀/EI)` (shear is eliminated exactly).
    pub fn residual(&self, w: Strain) -> f64 {
        let p = self
            .musculature
            .total_gradient(self.model, &self.section, w, self.alpha);
        let [ea, ga, ei] = self.model.elastic_stiffness(&self.section);
        (p.axial / ea)
            .abs()
            .max((p.couple * self.model.rest_length / ei).abs())
            .max((p.shear / ga).abs())
    }

    /// Reduced 2×2 Hessian in `(ν₁, κ)`.
    fn reduced_hessian(&self, w: Strain) -> [[f64; 2]; 2] {
        let q = self
            .musculature
            .total_hessian(self.model, &self.section, w, self.alpha)
            .matrix;
        [[q[(0, 0)], q[(0, 2)]], [q[(2, 0)], q[(2, 2)]]]
    }

    pub fn is_positive_definite(&self, w: Strain) -> bool {
        let h = self.reduced_hessian(w);
        let [ea, ga, ei] = self.model.elastic_stiffness(&self.section);
        // relative to the elastic scale, so roundoff does not count as definite
        let det = h[0][0] * h[1][1] - h[0][1] * h[1][0];
        ga > 0.0 && h[0][0] > 1e-12 * ea && det > 1e-12 * ea * ei
    }

    /// Damped Newton from one starting point. Works in the scaled variables
    /// `y = (ν₁, κℓ)` with `ℓ = √(I/A)` and merit `W/EA`, which makes the
    /// passive Hessian the identity.
    fn newton(&self, start: Strain, opts: &SolverOptions) -> (Strain, f64) {
        let [ea, _, _] = self.model.elastic_stiffness(&self.section);
        let ell = (self.section.second_moment / self.section.area).sqrt();
        let to_w = |y: [f64; 2]| self.strain(y[0], y[1] / ell);
        let merit = |y: [f64; 2]| self.energy(to_w(y)) / ea;
        let grad = |y: [f64; 2]| {
            let p = self
                .musculature
                .total_gradient(self.model, &self.section, to_w(y), self.alpha);
            [p.axial / ea, p.couple / (ea * ell)]
        };

        let mut y = [start.stretch, start.curvature * ell];
        let mut best = (to_w(y), self.residual(to_w(y)));
        for _ in 0..opts.max_iterations {
            let w = to_w(y);
            let r = self.residual(w);
            if r < best.1 {
                best = (w, r);
            }
            if r <= opts.tolerance {
                break;
            }
            let g = grad(y);
            let h = self.reduced_hessian(w);
            let mut h = [
                [h[0][0] / ea, h[0][1] / (ea * ell)],
                [h[1][0] / (ea * ell), h[1][1] / (ea * ell * ell)],
            ];
            // shift to a positive definite model when needed
            let tr = h[0][0] + h[1][1];
            let det = h[0][0] * h[1][1] - h[0][1] * h[1][0];
            let disc = (0.25 * tr * tr - det).max(0.0).sqrt();
            let min_eig = 0.5 * tr - disc;
            if min_eig < 1e-6 {
                let shift = 1e-6 - min_eig + 1e-3;
                h[0][0] += shift;
                h[1][1] += shift;
            }
            let det = h[0][0] * h[1][1] - h[0][1] * h[1][0];
            let d = [
                -(h[1][1] * g[0] - h[0][1] * g[1]) / det,
                -(-h[1][0] * g[0] + h[0][0] * g[1]) / det,
            ];
            let slope = g[0] * d[0] + g[1] * d[1];
            let m0 = merit(y);
            let mut t = 1.0;
            let mut accepted = false;
            while t > 1e-12 {
                let trial = [y[0] + t * d[0], y[1] + t * d[1]];
                let mt = merit(trial);
                if mt <= m0 + 1e-4 * t * slope || self.residual(to_w(trial)) < 0.5 * r {
                    y = trial;
                    accepted = true;
                    break;
                }
                t *= 0.5;
            }
            if !accepted {
                break;
            }
        }
        let w = to_w(y);
        let r = self.residual(w);
        if r < best.1 {
            best = (w, r);
        }
        best
    }

    /// Multistart solve; among converged roots the one with the lowest
    /// stored energy wins, ties going to the root closest to rest.
    pub fn solve(
        &self,
        starts: &[Strain],
        opts: &SolverOptions,
    ) -> Result<PointSolution, EquilibriumError> {
        let rest = self.model.rest_strain;
        let mut best_residual = f64::INFINITY;
        let mut chosen: Option<PointSolution> = None;
        let default_starts = [rest];
        let starts = if starts.is_empty() {
            &default_starts[..]
        } else {
            starts
        };
        for &start in starts {
            let (w, r) = self.newton(start, opts);
            best_residual = best_residual.min(r);
            if r > opts.tolerance {
                continue;
            }
            let candidate = PointSolution {
                strain: w,
                residual: r,
                positive_definite: self.is_positive_definite(w),
                energy: self.energy(w),
            };
            chosen = Some(match chosen {
                None => candidate,
                Some(prev) => {
                    let scale = prev
                        .energy
                        .abs()
                        .max(candidate.energy.abs())
                        .max(f64::MIN_POSITIVE);
                    if (candidate.energy - prev.energy).abs() <= 1e-12 * scale {
                        let dist = |s: &PointSolution| {
                            let d = s.strain - rest;
                            d.stretch.abs() + d.curvature.abs() * self.model.rest_length
                        };
                        if dist(&candidate) < dist(&prev) {
                            candidate
                        } else {
                            prev
                        }
                    } else if candidate.energy < prev.energy {
                        candidate
                    } else {
                        prev
                    }
                }
            });
        }
        chosen.ok_or(EquilibriumError::NonConvergence {
            element: None,
            best_residual,
        })
    }

    /// Implicit derivative `∂w_α/∂α^m` from `Q ∂w/∂α^m = −∂P/∂α^m`.
    pub fn sensitivity(&self, w: Strain) -> Result<[Strain; 3], EquilibriumError> {
        if !self.is_positive_definite(w) {
            return Err(EquilibriumError::NotPositiveDefinite { element: None });
        }
        let h = self.reduced_hessian(w);
        let det = h[0][0] * h[1][1] - h[0][1] * h[1][0];
        let unit = self.musculature.unit_loads(self.model, &self.section, w);
        Ok(unit.map(|l| {
            let (b0, b1) = (-l.axial, -l.couple);
            Strain::new(
                (h[1][1] * b0 - h[0][1] * b1) / det,
                0.0,
                (-h[1][0] * b0 + h[0][0] * b1) / det,
            )
        }))
    }

    /// Finite-difference `∂w_α/∂α^m`, for points where `Q` is not definite.
    /// Central differences, one-sided at the activation bounds.
    pub fn fd_sensitivity(
        &self,
        w: Strain,
        step: f64,
        opts: &SolverOptions,
    ) -> Result<[Strain; 3], EquilibriumError> {
        let mut out = [Strain::ZERO; 3];
        for (m, slot) in out.iter_mut().enumerate() {
            let lo = (self.alpha[m] - step).max(0.0);
            let hi = (self.alpha[m] + step).min(1.0);
            let solve_at = |a: f64| {
                let mut alpha = self.alpha;
                alpha[m] = a;
                PointProblem { alpha, ..*self }.solve(&[w], opts)
            };
            let plus = solve_at(hi)?.strain;
            let minus = solve_at(lo)?.strain;
            *slot = (plus - minus) * (1.0 / (hi - lo));
        }
        Ok(out)
    }
}

/// Solve `P(w; α) = 0` at one location.
pub fn solve_pointwise(
    model: &RodModel,
    musculature: &Musculature,
    section: Section,
    alpha: [f64; 3],
    starts: &[Strain],
    opts: &SolverOptions,
) -> Result<PointSolution, EquilibriumError> {
    for (m, &a) in alpha.iter().enumerate() {
        if !(0.0..=1.0).contains(&a) {
            return Err(MuscleError::ActivationOutOfRange {
                kind: crate::muscles::MuscleKind::ALL[m],
                index: 0,
                value: a,
            }
            .into());
        }
    }
    PointProblem::new(model, musculature, section, alpha).solve(starts, opts)
}

/// Equilibrium of the whole arm under `activations`.
#[derive(Debug, Clone, PartialEq)]
pub struct EquilibriumSolution {
    pub strains: StrainField,
    pub configuration: Configuration,
    pub residuals: Vec<f64>,
    pub positive_definite: Vec<bool>,
    /// `∂w_α/∂α^m` per element; `None` where `Q` is not positive definite.
    pub sensitivities: Vec<Option<[Strain; 3]>>,
}

impl EquilibriumSolution {
    pub fn max_residual(&self) -> f64 {
        self.residuals.iter().copied().fold(0.0, f64::max)
    }

    pub fn positive_definite_fraction(&self) -> f64 {
        let n = self.positive_definite.len().max(1);
        self.positive_definite.iter().filter(|&&b| b).count() as f64 / n as f64
    }

    /// CSV with columns `s,nu1,kappa,residual,pd`.
    pub fn write_csv<W: Write>(&self, grid: &Grid, mut out: W) -> io::Result<()> {
        writeln!(out, "s,nu1,kappa,residual,pd")?;
        for j in 0..grid.n_elements() {
            writeln!(
                out,
                "{},{},{},{},{}",
                grid.centers[j],
                self.strains.stretch[j],
                self.strains.curvature[j],
                self.residuals[j],
                u8::from(self.positive_definite[j])
            )?;
        }
        Ok(())
    }
}

/// Pointwise lower-level solve over every element, warm-started from
/// `warm` (e.g. the previous optimizer iterate) and from the neighbouring
/// element's solution.
pub fn solve_equilibrium(
    model: &RodModel,
    musculature: &Musculature,
    grid: &Grid,
    activations: &ActivationSet,
    warm: Option<&StrainField>,
    opts: &SolverOptions,
) -> Result<EquilibriumSolution, EquilibriumError> {
    let n = grid.n_elements();
    if activations.n_elements() != n {
        return Err(EquilibriumError::SizeMismatch {
            expected: n,
            actual: activations.n_elements(),
        });
    }
    activations.validate()?;
    let mut strains = StrainField::uniform(n, model.rest_strain);
    let mut residuals = Vec::with_capacity(n);
    let mut positive_definite = Vec::with_capacity(n);
    let mut sensitivities = Vec::with_capacity(n);
    let mut previous: Option<Strain> = None;
    for j in 0..n {
        let problem = PointProblem::new(model, musculature, grid.sections[j], activations.at(j));
        let mut starts = Vec::with_capacity(3);
        if let Some(w) = warm.filter(|w| w.len() == n) {
            starts.push(w.get(j));
        }
        if let Some(w) = previous {
            starts.push(w);
        }
        starts.push(model.rest_strain);
        let sol = problem.solve(&starts, opts).map_err(|e| e.at(j))?;
        strains.set(j, sol.strain);
        residuals.push(sol.residual);
        positive_definite.push(sol.positive_definite);
        sensitivities.push(problem.sensitivity(sol.strain).ok());
        previous = Some(sol.strain);
    }
    let configuration = equilibrium_configuration(grid, &strains);
    Ok(EquilibriumSolution {
        strains,
        configuration,
        residuals,
        positive_definite,
        sensitivities,
    })
}

/// Integrate the kinematics from the clamped base at the origin.
pub fn equilibrium_configuration(grid: &Grid, strains: &StrainField) -> Configuration {
    integrate_strains(grid, strains)
}
