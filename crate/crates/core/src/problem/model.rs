use crate::error::{check_finite, check_len, Error, Result};
use crate::grid::RadialGrid;
use crate::linalg::SymMatrix;
use crate::operator::{build_operator, DiscreteOperator};

use super::{Nonlinearity, ProblemSpec};

/// A problem discretized on a grid: operator, potential samples and the
/// discrete energy functionals built on them.
#[derive(Clone, Debug)]
pub struct Model {
    problem: ProblemSpec,
    grid: RadialGrid,
    op: DiscreteOperator,
    potential: Vec<f64>,
}

impl Model {
    pub fn new(problem: &ProblemSpec, grid: &RadialGrid) -> Result<Self> {
        if grid.dim() != problem.dim() {
            return Err(Error::InvalidArgument(format!(
                "grid dimension {} does not match problem dimension {}",
                grid.dim(),
                problem.dim()
            )));
        }
        if problem.is_ball() != grid.is_ball() {
            return Err(Error::InvalidArgument(
                "ball family needs a unit-ball grid and vice versa".into(),
            ));
        }
        let op = build_operator(grid, problem.order())?;
        let potential = grid.sample(|r| problem.potential().eval(r));
        Ok(Self {
            problem: problem.clone(),
            grid: grid.clone(),
            op,
            potential,
        })
    }

    pub fn problem(&self) -> &ProblemSpec {
        &self.problem
    }

    pub fn grid(&self) -> &RadialGrid {
        &self.grid
    }

    pub fn operator(&self) -> &DiscreteOperator {
        &self.op
    }

    pub fn potential(&self) -> &[f64] {
        &self.potential
    }

    pub fn len(&self) -> usize {
        self.grid.len()
    }

    pub fn is_empty(&self) -> bool {
        self.grid.is_empty()
    }

    fn f(&self) -> &dyn Nonlinearity {
        self.problem.nonlinearity()
    }

    /// `∫|(-Δ)^{s/2} u|²` (or `∫|∇u|²`).
    pub fn kinetic(&self, u: &[f64]) -> f64 {
        self.op.quadratic_form(u)
    }

    /// `∫ u²`.
    pub fn l2_squared(&self, u: &[f64]) -> f64 {
        self.grid.inner(u, u)
    }

    /// `Q(u) = ½∫u²`.
    pub fn mass(&self, u: &[f64]) -> f64 {
        0.5 * self.l2_squared(u)
    }

    /// `∫ V u²`.
    pub fn potential_term(&self, u: &[f64]) -> f64 {
        self.grid
            .weights()
            .iter()
            .zip(&self.potential)
            .zip(u)
            .map(|((w, v), x)| w * v * x * x)
            .sum()
    }

    /// `∫ F(|x|, u)`.
    pub fn primitive_term(&self, u: &[f64]) -> f64 {
        let f = self.f();
        self.grid.integrate_with(u, |r, t| f.primitive(r, t))
    }

    /// `∫ f(|x|, u) u`.
    pub fn nonlinear_pairing(&self, u: &[f64]) -> f64 {
        let f = self.f();
        self.grid.integrate_with(u, |r, t| f.value(r, t) * t)
    }

    /// `E(u) = ½⟨Au,u⟩ + ½∫Vu² − ∫F(|x|,u)`.
    pub fn energy(&self, u: &[f64]) -> Result<f64> {
        check_len(self.len(), u.len())?;
        check_finite(u)?;
        Ok(self.energy_unchecked(u))
    }

    pub(crate) fn energy_unchecked(&self, u: &[f64]) -> f64 {
        0.5 * self.kinetic(u) + 0.5 * self.potential_term(u) - self.primitive_term(u)
    }

    /// `Φ_λ(u) = E(u) − λ Q(u)`.
    pub fn action(&self, u: &[f64], lambda: f64) -> Result<f64> {
        Ok(self.energy(u)? - lambda * self.mass(u))
    }

    /// `Au + Vu − λu − f(|x|, u)` at the nodes.
    pub fn action_gradient(&self, u: &[f64], lambda: f64) -> Result<Vec<f64>> {
        check_len(self.len(), u.len())?;
        check_finite(u)?;
        Ok(self.gradient_unchecked(u, lambda))
    }

    pub(crate) fn gradient_unchecked(&self, u: &[f64], lambda: f64) -> Vec<f64> {
        let f = self.f();
        let ku = self.op.stiffness_apply(u);
        ku.iter()
            .zip(self.grid.weights())
            .zip(self.grid.nodes())
            .zip(u.iter().zip(&self.potential))
            .map(|(((k, w), &r), (&x, v))| k / w + (v - lambda) * x - f.value(r, x))
            .collect()
    }

    /// `∇E(u) = Au + Vu − f(|x|, u)`.
    pub fn energy_gradient(&self, u: &[f64]) -> Vec<f64> {
        self.gradient_unchecked(u, 0.0)
    }

    /// Weighted norm of the action gradient.
    pub fn residual_norm(&self, u: &[f64], lambda: f64) -> f64 {
        self.grid.norm(&self.gradient_unchecked(u, lambda))
    }

    /// `⟨D_uΦ_λ(u), u⟩`.
    pub fn nehari_functional(&self, u: &[f64], lambda: f64) -> f64 {
        self.kinetic(u) + self.potential_term(u) - lambda * self.l2_squared(u)
            - self.nonlinear_pairing(u)
    }

    /// Stiffness of `L_λ = A + V − λ − f_t(|x|, u)`.
    pub fn linearized(&self, u: &[f64], lambda: f64) -> SymMatrix {
        let f = self.f();
        let d: Vec<f64> = self
            .grid
            .nodes()
            .iter()
            .zip(u.iter().zip(&self.potential))
            .map(|(&r, (&x, v))| v - lambda - f.d_t(r, x))
            .collect();
        self.op.shifted_stiffness(&d)
    }

    /// `L_λ w` at the nodes.
    pub fn linearized_apply(&self, u: &[f64], lambda: f64, w: &[f64]) -> Vec<f64> {
        let mut y = self.linearized(u, lambda).matvec(w);
        y.iter_mut().zip(self.grid.weights()).for_each(|(v, wt)| *v /= wt);
        y
    }

    /// Stiffness of `A + V` (the linear part).
    pub fn linear_part(&self) -> SymMatrix {
        self.op.shifted_stiffness(&self.potential)
    }

    /// Smallest eigenvalue of the linear part `A + V`.
    pub fn linear_ground_eigenvalue(&self) -> Result<f64> {
        let spec = self.linear_part().weighted_spectrum(self.grid.weights(), 1)?;
        Ok(spec.lowest[0])
    }
}
