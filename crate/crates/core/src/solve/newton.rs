use serde::{Deserialize, Serialize};

use crate::error::{check_finite, check_len, Error, Result};
use crate::problem::Model;

use super::nehari::nehari_project;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct NewtonOptions {
    /// Residual tolerance relative to `‖u‖`.
    pub tol: f64,
    pub max_iters: usize,
}

impl Default for NewtonOptions {
    fn default() -> Self {
        Self {
            tol: 1e-10,
            max_iters: 50,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Solution {
    pub lambda: f64,
    pub u: Vec<f64>,
    /// Weighted norm of the action gradient.
    pub residual_norm: f64,
    /// `∫u²` (twice `Q(u)`).
    pub mass: f64,
    pub energy: f64,
    pub converged: bool,
    /// Relative residual tolerance actually applied.
    pub tolerance: f64,
    pub positive: bool,
    pub monotone: bool,
    pub iterations: usize,
}

impl Solution {
    pub(crate) fn assemble(
        model: &Model,
        lambda: f64,
        u: Vec<f64>,
        iterations: usize,
        converged: bool,
        tolerance: f64,
    ) -> Self {
        let residual_norm = model.residual_norm(&u, lambda);
        let mass = model.l2_squared(&u);
        let energy = model.energy_unchecked(&u);
        let positive = u.iter().all(|&x| x > 0.0);
        let monotone = is_non_increasing(&u);
        Self {
            lambda,
            u,
            residual_norm,
            mass,
            energy,
            converged,
            tolerance,
            positive,
            monotone,
            iterations,
        }
    }

    /// `Q(u) = ½∫u²`.
    pub fn q(&self) -> f64 {
        0.5 * self.mass
    }

    /// `u` at the node closest to the origin.
    pub fn peak(&self) -> f64 {
        self.u[0]
    }
}

/// `u[i+1] ≤ u[i] + 1e-10 · max|u|`.
pub(crate) fn is_non_increasing(u: &[f64]) -> bool {
    let scale = u.iter().fold(0.0f64, |m, x| m.max(x.abs()));
    u.windows(2).all(|w| w[1] <= w[0] + 1e-10 * scale)
}

/// Relative residual tolerance `max(tol, 4 ε ‖A‖)`: rounding `u` to double
/// precision alone leaves a residual of order `ε ‖A‖ ‖u‖`.
pub fn effective_tolerance(model: &Model, tol: f64) -> f64 {
    tol.max(4.0 * f64::EPSILON * model.operator().norm_estimate())
}

/// Damped Newton iteration on the action gradient with Armijo backtracking on
/// `‖G‖²`. Negative undershoots are clipped during damped steps only.
pub fn newton_solve(model: &Model, lambda: f64, u0: &[f64], opts: &NewtonOptions) -> Result<Solution> {
    check_len(model.len(), u0.len())?;
    check_finite(u0)?;
    let grid = model.grid();
    let weights = grid.weights();
    let mut u = u0.to_vec();
    let mut g = model.gradient_unchecked(&u, lambda);
    let mut res2 = grid.inner(&g, &g);
    let tol = effective_tolerance(model, opts.tol);
    for it in 0..opts.max_iters {
        let unorm = grid.norm(&u);
        if unorm == 0.0 {
            return Err(Error::Degenerate("Newton iterate collapsed to u ≡ 0".into()));
        }
        if res2.sqrt() < tol * unorm {
            return Ok(Solution::assemble(model, lambda, u, it, true, tol));
        }
        let jac = model.linearized(&u, lambda);
        let rhs: Vec<f64> = g.iter().zip(weights).map(|(a, w)| a * w).collect();
        let delta = jac.solve(&rhs)?;
        let mut t = 1.0;
        let mut accepted = false;
        while t >= 1e-10 {
            let mut trial: Vec<f64> = u.iter().zip(&delta).map(|(a, d)| a - t * d).collect();
            if t < 1.0 {
                trial.iter_mut().for_each(|x| *x = x.max(0.0));
            }
            let gt = model.gradient_unchecked(&trial, lambda);
            let r2 = grid.inner(&gt, &gt);
            if r2.is_finite() && r2 <= (1.0 - 1e-4 * t) * res2 {
                u = trial;
                g = gt;
                res2 = r2;
                accepted = true;
                break;
            }
            t *= 0.5;
        }
        if !accepted {
            // stagnation: accept the full step once more only if it is not worse
            let trial: Vec<f64> = u.iter().zip(&delta).map(|(a, d)| a - d).collect();
            let gt = model.gradient_unchecked(&trial, lambda);
            let r2 = grid.inner(&gt, &gt);
            if !(r2.is_finite() && r2 <= res2) {
                return Ok(Solution::assemble(model, lambda, u, it + 1, false, tol));
            }
            u = trial;
            g = gt;
            res2 = r2;
        }
    }
    let converged = res2.sqrt() < tol * grid.norm(&u);
    Ok(Solution::assemble(model, lambda, u, opts.max_iters, converged, tol))
}

/// `exp(-r²/(2w²))` sampled on the grid, cut to zero at the outer face on the ball.
pub fn gaussian_bump(model: &Model, width: f64) -> Vec<f64> {
    let grid = model.grid();
    if grid.is_ball() {
        grid.sample(|r| (-r * r / (2.0 * width * width)).exp() * (1.0 - r * r))
    } else {
        grid.sample(|r| (-r * r / (2.0 * width * width)).exp())
    }
}

/// Gaussian bump → Nehari projection → Newton.
pub fn seed_solution(model: &Model, lambda: f64, opts: &NewtonOptions) -> Result<Solution> {
    let lin = model.linear_ground_eigenvalue()?;
    if lambda >= lin {
        return Err(Error::InvalidArgument(format!(
            "λ = {lambda} must lie below the bottom of the linear spectrum {lin:.6}"
        )));
    }
    let gap = lin - lambda;
    let order = model.problem().order();
    let width = if model.grid().is_ball() {
        (2.0 * gap.powf(-0.5)).clamp(0.05, 0.5)
    } else {
        gap.powf(-0.5 / order).clamp(1e-2, model.grid().outer_radius() / 6.0)
    };
    let bump = gaussian_bump(model, width);
    let start = nehari_project(model, &bump, lambda)?;
    newton_solve(model, lambda, &start.u, opts)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::RadialGrid;
    use crate::problem::{ProblemSpec, RadialFunction};

    fn cubic(n: usize, r: f64) -> Model {
        let spec = ProblemSpec::fractional_power(1.0, 1, 4.0, RadialFunction::constant(1.0)).unwrap();
        Model::new(&spec, &RadialGrid::whole_space(1, n, r).unwrap()).unwrap()
    }

    #[test]
    fn recovers_sech_soliton() {
        let m = cubic(4096, 30.0);
        let u0 = m.grid().sample(|x| 1.4 / x.cosh());
        let sol = newton_solve(&m, -1.0, &u0, &NewtonOptions::default()).unwrap();
        assert!(sol.converged && sol.positive && sol.monotone);
        // u = √(2ω) sech(√ω x), ∫u² = 4√ω
        assert!((sol.peak() - 2f64.sqrt()).abs() / 2f64.sqrt() < 1e-5);
        assert!((sol.mass - 4.0).abs() / 4.0 < 1e-5);
        let fine = cubic(16384, 30.0);
        let sol4 = seed_solution(&fine, -4.0, &NewtonOptions::default()).unwrap();
        assert!((sol4.mass - 8.0).abs() / 8.0 < 1e-5, "{}", sol4.mass);
    }

    #[test]
    fn converged_solution_is_a_fixed_point() {
        let m = cubic(2048, 30.0);
        let sol = seed_solution(&m, -1.0, &NewtonOptions::default()).unwrap();
        let again = newton_solve(&m, -1.0, &sol.u, &NewtonOptions::default()).unwrap();
        let diff = sol.u.iter().zip(&again.u).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        assert!(diff < 1e-12);
        assert_eq!(again.iterations, 0);
    }

    #[test]
    fn nonconvergence_is_flagged() {
        let m = cubic(512, 30.0);
        let u0 = m.grid().sample(|x| 1.4 / x.cosh());
        let opts = NewtonOptions { tol: 1e-10, max_iters: 1 };
        let sol = newton_solve(&m, -1.0, &u0, &opts).unwrap();
        assert!(!sol.converged);
    }

    #[test]
    fn seed_rejects_lambda_above_spectrum() {
        let spec = ProblemSpec::ball_hardy(3, 1.0, 2.5).unwrap();
        let m = Model::new(&spec, &RadialGrid::unit_ball(3, 200).unwrap()).unwrap();
        assert!(seed_solution(&m, 10.0, &NewtonOptions::default()).is_err());
        let sol = seed_solution(&m, 0.0, &NewtonOptions::default()).unwrap();
        assert!(sol.converged && sol.positive && sol.monotone);
    }
}
