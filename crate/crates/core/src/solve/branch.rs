use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::problem::Model;

use super::newton::{newton_solve, seed_solution, NewtonOptions, Solution};

/// Condition estimate above which `L_λ` is treated as singular.
pub const DEGENERACY_THRESHOLD: f64 = 1e12;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct StepControl {
    pub initial: f64,
    pub min: f64,
    pub max: f64,
    pub grow: f64,
    pub shrink: f64,
    /// Newton iterations at or below which the step grows.
    pub fast_iters: usize,
}

impl Default for StepControl {
    fn default() -> Self {
        Self {
            initial: 0.05,
            min: 1e-6,
            max: 0.25,
            grow: 1.5,
            shrink: 0.5,
            fast_iters: 3,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BranchNode {
    pub solution: Solution,
    /// `v_λ = ∂_λ u_λ`.
    pub tangent: Vec<f64>,
    /// `2∫u_λ v_λ`.
    pub mass_derivative: f64,
    /// `v_λ` at the node nearest the origin.
    pub tangent_at_origin: f64,
    pub sign_changes: usize,
    pub morse_index: usize,
    pub condition: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Branch {
    /// Nodes ordered by increasing λ.
    pub nodes: Vec<BranchNode>,
    pub lambda_start: f64,
    pub lambda_end: f64,
    /// Reason the sweep stopped short of `lambda_end`.
    pub truncated: Option<String>,
}

impl Branch {
    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn lambdas(&self) -> Vec<f64> {
        self.nodes.iter().map(|n| n.solution.lambda).collect()
    }

    pub fn masses(&self) -> Vec<f64> {
        self.nodes.iter().map(|n| n.solution.mass).collect()
    }

    pub fn mass_derivatives(&self) -> Vec<f64> {
        self.nodes.iter().map(|n| n.mass_derivative).collect()
    }

    /// Centered (three-point, non-uniform) difference of the mass at an
    /// interior node.
    pub fn mass_difference(&self, k: usize) -> Option<f64> {
        if k == 0 || k + 1 >= self.nodes.len() {
            return None;
        }
        let (l0, l1, l2) = (
            self.nodes[k - 1].solution.lambda,
            self.nodes[k].solution.lambda,
            self.nodes[k + 1].solution.lambda,
        );
        let (m0, m1, m2) = (
            self.nodes[k - 1].solution.mass,
            self.nodes[k].solution.mass,
            self.nodes[k + 1].solution.mass,
        );
        Some(three_point_derivative(l0, l1, l2, m0, m1, m2))
    }

    /// `Some(-1)` / `Some(1)` when every mass derivative is negative / positive.
    pub fn mass_derivative_sign(&self) -> Option<i8> {
        let d = self.mass_derivatives();
        if d.is_empty() {
            None
        } else if d.iter().all(|&x| x < 0.0) {
            Some(-1)
        } else if d.iter().all(|&x| x > 0.0) {
            Some(1)
        } else {
            None
        }
    }
}

/// Derivative at `x1` of the quadratic through three points.
pub(crate) fn three_point_derivative(x0: f64, x1: f64, x2: f64, y0: f64, y1: f64, y2: f64) -> f64 {
    let (a, b) = (x1 - x0, x2 - x1);
    -b / (a * (a + b)) * y0 + (b - a) / (a * b) * y1 + a / (b * (a + b)) * y2
}

/// Strict sign alternations among entries with `|v| > 1e-9 ‖v‖_∞`.
pub fn sign_changes(v: &[f64]) -> usize {
    let vmax = v.iter().fold(0.0f64, |m, x| m.max(x.abs()));
    let band = 1e-9 * vmax;
    let mut last = 0.0f64;
    let mut count = 0;
    for &x in v.iter().filter(|x| x.abs() > band) {
        if last != 0.0 && x.signum() != last {
            count += 1;
        }
        last = x.signum();
    }
    count
}

pub(crate) struct TangentData {
    pub v: Vec<f64>,
    pub morse_index: usize,
    pub condition: f64,
}

pub(crate) fn tangent_data(model: &Model, sol: &Solution) -> Result<TangentData> {
    if !sol.converged {
        return Err(Error::InvalidArgument("tangent requires a converged solution".into()));
    }
    if sol.u.iter().all(|&x| x == 0.0) {
        return Err(Error::InvalidArgument(
            "tangent requires a nontrivial solution; u ≡ 0 is degenerate".into(),
        ));
    }
    let weights = model.grid().weights();
    let jac = model.linearized(&sol.u, sol.lambda);
    let spec = jac.weighted_spectrum(weights, 0)?;
    let condition = spec.norm_estimate / spec.smallest_abs;
    if !(condition <= DEGENERACY_THRESHOLD) {
        return Err(Error::TangentUnreliable(condition));
    }
    let rhs: Vec<f64> = sol.u.iter().zip(weights).map(|(x, w)| x * w).collect();
    let v = jac.solve(&rhs)?;
    Ok(TangentData {
        v,
        morse_index: spec.negative_count,
        condition,
    })
}

/// Solve `L_λ v = u_λ`.
pub fn branch_tangent(model: &Model, sol: &Solution) -> Result<Vec<f64>> {
    Ok(tangent_data(model, sol)?.v)
}

fn make_node(model: &Model, solution: Solution) -> Result<BranchNode> {
    let data = tangent_data(model, &solution)?;
    let mass_derivative = 2.0 * model.grid().inner(&solution.u, &data.v);
    Ok(BranchNode {
        tangent_at_origin: data.v[0],
        sign_changes: sign_changes(&data.v),
        morse_index: data.morse_index,
        condition: data.condition,
        mass_derivative,
        tangent: data.v,
        solution,
    })
}

/// Continue from a converged seed towards `lambda_end`.
pub fn continue_from(
    model: &Model,
    seed: Solution,
    lambda_end: f64,
    ctrl: &StepControl,
    opts: &NewtonOptions,
) -> Result<Branch> {
    let lambda_start = seed.lambda;
    if lambda_start == lambda_end {
        return Err(Error::Validation("empty λ range".into()));
    }
    if !(ctrl.min > 0.0 && ctrl.initial >= ctrl.min && ctrl.max >= ctrl.initial) {
        return Err(Error::Validation(format!("inconsistent step control {ctrl:?}")));
    }
    let dir = (lambda_end - lambda_start).signum();
    let mut nodes = vec![make_node(model, seed)?];
    let mut step = ctrl.initial;
    let mut truncated = None;
    loop {
        let last = nodes.last().unwrap();
        let remaining = (lambda_end - last.solution.lambda) * dir;
        if remaining <= 1e-12 * lambda_end.abs().max(1.0) {
            break;
        }
        let h = step.min(remaining);
        let lambda = if h == remaining {
            lambda_end
        } else {
            last.solution.lambda + dir * h
        };
        let pred: Vec<f64> = last
            .solution
            .u
            .iter()
            .zip(&last.tangent)
            .map(|(u, v)| u + (lambda - last.solution.lambda) * v)
            .collect();
        let outcome = newton_solve(model, lambda, &pred, opts)
            .and_then(|sol| {
                if sol.converged && sol.positive {
                    Ok(sol)
                } else {
                    Err(Error::Degenerate(format!(
                        "corrector failed at λ = {lambda} (converged = {}, positive = {})",
                        sol.converged, sol.positive
                    )))
                }
            })
            .and_then(|sol| {
                let iters = sol.iterations;
                make_node(model, sol).map(|n| (n, iters))
            });
        match outcome {
            Ok((node, iters)) => {
                nodes.push(node);
                if iters <= ctrl.fast_iters {
                    step = (step * ctrl.grow).min(ctrl.max);
                }
            }
            Err(e) => {
                step *= ctrl.shrink;
                if step < ctrl.min {
                    truncated = Some(format!("step below minimum near λ = {lambda}: {e}"));
                    break;
                }
            }
        }
    }
    nodes.sort_by(|a, b| a.solution.lambda.total_cmp(&b.solution.lambda));
    Ok(Branch {
        nodes,
        lambda_start,
        lambda_end,
        truncated,
    })
}

/// Seed at `lambda_start`, then continue to `lambda_end`.
pub fn continue_branch(
    model: &Model,
    lambda_start: f64,
    lambda_end: f64,
    ctrl: &StepControl,
    opts: &NewtonOptions,
) -> Result<Branch> {
    if lambda_start == lambda_end || !lambda_start.is_finite() || !lambda_end.is_finite() {
        return Err(Error::Validation(format!(
            "empty λ range [{lambda_start}, {lambda_end}]"
        )));
    }
    let seed = seed_solution(model, lambda_start, opts)?;
    if !seed.converged || !seed.positive {
        return Err(Error::Degenerate(format!(
            "no positive seed solution at λ = {lambda_start}"
        )));
    }
    continue_from(model, seed, lambda_end, ctrl, opts)
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
    fn sign_change_counts() {
        assert_eq!(sign_changes(&[-1.0; 10]), 0);
        let v: Vec<f64> = (0..200).map(|i| 2.0 * (i as f64 + 0.5) / 200.0 - 1.0).collect();
        assert_eq!(sign_changes(&v), 1);
        assert_eq!(sign_changes(&[1.0, 1e-12, -1e-12, 1.0]), 0);
        assert_eq!(sign_changes(&[1.0, -1.0, 1.0]), 2);
    }

    #[test]
    fn tangent_matches_mass_law() {
        let m = cubic(4096, 30.0);
        let sol = seed_solution(&m, -1.0, &NewtonOptions::default()).unwrap();
        let v = branch_tangent(&m, &sol).unwrap();
        // d/dλ 4√(-λ) = -2 at λ = -1
        let dm = 2.0 * m.grid().inner(&sol.u, &v);
        assert!((dm + 2.0).abs() / 2.0 < 1e-3, "{dm}");
    }

    #[test]
    fn tangent_matches_centered_difference_at_second_order() {
        let m = cubic(2048, 30.0);
        let opts = NewtonOptions::default();
        let sol = seed_solution(&m, -1.0, &opts).unwrap();
        let v = branch_tangent(&m, &sol).unwrap();
        let err = |d: f64| {
            let a = newton_solve(&m, -1.0 + d, &sol.u, &opts).unwrap();
            let b = newton_solve(&m, -1.0 - d, &sol.u, &opts).unwrap();
            let fd: Vec<f64> = a.u.iter().zip(&b.u).map(|(x, y)| (x - y) / (2.0 * d)).collect();
            let diff: Vec<f64> = fd.iter().zip(&v).map(|(x, y)| x - y).collect();
            m.grid().norm(&diff)
        };
        let (e1, e2) = (err(0.04), err(0.02));
        assert!(e1 / e2 > 3.5, "{e1} {e2}");
    }

    #[test]
    fn tangent_rejects_trivial_state() {
        let m = cubic(256, 20.0);
        let trivial = Solution::assemble(&m, -1.0, vec![0.0; 256], 0, true, 1e-10);
        assert!(branch_tangent(&m, &trivial).is_err());
    }

    #[test]
    fn short_branch_follows_mass_law() {
        let m = cubic(4096, 30.0);
        let br = continue_branch(&m, -1.5, -0.8, &StepControl::default(), &NewtonOptions::default()).unwrap();
        assert!(br.truncated.is_none());
        assert!(br.lambdas().windows(2).all(|w| w[1] > w[0]));
        for node in &br.nodes {
            let l = node.solution.lambda;
            assert!((node.solution.mass - 4.0 * (-l).sqrt()).abs() / (4.0 * (-l).sqrt()) < 1e-4);
            assert_eq!(node.morse_index, 1);
            assert!(node.sign_changes <= 1);
        }
        for k in 1..br.len() - 1 {
            let fd = br.mass_difference(k).unwrap();
            let md = br.nodes[k].mass_derivative;
            assert!((fd - md).abs() / md.abs() < 5e-2);
        }
        assert_eq!(br.mass_derivative_sign(), Some(-1));
        assert!(continue_branch(&m, -1.0, -1.0, &StepControl::default(), &NewtonOptions::default()).is_err());
    }
}
