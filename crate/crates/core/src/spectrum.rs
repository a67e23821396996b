//! Linearized operator `L_λ = A + V − λ − f_t(|x|, u)`, its Morse index and
//! radial non-degeneracy.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::SymMatrix;
use crate::problem::Model;
use crate::solve::Solution;

const LOWEST_COUNT: usize = 6;

/// `L_λ` in stiffness form together with the quadrature weights.
#[derive(Clone, Debug)]
pub struct LinearizedOperator {
    pub stiffness: SymMatrix,
    pub weights: Vec<f64>,
}

impl LinearizedOperator {
    /// `L_λ w` at the nodes.
    pub fn apply(&self, w: &[f64]) -> Vec<f64> {
        let mut y = self.stiffness.matvec(w);
        y.iter_mut().zip(&self.weights).for_each(|(v, wt)| *v /= wt);
        y
    }

    /// `⟨L_λ w, w⟩`.
    pub fn quadratic_form(&self, w: &[f64]) -> f64 {
        self.stiffness.bilinear(w, w)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SpectrumReport {
    pub morse_index: usize,
    pub smallest_abs_eig: f64,
    /// Lowest eigenvalues, ascending.
    pub lowest_eigs: Vec<f64>,
    #[serde(skip)]
    pub lowest_vectors: Vec<Vec<f64>>,
    pub nondegenerate: bool,
    pub norm_estimate: f64,
    pub eig_tol: f64,
    /// Always "radial": only the radial sector is discretized.
    pub sector: String,
}

pub fn linearized_operator(model: &Model, sol: &Solution) -> LinearizedOperator {
    LinearizedOperator {
        stiffness: model.linearized(&sol.u, sol.lambda),
        weights: model.grid().weights().to_vec(),
    }
}

/// Radial-sector Morse index and non-degeneracy of `L_λ` at `sol`.
pub fn morse_index(model: &Model, sol: &Solution) -> Result<SpectrumReport> {
    if !sol.converged {
        return Err(Error::InvalidArgument("Morse index requires a converged solution".into()));
    }
    let op = linearized_operator(model, sol);
    let spec = op.stiffness.weighted_spectrum(&op.weights, LOWEST_COUNT)?;
    if spec.lowest.iter().any(|x| !x.is_finite()) {
        return Err(Error::Eigensolve("non-finite eigenvalue".into()));
    }
    let eig_tol = 1e-9 * spec.norm_estimate;
    let morse = if spec.negative_count < spec.lowest.len() {
        spec.lowest.iter().filter(|&&e| e < -eig_tol).count()
    } else {
        spec.negative_count
    };
    Ok(SpectrumReport {
        morse_index: morse,
        smallest_abs_eig: spec.smallest_abs,
        nondegenerate: spec.smallest_abs > eig_tol,
        lowest_eigs: spec.lowest,
        lowest_vectors: spec.vectors,
        norm_estimate: spec.norm_estimate,
        eig_tol,
        sector: "radial".into(),
    })
}

/// `(⟨L_λu, u⟩, (2 − p)∫h|u|^p)` for weighted-power nonlinearities.
pub fn nehari_direction(model: &Model, sol: &Solution) -> Option<(f64, f64)> {
    let (p, h) = model.problem().nonlinearity().as_weighted_power()?;
    let lhs = linearized_operator(model, sol).quadratic_form(&sol.u);
    let rhs = (2.0 - p) * model.grid().integrate_with(&sol.u, |r, x| h.eval(r) * x.abs().powf(p));
    Some((lhs, rhs))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::RadialGrid;
    use crate::problem::{ProblemSpec, RadialFunction};
    use crate::solve::{seed_solution, NewtonOptions};

    #[test]
    fn soliton_has_index_one() {
        let spec = ProblemSpec::fractional_power(1.0, 1, 4.0, RadialFunction::constant(1.0)).unwrap();
        let m = Model::new(&spec, &RadialGrid::whole_space(1, 4096, 30.0).unwrap()).unwrap();
        let sol = seed_solution(&m, -1.0, &NewtonOptions::default()).unwrap();
        let rep = morse_index(&m, &sol).unwrap();
        assert_eq!(rep.morse_index, 1);
        assert!(rep.nondegenerate);
        assert!(rep.lowest_eigs.windows(2).all(|w| w[1] >= w[0]));
        // even sector: the translation mode is odd, so |eig| stays away from 0
        assert!(rep.smallest_abs_eig > 0.1, "{}", rep.smallest_abs_eig);
        let (lhs, rhs) = nehari_direction(&m, &sol).unwrap();
        assert!(lhs < 0.0);
        assert!((lhs - rhs).abs() / rhs.abs() < 1e-8);
    }

    #[test]
    fn linear_part_is_positive_below_spectrum() {
        let spec = ProblemSpec::ball_hardy(3, 1.0, 2.5).unwrap();
        let m = Model::new(&spec, &RadialGrid::unit_ball(3, 300).unwrap()).unwrap();
        let zero = Solution::assemble(&m, 5.0, vec![0.0; 300], 0, true, 1e-10);
        let rep = morse_index(&m, &zero).unwrap();
        assert_eq!(rep.morse_index, 0);
        assert!(rep.lowest_eigs[0] > 0.0);
    }

    #[test]
    fn ball_ground_state_is_nondegenerate() {
        let spec = ProblemSpec::ball_hardy(3, 1.0, 2.5).unwrap();
        let m = Model::new(&spec, &RadialGrid::unit_ball(3, 1000).unwrap()).unwrap();
        let sol = seed_solution(&m, 0.0, &NewtonOptions::default()).unwrap();
        let rep = morse_index(&m, &sol).unwrap();
        assert_eq!(rep.morse_index, 1);
        assert!(rep.nondegenerate);
    }

    #[test]
    fn fractional_soliton_has_index_one() {
        let spec = ProblemSpec::fractional_power(0.6, 1, 3.0, RadialFunction::constant(1.0)).unwrap();
        let m = Model::new(&spec, &RadialGrid::whole_space(1, 400, 40.0).unwrap()).unwrap();
        let sol = seed_solution(&m, -1.0, &NewtonOptions::default()).unwrap();
        assert!(sol.converged && sol.positive);
        let rep = morse_index(&m, &sol).unwrap();
        assert_eq!(rep.morse_index, 1);
        assert!(rep.nondegenerate);
    }
}
