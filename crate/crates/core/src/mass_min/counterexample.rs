use serde::{Deserialize, Serialize};

use super::minimize::{minimize_from, minimize_on_sphere, MinimizeOptions, MinimizerResult};
use crate::error::{Error, Result};
use crate::grid::RadialGrid;
use crate::problem::{Model, ProblemSpec, RadialFunction};

/// Range of masses in which a crossing is considered resolvable.
pub const CROSSING_RANGE: (f64, f64) = (1e-2, 1e2);

/// Dilation exponent `α` in `m(c) = c^α m(1)` for the pure power `|u|^{p-2}u`.
pub fn scaling_exponent(s: f64, dim: usize, p: f64) -> f64 {
    let n = dim as f64;
    (2.0 * s * p - n * (p - 2.0)) / (4.0 * s - n * (p - 2.0))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Crossing {
    /// Crossing of the two discrete curves.
    pub c_hat: f64,
    /// Crossing predicted by the scaling law from `m^±(1)`.
    pub c_hat_scaling: f64,
    pub alpha_plus: f64,
    pub alpha_minus: f64,
    pub m_plus_1: f64,
    pub m_minus_1: f64,
    pub m_hat: f64,
    pub lambda_plus: f64,
    pub lambda_minus: f64,
    pub dq_left: f64,
    pub dq_right: f64,
    /// `|α⁺ − α⁻| |m(ĉ)| / ĉ`.
    pub predicted_gap: f64,
    pub secant_iterations: usize,
    /// Positive and negative minimizers at `ĉ` for the asymmetric problem.
    #[serde(skip)]
    pub u_plus: Vec<f64>,
    #[serde(skip)]
    pub u_minus: Vec<f64>,
}

fn single(model: &Model, c: f64, start: &[f64], opts: &MinimizeOptions) -> Result<MinimizerResult> {
    minimize_from(model, c, &[start.to_vec()], opts)
}

/// Locates `ĉ` with `m⁺(ĉ) = m⁻(ĉ)` for the asymmetric nonlinearity
/// `|u|^{p-2}u` (u > 0), `|u|^{q-2}u` (u < 0).
pub fn counterexample_crossing(
    s: f64,
    dim: usize,
    p: f64,
    q: f64,
    grid: &RadialGrid,
    opts: &MinimizeOptions,
) -> Result<Crossing> {
    ProblemSpec::appendix_a(s, dim, p, q)?;
    let one = RadialFunction::constant(1.0);
    let plus = Model::new(&ProblemSpec::fractional_power(s, dim, p, one.clone())?, grid)?;
    let minus = Model::new(&ProblemSpec::fractional_power(s, dim, q, one)?, grid)?;
    let inner = MinimizeOptions { compute_morse: false, ..*opts };
    let r_plus = minimize_on_sphere(&plus, 1.0, &inner)?;
    let r_minus = minimize_on_sphere(&minus, 1.0, &inner)?;
    let alpha_plus = scaling_exponent(s, dim, p);
    let alpha_minus = scaling_exponent(s, dim, q);
    let c0 = (r_minus.m / r_plus.m).powf(1.0 / (alpha_plus - alpha_minus));
    if !(c0.is_finite() && c0 >= CROSSING_RANGE.0 && c0 <= CROSSING_RANGE.1) {
        return Err(Error::Unbounded(format!(
            "mass crossing {c0:e} lies outside the resolvable range [{:e}, {:e}]",
            CROSSING_RANGE.0, CROSSING_RANGE.1
        )));
    }

    let eval = |c: f64, up: &[f64], um: &[f64]| -> Result<(MinimizerResult, MinimizerResult)> {
        Ok((single(&plus, c, up, &inner)?, single(&minus, c, um, &inner)?))
    };
    let (mut a_plus, mut a_minus) = eval(c0, &r_plus.u, &r_minus.u)?;
    let mut ca = c0;
    let mut ga = a_plus.m - a_minus.m;
    let mut cb = c0 * (1.0 + 1e-3);
    let (mut b_plus, mut b_minus) = eval(cb, &a_plus.u, &a_minus.u)?;
    let mut gb = b_plus.m - b_minus.m;
    let mut iterations = 0;
    for _ in 0..40 {
        iterations += 1;
        if gb == 0.0 || gb == ga {
            break;
        }
        let cn = cb - gb * (cb - ca) / (gb - ga);
        if !(cn.is_finite() && cn > 0.0) {
            return Err(Error::Degenerate("secant refinement of the crossing diverged".into()));
        }
        let (np, nm) = eval(cn, &b_plus.u, &b_minus.u)?;
        ca = cb;
        ga = gb;
        a_plus = b_plus;
        a_minus = b_minus;
        cb = cn;
        gb = np.m - nm.m;
        b_plus = np;
        b_minus = nm;
        if (cb - ca).abs() <= 1e-13 * cb {
            break;
        }
    }
    let _ = (a_plus, a_minus);
    let c_hat = cb;
    let m_hat = b_plus.m.min(b_minus.m);
    let (lp, lm) = (b_plus.lambda, b_minus.lambda);
    Ok(Crossing {
        c_hat,
        c_hat_scaling: c0,
        alpha_plus,
        alpha_minus,
        m_plus_1: r_plus.m,
        m_minus_1: r_minus.m,
        m_hat,
        lambda_plus: lp,
        lambda_minus: lm,
        dq_left: lp.max(lm),
        dq_right: lp.min(lm),
        predicted_gap: (alpha_plus - alpha_minus).abs() * m_hat.abs() / c_hat,
        secant_iterations: iterations,
        u_plus: b_plus.u,
        u_minus: b_minus.u.iter().map(|x| -x.abs()).collect(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exponents() {
        assert!((scaling_exponent(1.0, 1, 4.0) - 3.0).abs() < 1e-15);
        assert!((scaling_exponent(1.0, 1, 3.0) - 5.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn exponent_matches_dilation() {
        // E(t u(β·)) = t²β^{2s-N} K - t^p β^{-N} P / p, optimised on the sphere.
        for (s, n, p) in [(1.0, 1usize, 4.0), (0.7, 1, 3.0), (1.0, 2, 2.5)] {
            let (k, pp) = (0.8, 2.3);
            let m_of = |c: f64| {
                // Q(t u(β·)) = t² β^{-N} Q(u) with Q(u) = 1.
                let mut best = f64::INFINITY;
                for i in 0..20000 {
                    let beta = 10f64.powf(-3.0 + 6.0 * i as f64 / 20000.0);
                    let t = (c * beta.powi(n as i32)).sqrt();
                    let e = 0.5 * t * t * beta.powf(2.0 * s - n as f64) * k
                        - t.powf(p) * beta.powi(-(n as i32)) * pp / p;
                    best = best.min(e);
                }
                best
            };
            let slope = (m_of(2.0) / m_of(1.0)).abs().ln() / 2f64.ln();
            assert!((slope - scaling_exponent(s, n, p)).abs() < 1e-3, "{s} {n} {p}: {slope}");
        }
    }

    #[test]
    fn symmetric_exponents_rejected() {
        let g = RadialGrid::whole_space(1, 64, 10.0).unwrap();
        assert!(counterexample_crossing(1.0, 1, 3.0, 3.0, &g, &MinimizeOptions::default()).is_err());
    }

    #[test]
    fn cubic_quadratic_crossing() {
        let g = RadialGrid::whole_space(1, 4096, 40.0).unwrap();
        let x = counterexample_crossing(1.0, 1, 4.0, 3.0, &g, &MinimizeOptions::default()).unwrap();
        let m_minus_exact = -0.6 * 3f64.powf(-2.0 / 3.0);
        assert!((x.m_plus_1 + 1.0 / 12.0).abs() < 1e-4);
        assert!((x.m_minus_1 - m_minus_exact).abs() < 1e-4);
        let c_exact = (m_minus_exact * -12.0f64).powf(0.75);
        assert!((x.c_hat - c_exact).abs() / c_exact < 1e-3);
        assert!((x.dq_left - x.dq_right - x.predicted_gap).abs() / x.predicted_gap < 1e-3);
    }
}
