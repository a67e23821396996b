use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::Factored;
use crate::problem::Model;
use crate::solve::{effective_tolerance, gaussian_bump};
use crate::spectrum::morse_index;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct FlowOptions {
    /// Stop when `‖∇E − λu‖ / ‖u‖` falls below this.
    pub tol: f64,
    pub max_steps: usize,
    pub initial_step: f64,
    pub max_step: f64,
}

impl Default for FlowOptions {
    fn default() -> Self {
        Self {
            tol: 1e-9,
            max_steps: 5000,
            initial_step: 0.5,
            max_step: 1e4,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct MinimizeOptions {
    pub starts: usize,
    pub seed: u64,
    /// Reference bump width; starts are spread over `×[1/4, 4]` around it.
    pub base_width: f64,
    pub flow: FlowOptions,
    /// Relative stationarity tolerance of the polish.
    pub polish_tol: f64,
    pub polish_iters: usize,
    pub cluster_tol: f64,
    pub compute_morse: bool,
}

impl Default for MinimizeOptions {
    fn default() -> Self {
        Self {
            starts: 8,
            seed: 0x5eed,
            base_width: 1.0,
            flow: FlowOptions::default(),
            polish_tol: 1e-10,
            polish_iters: 30,
            cluster_tol: 1e-6,
            compute_morse: true,
        }
    }
}

/// A group of multistart outcomes with the same `(m, λ)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Cluster {
    pub m: f64,
    pub lambda: f64,
    pub count: usize,
    /// Sign of the representative profile.
    pub sign: i8,
    #[serde(skip)]
    pub u: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MinimizerResult {
    pub c: f64,
    #[serde(skip)]
    pub u: Vec<f64>,
    pub m: f64,
    /// `⟨∇E(u), u⟩ / ∫u²`.
    pub lambda: f64,
    /// Multiplier returned by the bordered Newton polish.
    pub lambda_polish: f64,
    /// `‖∇E − λu‖ / ‖u‖` at the returned profile.
    pub stationarity: f64,
    pub converged: bool,
    pub multistart_count: usize,
    pub distinct_minima: Vec<Cluster>,
    pub morse_index: Option<usize>,
    /// Positive (or negative) everywhere with non-increasing modulus.
    pub sign_definite: bool,
    pub monotone: bool,
}

/// One flow + polish run from a starting profile.
#[derive(Clone, Debug)]
pub(crate) struct Candidate {
    pub u: Vec<f64>,
    pub m: f64,
    pub lambda: f64,
    pub lambda_polish: f64,
    pub stationarity: f64,
    pub converged: bool,
}

pub(crate) fn rescale_to_mass(model: &Model, u: &[f64], c: f64) -> Vec<f64> {
    let q = model.mass(u);
    let s = (c / q).sqrt();
    u.iter().map(|x| x * s).collect()
}

fn rayleigh_multiplier(model: &Model, u: &[f64]) -> (f64, f64) {
    let g = model.energy_gradient(u);
    let grid = model.grid();
    let uu = grid.inner(u, u);
    let lambda = grid.inner(&g, u) / uu;
    let pg: Vec<f64> = g.iter().zip(u).map(|(a, b)| a - lambda * b).collect();
    (lambda, grid.norm(&pg) / uu.sqrt())
}

struct StepCache {
    tau: f64,
    shift: f64,
    factor: Factored,
}

/// Preconditioned projected gradient flow on `S_c`:
/// `(W + τ(K + WV − σW)) ũ = W(u + τ(f(u) + (λ_u − σ)u))`, `u ← ũ √(c/Q(ũ))`,
/// with `λ_u = ⟨∇E(u), u⟩/∫u²` and a frozen shift `σ ≤ 0` tracking `λ_u`.
/// Fixed points are exactly the critical points of `E` on `S_c`.
pub(crate) fn gradient_flow(model: &Model, c: f64, u0: &[f64], opts: &FlowOptions) -> Result<(Vec<f64>, usize)> {
    let grid = model.grid();
    let weights = grid.weights();
    let f = model.problem().nonlinearity();
    let vmin = model.potential().iter().cloned().fold(0.0f64, f64::min);
    let linear = model.linear_part();
    let mut u = rescale_to_mass(model, u0, c);
    let mut e = model.energy_unchecked(&u);
    let mut tau = opts.initial_step;
    let mut cache: Option<StepCache> = None;
    let mut streak = 0;
    for step in 0..opts.max_steps {
        let (lambda, stat) = rayleigh_multiplier(model, &u);
        if stat < opts.tol {
            return Ok((u, step));
        }
        let mut shift = cache.as_ref().map_or(lambda.min(0.0), |k| k.shift);
        if (lambda.min(0.0) - shift).abs() > 0.05 * shift.abs().max(1e-3) {
            shift = lambda.min(0.0);
        }
        let gap = vmin - shift;
        let tau_cap = if gap < 0.0 { (0.5 / -gap).min(opts.max_step) } else { opts.max_step };
        tau = tau.min(tau_cap);
        let mut accepted = false;
        while tau > 1e-12 {
            if cache.as_ref().is_none_or(|k| k.tau != tau || k.shift != shift) {
                let d: Vec<f64> = weights.iter().map(|w| w * (1.0 - tau * shift)).collect();
                let m = linear.scaled_plus_diagonal(tau, &d);
                cache = Some(StepCache { tau, shift, factor: m.factor()? });
            }
            let rhs: Vec<f64> = grid
                .nodes()
                .iter()
                .zip(weights)
                .zip(&u)
                .map(|((&r, w), &x)| w * (x + tau * (f.value(r, x) + (lambda - shift) * x)))
                .collect();
            let trial = cache.as_ref().unwrap().factor.solve(&rhs)?;
            if trial.iter().any(|x| !x.is_finite()) || model.mass(&trial) == 0.0 {
                tau *= 0.5;
                streak = 0;
                continue;
            }
            let trial = rescale_to_mass(model, &trial, c);
            let et = model.energy_unchecked(&trial);
            if et <= e + 1e-13 * e.abs().max(1.0) {
                u = trial;
                e = et;
                accepted = true;
                streak += 1;
                if streak >= 3 {
                    tau = (4.0 * tau).min(tau_cap);
                    streak = 0;
                }
                break;
            }
            tau *= 0.5;
            streak = 0;
        }
        if !accepted {
            return Ok((u, step));
        }
    }
    Ok((u, opts.max_steps))
}

/// Bordered Newton on `(∇E(u) − λu, Q(u) − c)`.
pub(crate) fn polish(model: &Model, c: f64, u0: Vec<f64>, tol: f64, iters: usize) -> Result<Candidate> {
    let grid = model.grid();
    let weights = grid.weights();
    let tol = effective_tolerance(model, tol);
    let mut u = u0;
    let (mut lambda, _) = rayleigh_multiplier(model, &u);
    let mut converged = false;
    for _ in 0..iters {
        let g = model.gradient_unchecked(&u, lambda);
        let res = grid.norm(&g) / grid.norm(&u);
        let q_err = (model.mass(&u) - c).abs() / c;
        if res < tol && q_err < 1e-13 {
            converged = true;
            break;
        }
        let jac = model.linearized(&u, lambda);
        let fac = jac.factor()?;
        let r: Vec<f64> = g.iter().zip(weights).map(|(a, w)| a * w).collect();
        let wu: Vec<f64> = u.iter().zip(weights).map(|(a, w)| a * w).collect();
        let a = fac.solve(&r)?;
        let b = fac.solve(&wu)?;
        let denom = grid.inner(&u, &b);
        if denom == 0.0 || !denom.is_finite() {
            return Err(Error::Degenerate("bordered system is singular".into()));
        }
        let dl = (c - model.mass(&u) + grid.inner(&u, &a)) / denom;
        u.iter_mut()
            .zip(a.iter().zip(&b))
            .for_each(|(x, (ai, bi))| *x += -ai + dl * bi);
        lambda += dl;
    }
    let lambda_polish = lambda;
    let u = rescale_to_mass(model, &u, c);
    let (lambda, stationarity) = rayleigh_multiplier(model, &u);
    if !converged {
        converged = stationarity < 10.0 * tol;
    }
    Ok(Candidate {
        m: model.energy_unchecked(&u),
        u,
        lambda,
        lambda_polish,
        stationarity,
        converged,
    })
}

pub(crate) fn run_candidate(model: &Model, c: f64, u0: &[f64], opts: &MinimizeOptions) -> Result<Candidate> {
    let (u, _) = gradient_flow(model, c, u0, &opts.flow)?;
    match polish(model, c, u.clone(), opts.polish_tol, opts.polish_iters) {
        Ok(cand) if cand.converged => Ok(cand),
        _ => {
            let (lambda, stationarity) = rayleigh_multiplier(model, &u);
            Ok(Candidate {
                m: model.energy_unchecked(&u),
                u,
                lambda,
                lambda_polish: lambda,
                stationarity,
                converged: false,
            })
        }
    }
}

fn sign_of(u: &[f64]) -> i8 {
    let s: f64 = u.iter().sum();
    if s >= 0.0 {
        1
    } else {
        -1
    }
}

pub(crate) fn cluster(cands: &[Candidate], tol: f64) -> Vec<Cluster> {
    let mut out: Vec<Cluster> = Vec::new();
    let mut order: Vec<usize> = (0..cands.len()).collect();
    order.sort_by(|&a, &b| cands[a].m.total_cmp(&cands[b].m));
    for i in order {
        let c = &cands[i];
        let close = |x: f64, y: f64| (x - y).abs() <= tol * x.abs().max(y.abs()).max(1.0);
        match out.iter_mut().find(|k| close(k.m, c.m) && close(k.lambda, c.lambda)) {
            Some(k) => k.count += 1,
            None => out.push(Cluster {
                m: c.m,
                lambda: c.lambda,
                count: 1,
                sign: sign_of(&c.u),
                u: c.u.clone(),
            }),
        }
    }
    out
}

/// Starting profiles: Gaussian bumps with widths spread over `×[1/4, 4]`,
/// both signs when `f` is not odd.
pub(crate) fn starting_profiles(model: &Model, opts: &MinimizeOptions) -> Vec<Vec<f64>> {
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let odd = model.problem().nonlinearity().is_odd();
    let n = opts.starts.max(1);
    let cap = if model.grid().is_ball() { 0.5 } else { model.grid().outer_radius() / 6.0 };
    (0..n)
        .map(|i| {
            let frac = if n == 1 { 0.5 } else { i as f64 / (n - 1) as f64 };
            let jitter: f64 = rng.random_range(-0.1..0.1);
            let log_w = (0.25f64).ln() + (16f64).ln() * frac + jitter;
            let width = (opts.base_width * log_w.exp()).min(cap);
            let bump = gaussian_bump(model, width);
            if !odd && i % 2 == 1 {
                bump.iter().map(|x| -x).collect()
            } else {
                bump
            }
        })
        .collect()
}

pub(crate) fn finish(
    model: &Model,
    c: f64,
    cands: Vec<Candidate>,
    opts: &MinimizeOptions,
) -> Result<MinimizerResult> {
    let clusters = cluster(&cands, opts.cluster_tol);
    let best = cands
        .iter()
        .min_by(|a, b| a.m.total_cmp(&b.m))
        .ok_or_else(|| Error::InvalidArgument("no multistart candidates".into()))?
        .clone();
    let sign = sign_of(&best.u) as f64;
    let abs: Vec<f64> = best.u.iter().map(|x| x * sign).collect();
    let sign_definite = abs.iter().all(|&x| x > 0.0);
    let monotone = crate::solve::newton::is_non_increasing(&abs);
    let morse = if opts.compute_morse && best.converged {
        let sol = crate::solve::Solution::assemble(model, best.lambda, best.u.clone(), 0, true, opts.polish_tol);
        Some(morse_index(model, &sol)?.morse_index)
    } else {
        None
    };
    Ok(MinimizerResult {
        c,
        m: best.m,
        lambda: best.lambda,
        lambda_polish: best.lambda_polish,
        stationarity: best.stationarity,
        converged: best.converged,
        multistart_count: cands.len(),
        distinct_minima: clusters,
        morse_index: morse,
        sign_definite,
        monotone,
        u: best.u,
    })
}

pub(crate) fn check_target(model: &Model, c: f64) -> Result<()> {
    if !(c > 0.0 && c.is_finite()) {
        return Err(Error::Validation(format!("target mass must be positive, got {c}")));
    }
    if !model.problem().is_mass_subcritical() {
        return Err(Error::Unbounded(format!(
            "p = {} is mass-supercritical for this family",
            model.problem().p()
        )));
    }
    Ok(())
}

/// `m(c) = inf_{Q(u) = c} E(u)` by multistart gradient flow and Newton polish.
pub fn minimize_on_sphere(model: &Model, c: f64, opts: &MinimizeOptions) -> Result<MinimizerResult> {
    check_target(model, c)?;
    let starts = starting_profiles(model, opts);
    let cands: Vec<Candidate> = starts
        .par_iter()
        .map(|u0| run_candidate(model, c, u0, opts))
        .collect::<Result<_>>()?;
    finish(model, c, cands, opts)
}

/// Minimize from caller-supplied starting profiles (rescaled onto `S_c`).
pub fn minimize_from(model: &Model, c: f64, starts: &[Vec<f64>], opts: &MinimizeOptions) -> Result<MinimizerResult> {
    check_target(model, c)?;
    let cands: Vec<Candidate> = starts
        .par_iter()
        .map(|u0| run_candidate(model, c, u0, opts))
        .collect::<Result<_>>()?;
    finish(model, c, cands, opts)
}

/// Extreme multipliers among clusters within `1e-8` of the least energy.
pub fn lambda_set_scan(model: &Model, c: f64, opts: &MinimizeOptions) -> Result<(f64, f64)> {
    let res = minimize_on_sphere(model, c, opts)?;
    Ok(lambda_extremes(&res))
}

pub(crate) fn lambda_extremes(res: &MinimizerResult) -> (f64, f64) {
    let near: Vec<&Cluster> = res
        .distinct_minima
        .iter()
        .filter(|k| k.m - res.m <= 1e-8 * res.m.abs().max(1.0))
        .collect();
    let lo = near.iter().map(|k| k.lambda).fold(f64::INFINITY, f64::min);
    let hi = near.iter().map(|k| k.lambda).fold(f64::NEG_INFINITY, f64::max);
    (lo, hi)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::RadialGrid;
    use crate::problem::{ProblemSpec, RadialFunction};

    fn cubic(n: usize) -> Model {
        let spec = ProblemSpec::fractional_power(1.0, 1, 4.0, RadialFunction::constant(1.0)).unwrap();
        Model::new(&spec, &RadialGrid::whole_space(1, n, 40.0).unwrap()).unwrap()
    }

    #[test]
    fn cubic_closed_forms() {
        let m = cubic(8192);
        for (c, m_exact, l_exact) in [(1.0, -1.0 / 12.0, -0.25), (2.0, -2.0 / 3.0, -1.0)] {
            let res = minimize_on_sphere(&m, c, &MinimizeOptions::default()).unwrap();
            assert!(res.converged);
            assert!((res.m - m_exact).abs() / m_exact.abs() < 1e-4, "m({c}) = {}", res.m);
            assert!((res.lambda - l_exact).abs() / l_exact.abs() < 1e-4);
            assert!((m.mass(&res.u) - c).abs() / c < 1e-10);
            assert!((res.lambda - res.lambda_polish).abs() < 1e-8);
            assert!(res.sign_definite && res.monotone);
            assert_eq!(res.distinct_minima.len(), 1);
            assert_eq!(res.morse_index, Some(1));
        }
    }

    #[test]
    fn scaling_inequality() {
        let m = cubic(4096);
        let opts = MinimizeOptions { starts: 3, ..Default::default() };
        let a = minimize_on_sphere(&m, 0.7, &opts).unwrap().m;
        let b = minimize_on_sphere(&m, 2.8, &opts).unwrap().m;
        assert!(b <= 4.0 * a);
    }

    #[test]
    fn flow_decreases_energy_and_keeps_mass() {
        let m = cubic(2048);
        let u0 = gaussian_bump(&m, 3.0);
        let opts = FlowOptions { max_steps: 1, ..Default::default() };
        let before = m.energy_unchecked(&rescale_to_mass(&m, &u0, 1.0));
        let (u1, _) = gradient_flow(&m, 1.0, &u0, &opts).unwrap();
        assert!(m.energy_unchecked(&u1) <= before);
        assert!((m.mass(&u1) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn supercritical_is_rejected() {
        let spec = ProblemSpec::nls_potential(1, 8.0, RadialFunction::zero(), RadialFunction::constant(1.0)).unwrap();
        let m = Model::new(&spec, &RadialGrid::whole_space(1, 256, 20.0).unwrap()).unwrap();
        assert!(matches!(
            minimize_on_sphere(&m, 1.0, &MinimizeOptions::default()),
            Err(Error::Unbounded(_))
        ));
        assert!(minimize_on_sphere(&cubic(256), -1.0, &MinimizeOptions::default()).is_err());
    }

    #[test]
    fn pure_power_has_single_multiplier() {
        let m = cubic(4096);
        let (l1, l2) = lambda_set_scan(&m, 1.5, &MinimizeOptions::default()).unwrap();
        assert!((l1 - l2).abs() < 1e-8);
        assert!((l1 + 1.5 * 1.5 / 4.0).abs() < 1e-4);
    }
}
