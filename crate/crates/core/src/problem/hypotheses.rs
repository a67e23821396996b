//! Sampled checks of the structural hypotheses on `h`, `V` and `f`.
//!
//! Every inequality or monotonicity statement is evaluated on a finite
//! log-spaced lattice of `(r, t)` points; a pass means "pass (sampled)".

use serde::{Deserialize, Serialize};

use super::{critical_sobolev, Nonlinearity, ProblemSpec, RadialFunction};

pub const VIOLATION_TOL: f64 = 1e-9;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    Pass,
    Fail,
    Inconclusive,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Hypothesis {
    #[serde(rename = "h")]
    H,
    #[serde(rename = "V")]
    V,
    #[serde(rename = "f1")]
    F1,
    #[serde(rename = "f2")]
    F2,
    #[serde(rename = "f2'")]
    F2Prime,
    #[serde(rename = "f3")]
    F3,
    #[serde(rename = "H1")]
    H1,
    #[serde(rename = "H2")]
    H2,
    #[serde(rename = "H3")]
    H3,
    #[serde(rename = "H3'")]
    H3Prime,
    #[serde(rename = "H4")]
    H4,
}

/// A sample point where an inequality is violated.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Witness {
    pub r: f64,
    pub t: Option<f64>,
    /// Size of the violation.
    pub excess: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HypothesisCheck {
    pub hypothesis: Hypothesis,
    pub verdict: Verdict,
    pub witness: Option<Witness>,
    pub note: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HypothesisReport {
    pub checks: Vec<HypothesisCheck>,
    pub theta_estimate: Option<f64>,
}

impl HypothesisReport {
    pub fn get(&self, h: Hypothesis) -> Option<&HypothesisCheck> {
        self.checks.iter().find(|c| c.hypothesis == h)
    }

    pub fn verdict(&self, h: Hypothesis) -> Option<Verdict> {
        self.get(h).map(|c| c.verdict)
    }
}

/// Log-spaced `(r, t)` sample lattice.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SampleBox {
    pub r_min: f64,
    pub r_max: f64,
    pub t_min: f64,
    pub t_max: f64,
    pub nr: usize,
    pub nt: usize,
}

impl Default for SampleBox {
    fn default() -> Self {
        Self {
            r_min: 1e-3,
            r_max: 1e3,
            t_min: 1e-3,
            t_max: 1e3,
            nr: 64,
            nt: 64,
        }
    }
}

fn log_space(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    let (a, b) = (lo.ln(), hi.ln());
    (0..n)
        .map(|i| (a + (b - a) * i as f64 / (n - 1).max(1) as f64).exp())
        .collect()
}

impl SampleBox {
    pub fn radii(&self) -> Vec<f64> {
        log_space(self.r_min, self.r_max, self.nr)
    }

    pub fn amplitudes(&self) -> Vec<f64> {
        log_space(self.t_min, self.t_max, self.nt)
    }
}

/// `lim_{r→∞} r h'(r)/h(r)` from `r = 10⁶`, Richardson-extrapolated assuming
/// an `O(r⁻²)` approach.
pub fn theta_estimate(h: &RadialFunction) -> Option<f64> {
    let ratio = |r: f64| h.derivative(r).map(|d| r * d / h.eval(r));
    let r = 1e6;
    let (a, b) = (ratio(r)?, ratio(2.0 * r)?);
    let est = (4.0 * b - a) / 3.0;
    est.is_finite().then_some(est)
}

#[derive(Default)]
struct Tracker {
    worst: Option<Witness>,
    missing: bool,
}

impl Tracker {
    /// Record `excess > 0` as a violation when it exceeds the scaled tolerance.
    fn violation(&mut self, r: f64, t: Option<f64>, excess: f64, scale: f64) {
        if excess.is_nan() {
            self.missing = true;
            return;
        }
        if excess > VIOLATION_TOL * (1.0 + scale.abs()) {
            let worse = self.worst.is_none_or(|w| excess > w.excess);
            if worse {
                self.worst = Some(Witness { r, t, excess });
            }
        }
    }

    fn finish(self, hypothesis: Hypothesis, note: impl Into<String>) -> HypothesisCheck {
        let note = note.into();
        let (verdict, note) = match (self.worst, self.missing) {
            (Some(_), _) => (Verdict::Fail, note),
            (None, true) => (
                Verdict::Inconclusive,
                format!("{note}; required derivative not supplied"),
            ),
            (None, false) => (Verdict::Pass, format!("{note}; pass (sampled)")),
        };
        HypothesisCheck {
            hypothesis,
            verdict,
            witness: self.worst,
            note,
        }
    }
}

fn opt(x: Option<f64>) -> f64 {
    x.unwrap_or(f64::NAN)
}

/// Monotonicity along consecutive samples. `increasing = true` flags drops.
fn monotone<F: Fn(f64) -> f64>(
    tr: &mut Tracker,
    xs: &[f64],
    g: F,
    increasing: bool,
    at: impl Fn(f64) -> (f64, Option<f64>),
) {
    let vals: Vec<f64> = xs.iter().map(|&x| g(x)).collect();
    for i in 0..vals.len().saturating_sub(1) {
        let (a, b) = (vals[i], vals[i + 1]);
        let excess = if increasing { a - b } else { b - a };
        let (r, t) = at(xs[i + 1]);
        tr.violation(r, t, excess, a.abs().max(b.abs()));
    }
}

fn check_h(h: &RadialFunction, radii: &[f64]) -> (HypothesisCheck, Option<f64>) {
    let mut tr = Tracker::default();
    for &r in radii {
        let v = h.eval(r);
        tr.violation(r, None, -v, 0.0);
    }
    monotone(&mut tr, radii, |r| h.eval(r), false, |r| (r, None));
    monotone(
        &mut tr,
        radii,
        |r| opt(h.derivative(r)) * r / h.eval(r),
        false,
        |r| (r, None),
    );
    let theta = theta_estimate(h);
    if h.has_derivative() && theta.is_none() {
        tr.violation(1e6, None, f64::INFINITY, 0.0);
    }
    let note = match theta {
        Some(t) => format!("θ ≈ {t:.6}"),
        None => "θ not available".to_string(),
    };
    (tr.finish(Hypothesis::H, note), theta)
}

fn check_v(v: &RadialFunction, radii: &[f64]) -> HypothesisCheck {
    let mut tr = Tracker::default();
    monotone(
        &mut tr,
        radii,
        |r| 2.0 * v.eval(r) + r * opt(v.derivative(r)),
        true,
        |r| (r, None),
    );
    tr.finish(Hypothesis::V, "2V + rV' non-decreasing")
}

fn check_f1(f: &dyn Nonlinearity, dim: f64, radii: &[f64], amps: &[f64]) -> HypothesisCheck {
    let mut tr = Tracker::default();
    for &r in radii {
        let f0 = f.value(r, 0.0);
        tr.violation(r, Some(0.0), f0.abs(), 0.0);
        monotone(&mut tr, amps, |t| f.value(r, t), true, |t| (r, Some(t)));
        for &t in amps {
            let odd = f.value(r, t) + f.value(r, -t);
            tr.violation(r, Some(t), odd.abs(), f.value(r, t));
            let lhs = (dim - 2.0) * f.value(r, t) * t;
            let rhs = 2.0 * dim * f.primitive(r, t) + 2.0 * r * opt(f.primitive_d_r(r, t));
            tr.violation(r, Some(t), lhs - rhs, lhs.abs().max(rhs.abs()));
        }
    }
    for &t in amps {
        monotone(&mut tr, radii, |r| f.value(r, t), false, |r| (r, Some(t)));
    }
    tr.finish(
        Hypothesis::F1,
        "f(r,0)=0, odd, non-increasing in r, increasing in t, (N-2)ft ≤ 2NF + 2rF_r",
    )
}

fn f2_combination(f: &dyn Nonlinearity, dim: f64, r: f64, t: f64) -> f64 {
    (1.0 + 4.0 / dim) * f.value(r, t) / t + 2.0 / dim * r * opt(f.d_r(r, t)) / t - f.d_t(r, t)
}

fn check_f2(
    f: &dyn Nonlinearity,
    dim: f64,
    radii: &[f64],
    amps: &[f64],
    primed: bool,
) -> HypothesisCheck {
    let mut tr = Tracker::default();
    for &t in amps {
        monotone(&mut tr, radii, |r| f2_combination(f, dim, r, t), primed, |r| (r, Some(t)));
    }
    for &r in radii {
        monotone(&mut tr, amps, |t| f2_combination(f, dim, r, t), !primed, |t| (r, Some(t)));
    }
    if primed {
        tr.finish(Hypothesis::F2Prime, "non-decreasing in r, decreasing in t")
    } else {
        tr.finish(Hypothesis::F2, "non-increasing in r, increasing in t")
    }
}

/// Local exponent `d log f / d log t` at amplitude `t`.
fn log_slope(f: &dyn Nonlinearity, r: f64, t: f64) -> f64 {
    let (a, b) = (f.value(r, t), f.value(r, 2.0 * t));
    (b / a).ln() / 2f64.ln()
}

fn check_f3(f: &dyn Nonlinearity, dim: usize, radii: &[f64]) -> HypothesisCheck {
    let mut tr = Tracker::default();
    let crit = critical_sobolev(dim);
    let (t0, t1) = (1e-6, 1e6);
    let r_ref = radii[radii.len() / 2];
    let p = log_slope(f, r_ref, t0) + 1.0;
    let q = log_slope(f, r_ref, t1) + 1.0;
    for (e, t) in [(p, t0), (q, t1)] {
        tr.violation(r_ref, Some(t), 2.0 - e, 2.0);
        tr.violation(r_ref, Some(t), e - crit, crit);
    }
    let r_far = *radii.last().unwrap();
    let r_near = radii[0];
    let m1 = f.value(r_far, t0) / t0.powf(p - 1.0);
    let m2 = f.value(r_near, t1) / t1.powf(q - 1.0);
    tr.violation(r_far, Some(t0), -m1, 0.0);
    tr.violation(r_near, Some(t1), -m2, 0.0);
    if !(m1.is_finite() && m2.is_finite()) {
        tr.violation(r_far, Some(t0), f64::INFINITY, 0.0);
    }
    tr.finish(
        Hypothesis::F3,
        format!("p ≈ {p:.4}, q ≈ {q:.4}, m1(∞) ≈ {m1:.4e}, m2(0) ≈ {m2:.4e}"),
    )
}

fn check_h1(v: &RadialFunction, dim: usize) -> HypothesisCheck {
    let mut tr = Tracker::default();
    if dim != 1 {
        return HypothesisCheck {
            hypothesis: Hypothesis::H1,
            verdict: Verdict::Inconclusive,
            witness: None,
            note: "stated for N = 1 only".into(),
        };
    }
    let far = v.eval(1e6);
    tr.violation(1e6, None, far.abs(), 0.0);
    let v0 = v.eval(0.0);
    tr.violation(0.0, None, v0, 0.0);
    if v0 == 0.0 {
        tr.violation(0.0, None, f64::INFINITY, 0.0);
    }
    tr.finish(Hypothesis::H1, "V → 0 at infinity, V(0) < 0")
}

fn check_h2(f: &dyn Nonlinearity, radii: &[f64], amps: &[f64]) -> HypothesisCheck {
    let mut tr = Tracker::default();
    for &r in radii {
        tr.violation(r, Some(0.0), f.value(r, 0.0).abs(), 0.0);
        tr.violation(r, Some(1e-8), f.d_t(r, 1e-8).abs() - 1e-6, 0.0);
        for &t in amps {
            let odd = f.value(r, t) + f.value(r, -t);
            tr.violation(r, Some(t), odd.abs(), f.value(r, t));
            let lhs = -f.value(r, t) * t;
            let rhs = 2.0 * f.primitive(r, t) + 2.0 * r * opt(f.primitive_d_r(r, t));
            tr.violation(r, Some(t), lhs - rhs, lhs.abs().max(rhs.abs()));
        }
    }
    tr.finish(Hypothesis::H2, "f odd, f_t → 0 at t = 0, -ft ≤ 2F + 2rF_r")
}

fn check_h3(
    f: &dyn Nonlinearity,
    v: Option<&RadialFunction>,
    radii: &[f64],
    amps: &[f64],
) -> HypothesisCheck {
    let mut tr = Tracker::default();
    for &r in radii {
        let dv = match v {
            Some(v) => opt(v.derivative(r)),
            None => 0.0,
        };
        for &t in amps {
            let fr = opt(f.d_r(r, t));
            tr.violation(r, Some(t), fr - dv * t, fr.abs());
            let (ft, fv) = (f.d_t(r, t) * t, f.value(r, t));
            tr.violation(r, Some(t), fv - ft, fv);
            if fv <= 0.0 {
                tr.violation(r, Some(t), f64::INFINITY, 0.0);
            }
        }
    }
    match v {
        Some(_) => tr.finish(Hypothesis::H3, "f_r - V't ≤ 0, f_t t > f > 0 (x₀ clause not sampled)"),
        None => tr.finish(Hypothesis::H3Prime, "f_r ≤ 0, f_t t > f > 0 (x₀ clause not sampled)"),
    }
}

fn check_h4(f: &dyn Nonlinearity, radii: &[f64]) -> HypothesisCheck {
    let mut tr = Tracker::default();
    let t0 = 1e-6;
    let mut a_min = f64::INFINITY;
    let mut sigma = f64::NAN;
    for &r in radii {
        let e = log_slope(f, r, t0);
        sigma = (e - 1.0) / 2.0;
        tr.violation(r, Some(t0), -sigma, 0.0);
        let a = f.value(r, t0) * 2f64.powf(sigma) / t0.powf(2.0 * sigma + 1.0);
        a_min = a_min.min(a);
    }
    tr.violation(radii[0], Some(t0), -a_min, 0.0);
    let r_far = *radii.last().unwrap();
    let (lo, hi) = (f.value(r_far, 1e3) / 1e3, f.value(r_far, 1e6) / 1e6);
    tr.violation(r_far, Some(1e6), 10.0 * lo - hi, lo);
    tr.finish(
        Hypothesis::H4,
        format!("σ ≈ {sigma:.4}, inf 𝒜 ≈ {a_min:.4e}, f/t growth {lo:.3e} → {hi:.3e}"),
    )
}

/// Evaluate every hypothesis on the sample lattice.
pub fn check_hypotheses(problem: &ProblemSpec, sample: &SampleBox) -> HypothesisReport {
    let radii = sample.radii();
    let amps = sample.amplitudes();
    let f = problem.nonlinearity();
    let dim = problem.dim() as f64;
    let (h_check, theta) = check_h(problem.weight(), &radii);
    let checks = vec![
        h_check,
        check_v(problem.potential(), &radii),
        check_f1(f, dim, &radii, &amps),
        check_f2(f, dim, &radii, &amps, false),
        check_f2(f, dim, &radii, &amps, true),
        check_f3(f, problem.dim(), &radii),
        check_h1(problem.potential(), problem.dim()),
        check_h2(f, &radii, &amps),
        check_h3(f, Some(problem.potential()), &radii, &amps),
        check_h3(f, None, &radii, &amps),
        check_h4(f, &radii),
    ];
    HypothesisReport {
        checks,
        theta_estimate: theta,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::problem::{CallableNonlinearity, RadialPreset};
    use std::sync::Arc;

    fn power(dim: usize, p: f64) -> ProblemSpec {
        ProblemSpec::nls_potential(dim, p, RadialFunction::zero(), RadialFunction::constant(1.0)).unwrap()
    }

    #[test]
    fn constant_weight_passes_h_with_zero_theta() {
        let rep = check_hypotheses(&power(1, 4.0), &SampleBox::default());
        assert_eq!(rep.verdict(Hypothesis::H), Some(Verdict::Pass));
        assert_eq!(rep.theta_estimate, Some(0.0));
    }

    #[test]
    fn algebraic_decay_theta() {
        for a in [0.25, 1.0, 1.5] {
            let h = RadialFunction::from_preset(&RadialPreset::AlgebraicDecay { a });
            let t = theta_estimate(&h).unwrap();
            assert!((t + 2.0 * a).abs() < 1e-9, "a = {a}: {t}");
        }
    }

    #[test]
    fn cubic_in_one_dimension() {
        let rep = check_hypotheses(&power(1, 4.0), &SampleBox::default());
        // (1+4)t² − 3t² = 2t² increasing in t, constant in r
        assert_eq!(rep.verdict(Hypothesis::F2), Some(Verdict::Pass));
        assert_eq!(rep.verdict(Hypothesis::F2Prime), Some(Verdict::Fail));
        assert_eq!(rep.verdict(Hypothesis::F1), Some(Verdict::Pass));
        assert_eq!(rep.verdict(Hypothesis::F3), Some(Verdict::Pass));
        assert_eq!(rep.verdict(Hypothesis::H2), Some(Verdict::Pass));
        assert_eq!(rep.verdict(Hypothesis::H3Prime), Some(Verdict::Pass));
        assert_eq!(rep.verdict(Hypothesis::H4), Some(Verdict::Pass));
        // V ≡ 0 has V(0) = 0, not < 0
        assert_eq!(rep.verdict(Hypothesis::H1), Some(Verdict::Fail));
    }

    #[test]
    fn supercritical_power_satisfies_f2_prime() {
        let rep = check_hypotheses(&power(1, 8.0), &SampleBox::default());
        assert_eq!(rep.verdict(Hypothesis::F2Prime), Some(Verdict::Pass));
        let f2 = rep.get(Hypothesis::F2).unwrap();
        assert_eq!(f2.verdict, Verdict::Fail);
        assert!(f2.witness.is_some());
    }

    #[test]
    fn well_potential_conditions() {
        let spec = ProblemSpec::nls_potential(
            1,
            4.0,
            RadialFunction::from_preset(&RadialPreset::Well { depth: 1.0 }),
            RadialFunction::constant(1.0),
        )
        .unwrap();
        let rep = check_hypotheses(&spec, &SampleBox::default());
        assert_eq!(rep.verdict(Hypothesis::V), Some(Verdict::Pass));
        assert_eq!(rep.verdict(Hypothesis::H1), Some(Verdict::Pass));
        assert_eq!(rep.verdict(Hypothesis::H3), Some(Verdict::Pass));
    }

    #[test]
    fn failures_carry_witnesses() {
        let rep = check_hypotheses(&power(3, 3.0), &SampleBox::default());
        for c in &rep.checks {
            if c.verdict == Verdict::Fail {
                assert!(c.witness.is_some(), "{:?}", c.hypothesis);
            }
        }
    }

    #[test]
    fn missing_derivatives_are_inconclusive() {
        let f = CallableNonlinearity {
            label: "t^3".into(),
            f: Arc::new(|_, t| t * t * t),
            f_t: Arc::new(|_, t| 3.0 * t * t),
            f_r: None,
            big_f: Arc::new(|_, t| t.powi(4) / 4.0),
            big_f_r: None,
            odd: true,
        };
        let spec = ProblemSpec::custom(1, RadialFunction::zero(), Arc::new(f), 4.0).unwrap();
        let rep = check_hypotheses(&spec, &SampleBox::default());
        assert_eq!(rep.verdict(Hypothesis::F1), Some(Verdict::Inconclusive));
        assert_eq!(rep.verdict(Hypothesis::F2), Some(Verdict::Inconclusive));
        let h = RadialFunction::new("gauss", |r: f64| (-r * r).exp());
        assert!(theta_estimate(&h).is_none());
    }
}
