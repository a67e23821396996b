//! Problem families, their parameter ranges, and the discrete energy model.

mod hypotheses;
mod model;
mod nonlinearity;
mod radial;

use std::sync::Arc;

use serde::{Deserialize, Serialize};

pub use hypotheses::{
    check_hypotheses, theta_estimate, Hypothesis, HypothesisCheck, HypothesisReport, SampleBox,
    Verdict, Witness,
};
pub use model::Model;
pub use nonlinearity::{AsymmetricPower, CallableNonlinearity, Nonlinearity, TwoPowers, WeightedPower};
pub use radial::{RadialFunction, RadialPreset};

use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Family {
    /// `(-Δ)^s u = λu + h(|x|)|u|^{p-2}u` on the whole space.
    FractionalPower,
    /// `-Δu + V(|x|)u = λu + f(|x|, u)` on the whole space.
    PotentialGeneral,
    /// `-Δu = λu + |x|^{-k}|u|^{p-2}u` on the unit ball.
    BallInhomogeneous,
    /// Asymmetric power `t^{p-1}` / `|t|^{q-2}t`.
    Counterexample,
}

/// Serializable problem parameters, keyed by preset id.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ProblemParams {
    pub preset: String,
    #[serde(default = "one")]
    pub s: f64,
    #[serde(rename = "N")]
    pub dim: usize,
    pub p: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub q: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub k: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub weight: Option<RadialPreset>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub potential: Option<RadialPreset>,
}

fn one() -> f64 {
    1.0
}

impl ProblemParams {
    pub fn new(preset: &str, s: f64, dim: usize, p: f64) -> Self {
        Self {
            preset: preset.to_string(),
            s,
            dim,
            p,
            q: None,
            k: None,
            weight: None,
            potential: None,
        }
    }
}

pub const PRESET_IDS: [&str; 5] = [
    "frac_power",
    "nls_potential",
    "ball_hardy",
    "appendixA",
    "cubic_quintic",
];

#[derive(Clone, Debug)]
pub struct ProblemSpec {
    family: Family,
    params: ProblemParams,
    weight: RadialFunction,
    potential: RadialFunction,
    nonlinearity: Arc<dyn Nonlinearity>,
    theta: f64,
}

/// Sobolev exponent `2N/(N-2)`, infinite for `N ≤ 2`.
pub fn critical_sobolev(dim: usize) -> f64 {
    if dim <= 2 {
        f64::INFINITY
    } else {
        2.0 * dim as f64 / (dim as f64 - 2.0)
    }
}

fn check_order(s: f64, dim: usize) -> Result<()> {
    if !(s > 0.0 && s <= 1.0) {
        return Err(Error::Validation(format!("order s must lie in (0,1], got {s}")));
    }
    if s < 1.0 && dim != 1 {
        return Err(Error::Validation(format!(
            "fractional order s = {s} is implemented for N = 1 only, got N = {dim}"
        )));
    }
    if dim == 0 {
        return Err(Error::Validation("dimension must be at least 1".into()));
    }
    Ok(())
}

impl ProblemSpec {
    /// `(-Δ)^s u = λu + h|u|^{p-2}u` with `2 < p < 2 + (2θ + 4s)/N`.
    pub fn fractional_power(s: f64, dim: usize, p: f64, weight: RadialFunction) -> Result<Self> {
        check_order(s, dim)?;
        let theta = if weight.is_constant() {
            0.0
        } else {
            theta_estimate(&weight).ok_or_else(|| {
                Error::Validation("weight h needs a derivative to estimate θ".into())
            })?
        };
        if (1..64).any(|i| weight.eval(i as f64 * 0.25) <= 0.0) {
            return Err(Error::Validation("weight h must be positive".into()));
        }
        let upper = 2.0 + (2.0 * theta + 4.0 * s) / dim as f64;
        if !(p > 2.0 && p < upper) {
            return Err(Error::Validation(format!(
                "frac_power requires 2 < p < 2 + (2θ+4s)/N = {upper:.6}, got p = {p} (θ = {theta:.6})"
            )));
        }
        let mut params = ProblemParams::new("frac_power", s, dim, p);
        params.weight = weight.preset().cloned();
        Ok(Self {
            family: Family::FractionalPower,
            params,
            nonlinearity: Arc::new(WeightedPower { p, weight: weight.clone() }),
            weight,
            potential: RadialFunction::zero(),
            theta,
        })
    }

    /// `-Δu + Vu = λu + h|u|^{p-2}u`, any `p > 2` below the Sobolev exponent.
    pub fn nls_potential(
        dim: usize,
        p: f64,
        potential: RadialFunction,
        weight: RadialFunction,
    ) -> Result<Self> {
        check_order(1.0, dim)?;
        let crit = critical_sobolev(dim);
        if !(p > 2.0 && p < crit) {
            return Err(Error::Validation(format!(
                "nls_potential requires 2 < p < 2* = {crit}, got p = {p}"
            )));
        }
        let theta = theta_estimate(&weight).unwrap_or(0.0);
        let mut params = ProblemParams::new("nls_potential", 1.0, dim, p);
        params.weight = weight.preset().cloned();
        params.potential = potential.preset().cloned();
        Ok(Self {
            family: Family::PotentialGeneral,
            params,
            nonlinearity: Arc::new(WeightedPower { p, weight: weight.clone() }),
            weight,
            potential,
            theta,
        })
    }

    /// `-Δu = λu + |x|^{-k}|u|^{p-2}u` on the unit ball.
    pub fn ball_hardy(dim: usize, k: f64, p: f64) -> Result<Self> {
        if dim < 3 {
            return Err(Error::Validation(format!("ball_hardy requires N ≥ 3, got N = {dim}")));
        }
        if !(k > 0.0 && k < 2.0) {
            return Err(Error::Validation(format!("ball_hardy requires 0 < k < 2, got k = {k}")));
        }
        let upper = 2.0 + 2.0 * (2.0 - k) / dim as f64;
        if !(p > 2.0 && p < upper) {
            return Err(Error::Validation(format!(
                "ball_hardy requires 2 < p < 2 + 2(2-k)/N = {upper:.6}, got p = {p}"
            )));
        }
        let weight = RadialFunction::from_preset(&RadialPreset::InversePower { k });
        let mut params = ProblemParams::new("ball_hardy", 1.0, dim, p);
        params.k = Some(k);
        Ok(Self {
            family: Family::BallInhomogeneous,
            params,
            nonlinearity: Arc::new(WeightedPower { p, weight: weight.clone() }),
            weight,
            potential: RadialFunction::zero(),
            theta: -k,
        })
    }

    /// Asymmetric power nonlinearity with `2 < p ≠ q < 2 + 4s/N`.
    pub fn appendix_a(s: f64, dim: usize, p: f64, q: f64) -> Result<Self> {
        check_order(s, dim)?;
        if p == q {
            return Err(Error::Validation(format!("appendixA requires p ≠ q, got p = q = {p}")));
        }
        let upper = 2.0 + 4.0 * s / dim as f64;
        for (name, e) in [("p", p), ("q", q)] {
            if !(e > 2.0 && e < upper) {
                return Err(Error::Validation(format!(
                    "appendixA requires 2 < {name} < 2 + 4s/N = {upper:.6}, got {name} = {e}"
                )));
            }
        }
        let mut params = ProblemParams::new("appendixA", s, dim, p);
        params.q = Some(q);
        Ok(Self {
            family: Family::Counterexample,
            params,
            nonlinearity: Arc::new(AsymmetricPower { p, q }),
            weight: RadialFunction::constant(1.0),
            potential: RadialFunction::zero(),
            theta: 0.0,
        })
    }

    /// Focusing cubic, defocusing quintic: `f = t³ - t⁵`.
    pub fn cubic_quintic(dim: usize) -> Result<Self> {
        check_order(1.0, dim)?;
        let mut params = ProblemParams::new("cubic_quintic", 1.0, dim, 4.0);
        params.q = Some(6.0);
        Ok(Self {
            family: Family::PotentialGeneral,
            params,
            nonlinearity: Arc::new(TwoPowers::cubic_quintic(1.0, -1.0)),
            weight: RadialFunction::constant(1.0),
            potential: RadialFunction::zero(),
            theta: 0.0,
        })
    }

    /// Whole-space problem with a user-supplied nonlinearity.
    pub fn custom(
        dim: usize,
        potential: RadialFunction,
        nonlinearity: Arc<dyn Nonlinearity>,
        nominal_p: f64,
    ) -> Result<Self> {
        check_order(1.0, dim)?;
        Ok(Self {
            family: Family::PotentialGeneral,
            params: ProblemParams::new("custom", 1.0, dim, nominal_p),
            weight: RadialFunction::constant(1.0),
            potential,
            nonlinearity,
            theta: 0.0,
        })
    }

    pub fn from_params(params: &ProblemParams) -> Result<Self> {
        let weight = params
            .weight
            .as_ref()
            .map(RadialFunction::from_preset)
            .unwrap_or_else(|| RadialFunction::constant(1.0));
        let potential = params
            .potential
            .as_ref()
            .map(RadialFunction::from_preset)
            .unwrap_or_else(RadialFunction::zero);
        match params.preset.as_str() {
            "frac_power" => Self::fractional_power(params.s, params.dim, params.p, weight),
            "nls_potential" => {
                if params.s != 1.0 {
                    return Err(Error::Validation("nls_potential requires s = 1".into()));
                }
                Self::nls_potential(params.dim, params.p, potential, weight)
            }
            "ball_hardy" => {
                let k = params
                    .k
                    .ok_or_else(|| Error::Validation("ball_hardy needs k".into()))?;
                if params.s != 1.0 {
                    return Err(Error::Validation("ball_hardy requires s = 1".into()));
                }
                Self::ball_hardy(params.dim, k, params.p)
            }
            "appendixA" => {
                let q = params
                    .q
                    .ok_or_else(|| Error::Validation("appendixA needs q".into()))?;
                Self::appendix_a(params.s, params.dim, params.p, q)
            }
            "cubic_quintic" => Self::cubic_quintic(params.dim),
            other => Err(Error::Validation(format!(
                "unknown preset '{other}', expected one of {PRESET_IDS:?}"
            ))),
        }
    }

    pub fn family(&self) -> Family {
        self.family
    }

    pub fn params(&self) -> &ProblemParams {
        &self.params
    }

    pub fn id(&self) -> &str {
        &self.params.preset
    }

    pub fn order(&self) -> f64 {
        self.params.s
    }

    pub fn dim(&self) -> usize {
        self.params.dim
    }

    pub fn p(&self) -> f64 {
        self.params.p
    }

    pub fn q(&self) -> Option<f64> {
        self.params.q
    }

    pub fn k(&self) -> Option<f64> {
        self.params.k
    }

    pub fn weight(&self) -> &RadialFunction {
        &self.weight
    }

    pub fn potential(&self) -> &RadialFunction {
        &self.potential
    }

    pub fn nonlinearity(&self) -> &dyn Nonlinearity {
        self.nonlinearity.as_ref()
    }

    pub fn theta(&self) -> f64 {
        self.theta
    }

    pub fn is_ball(&self) -> bool {
        self.family == Family::BallInhomogeneous
    }

    pub fn has_potential(&self) -> bool {
        !self.potential.is_zero()
    }

    /// Exponent of the growth that decides boundedness of `E` on `S_c`.
    fn leading_power(&self) -> f64 {
        match self.params.q {
            Some(q) if self.family == Family::Counterexample => self.params.p.max(q),
            _ => self.params.p,
        }
    }

    /// Whether `E` is bounded below on `S_c`.
    pub fn is_mass_subcritical(&self) -> bool {
        let dim = self.params.dim as f64;
        let crit = 2.0 + (2.0 * self.theta.min(0.0) + 4.0 * self.params.s) / dim;
        match self.family {
            Family::BallInhomogeneous => true,
            _ => self.leading_power() < crit,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ranges_are_enforced() {
        assert!(ProblemSpec::ball_hardy(3, 1.0, 2.5).is_ok());
        assert!(ProblemSpec::ball_hardy(3, 1.0, 3.0).is_err());
        assert!(ProblemSpec::ball_hardy(2, 1.0, 2.5).is_err());
        assert!(ProblemSpec::ball_hardy(3, 2.0, 2.5).is_err());
        assert!(ProblemSpec::fractional_power(1.0, 1, 4.0, RadialFunction::constant(1.0)).is_ok());
        assert!(ProblemSpec::fractional_power(1.0, 1, 6.0, RadialFunction::constant(1.0)).is_err());
        assert!(ProblemSpec::fractional_power(0.5, 1, 3.9, RadialFunction::constant(1.0)).is_ok());
        assert!(ProblemSpec::fractional_power(0.5, 2, 2.5, RadialFunction::constant(1.0)).is_err());
        assert!(ProblemSpec::appendix_a(1.0, 1, 4.0, 4.0).is_err());
        assert!(ProblemSpec::appendix_a(1.0, 1, 4.0, 3.0).is_ok());
        assert!(ProblemSpec::nls_potential(3, 6.0, RadialFunction::zero(), RadialFunction::constant(1.0)).is_err());
    }

    #[test]
    fn weighted_range_uses_theta() {
        // h = (1+r²)^{-1/4}: θ = -1/2, N = 2, s = 1 → p < 3.5
        let h = RadialFunction::from_preset(&RadialPreset::AlgebraicDecay { a: 0.25 });
        let spec = ProblemSpec::fractional_power(1.0, 2, 3.0, h.clone()).unwrap();
        assert!((spec.theta() + 0.5).abs() < 1e-6);
        assert!(ProblemSpec::fractional_power(1.0, 2, 3.6, h).is_err());
    }

    #[test]
    fn params_round_trip() {
        let mut params = ProblemParams::new("appendixA", 1.0, 1, 4.0);
        params.q = Some(3.0);
        let json = serde_json::to_string(&params).unwrap();
        let back: ProblemParams = serde_json::from_str(&json).unwrap();
        assert_eq!(back, params);
        let spec = ProblemSpec::from_params(&back).unwrap();
        assert_eq!(spec.family(), Family::Counterexample);
        assert!(ProblemSpec::from_params(&ProblemParams::new("nope", 1.0, 1, 4.0)).is_err());
    }

    #[test]
    fn supercritical_detection() {
        let p8 = ProblemSpec::nls_potential(1, 8.0, RadialFunction::zero(), RadialFunction::constant(1.0)).unwrap();
        assert!(!p8.is_mass_subcritical());
        let p4 = ProblemSpec::fractional_power(1.0, 1, 4.0, RadialFunction::constant(1.0)).unwrap();
        assert!(p4.is_mass_subcritical());
    }
}
