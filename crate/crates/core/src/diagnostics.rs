//! Residuals of the integral identities satisfied by solutions, tangents and
//! least-energy curves.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{sphere_area, RadialGrid};
use crate::mass_min::{minimize_on_sphere, MassCurve, MinimizeOptions};
use crate::problem::{Family, Model, ProblemSpec, RadialFunction, Verdict};
use crate::solve::Solution;

pub const RESIDUAL_FLOOR: f64 = 1e-14;
pub const POHOZAEV_WHOLE_TOL: f64 = 1e-6;
pub const POHOZAEV_FRAC_TOL: f64 = 1e-5;
pub const POHOZAEV_BALL_TOL: f64 = 1e-4;
pub const B8_TOL: f64 = 1e-4;
pub const BOUNDARY_TOL: f64 = 1e-3;
pub const INTERIOR_TOL: f64 = 1e-6;
pub const NEHARI_TOL: f64 = 1e-6;
/// Slack on the GN inequality for the discretization error of the constant.
pub const GN_TOL: f64 = 1e-3;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum IdentityId {
    PohozaevWhole,
    PohozaevFrac55,
    PohozaevFrac56,
    PohozaevBallD3,
    IdentityB8,
    IdentityD5,
    IdentityD8,
    IdentityD10,
    Gn52,
    NehariC1,
}

impl IdentityId {
    pub fn as_str(self) -> &'static str {
        match self {
            IdentityId::PohozaevWhole => "pohozaev_whole",
            IdentityId::PohozaevFrac55 => "pohozaev_frac_55",
            IdentityId::PohozaevFrac56 => "pohozaev_frac_56",
            IdentityId::PohozaevBallD3 => "pohozaev_ball_D3",
            IdentityId::IdentityB8 => "identity_B8",
            IdentityId::IdentityD5 => "identity_D5",
            IdentityId::IdentityD8 => "identity_D8",
            IdentityId::IdentityD10 => "identity_D10",
            IdentityId::Gn52 => "gn_52",
            IdentityId::NehariC1 => "nehari_C1",
        }
    }
}

impl std::fmt::Display for IdentityId {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct IdentityReport {
    pub identity_id: IdentityId,
    pub lhs: f64,
    pub rhs: f64,
    pub rel_residual: f64,
    pub tolerance: f64,
    pub pass: bool,
    pub verdict: Verdict,
    /// `lhs / rhs` for inequalities.
    pub ratio: Option<f64>,
    pub note: Option<String>,
}

/// `|l − r| / max(|l|, |r|, 1e-14)`.
pub fn rel_residual(lhs: f64, rhs: f64) -> f64 {
    (lhs - rhs).abs() / lhs.abs().max(rhs.abs()).max(RESIDUAL_FLOOR)
}

impl IdentityReport {
    pub fn equality(id: IdentityId, lhs: f64, rhs: f64, tolerance: f64) -> Self {
        let rel = rel_residual(lhs, rhs);
        let pass = rel < tolerance;
        Self {
            identity_id: id,
            lhs,
            rhs,
            rel_residual: rel,
            tolerance,
            pass,
            verdict: if pass { Verdict::Pass } else { Verdict::Fail },
            ratio: None,
            note: None,
        }
    }

    /// `lhs ≤ rhs` up to `tolerance · max(|lhs|, |rhs|)`.
    pub fn upper_bound(id: IdentityId, lhs: f64, rhs: f64, tolerance: f64) -> Self {
        let scale = lhs.abs().max(rhs.abs()).max(RESIDUAL_FLOOR);
        let pass = lhs <= rhs + tolerance * scale;
        Self {
            identity_id: id,
            lhs,
            rhs,
            rel_residual: rel_residual(lhs, rhs),
            tolerance,
            pass,
            verdict: if pass { Verdict::Pass } else { Verdict::Fail },
            ratio: (rhs != 0.0).then(|| lhs / rhs),
            note: None,
        }
    }

    pub fn inconclusive(id: IdentityId, note: impl Into<String>) -> Self {
        Self {
            identity_id: id,
            lhs: f64::NAN,
            rhs: f64::NAN,
            rel_residual: f64::NAN,
            tolerance: f64::NAN,
            pass: false,
            verdict: Verdict::Inconclusive,
            ratio: None,
            note: Some(note.into()),
        }
    }

    pub fn with_note(mut self, note: impl Into<String>) -> Self {
        self.note = Some(note.into());
        self
    }
}

fn check_vec(model: &Model, v: &[f64]) -> Result<()> {
    crate::error::check_len(model.len(), v.len())?;
    crate::error::check_finite(v)
}

struct Moments {
    /// `∫u²`
    mass: f64,
    kinetic: f64,
    /// `∫h|u|^p`
    power: f64,
    /// `∫h' r |u|^p`
    weight_moment: Option<f64>,
}

fn weighted_moments(model: &Model, u: &[f64]) -> Moments {
    let spec = model.problem();
    let p = spec.p();
    let h = spec.weight();
    let grid = model.grid();
    Moments {
        mass: model.l2_squared(u),
        kinetic: model.kinetic(u),
        power: grid.integrate_with(u, |r, x| h.eval(r) * x.abs().powf(p)),
        weight_moment: h
            .has_derivative()
            .then(|| grid.integrate_with(u, |r, x| h.derivative(r).unwrap() * r * x.abs().powf(p))),
    }
}

/// Whole-space Pohozaev identity for `−Δu + Vu = λu + f(|x|, u)`.
fn pohozaev_classical(model: &Model, sol: &Solution) -> IdentityReport {
    let spec = model.problem();
    let grid = model.grid();
    let n = spec.dim() as f64;
    let f = spec.nonlinearity();
    let u = &sol.u;
    let id = IdentityId::PohozaevWhole;
    let big_f = grid.integrate_with(u, |r, x| f.primitive(r, x));
    let Some(big_f_r) = f.primitive_d_r(1.0, 1.0).map(|_| {
        grid.integrate_with(u, |r, x| r * f.primitive_d_r(r, x).unwrap())
    }) else {
        return IdentityReport::inconclusive(id, "nonlinearity has no radial derivative");
    };
    if !spec.has_potential() {
        // 2λ∫u² = ∫((N−2) f u − 2N F − 2r F_r)
        let fu = grid.integrate_with(u, |r, x| f.value(r, x) * x);
        let lhs = 2.0 * sol.lambda * model.l2_squared(u);
        let rhs = (n - 2.0) * fu - 2.0 * n * big_f - 2.0 * big_f_r;
        return IdentityReport::equality(id, lhs, rhs, POHOZAEV_WHOLE_TOL);
    }
    let v = spec.potential();
    if !v.has_derivative() {
        return IdentityReport::inconclusive(id, "potential has no derivative");
    }
    let vu = grid.integrate_with(u, |r, x| v.eval(r) * x * x);
    let rvu = grid.integrate_with(u, |r, x| r * v.derivative(r).unwrap() * x * x);
    let lhs = 0.5 * (n - 2.0) * model.kinetic(u) + 0.5 * n * vu + 0.5 * rvu;
    let rhs = 0.5 * sol.lambda * n * model.l2_squared(u) + n * big_f + big_f_r;
    IdentityReport::equality(id, lhs, rhs, POHOZAEV_WHOLE_TOL)
}

/// The two weighted-power identities obtained from Pohozaev and Nehari.
fn pohozaev_weighted(model: &Model, sol: &Solution) -> Vec<IdentityReport> {
    let spec = model.problem();
    let (n, s, p) = (spec.dim() as f64, spec.order(), spec.p());
    let mo = weighted_moments(model, &sol.u);
    let Some(hm) = mo.weight_moment else {
        return vec![
            IdentityReport::inconclusive(IdentityId::PohozaevFrac55, "weight has no derivative"),
            IdentityReport::inconclusive(IdentityId::PohozaevFrac56, "weight has no derivative"),
        ];
    };
    let tol = if s == 1.0 { POHOZAEV_WHOLE_TOL } else { POHOZAEV_FRAC_TOL };
    let l55 = -2.0 * s * sol.lambda * mo.mass;
    let r55 = (2.0 * n / p - (n - 2.0 * s)) * mo.power + 2.0 / p * hm;
    let l56 = 2.0 * s * mo.kinetic;
    let r56 = (p - 2.0) / p * n * mo.power - 2.0 / p * hm;
    vec![
        IdentityReport::equality(IdentityId::PohozaevFrac55, l55, r55, tol),
        IdentityReport::equality(IdentityId::PohozaevFrac56, l56, r56, tol),
    ]
}

/// Pohozaev identity on `B_1` with the boundary flux `½∫_{∂B_1}|∂_n u|²`.
fn pohozaev_ball(model: &Model, sol: &Solution) -> IdentityReport {
    let spec = model.problem();
    let grid = model.grid();
    let n = spec.dim() as f64;
    let (p, k) = (spec.p(), spec.k().unwrap_or(0.0));
    let u = &sol.u;
    let du = grid.boundary_derivative(u);
    let power = grid.integrate_with(u, |r, x| r.powf(-k) * x.abs().powf(p));
    let lhs = 0.5 * (n - 2.0) * model.kinetic(u) + 0.5 * sphere_area(spec.dim()) * du * du;
    let rhs = 0.5 * sol.lambda * n * model.l2_squared(u) + (n - k) / p * power;
    IdentityReport::equality(IdentityId::PohozaevBallD3, lhs, rhs, POHOZAEV_BALL_TOL)
}

/// Every dilation identity that applies to the problem family.
pub fn pohozaev_residual(model: &Model, sol: &Solution) -> Result<Vec<IdentityReport>> {
    check_vec(model, &sol.u)?;
    let spec = model.problem();
    if spec.is_ball() {
        return Ok(vec![pohozaev_ball(model, sol)]);
    }
    let mut out = Vec::new();
    if spec.order() == 1.0 {
        out.push(pohozaev_classical(model, sol));
    }
    if spec.family() == Family::FractionalPower {
        out.extend(pohozaev_weighted(model, sol));
    }
    Ok(out)
}

/// `∫((N+4)/2 f/u + r f_r/u − (N/2) f_t − (2V + rV')) u v = −2λ∫uv`.
pub fn identity_b8_check(model: &Model, sol: &Solution, v: &[f64]) -> Result<IdentityReport> {
    check_vec(model, &sol.u)?;
    check_vec(model, v)?;
    let spec = model.problem();
    if spec.is_ball() || spec.order() != 1.0 {
        return Err(Error::Validation("identity B8 applies to whole-space problems with s = 1".into()));
    }
    let id = IdentityId::IdentityB8;
    let n = spec.dim() as f64;
    let f = spec.nonlinearity();
    if f.d_r(1.0, 1.0).is_none() {
        return Ok(IdentityReport::inconclusive(id, "nonlinearity has no radial derivative"));
    }
    let pot = spec.potential();
    if spec.has_potential() && !pot.has_derivative() {
        return Ok(IdentityReport::inconclusive(id, "potential has no derivative"));
    }
    let grid = model.grid();
    let mut lhs = 0.0;
    for (((&r, &w), &x), &vi) in grid.nodes().iter().zip(grid.weights()).zip(&sol.u).zip(v) {
        let ft = f.d_t(r, x);
        let (f_over_u, fr_over_u) = if x != 0.0 {
            (f.value(r, x) / x, f.d_r(r, x).unwrap() / x)
        } else {
            (ft, 0.0)
        };
        let vterm = 2.0 * pot.eval(r) + r * pot.derivative(r).unwrap_or(0.0);
        let coef = 0.5 * (n + 4.0) * f_over_u + r * fr_over_u - 0.5 * n * ft - vterm;
        lhs += w * coef * x * vi;
    }
    let rhs = -2.0 * sol.lambda * grid.inner(&sol.u, v);
    Ok(IdentityReport::equality(id, lhs, rhs, B8_TOL))
}

/// Ball identities for `(u, v)` with `v = ∂_λ u`: the boundary flux identity
/// `ω_N u'(1) v'(1) = (N/2 − (2−k)/(p−2))∫u² + 2λ∫uv` together with its
/// ingredients. The `2λ∫uv` terms vanish on the locus `∫uv = 0`.
pub fn identity_d8_check(model: &Model, sol: &Solution, v: &[f64]) -> Result<Vec<IdentityReport>> {
    check_vec(model, &sol.u)?;
    check_vec(model, v)?;
    let spec = model.problem();
    if !spec.is_ball() {
        return Err(Error::BallOnly("identity D8".into()));
    }
    let grid = model.grid();
    let u = &sol.u;
    let n = spec.dim() as f64;
    let (p, k) = (spec.p(), spec.k().unwrap_or(0.0));
    let lambda = sol.lambda;
    let mass = model.l2_squared(u);
    let uv = grid.inner(u, v);
    let j = grid
        .nodes()
        .iter()
        .zip(grid.weights())
        .zip(u)
        .zip(v)
        .map(|(((&r, &w), &x), &vi)| w * r.powf(-k) * x.abs().powf(p - 2.0) * x * vi)
        .sum::<f64>();
    let flux = sphere_area(spec.dim()) * grid.boundary_derivative(u) * grid.boundary_derivative(v);
    let locus = format!("∫uv = {uv:.6e}; printed form assumes ∫uv = 0");
    Ok(vec![
        IdentityReport::equality(
            IdentityId::IdentityD5,
            flux,
            0.5 * n * mass + 2.0 * lambda * uv + (2.0 - k) * j,
            BOUNDARY_TOL,
        )
        .with_note(locus.clone()),
        IdentityReport::equality(
            IdentityId::IdentityD8,
            flux,
            (0.5 * n - (2.0 - k) / (p - 2.0)) * mass + 2.0 * lambda * uv,
            BOUNDARY_TOL,
        )
        .with_note(locus),
        IdentityReport::equality(IdentityId::IdentityD10, (2.0 - p) * j, mass, INTERIOR_TOL),
    ])
}

fn gn_exponents(spec: &ProblemSpec) -> (f64, f64) {
    let (n, s, p) = (spec.dim() as f64, spec.order(), spec.p());
    let b = n * (p - 2.0) / (4.0 * s);
    (p / 2.0 - b, b)
}

/// `∫|u|^p / ((∫u²)^{p/2 − N(p−2)/4s} K^{N(p−2)/4s})`.
pub fn gn_ratio(model: &Model, u: &[f64]) -> f64 {
    let (a, b) = gn_exponents(model.problem());
    let p = model.problem().p();
    let num = model.grid().integrate_with(u, |_, x| x.abs().powf(p));
    let den = model.l2_squared(u).powf(a) * model.kinetic(u).powf(b);
    if den == 0.0 {
        0.0
    } else {
        num / den
    }
}

/// Sharp Gagliardo–Nirenberg constant estimated from pure-power minimizers on
/// `grid` and on the grid with half the nodes, Richardson-extrapolated.
pub fn gn_constant_estimate(s: f64, dim: usize, p: f64, grid: &RadialGrid) -> Result<f64> {
    let spec = ProblemSpec::fractional_power(s, dim, p, RadialFunction::constant(1.0))?;
    if !spec.is_mass_subcritical() {
        return Err(Error::Unbounded(format!("p = {p} is not mass-subcritical")));
    }
    let coarse = grid.with_nodes(grid.len() / 2)?;
    let opts = MinimizeOptions { starts: 2, compute_morse: false, ..Default::default() };
    let best = |g: &RadialGrid| -> Result<f64> {
        let model = Model::new(&spec, g)?;
        let mut best = 0.0f64;
        for c in [0.5, 1.0, 2.0] {
            let res = minimize_on_sphere(&model, c, &opts)?;
            best = best.max(gn_ratio(&model, &res.u));
        }
        Ok(best)
    };
    let (fine, coarse) = (best(grid)?, best(&coarse)?);
    Ok((4.0 * fine - coarse) / 3.0)
}

/// `∫h|u|^p ≤ C ‖h‖_∞ (2c)^{p/2 − N(p−2)/4s} K^{N(p−2)/4s}` with `2c = ∫u²`.
pub fn gn_coercivity_check(model: &Model, u: &[f64], constant: f64) -> Result<IdentityReport> {
    check_vec(model, u)?;
    if !(constant > 0.0 && constant.is_finite()) {
        return Err(Error::InvalidArgument(format!("GN constant must be positive, got {constant}")));
    }
    let spec = model.problem();
    let (a, b) = gn_exponents(spec);
    let p = spec.p();
    let h = spec.weight();
    let grid = model.grid();
    let h_sup = grid.nodes().iter().map(|&r| h.eval(r).abs()).fold(0.0f64, f64::max);
    let lhs = grid.integrate_with(u, |r, x| h.eval(r) * x.abs().powf(p));
    let rhs = constant * h_sup * model.l2_squared(u).powf(a) * model.kinetic(u).powf(b);
    Ok(IdentityReport::upper_bound(IdentityId::Gn52, lhs, rhs, GN_TOL))
}

/// Cubic Hermite interpolation of `m` using `m' = λ` at the samples.
pub fn interpolate_m(curve: &MassCurve, c: f64) -> Option<f64> {
    let s = &curve.samples;
    if let Some(hit) = s.iter().find(|x| (x.c - c).abs() <= 1e-12 * c.abs().max(1.0)) {
        return Some(hit.m);
    }
    let i = s.windows(2).position(|w| w[0].c <= c && c <= w[1].c)?;
    let (a, b) = (&s[i], &s[i + 1]);
    let dc = b.c - a.c;
    let t = (c - a.c) / dc;
    let (t2, t3) = (t * t, t * t * t);
    Some(
        (2.0 * t3 - 3.0 * t2 + 1.0) * a.m
            + (t3 - 2.0 * t2 + t) * dc * a.lambda
            + (-2.0 * t3 + 3.0 * t2) * b.m
            + (t3 - t2) * dc * b.lambda,
    )
}

/// `Φ_λ(u) ≥ m(c) − λc` with `c = Q(u)`; equality marks a normalized ground state.
pub fn nehari_bound_check(model: &Model, sol: &Solution, curve: &MassCurve) -> Result<IdentityReport> {
    check_vec(model, &sol.u)?;
    let id = IdentityId::NehariC1;
    let c = model.mass(&sol.u);
    let Some(m) = interpolate_m(curve, c) else {
        return Ok(IdentityReport::inconclusive(id, format!("c = {c} outside the curve range")));
    };
    let lhs = model.energy(&sol.u)? - sol.lambda * c;
    let rhs = m - sol.lambda * c;
    let scale = lhs.abs().max(rhs.abs()).max(RESIDUAL_FLOOR);
    let rel = rel_residual(lhs, rhs);
    let pass = lhs >= rhs - NEHARI_TOL * scale;
    let note = if rel < NEHARI_TOL { "equality: normalized ground state" } else { "strict inequality" };
    Ok(IdentityReport {
        identity_id: id,
        lhs,
        rhs,
        rel_residual: rel,
        tolerance: NEHARI_TOL,
        pass,
        verdict: if pass { Verdict::Pass } else { Verdict::Fail },
        ratio: (rhs != 0.0).then(|| lhs / rhs),
        note: Some(note.into()),
    })
}

/// Identity reports for a converged solution and (optionally) its tangent.
pub fn applicable_identities(model: &Model, sol: &Solution, tangent: Option<&[f64]>) -> Result<Vec<IdentityReport>> {
    let mut out = pohozaev_residual(model, sol)?;
    if let Some(v) = tangent {
        let spec = model.problem();
        if spec.is_ball() {
            out.extend(identity_d8_check(model, sol, v)?);
        } else if spec.order() == 1.0 {
            out.push(identity_b8_check(model, sol, v)?);
        }
    }
    Ok(out)
}
