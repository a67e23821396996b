use crate::error::{check_len, Error, Result};
use crate::problem::Model;

#[derive(Clone, Debug)]
pub struct NehariProjection {
    /// Scale factor `t(u)`.
    pub t: f64,
    /// `t(u) u`.
    pub u: Vec<f64>,
}

/// Scale `u` onto the Nehari set `⟨D_uΦ_λ(tu), tu⟩ = 0`.
pub fn nehari_project(model: &Model, u: &[f64], lambda: f64) -> Result<NehariProjection> {
    check_len(model.len(), u.len())?;
    if u.iter().all(|&x| x == 0.0) {
        return Err(Error::NotInNehariCone("u ≡ 0".into()));
    }
    let quad = model.kinetic(u) + model.potential_term(u) - lambda * model.l2_squared(u);
    if !(quad > 0.0) {
        return Err(Error::NotInNehariCone(format!(
            "quadratic part ⟨(A + V − λ)u, u⟩ = {quad:.3e} is not positive"
        )));
    }
    let f = model.problem().nonlinearity();
    let t = if let Some((p, h)) = f.as_weighted_power() {
        let denom = model.grid().integrate_with(u, |r, x| h.eval(r) * x.abs().powf(p));
        if !(denom > 0.0) {
            return Err(Error::NotInNehariCone("∫h|u|^p is not positive".into()));
        }
        (quad / denom).powf(1.0 / (p - 2.0))
    } else {
        // ψ(t) = quad − ∫f(r, t u) u / t changes sign once on (0, ∞)
        let psi = |t: f64| quad - model.grid().integrate_with(u, |r, x| f.value(r, t * x) * x) / t;
        let mut lo = 1e-8;
        if psi(lo) <= 0.0 {
            return Err(Error::NotInNehariCone("no sign change near t = 0".into()));
        }
        let mut hi = lo;
        while psi(hi) > 0.0 {
            lo = hi;
            hi *= 2.0;
            if hi > 1e12 {
                return Err(Error::NotInNehariCone("no positive root of the Nehari equation".into()));
            }
        }
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if psi(mid) > 0.0 {
                lo = mid;
            } else {
                hi = mid;
            }
            if hi - lo <= 1e-15 * hi {
                break;
            }
        }
        0.5 * (lo + hi)
    };
    Ok(NehariProjection {
        t,
        u: u.iter().map(|x| t * x).collect(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::RadialGrid;
    use crate::problem::{ProblemSpec, RadialFunction};

    fn cubic() -> Model {
        let spec = ProblemSpec::fractional_power(1.0, 1, 4.0, RadialFunction::constant(1.0)).unwrap();
        Model::new(&spec, &RadialGrid::whole_space(1, 4000, 30.0).unwrap()).unwrap()
    }

    #[test]
    fn projection_lands_on_nehari_set() {
        let m = cubic();
        let u = m.grid().sample(|x| (-x * x).exp());
        let proj = nehari_project(&m, &u, -1.0).unwrap();
        let again = nehari_project(&m, &proj.u, -1.0).unwrap();
        assert!((again.t - 1.0).abs() < 1e-12);
        assert!(m.nehari_functional(&proj.u, -1.0).abs() < 1e-10 * m.kinetic(&proj.u));
    }

    #[test]
    fn homogeneity_of_scale() {
        let m = cubic();
        let u = m.grid().sample(|x| (-x * x).exp());
        let a = nehari_project(&m, &u, -1.0).unwrap().t;
        let half: Vec<f64> = u.iter().map(|x| 0.5 * x).collect();
        let b = nehari_project(&m, &half, -1.0).unwrap().t;
        assert!((b - 2.0 * a).abs() < 1e-12 * b);
    }

    #[test]
    fn sech_profile_recovers_soliton_amplitude() {
        let m = cubic();
        let u = m.grid().sample(|x| 1.0 / x.cosh());
        let proj = nehari_project(&m, &u, -1.0).unwrap();
        assert!((proj.t - 2f64.sqrt()).abs() < 1e-5);
    }

    #[test]
    fn general_root_finder_matches_closed_form() {
        let m = cubic();
        let u = m.grid().sample(|x| (-x * x / 3.0).exp());
        let closed = nehari_project(&m, &u, -0.5).unwrap().t;
        let spec = ProblemSpec::appendix_a(1.0, 1, 4.0, 3.0).unwrap();
        let m2 = Model::new(&spec, m.grid()).unwrap();
        // positive u sees only the t^3 branch, identical to the cubic
        let root = nehari_project(&m2, &u, -0.5).unwrap().t;
        assert!((closed - root).abs() < 1e-10 * closed);
    }

    #[test]
    fn rejects_outside_cone() {
        let m = cubic();
        let u = m.grid().sample(|x| (-x * x).exp());
        assert!(matches!(nehari_project(&m, &u, 50.0), Err(Error::NotInNehariCone(_))));
        assert!(nehari_project(&m, &vec![0.0; m.len()], -1.0).is_err());
    }
}
