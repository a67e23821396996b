//! Preconditioned MINRES for symmetric (possibly indefinite) systems.

pub(crate) struct MinresOutcome {
    pub x: Vec<f64>,
    pub iterations: usize,
    pub converged: bool,
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Solve `A x = b` with a symmetric positive definite preconditioner `P`
/// (`precond` applies `P⁻¹`). Stops once the preconditioned residual
/// estimate drops below `rtol` times its initial value.
pub(crate) fn minres<A, P>(apply: A, precond: P, b: &[f64], rtol: f64, max_iter: usize) -> MinresOutcome
where
    A: Fn(&[f64]) -> Vec<f64>,
    P: Fn(&[f64]) -> Vec<f64>,
{
    let n = b.len();
    let mut x = vec![0.0; n];
    let mut r1 = b.to_vec();
    let mut y = precond(&r1);
    let beta1 = dot(&r1, &y);
    if !(beta1 > 0.0) {
        return MinresOutcome {
            x,
            iterations: 0,
            converged: beta1 == 0.0,
        };
    }
    let beta1 = beta1.sqrt();
    let mut r2 = r1.clone();
    let (mut oldb, mut beta) = (0.0, beta1);
    let (mut dbar, mut epsln, mut phibar) = (0.0, 0.0, beta1);
    let (mut cs, mut sn) = (-1.0, 0.0);
    let mut w = vec![0.0; n];
    let mut w2 = vec![0.0; n];
    for itn in 1..=max_iter {
        let v: Vec<f64> = y.iter().map(|t| t / beta).collect();
        y = apply(&v);
        if itn >= 2 {
            let c = beta / oldb;
            y.iter_mut().zip(&r1).for_each(|(a, r)| *a -= c * r);
        }
        let alfa = dot(&v, &y);
        let c = alfa / beta;
        y.iter_mut().zip(&r2).for_each(|(a, r)| *a -= c * r);
        r1 = std::mem::replace(&mut r2, y);
        y = precond(&r2);
        oldb = beta;
        let bb = dot(&r2, &y);
        if bb < 0.0 {
            break;
        }
        beta = bb.sqrt();
        let oldeps = epsln;
        let delta = cs * dbar + sn * alfa;
        let gbar = sn * dbar - cs * alfa;
        epsln = sn * beta;
        dbar = -cs * beta;
        let gamma = gbar.hypot(beta).max(f64::EPSILON);
        cs = gbar / gamma;
        sn = beta / gamma;
        let phi = cs * phibar;
        phibar *= sn;
        let w1 = std::mem::replace(&mut w2, std::mem::take(&mut w));
        w = v
            .iter()
            .zip(w1.iter().zip(&w2))
            .map(|(vi, (a, b))| (vi - oldeps * a - delta * b) / gamma)
            .collect();
        x.iter_mut().zip(&w).for_each(|(xi, wi)| *xi += phi * wi);
        if phibar <= rtol * beta1 || beta == 0.0 {
            return MinresOutcome {
                x,
                iterations: itn,
                converged: true,
            };
        }
    }
    MinresOutcome {
        x,
        iterations: max_iter,
        converged: false,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn solves_indefinite_tridiagonal() {
        let n = 60;
        let apply = |x: &[f64]| -> Vec<f64> {
            (0..n)
                .map(|i| {
                    let mut v = (2.0 - 0.7) * x[i];
                    if i > 0 {
                        v -= x[i - 1];
                    }
                    if i + 1 < n {
                        v -= x[i + 1];
                    }
                    v
                })
                .collect()
        };
        let x_true: Vec<f64> = (0..n).map(|i| ((i * 37) % 11) as f64 - 5.0).collect();
        let b = apply(&x_true);
        let out = minres(apply, |x: &[f64]| x.to_vec(), &b, 1e-13, 500);
        assert!(out.converged);
        for (a, e) in out.x.iter().zip(&x_true) {
            assert!((a - e).abs() < 1e-8, "{a} {e}");
        }
    }
}
