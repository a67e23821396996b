use std::fmt;
use std::sync::Arc;

use super::radial::RadialFunction;

/// A nonlinearity `f(r, t)` with its partial derivatives and primitive
/// `F(r, t) = ∫₀ᵗ f(r, τ) dτ`.
pub trait Nonlinearity: Send + Sync + fmt::Debug {
    fn value(&self, r: f64, t: f64) -> f64;
    fn d_t(&self, r: f64, t: f64) -> f64;
    /// `∂_r f`, if known.
    fn d_r(&self, r: f64, t: f64) -> Option<f64>;
    fn primitive(&self, r: f64, t: f64) -> f64;
    /// `∂_r F`, if known.
    fn primitive_d_r(&self, r: f64, t: f64) -> Option<f64>;
    /// Declared oddness `f(r, -t) = -f(r, t)`.
    fn is_odd(&self) -> bool;
    /// `Some((p, h))` when `f = h(r) |t|^{p-2} t`.
    fn as_weighted_power(&self) -> Option<(f64, &RadialFunction)> {
        None
    }
}

/// `h(r) |t|^{p-2} t`.
#[derive(Clone, Debug)]
pub struct WeightedPower {
    pub p: f64,
    pub weight: RadialFunction,
}

impl Nonlinearity for WeightedPower {
    fn value(&self, r: f64, t: f64) -> f64 {
        self.weight.eval(r) * t.abs().powf(self.p - 2.0) * t
    }

    fn d_t(&self, r: f64, t: f64) -> f64 {
        (self.p - 1.0) * self.weight.eval(r) * t.abs().powf(self.p - 2.0)
    }

    fn d_r(&self, r: f64, t: f64) -> Option<f64> {
        self.weight
            .derivative(r)
            .map(|dh| dh * t.abs().powf(self.p - 2.0) * t)
    }

    fn primitive(&self, r: f64, t: f64) -> f64 {
        self.weight.eval(r) * t.abs().powf(self.p) / self.p
    }

    fn primitive_d_r(&self, r: f64, t: f64) -> Option<f64> {
        self.weight.derivative(r).map(|dh| dh * t.abs().powf(self.p) / self.p)
    }

    fn is_odd(&self) -> bool {
        true
    }

    fn as_weighted_power(&self) -> Option<(f64, &RadialFunction)> {
        Some((self.p, &self.weight))
    }
}

/// `|t|^{p-2} t` for `t ≥ 0`, `|t|^{q-2} t` for `t < 0`.
#[derive(Clone, Copy, Debug)]
pub struct AsymmetricPower {
    pub p: f64,
    pub q: f64,
}

impl AsymmetricPower {
    fn exponent(&self, t: f64) -> f64 {
        if t >= 0.0 {
            self.p
        } else {
            self.q
        }
    }
}

impl Nonlinearity for AsymmetricPower {
    fn value(&self, _r: f64, t: f64) -> f64 {
        t.abs().powf(self.exponent(t) - 2.0) * t
    }

    fn d_t(&self, _r: f64, t: f64) -> f64 {
        let e = self.exponent(t);
        (e - 1.0) * t.abs().powf(e - 2.0)
    }

    fn d_r(&self, _r: f64, _t: f64) -> Option<f64> {
        Some(0.0)
    }

    fn primitive(&self, _r: f64, t: f64) -> f64 {
        let e = self.exponent(t);
        t.abs().powf(e) / e
    }

    fn primitive_d_r(&self, _r: f64, _t: f64) -> Option<f64> {
        Some(0.0)
    }

    fn is_odd(&self) -> bool {
        self.p == self.q
    }
}

/// `a t³ - b t⁵`-type sums of two odd powers, `a|t|^{p-2}t + b|t|^{q-2}t`.
#[derive(Clone, Copy, Debug)]
pub struct TwoPowers {
    pub a: f64,
    pub p: f64,
    pub b: f64,
    pub q: f64,
}

impl TwoPowers {
    pub fn cubic_quintic(a: f64, b: f64) -> Self {
        Self { a, p: 4.0, b, q: 6.0 }
    }
}

impl Nonlinearity for TwoPowers {
    fn value(&self, _r: f64, t: f64) -> f64 {
        self.a * t.abs().powf(self.p - 2.0) * t + self.b * t.abs().powf(self.q - 2.0) * t
    }

    fn d_t(&self, _r: f64, t: f64) -> f64 {
        self.a * (self.p - 1.0) * t.abs().powf(self.p - 2.0)
            + self.b * (self.q - 1.0) * t.abs().powf(self.q - 2.0)
    }

    fn d_r(&self, _r: f64, _t: f64) -> Option<f64> {
        Some(0.0)
    }

    fn primitive(&self, _r: f64, t: f64) -> f64 {
        self.a * t.abs().powf(self.p) / self.p + self.b * t.abs().powf(self.q) / self.q
    }

    fn primitive_d_r(&self, _r: f64, _t: f64) -> Option<f64> {
        Some(0.0)
    }

    fn is_odd(&self) -> bool {
        true
    }
}

type Field = Arc<dyn Fn(f64, f64) -> f64 + Send + Sync>;

/// User-supplied bundle `(f, f_t, f_r, F, F_r)`; `f_r` and `F_r` are optional.
#[derive(Clone)]
pub struct CallableNonlinearity {
    pub label: String,
    pub f: Field,
    pub f_t: Field,
    pub f_r: Option<Field>,
    pub big_f: Field,
    pub big_f_r: Option<Field>,
    pub odd: bool,
}

impl fmt::Debug for CallableNonlinearity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("CallableNonlinearity")
            .field("label", &self.label)
            .field("odd", &self.odd)
            .finish()
    }
}

impl Nonlinearity for CallableNonlinearity {
    fn value(&self, r: f64, t: f64) -> f64 {
        (self.f)(r, t)
    }

    fn d_t(&self, r: f64, t: f64) -> f64 {
        (self.f_t)(r, t)
    }

    fn d_r(&self, r: f64, t: f64) -> Option<f64> {
        self.f_r.as_ref().map(|g| g(r, t))
    }

    fn primitive(&self, r: f64, t: f64) -> f64 {
        (self.big_f)(r, t)
    }

    fn primitive_d_r(&self, r: f64, t: f64) -> Option<f64> {
        self.big_f_r.as_ref().map(|g| g(r, t))
    }

    fn is_odd(&self) -> bool {
        self.odd
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::problem::radial::RadialPreset;

    fn check_consistency(f: &dyn Nonlinearity, r: f64, t: f64) {
        let e = 1e-6;
        let ft = (f.value(r, t + e) - f.value(r, t - e)) / (2.0 * e);
        assert!((ft - f.d_t(r, t)).abs() < 1e-6 * (1.0 + ft.abs()), "f_t at ({r},{t})");
        let prim = (f.primitive(r, t + e) - f.primitive(r, t - e)) / (2.0 * e);
        assert!((prim - f.value(r, t)).abs() < 1e-6 * (1.0 + prim.abs()), "F' at ({r},{t})");
        if let Some(fr) = f.d_r(r, t) {
            let fd = (f.value(r + e, t) - f.value(r - e, t)) / (2.0 * e);
            assert!((fd - fr).abs() < 1e-6 * (1.0 + fd.abs()));
        }
        if let Some(fr) = f.primitive_d_r(r, t) {
            let fd = (f.primitive(r + e, t) - f.primitive(r - e, t)) / (2.0 * e);
            assert!((fd - fr).abs() < 1e-6 * (1.0 + fd.abs()));
        }
    }

    #[test]
    fn derivatives_are_consistent() {
        let w = WeightedPower {
            p: 3.0,
            weight: RadialFunction::from_preset(&RadialPreset::AlgebraicDecay { a: 0.25 }),
        };
        let a = AsymmetricPower { p: 4.0, q: 3.0 };
        let cq = TwoPowers::cubic_quintic(1.0, -1.0);
        for r in [0.5, 2.0] {
            for t in [-1.3, 0.4, 2.0] {
                check_consistency(&w, r, t);
                check_consistency(&a, r, t);
                check_consistency(&cq, r, t);
            }
        }
    }

    #[test]
    fn oddness_declarations() {
        let w = WeightedPower { p: 4.0, weight: RadialFunction::constant(1.0) };
        assert!(w.is_odd());
        assert_eq!(w.value(1.0, -2.0), -w.value(1.0, 2.0));
        let a = AsymmetricPower { p: 4.0, q: 3.0 };
        assert!(!a.is_odd());
        assert_eq!(a.value(0.0, -2.0), -4.0);
        assert_eq!(a.value(0.0, 2.0), 8.0);
        assert_eq!(a.primitive(0.0, 0.0), 0.0);
    }
}
