use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

type Scalar = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

/// Named radial profiles usable from configuration files.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum RadialPreset {
    Zero,
    Constant { value: f64 },
    /// `(1 + r²)^{-a}`
    AlgebraicDecay { a: f64 },
    /// `r^{-k}`
    InversePower { k: f64 },
    /// `-depth / (1 + r²)`
    Well { depth: f64 },
}

/// A radial function `r ↦ g(r)` with an optional derivative.
#[derive(Clone)]
pub struct RadialFunction {
    label: String,
    value: Scalar,
    derivative: Option<Scalar>,
    preset: Option<RadialPreset>,
}

impl fmt::Debug for RadialFunction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("RadialFunction")
            .field("label", &self.label)
            .field("has_derivative", &self.derivative.is_some())
            .finish()
    }
}

impl RadialFunction {
    pub fn new<F>(label: impl Into<String>, value: F) -> Self
    where
        F: Fn(f64) -> f64 + Send + Sync + 'static,
    {
        Self {
            label: label.into(),
            value: Arc::new(value),
            derivative: None,
            preset: None,
        }
    }

    pub fn with_derivative<F>(mut self, derivative: F) -> Self
    where
        F: Fn(f64) -> f64 + Send + Sync + 'static,
    {
        self.derivative = Some(Arc::new(derivative));
        self
    }

    pub fn from_preset(preset: &RadialPreset) -> Self {
        let mut out = match *preset {
            RadialPreset::Zero => Self::new("0", |_| 0.0).with_derivative(|_| 0.0),
            RadialPreset::Constant { value } => {
                Self::new(format!("{value}"), move |_| value).with_derivative(|_| 0.0)
            }
            RadialPreset::AlgebraicDecay { a } => {
                Self::new(format!("(1+r^2)^(-{a})"), move |r| (1.0 + r * r).powf(-a))
                    .with_derivative(move |r| -2.0 * a * r * (1.0 + r * r).powf(-a - 1.0))
            }
            RadialPreset::InversePower { k } => Self::new(format!("r^(-{k})"), move |r| r.powf(-k))
                .with_derivative(move |r| -k * r.powf(-k - 1.0)),
            RadialPreset::Well { depth } => {
                Self::new(format!("-{depth}/(1+r^2)"), move |r| -depth / (1.0 + r * r))
                    .with_derivative(move |r| 2.0 * depth * r / (1.0 + r * r).powi(2))
            }
        };
        out.preset = Some(preset.clone());
        out
    }

    pub fn zero() -> Self {
        Self::from_preset(&RadialPreset::Zero)
    }

    pub fn constant(value: f64) -> Self {
        Self::from_preset(&RadialPreset::Constant { value })
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn preset(&self) -> Option<&RadialPreset> {
        self.preset.as_ref()
    }

    pub fn eval(&self, r: f64) -> f64 {
        (self.value)(r)
    }

    pub fn derivative(&self, r: f64) -> Option<f64> {
        self.derivative.as_ref().map(|d| d(r))
    }

    pub fn has_derivative(&self) -> bool {
        self.derivative.is_some()
    }

    /// True for the presets that vanish or are constant.
    pub fn is_constant(&self) -> bool {
        matches!(
            self.preset,
            Some(RadialPreset::Zero) | Some(RadialPreset::Constant { .. })
        )
    }

    pub fn is_zero(&self) -> bool {
        matches!(self.preset, Some(RadialPreset::Zero))
            || matches!(self.preset, Some(RadialPreset::Constant { value }) if value == 0.0)
    }
}
