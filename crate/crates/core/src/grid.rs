//! Radial meshes and the volume quadrature they carry.
//!
//! Nodes sit at cell centres `r_i = (i - 1/2) h`, `h = R / n`. Every cell
//! `[(i-1)h, ih]` carries its exact shell volume `ω_N ((ih)^N - ((i-1)h)^N) / N`
//! as quadrature weight, so the weights telescope to the volume of the ball of
//! radius `R`. The outer face `r = R` carries the homogeneous Dirichlet
//! condition; on the unit ball this is the physical boundary, on the whole
//! space it is the truncation.

use serde::{Deserialize, Serialize};
use statrs::function::gamma::gamma;

use crate::error::{check_len, Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum DomainKind {
    WholeSpaceTruncated { outer_radius: f64 },
    UnitBall,
}

#[derive(Clone, Debug)]
pub struct RadialGrid {
    domain: DomainKind,
    dim: usize,
    nodes: Vec<f64>,
    weights: Vec<f64>,
    spacing: f64,
}

/// Surface measure of the unit sphere `S^{N-1}` (2 for `N = 1`).
pub fn sphere_area(dim: usize) -> f64 {
    let half = dim as f64 / 2.0;
    2.0 * std::f64::consts::PI.powf(half) / gamma(half)
}

/// Default truncation radius for a whole-space problem at frequency `lambda`.
///
/// `30 / sqrt|λ|` clamped to `[20, 200]`, multiplied by 4 for `s < 1/2`
/// where profiles decay only algebraically.
pub fn default_outer_radius(lambda: f64, order: f64) -> f64 {
    let base = if lambda.abs() > 0.0 {
        (30.0 / lambda.abs().sqrt()).clamp(20.0, 200.0)
    } else {
        200.0
    };
    if order < 0.5 {
        4.0 * base
    } else {
        base
    }
}

impl RadialGrid {
    pub fn whole_space(dim: usize, n: usize, outer_radius: f64) -> Result<Self> {
        if !(outer_radius.is_finite() && outer_radius > 0.0) {
            return Err(Error::InvalidGrid(format!(
                "outer radius must be positive, got {outer_radius}"
            )));
        }
        Self::build(DomainKind::WholeSpaceTruncated { outer_radius }, dim, n, outer_radius)
    }

    pub fn unit_ball(dim: usize, n: usize) -> Result<Self> {
        Self::build(DomainKind::UnitBall, dim, n, 1.0)
    }

    pub fn from_domain(domain: DomainKind, dim: usize, n: usize) -> Result<Self> {
        match domain {
            DomainKind::WholeSpaceTruncated { outer_radius } => {
                Self::whole_space(dim, n, outer_radius)
            }
            DomainKind::UnitBall => Self::unit_ball(dim, n),
        }
    }

    fn build(domain: DomainKind, dim: usize, n: usize, outer: f64) -> Result<Self> {
        if dim == 0 {
            return Err(Error::InvalidGrid("dimension must be at least 1".into()));
        }
        if n < 3 {
            return Err(Error::InvalidGrid(format!("need at least 3 nodes, got {n}")));
        }
        let h = outer / n as f64;
        let omega = sphere_area(dim);
        let d = dim as i32;
        let nodes = (1..=n).map(|i| (i as f64 - 0.5) * h).collect();
        let weights = (1..=n)
            .map(|i| {
                let hi = if i == n { outer } else { i as f64 * h };
                let lo = (i - 1) as f64 * h;
                omega * (hi.powi(d) - lo.powi(d)) / dim as f64
            })
            .collect();
        Ok(Self {
            domain,
            dim,
            nodes,
            weights,
            spacing: h,
        })
    }

    /// Same domain and dimension with a different node count.
    pub fn with_nodes(&self, n: usize) -> Result<Self> {
        Self::from_domain(self.domain, self.dim, n)
    }

    pub fn domain(&self) -> DomainKind {
        self.domain
    }

    pub fn is_ball(&self) -> bool {
        matches!(self.domain, DomainKind::UnitBall)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    /// Quadrature weights; the factor `ω_N` is already included.
    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn spacing(&self) -> f64 {
        self.spacing
    }

    pub fn outer_radius(&self) -> f64 {
        match self.domain {
            DomainKind::WholeSpaceTruncated { outer_radius } => outer_radius,
            DomainKind::UnitBall => 1.0,
        }
    }

    /// Radius of the face between node `i` and node `i + 1` (0-based).
    pub fn face(&self, i: usize) -> f64 {
        (i + 1) as f64 * self.spacing
    }

    /// `∫ f(|x|) dx` over the truncated domain.
    pub fn integrate(&self, samples: &[f64]) -> Result<f64> {
        check_len(self.len(), samples.len())?;
        Ok(self.integrate_unchecked(samples))
    }

    pub(crate) fn integrate_unchecked(&self, samples: &[f64]) -> f64 {
        self.weights.iter().zip(samples).map(|(w, f)| w * f).sum()
    }

    /// `∫ g(|x|, u(|x|)) dx` without allocating the integrand.
    pub fn integrate_with<F: Fn(f64, f64) -> f64>(&self, u: &[f64], g: F) -> f64 {
        self.nodes
            .iter()
            .zip(&self.weights)
            .zip(u)
            .map(|((&r, &w), &ui)| w * g(r, ui))
            .sum()
    }

    /// Weighted inner product `∫ a b dx`.
    pub fn inner(&self, a: &[f64], b: &[f64]) -> f64 {
        debug_assert_eq!(a.len(), self.len());
        debug_assert_eq!(b.len(), self.len());
        self.weights
            .iter()
            .zip(a.iter().zip(b))
            .map(|(w, (x, y))| w * x * y)
            .sum()
    }

    pub fn norm(&self, a: &[f64]) -> f64 {
        self.inner(a, a).sqrt()
    }

    /// Samples `f(r_i)` at every node.
    pub fn sample<F: Fn(f64) -> f64>(&self, f: F) -> Vec<f64> {
        self.nodes.iter().map(|&r| f(r)).collect()
    }

    /// One-sided derivative at the outer face from the two innermost
    /// neighbours and the Dirichlet value there (second order).
    pub fn boundary_derivative(&self, u: &[f64]) -> f64 {
        let n = self.len();
        let h = self.spacing;
        // points at distance 0, h/2, 3h/2 inside the outer face
        let (u1, u2) = (u[n - 1], u[n - 2]);
        let (a, b) = (0.5 * h, 1.5 * h);
        // derivative at 0 of the quadratic through (0,0), (-a,u1), (-b,u2)
        (u1 * b * b - u2 * a * a) / (a * b * (a - b))
    }
}
