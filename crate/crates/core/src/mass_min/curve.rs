use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::minimize::{lambda_extremes, minimize_from, minimize_on_sphere, MinimizeOptions, MinimizerResult};
use crate::error::{Error, Result};
use crate::problem::Model;
use crate::solve::branch::three_point_derivative;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CurveOptions {
    /// Probe spacing `δ`; probes at `c ± δ` and `c ± 2δ` are warm-started from
    /// every distinct minimizer at `c`. `None` uses neighbouring samples.
    pub probe: Option<f64>,
}

impl Default for CurveOptions {
    fn default() -> Self {
        Self { probe: Some(1e-3) }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CurveSample {
    pub c: f64,
    pub m: f64,
    pub lambda: f64,
    /// `(λ_{1,c}, λ_{2,c})` over minimizers within `1e-8` of `m(c)`.
    pub lambda_range: (f64, f64),
    pub dq_left: Option<f64>,
    pub dq_right: Option<f64>,
    pub err_left: Option<f64>,
    pub err_right: Option<f64>,
    pub dq_centered: Option<f64>,
    pub kink: bool,
    pub distinct_minima: usize,
    pub morse_index: Option<usize>,
    pub stationarity: f64,
    pub converged: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MassCurve {
    pub samples: Vec<CurveSample>,
    #[serde(skip)]
    pub minimizers: Vec<MinimizerResult>,
}

impl MassCurve {
    pub fn masses(&self) -> Vec<f64> {
        self.samples.iter().map(|s| s.c).collect()
    }

    pub fn energies(&self) -> Vec<f64> {
        self.samples.iter().map(|s| s.m).collect()
    }

    pub fn kinks(&self) -> Vec<f64> {
        self.samples.iter().filter(|s| s.kink).map(|s| s.c).collect()
    }

    pub fn is_strictly_decreasing(&self) -> bool {
        self.samples.windows(2).all(|w| w[1].m < w[0].m)
    }

    /// `m(c) ≤ m(a) + m(c − a)` on all sample pairs whose difference is
    /// also sampled (relative tolerance `tol`).
    pub fn subadditivity_violations(&self, tol: f64) -> Vec<(f64, f64)> {
        let lookup = |c: f64| {
            self.samples
                .iter()
                .find(|s| (s.c - c).abs() <= 1e-12 * c.max(1.0))
                .map(|s| s.m)
        };
        let mut out = Vec::new();
        for a in &self.samples {
            for b in &self.samples {
                if b.c <= a.c {
                    continue;
                }
                if let Some(mb_minus_a) = lookup(b.c - a.c) {
                    let bound = a.m + mb_minus_a;
                    if b.m > bound + tol * bound.abs() {
                        out.push((a.c, b.c));
                    }
                }
            }
        }
        out
    }

    /// Least-squares slope of `log|m|` against `log c`.
    pub fn log_log_slope(&self) -> Option<f64> {
        let pts: Vec<(f64, f64)> = self
            .samples
            .iter()
            .filter(|s| s.m != 0.0)
            .map(|s| (s.c.ln(), s.m.abs().ln()))
            .collect();
        if pts.len() < 2 {
            return None;
        }
        let n = pts.len() as f64;
        let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
        let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
        let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
        let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
        Some(sxy / sxx)
    }
}

struct Probes {
    m: [f64; 4],
}

fn probe(model: &Model, res: &MinimizerResult, delta: f64, opts: &MinimizeOptions) -> Result<Probes> {
    let starts: Vec<Vec<f64>> = res.distinct_minima.iter().map(|k| k.u.clone()).collect();
    let inner = MinimizeOptions { compute_morse: false, ..*opts };
    let offsets = [-2.0, -1.0, 1.0, 2.0];
    let ms: Vec<f64> = offsets
        .par_iter()
        .map(|k| minimize_from(model, res.c + k * delta, &starts, &inner).map(|r| r.m))
        .collect::<Result<_>>()?;
    Ok(Probes { m: [ms[0], ms[1], ms[2], ms[3]] })
}

fn sample_from(res: &MinimizerResult) -> CurveSample {
    CurveSample {
        c: res.c,
        m: res.m,
        lambda: res.lambda,
        lambda_range: lambda_extremes(res),
        dq_left: None,
        dq_right: None,
        err_left: None,
        err_right: None,
        dq_centered: None,
        kink: false,
        distinct_minima: res.distinct_minima.len(),
        morse_index: res.morse_index,
        stationarity: res.stationarity,
        converged: res.converged,
    }
}

fn flag_kink(s: &mut CurveSample) {
    if let (Some(l), Some(r), Some(el), Some(er)) = (s.dq_left, s.dq_right, s.err_left, s.err_right) {
        s.kink = (l - r).abs() > 3.0 * (el + er);
    }
}

/// `c ↦ m(c)` on a strictly increasing grid of positive masses.
pub fn mass_curve(model: &Model, c_grid: &[f64], opts: &MinimizeOptions, curve: &CurveOptions) -> Result<MassCurve> {
    if c_grid.is_empty() {
        return Err(Error::Validation("empty mass grid".into()));
    }
    if c_grid.iter().any(|c| !(*c > 0.0 && c.is_finite())) || c_grid.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::Validation("mass grid must be positive and strictly increasing".into()));
    }
    if let Some(d) = curve.probe {
        if !(d > 0.0 && 2.0 * d < c_grid[0]) {
            return Err(Error::Validation(format!("probe spacing {d} must be positive and below c_min / 2")));
        }
    }
    let results: Vec<MinimizerResult> = c_grid
        .par_iter()
        .map(|&c| minimize_on_sphere(model, c, opts))
        .collect::<Result<_>>()?;
    let mut samples: Vec<CurveSample> = results.iter().map(sample_from).collect();
    match curve.probe {
        Some(delta) => {
            let probes: Vec<Probes> = results
                .par_iter()
                .map(|r| probe(model, r, delta, opts))
                .collect::<Result<_>>()?;
            for (s, p) in samples.iter_mut().zip(&probes) {
                let [m2l, m1l, m1r, m2r] = p.m;
                let dl1 = (s.m - m1l) / delta;
                let dl2 = (s.m - m2l) / (2.0 * delta);
                let dr1 = (m1r - s.m) / delta;
                let dr2 = (m2r - s.m) / (2.0 * delta);
                s.dq_left = Some(dl1);
                s.dq_right = Some(dr1);
                s.err_left = Some((dl1 - dl2).abs());
                s.err_right = Some((dr1 - dr2).abs());
                s.dq_centered = Some((m1r - m1l) / (2.0 * delta));
                flag_kink(s);
            }
        }
        None => {
            let n = samples.len();
            let cs: Vec<f64> = samples.iter().map(|s| s.c).collect();
            let ms: Vec<f64> = samples.iter().map(|s| s.m).collect();
            for i in 0..n {
                if i > 0 {
                    samples[i].dq_left = Some((ms[i] - ms[i - 1]) / (cs[i] - cs[i - 1]));
                }
                if i + 1 < n {
                    samples[i].dq_right = Some((ms[i + 1] - ms[i]) / (cs[i + 1] - cs[i]));
                }
                if i > 0 && i + 1 < n {
                    samples[i].dq_centered = Some(three_point_derivative(cs[i - 1], cs[i], cs[i + 1], ms[i - 1], ms[i], ms[i + 1]));
                }
                if i > 1 {
                    let d2 = (ms[i] - ms[i - 2]) / (cs[i] - cs[i - 2]);
                    samples[i].err_left = samples[i].dq_left.map(|d| (d - d2).abs());
                }
                if i + 2 < n {
                    let d2 = (ms[i + 2] - ms[i]) / (cs[i + 2] - cs[i]);
                    samples[i].err_right = samples[i].dq_right.map(|d| (d - d2).abs());
                }
                flag_kink(&mut samples[i]);
            }
        }
    }
    Ok(MassCurve { samples, minimizers: results })
}
