//! Matrix-free storage for `a (T - H) + diag(d)` where `T - H` is the even
//! fold of a symmetric lattice Toeplitz operator: products go through FFT
//! convolution, solves through MINRES with a circulant preconditioner, and
//! spectra through shift-invert Lanczos.

use std::cell::RefCell;
use std::fmt;
use std::sync::Arc;

use rustfft::num_complex::Complex;
use rustfft::{Fft, FftPlanner};

use super::krylov::minres;
use super::Spectrum;
use crate::error::{Error, Result};

const SOLVE_RTOL: f64 = 1e-13;
const SOLVE_ACCEPT: f64 = 1e-8;
const RITZ_TOL: f64 = 1e-9;
const MAX_LANCZOS: usize = 400;

type Buffers = (Vec<Complex<f64>>, Vec<Complex<f64>>);

thread_local! {
    static WORK: RefCell<Buffers> = const { RefCell::new((Vec::new(), Vec::new())) };
}

/// Runs `f` on a zeroed buffer of length `len` holding the even extension
/// of `x`, with FFT scratch of at least `scratch` entries.
fn with_extension<R>(x: &[f64], len: usize, scratch: usize, f: impl FnOnce(&mut [Complex<f64>], &mut [Complex<f64>]) -> R) -> R {
    WORK.with(|w| {
        let (buf, work) = &mut *w.borrow_mut();
        let n = x.len();
        buf.clear();
        buf.resize(len, Complex::new(0.0, 0.0));
        for (i, &v) in x.iter().enumerate() {
            buf[n + i].re = v;
            buf[n - 1 - i].re = v;
        }
        if work.len() < scratch {
            work.resize(scratch, Complex::new(0.0, 0.0));
        }
        f(buf, &mut work[..scratch])
    })
}

/// Even fold of a symmetric lattice Toeplitz operator onto `n` nodes.
///
/// Node `i` sits at lattice point `i`, its mirror at `-i-1`; values vanish
/// outside `[-n, n)`.
pub struct FoldedToeplitz {
    n: usize,
    k0: f64,
    kernel_hat: Vec<Complex<f64>>,
    symbol: Vec<f64>,
    floor: f64,
    fwd: Arc<dyn Fft<f64>>,
    inv: Arc<dyn Fft<f64>>,
    pfwd: Arc<dyn Fft<f64>>,
    pinv: Arc<dyn Fft<f64>>,
}

impl fmt::Debug for FoldedToeplitz {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("FoldedToeplitz")
            .field("n", &self.n)
            .field("k0", &self.k0)
            .finish()
    }
}

impl FoldedToeplitz {
    /// `kernel[0]` is the diagonal, `-kernel[m]` the coupling at distance
    /// `m`; at least `2n` entries are needed. `symbol(θ)` is the periodic
    /// symbol of the same lattice operator, used for preconditioning.
    pub fn new(n: usize, kernel: &[f64], symbol: impl Fn(f64) -> f64) -> Self {
        assert!(kernel.len() >= 2 * n && n > 0);
        let len = 4 * n;
        let mut planner = FftPlanner::new();
        let fwd = planner.plan_fft_forward(len);
        let inv = planner.plan_fft_inverse(len);
        let pfwd = planner.plan_fft_forward(2 * n);
        let pinv = planner.plan_fft_inverse(2 * n);
        let mut c = vec![Complex::new(0.0, 0.0); len];
        c[0].re = kernel[0];
        for m in 1..2 * n {
            c[m].re = -kernel[m];
            c[len - m].re = -kernel[m];
        }
        fwd.process(&mut c);
        let period = 2 * n;
        let theta = |k: usize| 2.0 * std::f64::consts::PI * k as f64 / period as f64;
        let sym: Vec<f64> = (0..period).map(|k| symbol(theta(k)).max(0.0)).collect();
        let floor = symbol(std::f64::consts::PI / (2 * n) as f64);
        Self {
            n,
            k0: kernel[0],
            kernel_hat: c,
            symbol: sym,
            floor,
            fwd,
            inv,
            pfwd,
            pinv,
        }
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    /// `(T - H) x`.
    pub fn apply(&self, x: &[f64]) -> Vec<f64> {
        let n = self.n;
        let len = 4 * n;
        let scratch = self.fwd.get_inplace_scratch_len().max(self.inv.get_inplace_scratch_len());
        with_extension(x, len, scratch, |buf, work| {
            self.fwd.process_with_scratch(buf, work);
            buf.iter_mut().zip(&self.kernel_hat).for_each(|(b, k)| *b *= k);
            self.inv.process_with_scratch(buf, work);
            let inv_len = 1.0 / len as f64;
            (0..n).map(|j| buf[n + j].re * inv_len).collect()
        })
    }

    /// `(a C + b I)⁻¹ x` for the periodic circulant `C` on the even extension.
    fn circulant_solve(&self, a: f64, b: f64, x: &[f64]) -> Vec<f64> {
        let n = self.n;
        let scratch = self.pfwd.get_inplace_scratch_len().max(self.pinv.get_inplace_scratch_len());
        with_extension(x, 2 * n, scratch, |buf, work| {
            self.pfwd.process_with_scratch(buf, work);
            buf.iter_mut()
                .zip(&self.symbol)
                .for_each(|(z, s)| *z /= a * s + b);
            self.pinv.process_with_scratch(buf, work);
            let inv_len = 1.0 / (2 * n) as f64;
            (0..n).map(|j| buf[n + j].re * inv_len).collect()
        })
    }
}

/// `scale (T - H) + diag(diag)`.
#[derive(Clone, Debug)]
pub struct StructuredMatrix {
    base: Arc<FoldedToeplitz>,
    scale: f64,
    diag: Vec<f64>,
}

impl StructuredMatrix {
    pub fn new(base: Arc<FoldedToeplitz>, scale: f64, diag: Vec<f64>) -> Self {
        assert_eq!(base.len(), diag.len());
        Self { base, scale, diag }
    }

    pub fn len(&self) -> usize {
        self.diag.len()
    }

    pub fn is_empty(&self) -> bool {
        self.diag.is_empty()
    }

    pub fn scale(&self) -> f64 {
        self.scale
    }

    pub fn diagonal(&self) -> &[f64] {
        &self.diag
    }

    pub fn matvec(&self, x: &[f64]) -> Vec<f64> {
        let mut y = self.base.apply(x);
        y.iter_mut()
            .zip(x.iter().zip(&self.diag))
            .for_each(|(v, (xi, d))| *v = self.scale * *v + d * xi);
        y
    }

    pub fn plus_diagonal(&self, d: &[f64]) -> Self {
        Self {
            base: Arc::clone(&self.base),
            scale: self.scale,
            diag: self.diag.iter().zip(d).map(|(a, b)| a + b).collect(),
        }
    }

    pub fn scaled_plus_diagonal(&self, a: f64, d: &[f64]) -> Self {
        Self {
            base: Arc::clone(&self.base),
            scale: a * self.scale,
            diag: self.diag.iter().zip(d).map(|(x, y)| a * x + y).collect(),
        }
    }

    /// Row-sum bound on `|M|`, entry by entry.
    pub fn row_bound(&self, i: usize) -> f64 {
        2.0 * self.scale.abs() * self.base.k0 + self.diag[i].abs()
    }

    /// `min_i d_i / w_i`, a lower bound on the spectrum of `W⁻¹ M` when `scale ≥ 0`.
    fn lower_bound(&self, weights: &[f64]) -> f64 {
        self.diag
            .iter()
            .zip(weights)
            .map(|(d, w)| d / w)
            .fold(f64::INFINITY, f64::min)
    }

    fn preconditioner_shift(&self) -> f64 {
        let far = *self.diag.last().unwrap_or(&0.0);
        far.max(self.scale.abs() * self.base.floor)
    }

    pub fn solve(&self, rhs: &[f64]) -> Result<Vec<f64>> {
        let a = self.scale.abs();
        let b = self.preconditioner_shift();
        if !(a > 0.0 || b > 0.0) {
            return Err(Error::Degenerate("zero structured matrix".into()));
        }
        let out = minres(
            |x| self.matvec(x),
            |x| self.base.circulant_solve(a, b, x),
            rhs,
            SOLVE_RTOL,
            self.len().clamp(50, 5000),
        );
        let residual = self
            .matvec(&out.x)
            .iter()
            .zip(rhs)
            .map(|(a, b)| (a - b).powi(2))
            .sum::<f64>()
            .sqrt();
        let norm = rhs.iter().map(|v| v * v).sum::<f64>().sqrt();
        if out.x.iter().any(|v| !v.is_finite()) || residual > SOLVE_ACCEPT * norm.max(f64::MIN_POSITIVE)
        {
            return Err(Error::Degenerate(format!(
                "iterative solve stalled after {} iterations (relative residual {:.2e}, converged {})",
                out.iterations,
                residual / norm,
                out.converged
            )));
        }
        Ok(out.x)
    }

    /// Spectrum of `W⁻¹ M` by Lanczos on `(M - σW)⁻¹ W` with `σ` below the
    /// spectrum. Iterates until the lowest `count` eigenvalues and the first
    /// nonnegative one have converged, which fixes the inertia.
    pub fn weighted_spectrum(&self, weights: &[f64], count: usize) -> Result<Spectrum> {
        let n = self.len();
        if self.scale < 0.0 {
            return Err(Error::Eigensolve(
                "structured spectrum needs a nonnegative Toeplitz part".into(),
            ));
        }
        let norm_estimate = (0..n)
            .map(|i| self.row_bound(i) / weights[i])
            .fold(0.0, f64::max);
        let lower = self.lower_bound(weights);
        let sigma = lower - 1e-2 * lower.abs().max(norm_estimate * 1e-6).max(1e-12);
        let wsig: Vec<f64> = weights.iter().map(|w| -sigma * w).collect();
        let shifted = self.plus_diagonal(&wsig);
        let wdot = |a: &[f64], b: &[f64]| -> f64 {
            a.iter().zip(b).zip(weights).map(|((x, y), w)| x * y * w).sum()
        };
        let mut q: Vec<f64> = (0..n)
            .map(|i| 1.0 + 0.5 * (((i as u64).wrapping_mul(2654435761) % 1000) as f64 / 1000.0 - 0.5))
            .collect();
        let q_norm = wdot(&q, &q).sqrt();
        q.iter_mut().for_each(|v| *v /= q_norm);
        let mut basis: Vec<Vec<f64>> = vec![q];
        let mut alphas: Vec<f64> = Vec::new();
        let mut betas: Vec<f64> = Vec::new();
        let max_steps = n.min(MAX_LANCZOS);
        let mut result = None;
        for k in 0..max_steps {
            let wq: Vec<f64> = basis[k].iter().zip(weights).map(|(a, w)| a * w).collect();
            let mut z = shifted.solve(&wq)?;
            let alpha = wdot(&z, &basis[k]);
            z.iter_mut().zip(&basis[k]).for_each(|(a, b)| *a -= alpha * b);
            if k > 0 {
                let beta = betas[k - 1];
                z.iter_mut().zip(&basis[k - 1]).for_each(|(a, b)| *a -= beta * b);
            }
            for _ in 0..2 {
                for v in &basis {
                    let c = wdot(&z, v);
                    z.iter_mut().zip(v).for_each(|(a, b)| *a -= c * b);
                }
            }
            alphas.push(alpha);
            let beta = wdot(&z, &z).sqrt();
            let exhausted = k + 1 == max_steps || beta <= 1e-14 * alpha.abs().max(f64::MIN_POSITIVE);
            if k % 4 == 3 || exhausted {
                let ritz = ritz_pairs(&alphas, &betas, beta)?;
                let theta_max = ritz[0].0;
                let converged = ritz
                    .iter()
                    .take_while(|r| r.2 <= RITZ_TOL * theta_max)
                    .count();
                let mus: Vec<f64> = ritz.iter().map(|r| sigma + 1.0 / r.0).collect();
                let negatives = mus[..converged].iter().filter(|&&m| m < 0.0).count();
                let complete = beta <= 1e-14 * alpha.abs().max(f64::MIN_POSITIVE) && k + 1 == n;
                if (converged > negatives && converged >= count.min(n)) || complete {
                    result = Some((ritz, mus, converged, negatives));
                    break;
                }
                if exhausted {
                    return Err(Error::Eigensolve(format!(
                        "Lanczos stopped after {} steps with {converged} converged Ritz values",
                        k + 1
                    )));
                }
            }
            z.iter_mut().for_each(|v| *v /= beta);
            betas.push(beta);
            basis.push(z);
        }
        let (ritz, mus, converged, negative_count) =
            result.ok_or_else(|| Error::Eigensolve("Lanczos did not converge".into()))?;
        let m = alphas.len();
        let count = count.min(n);
        let vectors = ritz[..count]
            .iter()
            .map(|r| {
                let mut x = vec![0.0; n];
                for (j, v) in basis[..m].iter().enumerate() {
                    x.iter_mut().zip(v).for_each(|(a, b)| *a += r.1[j] * b);
                }
                x
            })
            .collect();
        let smallest_abs = mus[..converged]
            .iter()
            .map(|v| v.abs())
            .fold(f64::INFINITY, f64::min);
        Ok(Spectrum {
            lowest: mus[..count].to_vec(),
            vectors,
            negative_count,
            smallest_abs,
            norm_estimate,
        })
    }
}

/// Ritz values (descending), Ritz vectors in the Lanczos basis and residual
/// bounds of the tridiagonal Lanczos matrix.
fn ritz_pairs(alphas: &[f64], betas: &[f64], last_beta: f64) -> Result<Vec<(f64, Vec<f64>, f64)>> {
    let m = alphas.len();
    let mut t = nalgebra::DMatrix::zeros(m, m);
    for i in 0..m {
        t[(i, i)] = alphas[i];
        if i + 1 < m {
            t[(i, i + 1)] = betas[i];
            t[(i + 1, i)] = betas[i];
        }
    }
    let eig = nalgebra::linalg::SymmetricEigen::try_new(t, 1e-15, 0)
        .ok_or_else(|| Error::Eigensolve("Lanczos tridiagonal eigensolve failed".into()))?;
    let mut out: Vec<(f64, Vec<f64>, f64)> = (0..m)
        .map(|i| {
            let y: Vec<f64> = eig.eigenvectors.column(i).iter().copied().collect();
            let res = last_beta * y[m - 1].abs();
            (eig.eigenvalues[i], y, res)
        })
        .collect();
    out.sort_by(|a, b| b.0.total_cmp(&a.0));
    Ok(out)
}
