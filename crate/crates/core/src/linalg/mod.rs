//! Small linear-algebra kernels: symmetric tridiagonal matrices (Sturm
//! counts, bisection, inverse iteration, pivoted solves), a dense fallback
//! backed by nalgebra and matrix-free folded Toeplitz operators.

mod krylov;
mod structured;

use nalgebra::{DMatrix, DVector};

pub use structured::{FoldedToeplitz, StructuredMatrix};

use crate::error::{Error, Result};

const PIVOT_GUARD: f64 = 1e-300;

/// Symmetric tridiagonal matrix. Besides the diagonal it keeps the row sums
/// `shift[i] = diag[i] + off[i-1] + off[i]`, so products can be formed from
/// differences `u_i - u_j` without cancelling large stencil weights.
#[derive(Clone, Debug, PartialEq)]
pub struct SymTridiag {
    pub diag: Vec<f64>,
    /// `off[i]` couples rows `i` and `i + 1`.
    pub off: Vec<f64>,
    pub shift: Vec<f64>,
}

impl SymTridiag {
    pub fn new(diag: Vec<f64>, off: Vec<f64>) -> Self {
        assert_eq!(off.len() + 1, diag.len().max(1));
        let n = diag.len();
        let shift = (0..n)
            .map(|i| {
                let left = if i > 0 { off[i - 1] } else { 0.0 };
                let right = if i + 1 < n { off[i] } else { 0.0 };
                diag[i] + left + right
            })
            .collect();
        Self { diag, off, shift }
    }

    /// Build from exact row sums and couplings.
    pub fn from_row_sums(shift: Vec<f64>, off: Vec<f64>) -> Self {
        assert_eq!(off.len() + 1, shift.len().max(1));
        let n = shift.len();
        let diag = (0..n)
            .map(|i| {
                let left = if i > 0 { off[i - 1] } else { 0.0 };
                let right = if i + 1 < n { off[i] } else { 0.0 };
                shift[i] - left - right
            })
            .collect();
        Self { diag, off, shift }
    }

    /// `self + diag(d)`.
    pub fn plus_diagonal(&self, d: &[f64]) -> Self {
        Self {
            diag: self.diag.iter().zip(d).map(|(a, b)| a + b).collect(),
            off: self.off.clone(),
            shift: self.shift.iter().zip(d).map(|(a, b)| a + b).collect(),
        }
    }

    /// `xᵀ T y` in difference form.
    pub fn bilinear(&self, x: &[f64], y: &[f64]) -> f64 {
        let mut acc: f64 = self.shift.iter().zip(x.iter().zip(y)).map(|(s, (a, b))| s * a * b).sum();
        for i in 0..self.off.len() {
            acc -= self.off[i] * (x[i] - x[i + 1]) * (y[i] - y[i + 1]);
        }
        acc
    }

    pub fn len(&self) -> usize {
        self.diag.len()
    }

    pub fn is_empty(&self) -> bool {
        self.diag.is_empty()
    }

    pub fn matvec(&self, x: &[f64]) -> Vec<f64> {
        let n = self.len();
        let mut y: Vec<f64> = self.shift.iter().zip(x).map(|(s, v)| s * v).collect();
        for i in 0..n.saturating_sub(1) {
            let flux = self.off[i] * (x[i] - x[i + 1]);
            y[i] -= flux;
            y[i + 1] += flux;
        }
        y
    }

    /// Number of eigenvalues strictly below `x` (negative pivots of `T - x I`).
    pub fn sturm_count(&self, x: f64) -> usize {
        let mut count = 0;
        let mut q = self.diag[0] - x;
        if q < 0.0 {
            count += 1;
        }
        for i in 1..self.len() {
            let safe = if q.abs() < PIVOT_GUARD {
                PIVOT_GUARD.copysign(q)
            } else {
                q
            };
            q = self.diag[i] - x - self.off[i - 1] * self.off[i - 1] / safe;
            if q < 0.0 {
                count += 1;
            }
        }
        count
    }

    pub fn gershgorin(&self) -> (f64, f64) {
        let n = self.len();
        let mut lo = f64::INFINITY;
        let mut hi = f64::NEG_INFINITY;
        for i in 0..n {
            let left = if i > 0 { self.off[i - 1].abs() } else { 0.0 };
            let right = if i + 1 < n { self.off[i].abs() } else { 0.0 };
            lo = lo.min(self.diag[i] - left - right);
            hi = hi.max(self.diag[i] + left + right);
        }
        (lo, hi)
    }

    /// The `k`-th smallest eigenvalue (0-based) by bisection on Sturm counts.
    pub fn eigenvalue(&self, k: usize) -> f64 {
        let (lo, hi) = self.gershgorin();
        let pad = 1e-12 * (hi - lo).abs().max(1.0);
        let (mut a, mut b) = (lo - pad, hi + pad);
        for _ in 0..200 {
            let mid = 0.5 * (a + b);
            if b - a <= 4.0 * f64::EPSILON * mid.abs().max(1e-300) {
                break;
            }
            if self.sturm_count(mid) > k {
                b = mid;
            } else {
                a = mid;
            }
        }
        0.5 * (a + b)
    }

    /// Eigenvector for an (accurately known) eigenvalue by inverse iteration.
    pub fn eigenvector(&self, eigenvalue: f64) -> Result<Vec<f64>> {
        let n = self.len();
        let scale = self.gershgorin().1.abs().max(1.0);
        let shift = eigenvalue + 1e-10 * scale;
        let diag: Vec<f64> = self.diag.iter().map(|d| d - shift).collect();
        let mut v: Vec<f64> = (0..n).map(|i| 1.0 + 0.01 * ((i * 7919) % 13) as f64).collect();
        for _ in 0..4 {
            v = solve_tridiagonal(&self.off, &diag, &self.off, &v)?;
            let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
            v.iter_mut().for_each(|x| *x /= norm);
        }
        Ok(v)
    }
}

/// Solve a general tridiagonal system with partial pivoting.
///
/// `sub[i]` sits at `(i+1, i)`, `sup[i]` at `(i, i+1)`.
pub fn solve_tridiagonal(sub: &[f64], diag: &[f64], sup: &[f64], rhs: &[f64]) -> Result<Vec<f64>> {
    let n = diag.len();
    let mut dl = sub.to_vec();
    let mut d = diag.to_vec();
    let mut du = sup.to_vec();
    let mut b = rhs.to_vec();
    if n == 1 {
        if d[0] == 0.0 {
            return Err(Error::Degenerate("singular 1x1 system".into()));
        }
        return Ok(vec![b[0] / d[0]]);
    }
    for i in 0..n - 1 {
        if d[i].abs() >= dl[i].abs() {
            if d[i] == 0.0 {
                return Err(Error::Degenerate("singular tridiagonal system".into()));
            }
            let fact = dl[i] / d[i];
            d[i + 1] -= fact * du[i];
            b[i + 1] -= fact * b[i];
            dl[i] = 0.0;
        } else {
            let fact = d[i] / dl[i];
            d[i] = dl[i];
            let temp = d[i + 1];
            d[i + 1] = du[i] - fact * temp;
            if i + 2 < n {
                dl[i] = du[i + 1];
                du[i + 1] = -fact * dl[i];
            }
            du[i] = temp;
            let tb = b[i];
            b[i] = b[i + 1];
            b[i + 1] = tb - fact * b[i + 1];
        }
    }
    if d[n - 1] == 0.0 {
        return Err(Error::Degenerate("singular tridiagonal system".into()));
    }
    b[n - 1] /= d[n - 1];
    b[n - 2] = (b[n - 2] - du[n - 2] * b[n - 1]) / d[n - 2];
    for i in (0..n - 2).rev() {
        b[i] = (b[i] - du[i] * b[i + 1] - dl[i] * b[i + 2]) / d[i];
    }
    if b.iter().any(|x| !x.is_finite()) {
        return Err(Error::Degenerate("non-finite tridiagonal solution".into()));
    }
    Ok(b)
}

/// A symmetric matrix in either banded or dense storage.
#[derive(Clone, Debug)]
pub enum SymMatrix {
    Tridiagonal(SymTridiag),
    Dense(DMatrix<f64>),
    Structured(StructuredMatrix),
}

/// Spectral summary of a generalized problem `M x = μ W x`.
#[derive(Clone, Debug)]
pub struct Spectrum {
    /// Lowest eigenvalues, ascending.
    pub lowest: Vec<f64>,
    /// Matching eigenvectors, normalised in the weighted inner product.
    pub vectors: Vec<Vec<f64>>,
    pub negative_count: usize,
    pub smallest_abs: f64,
    pub norm_estimate: f64,
}

impl SymMatrix {
    pub fn len(&self) -> usize {
        match self {
            SymMatrix::Tridiagonal(t) => t.len(),
            SymMatrix::Dense(m) => m.nrows(),
            SymMatrix::Structured(m) => m.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// `xᵀ M y`.
    pub fn bilinear(&self, x: &[f64], y: &[f64]) -> f64 {
        match self {
            SymMatrix::Tridiagonal(t) => t.bilinear(x, y),
            _ => self.matvec(x).iter().zip(y).map(|(a, b)| a * b).sum(),
        }
    }

    pub fn matvec(&self, x: &[f64]) -> Vec<f64> {
        match self {
            SymMatrix::Tridiagonal(t) => t.matvec(x),
            SymMatrix::Dense(m) => {
                let y = m * DVector::from_column_slice(x);
                y.as_slice().to_vec()
            }
            SymMatrix::Structured(m) => m.matvec(x),
        }
    }

    /// `self + diag(d)`.
    pub fn plus_diagonal(&self, d: &[f64]) -> SymMatrix {
        match self {
            SymMatrix::Tridiagonal(t) => SymMatrix::Tridiagonal(t.plus_diagonal(d)),
            SymMatrix::Dense(m) => {
                let mut m = m.clone();
                for (i, v) in d.iter().enumerate() {
                    m[(i, i)] += v;
                }
                SymMatrix::Dense(m)
            }
            SymMatrix::Structured(m) => SymMatrix::Structured(m.plus_diagonal(d)),
        }
    }

    /// `a * self + diag(d)`.
    pub fn scaled_plus_diagonal(&self, a: f64, d: &[f64]) -> SymMatrix {
        match self {
            SymMatrix::Tridiagonal(t) => SymMatrix::Tridiagonal(SymTridiag {
                diag: t.diag.iter().zip(d).map(|(x, y)| a * x + y).collect(),
                off: t.off.iter().map(|x| a * x).collect(),
                shift: t.shift.iter().zip(d).map(|(x, y)| a * x + y).collect(),
            }),
            SymMatrix::Dense(m) => {
                let mut m = m * a;
                for (i, v) in d.iter().enumerate() {
                    m[(i, i)] += v;
                }
                SymMatrix::Dense(m)
            }
            SymMatrix::Structured(m) => SymMatrix::Structured(m.scaled_plus_diagonal(a, d)),
        }
    }

    pub fn solve(&self, rhs: &[f64]) -> Result<Vec<f64>> {
        match self {
            SymMatrix::Tridiagonal(t) => solve_tridiagonal(&t.off, &t.diag, &t.off, rhs),
            SymMatrix::Dense(m) => {
                let lu = m.clone().lu();
                let x = lu
                    .solve(&DVector::from_column_slice(rhs))
                    .ok_or_else(|| Error::Degenerate("singular dense system".into()))?;
                if x.iter().any(|v| !v.is_finite()) {
                    return Err(Error::Degenerate("non-finite dense solution".into()));
                }
                Ok(x.as_slice().to_vec())
            }
            SymMatrix::Structured(m) => m.solve(rhs),
        }
    }

    /// Factor once, solve many times.
    pub fn factor(&self) -> Result<Factored> {
        match self {
            SymMatrix::Tridiagonal(t) => Ok(Factored::Tridiagonal(t.clone())),
            SymMatrix::Dense(m) => {
                let lu = m.clone().lu();
                if !lu.is_invertible() {
                    return Err(Error::Degenerate("singular dense system".into()));
                }
                Ok(Factored::Dense(Box::new(lu)))
            }
            SymMatrix::Structured(m) => Ok(Factored::Structured(m.clone())),
        }
    }

    /// `W^{-1/2} M W^{-1/2}`: the symmetric form of the operator `W^{-1} M`.
    ///
    /// Structured matrices are returned unchanged; their spectra are computed
    /// in the weighted inner product directly.
    pub fn symmetric_form(&self, weights: &[f64]) -> SymMatrix {
        let s: Vec<f64> = weights.iter().map(|w| 1.0 / w.sqrt()).collect();
        match self {
            SymMatrix::Tridiagonal(t) => SymMatrix::Tridiagonal(SymTridiag::new(
                t.diag.iter().zip(&s).map(|(d, si)| d * si * si).collect(),
                t.off
                    .iter()
                    .enumerate()
                    .map(|(i, o)| o * s[i] * s[i + 1])
                    .collect(),
            )),
            SymMatrix::Dense(m) => {
                let mut out = m.clone();
                for j in 0..m.ncols() {
                    for i in 0..m.nrows() {
                        out[(i, j)] *= s[i] * s[j];
                    }
                }
                SymMatrix::Dense(out)
            }
            SymMatrix::Structured(m) => SymMatrix::Structured(m.clone()),
        }
    }

    /// Spectrum of `W^{-1} M` (lowest `count` eigenpairs, inertia, smallest |μ|).
    pub fn weighted_spectrum(&self, weights: &[f64], count: usize) -> Result<Spectrum> {
        if let SymMatrix::Structured(m) = self {
            return m.weighted_spectrum(weights, count);
        }
        let sym = self.symmetric_form(weights);
        let n = self.len();
        let count = count.min(n);
        let unscale = |y: Vec<f64>| -> Vec<f64> {
            // y has unit Euclidean norm, x = W^{-1/2} y has unit weighted norm
            y.iter().zip(weights).map(|(v, w)| v / w.sqrt()).collect()
        };
        match sym {
            SymMatrix::Tridiagonal(t) => {
                let (lo, hi) = t.gershgorin();
                let negative_count = t.sturm_count(0.0);
                let mut lowest = Vec::with_capacity(count);
                let mut vectors = Vec::with_capacity(count);
                for k in 0..count {
                    let mu = t.eigenvalue(k);
                    lowest.push(mu);
                    vectors.push(unscale(t.eigenvector(mu)?));
                }
                let below = if negative_count > 0 {
                    t.eigenvalue(negative_count - 1).abs()
                } else {
                    f64::INFINITY
                };
                let above = if negative_count < n {
                    t.eigenvalue(negative_count).abs()
                } else {
                    f64::INFINITY
                };
                Ok(Spectrum {
                    lowest,
                    vectors,
                    negative_count,
                    smallest_abs: below.min(above),
                    norm_estimate: lo.abs().max(hi.abs()),
                })
            }
            SymMatrix::Dense(m) => {
                let eig = nalgebra::linalg::SymmetricEigen::try_new(m, 1e-14, 0)
                    .ok_or_else(|| Error::Eigensolve("symmetric QR did not converge".into()))?;
                let mut order: Vec<usize> = (0..n).collect();
                order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
                let values: Vec<f64> = order.iter().map(|&i| eig.eigenvalues[i]).collect();
                if values.iter().any(|v| !v.is_finite()) {
                    return Err(Error::Eigensolve("non-finite eigenvalues".into()));
                }
                let negative_count = values.iter().filter(|&&v| v < 0.0).count();
                let smallest_abs = values.iter().map(|v| v.abs()).fold(f64::INFINITY, f64::min);
                let norm_estimate = values.iter().map(|v| v.abs()).fold(0.0, f64::max);
                let vectors = order[..count]
                    .iter()
                    .map(|&i| unscale(eig.eigenvectors.column(i).iter().copied().collect()))
                    .collect();
                Ok(Spectrum {
                    lowest: values[..count].to_vec(),
                    vectors,
                    negative_count,
                    smallest_abs,
                    norm_estimate,
                })
            }
            SymMatrix::Structured(_) => unreachable!(),
        }
    }

    /// Condition-number estimate of `W^{-1} M` from its extreme eigenvalues.
    pub fn condition_estimate(&self, weights: &[f64]) -> Result<f64> {
        if let SymMatrix::Structured(m) = self {
            let spec = m.weighted_spectrum(weights, 0)?;
            return Ok(spec.norm_estimate / spec.smallest_abs);
        }
        match self.symmetric_form(weights) {
            SymMatrix::Tridiagonal(t) => {
                let (lo, hi) = t.gershgorin();
                let k = t.sturm_count(0.0);
                let n = t.len();
                let mut smallest = f64::INFINITY;
                if k > 0 {
                    smallest = smallest.min(t.eigenvalue(k - 1).abs());
                }
                if k < n {
                    smallest = smallest.min(t.eigenvalue(k).abs());
                }
                Ok(lo.abs().max(hi.abs()) / smallest)
            }
            dense @ SymMatrix::Dense(_) => {
                let spec = dense.weighted_spectrum(&vec![1.0; weights.len()], 0)?;
                Ok(spec.norm_estimate / spec.smallest_abs)
            }
            SymMatrix::Structured(_) => unreachable!(),
        }
    }
}

/// A factored system, reusable across right-hand sides.
pub enum Factored {
    Tridiagonal(SymTridiag),
    Dense(Box<nalgebra::linalg::LU<f64, nalgebra::Dyn, nalgebra::Dyn>>),
    Structured(StructuredMatrix),
}

impl Factored {
    pub fn solve(&self, rhs: &[f64]) -> Result<Vec<f64>> {
        match self {
            Factored::Tridiagonal(t) => solve_tridiagonal(&t.off, &t.diag, &t.off, rhs),
            Factored::Dense(lu) => {
                let x = lu
                    .solve(&DVector::from_column_slice(rhs))
                    .ok_or_else(|| Error::Degenerate("singular dense system".into()))?;
                Ok(x.as_slice().to_vec())
            }
            Factored::Structured(m) => m.solve(rhs),
        }
    }
}
