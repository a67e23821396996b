//! Discrete radial operators: the classical Laplacian `-Δ` and the 1D
//! fractional Laplacian `(-Δ)^s`.
//!
//! Every operator is stored as a symmetric stiffness matrix `K` together with
//! the grid weights `W`; the operator itself is `A = W⁻¹ K`, which is
//! symmetric in the weighted inner product and gives `⟨Au, u⟩ = uᵀ K u`.

use std::sync::Arc;

use serde::{Deserialize, Serialize};
use statrs::function::gamma::gamma;

use crate::error::{check_len, Error, Result};
use crate::grid::{sphere_area, RadialGrid};

use crate::linalg::{FoldedToeplitz, StructuredMatrix, SymMatrix, SymTridiag};

/// Fractional operators on grids up to this size are assembled densely;
/// larger grids use the matrix-free folded Toeplitz form.
pub const DENSE_FRACTIONAL_NODES: usize = 512;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Boundary {
    DecayAtR,
    Dirichlet,
}

#[derive(Clone, Debug)]
pub struct DiscreteOperator {
    order: f64,
    stiffness: SymMatrix,
    weights: Vec<f64>,
    boundary: Boundary,
}

impl DiscreteOperator {
    pub fn order(&self) -> f64 {
        self.order
    }

    pub fn boundary(&self) -> Boundary {
        self.boundary
    }

    /// Gershgorin bound on `‖A‖` (row sums of `W⁻¹|K|`).
    pub fn norm_estimate(&self) -> f64 {
        match &self.stiffness {
            SymMatrix::Tridiagonal(t) => (0..t.len())
                .map(|i| {
                    let left = if i > 0 { t.off[i - 1].abs() } else { 0.0 };
                    let right = if i + 1 < t.len() { t.off[i].abs() } else { 0.0 };
                    (t.diag[i].abs() + left + right) / self.weights[i]
                })
                .fold(0.0, f64::max),
            SymMatrix::Dense(m) => (0..m.nrows())
                .map(|i| m.row(i).iter().map(|x| x.abs()).sum::<f64>() / self.weights[i])
                .fold(0.0, f64::max),
            SymMatrix::Structured(m) => (0..m.len())
                .map(|i| m.row_bound(i) / self.weights[i])
                .fold(0.0, f64::max),
        }
    }

    pub fn stiffness(&self) -> &SymMatrix {
        &self.stiffness
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    /// `K u`, i.e. `W (A u)`.
    pub fn stiffness_apply(&self, u: &[f64]) -> Vec<f64> {
        self.stiffness.matvec(u)
    }

    /// `A u` at the nodes.
    pub fn apply(&self, u: &[f64]) -> Result<Vec<f64>> {
        check_len(self.len(), u.len())?;
        let mut y = self.stiffness.matvec(u);
        y.iter_mut().zip(&self.weights).for_each(|(v, w)| *v /= w);
        Ok(y)
    }

    /// `⟨A u, u⟩`, the discrete `∫|(-Δ)^{s/2} u|²`.
    pub fn quadratic_form(&self, u: &[f64]) -> f64 {
        self.stiffness.bilinear(u, u)
    }

    /// `⟨A u, w⟩`.
    pub fn bilinear(&self, u: &[f64], w: &[f64]) -> f64 {
        self.stiffness.bilinear(u, w)
    }

    /// Stiffness of `A + diag(d)` in the weighted inner product.
    pub fn shifted_stiffness(&self, d: &[f64]) -> SymMatrix {
        let wd: Vec<f64> = d.iter().zip(&self.weights).map(|(x, w)| x * w).collect();
        self.stiffness.plus_diagonal(&wd)
    }
}

/// Second-order finite-volume discretization of the radial Laplacian
/// `-u'' - (N-1)/r u'` with `u'(0) = 0` and `u = 0` at the outer face.
pub fn build_radial_laplacian(grid: &RadialGrid) -> Result<DiscreteOperator> {
    let n = grid.len();
    if n < 3 {
        return Err(Error::InvalidGrid(format!("need at least 3 nodes, got {n}")));
    }
    let h = grid.spacing();
    let omega = sphere_area(grid.dim());
    let d = grid.dim() as i32 - 1;
    let flux = |i: usize| omega * grid.face(i).powi(d) / h;
    let off: Vec<f64> = (0..n - 1).map(|i| -flux(i)).collect();
    let mut row_sums = vec![0.0; n];
    // antisymmetric ghost across the outer face
    row_sums[n - 1] = 2.0 * omega * grid.outer_radius().powi(d) / h;
    let boundary = if grid.is_ball() {
        Boundary::Dirichlet
    } else {
        Boundary::DecayAtR
    };
    Ok(DiscreteOperator {
        order: 1.0,
        stiffness: SymMatrix::Tridiagonal(SymTridiag::from_row_sums(row_sums, off)),
        weights: grid.weights().to_vec(),
        boundary,
    })
}

/// Kernel of the lattice fractional Laplacian, `K(0), K(1), ..., K(len-1)`.
///
/// `K(0)` is the diagonal `∑_{m≠0} K(m)`; off-diagonal couplings enter with a
/// minus sign.
pub fn fractional_kernel(s: f64, h: f64, len: usize) -> Vec<f64> {
    let scale = 4f64.powf(s) * gamma(0.5 + s) / std::f64::consts::PI.sqrt() * h.powf(-2.0 * s);
    let mut k = Vec::with_capacity(len);
    k.push(scale / gamma(1.0 + s));
    if len > 1 {
        k.push(scale * s / gamma(2.0 + s));
    }
    for m in 1..len.saturating_sub(1) {
        let mf = m as f64;
        let next = k[m] * (mf - s) / (mf + 1.0 + s);
        k.push(next);
    }
    k
}

/// Fractional Laplacian of order `s ∈ (0,1)` for even profiles on the line,
/// with `u ≡ 0` beyond the truncation radius.
pub fn build_fractional_laplacian_1d(grid: &RadialGrid, s: f64) -> Result<DiscreteOperator> {
    assemble_fractional(grid, s, grid.len() <= DENSE_FRACTIONAL_NODES)
}

fn assemble_fractional(grid: &RadialGrid, s: f64, dense: bool) -> Result<DiscreteOperator> {
    if !(s > 0.0 && s < 1.0) {
        return Err(Error::InvalidArgument(format!(
            "fractional order must lie in (0,1), got {s}"
        )));
    }
    if grid.is_ball() {
        return Err(Error::InvalidArgument(
            "fractional Laplacian on the ball is not supported".into(),
        ));
    }
    if grid.dim() != 1 {
        return Err(Error::InvalidArgument(format!(
            "fractional Laplacian is implemented for N = 1 only, got N = {}",
            grid.dim()
        )));
    }
    let n = grid.len();
    if n < 3 {
        return Err(Error::InvalidGrid(format!("need at least 3 nodes, got {n}")));
    }
    let h = grid.spacing();
    let kern = fractional_kernel(s, h, 2 * n);
    let weights = grid.weights().to_vec();
    if !dense {
        let symbol = move |theta: f64| (2.0 * (0.5 * theta).sin() / h).abs().powf(2.0 * s);
        let base = Arc::new(FoldedToeplitz::new(n, &kern, symbol));
        // uniform cells on the line
        let stiffness = StructuredMatrix::new(base, weights[0], vec![0.0; n]);
        return Ok(DiscreteOperator {
            order: s,
            stiffness: SymMatrix::Structured(stiffness),
            weights,
            boundary: Boundary::DecayAtR,
        });
    }
    let mut m = nalgebra::DMatrix::zeros(n, n);
    for j in 0..n {
        for i in 0..n {
            // node j ↔ lattice index j+1; mirror of node i ↔ index -i
            let direct = if i == j { kern[0] } else { -kern[i.abs_diff(j)] };
            let mirror = -kern[i + j + 1];
            m[(j, i)] = weights[j] * (direct + mirror);
        }
    }
    Ok(DiscreteOperator {
        order: s,
        stiffness: SymMatrix::Dense(m),
        weights,
        boundary: Boundary::DecayAtR,
    })
}

/// Operator of order `s` on `grid`: classical for `s = 1`, fractional otherwise.
pub fn build_operator(grid: &RadialGrid, s: f64) -> Result<DiscreteOperator> {
    if s == 1.0 {
        build_radial_laplacian(grid)
    } else {
        build_fractional_laplacian_1d(grid, s)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use std::f64::consts::PI;

    fn lowest_eig(op: &DiscreteOperator) -> f64 {
        op.stiffness()
            .weighted_spectrum(op.weights(), 1)
            .unwrap()
            .lowest[0]
    }

    #[test]
    fn ball_eigenvalue_three_dimensions() {
        let g = RadialGrid::unit_ball(3, 2000).unwrap();
        let mu = lowest_eig(&build_radial_laplacian(&g).unwrap());
        assert!((mu - PI * PI).abs() / (PI * PI) < 1e-5, "{mu}");
    }

    #[test]
    fn ball_eigenvalue_two_dimensions() {
        // j_{0,1}²
        let exact = 2.404_825_557_695_773_f64.powi(2);
        let g = RadialGrid::unit_ball(2, 2000).unwrap();
        let mu = lowest_eig(&build_radial_laplacian(&g).unwrap());
        assert!((mu - exact).abs() / exact < 1e-5, "{mu}");
    }

    #[test]
    fn ball_eigenvalue_converges_under_refinement() {
        let err = |n| {
            let g = RadialGrid::unit_ball(3, n).unwrap();
            (lowest_eig(&build_radial_laplacian(&g).unwrap()) - PI * PI).abs()
        };
        assert!(err(100) / err(200) > 2.0);
    }

    #[test]
    fn constant_is_harmonic_away_from_boundary() {
        let g = RadialGrid::whole_space(3, 200, 10.0).unwrap();
        let op = build_radial_laplacian(&g).unwrap();
        let au = op.apply(&vec![1.0; 200]).unwrap();
        assert!(au[..199].iter().all(|v| v.abs() < 1e-10));
        assert!(au[199] > 0.0);
    }

    #[test]
    fn operators_are_symmetric_in_weighted_product() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let g3 = RadialGrid::whole_space(3, 300, 12.0).unwrap();
        let g1 = RadialGrid::whole_space(1, 300, 12.0).unwrap();
        for (g, op) in [
            (&g3, build_radial_laplacian(&g3).unwrap()),
            (&g1, build_fractional_laplacian_1d(&g1, 0.4).unwrap()),
        ] {
            for _ in 0..10 {
                let u: Vec<f64> = (0..g.len()).map(|_| rng.random_range(-1.0..1.0)).collect();
                let w: Vec<f64> = (0..g.len()).map(|_| rng.random_range(-1.0..1.0)).collect();
                let lhs = g.inner(&op.apply(&u).unwrap(), &w);
                let rhs = g.inner(&u, &op.apply(&w).unwrap());
                assert!((lhs - rhs).abs() < 1e-10 * g.norm(&u) * g.norm(&w) * op.len() as f64);
            }
        }
    }

    #[test]
    fn fractional_operator_is_positive_definite() {
        let g = RadialGrid::whole_space(1, 200, 20.0).unwrap();
        for s in [0.2, 0.5, 0.9] {
            let mu = lowest_eig(&build_fractional_laplacian_1d(&g, s).unwrap());
            assert!(mu > -1e-10, "s = {s}: {mu}");
        }
    }

    /// `(-Δ)^s e^{-x²}` at `x` via its Fourier representation
    /// `(1/π) ∫₀^∞ ξ^{2s} √π e^{-ξ²/4} cos(ξx) dξ`, Simpson on a long interval.
    fn fourier_oracle(s: f64, x: f64) -> f64 {
        let (a, b, m) = (0.0, 40.0, 200_000);
        let step = (b - a) / m as f64;
        let f = |xi: f64| xi.powf(2.0 * s) * PI.sqrt() * (-xi * xi / 4.0).exp() * (xi * x).cos();
        let mut acc = f(a) + f(b);
        for i in 1..m {
            let w = if i % 2 == 1 { 4.0 } else { 2.0 };
            acc += w * f(a + i as f64 * step);
        }
        acc * step / 3.0 / PI
    }

    #[test]
    fn fractional_half_matches_gaussian_oracle() {
        let g = RadialGrid::whole_space(1, 2000, 12.0).unwrap();
        let op = build_fractional_laplacian_1d(&g, 0.5).unwrap();
        let u = g.sample(|x| (-x * x).exp());
        let au = op.apply(&u).unwrap();
        let exact = fourier_oracle(0.5, g.nodes()[0]);
        assert!((au[0] - exact).abs() / exact.abs() < 1e-3, "{} vs {exact}", au[0]);
        // closed form at the origin: 4^s Γ(s+1/2)/√π
        assert!((fourier_oracle(0.5, 0.0) - 2.0 / PI.sqrt()).abs() < 1e-9);
    }

    #[test]
    fn fractional_tends_to_classical() {
        let g = RadialGrid::whole_space(1, 400, 10.0).unwrap();
        let bump = g.sample(|x| if x < PI { 1.0 + x.cos() } else { 0.0 });
        let a1 = build_radial_laplacian(&g).unwrap().apply(&bump).unwrap();
        let a2 = build_fractional_laplacian_1d(&g, 0.999)
            .unwrap()
            .apply(&bump)
            .unwrap();
        let diff: f64 = a1.iter().zip(&a2).map(|(x, y)| (x - y).powi(2)).sum::<f64>().sqrt();
        let scale: f64 = a1.iter().map(|x| x * x).sum::<f64>().sqrt();
        assert!(diff / scale < 1e-2, "{}", diff / scale);
    }

    #[test]
    fn matrix_free_fractional_matches_dense() {
        let g = RadialGrid::whole_space(1, 300, 15.0).unwrap();
        let dense = assemble_fractional(&g, 0.6, true).unwrap();
        let free = assemble_fractional(&g, 0.6, false).unwrap();
        let u = g.sample(|x| (-(x * x) / 2.0).exp() * (1.0 + x).cos());
        let (a, b) = (dense.apply(&u).unwrap(), free.apply(&u).unwrap());
        for (x, y) in a.iter().zip(&b) {
            assert!((x - y).abs() < 1e-11 * dense.norm_estimate(), "{x} {y}");
        }
        let d: Vec<f64> = g.nodes().iter().map(|x| 0.5 - 3.0 / x.cosh().powi(2)).collect();
        let (sd, sf) = (dense.shifted_stiffness(&d), free.shifted_stiffness(&d));
        let (ed, ef) = (
            sd.weighted_spectrum(dense.weights(), 2).unwrap(),
            sf.weighted_spectrum(free.weights(), 2).unwrap(),
        );
        assert_eq!(ed.negative_count, ef.negative_count);
        for (x, y) in ed.lowest.iter().zip(&ef.lowest) {
            assert!((x - y).abs() < 1e-8, "{x} {y}");
        }
        assert!((ed.smallest_abs - ef.smallest_abs).abs() < 1e-8);
        let rhs = g.sample(|x| (-x).exp());
        for (x, y) in sd.solve(&rhs).unwrap().iter().zip(sf.solve(&rhs).unwrap()) {
            assert!((x - y).abs() < 1e-8 * (1.0 + x.abs()), "{x} {y}");
        }
    }

    #[test]
    fn fractional_rejections_and_zero() {
        let g = RadialGrid::whole_space(1, 50, 5.0).unwrap();
        assert!(build_fractional_laplacian_1d(&g, 1.0).is_err());
        assert!(build_fractional_laplacian_1d(&g, 0.0).is_err());
        let b = RadialGrid::unit_ball(1, 50).unwrap();
        assert!(build_fractional_laplacian_1d(&b, 0.5).is_err());
        let op = build_fractional_laplacian_1d(&g, 0.5).unwrap();
        assert!(op.apply(&[0.0; 50]).unwrap().iter().all(|&v| v == 0.0));
    }
}
