//! The operator-valued symbol `𝐦(ξ)` as a dense block matrix, and its
//! weighted operator norms.
//!
//! Inputs are `(f, k, H)` with `f` a nodal 3-vector profile, `k ∈ ℂ³` and
//! `H ∈ ℂ²` entering through the kinematic datum `h = 2πiξ·H`; outputs are
//! `(p, u, χ)`.  Block `m_ab` maps input group `b ∈ {f, k, H}` to output
//! group `a ∈ {p, u, χ}`.
//!
//! The weighted norms combine the vertical Sobolev norm and the frequency
//! weight in the Hilbert way, e.g. for the velocity output
//! `(‖u‖²_{H^{2+s}} + ⟨ξ⟩^{2(2+s)}‖u‖²_{L²})^{1/2}`; vertical norms are exact
//! quadratic forms of the collocation polynomials.

use std::f64::consts::PI;

use nalgebra::DMatrix;

use crate::chebyshev::Chebyshev;
use crate::error::Result;
use crate::grid::{C64, I};
use crate::params::Params;
use crate::spaces::bracket;

use super::derivative::DerivativeContext;
use super::frequency::{FrequencyData, FrequencyOperator, FrequencySolution};

/// Data `(f, k, H)` of the symbol's input space.
#[derive(Debug, Clone, PartialEq)]
pub struct PsiData {
    /// Bulk force profiles.
    pub f: [Vec<C64>; 3],
    /// Stress datum.
    pub k: [C64; 3],
    /// Horizontal vector whose divergence is the kinematic datum.
    pub hvec: [C64; 2],
}

impl PsiData {
    /// All-zero data.
    pub fn zeros(ny: usize) -> Self {
        let z = vec![C64::new(0.0, 0.0); ny];
        Self { f: [z.clone(), z.clone(), z], k: [C64::new(0.0, 0.0); 3], hvec: [C64::new(0.0, 0.0); 2] }
    }

    /// Number of vertical nodes.
    pub fn ny(&self) -> usize {
        self.f[0].len()
    }

    /// Flattened input vector `(f₁, f₂, f₃, k, H)`.
    pub fn to_vec(&self) -> Vec<C64> {
        let mut v = Vec::with_capacity(3 * self.ny() + 5);
        for c in 0..3 {
            v.extend_from_slice(&self.f[c]);
        }
        v.extend_from_slice(&self.k);
        v.extend_from_slice(&self.hvec);
        v
    }

    /// Inverse of [`Self::to_vec`].
    pub fn from_vec(v: &[C64], ny: usize) -> Self {
        Self {
            f: [v[0..ny].to_vec(), v[ny..2 * ny].to_vec(), v[2 * ny..3 * ny].to_vec()],
            k: [v[3 * ny], v[3 * ny + 1], v[3 * ny + 2]],
            hvec: [v[3 * ny + 3], v[3 * ny + 4]],
        }
    }

    /// Full per-frequency data at frequency `xi` (`g = 0`, `ω = 0`,
    /// `h = 2πiξ·H`).
    pub fn to_frequency_data(&self, xi: [f64; 2]) -> FrequencyData {
        let ny = self.ny();
        let mut d = FrequencyData::zeros(ny);
        d.f = self.f.clone();
        d.k = self.k;
        d.h = I * (2.0 * PI) * (self.hvec[0] * xi[0] + self.hvec[1] * xi[1]);
        d
    }
}

/// Output group of a block.
pub const OUTPUTS: [&str; 3] = ["p", "u", "chi"];
/// Input group of a block.
pub const INPUTS: [&str; 3] = ["f", "k", "H"];

/// Dense representation of `𝐦(ξ)` (or of one of its derivatives).
#[derive(Debug, Clone)]
pub struct SymbolBlock {
    /// Frequency.
    pub xi: [f64; 2],
    /// Regularity index used for the weights.
    pub s: u32,
    ny: usize,
    /// Column-major columns: `columns[c]` is the image of input unit `c`.
    columns: Vec<Vec<C64>>,
}

impl SymbolBlock {
    /// Number of vertical nodes.
    pub fn ny(&self) -> usize {
        self.ny
    }

    /// Number of input coordinates (`3Ny + 5`).
    pub fn n_in(&self) -> usize {
        3 * self.ny + 5
    }

    /// Number of output coordinates (`4Ny + 2`).
    pub fn n_out(&self) -> usize {
        4 * self.ny + 2
    }

    /// Entry `(row, col)`.
    pub fn entry(&self, row: usize, col: usize) -> C64 {
        self.columns[col][row]
    }

    /// Row range of output group `a`.
    pub fn out_range(&self, a: usize) -> std::ops::Range<usize> {
        let ny = self.ny;
        match a {
            0 => 0..ny,
            1 => ny..4 * ny,
            _ => 4 * ny..4 * ny + 2,
        }
    }

    /// Column range of input group `b`.
    pub fn in_range(&self, b: usize) -> std::ops::Range<usize> {
        let ny = self.ny;
        match b {
            0 => 0..3 * ny,
            1 => 3 * ny..3 * ny + 3,
            _ => 3 * ny + 3..3 * ny + 5,
        }
    }

    /// Dense sub-block `m_ab` (rows × cols).
    pub fn sub_block(&self, a: usize, b: usize) -> DMatrix<C64> {
        let rows = self.out_range(a);
        let cols = self.in_range(b);
        DMatrix::from_fn(rows.len(), cols.len(), |i, j| self.columns[cols.start + j][rows.start + i])
    }

    /// Applies the block matrix to `data`.
    pub fn apply(&self, data: &PsiData) -> FrequencySolution {
        let v = data.to_vec();
        let mut out = vec![C64::new(0.0, 0.0); self.n_out()];
        for (col, x) in self.columns.iter().zip(&v) {
            if *x == C64::new(0.0, 0.0) {
                continue;
            }
            for (o, m) in out.iter_mut().zip(col) {
                *o += m * x;
            }
        }
        FrequencySolution::from_vec(&out, self.ny, self.xi)
    }

    /// Largest entrywise difference to `other`.
    pub fn max_diff(&self, other: &SymbolBlock) -> f64 {
        let mut d: f64 = 0.0;
        for (a, b) in self.columns.iter().zip(&other.columns) {
            for (x, y) in a.iter().zip(b) {
                d = d.max((x - y).norm());
            }
        }
        d
    }

    /// Largest entry magnitude.
    pub fn max_abs(&self) -> f64 {
        self.columns.iter().flatten().fold(0.0, |m, z| m.max(z.norm()))
    }

    /// Entrywise complex conjugate.
    pub fn conj(&self) -> SymbolBlock {
        let columns = self.columns.iter().map(|c| c.iter().map(|z| z.conj()).collect()).collect();
        SymbolBlock { xi: self.xi, s: self.s, ny: self.ny, columns }
    }

    /// The nine weighted operator norms `⟦m_ab⟧`, indexed `[a][b]`, with
    /// the force input ranging over all nodal profiles.
    pub fn weighted_norms(&self, cheb: &Chebyshev) -> [[f64; 3]; 3] {
        self.weighted_norms_on(cheb, None)
    }

    /// Weighted operator norms with the force input restricted to vertical
    /// polynomials of degree `< degree` (all nodal profiles for `None`).
    pub fn weighted_norms_on(&self, cheb: &Chebyshev, degree: Option<usize>) -> [[f64; 3]; 3] {
        let w = Weights::new(cheb, self.s, self.xi, degree);
        let mut out = [[0.0; 3]; 3];
        for (a, row) in out.iter_mut().enumerate() {
            for (b, v) in row.iter_mut().enumerate() {
                let mut m = self.sub_block(a, b);
                if b == 0 {
                    m *= &w.f_basis;
                }
                let left = w.output(a);
                let right_inv = w.input_inverse(b);
                let weighted = left * m * right_inv;
                *v = weighted.singular_values().iter().fold(0.0f64, |acc, &x| acc.max(x));
            }
        }
        out
    }
}

/// Assembles `𝐦(ξ)` by solving with every unit input.
pub fn symbol_matrix(xi: [f64; 2], params: &Params, cheb: &Chebyshev, s: u32) -> Result<SymbolBlock> {
    let params = params.with_gamma(0.0);
    let op = FrequencyOperator::new(xi, &params, cheb)?;
    let ny = cheb.len();
    let n_in = 3 * ny + 5;
    let mut columns = Vec::with_capacity(n_in);
    for c in 0..n_in {
        let mut e = vec![C64::new(0.0, 0.0); n_in];
        e[c] = C64::new(1.0, 0.0);
        let data = PsiData::from_vec(&e, ny).to_frequency_data(xi);
        if xi == [0.0, 0.0] && c >= 3 * ny + 3 {
            columns.push(vec![C64::new(0.0, 0.0); 4 * ny + 2]);
            continue;
        }
        let sol = op.solve(&data)?;
        let mut v = sol.to_vec();
        v.resize(4 * ny + 2, C64::new(0.0, 0.0));
        columns.push(v);
    }
    Ok(SymbolBlock { xi, s, ny, columns })
}

/// Assembles the derivative `∂_{ζ_1}⋯∂_{ζ_j}𝐦(ξ)` as a block matrix.
pub fn symbol_derivative_matrix(
    xi: [f64; 2],
    params: &Params,
    cheb: &Chebyshev,
    s: u32,
    directions: &[[f64; 2]],
) -> Result<SymbolBlock> {
    let ctx = DerivativeContext::new(xi, params, cheb)?;
    derivative_matrix_with(&ctx, xi, cheb.len(), s, directions)
}

pub(crate) fn derivative_matrix_with(
    ctx: &DerivativeContext,
    xi: [f64; 2],
    ny: usize,
    s: u32,
    directions: &[[f64; 2]],
) -> Result<SymbolBlock> {
    let n_in = 3 * ny + 5;
    let mut columns = Vec::with_capacity(n_in);
    for c in 0..n_in {
        let mut e = vec![C64::new(0.0, 0.0); n_in];
        e[c] = C64::new(1.0, 0.0);
        let sol = ctx.derivative(directions, &PsiData::from_vec(&e, ny))?;
        columns.push(sol.to_vec());
    }
    Ok(SymbolBlock { xi, s, ny, columns })
}

/// Cholesky factors of the weighted Gram matrices at one frequency.
struct Weights {
    ny: usize,
    p: DMatrix<f64>,
    u: DMatrix<f64>,
    f_inv: DMatrix<f64>,
    f_basis: DMatrix<C64>,
    chi: f64,
    k_inv: f64,
    h_inv: f64,
}

impl Weights {
    fn new(cheb: &Chebyshev, s: u32, xi: [f64; 2], degree: Option<usize>) -> Self {
        let ny = cheb.len();
        let br = bracket(xi);
        let s = s as f64;
        let gram = DMatrix::from_row_slice(ny, ny, &cheb.l2_gram());
        let d = DMatrix::from_row_slice(ny, ny, cheb.d1());
        // nodal values of the admissible force profiles (columns)
        let basis = match degree {
            Some(k) if k < ny => chebyshev_basis(cheb, k),
            _ => DMatrix::<f64>::identity(ny, ny),
        };
        // square root of the L² Gram matrix (upper factor, LᵀL = G)
        let half = nalgebra::Cholesky::new(gram).expect("quadrature Gram matrix is positive definite").l().transpose();
        // upper factor R with RᵀR = Bᵀ(G(1+w) + Σ_k (Dᵏ)ᵀGDᵏ)B, from a QR
        // factorization of the stacked square-root rows (forming the normal
        // matrix would square the conditioning of the high derivatives)
        let sobolev = |order: usize, weight: f64, basis: &DMatrix<f64>| -> DMatrix<f64> {
            let cols = basis.ncols();
            let mut stacked = DMatrix::<f64>::zeros(ny * (order + 1), cols);
            stacked.rows_mut(0, ny).copy_from(&(&half * basis * (1.0 + weight).sqrt()));
            let mut dk = basis.clone();
            for k in 1..=order {
                dk = &d * dk;
                stacked.rows_mut(k * ny, ny).copy_from(&(&half * &dk));
            }
            stacked.qr().r()
        };
        let id = DMatrix::<f64>::identity(ny, ny);
        let s_int = s as usize;
        let p = sobolev(1 + s_int, br.powf(2.0 * (1.0 + s)), &id);
        let u = sobolev(2 + s_int, br.powf(2.0 * (2.0 + s)), &id);
        let f = sobolev(s_int, br.powf(2.0 * s), &basis);
        let f_inv = f.try_inverse().expect("triangular factor is invertible");
        let kdim = basis.ncols();
        let mut f_basis = DMatrix::from_element(3 * ny, 3 * kdim, C64::new(0.0, 0.0));
        for c in 0..3 {
            for i in 0..ny {
                for j in 0..kdim {
                    f_basis[(c * ny + i, c * kdim + j)] = C64::new(basis[(i, j)], 0.0);
                }
            }
        }
        Self {
            ny,
            p,
            u,
            f_inv,
            f_basis,
            chi: br.powf(1.5 + s),
            k_inv: br.powf(-(0.5 + s)),
            h_inv: br.powf(-(2.5 + s)),
        }
    }

    fn output(&self, a: usize) -> DMatrix<C64> {
        let ny = self.ny;
        match a {
            0 => self.p.map(|x| C64::new(x, 0.0)),
            1 => block_diag3(&self.u, ny),
            _ => DMatrix::from_diagonal_element(2, 2, C64::new(self.chi, 0.0)),
        }
    }

    fn input_inverse(&self, b: usize) -> DMatrix<C64> {
        match b {
            0 => block_diag3(&self.f_inv, self.f_inv.nrows()),
            1 => DMatrix::from_diagonal_element(3, 3, C64::new(self.k_inv, 0.0)),
            _ => DMatrix::from_diagonal_element(2, 2, C64::new(self.h_inv, 0.0)),
        }
    }
}

/// Nodal values of the Chebyshev polynomials `T_0, …, T_{k−1}` in the
/// reference variable of `[0, b]`.
fn chebyshev_basis(cheb: &Chebyshev, k: usize) -> DMatrix<f64> {
    let b = cheb.depth();
    DMatrix::from_fn(cheb.len(), k, |i, j| {
        let t = 1.0 - 2.0 * cheb.nodes()[i] / b;
        (j as f64 * t.clamp(-1.0, 1.0).acos()).cos()
    })
}

fn block_diag3(m: &DMatrix<f64>, ny: usize) -> DMatrix<C64> {
    let mut out = DMatrix::from_element(3 * ny, 3 * ny, C64::new(0.0, 0.0));
    for c in 0..3 {
        for i in 0..ny {
            for j in 0..ny {
                out[(c * ny + i, c * ny + j)] = C64::new(m[(i, j)], 0.0);
            }
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::symbol::solve_frequency;
    use rand::{Rng, SeedableRng};

    fn random_psi(ny: usize, rng: &mut impl Rng) -> PsiData {
        let v: Vec<C64> = (0..3 * ny + 5).map(|_| C64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))).collect();
        PsiData::from_vec(&v, ny)
    }

    #[test]
    fn block_application_reproduces_the_solve() {
        let params = Params::default();
        let cheb = Chebyshev::new(12, 1.0).unwrap();
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(7);
        let xi = [0.6, 0.8];
        let m = symbol_matrix(xi, &params, &cheb, 4).unwrap();
        assert_eq!((m.n_in(), m.n_out()), (41, 50));
        for _ in 0..3 {
            let d = random_psi(12, &mut rng);
            let direct = solve_frequency(xi, &params, &cheb, &d.to_frequency_data(xi)).unwrap();
            let via = m.apply(&d);
            let diff = via.axpy(C64::new(-1.0, 0.0), &direct).max_abs();
            assert!(diff <= 1e-12 * direct.max_abs(), "{diff}");
        }
    }

    #[test]
    fn conjugation_symmetry() {
        let params = Params::default();
        let cheb = Chebyshev::new(10, 1.0).unwrap();
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(8);
        for _ in 0..10 {
            let xi = [rng.gen_range(-3.0..3.0), rng.gen_range(-3.0..3.0)];
            let a = symbol_matrix(xi, &params, &cheb, 0).unwrap();
            let b = symbol_matrix([-xi[0], -xi[1]], &params, &cheb, 0).unwrap();
            assert!(b.max_diff(&a.conj()) <= 1e-10 * a.max_abs());
        }
    }

    #[test]
    fn psi_data_round_trip() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(9);
        let d = random_psi(9, &mut rng);
        assert_eq!(PsiData::from_vec(&d.to_vec(), 9), d);
        let fd = d.to_frequency_data([0.5, -1.0]);
        let want = I * (2.0 * PI) * (d.hvec[0] * 0.5 - d.hvec[1]);
        assert!((fd.h - want).norm() < 1e-14);
        assert_eq!(fd.g, vec![C64::new(0.0, 0.0); 9]);
    }

    #[test]
    fn weighted_norms_are_finite_and_positive() {
        let params = Params::default();
        let cheb = Chebyshev::new(12, 1.0).unwrap();
        let m = symbol_matrix([0.3, -0.2], &params, &cheb, 1).unwrap();
        let w = m.weighted_norms_on(&cheb, Some(8));
        for row in w {
            for v in row {
                assert!(v.is_finite() && v > 0.0, "{w:?}");
            }
        }
    }

    #[test]
    fn derivative_block_matches_directional_derivative() {
        let params = Params::default();
        let cheb = Chebyshev::new(10, 1.0).unwrap();
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(10);
        let xi = [0.4, 0.9];
        let dir = [[0.0, 1.0]];
        let m = symbol_derivative_matrix(xi, &params, &cheb, 0, &dir).unwrap();
        let d = random_psi(10, &mut rng);
        let direct = crate::symbol::symbol_derivative(xi, &params, &cheb, &dir, &d).unwrap();
        let via = m.apply(&d);
        let diff = (0..4 * 10 + 2).map(|i| (via.to_vec()[i] - direct.to_vec()[i]).norm()).fold(0.0, f64::max);
        assert!(diff <= 1e-12 * direct.max_abs());
    }
}
