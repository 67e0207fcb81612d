//! Derivatives of the symbol in the frequency variable.
//!
//! Writing the translated operator as `A + B(ζ) + Q(ζ)` with `B` linear and
//! `Q` quadratic in `ζ` (the only quadratic term is `μ4π²|ζ|²u` in the
//! interior momentum rows), differentiating `(A + B(ζ) + Q(ζ))x(ζ) = b(ζ)`
//! at `ζ = 0` along directions `ζ_1, …, ζ_j` gives, for every subset `S` of
//! the directions,
//!
//! ```text
//!   A x_S = b'_S − Σ_{i∈S} B(ζ_i) x_{S∖i} − Σ_{i≠l∈S} μ4π²(ζ_i·ζ_l) u_{S∖{i,l}}
//! ```
//!
//! where the second sum runs over ordered pairs and `b'_S` is the derivative
//! of the data (only the kinematic datum `2πi(ξ+ζ)·H` depends on `ζ`).  Each
//! level is one solve at the same `ξ` with the factored base operator, and
//! the result is symmetric and multilinear in the directions by
//! construction.

use std::f64::consts::PI;

use crate::chebyshev::Chebyshev;
use crate::error::{Error, Result};
use crate::grid::{C64, I};
use crate::linalg::matvec;
use crate::params::Params;

use super::block::PsiData;
use super::frequency::{assemble_parts, Degrees, FrequencyOperator, FrequencySolution};

/// Largest supported derivative order.
pub const MAX_ORDER: usize = 3;

/// Reusable context for derivatives at one frequency: the factored
/// stationary operator and the direction-linear parts.
#[derive(Debug, Clone)]
pub struct DerivativeContext {
    xi: [f64; 2],
    params: Params,
    op: FrequencyOperator,
    cheb: Chebyshev,
}

impl DerivativeContext {
    /// Builds the context at `xi ≠ 0` (the stationary operator is used).
    pub fn new(xi: [f64; 2], params: &Params, cheb: &Chebyshev) -> Result<Self> {
        if xi[0] == 0.0 && xi[1] == 0.0 {
            return Err(Error::Unsupported("symbol derivatives are only available at ξ ≠ 0".into()));
        }
        let params = params.with_gamma(0.0);
        let op = FrequencyOperator::new(xi, &params, cheb)?;
        Ok(Self { xi, params, op, cheb: cheb.clone() })
    }

    /// The factored base operator.
    pub fn operator(&self) -> &FrequencyOperator {
        &self.op
    }

    /// Returns `x_S` for every subset mask `S` of `directions`
    /// (index = bit mask), given the raw base right-hand side and a
    /// function producing the first-order data derivative.
    pub fn tree<F>(&self, directions: &[[f64; 2]], base_rhs: &[C64], data_derivative: F) -> Result<Vec<Vec<C64>>>
    where
        F: Fn([f64; 2]) -> Vec<C64>,
    {
        let j = directions.len();
        if j > MAX_ORDER {
            return Err(Error::Unsupported(format!("derivative order {j} exceeds {MAX_ORDER}")));
        }
        let n = self.op.dim();
        let ny = self.cheb.len();
        let shifts: Vec<Vec<C64>> = directions
            .iter()
            .map(|&z| assemble_parts(self.xi, z, &self.params, 0.0, &self.cheb, false, Degrees::LINEAR))
            .collect();
        let mut x: Vec<Vec<C64>> = vec![Vec::new(); 1 << j];
        x[0] = self.op.solve_raw(base_rhs);
        let mut masks: Vec<usize> = (1..(1usize << j)).collect();
        masks.sort_by_key(|m| m.count_ones());
        let mu = self.params.viscosity;
        for mask in masks {
            let mut rhs = vec![C64::new(0.0, 0.0); n];
            let members: Vec<usize> = (0..j).filter(|i| mask & (1 << i) != 0).collect();
            if members.len() == 1 {
                rhs = data_derivative(directions[members[0]]);
            }
            for &i in &members {
                let bx = matvec(&shifts[i], n, &x[mask ^ (1 << i)]);
                for (r, v) in rhs.iter_mut().zip(bx) {
                    *r -= v;
                }
            }
            for &i in &members {
                for &l in &members {
                    if i == l {
                        continue;
                    }
                    let dot = directions[i][0] * directions[l][0] + directions[i][1] * directions[l][1];
                    if dot == 0.0 {
                        continue;
                    }
                    let coef = mu * 4.0 * PI * PI * dot;
                    let prev = &x[mask ^ (1 << i) ^ (1 << l)];
                    for c in 0..3 {
                        for jj in 1..ny - 1 {
                            let idx = ny * (1 + c) + jj;
                            rhs[idx] -= prev[idx] * coef;
                        }
                    }
                }
            }
            x[mask] = self.op.solve_raw(&rhs);
        }
        Ok(x)
    }

    /// `∂_{ζ_1}⋯∂_{ζ_j} 𝐦(ξ)` applied to `data`.
    pub fn derivative(&self, directions: &[[f64; 2]], data: &PsiData) -> Result<FrequencySolution> {
        let ny = self.cheb.len();
        let base = self.op.rhs(&data.to_frequency_data(self.xi))?;
        let n = self.op.dim();
        let tree = self.tree(directions, &base, |z| {
            let mut b = vec![C64::new(0.0, 0.0); n];
            b[4 * ny] = I * (2.0 * PI) * (data.hvec[0] * z[0] + data.hvec[1] * z[1]);
            b
        })?;
        let full = tree.last().expect("tree has at least one entry");
        let mut sol = FrequencySolution::from_vec(full, ny, self.xi);
        sol.eta = C64::new(0.0, 0.0);
        Ok(sol)
    }
}

/// Directional derivative `∂_{ζ_1}⋯∂_{ζ_j} 𝐦(ξ)[data]` of the stationary
/// symbol (`η` of the result is left at 0; use `χ`).
pub fn symbol_derivative(
    xi: [f64; 2],
    params: &Params,
    cheb: &Chebyshev,
    directions: &[[f64; 2]],
    data: &PsiData,
) -> Result<FrequencySolution> {
    DerivativeContext::new(xi, params, cheb)?.derivative(directions, data)
}

/// Size (largest entry of `(p, u, χ)`) of the order-`order` Taylor remainder
///
/// ```text
///   ℛ_j = 𝐦(ξ+ζ)Y − Σ_{i≤j} ∂_ζ^i 𝐦(ξ)[ζ,…,ζ]Y / i!
/// ```
///
/// of the stationary symbol applied to `data`.
pub fn taylor_remainder(
    xi: [f64; 2],
    zeta: [f64; 2],
    params: &Params,
    cheb: &Chebyshev,
    data: &PsiData,
    order: usize,
) -> Result<f64> {
    let ctx = DerivativeContext::new(xi, params, cheb)?;
    let shifted = [xi[0] + zeta[0], xi[1] + zeta[1]];
    let exact = FrequencyOperator::new(shifted, &ctx.params, cheb)?.solve(&data.to_frequency_data(shifted))?;
    let mut rem = exact.to_vec();
    let mut factorial = 1.0;
    for i in 0..=order {
        if i > 0 {
            factorial *= i as f64;
        }
        let term = if i == 0 {
            ctx.op.solve(&data.to_frequency_data(xi))?
        } else {
            ctx.derivative(&vec![zeta; i], data)?
        };
        for (r, t) in rem.iter_mut().zip(term.to_vec()) {
            *r -= t / factorial;
        }
    }
    Ok(rem.iter().fold(0.0f64, |m, z| m.max(z.norm())))
}

/// Least-squares slope of `log y` against `log x`.
pub fn loglog_slope(x: &[f64], y: &[f64]) -> f64 {
    let lx: Vec<f64> = x.iter().map(|v| v.ln()).collect();
    let ly: Vec<f64> = y.iter().map(|v| v.ln()).collect();
    let n = lx.len() as f64;
    let mx = lx.iter().sum::<f64>() / n;
    let my = ly.iter().sum::<f64>() / n;
    let sxy: f64 = lx.iter().zip(&ly).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = lx.iter().map(|a| (a - mx) * (a - mx)).sum();
    sxy / sxx
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};

    fn random_data(ny: usize, seed: u64) -> PsiData {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        let mut c = || C64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0));
        let mut d = PsiData::zeros(ny);
        for comp in 0..3 {
            // smooth force profiles
            let (a, b) = (c(), c());
            d.f[comp] = (0..ny).map(|j| a + b * (j as f64 / ny as f64)).collect();
        }
        d.k = [c(), c(), c()];
        d.hvec = [c(), c()];
        d
    }

    fn setup() -> (Params, Chebyshev) {
        let params = Params::default();
        let cheb = Chebyshev::new(16, params.depth).unwrap();
        (params, cheb)
    }

    fn max_rel(a: &FrequencySolution, b: &FrequencySolution) -> f64 {
        let (va, vb) = (a.to_vec(), b.to_vec());
        let s = vb.iter().fold(0.0f64, |m, z| m.max(z.norm()));
        va.iter().zip(&vb).fold(0.0f64, |m, (x, y)| m.max((x - y).norm())) / s
    }

    #[test]
    fn first_derivative_matches_central_differences() {
        let (params, cheb) = setup();
        let data = random_data(16, 1);
        let h = 1e-4;
        for r in [0.5, 1.0, 4.0] {
            for dir in [[1.0, 0.0], [0.0, 1.0], [0.6, 0.8]] {
                let xi = [r * 0.8, r * 0.6];
                let d = symbol_derivative(xi, &params, &cheb, &[dir], &data).unwrap();
                let at = |s: f64| {
                    let x = [xi[0] + s * dir[0], xi[1] + s * dir[1]];
                    crate::symbol::solve_frequency(x, &params, &cheb, &data.to_frequency_data(x)).unwrap()
                };
                let fd = at(h).axpy(C64::new(-1.0, 0.0), &at(-h)).scale(C64::new(0.5 / h, 0.0));
                let e = max_rel(&d, &fd);
                assert!(e <= 1e-5, "|ξ|={r} dir={dir:?}: {e}");
            }
        }
    }

    #[test]
    fn second_derivative_is_symmetric() {
        let (params, cheb) = setup();
        let data = random_data(16, 2);
        let xi = [0.7, -0.4];
        let (a, b) = ([1.0, 0.3], [-0.2, 0.9]);
        let ab = symbol_derivative(xi, &params, &cheb, &[a, b], &data).unwrap();
        let ba = symbol_derivative(xi, &params, &cheb, &[b, a], &data).unwrap();
        let scale = ab.max_abs();
        let diff = ab.axpy(C64::new(-1.0, 0.0), &ba).max_abs();
        assert!(diff <= 1e-12 * scale, "{diff}");
    }

    #[test]
    fn derivatives_are_multilinear() {
        let (params, cheb) = setup();
        let data = random_data(16, 3);
        let xi = [0.3, 0.5];
        let z = symbol_derivative(xi, &params, &cheb, &[[1.0, 0.0], [0.0, 0.0]], &data).unwrap();
        assert!(z.max_abs() <= 1e-14);
        let a = symbol_derivative(xi, &params, &cheb, &[[2.0, 0.0], [0.0, 1.0]], &data).unwrap();
        let b = symbol_derivative(xi, &params, &cheb, &[[1.0, 0.0], [0.0, 1.0]], &data).unwrap();
        assert!(a.axpy(C64::new(-2.0, 0.0), &b).max_abs() <= 1e-12 * a.max_abs());
        let s = symbol_derivative(xi, &params, &cheb, &[[1.0, 1.0]], &data).unwrap();
        let s1 = symbol_derivative(xi, &params, &cheb, &[[1.0, 0.0]], &data).unwrap();
        let s2 = symbol_derivative(xi, &params, &cheb, &[[0.0, 1.0]], &data).unwrap();
        assert!(s.axpy(C64::new(-1.0, 0.0), &s1.axpy(C64::new(1.0, 0.0), &s2)).max_abs() <= 1e-12 * s.max_abs());
    }

    #[test]
    fn order_and_frequency_limits() {
        let (params, cheb) = setup();
        let data = random_data(16, 4);
        assert!(symbol_derivative([0.0, 0.0], &params, &cheb, &[[1.0, 0.0]], &data).is_err());
        assert!(symbol_derivative([1.0, 0.0], &params, &cheb, &[[1.0, 0.0]; 4], &data).is_err());
    }

    #[test]
    fn taylor_remainders_have_the_expected_order() {
        let (params, cheb) = setup();
        let data = random_data(16, 5);
        let xi = [0.8, 0.6];
        let radii = [1e-1, 1e-2, 1e-3];
        for j in 0..=2 {
            let rem: Vec<f64> = radii
                .iter()
                .map(|&r| taylor_remainder(xi, [r * 0.6, -r * 0.8], &params, &cheb, &data, j).unwrap())
                .collect();
            let slope = loglog_slope(&radii, &rem);
            let want = (j + 1) as f64;
            assert!((want - 0.2..=want + 0.2).contains(&slope), "j={j}: slope {slope} ({rem:?})");
        }
    }

    #[test]
    fn slope_of_a_power_law() {
        let x = [1.0, 2.0, 4.0];
        let y: Vec<f64> = x.iter().map(|v: &f64| 3.0 * v.powf(2.5)).collect();
        assert!((loglog_slope(&x, &y) - 2.5).abs() < 1e-12);
    }
}
