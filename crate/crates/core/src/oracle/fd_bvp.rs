//! Independent finite-difference discretization of the per-frequency
//! boundary-value problem.
//!
//! The same equations as the collocation solver,
//!
//! ```text
//!   𝔤χ_c + 2πiξ_c p − μ(∂₃² − 4π²|ξ|²)u_c − μ2πiξ_c ∇·u − γ2πiξ₁u_c = f_c    (c = 1, 2)
//!   ∂₃p − μ(∂₃² − 4π²|ξ|²)u₃ − μ∂₃∇·u − γ2πiξ₁u₃ = f₃
//!   ∇·u = g,   u(0) = 0,   μ(∂₃u_c + 2πiξ_c u₃)(b) = k_c,
//!   −p(b) + 2μ∂₃u₃(b) − κ2πiξ·χ = k₃,   u₃(b) + γξ₁(ξ·χ)/|ξ|² = h,   2πiξ^⊥·χ = ω,
//! ```
//!
//! discretized on a uniform staggered mesh: velocities at the `N+1` nodes
//! `y_i = ib/N`, pressure at the `N` cell centres.  Divergence is imposed at
//! the centres, momentum at the interior nodes (centred differences,
//! centre-to-node averages for the pressure), and the surface conditions
//! use one-sided second-order differences and a linear extrapolation of the
//! pressure.  Every piece is second order; the two meshes `N` and `2N` are
//! combined by Richardson extrapolation, and the results are carried to
//! arbitrary points by four-point Lagrange interpolation.
//!
//! The unknowns are ordered level by level, `(u₁, u₂, u₃)` at node `i`
//! followed by `p` at centre `i+½`, so that everything except the two `χ`
//! columns is banded; `χ` is eliminated by a 2×2 Schur complement.

use std::f64::consts::PI;

use rand::Rng;

use crate::error::{Error, Result};
use crate::grid::{C64, I};
use crate::params::Params;
use crate::symbol::{eta_from_chi, FrequencyData, FrequencySolution};

use super::banded::Banded;

/// A smooth complex vertical profile
/// `c₀ + c₁y/b + c₂ sin(πy/b) + c₃ cos(2πy/b)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Profile {
    /// Coefficients `c₀ … c₃`.
    pub c: [C64; 4],
}

impl Profile {
    /// The zero profile.
    pub fn zero() -> Self {
        Self { c: [C64::new(0.0, 0.0); 4] }
    }

    /// Value at height `y` in a layer of depth `b`.
    pub fn eval(&self, y: f64, b: f64) -> C64 {
        let t = y / b;
        self.c[0] + self.c[1] * t + self.c[2] * (PI * t).sin() + self.c[3] * (2.0 * PI * t).cos()
    }

    /// Random coefficients with real and imaginary parts in `[−1, 1]`.
    pub fn random<R: Rng>(rng: &mut R) -> Self {
        Self { c: std::array::from_fn(|_| random_c64(rng)) }
    }
}

fn random_c64<R: Rng>(rng: &mut R) -> C64 {
    C64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))
}

/// Per-frequency data given by smooth profiles, so that it can be sampled on
/// any vertical mesh.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SmoothData {
    /// Divergence datum.
    pub g: Profile,
    /// Force profiles.
    pub f: [Profile; 3],
    /// Stress datum.
    pub k: [C64; 3],
    /// Kinematic datum.
    pub h: C64,
    /// Curl datum.
    pub omega: C64,
}

impl SmoothData {
    /// Random data with every entry of unit size.
    pub fn random<R: Rng>(rng: &mut R) -> Self {
        Self {
            g: Profile::random(rng),
            f: std::array::from_fn(|_| Profile::random(rng)),
            k: std::array::from_fn(|_| random_c64(rng)),
            h: random_c64(rng),
            omega: random_c64(rng),
        }
    }

    /// Samples the data at the given vertical nodes.
    pub fn sample(&self, nodes: &[f64], b: f64) -> FrequencyData {
        let s = |p: &Profile| nodes.iter().map(|&y| p.eval(y, b)).collect::<Vec<_>>();
        FrequencyData { g: s(&self.g), f: std::array::from_fn(|c| s(&self.f[c])), k: self.k, h: self.h, omega: self.omega }
    }
}

/// Solution on one staggered mesh.
#[derive(Debug, Clone)]
pub struct FdSolution {
    /// Mesh size `b/N`.
    pub h: f64,
    /// Velocity at the nodes `ih`, `i = 0..=N`.
    pub u: [Vec<C64>; 3],
    /// Pressure at the centres `(i+½)h`, `i = 0..N`.
    pub p: Vec<C64>,
    /// Surface-gradient vector.
    pub chi: [C64; 2],
}

impl FdSolution {
    /// Velocity component `c` at height `y`.
    pub fn u_at(&self, c: usize, y: f64) -> C64 {
        lagrange4(&self.u[c], 0.0, self.h, y)
    }

    /// Pressure at height `y`.
    pub fn p_at(&self, y: f64) -> C64 {
        lagrange4(&self.p, 0.5 * self.h, self.h, y)
    }
}

/// Four-point Lagrange interpolation of samples `v[i]` at `y₀ + ih`
/// (extrapolating within half a cell of the ends).
fn lagrange4(v: &[C64], y0: f64, h: f64, y: f64) -> C64 {
    let t = (y - y0) / h;
    let s = (t.floor() as isize - 1).clamp(0, v.len() as isize - 4) as usize;
    let mut out = C64::new(0.0, 0.0);
    for a in 0..4 {
        let mut w = 1.0;
        for b in 0..4 {
            if a != b {
                w *= (t - (s + b) as f64) / (a as f64 - b as f64);
            }
        }
        out += v[s + a] * w;
    }
    out
}

/// Solves the staggered finite-difference system with `n` cells at `xi ≠ 0`.
pub fn fd_solve(xi: [f64; 2], params: &Params, data: &SmoothData, n: usize) -> Result<FdSolution> {
    params.validate()?;
    if xi == [0.0, 0.0] {
        return Err(Error::Unsupported("the finite-difference oracle excludes ξ = 0".into()));
    }
    if n < 4 {
        return Err(Error::InvalidArgument(format!("need at least 4 cells, got {n}")));
    }
    let b = params.depth;
    let h = b / n as f64;
    let mu = params.viscosity;
    let grav = params.gravity;
    let kappa = params.surface_tension;
    let gamma = params.gamma;
    let k = [I * (2.0 * PI * xi[0]), I * (2.0 * PI * xi[1])];
    let kk = k[0] * k[0] + k[1] * k[1];
    let tr = -gamma * k[0];
    let one = C64::new(1.0, 0.0);

    // unknown and row indices: level i holds u_c(i) at 4i + c and p(i+½) at
    // 4i + 3; rows use the same numbering (momentum/boundary rows of node i,
    // divergence row of centre i+½)
    let u = |c: usize, i: usize| 4 * i + c;
    let p = |i: usize| 4 * i + 3;
    let dim = 4 * n + 3;
    let mut a = Banded::zeros(dim, 10, 10);
    // χ columns and the two bordering rows are kept apart
    let mut chi_cols = [vec![C64::new(0.0, 0.0); dim], vec![C64::new(0.0, 0.0); dim]];
    let mut rhs = vec![C64::new(0.0, 0.0); dim];
    let yn = |i: usize| i as f64 * h;
    let yc = |i: usize| (i as f64 + 0.5) * h;

    for c in 0..3 {
        a.add(u(c, 0), u(c, 0), one);
    }
    for i in 0..n {
        let r = p(i);
        a.add(r, u(0, i), k[0] * 0.5);
        a.add(r, u(0, i + 1), k[0] * 0.5);
        a.add(r, u(1, i), k[1] * 0.5);
        a.add(r, u(1, i + 1), k[1] * 0.5);
        a.add(r, u(2, i + 1), one / h);
        a.add(r, u(2, i), -one / h);
        rhs[r] = data.g.eval(yc(i), b);
    }
    let h2 = 1.0 / (h * h);
    let d1 = 0.5 / h;
    for i in 1..n {
        for c in 0..2 {
            let r = u(c, i);
            chi_cols[c][r] += grav;
            a.add(r, p(i - 1), k[c] * 0.5);
            a.add(r, p(i), k[c] * 0.5);
            a.add(r, u(c, i - 1), one * (-mu * h2));
            a.add(r, u(c, i), one * (2.0 * mu * h2) - mu * kk + tr);
            a.add(r, u(c, i + 1), one * (-mu * h2));
            a.add(r, u(0, i), -mu * k[c] * k[0]);
            a.add(r, u(1, i), -mu * k[c] * k[1]);
            a.add(r, u(2, i + 1), -mu * k[c] * d1);
            a.add(r, u(2, i - 1), mu * k[c] * d1);
            rhs[r] = data.f[c].eval(yn(i), b);
        }
        let r = u(2, i);
        a.add(r, p(i), one / h);
        a.add(r, p(i - 1), -one / h);
        a.add(r, u(2, i - 1), one * (-2.0 * mu * h2));
        a.add(r, u(2, i), one * (4.0 * mu * h2) - mu * kk + tr);
        a.add(r, u(2, i + 1), one * (-2.0 * mu * h2));
        for c in 0..2 {
            a.add(r, u(c, i + 1), -mu * k[c] * d1);
            a.add(r, u(c, i - 1), mu * k[c] * d1);
        }
        rhs[r] = data.f[2].eval(yn(i), b);
    }
    // one-sided derivative at the surface: (3v_N − 4v_{N−1} + v_{N−2})/2h
    let top = [(n, 1.5 / h), (n - 1, -2.0 / h), (n - 2, 0.5 / h)];
    for c in 0..2 {
        let r = u(c, n);
        for &(i, w) in &top {
            a.add(r, u(c, i), one * (mu * w));
        }
        a.add(r, u(2, n), mu * k[c]);
        rhs[r] = data.k[c];
    }
    let r = u(2, n);
    a.add(r, p(n - 1), -one * 1.5);
    a.add(r, p(n - 2), one * 0.5);
    for &(i, w) in &top {
        a.add(r, u(2, i), one * (2.0 * mu * w));
    }
    chi_cols[0][r] += -kappa * k[0];
    chi_cols[1][r] += -kappa * k[1];
    rhs[r] = data.k[2];

    // bordered solve: A x + C χ = rhs, R x + D χ = (h, ω) with R = e_{u₃(N)}ᵀ
    let mut cols = vec![rhs, chi_cols[0].clone(), chi_cols[1].clone()];
    a.solve(&mut cols).ok_or(Error::Singular { xi1: xi[0], xi2: xi[1], cond: f64::INFINITY })?;
    let r2 = xi[0] * xi[0] + xi[1] * xi[1];
    let kin = [one * (gamma * xi[0] * xi[0] / r2), one * (gamma * xi[0] * xi[1] / r2)];
    let curl = [-k[1], k[0]];
    let top_u3 = u(2, n);
    // (kin row)·χ + u₃(N) = h  with u₃(N) = x₀ − X₁χ₁ − X₂χ₂
    let m = [
        [kin[0] - cols[1][top_u3], kin[1] - cols[2][top_u3]],
        [curl[0], curl[1]],
    ];
    let v = [data.h - cols[0][top_u3], data.omega];
    let det = m[0][0] * m[1][1] - m[0][1] * m[1][0];
    if det.norm() == 0.0 {
        return Err(Error::Singular { xi1: xi[0], xi2: xi[1], cond: f64::INFINITY });
    }
    let chi = [(v[0] * m[1][1] - m[0][1] * v[1]) / det, (m[0][0] * v[1] - m[1][0] * v[0]) / det];
    let x: Vec<C64> = (0..dim).map(|q| cols[0][q] - cols[1][q] * chi[0] - cols[2][q] * chi[1]).collect();
    Ok(FdSolution {
        h,
        u: std::array::from_fn(|c| (0..=n).map(|i| x[u(c, i)]).collect()),
        p: (0..n).map(|i| x[p(i)]).collect(),
        chi,
    })
}

/// Richardson-extrapolated finite-difference solution from meshes with `n`
/// and `2n` cells, sampled at `nodes`.
pub fn fd_oracle(xi: [f64; 2], params: &Params, data: &SmoothData, n: usize, nodes: &[f64]) -> Result<FrequencySolution> {
    let coarse = fd_solve(xi, params, data, n)?;
    let fine = fd_solve(xi, params, data, 2 * n)?;
    let rich = |a: C64, b: C64| (b * 4.0 - a) / 3.0;
    let p = nodes.iter().map(|&y| rich(coarse.p_at(y), fine.p_at(y))).collect();
    let u = std::array::from_fn(|c| nodes.iter().map(|&y| rich(coarse.u_at(c, y), fine.u_at(c, y))).collect());
    let chi = [rich(coarse.chi[0], fine.chi[0]), rich(coarse.chi[1], fine.chi[1])];
    Ok(FrequencySolution { p, u, chi, eta: eta_from_chi(xi, chi) })
}

/// Largest entry difference of two solutions relative to the largest entry
/// of `reference`.
pub fn relative_difference(a: &FrequencySolution, reference: &FrequencySolution) -> f64 {
    let va = a.to_vec();
    let vr = reference.to_vec();
    let scale = vr.iter().fold(0.0f64, |m, z| m.max(z.norm()));
    let diff = va.iter().zip(&vr).fold(0.0f64, |m, (x, y)| m.max((x - y).norm()));
    if scale == 0.0 {
        diff
    } else {
        diff / scale
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::chebyshev::Chebyshev;
    use crate::symbol::solve_frequency;
    use rand::SeedableRng;

    #[test]
    fn interpolation_is_exact_for_cubics() {
        let v: Vec<C64> = (0..10).map(|i| C64::new((i as f64).powi(3), 0.0)).collect();
        for &t in &[0.0, 0.3, 4.5, 8.9, 9.0] {
            assert!((lagrange4(&v, 0.0, 1.0, t).re - t * t * t).abs() < 1e-10);
        }
    }

    #[test]
    fn mesh_refinement_is_second_order() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(1);
        let data = SmoothData::random(&mut rng);
        let params = Params { gamma: 0.3, ..Params::default() };
        let xi = [0.4, -0.3];
        let ys = [0.2, 0.5, 0.9];
        let s: Vec<_> = [50, 100, 200].iter().map(|&n| fd_solve(xi, &params, &data, n).unwrap()).collect();
        let err = |a: &FdSolution, b: &FdSolution| ys.iter().map(|&y| (a.u_at(0, y) - b.u_at(0, y)).norm()).fold(0.0, f64::max);
        let ratio = err(&s[0], &s[1]) / err(&s[1], &s[2]);
        assert!((3.5..4.5).contains(&ratio), "{ratio}");
    }

    #[test]
    fn agrees_with_collocation() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(2);
        let data = SmoothData::random(&mut rng);
        let params = Params::default();
        let cheb = Chebyshev::new(16, params.depth).unwrap();
        let xi = [0.7, 0.2];
        let reference = solve_frequency(xi, &params, &cheb, &data.sample(cheb.nodes(), params.depth)).unwrap();
        let oracle = fd_oracle(xi, &params, &data, 100, cheb.nodes()).unwrap();
        assert!(relative_difference(&oracle, &reference) < 1e-5);
    }

    #[test]
    fn zero_frequency_is_rejected() {
        let data = SmoothData::random(&mut rand_chacha::ChaCha8Rng::seed_from_u64(0));
        assert!(fd_solve([0.0, 0.0], &Params::default(), &data, 10).is_err());
    }
}
