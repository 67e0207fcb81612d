//! The anisotropic surface reparameterization `P_γ` and its companions.
//!
//! `P_γ` has symbol `𝐩_γ(ξ) = 4π²|ξ|²/(4π²|ξ|² + 2πiγξ₁)`, with the zero mode
//! passed through unchanged (`𝐩_γ → 1` along the `ξ₂` axis and `P₀ = id`).
//! The operator `γℛ₁P_γ`, with `ℛ₁` the Riesz transform of symbol
//! `iξ₁/|ξ|`, satisfies `γℛ₁P_γ = (1 − P_γ)2π|D|`.

use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::grid::{SurfaceField, C64, I};
use crate::spaces::{check_zero_mode, norm_tilde};

/// `𝐩_γ(ξ)`, equal to 1 at `ξ = 0`.
pub fn pgamma_symbol(xi: [f64; 2], gamma: f64) -> C64 {
    let r2 = xi[0] * xi[0] + xi[1] * xi[1];
    if r2 == 0.0 {
        return C64::new(1.0, 0.0);
    }
    let a = 4.0 * PI * PI * r2;
    C64::new(a, 0.0) / C64::new(a, 2.0 * PI * gamma * xi[0])
}

/// `1/𝐩_γ(ξ) = 1 + iγξ₁/(2π|ξ|²)`, equal to 1 at `ξ = 0`.
pub fn pgamma_inverse_symbol(xi: [f64; 2], gamma: f64) -> C64 {
    let r2 = xi[0] * xi[0] + xi[1] * xi[1];
    if r2 == 0.0 {
        return C64::new(1.0, 0.0);
    }
    C64::new(1.0, gamma * xi[0] / (2.0 * PI * r2))
}

/// Symbol `γ(iξ₁/|ξ|)𝐩_γ(ξ)` of `γℛ₁P_γ` (0 at `ξ = 0`).
pub fn gamma_r1_pgamma_symbol(xi: [f64; 2], gamma: f64) -> C64 {
    let r = xi[0].hypot(xi[1]);
    if r == 0.0 {
        return C64::new(0.0, 0.0);
    }
    I * (gamma * xi[0] / r) * pgamma_symbol(xi, gamma)
}

/// Symbol `(1 − 𝐩_γ(ξ))·2π|ξ|` of the right-hand side of the key identity.
pub fn identity_rhs_symbol(xi: [f64; 2], gamma: f64) -> C64 {
    let r = xi[0].hypot(xi[1]);
    (C64::new(1.0, 0.0) - pgamma_symbol(xi, gamma)) * (2.0 * PI * r)
}

/// Symbol `2πiξ₁γ𝐩_γ(ξ)` of `γ∂₁P_γ`.
pub fn gamma_d1_pgamma_symbol(xi: [f64; 2], gamma: f64) -> C64 {
    I * (2.0 * PI * xi[0] * gamma) * pgamma_symbol(xi, gamma)
}

/// Applies `P_γ`.
pub fn apply_pgamma(f: &SurfaceField, gamma: f64) -> SurfaceField {
    if gamma == 0.0 {
        return f.clone();
    }
    f.apply_multiplier(&|xi: [f64; 2]| pgamma_symbol(xi, gamma)).expect("bounded symbol")
}

/// Applies `P_γ^{−1}` (the map from the surface height to the
/// reparameterized unknown).
pub fn apply_pgamma_inverse(f: &SurfaceField, gamma: f64) -> SurfaceField {
    if gamma == 0.0 {
        return f.clone();
    }
    f.apply_multiplier(&|xi: [f64; 2]| pgamma_inverse_symbol(xi, gamma)).expect("finite on the lattice")
}

/// Applies `γℛ₁P_γ`; the zero mode of `f` must vanish.
pub fn apply_gamma_r1_pgamma(f: &SurfaceField, gamma: f64) -> Result<SurfaceField> {
    check_zero_mode(f)?;
    f.apply_multiplier(&|xi: [f64; 2]| gamma_r1_pgamma_symbol(xi, gamma))
}

/// Applies `γ∂₁P_γ`.
pub fn apply_gamma_d1_pgamma(f: &SurfaceField, gamma: f64) -> SurfaceField {
    f.apply_multiplier(&|xi: [f64; 2]| gamma_d1_pgamma_symbol(xi, gamma)).expect("finite symbol")
}

/// Closed-form partial derivatives of `𝐩_γ` at `ξ ≠ 0`:
/// `(∂₁𝐩_γ, ∂₂𝐩_γ, ∂₁∂₂𝐩_γ)`.
pub fn pgamma_derivatives(xi: [f64; 2], gamma: f64) -> (C64, C64, C64) {
    let (x1, x2) = (xi[0], xi[1]);
    let r2 = x1 * x1 + x2 * x2;
    let den = C64::new(2.0 * PI * r2, gamma * x1);
    let d1 = I * (2.0 * PI * gamma * (x1 * x1 - x2 * x2)) / (den * den);
    let d2 = I * (4.0 * PI * gamma * x1 * x2) / (den * den);
    let d12 = -(I * (4.0 * PI * gamma * x2)) * C64::new(6.0 * PI * x1 * x1 - 2.0 * PI * x2 * x2, gamma * x1)
        / (den * den * den);
    (d1, d2, d12)
}

/// Suprema of the four Marcinkiewicz quantities for one wave speed.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MarcinkiewiczRow {
    /// Wave speed.
    pub gamma: f64,
    /// `sup|𝐩_γ|`.
    pub p: f64,
    /// `sup|ξ₁∂₁𝐩_γ|`.
    pub x1_d1: f64,
    /// `sup|ξ₂∂₂𝐩_γ|`.
    pub x2_d2: f64,
    /// `sup|ξ₁ξ₂∂₁∂₂𝐩_γ|`.
    pub x1x2_d12: f64,
}

/// Result of [`marcinkiewicz_check`]: per-γ rows and overall suprema.
#[derive(Debug, Clone, PartialEq)]
pub struct MarcinkiewiczReport {
    /// One row per wave speed, in input order.
    pub rows: Vec<MarcinkiewiczRow>,
    /// Suprema over all wave speeds (the `gamma` field is NaN).
    pub overall: MarcinkiewiczRow,
}

impl MarcinkiewiczReport {
    /// The reference bounds `(1, 1/2, 1, 3)`.
    pub const BOUNDS: [f64; 4] = [1.0, 0.5, 1.0, 3.0];

    /// The four overall suprema in the order of [`Self::BOUNDS`].
    pub fn suprema(&self) -> [f64; 4] {
        let o = &self.overall;
        [o.p, o.x1_d1, o.x2_d2, o.x1x2_d12]
    }
}

/// Evaluates the four Marcinkiewicz quantities of `𝐩_γ` from their closed
/// forms on the polar set `radii × angles` and records their suprema.
pub fn marcinkiewicz_check(gammas: &[f64], radii: &[f64], angles: &[f64]) -> Result<MarcinkiewiczReport> {
    if gammas.is_empty() || radii.is_empty() || angles.is_empty() {
        return Err(Error::InvalidArgument("marcinkiewicz_check needs non-empty gammas, radii and angles".into()));
    }
    let mut rows = Vec::with_capacity(gammas.len());
    let mut overall = MarcinkiewiczRow { gamma: f64::NAN, p: 0.0, x1_d1: 0.0, x2_d2: 0.0, x1x2_d12: 0.0 };
    for &gamma in gammas {
        let mut row = MarcinkiewiczRow { gamma, p: 0.0, x1_d1: 0.0, x2_d2: 0.0, x1x2_d12: 0.0 };
        for &r in radii {
            for &t in angles {
                let xi = [r * t.cos(), r * t.sin()];
                let (d1, d2, d12) = pgamma_derivatives(xi, gamma);
                row.p = row.p.max(pgamma_symbol(xi, gamma).norm());
                row.x1_d1 = row.x1_d1.max((d1 * xi[0]).norm());
                row.x2_d2 = row.x2_d2.max((d2 * xi[1]).norm());
                row.x1x2_d12 = row.x1x2_d12.max((d12 * (xi[0] * xi[1])).norm());
            }
        }
        overall.p = overall.p.max(row.p);
        overall.x1_d1 = overall.x1_d1.max(row.x1_d1);
        overall.x2_d2 = overall.x2_d2.max(row.x2_d2);
        overall.x1x2_d12 = overall.x1x2_d12.max(row.x1x2_d12);
        rows.push(row);
    }
    Ok(MarcinkiewiczReport { rows, overall })
}

/// `n` log-spaced values in `[lo, hi]`.
pub fn log_space(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    if n == 1 {
        return vec![lo];
    }
    (0..n).map(|i| (lo.ln() + (hi.ln() - lo.ln()) * i as f64 / (n - 1) as f64).exp()).collect()
}

/// `n` equally spaced angles `2πk/n`.
pub fn uniform_angles(n: usize) -> Vec<f64> {
    (0..n).map(|k| 2.0 * PI * k as f64 / n as f64).collect()
}

/// Fitted Lipschitz constant of `γ ↦ P_γη` in the subcritical gradient
/// norm `H̃^{s,r}`: `max_γ ‖P_γη − P_{γ₀}η‖ / |γ − γ₀|` over `gammas ≠ γ₀`.
pub fn pgamma_lipschitz(eta: &SurfaceField, gammas: &[f64], gamma0: f64, s: f64, r: f64) -> Result<f64> {
    let base = apply_pgamma(eta, gamma0);
    let mut c: f64 = 0.0;
    for &g in gammas {
        if g == gamma0 {
            continue;
        }
        let d = apply_pgamma(eta, g).sub(&base);
        c = c.max(norm_tilde(&d, s, r)? / (g - gamma0).abs());
    }
    Ok(c)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::make_grid;

    #[test]
    fn printed_values() {
        let p = pgamma_symbol([1.0, 0.0], 2.0 * PI);
        assert!((p - C64::new(0.5, -0.5)).norm() < 1e-15);
        let m = gamma_r1_pgamma_symbol([1.0, 0.0], 2.0 * PI);
        assert!((m - C64::new(PI, PI)).norm() < 1e-14);
        assert!((identity_rhs_symbol([1.0, 0.0], 2.0 * PI) - m).norm() < 1e-14);
    }

    #[test]
    fn gamma_zero_is_identity() {
        let g = make_grid(4.0, 8, 8, 1.0).unwrap();
        let tau = PI / 2.0;
        let f = SurfaceField::from_fn(&g, 1, |_, x1, x2| (tau * (x1 - 2.0 * x2)).sin() + 0.3);
        let out = apply_pgamma(&f, 0.0);
        assert_eq!(out.sub(&f).max_abs(), 0.0);
        let z = f.sub(&SurfaceField::from_fn(&g, 1, |_, _, _| 0.3));
        assert!(apply_gamma_r1_pgamma(&z, 0.0).unwrap().max_abs() == 0.0);
    }

    #[test]
    fn key_identity_on_the_lattice() {
        let g = make_grid(5.0, 16, 8, 1.0).unwrap();
        for gamma in [0.1, 1.0, 10.0] {
            for i1 in 0..16 {
                for i2 in 0..16 {
                    let xi = g.xi(i1, i2);
                    let a = gamma_r1_pgamma_symbol(xi, gamma);
                    let b = identity_rhs_symbol(xi, gamma);
                    assert!((a - b).norm() <= 1e-13 * (1.0 + b.norm()));
                    assert!(pgamma_symbol(xi, gamma).norm() <= 1.0 + 1e-15);
                    let pi = pgamma_inverse_symbol(xi, gamma) * pgamma_symbol(xi, gamma);
                    assert!((pi - 1.0).norm() < 1e-14);
                }
            }
        }
    }

    #[test]
    fn zero_mode_obstruction() {
        let g = make_grid(4.0, 8, 8, 1.0).unwrap();
        let f = SurfaceField::from_fn(&g, 1, |_, _, _| 1.0);
        assert!(matches!(apply_gamma_r1_pgamma(&f, 1.0), Err(Error::ZeroMode { .. })));
    }

    #[test]
    fn closed_forms_match_finite_differences() {
        let h = 1e-5;
        for (xi, gamma) in [([0.3, -0.7], 1.0), ([1.2, 0.4], 10.0), ([-0.05, 0.2], 0.3)] {
            let (d1, d2, d12) = pgamma_derivatives(xi, gamma);
            let p = |a: f64, b: f64| pgamma_symbol([xi[0] + a, xi[1] + b], gamma);
            let f1 = (p(h, 0.0) - p(-h, 0.0)) / (2.0 * h);
            let f2 = (p(0.0, h) - p(0.0, -h)) / (2.0 * h);
            let f12 = (p(h, h) - p(h, -h) - p(-h, h) + p(-h, -h)) / (4.0 * h * h);
            assert!((d1 - f1).norm() < 1e-6 * (1.0 + d1.norm()));
            assert!((d2 - f2).norm() < 1e-6 * (1.0 + d2.norm()));
            assert!((d12 - f12).norm() < 1e-4 * (1.0 + d12.norm()));
        }
    }

    #[test]
    fn marcinkiewicz_bounds_hold() {
        let rep = marcinkiewicz_check(&[0.1, 1.0, 10.0], &log_space(1e-2, 1e2, 41), &uniform_angles(32)).unwrap();
        let s = rep.suprema();
        for (v, b) in s.iter().zip(MarcinkiewiczReport::BOUNDS) {
            assert!(*v <= b + 1e-9, "{v} > {b}");
        }
        assert_eq!(rep.rows.len(), 3);
    }
}
