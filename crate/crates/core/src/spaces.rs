//! Numerical norms on the torus × interval: mixed `L_{r,2}` and `H^s_{r,2}`,
//! Bessel-potential `H^{s,r}` on the surface, the subcritical gradient norm,
//! the `Ḣ^{−1,r}` seminorm, and the smooth low/high frequency splitting.
//!
//! Horizontal integrals use the trapezoid rule on the physical grid
//! (`|·|^r` is evaluated pointwise, which is a quadrature approximation for
//! non-even `r`); vertical integrals use Clenshaw–Curtis weights.

use crate::error::{Error, Result};
use crate::grid::{BulkField, SurfaceField, C64};
use crate::params::SobolevIndex;

/// `ψ(t) = e^{−1/t}` for `t > 0`, else 0.
fn psi(t: f64) -> f64 {
    if t > 0.0 {
        (-1.0 / t).exp()
    } else {
        0.0
    }
}

/// The radial bump `φ(ξ) = ψ(2−|ξ|)/(ψ(2−|ξ|)+ψ(|ξ|−1))`: identically 1 on
/// `|ξ| ≤ 1`, 0 on `|ξ| ≥ 2`, smooth and even.
pub fn bump(xi: [f64; 2]) -> f64 {
    let r = xi[0].hypot(xi[1]);
    if r <= 1.0 {
        return 1.0;
    }
    if r >= 2.0 {
        return 0.0;
    }
    let a = psi(2.0 - r);
    a / (a + psi(r - 1.0))
}

/// Japanese bracket `⟨ξ⟩ = (1+|ξ|²)^{1/2}`.
pub fn bracket(xi: [f64; 2]) -> f64 {
    (1.0 + xi[0] * xi[0] + xi[1] * xi[1]).sqrt()
}

fn check_r(r: f64) -> Result<()> {
    if r > 1.0 && r.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidArgument(format!("integrability r must satisfy 1 < r < ∞, got {r}")))
    }
}

/// Pointwise `(∫₀^b |f|² dy)` at every horizontal grid point (summed over
/// components).
fn vertical_l2_squared(f: &BulkField) -> Vec<f64> {
    let g = f.grid();
    let n = g.nx();
    let ny = g.ny();
    let w = g.cheb().weights();
    let vals = f.to_physical();
    // physical layout (comp, i1, i2, j)
    let mut out = vec![0.0; n * n];
    for c in 0..f.ncomp() {
        for q in 0..n * n {
            let base = (c * n * n + q) * ny;
            let mut acc = 0.0;
            for j in 0..ny {
                acc += w[j] * vals[base + j].norm_sqr();
            }
            out[q] += acc;
        }
    }
    out
}

/// Trapezoid `(∫ a^{r/2} dx)^{1/r}` for pointwise squared magnitudes `a`.
fn surface_power_mean(g: &crate::grid::Grid, sq: &[f64], r: f64) -> f64 {
    let n = g.nx();
    let cell = (g.l() / n as f64).powi(2);
    let s: f64 = sq.iter().map(|a| a.max(0.0).powf(r / 2.0)).sum();
    (s * cell).powf(1.0 / r)
}

/// Mixed norm `(∫_torus (∫₀^b |f|² dy)^{r/2} dx)^{1/r}`.
pub fn norm_lr2(f: &BulkField, r: f64) -> Result<f64> {
    check_r(r)?;
    Ok(surface_power_mean(f.grid(), &vertical_l2_squared(f), r))
}

/// All multi-indices `α ∈ ℕ³` with `|α| ≤ s`.
pub fn multi_indices(s: u32) -> Vec<[u32; 3]> {
    let mut out = Vec::new();
    for total in 0..=s {
        for a in 0..=total {
            for b in 0..=(total - a) {
                out.push([a, b, total - a - b]);
            }
        }
    }
    out
}

fn derivative(f: &BulkField, alpha: [u32; 3]) -> BulkField {
    let mut d = f.clone();
    for _ in 0..alpha[0] {
        d = d.dx(0);
    }
    for _ in 0..alpha[1] {
        d = d.dx(1);
    }
    for _ in 0..alpha[2] {
        d = d.dy(1);
    }
    d
}

/// Mixed Sobolev norm `(Σ_{|α|≤s} ‖∂^α f‖_{L_{r,2}}^r)^{1/r}`.
pub fn norm_hs_r2(f: &BulkField, idx: SobolevIndex) -> Result<f64> {
    check_r(idx.r)?;
    let mut acc = 0.0;
    for alpha in multi_indices(idx.s) {
        acc += norm_lr2(&derivative(f, alpha), idx.r)?.powf(idx.r);
    }
    Ok(acc.powf(1.0 / idx.r))
}

/// The factorized norm `‖f‖_{L^r(H^s(0,b))} + ‖⟨D⟩^s f‖_{L_{r,2}}`.
pub fn norm_factorized(f: &BulkField, idx: SobolevIndex) -> Result<f64> {
    check_r(idx.r)?;
    // L^r in x of the vertical H^s norm
    let mut sq = vertical_l2_squared(f);
    let mut d = f.clone();
    for _ in 0..idx.s {
        d = d.dy(1);
        for (a, b) in sq.iter_mut().zip(vertical_l2_squared(&d)) {
            *a += b;
        }
    }
    let first = surface_power_mean(f.grid(), &sq, idx.r);
    let s = idx.s as f64;
    let lifted = f.apply_multiplier(&|xi: [f64; 2]| C64::new(bracket(xi).powf(s), 0.0))?;
    Ok(first + norm_lr2(&lifted, idx.r)?)
}

/// Surface `L^r` norm `(∫ |f|^r dx)^{1/r}` (vector magnitude for
/// multi-component fields).
pub fn norm_lr_surface(f: &SurfaceField, r: f64) -> Result<f64> {
    check_r(r)?;
    let g = f.grid();
    let nn = g.nmodes();
    let vals = f.to_physical();
    let mut sq = vec![0.0; nn];
    for c in 0..f.ncomp() {
        for q in 0..nn {
            sq[q] += vals[c * nn + q].norm_sqr();
        }
    }
    Ok(surface_power_mean(g, &sq, r))
}

/// Bessel-potential norm `‖⟨D⟩^s f‖_{L^r}`.
pub fn norm_bessel(f: &SurfaceField, s: f64, r: f64) -> Result<f64> {
    if !(s >= 0.0 && s.is_finite()) {
        return Err(Error::InvalidArgument(format!("regularity s must be non-negative, got {s}")));
    }
    if s == 0.0 {
        return norm_lr_surface(f, r);
    }
    let lifted = f.apply_multiplier(&|xi: [f64; 2]| C64::new(bracket(xi).powf(s), 0.0))?;
    norm_lr_surface(&lifted, r)
}

/// Subcritical gradient norm `‖∇f‖_{H^{s−1,r}}` of a scalar field.
pub fn norm_tilde(f: &SurfaceField, s: f64, r: f64) -> Result<f64> {
    if f.ncomp() != 1 {
        return Err(Error::Shape("gradient norm needs a scalar field".into()));
    }
    if s < 1.0 {
        return Err(Error::InvalidArgument(format!("gradient norm needs s ≥ 1, got {s}")));
    }
    norm_bessel(&f.grad(), s - 1.0, r)
}

/// Checks that every component of `f` has a negligible zero mode.
pub fn check_zero_mode(f: &SurfaceField) -> Result<()> {
    let scale = f.coeff_norm();
    let nn = f.grid().nmodes();
    for c in 0..f.ncomp() {
        let v = f.coeffs()[c * nn].norm();
        let threshold = 1e-12 * scale;
        if v > threshold {
            return Err(Error::ZeroMode { value: v, threshold });
        }
    }
    Ok(())
}

/// Seminorm `‖|D|^{−1} f‖_{L^r}`; requires a vanishing zero mode.
pub fn seminorm_hdot_minus1(f: &SurfaceField, r: f64) -> Result<f64> {
    check_zero_mode(f)?;
    let inv = f.apply_multiplier(&|xi: [f64; 2]| {
        let m = xi[0].hypot(xi[1]);
        if m == 0.0 {
            C64::new(0.0, 0.0)
        } else {
            C64::new(1.0 / m, 0.0)
        }
    })?;
    norm_lr_surface(&inv, r)
}

/// Splits `f = φ(D)f + (1−φ)(D)f` with the bump [`bump`].
pub fn freq_split(f: &SurfaceField) -> (SurfaceField, SurfaceField) {
    let g = f.grid();
    let n = g.nx();
    let nn = n * n;
    let mut low = f.clone();
    let mut high = f.clone();
    for i1 in 0..n {
        for i2 in 0..n {
            let phi = bump(g.xi(i1, i2));
            for c in 0..f.ncomp() {
                let q = c * nn + i1 * n + i2;
                let v = f.coeffs()[q];
                low.coeffs_mut()[q] = v * phi;
                high.coeffs_mut()[q] = v * (1.0 - phi);
            }
        }
    }
    (low, high)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::make_grid;
    use std::f64::consts::PI;

    #[test]
    fn bump_properties() {
        assert_eq!(bump([0.6, 0.8]), 1.0);
        assert_eq!(bump([2.0, 0.0]), 0.0);
        let v = bump([1.5, 0.0]);
        assert!(v > 0.0 && v < 1.0);
        assert!((v - 0.5).abs() < 1e-15);
        assert_eq!(bump([-1.3, 0.4]), bump([1.3, -0.4]));
    }

    #[test]
    fn constant_field_norms() {
        let g = make_grid(2.0, 8, 8, 1.0).unwrap();
        let one = BulkField::from_fn(&g, 1, |_, _, _, _| 1.0);
        assert!((norm_lr2(&one, 2.0).unwrap() - 2.0).abs() < 1e-13);
        assert!((norm_lr2(&one, 1.5).unwrap() - 4f64.powf(2.0 / 3.0)).abs() < 1e-13);
        let idx = SobolevIndex { s: 1, r: 2.0 };
        assert!((norm_hs_r2(&one, idx).unwrap() - 2.0).abs() < 1e-12);
        assert_eq!(norm_lr2(&BulkField::zeros(&g, 3), 1.5).unwrap(), 0.0);
    }

    #[test]
    fn single_mode_surface_norms() {
        let g = make_grid(1.0, 8, 8, 1.0).unwrap();
        let mut f = SurfaceField::zeros(&g, 1);
        f.set(0, 1, 0, C64::new(1.0, 0.0));
        assert!((norm_bessel(&f, 2.0, 2.0).unwrap() - 2.0).abs() < 1e-13);
        assert!((norm_tilde(&f, 1.0, 2.0).unwrap() - 2.0 * PI).abs() < 1e-12);
        assert!((norm_bessel(&f, 0.0, 1.5).unwrap() - norm_lr_surface(&f, 1.5).unwrap()).abs() < 1e-13);
        let s = seminorm_hdot_minus1(&f, 2.0).unwrap();
        assert!((s - 1.0).abs() < 1e-13);
        let one = SurfaceField::from_fn(&g, 1, |_, _, _| 1.0);
        let e = seminorm_hdot_minus1(&one, 2.0).unwrap_err();
        assert!(e.to_string().contains("zero-mode obstruction"));
    }

    #[test]
    fn split_single_modes() {
        let g = make_grid(2.0, 8, 8, 1.0).unwrap();
        // |ξ| = 0.5, 1.5 and 3 at L = 2
        for (k, lo) in [(1usize, 1.0), (3, 0.5)] {
            let mut f = SurfaceField::zeros(&g, 1);
            f.set(0, k, 0, C64::new(0.3, 0.1));
            let (l, h) = freq_split(&f);
            assert!((l.get(0, k, 0) - f.get(0, k, 0) * lo).norm() < 1e-15);
            assert!(l.add(&h).sub(&f).max_abs() <= 1e-15);
        }
        let g = make_grid(1.0, 8, 8, 1.0).unwrap();
        let mut f = SurfaceField::zeros(&g, 1);
        f.set(0, 3, 0, C64::new(1.0, 0.0));
        let (l, h) = freq_split(&f);
        assert_eq!(l.max_abs(), 0.0);
        assert_eq!(h.coeffs(), f.coeffs());
    }
}
