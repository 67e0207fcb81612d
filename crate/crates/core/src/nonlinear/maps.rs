//! The flattened nonlinear maps.
//!
//! With `w = M^{−1}u`, `𝔻_𝒜w = ∇w𝒜^t + 𝒜∇w^t` (where `(∇w)_{ik} = ∂_k w_i`)
//! and `n = M^t e₃ = (−∂₁ℰη, −∂₂ℰη, 1)`:
//!
//! ```text
//!   Ξ₁ = M^{−t}((u − γMe₁)·∇w) + ∇(p + 𝔤η) − μM^{−t}(∇·((𝔻_𝒜w)M^t))
//!   Ξ₂ = Tr_Σ[−(pI − μ𝔻_𝒜w)n − κℋ(η)n]
//!   Υ₁ = −J M^{−t}(ℱ∘𝔉)
//!   Υ₂ = −Tr_Σ[(𝒯∘𝔉)n]
//! ```
//!
//! Products are formed pointwise on the 3/2-padded horizontal grid at the
//! Chebyshev nodes and truncated back to the resolved band; derivatives are
//! spectral.  The terms `∇(p + 𝔤η)` are linear and applied directly.

use std::sync::Arc;

use rayon::prelude::*;

use crate::dsl::FieldExpr;
use crate::error::Result;
use crate::geometry::{matmul3, matvec3, mean_curvature, transpose3, GeometryPack, Mat3};
use crate::grid::{BulkField, Grid, SurfaceField};

/// Samples of every component of `f` on the padded grid.
pub(crate) fn padded_components(f: &BulkField) -> Vec<Vec<f64>> {
    (0..f.ncomp()).map(|c| f.padded(c)).collect()
}

/// Dealiased bulk field from per-component padded samples.
pub(crate) fn bulk_from_samples(grid: &Arc<Grid>, comps: &[Vec<f64>]) -> BulkField {
    let parts: Vec<BulkField> = comps.iter().map(|v| BulkField::from_padded(grid, v)).collect();
    let refs: Vec<&BulkField> = parts.iter().collect();
    BulkField::stack(&refs)
}

/// Dealiased surface field from per-component padded samples.
pub(crate) fn surface_from_samples(grid: &Arc<Grid>, comps: &[Vec<f64>]) -> SurfaceField {
    let parts: Vec<SurfaceField> = comps.iter().map(|v| SurfaceField::from_padded(grid, v)).collect();
    let refs: Vec<&SurfaceField> = parts.iter().collect();
    SurfaceField::stack(&refs)
}

/// Offset of the top (`y = b`) slice in padded bulk samples.
pub(crate) fn top_offset(grid: &Grid) -> usize {
    let m = grid.npad();
    (grid.ny() - 1) * m * m
}

/// Kinematic quantities shared by the maps: padded samples of `u`, of
/// `w = M^{−1}u` and of `∇w`.
pub(crate) struct VelocityPack {
    /// `u` samples (3 components).
    pub u: Vec<Vec<f64>>,
    /// `w = M^{−1}u` samples, pointwise (3 components).
    pub w: Vec<Vec<f64>>,
    /// `∂_k w_i` samples at index `3i + k`.
    pub grad_w: Vec<Vec<f64>>,
}

impl VelocityPack {
    pub(crate) fn new(u: &BulkField, pack: &GeometryPack) -> Self {
        let grid = pack.grid();
        let n = pack.n_nodes();
        let us = padded_components(u);
        let mut w = vec![vec![0.0; n]; 3];
        for q in 0..n {
            let wq = matvec3(&pack.node(q).m_inv(), &[us[0][q], us[1][q], us[2][q]]);
            for i in 0..3 {
                w[i][q] = wq[i];
            }
        }
        let wf = bulk_from_samples(grid, &w);
        let grad_w: Vec<Vec<f64>> = (0..9)
            .into_par_iter()
            .map(|ik| wf.component(ik / 3).partial(ik % 3).padded(0))
            .collect();
        Self { u: us, w, grad_w }
    }

    /// `∇w` at padded node `q`.
    pub(crate) fn grad_at(&self, q: usize) -> Mat3 {
        let mut g = [[0.0; 3]; 3];
        for i in 0..3 {
            for k in 0..3 {
                g[i][k] = self.grad_w[3 * i + k][q];
            }
        }
        g
    }
}

/// `𝔻_𝒜w = ∇w𝒜^t + 𝒜∇w^t`.
pub(crate) fn sym_grad(grad_w: &Mat3, a: &Mat3) -> Mat3 {
    let left = matmul3(grad_w, &transpose3(a));
    let mut d = [[0.0; 3]; 3];
    for i in 0..3 {
        for j in 0..3 {
            d[i][j] = left[i][j] + left[j][i];
        }
    }
    d
}

/// Bulk momentum map `Ξ₁(p, u, η, γ, 𝔤, μ)` for the geometry of `pack`.
pub fn xi1_with(p: &BulkField, u: &BulkField, pack: &GeometryPack, gamma: f64, gravity: f64, mu: f64) -> BulkField {
    let grid = pack.grid();
    let n = pack.n_nodes();
    let vel = VelocityPack::new(u, pack);
    // stress-like tensor S = (𝔻_𝒜 w) M^t, dealiased, then its divergence
    let mut s = vec![vec![0.0; n]; 9];
    for q in 0..n {
        let g = pack.node(q);
        let st = matmul3(&sym_grad(&vel.grad_at(q), &g.a()), &transpose3(&g.m()));
        for i in 0..3 {
            for j in 0..3 {
                s[3 * i + j][q] = st[i][j];
            }
        }
    }
    let sf = bulk_from_samples(grid, &s);
    let div_s: Vec<Vec<f64>> = (0..3)
        .into_par_iter()
        .map(|i| {
            let row = sf.component(3 * i).dx(0).add(&sf.component(3 * i + 1).dx(1)).add(&sf.component(3 * i + 2).dy(1));
            row.padded(0)
        })
        .collect();
    let mut out = vec![vec![0.0; n]; 3];
    for q in 0..n {
        let g = pack.node(q);
        let m = g.m();
        let gw = vel.grad_at(q);
        // transport velocity u − γ M e₁
        let a = [vel.u[0][q] - gamma * m[0][0], vel.u[1][q] - gamma * m[1][0], vel.u[2][q] - gamma * m[2][0]];
        let mut v = [0.0; 3];
        for i in 0..3 {
            let adv = gw[i][0] * a[0] + gw[i][1] * a[1] + gw[i][2] * a[2];
            v[i] = adv - mu * div_s[i][q];
        }
        let r = matvec3(&transpose3(&g.m_inv()), &v);
        for i in 0..3 {
            out[i][q] = r[i];
        }
    }
    let nonlinear = bulk_from_samples(grid, &out);
    let eta_grad = pack.eta.grad();
    let mut lin = Vec::with_capacity(3);
    for c in 0..3 {
        let mut t = p.partial(c);
        if c < 2 {
            t = t.axpy(gravity, &BulkField::from_surface(&eta_grad.component(c)));
        }
        lin.push(t);
    }
    nonlinear.add(&BulkField::stack(&[&lin[0], &lin[1], &lin[2]]))
}

/// Surface stress map `Ξ₂(p, u, η, μ, κ)` for the geometry of `pack`.
pub fn xi2_with(p: &BulkField, u: &BulkField, pack: &GeometryPack, mu: f64, kappa: f64) -> SurfaceField {
    let grid = pack.grid();
    let m = grid.npad();
    let top = top_offset(grid);
    let vel = VelocityPack::new(u, pack);
    let ps = p.padded(0);
    let curv = mean_curvature(&pack.eta).padded(0);
    let mut out = vec![vec![0.0; m * m]; 3];
    for s in 0..m * m {
        let q = top + s;
        let g = pack.node(q);
        let nrm = [-g.grad[0], -g.grad[1], 1.0];
        let d = sym_grad(&vel.grad_at(q), &g.a());
        let dn = matvec3(&d, &nrm);
        for i in 0..3 {
            out[i][s] = -(ps[q] + kappa * curv[s]) * nrm[i] + mu * dn[i];
        }
    }
    surface_from_samples(grid, &out)
}

/// Force map `Υ₁(ℱ, η) = −J M^{−t}(ℱ∘𝔉)` for the geometry of `pack`.
pub fn upsilon1_with(force: &[FieldExpr; 3], pack: &GeometryPack) -> Result<BulkField> {
    let grid = pack.grid();
    let n = pack.n_nodes();
    if force.iter().all(FieldExpr::is_zero) {
        return Ok(BulkField::zeros(grid, 3));
    }
    let samples = compose_nodes(force, pack, 0..n)?;
    let mut out = vec![vec![0.0; n]; 3];
    for q in 0..n {
        let g = pack.node(q);
        let r = matvec3(&transpose3(&g.m_inv()), &[samples[0][q], samples[1][q], samples[2][q]]);
        for i in 0..3 {
            out[i][q] = -g.j() * r[i];
        }
    }
    Ok(bulk_from_samples(grid, &out))
}

/// Stress map `Υ₂(𝒯, η) = −Tr_Σ[(𝒯∘𝔉)M^t e₃]` for the geometry of `pack`.
pub fn upsilon2_with(stress: &[[FieldExpr; 3]; 3], pack: &GeometryPack) -> Result<SurfaceField> {
    let grid = pack.grid();
    let m = grid.npad();
    let top = top_offset(grid);
    if stress.iter().flatten().all(FieldExpr::is_zero) {
        return Ok(SurfaceField::zeros(grid, 3));
    }
    let flat: Vec<FieldExpr> = stress.iter().flatten().cloned().collect();
    let samples = compose_nodes(&flat, pack, top..top + m * m)?;
    let mut out = vec![vec![0.0; m * m]; 3];
    for s in 0..m * m {
        let g = pack.node(top + s);
        let nrm = [-g.grad[0], -g.grad[1], 1.0];
        for i in 0..3 {
            out[i][s] = -(0..3).map(|j| samples[3 * i + j][s] * nrm[j]).sum::<f64>();
        }
    }
    Ok(surface_from_samples(grid, &out))
}

/// Evaluates each expression at the displaced positions `𝔉(node)` of the
/// padded nodes in `range`.
pub(crate) fn compose_nodes(
    exprs: &[FieldExpr],
    pack: &GeometryPack,
    range: std::ops::Range<usize>,
) -> Result<Vec<Vec<f64>>> {
    exprs
        .par_iter()
        .map(|e| {
            if e.is_zero() {
                return Ok(vec![0.0; range.len()]);
            }
            range
                .clone()
                .map(|q| {
                    let [x1, x2, y] = pack.node_position(q);
                    e.eval([x1, x2, y + pack.node(q).e]).map_err(Into::into)
                })
                .collect()
        })
        .collect()
}

/// `Ξ₁` for the surface `eta`.
pub fn xi1(p: &BulkField, u: &BulkField, eta: &SurfaceField, gamma: f64, gravity: f64, mu: f64) -> Result<BulkField> {
    Ok(xi1_with(p, u, &GeometryPack::new(eta)?, gamma, gravity, mu))
}

/// `Ξ₂` for the surface `eta`.
pub fn xi2(p: &BulkField, u: &BulkField, eta: &SurfaceField, mu: f64, kappa: f64) -> Result<SurfaceField> {
    Ok(xi2_with(p, u, &GeometryPack::new(eta)?, mu, kappa))
}

/// `Υ₁` for the surface `eta`.
pub fn upsilon1(force: &[FieldExpr; 3], eta: &SurfaceField) -> Result<BulkField> {
    upsilon1_with(force, &GeometryPack::new(eta)?)
}

/// `Υ₂` for the surface `eta`.
pub fn upsilon2(stress: &[[FieldExpr; 3]; 3], eta: &SurfaceField) -> Result<SurfaceField> {
    upsilon2_with(stress, &GeometryPack::new(eta)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::make_grid;
    use std::f64::consts::PI;

    fn smooth_state(grid: &Arc<Grid>, amp: f64) -> (BulkField, BulkField, SurfaceField) {
        let l = grid.l();
        let b = grid.b();
        let t = 2.0 * PI / l;
        let p = BulkField::from_fn(grid, 1, |_, x1, x2, y| amp * (t * x1).cos() * (1.0 + y) + amp * (t * x2).sin());
        let u = BulkField::from_fn(grid, 3, |c, x1, x2, y| {
            let s = y * (2.0 * b - y);
            match c {
                0 => amp * s * (t * (x1 + x2)).sin(),
                1 => amp * s * (t * x1).cos(),
                _ => amp * y * y * (t * x2).cos(),
            }
        });
        let eta = SurfaceField::from_fn(grid, 1, |_, x1, x2| amp * ((t * x1).sin() + 0.5 * (t * (x1 - x2)).cos()));
        (p, u, eta)
    }

    /// Directly coded flat-domain momentum residual
    /// `u·∇u − γ∂₁u + ∇p − μ∇·(∇u + ∇u^t)`.
    fn flat_momentum(p: &BulkField, u: &BulkField, gamma: f64, mu: f64) -> BulkField {
        let grid = u.grid().clone();
        let grads: Vec<Vec<BulkField>> =
            (0..3).map(|i| (0..3).map(|k| u.component(i).partial(k)).collect()).collect();
        let us = padded_components(u);
        let mut adv = vec![vec![0.0; us[0].len()]; 3];
        for i in 0..3 {
            let gs: Vec<Vec<f64>> = (0..3).map(|k| grads[i][k].padded(0)).collect();
            for q in 0..us[0].len() {
                adv[i][q] = us[0][q] * gs[0][q] + us[1][q] * gs[1][q] + us[2][q] * gs[2][q];
            }
        }
        let adv = bulk_from_samples(&grid, &adv);
        let mut parts = Vec::new();
        for i in 0..3 {
            let mut visc = BulkField::zeros(&grid, 1);
            for j in 0..3 {
                visc = visc.add(&grads[i][j].add(&grads[j][i]).partial(j));
            }
            let t = adv.component(i).axpy(-gamma, &grads[i][0]).add(&p.partial(i)).axpy(-mu, &visc);
            parts.push(t);
        }
        BulkField::stack(&[&parts[0], &parts[1], &parts[2]])
    }

    #[test]
    fn zero_state_maps_to_zero() {
        let g = make_grid(4.0, 8, 8, 1.0).unwrap();
        let z = SurfaceField::zeros(&g, 1);
        let r1 = xi1(&BulkField::zeros(&g, 1), &BulkField::zeros(&g, 3), &z, 0.7, 1.0, 1.0).unwrap();
        let r2 = xi2(&BulkField::zeros(&g, 1), &BulkField::zeros(&g, 3), &z, 1.0, 1.0).unwrap();
        assert_eq!(r1.max_abs(), 0.0);
        assert_eq!(r2.max_abs(), 0.0);
    }

    #[test]
    fn flat_momentum_matches_direct_implementation() {
        let g = make_grid(4.0, 12, 10, 1.0).unwrap();
        let (p, u, _) = smooth_state(&g, 0.3);
        let z = SurfaceField::zeros(&g, 1);
        for gamma in [0.0, 0.8] {
            let a = xi1(&p, &u, &z, gamma, 2.0, 1.3).unwrap();
            let b = flat_momentum(&p, &u, gamma, 1.3);
            assert!(a.sub(&b).max_abs() < 1e-12, "{}", a.sub(&b).max_abs());
        }
    }

    #[test]
    fn constant_pressure_pushes_against_flat_normal() {
        let g = make_grid(4.0, 8, 8, 1.0).unwrap();
        let mut p = BulkField::zeros(&g, 1);
        for j in 0..g.ny() {
            p.set(0, 0, 0, j, crate::grid::C64::new(2.5, 0.0));
        }
        let r = xi2(&p, &BulkField::zeros(&g, 3), &SurfaceField::zeros(&g, 1), 1.0, 1.0).unwrap();
        assert!((r.get(2, 0, 0).re + 2.5).abs() < 1e-14);
        let mut rest = r.clone();
        rest.set(2, 0, 0, crate::grid::C64::new(0.0, 0.0));
        assert!(rest.max_abs() < 1e-14);
    }

    #[test]
    fn forces_on_flat_geometry() {
        let g = make_grid(4.0, 8, 8, 1.0).unwrap();
        let z = SurfaceField::zeros(&g, 1);
        let f = [
            FieldExpr::parse("sin(1.5707963267948966*x1)*exp(-x3)").unwrap(),
            FieldExpr::constant(0.0),
            FieldExpr::parse("x3*x3").unwrap(),
        ];
        let r = upsilon1(&f, &z).unwrap();
        let direct = BulkField::from_fn(&g, 3, |c, x1, x2, y| -f[c].eval([x1, x2, y]).unwrap());
        assert!(r.sub(&direct).max_abs() < 1e-13);
        let id = [
            [FieldExpr::constant(1.0), FieldExpr::constant(0.0), FieldExpr::constant(0.0)],
            [FieldExpr::constant(0.0), FieldExpr::constant(1.0), FieldExpr::constant(0.0)],
            [FieldExpr::constant(0.0), FieldExpr::constant(0.0), FieldExpr::constant(1.0)],
        ];
        let t = upsilon2(&id, &z).unwrap();
        assert!((t.get(2, 0, 0).re + 1.0).abs() < 1e-14);
        assert!(t.component(0).max_abs() + t.component(1).max_abs() < 1e-14);
    }

    #[test]
    fn maps_are_second_order_close_to_their_linearization() {
        use crate::linear::{apply_linear, SolutionTriple};
        use crate::params::Params;
        let g = make_grid(4.0, 12, 10, 1.0).unwrap();
        let (p, u, eta) = smooth_state(&g, 1.0);
        let params =
            Params { gravity: 1.5, viscosity: 0.8, surface_tension: 1.2, gamma: 0.6, depth: 1.0, ..Params::default() };
        let lin = apply_linear(&SolutionTriple { p: p.clone(), u: u.clone(), eta: eta.clone() }, &params);
        let mut e1 = Vec::new();
        let mut e2 = Vec::new();
        for eps in [1e-2, 5e-3] {
            let (ps, us, es) = (p.scale(eps), u.scale(eps), eta.scale(eps));
            let f = xi1(&ps, &us, &es, params.gamma, params.gravity, params.viscosity).unwrap();
            let k = xi2(&ps, &us, &es, params.viscosity, params.surface_tension).unwrap();
            e1.push(f.sub(&lin.f.scale(eps)).max_abs());
            e2.push(k.sub(&lin.k.scale(eps)).max_abs());
        }
        for errs in [e1, e2] {
            let slope = (errs[0] / errs[1]).ln() / 2f64.ln();
            assert!((1.9..=2.1).contains(&slope), "slope {slope}");
        }
    }
}
