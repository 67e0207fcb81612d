//! The flattening tool-chain: harmonic-type lifting, the surface extension
//! `ℰ = ℰ₀ + ℰ₁`, the Jacobian and geometry matrices of the flattening map
//! `𝔉(x, y) = (x, y + ℰη(x, y))`, mean curvature, composition of closed-form
//! fields with `𝔉`, and the inverse vertical map.
//!
//! With `e = ℰη` and `J = 1 + ∂₃e` the matrices are
//!
//! ```text
//!   𝒜 = (∇𝔉)^{−t} = [[1, 0, −∂₁e/J], [0, 1, −∂₂e/J], [0, 0, 1/J]]
//!   M = J𝒜^t      = [[J, 0, 0], [0, J, 0], [−∂₁e, −∂₂e, 1]]
//!   M^{−1}        = [[1/J, 0, 0], [0, 1/J, 0], [∂₁e/J, ∂₂e/J, 1]]
//!   𝒜^{−1}        = [[1, 0, ∂₁e], [0, 1, ∂₂e], [0, 0, J]]
//! ```
//!
//! all evaluated in closed form pointwise; nothing is inverted numerically.

use std::sync::Arc;

use crate::dsl::{EvalError, FieldExpr};
use crate::error::{Error, Result};
use crate::grid::{BulkField, Grid, SurfaceField, C64};
use crate::spaces::{bracket, bump};

/// Smallest admissible Jacobian of the flattening map.
pub const JACOBIAN_FLOOR: f64 = 0.01;

/// Vertical cutoff `φ_v(t) = exp(1 − 1/(1 − (2t/b)²))` on `|t| < b/2`.
pub fn vertical_cutoff(t: f64, b: f64) -> f64 {
    let s = 2.0 * t / b;
    if s.abs() >= 1.0 {
        0.0
    } else {
        (1.0 - 1.0 / (1.0 - s * s)).exp()
    }
}

/// Lifting `L_Ω h`: mode-wise profile `e^{⟨ξ⟩(y−b)} ĥ(ξ)`.
pub fn lift(h: &SurfaceField) -> BulkField {
    let g = h.grid().clone();
    let n = g.nx();
    let b = g.b();
    let mut out = BulkField::zeros(&g, h.ncomp());
    for c in 0..h.ncomp() {
        for (j, &y) in g.y().iter().enumerate() {
            let slice = out.slice_mut(c, j);
            for i1 in 0..n {
                for i2 in 0..n {
                    let w = (bracket(g.xi(i1, i2)) * (y - b)).exp();
                    slice[i1 * n + i2] = h.get(c, i1, i2) * w;
                }
            }
        }
    }
    out
}

/// Extension `ℰη = ℰ₀η + ℰ₁η` with `ℰ₁η = (y/b)φ(D)η` and
/// `ℰ₀η = φ_v(b−y)·L_Ω(1−φ(D))η`.
pub fn extend(eta: &SurfaceField) -> BulkField {
    let g = eta.grid().clone();
    let n = g.nx();
    let b = g.b();
    let mut out = BulkField::zeros(&g, eta.ncomp());
    for c in 0..eta.ncomp() {
        for (j, &y) in g.y().iter().enumerate() {
            let ramp = y / b;
            let cut = vertical_cutoff(b - y, b);
            let slice = out.slice_mut(c, j);
            for i1 in 0..n {
                for i2 in 0..n {
                    let xi = g.xi(i1, i2);
                    let phi = bump(xi);
                    let v = eta.get(c, i1, i2);
                    let mut acc = v * (phi * ramp);
                    if phi < 1.0 && cut > 0.0 {
                        acc += v * ((1.0 - phi) * cut * (bracket(xi) * (y - b)).exp());
                    }
                    slice[i1 * n + i2] = acc;
                }
            }
        }
    }
    out
}

/// Trace at the free surface `Σ`.
pub fn trace_sigma(f: &BulkField) -> SurfaceField {
    f.trace_top()
}

/// Trace at the bottom `Σ₀`.
pub fn trace_sigma0(f: &BulkField) -> SurfaceField {
    f.trace_bottom()
}

/// Local geometry at one sample point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NodeGeometry {
    /// Extension value `ℰη`.
    pub e: f64,
    /// `(∂₁ℰη, ∂₂ℰη, ∂₃ℰη)`.
    pub grad: [f64; 3],
}

/// A 3×3 real matrix, row-major.
pub type Mat3 = [[f64; 3]; 3];

impl NodeGeometry {
    /// Jacobian `J = 1 + ∂₃ℰη`.
    pub fn j(&self) -> f64 {
        1.0 + self.grad[2]
    }

    /// `𝒜 = (∇𝔉)^{−t}`.
    pub fn a(&self) -> Mat3 {
        let j = self.j();
        [[1.0, 0.0, -self.grad[0] / j], [0.0, 1.0, -self.grad[1] / j], [0.0, 0.0, 1.0 / j]]
    }

    /// `𝒜^{−1} = (∇𝔉)^t`.
    pub fn a_inv(&self) -> Mat3 {
        [[1.0, 0.0, self.grad[0]], [0.0, 1.0, self.grad[1]], [0.0, 0.0, self.j()]]
    }

    /// `M = J𝒜^t`.
    pub fn m(&self) -> Mat3 {
        let j = self.j();
        [[j, 0.0, 0.0], [0.0, j, 0.0], [-self.grad[0], -self.grad[1], 1.0]]
    }

    /// `M^{−1}`.
    pub fn m_inv(&self) -> Mat3 {
        let j = self.j();
        [[1.0 / j, 0.0, 0.0], [0.0, 1.0 / j, 0.0], [self.grad[0] / j, self.grad[1] / j, 1.0]]
    }
}

/// Matrix product.
pub fn matmul3(a: &Mat3, b: &Mat3) -> Mat3 {
    let mut c = [[0.0; 3]; 3];
    for i in 0..3 {
        for k in 0..3 {
            for j in 0..3 {
                c[i][j] += a[i][k] * b[k][j];
            }
        }
    }
    c
}

/// Transpose.
pub fn transpose3(a: &Mat3) -> Mat3 {
    let mut t = [[0.0; 3]; 3];
    for i in 0..3 {
        for j in 0..3 {
            t[i][j] = a[j][i];
        }
    }
    t
}

/// Determinant.
pub fn det3(a: &Mat3) -> f64 {
    a[0][0] * (a[1][1] * a[2][2] - a[1][2] * a[2][1]) - a[0][1] * (a[1][0] * a[2][2] - a[1][2] * a[2][0])
        + a[0][2] * (a[1][0] * a[2][1] - a[1][1] * a[2][0])
}

/// Matrix–vector product.
pub fn matvec3(a: &Mat3, v: &[f64; 3]) -> [f64; 3] {
    [
        a[0][0] * v[0] + a[0][1] * v[1] + a[0][2] * v[2],
        a[1][0] * v[0] + a[1][1] * v[1] + a[1][2] * v[2],
        a[2][0] * v[0] + a[2][1] * v[1] + a[2][2] * v[2],
    ]
}

/// Geometry of the flattening map for one surface `η`.
///
/// Spectral fields are kept for `η`, `ℰη`, its gradient, `J` and `1/J`
/// (the latter dealiased from padded samples); the matrices are available
/// pointwise on the padded grid through [`GeometryPack::node`] and as
/// dealiased spectral fields through [`GeometryPack::matrix_field`].
#[derive(Debug, Clone)]
pub struct GeometryPack {
    /// Surface height.
    pub eta: SurfaceField,
    /// Extension `ℰη`.
    pub ext: BulkField,
    /// `(∂₁ℰη, ∂₂ℰη, ∂₃ℰη)`.
    pub grad_ext: BulkField,
    /// Jacobian `J`.
    pub j: BulkField,
    /// `1/J`, dealiased.
    pub jinv: BulkField,
    padded_e: Vec<f64>,
    padded_grad: [Vec<f64>; 3],
    min_j: f64,
}

/// Which geometry matrix to tabulate.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GeometryMatrix {
    /// `𝒜`
    A,
    /// `𝒜^{−1}`
    AInv,
    /// `M`
    M,
    /// `M^{−1}`
    MInv,
}

impl GeometryPack {
    /// Builds the pack for `eta` using the extension [`extend`].
    pub fn new(eta: &SurfaceField) -> Result<Self> {
        if eta.ncomp() != 1 {
            return Err(Error::Shape("surface height must be a scalar field".into()));
        }
        Self::from_extension(eta.clone(), extend(eta))
    }

    /// Builds the pack for a given extension field (used for manufactured
    /// geometries); `eta` should be its trace at `Σ`.
    pub fn from_extension(eta: SurfaceField, ext: BulkField) -> Result<Self> {
        let grid = ext.grid().clone();
        let grad_ext = ext.grad();
        let padded_e = ext.padded(0);
        let padded_grad = [grad_ext.padded(0), grad_ext.padded(1), grad_ext.padded(2)];
        let mut min_j = f64::INFINITY;
        for &d in &padded_grad[2] {
            min_j = min_j.min(1.0 + d);
        }
        for v in grad_ext.component(2).to_real() {
            min_j = min_j.min(1.0 + v);
        }
        if !(min_j > JACOBIAN_FLOOR) {
            return Err(Error::DegenerateGeometry(min_j));
        }
        let mut j = grad_ext.component(2);
        add_constant(&mut j, 1.0);
        let jinv_samples: Vec<f64> = padded_grad[2].iter().map(|d| 1.0 / (1.0 + d)).collect();
        let jinv = BulkField::from_padded(&grid, &jinv_samples);
        Ok(Self { eta, ext, grad_ext, j, jinv, padded_e, padded_grad, min_j })
    }

    /// The grid.
    pub fn grid(&self) -> &Arc<Grid> {
        self.ext.grid()
    }

    /// Smallest Jacobian over base and padded nodes.
    pub fn min_j(&self) -> f64 {
        self.min_j
    }

    /// Number of padded sample points (`Ny·npad²`, layout `(j, p1, p2)`).
    pub fn n_nodes(&self) -> usize {
        self.padded_e.len()
    }

    /// Local geometry at padded node `q`.
    pub fn node(&self, q: usize) -> NodeGeometry {
        NodeGeometry {
            e: self.padded_e[q],
            grad: [self.padded_grad[0][q], self.padded_grad[1][q], self.padded_grad[2][q]],
        }
    }

    /// Dealiased spectral field (9 components, row-major) of a geometry matrix.
    pub fn matrix_field(&self, which: GeometryMatrix) -> BulkField {
        let grid = self.grid();
        let n = self.n_nodes();
        let mut comps: Vec<Vec<f64>> = (0..9).map(|_| Vec::with_capacity(n)).collect();
        for q in 0..n {
            let g = self.node(q);
            let m = match which {
                GeometryMatrix::A => g.a(),
                GeometryMatrix::AInv => g.a_inv(),
                GeometryMatrix::M => g.m(),
                GeometryMatrix::MInv => g.m_inv(),
            };
            for r in 0..3 {
                for c in 0..3 {
                    comps[3 * r + c].push(m[r][c]);
                }
            }
        }
        let parts: Vec<BulkField> = comps.iter().map(|v| BulkField::from_padded(grid, v)).collect();
        let refs: Vec<&BulkField> = parts.iter().collect();
        BulkField::stack(&refs)
    }

    /// Physical coordinates `(x1, x2, y)` of padded node `q`.
    pub fn node_position(&self, q: usize) -> [f64; 3] {
        let g = self.grid();
        let m = g.npad();
        let j = q / (m * m);
        let r = q % (m * m);
        [g.x_of(r / m, m), g.x_of(r % m, m), g.y()[j]]
    }
}

fn add_constant(f: &mut BulkField, c: f64) {
    let ny = f.grid().ny();
    for j in 0..ny {
        f.slice_mut(0, j)[0] += C64::new(c, 0.0);
    }
}

/// Builds the geometry pack of `eta`; see [`GeometryPack::new`].
pub fn geometry_pack(eta: &SurfaceField) -> Result<GeometryPack> {
    GeometryPack::new(eta)
}

/// Mean curvature `ℋ(η) = ∇_∥·((1+|∇_∥η|²)^{−1/2}∇_∥η)` with dealiased
/// nonlinear products.
pub fn mean_curvature(eta: &SurfaceField) -> SurfaceField {
    let g = eta.grid().clone();
    let d1 = eta.dx(0).padded(0);
    let d2 = eta.dx(1).padded(0);
    let mut w1 = Vec::with_capacity(d1.len());
    let mut w2 = Vec::with_capacity(d1.len());
    for (a, b) in d1.iter().zip(&d2) {
        let s = 1.0 / (1.0 + a * a + b * b).sqrt();
        w1.push(a * s);
        w2.push(b * s);
    }
    SurfaceField::from_padded(&g, &w1).dx(0).add(&SurfaceField::from_padded(&g, &w2).dx(1))
}

/// Evaluates `f` at the displaced base-grid nodes `(x, y + ℰη(x, y))` and
/// transforms the samples.
pub fn compose_fn<F>(f: F, ext: &BulkField) -> Result<BulkField>
where
    F: Fn([f64; 3]) -> std::result::Result<f64, EvalError>,
{
    let g = ext.grid().clone();
    let n = g.nx();
    let ny = g.ny();
    let e = ext.to_real();
    let mut vals = vec![0.0; n * n * ny];
    for i1 in 0..n {
        for i2 in 0..n {
            for j in 0..ny {
                let q = (i1 * n + i2) * ny + j;
                vals[q] = f([g.x_of(i1, n), g.x_of(i2, n), g.y()[j] + e[q]])?;
            }
        }
    }
    BulkField::from_real(&g, 1, &vals)
}

/// Composition `F ∘ 𝔉_η` of a field expression with the flattening map.
pub fn compose(f: &FieldExpr, eta: &SurfaceField) -> Result<BulkField> {
    compose_fn(|p| f.eval(p), &extend(eta))
}

/// Samples `F ∘ 𝔉_η` at the padded nodes of a geometry pack (layout
/// `(j, p1, p2)`).
pub fn compose_padded(f: &FieldExpr, pack: &GeometryPack) -> Result<Vec<f64>> {
    let mut out = Vec::with_capacity(pack.n_nodes());
    for q in 0..pack.n_nodes() {
        let [x1, x2, y] = pack.node_position(q);
        out.push(f.eval([x1, x2, y + pack.node(q).e])?);
    }
    Ok(out)
}

/// Pointwise evaluator of `ℰη` and its vertical derivative along vertical
/// lines.
struct VerticalMap {
    profile: Vec<f64>,
    dprofile: Vec<f64>,
}

impl VerticalMap {
    fn new(ext: &BulkField, x1: f64, x2: f64) -> Self {
        let cheb = ext.grid().cheb();
        let profile: Vec<f64> = ext.eval_profile(0, x1, x2).into_iter().map(|z| z.re).collect();
        let mut dprofile = vec![0.0; profile.len()];
        cheb.apply(1, &profile, &mut dprofile);
        Self { profile, dprofile }
    }
}

/// Solves `y + ℰη(x, y) = z` for every `(x1, x2, z)` by safeguarded Newton
/// iteration with bisection fallback on `[0, b]`.
pub fn invert_flattening(pack: &GeometryPack, points: &[[f64; 3]]) -> Result<Vec<f64>> {
    let cheb = pack.grid().cheb();
    let mut out = Vec::with_capacity(points.len());
    for &[x1, x2, z] in points {
        let vm = VerticalMap::new(&pack.ext, x1, x2);
        out.push(invert_column(cheb, &vm.profile, &vm.dprofile, z).map_err(|top| {
            Error::OutsideDomain(format!("({x1}, {x2}, {z}) is not in [0, {top}]"))
        })?);
    }
    Ok(out)
}

/// Solves `y + e(y) = z` on `[0, b]` for one vertical line, given nodal
/// values of `e` and `∂_y e`.  On failure returns the height `b + e(b)` of
/// the line's top point.
pub(crate) fn invert_column(
    cheb: &crate::chebyshev::Chebyshev,
    profile: &[f64],
    dprofile: &[f64],
    z: f64,
) -> std::result::Result<f64, f64> {
    let b = cheb.depth();
    let top = b + profile[profile.len() - 1];
    let slack = 1e-13 * b.max(1.0);
    if !(z >= -slack && z <= top + slack) {
        return Err(top);
    }
    let z = z.clamp(0.0, top);
    let map = |y: f64| y + cheb.interpolate(profile, y) - z;
    let (mut lo, mut hi) = (0.0, b);
    let mut y = z * b / top;
    for _ in 0..100 {
        let r = map(y);
        if r.abs() <= 1e-13 * b.max(1.0) {
            return Ok(y);
        }
        if r > 0.0 {
            hi = y;
        } else {
            lo = y;
        }
        let d = 1.0 + cheb.interpolate(dprofile, y);
        let mut next = y - r / d;
        if !(next > lo && next < hi) || d <= 0.0 {
            next = 0.5 * (lo + hi);
        }
        if (next - y).abs() <= 1e-16 * b {
            return Ok(next);
        }
        y = next;
    }
    Ok(y)
}

/// Residual `|y + ℰη(x, y) − z|` of an inverse flattening result.
pub fn flattening_defect(pack: &GeometryPack, point: [f64; 3], y: f64) -> f64 {
    let e = pack.ext.eval_at(0, point[0], point[1], y).re;
    (y + e - point[2]).abs()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::make_grid;
    use std::f64::consts::PI;

    fn random_eta(g: &Arc<Grid>, amp: f64, seed: u64) -> SurfaceField {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        let mut f = SurfaceField::zeros(g, 1);
        let n = g.nx();
        for i1 in 0..n {
            for i2 in 0..n {
                if i1 == 0 && i2 == 0 || g.is_nyquist_mode(i1, i2) {
                    continue;
                }
                let k = g.xi(i1, i2);
                let decay = (-(k[0] * k[0] + k[1] * k[1])).exp();
                f.set(0, i1, i2, C64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)) * (amp * decay));
            }
        }
        f.realify()
    }

    #[test]
    fn lift_profile_and_trace() {
        let g = make_grid(4.0, 8, 10, 1.0).unwrap();
        let h = SurfaceField::from_fn(&g, 1, |_, _, _| 2.0);
        let l = lift(&h);
        for (j, y) in g.y().iter().enumerate() {
            assert!((l.get(0, 0, 0, j).re - 2.0 * (y - 1.0).exp()).abs() < 1e-14);
        }
        let h = random_eta(&g, 1.0, 3);
        assert!(trace_sigma(&lift(&h)).sub(&h).max_abs() < 1e-13);
    }

    #[test]
    fn extension_traces_and_bands() {
        let g = make_grid(4.0, 16, 12, 1.0).unwrap();
        let eta = random_eta(&g, 0.1, 5);
        let e = extend(&eta);
        assert!(trace_sigma(&e).sub(&eta).max_abs() < 1e-12);
        assert!(trace_sigma0(&e).max_abs() < 1e-12);
        // high single mode: vanishes for y ≤ b/2
        let g2 = make_grid(2.0, 16, 12, 1.0).unwrap();
        let mut hi = SurfaceField::zeros(&g2, 1);
        hi.set(0, 4, 1, C64::new(0.5, 0.0));
        let eh = extend(&hi);
        assert!(eh.max_abs() > 0.1);
        for (j, &y) in g2.y().iter().enumerate() {
            if y <= 0.5 {
                assert_eq!(eh.slice(0, j).iter().map(|z| z.norm()).sum::<f64>(), 0.0);
            }
        }
        // low single mode: pure ramp
        let mut lo = SurfaceField::zeros(&g, 1);
        lo.set(0, 1, 0, C64::new(0.5, 0.0));
        let el = extend(&lo);
        for (j, &y) in g.y().iter().enumerate() {
            assert!((el.get(0, 1, 0, j) - 0.5 * y).norm() < 1e-15);
        }
    }

    #[test]
    fn identity_and_manufactured_packs() {
        let g = make_grid(1.0, 8, 8, 1.0).unwrap();
        let p = GeometryPack::new(&SurfaceField::zeros(&g, 1)).unwrap();
        assert_eq!(p.min_j(), 1.0);
        for q in (0..p.n_nodes()).step_by(17) {
            assert_eq!(p.node(q).m(), [[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]]);
        }
        let ext = BulkField::from_fn(&g, 1, |_, _, _, y| 0.2 * y);
        let eta = trace_sigma(&ext);
        let p = GeometryPack::from_extension(eta, ext).unwrap();
        let m = p.node(123).m();
        for r in 0..3 {
            for c in 0..3 {
                let expect = if r != c { 0.0 } else if r < 2 { 1.2 } else { 1.0 };
                assert!((m[r][c] - expect).abs() < 1e-13);
            }
        }
        assert!((p.j.get(0, 0, 0, 4).re - 1.2).abs() < 1e-13);
    }

    #[test]
    fn matrix_identities_on_random_surfaces() {
        let g = make_grid(4.0, 16, 10, 1.0).unwrap();
        for seed in 0..5 {
            let p = GeometryPack::new(&random_eta(&g, 0.05, seed)).unwrap();
            for q in (0..p.n_nodes()).step_by(7) {
                let n = p.node(q);
                let mm = matmul3(&n.m(), &n.m_inv());
                let aa = matmul3(&n.a(), &n.a_inv());
                for r in 0..3 {
                    for c in 0..3 {
                        let id = if r == c { 1.0 } else { 0.0 };
                        assert!((mm[r][c] - id).abs() < 1e-12);
                        assert!((aa[r][c] - id).abs() < 1e-12);
                    }
                }
                assert!((det3(&n.m()) - n.j() * n.j()).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn degenerate_geometry_is_rejected() {
        let g = make_grid(1.0, 8, 8, 1.0).unwrap();
        let ext = BulkField::from_fn(&g, 1, |_, _, _, y| -1.5 * y);
        let eta = trace_sigma(&ext);
        let e = GeometryPack::from_extension(eta, ext).unwrap_err();
        assert!(e.to_string().starts_with("flattening degenerate: min J = "));
    }

    #[test]
    fn curvature_of_a_sine() {
        let g = make_grid(2.0 * PI, 32, 8, 1.0).unwrap();
        let eta = SurfaceField::from_fn(&g, 1, |_, x1, _| 0.1 * x1.sin());
        let h = mean_curvature(&eta).to_real();
        // x1 = π/2 is grid index 8
        assert!((h[8 * 32] + 0.1).abs() < 1e-8);
    }

    #[test]
    fn composition_with_linear_displacement() {
        let g = make_grid(1.0, 8, 8, 2.0).unwrap();
        let ext = BulkField::from_fn(&g, 1, |_, _, _, y| 0.3 * y / 2.0);
        let f = compose_fn(|p| Ok(p[2]), &ext).unwrap();
        let expect = BulkField::from_fn(&g, 1, |_, _, _, y| 1.15 * y);
        assert!(f.sub(&expect).max_abs() < 1e-13);
        let c = compose(&FieldExpr::constant(2.5), &SurfaceField::zeros(&g, 1)).unwrap();
        assert!((c.get(0, 0, 0, 3).re - 2.5).abs() < 1e-15);
    }

    #[test]
    fn inverse_flattening_round_trip() {
        let g = make_grid(4.0, 16, 12, 1.0).unwrap();
        let ext = BulkField::from_fn(&g, 1, |_, _, _, y| 0.25 * y);
        let pack = GeometryPack::from_extension(trace_sigma(&ext), ext).unwrap();
        let ys = invert_flattening(&pack, &[[0.3, 1.0, 1.0], [2.0, 3.0, 0.5]]).unwrap();
        assert!((ys[0] - 0.8).abs() < 1e-13 && (ys[1] - 0.4).abs() < 1e-13);
        let pack = GeometryPack::new(&random_eta(&g, 0.1, 9)).unwrap();
        let pts: Vec<[f64; 3]> = (0..50)
            .map(|i| {
                let (x1, x2) = (0.07 * i as f64, 0.11 * i as f64);
                let top = 1.0 + pack.eta.eval_at(0, x1, x2).re;
                [x1, x2, top * i as f64 / 49.0]
            })
            .collect();
        let ys = invert_flattening(&pack, &pts).unwrap();
        for (p, y) in pts.iter().zip(ys) {
            assert!(flattening_defect(&pack, *p, y) < 1e-12);
        }
        assert!(invert_flattening(&pack, &[[0.0, 0.0, -0.1]]).is_err());
    }
}
