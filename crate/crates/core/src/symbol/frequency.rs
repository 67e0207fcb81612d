//! Per-frequency boundary-value solver for the curl-formulated linearized
//! free-boundary Stokes problem.
//!
//! At a horizontal frequency `ξ` every horizontal derivative becomes
//! multiplication by `2πiξ_j` and the problem reduces to a two-point
//! boundary-value problem in `y ∈ (0, b)` for the pressure `p`, the velocity
//! `u` and the constant vector `χ` (the surface gradient):
//!
//! ```text
//!   𝔤(χ,0) + ∇p − μ∇·𝔻u − γ∂₁u = f        in (0,b)
//!   ∇·u = g                                in [0,b]
//!   −(pI − μ𝔻u)e₃ − κ(∇_∥·χ)e₃ = k          at y = b
//!   ∇_∥^⊥·χ = ω,   u₃ + γ∂₁η = h             at y = b
//!   u = 0                                   at y = 0
//! ```
//!
//! with `∇·𝔻u = Δu + ∇(∇·u)` and `η = ∇_∥·χ/Δ_∥`.  The wave-speed terms are
//! only present when `γ ≠ 0`; the stationary problem (`γ = 0`) is the one
//! whose solution operator is the symbol `𝐦(ξ)`.
//!
//! Discretization: Chebyshev collocation with boundary bordering.  The three
//! momentum blocks have their `y = 0` rows replaced by the no-slip condition
//! and their `y = b` rows replaced by the dynamic condition; the divergence
//! is collocated at every node; the kinematic and curl conditions are two
//! appended rows.  The resulting `(4Ny+2)`-square system is solved by dense
//! LU.  At `ξ = 0` the constant vector `χ` is pinned to zero, the kinematic
//! condition reduces to the compatibility `h = ∫g`, and the bottom
//! divergence row is exchanged for the vertical momentum balance at `y = 0`
//! (the pressure is otherwise determined only up to a spurious collocation
//! mode).

use std::f64::consts::PI;

use crate::chebyshev::Chebyshev;
use crate::error::{Error, Result};
use crate::grid::{C64, I};
use crate::linalg::ComplexLu;
use crate::params::Params;

/// Right-hand side of the per-frequency problem.
#[derive(Debug, Clone, PartialEq)]
pub struct FrequencyData {
    /// Divergence datum, one value per vertical node.
    pub g: Vec<C64>,
    /// Bulk force, three vertical profiles.
    pub f: [Vec<C64>; 3],
    /// Stress datum at the surface.
    pub k: [C64; 3],
    /// Kinematic datum.
    pub h: C64,
    /// Curl datum.
    pub omega: C64,
}

impl FrequencyData {
    /// All-zero data for `ny` vertical nodes.
    pub fn zeros(ny: usize) -> Self {
        let z = vec![C64::new(0.0, 0.0); ny];
        Self {
            g: z.clone(),
            f: [z.clone(), z.clone(), z],
            k: [C64::new(0.0, 0.0); 3],
            h: C64::new(0.0, 0.0),
            omega: C64::new(0.0, 0.0),
        }
    }

    /// Number of vertical nodes.
    pub fn ny(&self) -> usize {
        self.g.len()
    }

    /// Componentwise complex conjugate.
    pub fn conj(&self) -> Self {
        let c = |v: &Vec<C64>| v.iter().map(|z| z.conj()).collect::<Vec<_>>();
        Self {
            g: c(&self.g),
            f: [c(&self.f[0]), c(&self.f[1]), c(&self.f[2])],
            k: [self.k[0].conj(), self.k[1].conj(), self.k[2].conj()],
            h: self.h.conj(),
            omega: self.omega.conj(),
        }
    }

    /// Applies a real 2×2 matrix `q` to the horizontal components of `f`
    /// and `k`; the curl datum transforms with `det q`.
    pub fn transform_horizontal(&self, q: [[f64; 2]; 2]) -> Self {
        let mut out = self.clone();
        for j in 0..self.ny() {
            let a = self.f[0][j];
            let b = self.f[1][j];
            out.f[0][j] = a * q[0][0] + b * q[0][1];
            out.f[1][j] = a * q[1][0] + b * q[1][1];
        }
        let (a, b) = (self.k[0], self.k[1]);
        out.k[0] = a * q[0][0] + b * q[0][1];
        out.k[1] = a * q[1][0] + b * q[1][1];
        out.omega = self.omega * (q[0][0] * q[1][1] - q[0][1] * q[1][0]);
        out
    }
}

/// Solution of the per-frequency problem.
#[derive(Debug, Clone, PartialEq)]
pub struct FrequencySolution {
    /// Pressure profile.
    pub p: Vec<C64>,
    /// Velocity profiles.
    pub u: [Vec<C64>; 3],
    /// Surface-gradient vector `χ`.
    pub chi: [C64; 2],
    /// Surface height recovered from `χ` (0 at `ξ = 0`).
    pub eta: C64,
}

impl FrequencySolution {
    /// The zero solution for `ny` nodes.
    pub fn zeros(ny: usize) -> Self {
        let z = vec![C64::new(0.0, 0.0); ny];
        Self { p: z.clone(), u: [z.clone(), z.clone(), z], chi: [C64::new(0.0, 0.0); 2], eta: C64::new(0.0, 0.0) }
    }

    /// Number of vertical nodes.
    pub fn ny(&self) -> usize {
        self.p.len()
    }

    /// Flattens `(p, u₁, u₂, u₃, χ₁, χ₂)` into one vector.
    pub fn to_vec(&self) -> Vec<C64> {
        let mut v = Vec::with_capacity(4 * self.ny() + 2);
        v.extend_from_slice(&self.p);
        for c in 0..3 {
            v.extend_from_slice(&self.u[c]);
        }
        v.extend_from_slice(&self.chi);
        v
    }

    /// Inverse of [`Self::to_vec`]; `eta` is recomputed from `χ` at `xi`.
    pub fn from_vec(v: &[C64], ny: usize, xi: [f64; 2]) -> Self {
        let chi = if v.len() >= 4 * ny + 2 { [v[4 * ny], v[4 * ny + 1]] } else { [C64::new(0.0, 0.0); 2] };
        Self {
            p: v[0..ny].to_vec(),
            u: [v[ny..2 * ny].to_vec(), v[2 * ny..3 * ny].to_vec(), v[3 * ny..4 * ny].to_vec()],
            chi,
            eta: eta_from_chi(xi, chi),
        }
    }

    /// `self + α·other` (η is combined linearly as well).
    pub fn axpy(&self, alpha: C64, other: &Self) -> Self {
        let comb = |a: &Vec<C64>, b: &Vec<C64>| a.iter().zip(b).map(|(x, y)| x + alpha * y).collect::<Vec<_>>();
        Self {
            p: comb(&self.p, &other.p),
            u: [comb(&self.u[0], &other.u[0]), comb(&self.u[1], &other.u[1]), comb(&self.u[2], &other.u[2])],
            chi: [self.chi[0] + alpha * other.chi[0], self.chi[1] + alpha * other.chi[1]],
            eta: self.eta + alpha * other.eta,
        }
    }

    /// Multiplies every entry by `alpha`.
    pub fn scale(&self, alpha: C64) -> Self {
        Self::zeros(self.ny()).axpy(alpha, self)
    }

    /// Largest entry magnitude over `(p, u, χ)`.
    pub fn max_abs(&self) -> f64 {
        self.to_vec().iter().fold(0.0, |m, z| m.max(z.norm()))
    }

    /// Componentwise complex conjugate.
    pub fn conj(&self) -> Self {
        let c = |v: &Vec<C64>| v.iter().map(|z| z.conj()).collect::<Vec<_>>();
        Self {
            p: c(&self.p),
            u: [c(&self.u[0]), c(&self.u[1]), c(&self.u[2])],
            chi: [self.chi[0].conj(), self.chi[1].conj()],
            eta: self.eta.conj(),
        }
    }

    /// Applies a real 2×2 matrix to the horizontal components of `u` and `χ`.
    pub fn transform_horizontal(&self, q: [[f64; 2]; 2]) -> Self {
        let mut out = self.clone();
        for j in 0..self.ny() {
            let a = self.u[0][j];
            let b = self.u[1][j];
            out.u[0][j] = a * q[0][0] + b * q[0][1];
            out.u[1][j] = a * q[1][0] + b * q[1][1];
        }
        let (a, b) = (self.chi[0], self.chi[1]);
        out.chi[0] = a * q[0][0] + b * q[0][1];
        out.chi[1] = a * q[1][0] + b * q[1][1];
        out
    }
}

/// `η̂ = (ξ·χ̂)/(2πi|ξ|²)`, with the zero-frequency value pinned to 0.
pub fn eta_from_chi(xi: [f64; 2], chi: [C64; 2]) -> C64 {
    let r2 = xi[0] * xi[0] + xi[1] * xi[1];
    if r2 == 0.0 {
        return C64::new(0.0, 0.0);
    }
    (chi[0] * xi[0] + chi[1] * xi[1]) / (I * (2.0 * PI * r2))
}

/// Index helpers for the collocation system.
#[derive(Debug, Clone, Copy)]
struct Layout {
    ny: usize,
}

impl Layout {
    fn p(&self, j: usize) -> usize {
        j
    }
    fn u(&self, c: usize, j: usize) -> usize {
        self.ny * (1 + c) + j
    }
    fn chi(&self, c: usize) -> usize {
        4 * self.ny + c
    }
    fn div_row(&self, j: usize) -> usize {
        j
    }
    fn mom_row(&self, c: usize, j: usize) -> usize {
        self.ny * (1 + c) + j
    }
    fn kin_row(&self) -> usize {
        4 * self.ny
    }
    fn curl_row(&self) -> usize {
        4 * self.ny + 1
    }
}

/// The assembled and factored collocation operator at one frequency.
#[derive(Debug, Clone)]
pub struct FrequencyOperator {
    xi: [f64; 2],
    zeta: [f64; 2],
    ny: usize,
    depth: f64,
    viscosity: f64,
    zero_mode: bool,
    weights: Vec<f64>,
    matrix: Vec<C64>,
    lu: ComplexLu,
}

impl FrequencyOperator {
    /// Assembles and factors the operator at `xi`, including the wave-speed
    /// terms for `params.gamma`.
    pub fn new(xi: [f64; 2], params: &Params, cheb: &Chebyshev) -> Result<Self> {
        Self::build(xi, [0.0, 0.0], params, params.gamma, cheb)
    }

    /// Assembles the translated operator realizing `𝐦(ξ + ζ)` as the base
    /// operator at `ξ` plus explicit shift terms in `ζ`.  The symbol is the
    /// stationary solution operator, so the wave speed is not used.
    pub fn translated(xi: [f64; 2], zeta: [f64; 2], params: &Params, cheb: &Chebyshev) -> Result<Self> {
        Self::build(xi, zeta, params, 0.0, cheb)
    }

    fn build(xi: [f64; 2], zeta: [f64; 2], params: &Params, gamma: f64, cheb: &Chebyshev) -> Result<Self> {
        params.validate()?;
        if (cheb.depth() - params.depth).abs() > 1e-12 * params.depth {
            return Err(Error::InvalidArgument(format!(
                "collocation depth {} differs from params.depth {}",
                cheb.depth(),
                params.depth
            )));
        }
        let total = [xi[0] + zeta[0], xi[1] + zeta[1]];
        let zero_mode = total[0] == 0.0 && total[1] == 0.0;
        if zero_mode && (zeta[0] != 0.0 || zeta[1] != 0.0) {
            return Err(Error::Unsupported("translated solve landing on the zero frequency".into()));
        }
        let ny = cheb.len();
        let n = if zero_mode { 4 * ny } else { 4 * ny + 2 };
        let matrix = assemble(xi, zeta, params, gamma, cheb, zero_mode);
        let lu = ComplexLu::factor(matrix.clone(), n).ok_or(Error::Singular {
            xi1: total[0],
            xi2: total[1],
            cond: f64::INFINITY,
        })?;
        if lu.pivot_ratio() > 1e15 {
            return Err(Error::Singular { xi1: total[0], xi2: total[1], cond: lu.pivot_ratio() });
        }
        Ok(Self {
            xi,
            zeta,
            ny,
            depth: cheb.depth(),
            viscosity: params.viscosity,
            zero_mode,
            weights: cheb.weights().to_vec(),
            matrix,
            lu,
        })
    }

    /// Frequency at which the operator acts (`ξ + ζ` for translated ones).
    pub fn frequency(&self) -> [f64; 2] {
        [self.xi[0] + self.zeta[0], self.xi[1] + self.zeta[1]]
    }

    /// Whether this is the zero-frequency operator.
    pub fn is_zero_mode(&self) -> bool {
        self.zero_mode
    }

    /// System dimension.
    pub fn dim(&self) -> usize {
        self.lu.n()
    }

    /// Pivot-ratio condition indicator of the factorization.
    pub fn condition_estimate(&self) -> f64 {
        self.lu.pivot_ratio()
    }

    /// The assembled (unfactored) matrix, row-major; empty after
    /// [`Self::discard_matrix`].
    pub fn matrix(&self) -> &[C64] {
        &self.matrix
    }

    /// Frees the unfactored matrix, keeping only the LU factors (used when
    /// many operators are cached).
    pub fn discard_matrix(&mut self) {
        self.matrix = Vec::new();
    }

    /// Right-hand-side vector for `data` (including the divergence-datum
    /// correction `μ2πiζ g` of translated operators).
    pub fn rhs(&self, data: &FrequencyData) -> Result<Vec<C64>> {
        let ny = self.ny;
        if data.ny() != ny || data.f.iter().any(|f| f.len() != ny) {
            return Err(Error::Shape(format!("frequency data must have {ny} vertical nodes")));
        }
        let lay = Layout { ny };
        let top = ny - 1;
        let mut b = vec![C64::new(0.0, 0.0); self.dim()];
        let z = [I * (2.0 * PI * self.zeta[0]), I * (2.0 * PI * self.zeta[1])];
        for j in 0..ny {
            b[lay.div_row(j)] = data.g[j];
        }
        for c in 0..3 {
            for j in 1..top {
                let mut v = data.f[c][j];
                if c < 2 {
                    v += z[c] * data.g[j] * self.viscosity;
                }
                b[lay.mom_row(c, j)] = v;
            }
            b[lay.mom_row(c, 0)] = C64::new(0.0, 0.0);
            b[lay.mom_row(c, top)] = data.k[c];
        }
        if self.zero_mode {
            b[lay.div_row(0)] = data.f[2][0];
        } else {
            b[lay.kin_row()] = data.h;
            b[lay.curl_row()] = data.omega;
        }
        Ok(b)
    }

    /// Solves `A x = b` for a raw right-hand side.
    pub fn solve_raw(&self, b: &[C64]) -> Vec<C64> {
        self.lu.solve(b)
    }

    /// Solves the system for `data`.
    pub fn solve(&self, data: &FrequencyData) -> Result<FrequencySolution> {
        self.solve_at_scale(data, 0.0)
    }

    /// Solves the system for `data`, measuring the zero-mode compatibility
    /// against at least `scale` (the size of the data this mode belongs to,
    /// so that roundoff in transformed data is not mistaken for an
    /// incompatibility).
    pub fn solve_at_scale(&self, data: &FrequencyData, scale: f64) -> Result<FrequencySolution> {
        if self.zero_mode {
            self.check_zero_mode(data, scale)?;
        }
        let b = self.rhs(data)?;
        let x = self.lu.solve(&b);
        Ok(FrequencySolution::from_vec(&x, self.ny, self.frequency()))
    }

    fn check_zero_mode(&self, data: &FrequencyData, floor: f64) -> Result<()> {
        let integral: C64 = data.g.iter().zip(&self.weights).map(|(g, w)| g * w).sum();
        let gmax = data.g.iter().fold(0.0f64, |m, z| m.max(z.norm()));
        let scale = (data.h.norm() + self.depth * gmax).max(floor);
        if scale > 0.0 && (data.h - integral).norm() > 1e-10 * scale {
            return Err(Error::Compatibility(format!(
                "h = {} but the integral of g is {}",
                data.h, integral
            )));
        }
        let dscale = data.f.iter().flatten().chain(data.k.iter()).fold(scale, |m, z| m.max(z.norm()));
        if data.omega.norm() > 1e-12 * dscale.max(1.0) {
            return Err(Error::Compatibility(format!("curl datum must vanish, got {}", data.omega)));
        }
        Ok(())
    }
}

/// Which parts of the translated operator to assemble, by degree in `ζ`.
#[derive(Debug, Clone, Copy)]
pub(crate) struct Degrees {
    pub base: bool,
    pub linear: bool,
    pub quadratic: bool,
}

impl Degrees {
    pub const ALL: Degrees = Degrees { base: true, linear: true, quadratic: true };
    pub const LINEAR: Degrees = Degrees { base: false, linear: true, quadratic: false };
}

/// Assembles the collocation matrix (row-major).
fn assemble(
    xi: [f64; 2],
    zeta: [f64; 2],
    params: &Params,
    gamma: f64,
    cheb: &Chebyshev,
    zero_mode: bool,
) -> Vec<C64> {
    assemble_parts(xi, zeta, params, gamma, cheb, zero_mode, Degrees::ALL)
}

/// Assembles the selected `ζ`-degree parts of the translated operator.
pub(crate) fn assemble_parts(
    xi: [f64; 2],
    zeta: [f64; 2],
    params: &Params,
    gamma: f64,
    cheb: &Chebyshev,
    zero_mode: bool,
    degrees: Degrees,
) -> Vec<C64> {
    let ny = cheb.len();
    let lay = Layout { ny };
    let n = if zero_mode { 4 * ny } else { 4 * ny + 2 };
    let top = ny - 1;
    let mu = params.viscosity;
    let grav = params.gravity;
    let kappa = params.surface_tension;
    let d = cheb.d1();
    let d2 = cheb.d2();
    let dd = |i: usize, j: usize| d[i * ny + j];
    let dd2 = |i: usize, j: usize| d2[i * ny + j];

    let k = [I * (2.0 * PI * xi[0]), I * (2.0 * PI * xi[1])];
    let kk = k[0] * k[0] + k[1] * k[1];
    let z = [I * (2.0 * PI * zeta[0]), I * (2.0 * PI * zeta[1])];
    let kz = k[0] * z[0] + k[1] * z[1];
    let zz = z[0] * z[0] + z[1] * z[1];
    // transport coefficient of −γ∂₁
    let tr = -gamma * k[0];

    let mut a = vec![C64::new(0.0, 0.0); n * n];
    let keep = [degrees.base, degrees.linear, degrees.quadratic];
    let mut put = |deg: usize, row: usize, col: usize, v: C64| {
        if keep[deg] && col < n {
            a[row * n + col] += v;
        }
    };
    let one = C64::new(1.0, 0.0);

    // divergence rows: ∇·u (+ 2πiζ·u)
    for j in 0..ny {
        let r = lay.div_row(j);
        if zero_mode && j == 0 {
            // vertical momentum at the bottom node: ∂₃p − 2μ∂₃²u₃ = f₃
            for l in 0..ny {
                put(0, r, lay.p(l), one * dd(0, l));
                put(0, r, lay.u(2, l), one * (-2.0 * mu * dd2(0, l)));
            }
            continue;
        }
        put(0, r, lay.u(0, j), k[0]);
        put(0, r, lay.u(1, j), k[1]);
        put(1, r, lay.u(0, j), z[0]);
        put(1, r, lay.u(1, j), z[1]);
        for l in 0..ny {
            put(0, r, lay.u(2, l), one * dd(j, l));
        }
    }

    // momentum rows
    for c in 0..3 {
        // no-slip at the bottom
        put(0, lay.mom_row(c, 0), lay.u(c, 0), one);
        for j in 1..top {
            let r = lay.mom_row(c, j);
            if c < 2 {
                put(0, r, lay.chi(c), one * grav);
                put(0, r, lay.p(j), k[c]);
                // −μ(∂₃² + k·k)u_c
                for l in 0..ny {
                    put(0, r, lay.u(c, l), one * (-mu * dd2(j, l)));
                }
                put(0, r, lay.u(c, j), -mu * kk);
                // −μ k_c (k·u_∥ + ∂₃u₃)
                put(0, r, lay.u(0, j), -mu * k[c] * k[0]);
                put(0, r, lay.u(1, j), -mu * k[c] * k[1]);
                for l in 0..ny {
                    put(0, r, lay.u(2, l), -mu * k[c] * dd(j, l));
                }
                put(0, r, lay.u(c, j), tr);
                // translation: 2πiζ_c p − μk_c(2πiζ·u) − 2μ(k·z)u_c − μ(z·z)u_c
                put(1, r, lay.p(j), z[c]);
                put(1, r, lay.u(0, j), -mu * k[c] * z[0]);
                put(1, r, lay.u(1, j), -mu * k[c] * z[1]);
                put(1, r, lay.u(c, j), -mu * 2.0 * kz);
                put(2, r, lay.u(c, j), -mu * zz);
            } else {
                for l in 0..ny {
                    put(0, r, lay.p(l), one * dd(j, l));
                    put(0, r, lay.u(2, l), one * (-mu * dd2(j, l)));
                }
                put(0, r, lay.u(2, j), -mu * kk);
                // −μ∂₃(k·u_∥ + ∂₃u₃)
                for l in 0..ny {
                    put(0, r, lay.u(0, l), -mu * k[0] * dd(j, l));
                    put(0, r, lay.u(1, l), -mu * k[1] * dd(j, l));
                    put(0, r, lay.u(2, l), one * (-mu * dd2(j, l)));
                }
                put(0, r, lay.u(2, j), tr);
                // translation: −μ∂₃(2πiζ·u) − 2μ(k·z)u₃ − μ(z·z)u₃
                for l in 0..ny {
                    put(1, r, lay.u(0, l), -mu * z[0] * dd(j, l));
                    put(1, r, lay.u(1, l), -mu * z[1] * dd(j, l));
                }
                put(1, r, lay.u(2, j), -mu * 2.0 * kz);
                put(2, r, lay.u(2, j), -mu * zz);
            }
        }
        // dynamic condition at the surface
        let r = lay.mom_row(c, top);
        if c < 2 {
            for l in 0..ny {
                put(0, r, lay.u(c, l), one * (mu * dd(top, l)));
            }
            put(0, r, lay.u(2, top), mu * k[c]);
            put(1, r, lay.u(2, top), mu * z[c]);
        } else {
            put(0, r, lay.p(top), -one);
            for l in 0..ny {
                put(0, r, lay.u(2, l), one * (2.0 * mu * dd(top, l)));
            }
            put(0, r, lay.chi(0), -kappa * k[0]);
            put(0, r, lay.chi(1), -kappa * k[1]);
            put(1, r, lay.chi(0), -kappa * z[0]);
            put(1, r, lay.chi(1), -kappa * z[1]);
        }
    }

    if !zero_mode {
        // kinematic: u₃(b) + γ∂₁η = h with η = ξ·χ/(2πi|ξ|²)
        let r = lay.kin_row();
        put(0, r, lay.u(2, top), one);
        let x = [xi[0] + zeta[0], xi[1] + zeta[1]];
        let r2 = x[0] * x[0] + x[1] * x[1];
        if gamma != 0.0 {
            put(0, r, lay.chi(0), one * (gamma * x[0] * x[0] / r2));
            put(0, r, lay.chi(1), one * (gamma * x[0] * x[1] / r2));
        }
        // curl: 2πi(−ξ₂χ₁ + ξ₁χ₂) (+ 2πiζ^⊥·χ)
        let r = lay.curl_row();
        put(0, r, lay.chi(0), -k[1]);
        put(0, r, lay.chi(1), k[0]);
        put(1, r, lay.chi(0), -z[1]);
        put(1, r, lay.chi(1), z[0]);
    }
    a
}

/// Solves the per-frequency problem at `xi` (see the module documentation).
pub fn solve_frequency(xi: [f64; 2], params: &Params, cheb: &Chebyshev, data: &FrequencyData) -> Result<FrequencySolution> {
    FrequencyOperator::new(xi, params, cheb)?.solve(data)
}

/// Solves independent per-frequency problems in parallel.
pub fn solve_frequency_batch(
    items: &[([f64; 2], FrequencyData)],
    params: &Params,
    cheb: &Chebyshev,
) -> Vec<Result<FrequencySolution>> {
    use rayon::prelude::*;
    items.par_iter().map(|(xi, d)| solve_frequency(*xi, params, cheb, d)).collect()
}

/// Solves the translated system realizing `𝐦(ξ + ζ)` at base frequency `xi`.
pub fn translated_solve(
    xi: [f64; 2],
    zeta: [f64; 2],
    params: &Params,
    cheb: &Chebyshev,
    data: &FrequencyData,
) -> Result<FrequencySolution> {
    FrequencyOperator::translated(xi, zeta, params, cheb)?.solve(data)
}

/// Relative residual `‖A x − b‖∞ / max(‖b‖∞, ‖A‖∞‖x‖∞)` of a computed
/// solution in the operator's own discretization.
pub fn relative_residual(op: &FrequencyOperator, data: &FrequencyData, sol: &FrequencySolution) -> Result<f64> {
    let b = op.rhs(data)?;
    let mut x = sol.to_vec();
    x.truncate(op.dim());
    let n = op.dim();
    let a = op.matrix();
    let mut res: f64 = 0.0;
    let mut anorm: f64 = 0.0;
    for i in 0..n {
        let row = &a[i * n..(i + 1) * n];
        let ax: C64 = row.iter().zip(&x).map(|(u, v)| u * v).sum();
        res = res.max((ax - b[i]).norm());
        anorm = anorm.max(row.iter().map(|z| z.norm()).sum());
    }
    let xn = x.iter().fold(0.0f64, |m, z| m.max(z.norm()));
    let bn = b.iter().fold(0.0f64, |m, z| m.max(z.norm()));
    let scale = bn.max(anorm * xn);
    Ok(if scale == 0.0 { 0.0 } else { res / scale })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn setup(ny: usize) -> (Params, Chebyshev) {
        (Params::default(), Chebyshev::new(ny, 1.0).unwrap())
    }

    #[test]
    fn zero_data_gives_zero() {
        let (p, c) = setup(12);
        let s = solve_frequency([0.3, -0.2], &p, &c, &FrequencyData::zeros(12)).unwrap();
        assert_eq!(s.max_abs(), 0.0);
    }

    #[test]
    fn zero_mode_shear_flow() {
        let (p, c) = setup(12);
        let mut d = FrequencyData::zeros(12);
        d.k[0] = C64::new(1.0, 0.0);
        let s = solve_frequency([0.0, 0.0], &p, &c, &d).unwrap();
        for (j, y) in c.nodes().iter().enumerate() {
            assert!((s.u[0][j] - y).norm() < 1e-12);
            assert!(s.u[1][j].norm() < 1e-12 && s.u[2][j].norm() < 1e-12);
            assert!(s.p[j].norm() < 1e-12);
        }
        assert_eq!(s.chi, [C64::new(0.0, 0.0); 2]);
    }

    #[test]
    fn zero_mode_pressure() {
        let (p, c) = setup(10);
        let mut d = FrequencyData::zeros(10);
        d.k[2] = C64::new(1.0, 0.0);
        let s = solve_frequency([0.0, 0.0], &p, &c, &d).unwrap();
        for j in 0..10 {
            assert!((s.p[j] + 1.0).norm() < 1e-12);
            for comp in 0..3 {
                assert!(s.u[comp][j].norm() < 1e-12);
            }
        }
    }

    #[test]
    fn zero_mode_compatibility_enforced() {
        let (p, c) = setup(10);
        let mut d = FrequencyData::zeros(10);
        d.h = C64::new(1.0, 0.0);
        assert!(matches!(solve_frequency([0.0, 0.0], &p, &c, &d), Err(Error::Compatibility(_))));
        d.g = vec![C64::new(1.0, 0.0); 10];
        let s = solve_frequency([0.0, 0.0], &p, &c, &d).unwrap();
        assert!((s.u[2][9] - 1.0).norm() < 1e-12);
    }

    #[test]
    fn residual_and_no_slip() {
        let (p, c) = setup(16);
        let mut d = FrequencyData::zeros(16);
        for j in 0..16 {
            let y = c.nodes()[j];
            d.f[0][j] = C64::new(y.sin(), 0.3);
            d.f[2][j] = C64::new(1.0 - y, y * y);
            d.g[j] = C64::new(0.1 * y, 0.0);
        }
        d.k = [C64::new(0.2, 0.0), C64::new(0.0, 0.1), C64::new(0.5, -0.2)];
        d.h = C64::new(0.3, 0.1);
        d.omega = C64::new(0.05, 0.0);
        let op = FrequencyOperator::new([0.4, 0.7], &p, &c).unwrap();
        let s = op.solve(&d).unwrap();
        assert!(relative_residual(&op, &d, &s).unwrap() < 1e-13);
        for comp in 0..3 {
            assert!(s.u[comp][0].norm() < 1e-14);
        }
    }

    #[test]
    fn translated_equals_shifted() {
        let (p, c) = setup(16);
        let mut d = FrequencyData::zeros(16);
        for j in 0..16 {
            d.f[1][j] = C64::new(1.0, 0.0);
            d.g[j] = C64::new(0.2, 0.1);
        }
        d.k[2] = C64::new(1.0, 0.5);
        d.h = C64::new(0.1, 0.0);
        let a = translated_solve([1.0, 0.0], [0.25, 0.0], &p, &c, &d).unwrap();
        let b = solve_frequency([1.25, 0.0], &p, &c, &d).unwrap();
        assert!(a.axpy(C64::new(-1.0, 0.0), &b).max_abs() < 1e-10 * b.max_abs());
    }
}
