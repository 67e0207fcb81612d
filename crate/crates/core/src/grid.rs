//! Discretization substrate: the horizontal Fourier lattice on the torus
//! `[0, L)²`, Chebyshev collocation in the vertical, spectral fields and
//! Fourier-multiplier application.
//!
//! Spectral coefficients follow the convention
//! `f(x) = Σ_k c(k) e^{2πi k·x/L}`, so that the zero coefficient is the mean
//! and `Σ|c(k)|²` equals the mean square of the samples.  Lattice index
//! `i ∈ 0..Nx` stores wavenumber `k = i` for `i < Nx/2` and `k = i − Nx`
//! otherwise; the frequency variable is `ξ = k/L` and `∂_j ↦ 2πiξ_j`.
//!
//! The Nyquist row/column (`k = −Nx/2`) has no conjugate partner on the
//! lattice.  Multipliers are applied there with the average of the symbol
//! over the aliases `±Nx/2`, which keeps every Hermitian multiplier
//! reality-preserving (odd symbols such as derivatives vanish there).

use std::f64::consts::PI;
use std::sync::Arc;

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

use crate::chebyshev::Chebyshev;
use crate::error::{Error, Result};

/// Shorthand for the complex scalar used throughout.
pub type C64 = Complex64;

/// The imaginary unit.
pub const I: C64 = C64 { re: 0.0, im: 1.0 };

/// Truncated torus × Chebyshev grid with precomputed transforms.
pub struct Grid {
    l: f64,
    nx: usize,
    ny: usize,
    b: f64,
    cheb: Chebyshev,
    npad: usize,
    fwd: Arc<dyn Fft<f64>>,
    inv: Arc<dyn Fft<f64>>,
    fwd_pad: Arc<dyn Fft<f64>>,
    inv_pad: Arc<dyn Fft<f64>>,
}

impl std::fmt::Debug for Grid {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Grid")
            .field("L", &self.l)
            .field("Nx", &self.nx)
            .field("Ny", &self.ny)
            .field("b", &self.b)
            .finish()
    }
}

/// Builds a shared grid; see [`Grid::new`].
pub fn make_grid(l: f64, nx: usize, ny: usize, b: f64) -> Result<Arc<Grid>> {
    Grid::new(l, nx, ny, b).map(Arc::new)
}

impl Grid {
    /// Validates the parameters and precomputes collocation data and FFT plans.
    pub fn new(l: f64, nx: usize, ny: usize, b: f64) -> Result<Self> {
        Self::build(l, nx, ny, b, 8)
    }

    /// Grid with fewer horizontal modes than the public minimum, for the
    /// dense whole-grid oracle (which is only affordable on tiny grids).
    pub(crate) fn tiny(l: f64, nx: usize, ny: usize, b: f64) -> Result<Arc<Self>> {
        Ok(Arc::new(Self::build(l, nx, ny, b, 4)?))
    }

    fn build(l: f64, nx: usize, ny: usize, b: f64, min_nx: usize) -> Result<Self> {
        if !nx.is_multiple_of(2) {
            return Err(Error::InvalidArgument(format!("Nx must be even, got {nx}")));
        }
        if nx < min_nx {
            return Err(Error::InvalidArgument(format!("Nx must be at least {min_nx}, got {nx}")));
        }
        if ny < 8 {
            return Err(Error::InvalidArgument(format!("Ny must be at least 8, got {ny}")));
        }
        if !(l > 0.0 && l.is_finite()) {
            return Err(Error::InvalidArgument(format!("L must be positive, got {l}")));
        }
        if !(b > 0.0 && b.is_finite()) {
            return Err(Error::InvalidArgument(format!("b must be positive, got {b}")));
        }
        let cheb = Chebyshev::new(ny, b)?;
        let mut npad = (3 * nx).div_ceil(2);
        if npad % 2 == 1 {
            npad += 1;
        }
        let mut planner = FftPlanner::new();
        Ok(Self {
            l,
            nx,
            ny,
            b,
            cheb,
            npad,
            fwd: planner.plan_fft_forward(nx),
            inv: planner.plan_fft_inverse(nx),
            fwd_pad: planner.plan_fft_forward(npad),
            inv_pad: planner.plan_fft_inverse(npad),
        })
    }

    /// Horizontal period `L`.
    pub fn l(&self) -> f64 {
        self.l
    }
    /// Modes per horizontal direction.
    pub fn nx(&self) -> usize {
        self.nx
    }
    /// Vertical collocation points.
    pub fn ny(&self) -> usize {
        self.ny
    }
    /// Slab depth.
    pub fn b(&self) -> f64 {
        self.b
    }
    /// Vertical collocation data.
    pub fn cheb(&self) -> &Chebyshev {
        &self.cheb
    }
    /// Size of the 3/2-padded horizontal grid used for products.
    pub fn npad(&self) -> usize {
        self.npad
    }
    /// Vertical node coordinates.
    pub fn y(&self) -> &[f64] {
        self.cheb.nodes()
    }
    /// Physical horizontal coordinate of sample index `i` on an `n`-point grid.
    pub fn x_of(&self, i: usize, n: usize) -> f64 {
        self.l * i as f64 / n as f64
    }
    /// Number of horizontal lattice points `Nx²`.
    pub fn nmodes(&self) -> usize {
        self.nx * self.nx
    }

    /// Wavenumber of lattice index `i`.
    pub fn wavenumber(&self, i: usize) -> i64 {
        wavenumber(i, self.nx)
    }

    /// Lattice index of wavenumber `k` (which must lie in `−Nx/2..Nx/2`).
    pub fn index_of(&self, k: i64) -> usize {
        k.rem_euclid(self.nx as i64) as usize
    }

    /// Frequency `ξ = (k₁, k₂)/L` of lattice point `(i1, i2)`.
    pub fn xi(&self, i1: usize, i2: usize) -> [f64; 2] {
        [self.wavenumber(i1) as f64 / self.l, self.wavenumber(i2) as f64 / self.l]
    }

    /// Whether index `i` is the Nyquist index `Nx/2`.
    pub fn is_nyquist(&self, i: usize) -> bool {
        i == self.nx / 2
    }

    /// Whether lattice point `(i1, i2)` touches the Nyquist row or column.
    pub fn is_nyquist_mode(&self, i1: usize, i2: usize) -> bool {
        self.is_nyquist(i1) || self.is_nyquist(i2)
    }

    /// Index of the mode `−k` for index `i`.
    pub fn neg_index(&self, i: usize) -> usize {
        (self.nx - i) % self.nx
    }

    /// Evaluates a symbol at lattice point `(i1, i2)`, averaging over the
    /// `±Nx/2` aliases on the Nyquist row/column.
    pub fn symbol_at<F>(&self, symbol: &F, i1: usize, i2: usize) -> Result<C64>
    where
        F: Fn([f64; 2]) -> C64 + ?Sized,
    {
        let half = (self.nx / 2) as f64;
        let alias = |i: usize| -> Vec<f64> {
            if self.is_nyquist(i) {
                vec![-half / self.l, half / self.l]
            } else {
                vec![self.wavenumber(i) as f64 / self.l]
            }
        };
        let a1 = alias(i1);
        let a2 = alias(i2);
        let mut acc = C64::new(0.0, 0.0);
        for &x1 in &a1 {
            for &x2 in &a2 {
                let v = symbol([x1, x2]);
                if !(v.re.is_finite() && v.im.is_finite()) {
                    return Err(Error::NonFiniteSymbol {
                        k1: (x1 * self.l).round() as i64,
                        k2: (x2 * self.l).round() as i64,
                        xi1: x1,
                        xi2: x2,
                    });
                }
                acc += v;
            }
        }
        Ok(acc / (a1.len() * a2.len()) as f64)
    }

    /// Tabulates a symbol over the whole lattice (row-major `(i1, i2)`).
    pub fn tabulate<F>(&self, symbol: &F) -> Result<Vec<C64>>
    where
        F: Fn([f64; 2]) -> C64 + ?Sized,
    {
        let n = self.nx;
        let mut out = Vec::with_capacity(n * n);
        for i1 in 0..n {
            for i2 in 0..n {
                out.push(self.symbol_at(symbol, i1, i2)?);
            }
        }
        Ok(out)
    }

    /// In-place 2-D transform of an `n × n` row-major slice.
    fn fft2(&self, data: &mut [C64], padded: bool, forward: bool) {
        let (n, plan) = match (padded, forward) {
            (false, true) => (self.nx, &self.fwd),
            (false, false) => (self.nx, &self.inv),
            (true, true) => (self.npad, &self.fwd_pad),
            (true, false) => (self.npad, &self.inv_pad),
        };
        debug_assert_eq!(data.len(), n * n);
        // rows
        plan.process(data);
        // columns
        let mut col = vec![C64::new(0.0, 0.0); n];
        for j in 0..n {
            for i in 0..n {
                col[i] = data[i * n + j];
            }
            plan.process(&mut col);
            for i in 0..n {
                data[i * n + j] = col[i];
            }
        }
    }

    /// Forward transform of one `Nx × Nx` physical slice into coefficients.
    pub fn forward_slice(&self, values: &mut [C64]) {
        self.fft2(values, false, true);
        let s = 1.0 / (self.nx * self.nx) as f64;
        for v in values.iter_mut() {
            *v *= s;
        }
    }

    /// Inverse transform of one `Nx × Nx` coefficient slice into samples.
    pub fn inverse_slice(&self, coeffs: &mut [C64]) {
        self.fft2(coeffs, false, false);
    }

    /// Samples a coefficient slice on the padded `npad × npad` grid.
    ///
    /// Nyquist coefficients are dropped (they carry no resolved content).
    pub fn to_padded(&self, coeffs: &[C64]) -> Vec<C64> {
        let n = self.nx;
        let m = self.npad;
        let mut out = vec![C64::new(0.0, 0.0); m * m];
        for i1 in 0..n {
            if self.is_nyquist(i1) {
                continue;
            }
            let p1 = wavenumber(i1, n).rem_euclid(m as i64) as usize;
            for i2 in 0..n {
                if self.is_nyquist(i2) {
                    continue;
                }
                let p2 = wavenumber(i2, n).rem_euclid(m as i64) as usize;
                out[p1 * m + p2] = coeffs[i1 * n + i2];
            }
        }
        self.fft2(&mut out, true, false);
        out
    }

    /// Transforms padded samples back and truncates to the resolved band
    /// `|k_i| < Nx/2` (Nyquist coefficients are set to zero).
    pub fn from_padded(&self, values: &mut [C64]) -> Vec<C64> {
        let n = self.nx;
        let m = self.npad;
        self.fft2(values, true, true);
        let s = 1.0 / (m * m) as f64;
        let mut out = vec![C64::new(0.0, 0.0); n * n];
        for i1 in 0..n {
            if self.is_nyquist(i1) {
                continue;
            }
            let p1 = wavenumber(i1, n).rem_euclid(m as i64) as usize;
            for i2 in 0..n {
                if self.is_nyquist(i2) {
                    continue;
                }
                let p2 = wavenumber(i2, n).rem_euclid(m as i64) as usize;
                out[i1 * n + i2] = values[p1 * m + p2] * s;
            }
        }
        out
    }
}

/// Wavenumber of FFT index `i` on an `n`-point grid.
pub fn wavenumber(i: usize, n: usize) -> i64 {
    if i < n / 2 {
        i as i64
    } else {
        i as i64 - n as i64
    }
}

/// Spectral field on the surface lattice: `ncomp` components, layout
/// `(component, i1, i2)`.
#[derive(Debug, Clone)]
pub struct SurfaceField {
    grid: Arc<Grid>,
    ncomp: usize,
    coeffs: Vec<C64>,
}

/// Spectral field in the bulk: `ncomp` components, coefficient for lattice
/// point `(i1, i2)` at vertical node `j`.  Internally stored with layout
/// `(component, j, i1, i2)` so that horizontal transforms act on contiguous
/// slices.
#[derive(Debug, Clone)]
pub struct BulkField {
    grid: Arc<Grid>,
    ncomp: usize,
    coeffs: Vec<C64>,
}

fn zero() -> C64 {
    C64::new(0.0, 0.0)
}

fn reality_defect_slice(grid: &Grid, c: &[C64]) -> (f64, f64) {
    let n = grid.nx();
    let mut defect: f64 = 0.0;
    let mut scale: f64 = 0.0;
    for i1 in 0..n {
        for i2 in 0..n {
            let a = c[i1 * n + i2];
            let b = c[grid.neg_index(i1) * n + grid.neg_index(i2)];
            defect = defect.max((a - b.conj()).norm());
            scale = scale.max(a.norm());
        }
    }
    (defect, scale)
}

macro_rules! common_field_impl {
    ($t:ident) => {
        impl $t {
            /// Grid the field lives on.
            pub fn grid(&self) -> &Arc<Grid> {
                &self.grid
            }
            /// Number of components.
            pub fn ncomp(&self) -> usize {
                self.ncomp
            }
            /// Raw coefficients (internal layout).
            pub fn coeffs(&self) -> &[C64] {
                &self.coeffs
            }
            /// Mutable raw coefficients (internal layout).
            pub fn coeffs_mut(&mut self) -> &mut [C64] {
                &mut self.coeffs
            }
            /// `self + other`.
            pub fn add(&self, other: &Self) -> Self {
                self.check_same(other);
                let mut out = self.clone();
                for (a, b) in out.coeffs.iter_mut().zip(&other.coeffs) {
                    *a += b;
                }
                out
            }
            /// `self − other`.
            pub fn sub(&self, other: &Self) -> Self {
                self.check_same(other);
                let mut out = self.clone();
                for (a, b) in out.coeffs.iter_mut().zip(&other.coeffs) {
                    *a -= b;
                }
                out
            }
            /// `α · self`.
            pub fn scale(&self, alpha: f64) -> Self {
                let mut out = self.clone();
                for a in out.coeffs.iter_mut() {
                    *a *= alpha;
                }
                out
            }
            /// `self + α · other`.
            pub fn axpy(&self, alpha: f64, other: &Self) -> Self {
                self.check_same(other);
                let mut out = self.clone();
                for (a, b) in out.coeffs.iter_mut().zip(&other.coeffs) {
                    *a += b * alpha;
                }
                out
            }
            /// Largest coefficient magnitude.
            pub fn max_abs(&self) -> f64 {
                self.coeffs.iter().fold(0.0, |m, c| m.max(c.norm()))
            }
            /// Euclidean norm of the coefficient vector.
            pub fn coeff_norm(&self) -> f64 {
                self.coeffs.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt()
            }
            /// Whether every coefficient is finite.
            pub fn is_finite(&self) -> bool {
                self.coeffs.iter().all(|c| c.re.is_finite() && c.im.is_finite())
            }
            /// Relative Hermitian-symmetry defect `max|c(k) − conj c(−k)| / max|c|`
            /// (0 for the zero field).
            pub fn reality_defect(&self) -> f64 {
                let nn = self.grid.nmodes();
                let mut defect: f64 = 0.0;
                let mut scale: f64 = 0.0;
                for s in self.coeffs.chunks(nn) {
                    let (d, m) = reality_defect_slice(&self.grid, s);
                    defect = defect.max(d);
                    scale = scale.max(m);
                }
                if scale == 0.0 {
                    0.0
                } else {
                    defect / scale
                }
            }
            /// Projects onto real-valued fields: `(c(k) + conj c(−k))/2`.
            pub fn realify(&self) -> Self {
                let n = self.grid.nx();
                let nn = n * n;
                let mut out = self.clone();
                for (dst, src) in out.coeffs.chunks_mut(nn).zip(self.coeffs.chunks(nn)) {
                    for i1 in 0..n {
                        for i2 in 0..n {
                            let b = src[self.grid.neg_index(i1) * n + self.grid.neg_index(i2)];
                            dst[i1 * n + i2] = (src[i1 * n + i2] + b.conj()) * 0.5;
                        }
                    }
                }
                out
            }
            /// Zeroes every coefficient on the Nyquist row/column.
            pub fn drop_nyquist(&self) -> Self {
                let n = self.grid.nx();
                let nn = n * n;
                let mut out = self.clone();
                for s in out.coeffs.chunks_mut(nn) {
                    for i1 in 0..n {
                        for i2 in 0..n {
                            if self.grid.is_nyquist_mode(i1, i2) {
                                s[i1 * n + i2] = zero();
                            }
                        }
                    }
                }
                out
            }
            /// Applies a scalar Fourier multiplier `m(D)` to every component.
            pub fn apply_multiplier<F>(&self, symbol: &F) -> Result<Self>
            where
                F: Fn([f64; 2]) -> C64 + ?Sized,
            {
                let table = self.grid.tabulate(symbol)?;
                Ok(self.apply_table(&table))
            }
            /// Multiplies every slice pointwise by a tabulated symbol.
            pub fn apply_table(&self, table: &[C64]) -> Self {
                let nn = self.grid.nmodes();
                let mut out = self.clone();
                for s in out.coeffs.chunks_mut(nn) {
                    for (c, m) in s.iter_mut().zip(table) {
                        *c *= m;
                    }
                }
                out
            }
            /// Horizontal derivative `∂_dir` (dir ∈ {0, 1}).
            pub fn dx(&self, dir: usize) -> Self {
                self.apply_multiplier(&|xi: [f64; 2]| I * (2.0 * PI * xi[dir]))
                    .expect("finite derivative symbol")
            }
            fn check_same(&self, other: &Self) {
                assert!(
                    Arc::ptr_eq(&self.grid, &other.grid) || same_grid(&self.grid, &other.grid),
                    "fields live on different grids"
                );
                assert_eq!(self.ncomp, other.ncomp, "component count mismatch");
            }
        }
    };
}

fn same_grid(a: &Grid, b: &Grid) -> bool {
    a.l == b.l && a.nx == b.nx && a.ny == b.ny && a.b == b.b
}

common_field_impl!(SurfaceField);
common_field_impl!(BulkField);

impl SurfaceField {
    /// The zero field with `ncomp` components.
    pub fn zeros(grid: &Arc<Grid>, ncomp: usize) -> Self {
        Self { grid: grid.clone(), ncomp, coeffs: vec![zero(); ncomp * grid.nmodes()] }
    }

    /// Wraps raw coefficients (layout `(component, i1, i2)`).
    pub fn from_coeffs(grid: &Arc<Grid>, ncomp: usize, coeffs: Vec<C64>) -> Result<Self> {
        if coeffs.len() != ncomp * grid.nmodes() {
            return Err(Error::Shape(format!(
                "surface field expects {} coefficients, got {}",
                ncomp * grid.nmodes(),
                coeffs.len()
            )));
        }
        Ok(Self { grid: grid.clone(), ncomp, coeffs })
    }

    /// Forward transform of physical samples (layout `(component, i1, i2)`
    /// with `x = (i1, i2)·L/Nx`).
    pub fn from_physical(grid: &Arc<Grid>, ncomp: usize, values: &[C64]) -> Result<Self> {
        let nn = grid.nmodes();
        if values.len() != ncomp * nn {
            return Err(Error::Shape(format!(
                "surface samples: expected {} values, got {}",
                ncomp * nn,
                values.len()
            )));
        }
        let mut coeffs = values.to_vec();
        for s in coeffs.chunks_mut(nn) {
            grid.forward_slice(s);
        }
        Ok(Self { grid: grid.clone(), ncomp, coeffs })
    }

    /// Forward transform of real physical samples.
    pub fn from_real(grid: &Arc<Grid>, ncomp: usize, values: &[f64]) -> Result<Self> {
        let v: Vec<C64> = values.iter().map(|&x| C64::new(x, 0.0)).collect();
        Self::from_physical(grid, ncomp, &v)
    }

    /// Samples the field from a closure `(component, x1, x2) → value`.
    pub fn from_fn<F: Fn(usize, f64, f64) -> f64>(grid: &Arc<Grid>, ncomp: usize, f: F) -> Self {
        let n = grid.nx();
        let mut v = Vec::with_capacity(ncomp * n * n);
        for c in 0..ncomp {
            for i1 in 0..n {
                for i2 in 0..n {
                    v.push(f(c, grid.x_of(i1, n), grid.x_of(i2, n)));
                }
            }
        }
        Self::from_real(grid, ncomp, &v).expect("consistent shape")
    }

    /// Inverse transform to physical samples (layout `(component, i1, i2)`).
    pub fn to_physical(&self) -> Vec<C64> {
        let nn = self.grid.nmodes();
        let mut v = self.coeffs.clone();
        for s in v.chunks_mut(nn) {
            self.grid.inverse_slice(s);
        }
        v
    }

    /// Real parts of the physical samples.
    pub fn to_real(&self) -> Vec<f64> {
        self.to_physical().into_iter().map(|c| c.re).collect()
    }

    /// Coefficient of component `c` at lattice point `(i1, i2)`.
    pub fn get(&self, c: usize, i1: usize, i2: usize) -> C64 {
        let n = self.grid.nx();
        self.coeffs[(c * n + i1) * n + i2]
    }

    /// Sets the coefficient of component `c` at lattice point `(i1, i2)`.
    pub fn set(&mut self, c: usize, i1: usize, i2: usize, v: C64) {
        let n = self.grid.nx();
        self.coeffs[(c * n + i1) * n + i2] = v;
    }

    /// Coefficient slice of component `c`.
    pub fn comp(&self, c: usize) -> &[C64] {
        let nn = self.grid.nmodes();
        &self.coeffs[c * nn..(c + 1) * nn]
    }

    /// Extracts component `c` as a scalar field.
    pub fn component(&self, c: usize) -> SurfaceField {
        Self { grid: self.grid.clone(), ncomp: 1, coeffs: self.comp(c).to_vec() }
    }

    /// Stacks scalar fields into a vector field.
    pub fn stack(parts: &[&SurfaceField]) -> SurfaceField {
        let grid = parts[0].grid.clone();
        let mut coeffs = Vec::new();
        for p in parts {
            coeffs.extend_from_slice(&p.coeffs);
        }
        Self { grid, ncomp: coeffs.len() / parts[0].grid.nmodes(), coeffs }
    }

    /// Horizontal gradient of a scalar field (2 components).
    pub fn grad(&self) -> SurfaceField {
        assert_eq!(self.ncomp, 1);
        SurfaceField::stack(&[&self.dx(0), &self.dx(1)])
    }

    /// Horizontal divergence of a 2-vector field.
    pub fn div(&self) -> SurfaceField {
        assert_eq!(self.ncomp, 2);
        self.component(0).dx(0).add(&self.component(1).dx(1))
    }

    /// Samples of component `c` on the 3/2-padded grid.
    pub fn padded(&self, c: usize) -> Vec<f64> {
        self.grid.to_padded(self.comp(c)).into_iter().map(|z| z.re).collect()
    }

    /// Builds a scalar field from padded samples (dealiased truncation).
    pub fn from_padded(grid: &Arc<Grid>, values: &[f64]) -> SurfaceField {
        let mut v: Vec<C64> = values.iter().map(|&x| C64::new(x, 0.0)).collect();
        let coeffs = grid.from_padded(&mut v);
        SurfaceField { grid: grid.clone(), ncomp: 1, coeffs }
    }
}

impl BulkField {
    /// The zero field with `ncomp` components.
    pub fn zeros(grid: &Arc<Grid>, ncomp: usize) -> Self {
        Self {
            grid: grid.clone(),
            ncomp,
            coeffs: vec![zero(); ncomp * grid.ny() * grid.nmodes()],
        }
    }

    /// Forward transform of physical samples given in layout
    /// `(component, i1, i2, j)`.
    pub fn from_physical(grid: &Arc<Grid>, ncomp: usize, values: &[C64]) -> Result<Self> {
        let n = grid.nx();
        let ny = grid.ny();
        let nn = n * n;
        if values.len() != ncomp * nn * ny {
            return Err(Error::Shape(format!(
                "bulk samples: expected {} values, got {}",
                ncomp * nn * ny,
                values.len()
            )));
        }
        let mut coeffs = vec![zero(); values.len()];
        for c in 0..ncomp {
            for j in 0..ny {
                let s = &mut coeffs[(c * ny + j) * nn..(c * ny + j + 1) * nn];
                for q in 0..nn {
                    s[q] = values[(c * nn + q) * ny + j];
                }
                grid.forward_slice(s);
            }
        }
        Ok(Self { grid: grid.clone(), ncomp, coeffs })
    }

    /// Forward transform of real samples in layout `(component, i1, i2, j)`.
    pub fn from_real(grid: &Arc<Grid>, ncomp: usize, values: &[f64]) -> Result<Self> {
        let v: Vec<C64> = values.iter().map(|&x| C64::new(x, 0.0)).collect();
        Self::from_physical(grid, ncomp, &v)
    }

    /// Samples the field from a closure `(component, x1, x2, y) → value`.
    pub fn from_fn<F: Fn(usize, f64, f64, f64) -> f64>(
        grid: &Arc<Grid>,
        ncomp: usize,
        f: F,
    ) -> Self {
        let n = grid.nx();
        let ny = grid.ny();
        let nn = n * n;
        let mut coeffs = vec![zero(); ncomp * ny * nn];
        for c in 0..ncomp {
            for j in 0..ny {
                let y = grid.y()[j];
                let s = &mut coeffs[(c * ny + j) * nn..(c * ny + j + 1) * nn];
                for i1 in 0..n {
                    for i2 in 0..n {
                        s[i1 * n + i2] = C64::new(f(c, grid.x_of(i1, n), grid.x_of(i2, n), y), 0.0);
                    }
                }
                grid.forward_slice(s);
            }
        }
        Self { grid: grid.clone(), ncomp, coeffs }
    }

    /// Inverse transform to physical samples in layout `(component, i1, i2, j)`.
    pub fn to_physical(&self) -> Vec<C64> {
        let n = self.grid.nx();
        let ny = self.grid.ny();
        let nn = n * n;
        let mut out = vec![zero(); self.coeffs.len()];
        let mut buf = vec![zero(); nn];
        for c in 0..self.ncomp {
            for j in 0..ny {
                buf.copy_from_slice(self.slice(c, j));
                self.grid.inverse_slice(&mut buf);
                for q in 0..nn {
                    out[(c * nn + q) * ny + j] = buf[q];
                }
            }
        }
        out
    }

    /// Real parts of the physical samples, layout `(component, i1, i2, j)`.
    pub fn to_real(&self) -> Vec<f64> {
        self.to_physical().into_iter().map(|c| c.re).collect()
    }

    /// Coefficient of component `c`, lattice point `(i1, i2)`, node `j`.
    pub fn get(&self, c: usize, i1: usize, i2: usize, j: usize) -> C64 {
        let n = self.grid.nx();
        self.coeffs[((c * self.grid.ny() + j) * n + i1) * n + i2]
    }

    /// Sets the coefficient of component `c`, lattice point `(i1, i2)`, node `j`.
    pub fn set(&mut self, c: usize, i1: usize, i2: usize, j: usize, v: C64) {
        let n = self.grid.nx();
        let ny = self.grid.ny();
        self.coeffs[((c * ny + j) * n + i1) * n + i2] = v;
    }

    /// Coefficient slice (all lattice points) of component `c` at node `j`.
    pub fn slice(&self, c: usize, j: usize) -> &[C64] {
        let nn = self.grid.nmodes();
        let k = c * self.grid.ny() + j;
        &self.coeffs[k * nn..(k + 1) * nn]
    }

    /// Mutable coefficient slice of component `c` at node `j`.
    pub fn slice_mut(&mut self, c: usize, j: usize) -> &mut [C64] {
        let nn = self.grid.nmodes();
        let k = c * self.grid.ny() + j;
        &mut self.coeffs[k * nn..(k + 1) * nn]
    }

    /// Vertical profile of component `c` at lattice point `(i1, i2)`.
    pub fn profile(&self, c: usize, i1: usize, i2: usize) -> Vec<C64> {
        (0..self.grid.ny()).map(|j| self.get(c, i1, i2, j)).collect()
    }

    /// Writes the vertical profile of component `c` at `(i1, i2)`.
    pub fn set_profile(&mut self, c: usize, i1: usize, i2: usize, values: &[C64]) {
        for (j, v) in values.iter().enumerate() {
            self.set(c, i1, i2, j, *v);
        }
    }

    /// Extracts component `c`.
    pub fn component(&self, c: usize) -> BulkField {
        let len = self.grid.ny() * self.grid.nmodes();
        Self {
            grid: self.grid.clone(),
            ncomp: 1,
            coeffs: self.coeffs[c * len..(c + 1) * len].to_vec(),
        }
    }

    /// Stacks scalar (or vector) fields into one field.
    pub fn stack(parts: &[&BulkField]) -> BulkField {
        let grid = parts[0].grid.clone();
        let mut coeffs = Vec::new();
        let mut ncomp = 0;
        for p in parts {
            coeffs.extend_from_slice(&p.coeffs);
            ncomp += p.ncomp;
        }
        Self { grid, ncomp, coeffs }
    }

    /// Vertical derivative of order 1 or 2 (Chebyshev collocation).
    pub fn dy(&self, order: usize) -> BulkField {
        let n = self.grid.nx();
        let ny = self.grid.ny();
        let nn = n * n;
        let cheb = self.grid.cheb();
        let mut out = BulkField::zeros(&self.grid, self.ncomp);
        for c in 0..self.ncomp {
            for j in 0..ny {
                let dst = &mut out.coeffs[(c * ny + j) * nn..(c * ny + j + 1) * nn];
                for l in 0..ny {
                    let w = cheb.diff_entry(order, j, l);
                    if w == 0.0 {
                        continue;
                    }
                    let src = &self.coeffs[(c * ny + l) * nn..(c * ny + l + 1) * nn];
                    for q in 0..nn {
                        dst[q] += src[q] * w;
                    }
                }
            }
        }
        out
    }

    /// Partial derivative in direction `dir ∈ {0, 1, 2}` (2 = vertical).
    pub fn partial(&self, dir: usize) -> BulkField {
        if dir == 2 {
            self.dy(1)
        } else {
            self.dx(dir)
        }
    }

    /// Gradient of a scalar field (3 components).
    pub fn grad(&self) -> BulkField {
        assert_eq!(self.ncomp, 1);
        BulkField::stack(&[&self.dx(0), &self.dx(1), &self.dy(1)])
    }

    /// Divergence of a 3-vector field.
    pub fn div(&self) -> BulkField {
        assert_eq!(self.ncomp, 3);
        self.component(0)
            .dx(0)
            .add(&self.component(1).dx(1))
            .add(&self.component(2).dy(1))
    }

    /// Trace at the free surface `y = b`.
    pub fn trace_top(&self) -> SurfaceField {
        self.trace_at(self.grid.ny() - 1)
    }

    /// Trace at the bottom `y = 0`.
    pub fn trace_bottom(&self) -> SurfaceField {
        self.trace_at(0)
    }

    fn trace_at(&self, j: usize) -> SurfaceField {
        let mut coeffs = Vec::with_capacity(self.ncomp * self.grid.nmodes());
        for c in 0..self.ncomp {
            coeffs.extend_from_slice(self.slice(c, j));
        }
        SurfaceField { grid: self.grid.clone(), ncomp: self.ncomp, coeffs }
    }

    /// Extends a surface field constantly in `y`.
    pub fn from_surface(s: &SurfaceField) -> BulkField {
        let grid = s.grid().clone();
        let ny = grid.ny();
        let mut out = BulkField::zeros(&grid, s.ncomp());
        for c in 0..s.ncomp() {
            for j in 0..ny {
                out.slice_mut(c, j).copy_from_slice(s.comp(c));
            }
        }
        out
    }

    /// Multiplies node `j` of every component by `w(j)` (a function of `y` only).
    pub fn scale_by_profile(&self, w: &[f64]) -> BulkField {
        let mut out = self.clone();
        let ny = self.grid.ny();
        for c in 0..self.ncomp {
            for (j, &wj) in w.iter().enumerate().take(ny) {
                for v in out.slice_mut(c, j) {
                    *v *= wj;
                }
            }
        }
        out
    }

    /// Samples of component `c` on the padded grid, layout `(j, p1, p2)`.
    pub fn padded(&self, c: usize) -> Vec<f64> {
        let ny = self.grid.ny();
        let m = self.grid.npad();
        let mut out = Vec::with_capacity(ny * m * m);
        for j in 0..ny {
            out.extend(self.grid.to_padded(self.slice(c, j)).into_iter().map(|z| z.re));
        }
        out
    }

    /// Builds a scalar field from padded samples in layout `(j, p1, p2)`.
    pub fn from_padded(grid: &Arc<Grid>, values: &[f64]) -> BulkField {
        let ny = grid.ny();
        let m = grid.npad();
        let mut out = BulkField::zeros(grid, 1);
        let mut buf = vec![zero(); m * m];
        for j in 0..ny {
            for (b, v) in buf.iter_mut().zip(&values[j * m * m..(j + 1) * m * m]) {
                *b = C64::new(*v, 0.0);
            }
            let c = grid.from_padded(&mut buf);
            out.slice_mut(0, j).copy_from_slice(&c);
        }
        out
    }
}

impl Grid {
    /// Horizontal phase factors `e^{2πikx/L}` at coordinate `x` for every
    /// lattice index; the Nyquist index uses `cos(πNx·x/L)`, the average of
    /// its two aliases, which agrees with the samples at grid points.
    pub fn phases(&self, x: f64) -> Vec<C64> {
        (0..self.nx)
            .map(|i| {
                if self.is_nyquist(i) {
                    C64::new((PI * self.nx as f64 * x / self.l).cos(), 0.0)
                } else {
                    (I * (2.0 * PI * self.wavenumber(i) as f64 * x / self.l)).exp()
                }
            })
            .collect()
    }
}

fn eval_slice(n: usize, coeffs: &[C64], p1: &[C64], p2: &[C64]) -> C64 {
    let mut acc = zero();
    for i1 in 0..n {
        let row = &coeffs[i1 * n..(i1 + 1) * n];
        let mut r = zero();
        for i2 in 0..n {
            r += row[i2] * p2[i2];
        }
        acc += r * p1[i1];
    }
    acc
}

impl SurfaceField {
    /// Evaluates component `c` of the trigonometric interpolant at `(x1, x2)`.
    pub fn eval_at(&self, c: usize, x1: f64, x2: f64) -> C64 {
        let g = &self.grid;
        eval_slice(g.nx(), self.comp(c), &g.phases(x1), &g.phases(x2))
    }
}

impl BulkField {
    /// Vertical nodal profile of component `c` of the horizontal interpolant
    /// at `(x1, x2)`.
    pub fn eval_profile(&self, c: usize, x1: f64, x2: f64) -> Vec<C64> {
        let g = &self.grid;
        let p1 = g.phases(x1);
        let p2 = g.phases(x2);
        (0..g.ny()).map(|j| eval_slice(g.nx(), self.slice(c, j), &p1, &p2)).collect()
    }

    /// Evaluates component `c` of the Fourier–Chebyshev interpolant at
    /// `(x1, x2, y)`.
    pub fn eval_at(&self, c: usize, x1: f64, x2: f64, y: f64) -> C64 {
        self.grid.cheb().interpolate(&self.eval_profile(c, x1, x2), y)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grid_validation() {
        assert!(make_grid(1.0, 7, 8, 1.0).unwrap_err().to_string().contains("Nx must be even"));
        assert!(make_grid(0.0, 8, 8, 1.0).is_err());
        assert!(make_grid(1.0, 8, 8, -1.0).is_err());
        let g = make_grid(1.0, 8, 8, 1.0).unwrap();
        assert_eq!(g.y()[0], 0.0);
        assert!((g.y()[7] - 1.0).abs() < 1e-15);
        let g = make_grid(2.0 * PI, 16, 9, 1.0).unwrap();
        assert!((g.y()[4] - 0.5).abs() < 1e-15);
    }

    #[test]
    fn plane_wave_maps_to_single_coefficient() {
        let g = make_grid(1.0, 8, 8, 1.0).unwrap();
        let n = 8;
        let mut v = Vec::new();
        for i1 in 0..n {
            for _i2 in 0..n {
                let x = g.x_of(i1, n);
                v.push((I * 2.0 * PI * x).exp());
            }
        }
        let f = SurfaceField::from_physical(&g, 1, &v).unwrap();
        for i1 in 0..n {
            for i2 in 0..n {
                let expect = if (i1, i2) == (1, 0) { 1.0 } else { 0.0 };
                assert!((f.get(0, i1, i2) - expect).norm() < 1e-14);
            }
        }
    }

    #[test]
    fn padded_round_trip_preserves_band() {
        let g = make_grid(3.0, 8, 8, 1.0).unwrap();
        let f = SurfaceField::from_fn(&g, 1, |_, x1, x2| (2.0 * PI * x1 / 3.0).sin() + (2.0 * PI * 2.0 * x2 / 3.0).cos());
        let p = f.padded(0);
        let back = SurfaceField::from_padded(&g, &p);
        assert!(back.sub(&f).max_abs() < 1e-14);
    }

    #[test]
    fn nyquist_derivative_is_zero() {
        let g = make_grid(1.0, 8, 8, 1.0).unwrap();
        let f = SurfaceField::from_fn(&g, 1, |_, x1, _| (PI * 8.0 * x1).cos());
        assert!(f.max_abs() > 0.5);
        assert!(f.dx(0).max_abs() < 1e-12);
    }

    #[test]
    fn point_evaluation_matches_samples_and_formula() {
        let g = make_grid(2.0, 8, 8, 1.0).unwrap();
        let f = BulkField::from_fn(&g, 1, |_, x1, x2, y| (PI * x1).sin() * (PI * x2).cos() * y * y + (4.0 * PI * x1).cos());
        // includes a Nyquist cosine in x1 (k = 4 on Nx = 8)
        let v = f.to_real();
        let x1 = g.x_of(3, 8);
        let x2 = g.x_of(5, 8);
        let p = f.eval_profile(0, x1, x2);
        for j in 0..8 {
            assert!((p[j].re - v[((3 * 8) + 5) * 8 + j]).abs() < 1e-13);
        }
        let (a, b, y) = (0.37, 1.21, 0.43);
        let expect = (PI * a).sin() * (PI * b).cos() * y * y + (4.0 * PI * a).cos();
        assert!((f.eval_at(0, a, b, y).re - expect).abs() < 1e-12);
    }
}
