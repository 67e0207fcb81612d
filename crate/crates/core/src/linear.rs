//! Global linear solve over the full lattice.
//!
//! The linearized problem is a Fourier multiplier in the horizontal
//! variables, so it is solved mode by mode with the per-frequency
//! collocation operator and the surface height is recovered from `χ`.
//! Factorizations are cached for the quarter lattice `k₁, k₂ ≥ 0`; the
//! remaining modes follow from two exact symmetries of the discrete
//! operator:
//!
//! * conjugation, `A(−ξ) = conj A(ξ)` (all coefficients are real
//!   polynomials in `2πiξ`);
//! * the reflection `x₂ ↦ −x₂`, which maps `A(ξ₁, −ξ₂)` to `A(ξ₁, ξ₂)` after
//!   flipping the sign of the second horizontal component.
//!
//! Modes on the Nyquist row/column are not solved: their solution
//! coefficients are set to zero, consistent with the dealiasing policy that
//! drops Nyquist content from every nonlinear product.

use std::sync::Arc;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::grid::{BulkField, Grid, SurfaceField};
use crate::params::Params;
use crate::symbol::{FrequencyData, FrequencyOperator, FrequencySolution};

const REFLECT: [[f64; 2]; 2] = [[1.0, 0.0], [0.0, -1.0]];

/// Data `(f, k, h)` of the linear problem, with an optional divergence `g`.
#[derive(Debug, Clone)]
pub struct LinearData {
    /// Bulk force (3 components).
    pub f: BulkField,
    /// Surface stress datum (3 components).
    pub k: SurfaceField,
    /// Kinematic datum (scalar).
    pub h: SurfaceField,
    /// Divergence datum (scalar); `None` means zero.
    pub g: Option<BulkField>,
}

impl LinearData {
    /// All-zero data on `grid`.
    pub fn zeros(grid: &Arc<Grid>) -> Self {
        Self {
            f: BulkField::zeros(grid, 3),
            k: SurfaceField::zeros(grid, 3),
            h: SurfaceField::zeros(grid, 1),
            g: None,
        }
    }

    /// Grid of the data.
    pub fn grid(&self) -> &Arc<Grid> {
        self.f.grid()
    }

    /// Checks component counts and that all fields share one grid.
    pub fn validate(&self) -> Result<()> {
        let grid = self.grid();
        let check = |ok: bool, what: &str| -> Result<()> {
            if ok {
                Ok(())
            } else {
                Err(Error::Shape(what.to_string()))
            }
        };
        check(self.f.ncomp() == 3, "force must have 3 components")?;
        check(self.k.ncomp() == 3, "stress datum must have 3 components")?;
        check(self.h.ncomp() == 1, "kinematic datum must be scalar")?;
        check(same_grid(grid, self.k.grid()) && same_grid(grid, self.h.grid()), "data live on different grids")?;
        if let Some(g) = &self.g {
            check(g.ncomp() == 1, "divergence datum must be scalar")?;
            check(same_grid(grid, g.grid()), "divergence datum lives on a different grid")?;
        }
        Ok(())
    }

    /// Largest coefficient magnitude over all components.
    pub fn max_abs(&self) -> f64 {
        let mut m = self.f.max_abs().max(self.k.max_abs()).max(self.h.max_abs());
        if let Some(g) = &self.g {
            m = m.max(g.max_abs());
        }
        m
    }

    /// Per-mode data at lattice point `(i1, i2)`.
    pub fn frequency_data(&self, i1: usize, i2: usize) -> FrequencyData {
        let ny = self.grid().ny();
        let mut d = FrequencyData::zeros(ny);
        for c in 0..3 {
            d.f[c] = self.f.profile(c, i1, i2);
            d.k[c] = self.k.get(c, i1, i2);
        }
        d.h = self.h.get(0, i1, i2);
        if let Some(g) = &self.g {
            d.g = g.profile(0, i1, i2);
        }
        d
    }
}

/// Solution `(p, u, η)` of the linear problem.
#[derive(Debug, Clone)]
pub struct SolutionTriple {
    /// Pressure (scalar bulk field).
    pub p: BulkField,
    /// Velocity (3-component bulk field).
    pub u: BulkField,
    /// Surface height (scalar surface field).
    pub eta: SurfaceField,
}

impl SolutionTriple {
    /// The zero triple on `grid`.
    pub fn zeros(grid: &Arc<Grid>) -> Self {
        Self { p: BulkField::zeros(grid, 1), u: BulkField::zeros(grid, 3), eta: SurfaceField::zeros(grid, 1) }
    }

    /// Grid of the triple.
    pub fn grid(&self) -> &Arc<Grid> {
        self.p.grid()
    }

    /// `self + α·other`.
    pub fn axpy(&self, alpha: f64, other: &Self) -> Self {
        Self { p: self.p.axpy(alpha, &other.p), u: self.u.axpy(alpha, &other.u), eta: self.eta.axpy(alpha, &other.eta) }
    }

    /// `self − other`.
    pub fn sub(&self, other: &Self) -> Self {
        self.axpy(-1.0, other)
    }

    /// `α·self`.
    pub fn scale(&self, alpha: f64) -> Self {
        Self { p: self.p.scale(alpha), u: self.u.scale(alpha), eta: self.eta.scale(alpha) }
    }

    /// Largest coefficient magnitude over `(p, u, η)`.
    pub fn max_abs(&self) -> f64 {
        self.p.max_abs().max(self.u.max_abs()).max(self.eta.max_abs())
    }

    /// Euclidean norm of all coefficients.
    pub fn coeff_norm(&self) -> f64 {
        (self.p.coeff_norm().powi(2) + self.u.coeff_norm().powi(2) + self.eta.coeff_norm().powi(2)).sqrt()
    }

    /// Whether every coefficient is finite.
    pub fn is_finite(&self) -> bool {
        self.p.is_finite() && self.u.is_finite() && self.eta.is_finite()
    }
}

fn same_grid(a: &Grid, b: &Grid) -> bool {
    a.l() == b.l() && a.nx() == b.nx() && a.ny() == b.ny() && a.b() == b.b()
}

/// Factored per-frequency operators for every lattice mode of one grid and
/// one parameter set (including the wave speed).
#[derive(Debug)]
pub struct LatticeSolver {
    grid: Arc<Grid>,
    params: Params,
    half: usize,
    ops: Vec<FrequencyOperator>,
    zero: FrequencyOperator,
}

impl LatticeSolver {
    /// Assembles and factors the quarter-lattice operators in parallel.
    pub fn new(grid: &Arc<Grid>, params: &Params) -> Result<Self> {
        params.validate()?;
        if (grid.b() - params.depth).abs() > 1e-12 * params.depth {
            return Err(Error::InvalidArgument(format!(
                "grid depth {} differs from params.depth {}",
                grid.b(),
                params.depth
            )));
        }
        let half = grid.nx() / 2;
        let cheb = grid.cheb();
        let l = grid.l();
        let ops: Vec<FrequencyOperator> = (0..half * half)
            .into_par_iter()
            .map(|q| {
                let (a1, a2) = (q / half, q % half);
                if a1 == 0 && a2 == 0 {
                    // placeholder, never used: the zero mode has its own operator
                    return FrequencyOperator::new([0.0, 0.0], params, cheb).map(|mut op| {
                        op.discard_matrix();
                        op
                    });
                }
                let mut op = FrequencyOperator::new([a1 as f64 / l, a2 as f64 / l], params, cheb)?;
                op.discard_matrix();
                Ok(op)
            })
            .collect::<Result<_>>()?;
        let zero = FrequencyOperator::new([0.0, 0.0], params, cheb)?;
        Ok(Self { grid: grid.clone(), params: *params, half, ops, zero })
    }

    /// Grid the solver was built for.
    pub fn grid(&self) -> &Arc<Grid> {
        &self.grid
    }

    /// Parameters (including the wave speed) the solver was built for.
    pub fn params(&self) -> &Params {
        &self.params
    }

    /// Largest pivot-ratio condition indicator over the cached operators.
    pub fn max_condition(&self) -> f64 {
        self.ops.iter().map(|o| o.condition_estimate()).fold(self.zero.condition_estimate(), f64::max)
    }

    /// Solves the per-frequency problem at lattice point `(i1, i2)`.
    pub fn solve_mode(&self, i1: usize, i2: usize, data: &FrequencyData) -> Result<FrequencySolution> {
        self.solve_mode_at_scale(i1, i2, data, 0.0)
    }

    /// As [`Self::solve_mode`], with the zero-mode compatibility measured
    /// against at least `scale`.
    pub fn solve_mode_at_scale(&self, i1: usize, i2: usize, data: &FrequencyData, scale: f64) -> Result<FrequencySolution> {
        let g = &self.grid;
        let ny = g.ny();
        if g.is_nyquist_mode(i1, i2) {
            return Ok(FrequencySolution::zeros(ny));
        }
        let (k1, k2) = (g.wavenumber(i1), g.wavenumber(i2));
        if k1 == 0 && k2 == 0 {
            return self.zero.solve_at_scale(data, scale);
        }
        let conj = k1 < 0 || (k1 == 0 && k2 < 0);
        let (c1, c2) = if conj { (-k1, -k2) } else { (k1, k2) };
        let reflect = c2 < 0;
        let op = &self.ops[c1 as usize * self.half + c2.unsigned_abs() as usize];
        let mut d = if conj { data.conj() } else { data.clone() };
        if reflect {
            d = d.transform_horizontal(REFLECT);
        }
        let mut s = op.solve(&d)?;
        if reflect {
            s = s.transform_horizontal(REFLECT);
        }
        if conj {
            s = s.conj();
        }
        Ok(s)
    }

    /// Solves the linear problem for `data` on every lattice mode.
    pub fn solve(&self, data: &LinearData) -> Result<SolutionTriple> {
        data.validate()?;
        if !same_grid(&self.grid, data.grid()) {
            return Err(Error::Shape("data grid differs from the solver grid".into()));
        }
        let n = self.grid.nx();
        // zero-mode compatibility is judged relative to the kinematic and
        // divergence data as a whole
        let scale = data.h.max_abs() + self.grid.b() * data.g.as_ref().map_or(0.0, |g| g.max_abs());
        let modes: Vec<FrequencySolution> = (0..n * n)
            .into_par_iter()
            .map(|q| self.solve_mode_at_scale(q / n, q % n, &data.frequency_data(q / n, q % n), scale))
            .collect::<Result<_>>()?;
        let mut out = SolutionTriple::zeros(&self.grid);
        for (q, s) in modes.iter().enumerate() {
            let (i1, i2) = (q / n, q % n);
            out.p.set_profile(0, i1, i2, &s.p);
            for c in 0..3 {
                out.u.set_profile(c, i1, i2, &s.u[c]);
            }
            out.eta.set(0, i1, i2, s.eta);
        }
        Ok(out)
    }
}

/// Solves the linear problem (builds a [`LatticeSolver`] for the data's
/// grid and `params`).
pub fn solve_linear(data: &LinearData, params: &Params) -> Result<SolutionTriple> {
    LatticeSolver::new(data.grid(), params)?.solve(data)
}

/// Applies the discrete linear operator to `(p, u, η)` with collocation
/// derivatives, returning the data it produces:
///
/// ```text
///   f = 𝔤∇_∥η + ∇p − μ(Δu + ∇(∇·u)) − γ∂₁u      (all nodes)
///   g = ∇·u
///   k = −(pI − μ𝔻u)e₃ − κΔ_∥η e₃                (at y = b)
///   h = u₃ + γ∂₁η                                (at y = b)
/// ```
pub fn apply_linear(sol: &SolutionTriple, params: &Params) -> LinearData {
    let mu = params.viscosity;
    let grav = params.gravity;
    let gamma = params.gamma;
    let u = &sol.u;
    let div = u.div();
    let grad_eta = sol.eta.grad();
    let mut parts = Vec::with_capacity(3);
    for c in 0..3 {
        let uc = u.component(c);
        let lap = uc.dx(0).dx(0).add(&uc.dx(1).dx(1)).add(&uc.dy(2));
        let mut fc = sol.p.partial(c).sub(&lap.add(&div.partial(c)).scale(mu));
        if c < 2 {
            fc = fc.add(&BulkField::from_surface(&grad_eta.component(c)).scale(grav));
        }
        if gamma != 0.0 {
            fc = fc.axpy(-gamma, &uc.dx(0));
        }
        parts.push(fc);
    }
    let f = BulkField::stack(&[&parts[0], &parts[1], &parts[2]]);
    let u3 = u.component(2);
    let du3_top = u3.dy(1).trace_top();
    let u3_top = u3.trace_top();
    let mut k_parts = Vec::with_capacity(3);
    for c in 0..2 {
        let uc = u.component(c);
        k_parts.push(uc.dy(1).trace_top().add(&u3_top.dx(c)).scale(mu));
    }
    let lap_eta = sol.eta.dx(0).dx(0).add(&sol.eta.dx(1).dx(1));
    k_parts.push(du3_top.scale(2.0 * mu).sub(&sol.p.trace_top()).axpy(-params.surface_tension, &lap_eta));
    let k = SurfaceField::stack(&[&k_parts[0], &k_parts[1], &k_parts[2]]);
    let mut h = u3_top;
    if gamma != 0.0 {
        h = h.axpy(gamma, &sol.eta.dx(0));
    }
    LinearData { f, k, h, g: Some(div) }
}

/// Largest magnitude of `data` over the equations the collocation enforces:
/// momentum at interior nodes (plus the vertical balance at the bottom node
/// of the zero mode), the surface stress, and the kinematic datum away from
/// `ξ = 0`.  Nyquist modes are excluded.  The divergence datum is ignored.
///
/// Applied to a nonlinear residual this is the quantity the quasi-Newton
/// iteration drives to zero.
pub fn collocated_max(data: &LinearData) -> f64 {
    let grid = data.grid();
    let n = grid.nx();
    let ny = grid.ny();
    let mut res: f64 = 0.0;
    for i1 in 0..n {
        for i2 in 0..n {
            if grid.is_nyquist_mode(i1, i2) {
                continue;
            }
            let zero_mode = i1 == 0 && i2 == 0;
            for j in 0..ny {
                let interior = j > 0 && j + 1 < ny;
                for c in 0..3 {
                    if interior || (zero_mode && j == 0 && c == 2) {
                        res = res.max(data.f.get(c, i1, i2, j).norm());
                    }
                }
            }
            for c in 0..3 {
                res = res.max(data.k.get(c, i1, i2).norm());
            }
            if !zero_mode {
                res = res.max(data.h.get(0, i1, i2).norm());
            }
        }
    }
    res
}

/// Relative residual of `sol` against `data` in all five equations:
/// momentum at interior nodes, divergence at every node, stress and
/// kinematic conditions at the surface, and no-slip at the bottom.  Nyquist
/// modes are excluded (they are not solved).  The scale is the largest data
/// coefficient (or 1 for zero data).
pub fn linear_residual(sol: &SolutionTriple, data: &LinearData, params: &Params) -> Result<f64> {
    data.validate()?;
    let applied = apply_linear(sol, params);
    let grid = sol.grid();
    let n = grid.nx();
    let ny = grid.ny();
    let zero_g;
    let g = match &data.g {
        Some(g) => g,
        None => {
            zero_g = BulkField::zeros(grid, 1);
            &zero_g
        }
    };
    let div = applied.g.as_ref().expect("apply_linear sets g");
    let defect = LinearData {
        f: applied.f.sub(&data.f),
        k: applied.k.sub(&data.k),
        h: applied.h.sub(&data.h),
        g: None,
    };
    let mut res = collocated_max(&defect);
    for i1 in 0..n {
        for i2 in 0..n {
            if grid.is_nyquist_mode(i1, i2) {
                continue;
            }
            let zero_mode = i1 == 0 && i2 == 0;
            for j in 0..ny {
                // at ξ = 0 the bottom divergence row is traded for the
                // vertical momentum balance there
                if !(zero_mode && j == 0) {
                    res = res.max((div.get(0, i1, i2, j) - g.get(0, i1, i2, j)).norm());
                }
            }
            for c in 0..3 {
                res = res.max(sol.u.get(c, i1, i2, 0).norm());
            }
        }
    }
    let scale = data.max_abs();
    Ok(if scale > 0.0 { res / scale } else { res })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::{make_grid, C64};

    fn smooth_triple(grid: &Arc<Grid>) -> SolutionTriple {
        let l = grid.l();
        let b = grid.b();
        let tau = 2.0 * std::f64::consts::PI / l;
        let p = BulkField::from_fn(grid, 1, |_, x1, x2, y| (tau * x1).cos() * (1.0 + y) + 0.3 * (tau * x2).sin() * y * y);
        let u = BulkField::from_fn(grid, 3, |c, x1, x2, y| {
            let s = y / b;
            match c {
                0 => s * (tau * x2).sin() + s * s * (tau * x1).cos(),
                1 => s * (1.0 - 0.5 * s) * (tau * (x1 + x2)).cos(),
                _ => s * s * (tau * x1).sin(),
            }
        });
        let eta = SurfaceField::from_fn(grid, 1, |_, x1, x2| 0.1 * (tau * x1).cos() + 0.05 * (tau * (x1 - x2)).sin());
        SolutionTriple { p, u, eta }
    }

    #[test]
    fn zero_data_gives_exact_zero() {
        let g = make_grid(4.0, 8, 10, 1.0).unwrap();
        let s = solve_linear(&LinearData::zeros(&g), &Params::default()).unwrap();
        assert_eq!(s.max_abs(), 0.0);
    }

    #[test]
    fn recovers_manufactured_solution() {
        for gamma in [0.0, 0.7] {
            let g = make_grid(4.0, 8, 14, 1.0).unwrap();
            let params = Params::default().with_gamma(gamma);
            let exact = smooth_triple(&g);
            let data = apply_linear(&exact, &params);
            let sol = solve_linear(&data, &params).unwrap();
            let err = sol.sub(&exact).max_abs() / exact.max_abs();
            assert!(err < 1e-10, "gamma={gamma}: err {err:e}");
            assert!(linear_residual(&sol, &data, &params).unwrap() < 1e-11);
        }
    }

    #[test]
    fn symmetry_reduced_modes_match_direct_solves() {
        let g = make_grid(3.0, 8, 10, 1.0).unwrap();
        let params = Params::default().with_gamma(0.4);
        let solver = LatticeSolver::new(&g, &params).unwrap();
        let mut d = FrequencyData::zeros(10);
        for j in 0..10 {
            let y = g.y()[j];
            d.f[0][j] = C64::new(y, 0.2);
            d.f[1][j] = C64::new(0.5 - y, -0.1 * y);
            d.f[2][j] = C64::new(y * y, 1.0);
        }
        d.k = [C64::new(0.1, 0.2), C64::new(-0.3, 0.0), C64::new(0.4, 0.1)];
        d.h = C64::new(0.05, -0.02);
        for (i1, i2) in [(1, 2), (7, 2), (1, 6), (7, 6), (0, 5), (3, 0), (5, 0)] {
            let fast = solver.solve_mode(i1, i2, &d).unwrap();
            let direct = crate::symbol::solve_frequency(g.xi(i1, i2), &params, g.cheb(), &d).unwrap();
            let diff = fast.axpy(C64::new(-1.0, 0.0), &direct).max_abs();
            assert!(diff < 1e-12 * direct.max_abs(), "mode ({i1},{i2}): {diff:e}");
            assert!((fast.eta - direct.eta).norm() < 1e-12 * direct.max_abs());
        }
    }

    #[test]
    fn single_mode_data_stays_on_that_mode() {
        let g = make_grid(4.0, 8, 10, 1.0).unwrap();
        let mut data = LinearData::zeros(&g);
        data.k.set(2, 1, 0, C64::new(1.0, 0.0));
        let s = solve_linear(&data, &Params::default()).unwrap();
        let n = g.nx();
        for i1 in 0..n {
            for i2 in 0..n {
                if (i1, i2) == (1, 0) {
                    continue;
                }
                assert_eq!(s.eta.get(0, i1, i2), C64::new(0.0, 0.0));
                for j in 0..g.ny() {
                    assert_eq!(s.p.get(0, i1, i2, j), C64::new(0.0, 0.0));
                }
            }
        }
        assert!(s.eta.get(0, 1, 0).norm() > 0.0);
    }

    #[test]
    fn real_data_gives_real_solution() {
        let g = make_grid(4.0, 8, 10, 1.0).unwrap();
        let params = Params::default().with_gamma(0.3);
        let exact = smooth_triple(&g);
        let data = apply_linear(&exact, &params);
        let s = LatticeSolver::new(&g, &params).unwrap().solve(&data).unwrap();
        assert!(s.p.reality_defect() < 1e-12);
        assert!(s.u.reality_defect() < 1e-12);
        assert!(s.eta.reality_defect() < 1e-12);
    }

    #[test]
    fn mismatched_depth_is_rejected() {
        let g = make_grid(4.0, 8, 10, 2.0).unwrap();
        assert!(matches!(LatticeSolver::new(&g, &Params::default()), Err(Error::InvalidArgument(_))));
    }
}
