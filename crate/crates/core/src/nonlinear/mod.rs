//! The flattened nonlinear problem: residual maps, the quasi-Newton solver
//! with a frozen constant-coefficient Jacobian, and solution diagnostics
//! (energy balance, wave-speed sweep, transfer back to the moving domain).

pub mod energy;
pub mod eulerian;
pub mod maps;
pub mod newton;
pub mod sweep;

use std::sync::Arc;

use crate::dsl::FieldExpr;
use crate::error::Result;
use crate::geometry::GeometryPack;
use crate::grid::{BulkField, Grid, SurfaceField, C64};
use crate::linear::{LinearData, SolutionTriple};
use crate::params::Params;
use crate::pgamma::{apply_gamma_d1_pgamma, apply_pgamma};

pub use energy::{energy_balance, EnergyBalance};
pub use eulerian::{eulerian_transfer, EulerianReport};
pub use maps::{upsilon1, upsilon2, xi1, xi2};
pub use newton::{newton_solve, newton_solve_with, NewtonOptions, NewtonReport};
pub use sweep::{gamma_sweep, SweepRow};

/// Applied stress `𝒯` (3×3, row-major) and force `ℱ` (3-vector), as field
/// expressions in Eulerian coordinates `(x1, x2, x3)`.
#[derive(Debug, Clone, PartialEq)]
pub struct StressForce {
    /// Stress tensor `𝒯`.
    pub t: [[FieldExpr; 3]; 3],
    /// Force `ℱ`.
    pub f: [FieldExpr; 3],
}

fn zero_expr() -> FieldExpr {
    FieldExpr::constant(0.0)
}

impl StressForce {
    /// No applied stress or force.
    pub fn zero() -> Self {
        Self { t: std::array::from_fn(|_| std::array::from_fn(|_| zero_expr())), f: std::array::from_fn(|_| zero_expr()) }
    }

    /// Whether every expression is the literal zero.
    pub fn is_zero(&self) -> bool {
        self.f.iter().chain(self.t.iter().flatten()).all(FieldExpr::is_zero)
    }

    /// Every expression multiplied by `c`.
    pub fn scaled(&self, c: f64) -> Self {
        Self {
            t: std::array::from_fn(|i| std::array::from_fn(|j| self.t[i][j].scaled(c))),
            f: std::array::from_fn(|i| self.f[i].scaled(c)),
        }
    }

    /// The default test forcing: a Gaussian bump of width `σ = L/16`
    /// centred at `(L/2, L/2, b/2)`, pushing along `e₁ + e₃` with peak
    /// magnitude `amplitude` per component.
    pub fn gaussian_force(l: f64, b: f64, amplitude: f64) -> Self {
        let sigma = l / 16.0;
        let src = format!(
            "{amplitude:?}*exp(-((x1-{c:?})^2+(x2-{c:?})^2+(x3-{d:?})^2)/{w:?})",
            c = l / 2.0,
            d = b / 2.0,
            w = 2.0 * sigma * sigma
        );
        let g = FieldExpr::parse(&src).expect("generated expression parses");
        let mut out = Self::zero();
        out.f[0] = g.clone();
        out.f[2] = g;
        out
    }
}

/// State of the reparameterized problem: pressure, velocity and the surface
/// unknown `υη`; the physical surface is `η = P_γυη`.
#[derive(Debug, Clone)]
pub struct WaveState {
    /// Pressure.
    pub p: BulkField,
    /// Velocity (3 components).
    pub u: BulkField,
    /// Surface unknown `υη` (zero mean).
    pub upsilon: SurfaceField,
}

impl WaveState {
    /// The equilibrium `(0, 0, 0)`.
    pub fn zeros(grid: &Arc<Grid>) -> Self {
        Self { p: BulkField::zeros(grid, 1), u: BulkField::zeros(grid, 3), upsilon: SurfaceField::zeros(grid, 1) }
    }

    /// The grid.
    pub fn grid(&self) -> &Arc<Grid> {
        self.p.grid()
    }

    /// Physical triple `(p, u, P_γυη)`.
    pub fn physical(&self, gamma: f64) -> SolutionTriple {
        SolutionTriple { p: self.p.clone(), u: self.u.clone(), eta: apply_pgamma(&self.upsilon, gamma) }
    }

    /// State scaled by `alpha`.
    pub fn scale(&self, alpha: f64) -> Self {
        Self { p: self.p.scale(alpha), u: self.u.scale(alpha), upsilon: self.upsilon.scale(alpha) }
    }
}

/// Residual of the flattened nonlinear system at `state`:
///
/// ```text
///   ( Ξ₁(p, u, η) + Υ₁(ℱ, η),  Ξ₂(p, u, η) + Υ₂(𝒯, η),  Tr_Σ u₃ + γ∂₁P_γυη )
/// ```
///
/// with `η = P_γυη` and `γ = params.gamma`, returned as [`LinearData`]
/// (`f`, `k`, `h`; `g` unset) so that it can be fed to the linear solver.
pub fn residual(state: &WaveState, params: &Params, data: &StressForce) -> Result<LinearData> {
    let gamma = params.gamma;
    let eta = apply_pgamma(&state.upsilon, gamma);
    let pack = GeometryPack::new(&eta)?;
    residual_with(state, &pack, params, data)
}

pub(crate) fn residual_with(
    state: &WaveState,
    pack: &GeometryPack,
    params: &Params,
    data: &StressForce,
) -> Result<LinearData> {
    let gamma = params.gamma;
    let mu = params.viscosity;
    let (f, k) = rayon::join(
        || -> Result<BulkField> {
            let f = maps::xi1_with(&state.p, &state.u, pack, gamma, params.gravity, mu);
            Ok(f.add(&maps::upsilon1_with(&data.f, pack)?))
        },
        || -> Result<SurfaceField> {
            let k = maps::xi2_with(&state.p, &state.u, pack, mu, params.surface_tension);
            Ok(k.add(&maps::upsilon2_with(&data.t, pack)?))
        },
    );
    let mut h = state.u.component(2).trace_top();
    if gamma != 0.0 {
        h = h.add(&apply_gamma_d1_pgamma(&state.upsilon, gamma));
    }
    Ok(LinearData { f: f?, k: k?, h, g: None })
}

/// Zeroes the zero-frequency coefficient of a scalar surface field.
pub(crate) fn pin_mean(f: &mut SurfaceField) {
    f.set(0, 0, 0, C64::new(0.0, 0.0));
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::make_grid;

    #[test]
    fn equilibrium_residuals() {
        let g = make_grid(4.0, 8, 8, 1.0).unwrap();
        let params = Params { gamma: 0.4, ..Params::default() };
        let z = WaveState::zeros(&g);
        let r = residual(&z, &params, &StressForce::zero()).unwrap();
        assert_eq!(r.f.max_abs() + r.k.max_abs() + r.h.max_abs(), 0.0);
        let mut data = StressForce::zero();
        data.f[1] = FieldExpr::parse("x3*(1-x3)").unwrap();
        data.t[2][2] = FieldExpr::constant(3.0);
        data.t[0][2] = FieldExpr::parse("sin(1.5707963267948966*x2)").unwrap();
        let r = residual(&z, &params, &data).unwrap();
        let f_direct = BulkField::from_fn(&g, 3, |c, x1, x2, y| -data.f[c].eval([x1, x2, y]).unwrap());
        let k_direct = SurfaceField::from_fn(&g, 3, |c, x1, x2| -data.t[c][2].eval([x1, x2, 1.0]).unwrap());
        assert!(r.f.sub(&f_direct).max_abs() < 1e-14);
        assert!(r.k.sub(&k_direct).max_abs() < 1e-14);
        assert_eq!(r.h.max_abs(), 0.0);
    }

    #[test]
    fn static_kinematic_residual_is_the_vertical_trace() {
        let g = make_grid(4.0, 8, 8, 1.0).unwrap();
        let params = Params::default();
        let mut s = WaveState::zeros(&g);
        s.u = BulkField::from_fn(&g, 3, |c, x1, _, y| if c == 2 { y * y * (std::f64::consts::FRAC_PI_2 * x1).cos() } else { 0.0 });
        s.upsilon = SurfaceField::from_fn(&g, 1, |_, x1, _| 0.01 * (std::f64::consts::FRAC_PI_2 * x1).sin());
        let r = residual(&s, &params, &StressForce::zero()).unwrap();
        assert_eq!(r.h.sub(&s.u.component(2).trace_top()).max_abs(), 0.0);
    }

    #[test]
    fn scaling_data_scales_expressions() {
        let d = StressForce::gaussian_force(16.0, 1.0, 1.0);
        let s = d.scaled(1e-3);
        let pt = [8.2, 7.9, 0.4];
        assert!((s.f[0].eval(pt).unwrap() - 1e-3 * d.f[0].eval(pt).unwrap()).abs() < 1e-18);
        assert!(s.f[1].is_zero() && s.t[1][1].is_zero());
        assert!(StressForce::zero().is_zero());
    }
}
