//! Quasi-Newton (Picard) iteration with the frozen equilibrium derivative.
//!
//! Each step solves the constant-coefficient linear problem with the current
//! residual as data and subtracts the result:
//!
//! ```text
//!   X_{k+1} = X_k − θ·Ψ[R(X_k)],      Ψ = (linearization at 0)^{−1}
//! ```
//!
//! The linear solve returns a physical surface correction `δη`, which is
//! mapped to the surface unknown by `δυη = P_γ^{−1}δη`.  Because every
//! correction comes from the linear solver, the divergence-free condition and
//! the no-slip condition hold exactly for every iterate.

use std::sync::Arc;

use crate::error::{Error, Result};
use crate::geometry::GeometryPack;
use crate::grid::Grid;
use crate::linear::{collocated_max, LatticeSolver, SolutionTriple};
use crate::params::Params;
use crate::pgamma::{apply_pgamma, apply_pgamma_inverse};

use super::energy::energy_balance;
use super::{pin_mean, residual_with, StressForce, WaveState};

/// Iteration controls.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NewtonOptions {
    /// Stop when the residual is at most `tol` times the initial residual
    /// (the residual of the equilibrium, i.e. the size of the data).  This
    /// is never looser than `tol·max(1, data scale)`, and keeps the
    /// accuracy of small-data solutions independent of their amplitude.
    pub tol: f64,
    /// Largest number of residual evaluations.
    pub max_iter: usize,
    /// Step length `θ ∈ (0, 1]`.
    pub damping: f64,
}

impl Default for NewtonOptions {
    fn default() -> Self {
        Self { tol: 1e-10, max_iter: 25, damping: 1.0 }
    }
}

impl NewtonOptions {
    fn validate(&self) -> Result<()> {
        if !(self.tol > 0.0) || self.max_iter == 0 || !(self.damping > 0.0 && self.damping <= 1.0) {
            return Err(Error::InvalidArgument(format!(
                "need tol > 0, max_iter ≥ 1 and damping in (0, 1], got {self:?}"
            )));
        }
        Ok(())
    }
}

/// Convergence history of one solve.
#[derive(Debug, Clone, Default)]
pub struct NewtonReport {
    /// Collocated residual norm at each iterate (the first is the residual
    /// of the equilibrium, i.e. the data scale).
    pub residuals: Vec<f64>,
    /// Ratios of consecutive residual norms.
    pub ratios: Vec<f64>,
    /// Residual of the returned iterate.
    pub final_residual: f64,
    /// Number of residual evaluations.
    pub iterations: usize,
    /// Relative gap of the energy–dissipation balance for the result.
    pub energy_gap: f64,
    /// Smallest Jacobian of the flattening over all iterates.
    pub min_j: f64,
    /// Largest divergence of any iterate's velocity.
    pub max_divergence: f64,
    /// Largest bottom velocity of any iterate.
    pub max_bottom_velocity: f64,
}

/// Solves the nonlinear problem at wave speed `gamma`, building the frozen
/// linear solver for this grid.
pub fn newton_solve(
    grid: &Arc<Grid>,
    gamma: f64,
    params: &Params,
    data: &StressForce,
    opts: &NewtonOptions,
) -> Result<(SolutionTriple, WaveState, NewtonReport)> {
    let p = params.with_gamma(gamma);
    let solver = LatticeSolver::new(grid, &p)?;
    newton_solve_with(&solver, data, opts)
}

/// Solves the nonlinear problem with a prepared frozen linear solver; the
/// wave speed and physical parameters are those of the solver.
pub fn newton_solve_with(
    solver: &LatticeSolver,
    data: &StressForce,
    opts: &NewtonOptions,
) -> Result<(SolutionTriple, WaveState, NewtonReport)> {
    opts.validate()?;
    let params = *solver.params();
    params.validate()?;
    let gamma = params.gamma;
    let grid = solver.grid().clone();
    let mut state = WaveState::zeros(&grid);
    let mut report = NewtonReport { min_j: f64::INFINITY, ..Default::default() };
    let mut stalled = 0;
    let mut threshold = f64::INFINITY;
    loop {
        let eta = apply_pgamma(&state.upsilon, gamma);
        let pack = GeometryPack::new(&eta)?;
        report.min_j = report.min_j.min(pack.min_j());
        report.max_divergence = report.max_divergence.max(state.u.div().max_abs());
        report.max_bottom_velocity = report.max_bottom_velocity.max(state.u.trace_bottom().max_abs());
        let mut res = residual_with(&state, &pack, &params, data)?;
        let r = collocated_max(&res);
        if !r.is_finite() {
            return Err(Error::NonContraction("residual is not finite".into()));
        }
        report.iterations += 1;
        if let Some(&prev) = report.residuals.last() {
            let ratio = if prev > 0.0 { r / prev } else { f64::INFINITY };
            report.ratios.push(ratio);
            stalled = if ratio >= 1.0 { stalled + 1 } else { 0 };
        } else {
            threshold = opts.tol * r;
        }
        report.residuals.push(r);
        report.final_residual = r;
        if r <= threshold {
            break;
        }
        if stalled >= 3 {
            return Err(Error::NonContraction(format!(
                "residual grew for 3 consecutive steps (ratios {:?})",
                &report.ratios[report.ratios.len() - 3..]
            )));
        }
        if report.iterations >= opts.max_iter {
            return Err(Error::NoConvergence(format!(
                "residual {r:e} after {} evaluations (target {threshold:e})",
                report.iterations
            )));
        }
        // the mean of the kinematic residual is a compatibility quantity
        // that vanishes identically for divergence-free iterates; drop the
        // roundoff it carries
        pin_mean(&mut res.h);
        let step = solver.solve(&res)?;
        let theta = opts.damping;
        let mut dups = apply_pgamma_inverse(&step.eta, gamma);
        pin_mean(&mut dups);
        state = WaveState {
            p: state.p.axpy(-theta, &step.p),
            u: state.u.axpy(-theta, &step.u),
            upsilon: state.upsilon.axpy(-theta, &dups),
        };
    }
    let triple = state.physical(gamma);
    report.energy_gap = energy_balance(&triple, &params, data)?.gap;
    Ok((triple, state, report))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::make_grid;

    #[test]
    fn zero_data_gives_zero_in_one_iteration() {
        let g = make_grid(8.0, 16, 12, 1.0).unwrap();
        let (sol, _, rep) =
            newton_solve(&g, 0.3, &Params::default(), &StressForce::zero(), &NewtonOptions::default()).unwrap();
        assert_eq!(rep.iterations, 1);
        assert_eq!(sol.max_abs(), 0.0);
    }

    #[test]
    fn small_forcing_converges_quickly() {
        let g = make_grid(8.0, 16, 12, 1.0).unwrap();
        let data = StressForce::gaussian_force(8.0, 1.0, 1e-3);
        let (sol, _, rep) = newton_solve(&g, 0.5, &Params::default(), &data, &NewtonOptions::default()).unwrap();
        assert!(rep.final_residual <= 1e-10, "{rep:?}");
        assert!(rep.iterations <= 6, "{rep:?}");
        assert!(rep.ratios.iter().all(|&r| r <= 0.5), "{rep:?}");
        assert!(rep.max_divergence <= 1e-12 * sol.u.max_abs().max(1e-300) + 1e-300, "{rep:?}");
        assert!(rep.max_bottom_velocity == 0.0 || rep.max_bottom_velocity <= 1e-13 * sol.u.max_abs(), "{rep:?}");
        assert!(rep.energy_gap <= 1e-6, "{rep:?}");
    }

    #[test]
    fn bad_options_are_rejected() {
        let g = make_grid(8.0, 16, 8, 1.0).unwrap();
        let opts = NewtonOptions { damping: 0.0, ..Default::default() };
        assert!(newton_solve(&g, 0.0, &Params::default(), &StressForce::zero(), &opts).is_err());
    }
}
