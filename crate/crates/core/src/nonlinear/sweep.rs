//! Wave-speed sweep toward the stationary limit `γ → 0`.
//!
//! The problem is solved in the reparameterized unknowns `(p, u, υη)` for
//! every requested `γ`; differences to the `γ = 0` solution are measured in
//! the `s = 0` member of the solution-space scale,
//!
//! ```text
//!   ‖p‖_{H¹_{r,2}} + ‖u‖_{H²_{r,2}} + ‖∇υη‖_{H^{3/2,r}},
//! ```
//!
//! and the anisotropic quantity `‖γℛ₁η‖_{L^r}` of the physical surface
//! `η = P_γυη` is reported alongside.

use std::sync::Arc;

use crate::error::Result;
use crate::grid::Grid;
use crate::params::{Params, SobolevIndex};
use crate::pgamma::apply_gamma_r1_pgamma;
use crate::spaces::{norm_hs_r2, norm_lr_surface, norm_tilde};

use super::newton::{newton_solve, NewtonOptions};
use super::{StressForce, WaveState};

/// One row of the sweep table.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    /// Wave speed.
    pub gamma: f64,
    /// `‖X(γ) − X(0)‖` in the solution-space surrogate (`NaN` on failure).
    pub difference: f64,
    /// `‖γℛ₁η(γ)‖_{L^r}` (`NaN` on failure).
    pub anisotropic: f64,
    /// Newton residual evaluations (0 on failure).
    pub iterations: usize,
    /// Failure message, if the solve at this speed failed.
    pub error: Option<String>,
}

/// Solution-space surrogate norm of a reparameterized state.
pub fn state_norm(state: &WaveState, r: f64) -> Result<f64> {
    let p = norm_hs_r2(&state.p, SobolevIndex { s: 1, r })?;
    let u = norm_hs_r2(&state.u, SobolevIndex { s: 2, r })?;
    let e = norm_tilde(&state.upsilon, 2.5, r)?;
    Ok(p + u + e)
}

fn difference(a: &WaveState, b: &WaveState) -> WaveState {
    WaveState { p: a.p.sub(&b.p), u: a.u.sub(&b.u), upsilon: a.upsilon.sub(&b.upsilon) }
}

/// Runs the sweep.  The table is sorted by decreasing `|γ|`; the `γ = 0`
/// reference is always computed (and listed if requested).  Failures at
/// individual speeds are recorded in their rows; a failure of the reference
/// solve is returned as an error.
pub fn gamma_sweep(
    grid: &Arc<Grid>,
    gammas: &[f64],
    params: &Params,
    data: &StressForce,
    opts: &NewtonOptions,
) -> Result<Vec<SweepRow>> {
    let r = params.index.r;
    let (_, reference, ref_report) = newton_solve(grid, 0.0, params, data, opts)?;
    let mut sorted: Vec<f64> = gammas.to_vec();
    sorted.sort_by(|a, b| b.abs().total_cmp(&a.abs()));
    sorted.dedup();
    let mut rows = Vec::with_capacity(sorted.len());
    for &gamma in &sorted {
        if gamma == 0.0 {
            rows.push(SweepRow {
                gamma,
                difference: 0.0,
                anisotropic: 0.0,
                iterations: ref_report.iterations,
                error: None,
            });
            continue;
        }
        let row = match newton_solve(grid, gamma, params, data, opts) {
            Ok((_, state, report)) => {
                let measured = state_norm(&difference(&state, &reference), r).and_then(|d| {
                    let an = norm_lr_surface(&apply_gamma_r1_pgamma(&state.upsilon, gamma)?, r)?;
                    Ok((d, an))
                });
                match measured {
                    Ok((d, an)) => {
                        SweepRow { gamma, difference: d, anisotropic: an, iterations: report.iterations, error: None }
                    }
                    Err(e) => failed(gamma, e.to_string()),
                }
            }
            Err(e) => failed(gamma, e.to_string()),
        };
        rows.push(row);
    }
    Ok(rows)
}

fn failed(gamma: f64, msg: String) -> SweepRow {
    SweepRow { gamma, difference: f64::NAN, anisotropic: f64::NAN, iterations: 0, error: Some(msg) }
}
