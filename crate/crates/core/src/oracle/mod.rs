//! Independent reference computations used to verify the spectral solvers:
//! a finite-difference discretization of the per-frequency problem, a
//! dense physical-space assembly of the whole-grid problem, the height
//! formulation, the normal-regularity identity, and a fitted stability
//! constant of the linear solution operator.

pub mod banded;
pub mod dense;
pub mod fd_bvp;
pub mod normal;

use std::f64::consts::PI;
use std::sync::Arc;

use rand::{Rng, SeedableRng};

use crate::error::Result;
use crate::grid::{BulkField, Grid, SurfaceField};
use crate::linear::{LatticeSolver, LinearData, SolutionTriple};
use crate::params::{Params, SobolevIndex};
use crate::spaces::{norm_bessel, norm_hs_r2, norm_tilde};

pub use dense::dense_solve;
pub use fd_bvp::{fd_oracle, fd_solve, relative_difference, FdSolution, Profile, SmoothData};
pub use normal::{normal_identity_defect, normal_identity_terms, solve_eta_form};

/// Random band-limited linear data: a few Fourier modes with wavenumbers
/// `|k_i| ≤ 2`, each carrying a smooth random vertical profile.  The data
/// are defined by closed-form functions, so the same data can be sampled on
/// grids of different resolution.
#[derive(Debug, Clone)]
pub struct RandomLinearData {
    modes: Vec<([i64; 2], [f64; 3], [f64; 14])>,
}

impl RandomLinearData {
    /// Draws `n_modes` random modes from a seeded generator.
    pub fn new(seed: u64, n_modes: usize) -> Self {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        let modes = (0..n_modes)
            .map(|_| {
                let mut k = [0i64; 2];
                while k == [0, 0] {
                    k = [rng.gen_range(-2..=2), rng.gen_range(-2..=2)];
                }
                let phase = std::array::from_fn(|_| rng.gen_range(0.0..2.0 * PI));
                let amp = std::array::from_fn(|_| rng.gen_range(-1.0..1.0));
                (k, phase, amp)
            })
            .collect();
        Self { modes }
    }

    /// Samples the data on `grid`.
    pub fn sample(&self, grid: &Arc<Grid>) -> LinearData {
        let (l, b) = (grid.l(), grid.b());
        let wave = |k: [i64; 2], ph: f64, x1: f64, x2: f64| (2.0 * PI * (k[0] as f64 * x1 + k[1] as f64 * x2) / l + ph).cos();
        let mut data = LinearData::zeros(grid);
        data.f = BulkField::from_fn(grid, 3, |c, x1, x2, y| {
            let t = y / b;
            self.modes
                .iter()
                .map(|(k, ph, a)| {
                    let prof = a[3 * c] + a[3 * c + 1] * t + a[3 * c + 2] * (PI * t).sin();
                    prof * wave(*k, ph[0], x1, x2)
                })
                .sum()
        });
        data.k = SurfaceField::from_fn(grid, 3, |c, x1, x2| {
            self.modes.iter().map(|(k, ph, a)| a[9 + c] * wave(*k, ph[1], x1, x2)).sum()
        });
        data.h = SurfaceField::from_fn(grid, 1, |_, x1, x2| {
            self.modes.iter().map(|(k, ph, a)| a[12] * wave(*k, ph[2], x1, x2)).sum()
        });
        data
    }
}

/// Solution-space norm `‖p‖_{H^{1+s}} + ‖u‖_{H^{2+s}} + ‖∇η‖_{H^{1/2+s}}`
/// with integrability `r` (mixed `L^r`–`L²` for bulk fields).
pub fn solution_norm(sol: &SolutionTriple, s: u32, r: f64) -> Result<f64> {
    Ok(norm_hs_r2(&sol.p, SobolevIndex { s: 1 + s, r })?
        + norm_hs_r2(&sol.u, SobolevIndex { s: 2 + s, r })?
        + norm_tilde(&sol.eta, 1.5 + s as f64, r)?)
}

/// Data-space norm `‖f‖_{H^s} + ‖k‖_{H^{1/2+s}} + ‖h‖_{H^{3/2+s}}`.
pub fn data_norm(data: &LinearData, s: u32, r: f64) -> Result<f64> {
    Ok(norm_hs_r2(&data.f, SobolevIndex { s, r })?
        + norm_bessel(&data.k, 0.5 + s as f64, r)?
        + norm_bessel(&data.h, 1.5 + s as f64, r)?)
}

/// Fitted stability constant `max ‖solution‖/‖data‖` over `samples` random
/// data sets (seeds `seed, seed+1, …`) on `grid`, with `s = 0`.
pub fn stability_constant(grid: &Arc<Grid>, params: &Params, samples: usize, seed: u64, r: f64) -> Result<f64> {
    let solver = LatticeSolver::new(grid, params)?;
    let mut c: f64 = 0.0;
    for i in 0..samples {
        let data = RandomLinearData::new(seed + i as u64, 3).sample(grid);
        let sol = solver.solve(&data)?;
        c = c.max(solution_norm(&sol, 0, r)? / data_norm(&data, 0, r)?);
    }
    Ok(c)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::make_grid;

    #[test]
    fn random_data_are_resolution_independent() {
        let d = RandomLinearData::new(9, 3);
        let a = d.sample(&make_grid(6.0, 8, 8, 1.0).unwrap());
        let b = d.sample(&make_grid(6.0, 16, 8, 1.0).unwrap());
        for (x1, x2) in [(0.3, 1.7), (4.2, 5.9)] {
            let va = a.k.eval_at(1, x1, x2);
            let vb = b.k.eval_at(1, x1, x2);
            assert!((va - vb).norm() < 1e-12);
        }
        assert!(a.h.get(0, 0, 0).norm() < 1e-14);
    }

    #[test]
    fn stability_constant_is_resolution_stable() {
        let params = Params::default();
        let c1 = stability_constant(&make_grid(6.0, 8, 12, 1.0).unwrap(), &params, 4, 1, 1.5).unwrap();
        let c2 = stability_constant(&make_grid(6.0, 16, 20, 1.0).unwrap(), &params, 4, 1, 1.5).unwrap();
        assert!(c1.is_finite() && c1 > 0.0);
        assert!((c1 / c2 - 1.0).abs() < 0.2, "{c1} {c2}");
    }
}
