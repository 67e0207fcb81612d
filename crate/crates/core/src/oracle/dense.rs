//! Whole-grid dense oracle: the linear problem assembled in physical space
//! with the surface height `η` as unknown and solved by one dense LU.
//!
//! Horizontal derivatives are Fourier differentiation matrices built from
//! their closed form (the Nyquist multiplier is zero), vertical derivatives
//! are the collocation matrices.  Three adjustments make the physical
//! system square and uniquely solvable, mirroring the lattice solver's
//! policies:
//!
//! * Nyquist content is removed from the data and the operator is replaced
//!   by the identity on the Nyquist subspace (`A′ = A − ΠA + Π`, which is
//!   valid because `A` commutes with the Nyquist projector `Π`);
//! * the horizontal mean of the kinematic rows is exchanged for `mean η = 0`;
//! * the horizontal mean of the bottom divergence rows is exchanged for the
//!   mean vertical momentum balance at the bottom.

use std::f64::consts::PI;

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::grid::{wavenumber, BulkField, Grid, SurfaceField, C64};
use crate::linear::{LinearData, SolutionTriple};
use crate::params::Params;

/// Fourier differentiation matrix on `n` equispaced points of a period `l`,
/// with the Nyquist mode differentiated to zero.
pub fn fourier_d1(n: usize, l: f64) -> Vec<f64> {
    let mut d = vec![0.0; n * n];
    for a in 0..n {
        for b in 0..n {
            let mut s = C64::new(0.0, 0.0);
            for i in 0..n {
                let k = wavenumber(i, n);
                if 2 * k.unsigned_abs() as usize == n {
                    continue;
                }
                let w = 2.0 * PI * k as f64 / l;
                let phase = 2.0 * PI * (k as f64) * (a as f64 - b as f64) / n as f64;
                s += C64::new(0.0, w) * C64::from_polar(1.0, phase);
            }
            d[a * n + b] = s.re / n as f64;
        }
    }
    d
}

/// Projector onto the Nyquist modes of an `n × n` horizontal grid (samples
/// in `(i1, i2)` row-major order).
pub fn nyquist_projector(n: usize) -> Vec<f64> {
    let nn = n * n;
    let half = (n / 2) as i64;
    let mut pr = vec![0.0; nn * nn];
    for q in 0..nn {
        for qq in 0..nn {
            let (a1, a2) = ((q / n) as f64, (q % n) as f64);
            let (b1, b2) = ((qq / n) as f64, (qq % n) as f64);
            let mut s = 0.0;
            for i1 in 0..n {
                for i2 in 0..n {
                    let (k1, k2) = (wavenumber(i1, n), wavenumber(i2, n));
                    if k1.abs() == half || k2.abs() == half {
                        let phase = 2.0 * PI * (k1 as f64 * (a1 - b1) + k2 as f64 * (a2 - b2)) / n as f64;
                        s += phase.cos();
                    }
                }
            }
            pr[q * nn + qq] = s / nn as f64;
        }
    }
    pr
}

struct Index {
    nn: usize,
    ny: usize,
}

impl Index {
    fn p(&self, q: usize, j: usize) -> usize {
        q * self.ny + j
    }
    fn u(&self, c: usize, q: usize, j: usize) -> usize {
        (1 + c) * self.nn * self.ny + q * self.ny + j
    }
    fn eta(&self, q: usize) -> usize {
        4 * self.nn * self.ny + q
    }
    fn dim(&self) -> usize {
        4 * self.nn * self.ny + self.nn
    }
}

/// Solves the linear problem on `grid` by dense assembly in physical space
/// (meant for tiny grids: the system has `Nx²(4Ny + 1)` unknowns).
pub fn dense_solve(data: &LinearData, params: &Params) -> Result<SolutionTriple> {
    data.validate()?;
    params.validate()?;
    let grid = data.grid().clone();
    let n = grid.nx();
    let ny = grid.ny();
    let nn = n * n;
    let ix = Index { nn, ny };
    let dim = ix.dim();
    if dim > 4000 {
        return Err(Error::InvalidArgument(format!("dense oracle limited to small grids, got {dim} unknowns")));
    }
    let mu = params.viscosity;
    let gamma = params.gamma;
    let cheb = grid.cheb();
    let dy = |j: usize, l: usize| cheb.diff_entry(1, j, l);
    let dyy = |j: usize, l: usize| cheb.diff_entry(2, j, l);
    let d = fourier_d1(n, grid.l());
    // horizontal operators on the nn samples
    let mut h = [vec![0.0; nn * nn], vec![0.0; nn * nn]];
    for a1 in 0..n {
        for a2 in 0..n {
            for b in 0..n {
                h[0][(a1 * n + a2) * nn + b * n + a2] = d[a1 * n + b];
                h[1][(a1 * n + a2) * nn + a1 * n + b] = d[a2 * n + b];
            }
        }
    }
    let hh = |c: usize, e: usize| -> Vec<f64> {
        let mut out = vec![0.0; nn * nn];
        for q in 0..nn {
            for r in 0..nn {
                out[q * nn + r] = (0..nn).map(|t| h[c][q * nn + t] * h[e][t * nn + r]).sum();
            }
        }
        out
    };
    let hc: [[Vec<f64>; 2]; 2] = [[hh(0, 0), hh(0, 1)], [hh(1, 0), hh(1, 1)]];
    let lap: Vec<f64> = hc[0][0].iter().zip(&hc[1][1]).map(|(a, b)| a + b).collect();

    let mut a = DMatrix::<f64>::zeros(dim, dim);
    let mut rhs = vec![C64::new(0.0, 0.0); dim];
    let f = data.f.to_physical();
    let g = data.g.as_ref().map(BulkField::to_physical);
    let k = data.k.to_physical();
    let hk = data.h.to_physical();
    let fv = |c: usize, q: usize, j: usize| f[(c * nn + q) * ny + j];
    let top = ny - 1;

    for q in 0..nn {
        // divergence at every node
        for j in 0..ny {
            let r = ix.p(q, j);
            for t in 0..nn {
                a[(r, ix.u(0, t, j))] += h[0][q * nn + t];
                a[(r, ix.u(1, t, j))] += h[1][q * nn + t];
            }
            for l in 0..ny {
                a[(r, ix.u(2, q, l))] += dy(j, l);
            }
            rhs[r] = g.as_ref().map_or(C64::new(0.0, 0.0), |g| g[q * ny + j]);
        }
        for c in 0..3 {
            a[(ix.u(c, q, 0), ix.u(c, q, 0))] = 1.0;
        }
        for j in 1..top {
            for c in 0..2 {
                let r = ix.u(c, q, j);
                for t in 0..nn {
                    let hq = h[c][q * nn + t];
                    a[(r, ix.eta(t))] += params.gravity * hq;
                    a[(r, ix.p(t, j))] += hq;
                    a[(r, ix.u(c, t, j))] += -mu * lap[q * nn + t] - gamma * h[0][q * nn + t];
                    // −μ∂_c(∂₁u₁ + ∂₂u₂)
                    a[(r, ix.u(0, t, j))] += -mu * hc[c][0][q * nn + t];
                    a[(r, ix.u(1, t, j))] += -mu * hc[c][1][q * nn + t];
                    for l in 0..ny {
                        a[(r, ix.u(2, t, l))] += -mu * hq * dy(j, l);
                    }
                }
                for l in 0..ny {
                    a[(r, ix.u(c, q, l))] += -mu * dyy(j, l);
                }
                rhs[r] = fv(c, q, j);
            }
            let r = ix.u(2, q, j);
            for l in 0..ny {
                a[(r, ix.p(q, l))] += dy(j, l);
                a[(r, ix.u(2, q, l))] += -2.0 * mu * dyy(j, l);
            }
            for t in 0..nn {
                a[(r, ix.u(2, t, j))] += -mu * lap[q * nn + t] - gamma * h[0][q * nn + t];
                for l in 0..ny {
                    a[(r, ix.u(0, t, l))] += -mu * h[0][q * nn + t] * dy(j, l);
                    a[(r, ix.u(1, t, l))] += -mu * h[1][q * nn + t] * dy(j, l);
                }
            }
            rhs[r] = fv(2, q, j);
        }
        // dynamic condition
        for c in 0..2 {
            let r = ix.u(c, q, top);
            for l in 0..ny {
                a[(r, ix.u(c, q, l))] += mu * dy(top, l);
            }
            for t in 0..nn {
                a[(r, ix.u(2, t, top))] += mu * h[c][q * nn + t];
            }
            rhs[r] = k[c * nn + q];
        }
        let r = ix.u(2, q, top);
        a[(r, ix.p(q, top))] += -1.0;
        for l in 0..ny {
            a[(r, ix.u(2, q, l))] += 2.0 * mu * dy(top, l);
        }
        for t in 0..nn {
            a[(r, ix.eta(t))] += -params.surface_tension * lap[q * nn + t];
        }
        rhs[r] = k[2 * nn + q];
        // kinematic condition
        let r = ix.eta(q);
        a[(r, ix.u(2, q, top))] += 1.0;
        for t in 0..nn {
            a[(r, ix.eta(t))] += gamma * h[0][q * nn + t];
        }
        rhs[r] = hk[q];
    }

    // Nyquist subspace: A′ = A − ΠA + Π, data projected off it
    let pr = nyquist_projector(n);
    let blocks = dim / nn;
    let index_of = |blk: usize, q: usize| -> usize {
        if blk == 4 * ny {
            ix.eta(q)
        } else {
            (blk / ny) * nn * ny + q * ny + blk % ny
        }
    };
    let mut pa = DMatrix::<f64>::zeros(dim, dim);
    let mut prhs = vec![C64::new(0.0, 0.0); dim];
    for blk in 0..blocks {
        for q in 0..nn {
            let row = index_of(blk, q);
            for t in 0..nn {
                let w = pr[q * nn + t];
                if w == 0.0 {
                    continue;
                }
                let src = index_of(blk, t);
                for col in 0..dim {
                    pa[(row, col)] += w * a[(src, col)];
                }
                prhs[row] += rhs[src] * w;
                pa[(row, index_of(blk, t))] -= w;
            }
        }
    }
    a -= pa;
    for i in 0..dim {
        rhs[i] -= prhs[i];
    }

    // mean rows: replace the kinematic and bottom-divergence means
    let replace_mean = |a: &mut DMatrix<f64>, rhs: &mut Vec<C64>, rows: Vec<usize>, new_row: Vec<f64>, new_rhs: C64| {
        let m = rows.len() as f64;
        let mean_row: Vec<f64> = (0..dim).map(|col| rows.iter().map(|&r| a[(r, col)]).sum::<f64>() / m).collect();
        let mean_rhs: C64 = rows.iter().map(|&r| rhs[r]).sum::<C64>() / m;
        for &r in &rows[1..] {
            for col in 0..dim {
                a[(r, col)] -= mean_row[col];
            }
            rhs[r] -= mean_rhs;
        }
        for col in 0..dim {
            a[(rows[0], col)] = new_row[col];
        }
        rhs[rows[0]] = new_rhs;
    };
    let mut mean_eta = vec![0.0; dim];
    for q in 0..nn {
        mean_eta[ix.eta(q)] = 1.0 / nn as f64;
    }
    replace_mean(&mut a, &mut rhs, (0..nn).map(|q| ix.eta(q)).collect(), mean_eta, C64::new(0.0, 0.0));
    let mut bottom = vec![0.0; dim];
    let mut f3_mean = C64::new(0.0, 0.0);
    for q in 0..nn {
        for l in 0..ny {
            bottom[ix.p(q, l)] += dy(0, l) / nn as f64;
            bottom[ix.u(2, q, l)] += -2.0 * mu * dyy(0, l) / nn as f64;
        }
        f3_mean += fv(2, q, 0) / nn as f64;
    }
    // Nyquist content of f₃ does not contribute to the mean
    replace_mean(&mut a, &mut rhs, (0..nn).map(|q| ix.p(q, 0)).collect(), bottom, f3_mean);

    let ac = a.map(|v| C64::new(v, 0.0));
    let x = ac
        .lu()
        .solve(&DVector::from_vec(rhs))
        .ok_or(Error::Singular { xi1: f64::NAN, xi2: f64::NAN, cond: f64::INFINITY })?;
    let mut pv = vec![C64::new(0.0, 0.0); nn * ny];
    let mut uv = vec![C64::new(0.0, 0.0); 3 * nn * ny];
    let mut ev = vec![C64::new(0.0, 0.0); nn];
    for q in 0..nn {
        for j in 0..ny {
            pv[q * ny + j] = x[ix.p(q, j)];
            for c in 0..3 {
                uv[(c * nn + q) * ny + j] = x[ix.u(c, q, j)];
            }
        }
        ev[q] = x[ix.eta(q)];
    }
    Ok(SolutionTriple {
        p: BulkField::from_physical(&grid, 1, &pv)?,
        u: BulkField::from_physical(&grid, 3, &uv)?,
        eta: SurfaceField::from_physical(&grid, 1, &ev)?,
    })
}

/// The `Nx = 4`, `Ny = 8` grid used by the dense oracle (below the public
/// minimum horizontal resolution).
pub fn tiny_grid(l: f64, b: f64) -> Result<std::sync::Arc<Grid>> {
    Grid::tiny(l, 4, 8, b)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linear::LatticeSolver;

    #[test]
    fn differentiation_matrix_is_exact_on_resolved_modes() {
        let (n, l) = (8, 3.0);
        let d = fourier_d1(n, l);
        let w = 2.0 * PI * 3.0 / l;
        for a in 0..n {
            let x = l * a as f64 / n as f64;
            let v: f64 = (0..n).map(|b| d[a * n + b] * (w * l * b as f64 / n as f64).sin()).sum();
            assert!((v - w * (w * x).cos()).abs() < 1e-12);
        }
    }

    #[test]
    fn projector_is_idempotent() {
        let p = nyquist_projector(4);
        let nn = 16;
        for a in 0..nn {
            for b in 0..nn {
                let s: f64 = (0..nn).map(|t| p[a * nn + t] * p[t * nn + b]).sum();
                assert!((s - p[a * nn + b]).abs() < 1e-14);
            }
        }
    }

    #[test]
    fn matches_lattice_solver() {
        let g = tiny_grid(3.0, 1.0).unwrap();
        let params = Params { gamma: 0.7, ..Params::default() };
        let w = 2.0 * PI / 3.0;
        let mut data = LinearData::zeros(&g);
        data.f = BulkField::from_fn(&g, 3, |c, x1, x2, y| (c as f64 + 1.0) * (w * x1 + y).sin() + y * y * (w * x2).cos());
        data.k = SurfaceField::from_fn(&g, 3, |c, x1, x2| (c as f64 - 0.5) * (w * (x1 - x2)).cos() + 0.2);
        data.h = SurfaceField::from_fn(&g, 1, |_, x1, x2| (w * x1).sin() * (w * x2).cos());
        let lattice = LatticeSolver::new(&g, &params).unwrap().solve(&data).unwrap();
        let dense = dense_solve(&data, &params).unwrap();
        let d = lattice.sub(&dense).max_abs() / lattice.max_abs();
        assert!(d < 1e-10, "{d}");
    }
}
