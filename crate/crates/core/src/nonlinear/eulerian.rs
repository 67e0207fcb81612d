//! Transfer of a flattened solution back to the moving domain `Ω[η]`,
//!
//! ```text
//!   v = (M^{−1}u)∘𝔉^{−1},      q = p∘𝔉^{−1},
//! ```
//!
//! and an independent check of the Eulerian equations on a probe cloud:
//! the momentum residual
//!
//! ```text
//!   (v − γe₁)·∇v + ∇(q + 𝔤η) − μ(Δv + ∇(∇·v)) − ℱ
//! ```
//!
//! is evaluated with fourth-order central differences of the transferred
//! fields (every stencil point is mapped back through `𝔉^{−1}` and the
//! spectral interpolant), and the kinematic condition `γ∂₁η + v·𝒩 = 0` is
//! checked at surface probes.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::geometry::{invert_column, matvec3, GeometryPack, NodeGeometry};
use crate::grid::{BulkField, SurfaceField};
use crate::linear::SolutionTriple;
use crate::params::Params;

use super::StressForce;

/// Placement of the probe cloud.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ProbeCloud {
    /// Probes per horizontal direction (uniform, cell-centred).
    pub horizontal: usize,
    /// Probes per vertical line, at uniformly spaced fractions of the local
    /// depth `b + η`.
    pub vertical: usize,
    /// Finite-difference spacing as a fraction of `b`.
    pub spacing: f64,
}

impl Default for ProbeCloud {
    fn default() -> Self {
        Self { horizontal: 5, vertical: 3, spacing: 0.02 }
    }
}

/// Transferred values at one Eulerian point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EulerianSample {
    /// Eulerian position `(x1, x2, x3)`.
    pub point: [f64; 3],
    /// Flattened vertical coordinate `y` with `y + ℰη(x, y) = x3`.
    pub y: f64,
    /// Pressure `q`.
    pub q: f64,
    /// Velocity `v`.
    pub v: [f64; 3],
}

/// Result of [`eulerian_transfer`].
#[derive(Debug, Clone, PartialEq)]
pub struct EulerianReport {
    /// Transferred fields at the interior probes.
    pub samples: Vec<EulerianSample>,
    /// Largest momentum residual over the interior probes.
    pub max_momentum_residual: f64,
    /// Scale of the balancing terms (largest of `|ℱ|`, `|∇(q + 𝔤η)|`,
    /// `μ|Δv|` over the probes).
    pub momentum_scale: f64,
    /// `max_momentum_residual / momentum_scale`.
    pub relative_momentum_residual: f64,
    /// Largest finite-difference divergence `|∇·v|`.
    pub max_divergence: f64,
    /// Largest kinematic defect `|γ∂₁η + v·𝒩|` at surface probes.
    pub max_kinematic_defect: f64,
}

/// Spectral data along one vertical line of the flattened domain.
struct Column<'a> {
    pack: &'a GeometryPack,
    /// Nodal profiles of `ℰη`, `∂₁ℰη`, `∂₂ℰη`, `∂₃ℰη`, `p`, `u₁`, `u₂`, `u₃`.
    profiles: [Vec<f64>; 8],
}

impl<'a> Column<'a> {
    fn new(pack: &'a GeometryPack, sol: &SolutionTriple, x1: f64, x2: f64) -> Self {
        let re = |f: &BulkField, c: usize| -> Vec<f64> { f.eval_profile(c, x1, x2).into_iter().map(|z| z.re).collect() };
        Self {
            pack,
            profiles: [
                re(&pack.ext, 0),
                re(&pack.grad_ext, 0),
                re(&pack.grad_ext, 1),
                re(&pack.grad_ext, 2),
                re(&sol.p, 0),
                re(&sol.u, 0),
                re(&sol.u, 1),
                re(&sol.u, 2),
            ],
        }
    }

    fn at(&self, k: usize, y: f64) -> f64 {
        self.pack.grid().cheb().interpolate(&self.profiles[k], y)
    }

    /// Flattened height of Eulerian height `z`.
    fn invert(&self, z: f64) -> std::result::Result<f64, f64> {
        invert_column(self.pack.grid().cheb(), &self.profiles[0], &self.profiles[3], z)
    }

    /// `(q, v)` at flattened height `y`.
    fn fields(&self, y: f64) -> (f64, [f64; 3]) {
        let g = NodeGeometry { e: self.at(0, y), grad: [self.at(1, y), self.at(2, y), self.at(3, y)] };
        let u = [self.at(5, y), self.at(6, y), self.at(7, y)];
        (self.at(4, y), matvec3(&g.m_inv(), &u))
    }
}

/// Evaluates `(q, v)` at Eulerian points sharing one vertical line.
fn transfer_line(
    pack: &GeometryPack,
    sol: &SolutionTriple,
    x1: f64,
    x2: f64,
    heights: &[f64],
) -> Result<Vec<(f64, f64, [f64; 3])>> {
    let col = Column::new(pack, sol, x1, x2);
    heights
        .iter()
        .map(|&z| {
            let y = col
                .invert(z)
                .map_err(|top| Error::OutsideDomain(format!("({x1}, {x2}, {z}) is not in [0, {top}]")))?;
            let (q, v) = col.fields(y);
            Ok((y, q, v))
        })
        .collect()
}

/// Transfers `(q, v)` to the given Eulerian points.
pub fn transfer_points(sol: &SolutionTriple, points: &[[f64; 3]]) -> Result<Vec<EulerianSample>> {
    let pack = GeometryPack::new(&sol.eta)?;
    points
        .par_iter()
        .map(|&pt| {
            let r = transfer_line(&pack, sol, pt[0], pt[1], &[pt[2]])?;
            let (y, q, v) = r[0];
            Ok(EulerianSample { point: pt, y, q, v })
        })
        .collect()
}

const D1: [(i32, f64); 4] = [(-2, 1.0 / 12.0), (-1, -8.0 / 12.0), (1, 8.0 / 12.0), (2, -1.0 / 12.0)];
const D2: [(i32, f64); 5] =
    [(-2, -1.0 / 12.0), (-1, 16.0 / 12.0), (0, -30.0 / 12.0), (1, 16.0 / 12.0), (2, -1.0 / 12.0)];

/// Fourth-order finite-difference derivatives of `(q, v)` at one probe.
struct ProbeDerivatives {
    q: f64,
    v: [f64; 3],
    grad_q: [f64; 3],
    /// `∂_k v_i` at `[i][k]`.
    grad_v: [[f64; 3]; 3],
    lap_v: [f64; 3],
    /// `∂_i(∇·v)`.
    grad_div: [f64; 3],
}

fn probe_derivatives(pack: &GeometryPack, sol: &SolutionTriple, x: [f64; 3], h: f64) -> Result<ProbeDerivatives> {
    // group stencil offsets by vertical line: offsets (a, b) in units of h
    // along x1, x2, with the vertical offsets needed on that line
    let mut lines: Vec<([i32; 2], Vec<i32>)> = Vec::new();
    let mut need = |o: [i32; 3]| {
        let key = [o[0], o[1]];
        match lines.iter_mut().find(|(k, _)| *k == key) {
            Some((_, zs)) => {
                if !zs.contains(&o[2]) {
                    zs.push(o[2]);
                }
            }
            None => lines.push((key, vec![o[2]])),
        }
    };
    need([0, 0, 0]);
    for d in 0..3 {
        for s in [-2, -1, 1, 2] {
            let mut o = [0; 3];
            o[d] = s;
            need(o);
        }
    }
    for (a, b) in [(0, 1), (0, 2), (1, 2)] {
        for s in [-2, -1, 1, 2] {
            for t in [-2, -1, 1, 2] {
                let mut o = [0; 3];
                o[a] = s;
                o[b] = t;
                need(o);
            }
        }
    }
    let mut values: Vec<([i32; 3], f64, [f64; 3])> = Vec::new();
    for (key, zs) in &lines {
        let heights: Vec<f64> = zs.iter().map(|&t| x[2] + t as f64 * h).collect();
        let vals = transfer_line(pack, sol, x[0] + key[0] as f64 * h, x[1] + key[1] as f64 * h, &heights)?;
        for (&t, (_, q, v)) in zs.iter().zip(vals) {
            values.push(([key[0], key[1], t], q, v));
        }
    }
    let get = |o: [i32; 3]| -> (f64, [f64; 3]) {
        let (_, q, v) = values.iter().find(|(k, _, _)| *k == o).expect("stencil point evaluated");
        (*q, *v)
    };
    let unit = |d: usize, s: i32| {
        let mut o = [0; 3];
        o[d] = s;
        o
    };
    let (q0, v0) = get([0, 0, 0]);
    let mut out = ProbeDerivatives {
        q: q0,
        v: v0,
        grad_q: [0.0; 3],
        grad_v: [[0.0; 3]; 3],
        lap_v: [0.0; 3],
        grad_div: [0.0; 3],
    };
    // second derivatives ∂_a∂_b v_i, [i][a][b]
    let mut hess = [[[0.0; 3]; 3]; 3];
    for d in 0..3 {
        for &(s, c) in &D1 {
            let (q, v) = get(unit(d, s));
            out.grad_q[d] += c * q / h;
            for i in 0..3 {
                out.grad_v[i][d] += c * v[i] / h;
            }
        }
        for &(s, c) in &D2 {
            let (_, v) = get(unit(d, s));
            for i in 0..3 {
                hess[i][d][d] += c * v[i] / (h * h);
            }
        }
    }
    for (a, b) in [(0, 1), (0, 2), (1, 2)] {
        for &(s, cs) in &D1 {
            for &(t, ct) in &D1 {
                let mut o = [0; 3];
                o[a] = s;
                o[b] = t;
                let (_, v) = get(o);
                for i in 0..3 {
                    let val = cs * ct * v[i] / (h * h);
                    hess[i][a][b] += val;
                    hess[i][b][a] += val;
                }
            }
        }
    }
    for i in 0..3 {
        out.lap_v[i] = hess[i][0][0] + hess[i][1][1] + hess[i][2][2];
        out.grad_div[i] = hess[0][0][i] + hess[1][1][i] + hess[2][2][i];
    }
    Ok(out)
}

/// Transfers `sol` to the moving domain and checks the Eulerian equations
/// on a probe cloud.
pub fn eulerian_transfer(
    sol: &SolutionTriple,
    params: &Params,
    data: &StressForce,
    cloud: &ProbeCloud,
) -> Result<EulerianReport> {
    if cloud.horizontal == 0 || cloud.vertical == 0 || !(cloud.spacing > 0.0) {
        return Err(Error::InvalidArgument(format!("empty probe cloud {cloud:?}")));
    }
    let pack = GeometryPack::new(&sol.eta)?;
    let grid = pack.grid().clone();
    let l = grid.l();
    let b = grid.b();
    let h = cloud.spacing * b;
    let gamma = params.gamma;
    let mu = params.viscosity;
    let grav = params.gravity;
    let deta: SurfaceField = sol.eta.grad();
    let mut probes = Vec::new();
    for i1 in 0..cloud.horizontal {
        for i2 in 0..cloud.horizontal {
            let x1 = l * (i1 as f64 + 0.5) / cloud.horizontal as f64;
            let x2 = l * (i2 as f64 + 0.5) / cloud.horizontal as f64;
            let depth = b + sol.eta.eval_at(0, x1, x2).re;
            for k in 0..cloud.vertical {
                let frac = (k as f64 + 1.0) / (cloud.vertical as f64 + 1.0);
                probes.push([x1, x2, frac * depth]);
            }
        }
    }
    for p in &probes {
        let depth = b + sol.eta.eval_at(0, p[0], p[1]).re;
        if p[2] - 2.0 * h <= 0.0 || p[2] + 2.0 * h >= depth {
            return Err(Error::InvalidArgument(format!(
                "finite-difference spacing {h} too large for probe {p:?} in a layer of depth {depth}"
            )));
        }
    }
    let evaluated: Vec<Result<(EulerianSample, f64, f64, f64)>> = probes
        .par_iter()
        .map(|&x| {
            let d = probe_derivatives(&pack, sol, x, h)?;
            let f: Vec<f64> = data.f.iter().map(|e| e.eval(x)).collect::<std::result::Result<_, _>>()?;
            let ge = [deta.eval_at(0, x[0], x[1]).re, deta.eval_at(1, x[0], x[1]).re, 0.0];
            let mut res: f64 = 0.0;
            let mut scale: f64 = 0.0;
            for i in 0..3 {
                let transport = d.grad_v[i][0] * (d.v[0] - gamma) + d.grad_v[i][1] * d.v[1] + d.grad_v[i][2] * d.v[2];
                let pressure = d.grad_q[i] + grav * ge[i];
                let viscous = mu * (d.lap_v[i] + d.grad_div[i]);
                res = res.max((transport + pressure - viscous - f[i]).abs());
                scale = scale.max(f[i].abs()).max(pressure.abs()).max(viscous.abs());
            }
            let div = d.grad_v[0][0] + d.grad_v[1][1] + d.grad_v[2][2];
            let y = transfer_line(&pack, sol, x[0], x[1], &[x[2]])?[0].0;
            Ok((EulerianSample { point: x, y, q: d.q, v: d.v }, res, scale, div.abs()))
        })
        .collect();
    let mut report = EulerianReport {
        samples: Vec::with_capacity(probes.len()),
        max_momentum_residual: 0.0,
        momentum_scale: 0.0,
        relative_momentum_residual: 0.0,
        max_divergence: 0.0,
        max_kinematic_defect: 0.0,
    };
    for r in evaluated {
        let (s, res, scale, div) = r?;
        report.samples.push(s);
        report.max_momentum_residual = report.max_momentum_residual.max(res);
        report.momentum_scale = report.momentum_scale.max(scale);
        report.max_divergence = report.max_divergence.max(div);
    }
    report.relative_momentum_residual = if report.momentum_scale > 0.0 {
        report.max_momentum_residual / report.momentum_scale
    } else {
        report.max_momentum_residual
    };
    // surface probes: Σ[η] is the image of y = b
    for i1 in 0..cloud.horizontal {
        for i2 in 0..cloud.horizontal {
            let x1 = l * (i1 as f64 + 0.5) / cloud.horizontal as f64;
            let x2 = l * (i2 as f64 + 0.5) / cloud.horizontal as f64;
            let col = Column::new(&pack, sol, x1, x2);
            let (_, v) = col.fields(b);
            let n = [-deta.eval_at(0, x1, x2).re, -deta.eval_at(1, x1, x2).re, 1.0];
            let defect = gamma * deta.eval_at(0, x1, x2).re + v[0] * n[0] + v[1] * n[1] + v[2] * n[2];
            report.max_kinematic_defect = report.max_kinematic_defect.max(defect.abs());
        }
    }
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::make_grid;

    #[test]
    fn flat_transfer_is_the_identity() {
        let g = make_grid(4.0, 8, 10, 1.0).unwrap();
        let mut sol = SolutionTriple::zeros(&g);
        sol.p = BulkField::from_fn(&g, 1, |_, x1, _, y| (std::f64::consts::FRAC_PI_2 * x1).sin() * y);
        sol.u = BulkField::from_fn(&g, 3, |c, _, x2, y| (c as f64 + 1.0) * y * (std::f64::consts::FRAC_PI_2 * x2).cos());
        let pts = [[0.3, 1.7, 0.25], [2.2, 3.9, 0.8]];
        let s = transfer_points(&sol, &pts).unwrap();
        for (pt, smp) in pts.iter().zip(&s) {
            assert!((smp.y - pt[2]).abs() < 1e-15);
            assert!((smp.q - sol.p.eval_at(0, pt[0], pt[1], pt[2]).re).abs() < 1e-12);
            for c in 0..3 {
                assert!((smp.v[c] - sol.u.eval_at(c, pt[0], pt[1], pt[2]).re).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn points_outside_are_rejected() {
        let g = make_grid(4.0, 8, 8, 1.0).unwrap();
        let sol = SolutionTriple::zeros(&g);
        assert!(matches!(transfer_points(&sol, &[[1.0, 1.0, 1.5]]), Err(Error::OutsideDomain(_))));
    }
}
