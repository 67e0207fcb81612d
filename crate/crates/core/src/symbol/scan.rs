//! Numerical Mikhlin–Hörmander scans: weighted operator norms of
//! `|ξ|^{|α|} ∂^α 𝐦(ξ)` over a polar grid of frequencies.
//!
//! Two choices make the scanned values resolution-independent:
//!
//! * At each `ξ` the vertical grid is stretched toward both walls so that the
//!   boundary layers of width `1/(2π|ξ|)` are resolved (see
//!   [`layer_stretch`]).
//! * Force inputs range over vertical polynomials of degree
//!   `< FORCE_DEGREE`.  Collocating the divergence at every node makes the
//!   pressure respond to the unresolved top mode of a force profile with an
//!   amplitude `∝ 1/|ξ|`; nodal unit vectors excite that mode at `O(1)`, so
//!   their induced norms blow up at small `|ξ|` and grow with `N_y`, while
//!   smooth inputs do not.

use std::collections::BTreeMap;

use rayon::prelude::*;

use crate::chebyshev::Chebyshev;
use crate::error::{Error, Result};
use crate::params::Params;

use super::block::{derivative_matrix_with, symbol_matrix, INPUTS, OUTPUTS};
use super::derivative::DerivativeContext;

/// Degree bound of the force profiles over which induced norms are taken.
pub const FORCE_DEGREE: usize = 8;

/// Number of boundary-layer widths `1/(2π|ξ|)` spanned by the first unit of
/// the reference coordinate at each wall after stretching.
pub const LAYER_SPAN: f64 = 24.0;

/// Stretch parameter of [`Chebyshev::stretched`] used at frequency radius
/// `r` on a slab of depth `b`: the map's slope at the walls is
/// `min(1, LAYER_SPAN/(2π r b))`.
pub fn layer_stretch(r: f64, b: f64) -> f64 {
    let target = LAYER_SPAN / (2.0 * std::f64::consts::PI * r * b);
    if !(target < 1.0) {
        return 0.0;
    }
    // wall slope 2λ/sinh(2λ) decreases monotonically from 1
    let slope = |l: f64| 2.0 * l / (2.0 * l).sinh();
    let (mut lo, mut hi) = (0.0f64, 1.0f64);
    while slope(hi) > target {
        hi *= 2.0;
    }
    for _ in 0..100 {
        let mid = 0.5 * (lo + hi);
        if slope(mid) > target {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

/// Polar frequency grid: log-spaced radii × equally spaced angles.
#[derive(Debug, Clone, PartialEq)]
pub struct ScanGrid {
    /// Radii `|ξ|`.
    pub radii: Vec<f64>,
    /// Angles in radians.
    pub angles: Vec<f64>,
}

impl ScanGrid {
    /// `n_radii` log-spaced radii in `[r_min, r_max]` and `n_angles` angles
    /// `2πk/n_angles`.
    pub fn log_polar(r_min: f64, r_max: f64, n_radii: usize, n_angles: usize) -> Result<Self> {
        if !(r_min > 0.0 && r_max >= r_min && n_radii >= 1 && n_angles >= 1) {
            return Err(Error::InvalidArgument(format!(
                "scan grid needs 0 < r_min ≤ r_max and positive counts, got [{r_min}, {r_max}] × {n_radii} × {n_angles}"
            )));
        }
        let radii = (0..n_radii)
            .map(|i| {
                if n_radii == 1 {
                    r_min
                } else {
                    let t = i as f64 / (n_radii - 1) as f64;
                    (r_min.ln() * (1.0 - t) + r_max.ln() * t).exp()
                }
            })
            .collect();
        let angles = (0..n_angles).map(|k| 2.0 * std::f64::consts::PI * k as f64 / n_angles as f64).collect();
        Ok(Self { radii, angles })
    }
}

/// Multi-index `α = (α₁, α₂)`.
pub type Alpha = [usize; 2];

/// All multi-indices with `|α| ≤ alpha_max`, ordered by total degree.
pub fn alphas(alpha_max: usize) -> Vec<Alpha> {
    let mut out = Vec::new();
    for t in 0..=alpha_max {
        for a1 in (0..=t).rev() {
            out.push([a1, t - a1]);
        }
    }
    out
}

/// One scan record.
#[derive(Debug, Clone, PartialEq)]
pub struct ScanRow {
    /// `|ξ|`.
    pub radius: f64,
    /// Polar angle of `ξ`.
    pub angle: f64,
    /// Block name, e.g. `m21`.
    pub component: String,
    /// Multi-index.
    pub alpha: Alpha,
    /// `|ξ|^{|α|}⟦∂^α m_ab(ξ)⟧`.
    pub value: f64,
}

/// Result of [`mh_scan`].
#[derive(Debug, Clone, Default)]
pub struct ScanReport {
    /// All records, grid-major.
    pub rows: Vec<ScanRow>,
    /// Supremum per `(component, α)`.
    pub sups: BTreeMap<(String, Alpha), f64>,
    /// Grid points with non-finite values or failed solves.
    pub flagged: Vec<(f64, f64, String)>,
}

impl ScanReport {
    /// Supremum for one block and multi-index.
    pub fn sup(&self, component: &str, alpha: Alpha) -> Option<f64> {
        self.sups.get(&(component.to_string(), alpha)).copied()
    }

    /// Whether every recorded supremum is finite and nothing was flagged.
    pub fn all_finite(&self) -> bool {
        self.flagged.is_empty() && self.sups.values().all(|v| v.is_finite())
    }
}

/// Name of block `(a, b)` (1-based, e.g. `m21` maps `f` to `u`).
pub fn block_name(a: usize, b: usize) -> String {
    format!("m{}{}", a + 1, b + 1)
}

/// Human-readable form of the block roles, e.g. `f->u`.
pub fn block_roles(a: usize, b: usize) -> String {
    format!("{}->{}", INPUTS[b], OUTPUTS[a])
}

fn scan_point(xi: [f64; 2], params: &Params, ny: usize, s: u32, alpha_list: &[Alpha]) -> Result<Vec<(Alpha, [[f64; 3]; 3])>> {
    let r = xi[0].hypot(xi[1]);
    let cheb = &Chebyshev::stretched(ny, params.depth, layer_stretch(r, params.depth))?;
    let mut out = Vec::with_capacity(alpha_list.len());
    let ctx = if alpha_list.iter().any(|a| a[0] + a[1] > 0) { Some(DerivativeContext::new(xi, params, cheb)?) } else { None };
    for &alpha in alpha_list {
        let order = alpha[0] + alpha[1];
        let block = if order == 0 {
            symbol_matrix(xi, params, cheb, s)?
        } else {
            let mut dirs = vec![[1.0, 0.0]; alpha[0]];
            dirs.extend(std::iter::repeat_n([0.0, 1.0], alpha[1]));
            derivative_matrix_with(ctx.as_ref().expect("context exists"), xi, cheb.len(), s, &dirs)?
        };
        let mut norms = block.weighted_norms_on(cheb, Some(FORCE_DEGREE));
        let scale = r.powi(order as i32);
        for row in norms.iter_mut() {
            for v in row.iter_mut() {
                *v *= scale;
            }
        }
        out.push((alpha, norms));
    }
    Ok(out)
}

/// Scans the weighted norms of `|ξ|^{|α|}∂^α𝐦(ξ)` for `|α| ≤ alpha_max`
/// over `grid`, with `ny` vertical collocation points (stretched per
/// frequency).  Grid points are processed in parallel.
pub fn mh_scan(params: &Params, s: u32, grid: &ScanGrid, alpha_max: usize, ny: usize) -> Result<ScanReport> {
    if alpha_max > 2 {
        return Err(Error::Unsupported(format!("alpha_max must be at most 2, got {alpha_max}")));
    }
    params.validate()?;
    if ny < FORCE_DEGREE {
        return Err(Error::InvalidArgument(format!("scan needs ny ≥ {FORCE_DEGREE}, got {ny}")));
    }
    let alpha_list = alphas(alpha_max);
    let points: Vec<(f64, f64)> = grid.radii.iter().flat_map(|&r| grid.angles.iter().map(move |&t| (r, t))).collect();
    let results: Vec<_> = points
        .par_iter()
        .map(|&(r, t)| {
            let xi = [r * t.cos(), r * t.sin()];
            (r, t, scan_point(xi, params, ny, s, &alpha_list))
        })
        .collect();
    let mut report = ScanReport::default();
    for (r, t, res) in results {
        match res {
            Ok(list) => {
                for (alpha, norms) in list {
                    for a in 0..3 {
                        for b in 0..3 {
                            let name = block_name(a, b);
                            let v = norms[a][b];
                            if !v.is_finite() {
                                report.flagged.push((r, t, format!("{name} alpha={alpha:?} not finite")));
                            }
                            let e = report.sups.entry((name.clone(), alpha)).or_insert(0.0);
                            *e = if v.is_finite() { e.max(v) } else { f64::INFINITY };
                            report.rows.push(ScanRow { radius: r, angle: t, component: name, alpha, value: v });
                        }
                    }
                }
            }
            Err(e) => report.flagged.push((r, t, e.to_string())),
        }
    }
    Ok(report)
}
