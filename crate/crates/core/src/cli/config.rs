//! Run configuration: flat UTF-8 `key=value` lines with section dots
//! (`grid.Nx=64`).  Blank lines and lines starting with `#` are ignored;
//! unknown and repeated keys are errors.

use std::path::PathBuf;

use crate::dsl::FieldExpr;
use crate::error::{Error, Result};
use crate::nonlinear::{NewtonOptions, StressForce};
use crate::params::{Params, SobolevIndex};

/// Grid section.
#[derive(Debug, Clone, PartialEq)]
pub struct GridConfig {
    /// Period `L`.
    pub l: f64,
    /// Horizontal modes per direction.
    pub nx: usize,
    /// Vertical collocation nodes.
    pub ny: usize,
    /// Depth `b`.
    pub b: f64,
}

/// Multiplier-scan section.
#[derive(Debug, Clone, PartialEq)]
pub struct ScanConfig {
    /// Smallest `|ξ|`.
    pub radii_min: f64,
    /// Largest `|ξ|`.
    pub radii_max: f64,
    /// Number of radii.
    pub n_radii: usize,
    /// Number of angles.
    pub n_angles: usize,
    /// Largest derivative order.
    pub alpha_max: usize,
    /// Vertical nodes of the per-frequency solves.
    pub ny: usize,
}

/// Marcinkiewicz-check section.
#[derive(Debug, Clone, PartialEq)]
pub struct PgammaConfig {
    /// Wave speeds.
    pub gammas: Vec<f64>,
    /// Smallest `|ξ|`.
    pub radii_min: f64,
    /// Largest `|ξ|`.
    pub radii_max: f64,
    /// Number of radii.
    pub n_radii: usize,
    /// Number of angles.
    pub n_angles: usize,
}

/// Data of the `linear` subcommand: bulk force in `(x1, x2, x3)` and
/// surface data in `(x1, x2)`.
#[derive(Debug, Clone, PartialEq)]
pub struct LinearConfig {
    /// Bulk force `f`.
    pub f: [FieldExpr; 3],
    /// Stress datum `k`.
    pub k: [FieldExpr; 3],
    /// Kinematic datum `h`.
    pub h: FieldExpr,
}

/// Everything a run needs.
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    /// Grid.
    pub grid: GridConfig,
    /// Physical parameters (`depth` equals `grid.b`).
    pub params: Params,
    /// Applied stress and force of the nonlinear problem.
    pub data: StressForce,
    /// Newton controls.
    pub newton: NewtonOptions,
    /// Multiplier scan.
    pub scan: ScanConfig,
    /// Marcinkiewicz check.
    pub pgamma: PgammaConfig,
    /// Wave speeds of the sweep.
    pub sweep_gammas: Vec<f64>,
    /// Linear-solve data.
    pub linear: LinearConfig,
    /// Output directory.
    pub output_dir: PathBuf,
}

fn zero() -> FieldExpr {
    FieldExpr::constant(0.0)
}

impl Default for RunConfig {
    fn default() -> Self {
        let mut sweep_gammas: Vec<f64> = (0..9).map(|i| 0.5f64.powi(i)).collect();
        sweep_gammas.push(0.0);
        Self {
            grid: GridConfig { l: 16.0, nx: 64, ny: 32, b: 1.0 },
            params: Params { index: SobolevIndex { s: 4, r: 1.5 }, ..Params::default() },
            data: StressForce::zero(),
            newton: NewtonOptions { tol: 1e-10, max_iter: 25, damping: 1.0 },
            scan: ScanConfig { radii_min: 1e-2, radii_max: 1e2, n_radii: 13, n_angles: 4, alpha_max: 1, ny: 24 },
            pgamma: PgammaConfig {
                gammas: vec![0.1, 1.0, 10.0, 100.0],
                radii_min: 1e-3,
                radii_max: 1e3,
                n_radii: 601,
                n_angles: 64,
            },
            sweep_gammas,
            linear: LinearConfig { f: std::array::from_fn(|_| zero()), k: std::array::from_fn(|_| zero()), h: zero() },
            output_dir: PathBuf::from("out"),
        }
    }
}

fn bad(key: &str, line: usize, msg: impl std::fmt::Display) -> Error {
    Error::Config(format!("{key} (line {line}): {msg}"))
}

fn number<T: std::str::FromStr>(key: &str, line: usize, v: &str) -> Result<T>
where
    T::Err: std::fmt::Display,
{
    v.parse::<T>().map_err(|e| bad(key, line, format!("cannot parse '{v}': {e}")))
}

fn list(key: &str, line: usize, v: &str) -> Result<Vec<f64>> {
    v.split(',').map(|s| number(key, line, s.trim())).collect()
}

fn expr(key: &str, line: usize, v: &str) -> Result<FieldExpr> {
    FieldExpr::parse(v).map_err(|e| bad(key, line, e))
}

/// Position of `key` in a `prefix1..prefixn` family (1-based suffix).
fn indexed(key: &str, prefix: &str, n: usize) -> Option<usize> {
    let i: usize = key.strip_prefix(prefix)?.parse().ok()?;
    (1..=n).contains(&i).then(|| i - 1)
}

impl RunConfig {
    /// Parses configuration text on top of the defaults.
    pub fn parse(text: &str) -> Result<Self> {
        let mut c = Self::default();
        let mut seen = std::collections::BTreeSet::new();
        for (n, raw) in text.lines().enumerate() {
            let line = n + 1;
            let t = raw.trim();
            if t.is_empty() || t.starts_with('#') {
                continue;
            }
            let (key, value) =
                t.split_once('=').ok_or_else(|| Error::Config(format!("line {line}: expected key=value, got '{t}'")))?;
            let (key, v) = (key.trim(), value.trim());
            if !seen.insert(key.to_string()) {
                return Err(bad(key, line, "repeated key"));
            }
            c.set(key, v, line)?;
        }
        c.validate()?;
        Ok(c)
    }

    /// Reads and parses a configuration file.
    pub fn from_file(path: &std::path::Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("cannot read config '{}': {e}", path.display())))?;
        Self::parse(&text)
    }

    fn set(&mut self, key: &str, v: &str, line: usize) -> Result<()> {
        let (section, name) = key.split_once('.').unwrap_or(("", key));
        match (section, name) {
            ("grid", "L") => self.grid.l = number(key, line, v)?,
            ("grid", "Nx") => self.grid.nx = number(key, line, v)?,
            ("grid", "Ny") => self.grid.ny = number(key, line, v)?,
            ("grid", "b") => self.grid.b = number(key, line, v)?,
            ("params", "gravity") => self.params.gravity = number(key, line, v)?,
            ("params", "viscosity") => self.params.viscosity = number(key, line, v)?,
            ("params", "surface_tension") => self.params.surface_tension = number(key, line, v)?,
            ("params", "gamma") => self.params.gamma = number(key, line, v)?,
            ("params", "s") => self.params.index.s = number(key, line, v)?,
            ("params", "r") => self.params.index.r = number(key, line, v)?,
            ("newton", "tol") => self.newton.tol = number(key, line, v)?,
            ("newton", "max_iter") => self.newton.max_iter = number(key, line, v)?,
            ("newton", "damping") => self.newton.damping = number(key, line, v)?,
            ("scan", "radii_min") => self.scan.radii_min = number(key, line, v)?,
            ("scan", "radii_max") => self.scan.radii_max = number(key, line, v)?,
            ("scan", "n_radii") => self.scan.n_radii = number(key, line, v)?,
            ("scan", "n_angles") => self.scan.n_angles = number(key, line, v)?,
            ("scan", "alpha_max") => self.scan.alpha_max = number(key, line, v)?,
            ("scan", "ny") => self.scan.ny = number(key, line, v)?,
            ("pgamma", "gammas") => self.pgamma.gammas = list(key, line, v)?,
            ("pgamma", "radii_min") => self.pgamma.radii_min = number(key, line, v)?,
            ("pgamma", "radii_max") => self.pgamma.radii_max = number(key, line, v)?,
            ("pgamma", "n_radii") => self.pgamma.n_radii = number(key, line, v)?,
            ("pgamma", "n_angles") => self.pgamma.n_angles = number(key, line, v)?,
            ("sweep", "gammas") => self.sweep_gammas = list(key, line, v)?,
            ("linear", "h") => self.linear.h = expr(key, line, v)?,
            ("", "output_dir") if !v.is_empty() => self.output_dir = PathBuf::from(v),
            ("data", n) if indexed(n, "F", 3).is_some() => {
                self.data.f[indexed(n, "F", 3).expect("checked")] = expr(key, line, v)?;
            }
            ("data", n) if n.len() == 3 && n.starts_with('T') => {
                let (i, j) = (indexed(&n[..2], "T", 3), indexed(&format!("T{}", &n[2..]), "T", 3));
                match (i, j) {
                    (Some(i), Some(j)) => self.data.t[i][j] = expr(key, line, v)?,
                    _ => return Err(bad(key, line, "unknown key")),
                }
            }
            ("linear", n) if indexed(n, "f", 3).is_some() => {
                self.linear.f[indexed(n, "f", 3).expect("checked")] = expr(key, line, v)?;
            }
            ("linear", n) if indexed(n, "k", 3).is_some() => {
                self.linear.k[indexed(n, "k", 3).expect("checked")] = expr(key, line, v)?;
            }
            _ => return Err(bad(key, line, "unknown key")),
        }
        Ok(())
    }

    fn validate(&self) -> Result<()> {
        let g = &self.grid;
        if !(g.l > 0.0 && g.l.is_finite() && g.b > 0.0 && g.b.is_finite()) {
            return Err(Error::Config(format!("grid.L and grid.b must be positive, got {} and {}", g.l, g.b)));
        }
        if g.nx < 8 || !g.nx.is_multiple_of(2) {
            return Err(Error::Config(format!("grid.Nx must be even and at least 8, got {}", g.nx)));
        }
        if g.ny < 8 {
            return Err(Error::Config(format!("grid.Ny must be at least 8, got {}", g.ny)));
        }
        self.physical_params().validate().map_err(|e| Error::Config(format!("params: {e}")))?;
        if !(self.newton.tol > 0.0) || self.newton.max_iter == 0 || !(self.newton.damping > 0.0 && self.newton.damping <= 1.0)
        {
            return Err(Error::Config("newton: need tol > 0, max_iter ≥ 1, damping in (0, 1]".into()));
        }
        let s = &self.scan;
        if !(s.radii_min > 0.0 && s.radii_max >= s.radii_min) || s.n_radii == 0 || s.n_angles == 0 {
            return Err(Error::Config("scan: need 0 < radii_min ≤ radii_max and positive counts".into()));
        }
        if s.alpha_max > 2 {
            return Err(Error::Config(format!("scan.alpha_max must be at most 2, got {}", s.alpha_max)));
        }
        let p = &self.pgamma;
        if !(p.radii_min > 0.0 && p.radii_max >= p.radii_min) || p.n_radii == 0 || p.n_angles == 0 || p.gammas.is_empty()
        {
            return Err(Error::Config("pgamma: need 0 < radii_min ≤ radii_max, positive counts and gammas".into()));
        }
        if self.sweep_gammas.is_empty() || self.sweep_gammas.iter().any(|g| !g.is_finite()) {
            return Err(Error::Config("sweep.gammas must be a non-empty list of finite numbers".into()));
        }
        Ok(())
    }

    /// Physical parameters with the depth of the grid.
    pub fn physical_params(&self) -> Params {
        Params { depth: self.grid.b, ..self.params }
    }
}
