//! Command-line orchestration: configuration, subcommands and output files.
//!
//! Every subcommand reads a [`RunConfig`], writes its arrays as `SLB1` files
//! and its diagnostics as CSV into the configured output directory, and
//! returns the lines it wants printed.  Errors carry the exit code and the
//! `E:<code>:` prefix through [`Error::exit_code`] and [`Error::code`].

pub mod config;
pub mod format;

use std::fs;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use crate::acceptance::Suite;
use crate::dsl::FieldExpr;
use crate::error::{Error, Result};
use crate::grid::{make_grid, BulkField, Grid, SurfaceField};
use crate::linear::{linear_residual, LatticeSolver, LinearData, SolutionTriple};
use crate::nonlinear::eulerian::ProbeCloud;
use crate::nonlinear::{energy_balance, eulerian_transfer, gamma_sweep, newton_solve};
use crate::pgamma::{log_space, marcinkiewicz_check, uniform_angles, MarcinkiewiczReport};
use crate::symbol::{mh_scan, ScanGrid};

pub use config::RunConfig;
pub use format::{fmt_f64, read_slb1, write_slb1, Array, FormatError, Record, Table};

/// The subcommands.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Command {
    /// Linear solve on expression data.
    Linear,
    /// Nonlinear solve with energy and Eulerian diagnostics.
    Solve,
    /// Multiplier-bound scan of the symbol.
    SymbolScan,
    /// Marcinkiewicz constants of `P_γ`.
    PgammaCheck,
    /// Continuity sweep in the wave speed.
    GammaSweep,
    /// The acceptance suite.
    Selftest,
}

impl Command {
    /// Command-line name.
    pub fn name(self) -> &'static str {
        match self {
            Command::Linear => "linear",
            Command::Solve => "solve",
            Command::SymbolScan => "symbol-scan",
            Command::PgammaCheck => "pgamma-check",
            Command::GammaSweep => "gamma-sweep",
            Command::Selftest => "selftest",
        }
    }
}

/// What a run produced.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct RunOutput {
    /// Lines for standard output.
    pub lines: Vec<String>,
    /// Files written.
    pub files: Vec<PathBuf>,
}

impl RunOutput {
    fn write(&mut self, dir: &Path, name: &str, bytes: &[u8]) -> Result<()> {
        let path = dir.join(name);
        fs::write(&path, bytes)?;
        self.files.push(path);
        Ok(())
    }

    fn csv(&mut self, dir: &Path, name: &str, table: &Table) -> Result<()> {
        self.write(dir, name, table.to_csv().as_bytes())
    }

    fn slb1(&mut self, dir: &Path, name: &str, records: &[Record]) -> Result<()> {
        let mut buf = Vec::new();
        write_slb1(&mut buf, records)?;
        self.write(dir, name, &buf)
    }
}

/// Runs `command` with `config`.
pub fn run(command: Command, config: &RunConfig) -> Result<RunOutput> {
    let dir = &config.output_dir;
    fs::create_dir_all(dir)?;
    let mut out = RunOutput::default();
    match command {
        Command::Linear => linear(config, dir, &mut out)?,
        Command::Solve => solve(config, dir, &mut out)?,
        Command::SymbolScan => symbol_scan(config, dir, &mut out)?,
        Command::PgammaCheck => pgamma_check(config, dir, &mut out)?,
        Command::GammaSweep => sweep(config, dir, &mut out)?,
        Command::Selftest => selftest(dir, &mut out)?,
    }
    Ok(out)
}

fn grid_of(config: &RunConfig) -> Result<Arc<Grid>> {
    let g = &config.grid;
    make_grid(g.l, g.nx, g.ny, g.b)
}

fn eval_bulk(grid: &Arc<Grid>, exprs: &[FieldExpr]) -> Result<BulkField> {
    let (n, ny) = (grid.nx(), grid.ny());
    let mut v = Vec::with_capacity(exprs.len() * n * n * ny);
    for e in exprs {
        for i1 in 0..n {
            for i2 in 0..n {
                for &y in grid.y() {
                    v.push(e.eval([grid.x_of(i1, n), grid.x_of(i2, n), y])?);
                }
            }
        }
    }
    BulkField::from_real(grid, exprs.len(), &v)
}

fn eval_surface(grid: &Arc<Grid>, exprs: &[FieldExpr]) -> Result<SurfaceField> {
    let n = grid.nx();
    let mut v = Vec::with_capacity(exprs.len() * n * n);
    for e in exprs {
        for i1 in 0..n {
            for i2 in 0..n {
                v.push(e.eval([grid.x_of(i1, n), grid.x_of(i2, n), grid.b()])?);
            }
        }
    }
    SurfaceField::from_real(grid, exprs.len(), &v)
}

fn solution_records(sol: &SolutionTriple) -> Vec<Record> {
    let g = sol.grid();
    let (n, ny) = (g.nx(), g.ny());
    vec![
        Record::f64("p", &[1, n, n, ny], sol.p.to_real()),
        Record::f64("u", &[3, n, n, ny], sol.u.to_real()),
        Record::f64("eta", &[1, n, n], sol.eta.to_real()),
        Record::f64("y", &[ny], g.y().to_vec()),
    ]
}

fn quantities(rows: &[(&str, f64)]) -> Table {
    let mut t = Table::new(&["quantity", "value"]);
    for (k, v) in rows {
        t.push(vec![k.to_string(), fmt_f64(*v)]);
    }
    t
}

fn linear(config: &RunConfig, dir: &Path, out: &mut RunOutput) -> Result<()> {
    let grid = grid_of(config)?;
    let params = config.physical_params();
    let mut data = LinearData::zeros(&grid);
    data.f = eval_bulk(&grid, &config.linear.f)?;
    data.k = eval_surface(&grid, &config.linear.k)?;
    data.h = eval_surface(&grid, std::slice::from_ref(&config.linear.h))?;
    let solver = LatticeSolver::new(&grid, &params)?;
    let sol = solver.solve(&data)?;
    let residual = linear_residual(&sol, &data, &params)?;
    out.slb1(dir, "linear.slb", &solution_records(&sol))?;
    out.csv(
        dir,
        "linear.csv",
        &quantities(&[
            ("max_p", sol.p.max_abs()),
            ("max_u", sol.u.max_abs()),
            ("max_eta", sol.eta.max_abs()),
            ("relative_residual", residual),
            ("max_condition", solver.max_condition()),
        ]),
    )?;
    out.lines.push(format!("relative_residual={}", fmt_f64(residual)));
    Ok(())
}

fn solve(config: &RunConfig, dir: &Path, out: &mut RunOutput) -> Result<()> {
    let grid = grid_of(config)?;
    let params = config.physical_params();
    let (sol, state, report) = newton_solve(&grid, params.gamma, &params, &config.data, &config.newton)?;
    let energy = energy_balance(&sol, &params, &config.data)?;
    let eul = eulerian_transfer(&sol, &params, &config.data, &ProbeCloud::default())?;
    let mut records = solution_records(&sol);
    let n = grid.nx();
    records.push(Record::f64("upsilon", &[1, n, n], state.upsilon.to_real()));
    out.slb1(dir, "solution.slb", &records)?;
    let mut history = Table::new(&["iteration", "residual", "ratio"]);
    for (i, r) in report.residuals.iter().enumerate() {
        let ratio = if i == 0 { f64::NAN } else { report.ratios[i - 1] };
        history.push(vec![i.to_string(), fmt_f64(*r), fmt_f64(ratio)]);
    }
    out.csv(dir, "newton.csv", &history)?;
    out.csv(
        dir,
        "solve.csv",
        &quantities(&[
            ("iterations", report.iterations as f64),
            ("final_residual", report.final_residual),
            ("energy_gap", energy.gap),
            ("dissipation", energy.dissipation),
            ("power", energy.power),
            ("min_jacobian", report.min_j),
            ("eulerian_momentum_residual", eul.max_momentum_residual),
            ("eulerian_relative_residual", eul.relative_momentum_residual),
            ("eulerian_divergence", eul.max_divergence),
            ("eulerian_kinematic_defect", eul.max_kinematic_defect),
        ]),
    )?;
    out.lines.push(format!("iterations={}", report.iterations));
    out.lines.push(format!("final_residual={}", fmt_f64(report.final_residual)));
    out.lines.push(format!("energy_gap={}", fmt_f64(energy.gap)));
    Ok(())
}

fn symbol_scan(config: &RunConfig, dir: &Path, out: &mut RunOutput) -> Result<()> {
    let s = &config.scan;
    let grid = ScanGrid::log_polar(s.radii_min, s.radii_max, s.n_radii, s.n_angles)?;
    let params = config.physical_params();
    let report = mh_scan(&params, params.index.s, &grid, s.alpha_max, s.ny)?;
    let mut rows = Table::new(&["radius", "angle", "component", "alpha1", "alpha2", "value"]);
    for r in &report.rows {
        rows.push(vec![
            fmt_f64(r.radius),
            fmt_f64(r.angle),
            r.component.clone(),
            r.alpha[0].to_string(),
            r.alpha[1].to_string(),
            fmt_f64(r.value),
        ]);
    }
    out.csv(dir, "scan.csv", &rows)?;
    let mut sups = Table::new(&["component", "alpha1", "alpha2", "supremum"]);
    for ((c, a), v) in &report.sups {
        sups.push(vec![c.clone(), a[0].to_string(), a[1].to_string(), fmt_f64(*v)]);
    }
    out.csv(dir, "scan_sups.csv", &sups)?;
    out.lines.push(format!("suprema={} flagged={}", report.sups.len(), report.flagged.len()));
    if !report.all_finite() {
        return Err(Error::CheckFailed(format!("{} scan points are not finite", report.flagged.len())));
    }
    Ok(())
}

fn pgamma_check(config: &RunConfig, dir: &Path, out: &mut RunOutput) -> Result<()> {
    let p = &config.pgamma;
    let report =
        marcinkiewicz_check(&p.gammas, &log_space(p.radii_min, p.radii_max, p.n_radii), &uniform_angles(p.n_angles))?;
    let names = ["p", "xi1_d1_p", "xi2_d2_p", "xi1_xi2_d12_p"];
    let slack = [1e-12, 1e-9, 1e-9, 1e-9];
    let sups = report.suprema();
    let mut table = Table::new(&["quantity", "supremum", "bound", "within"]);
    let mut ok = true;
    for i in 0..4 {
        let bound = MarcinkiewiczReport::BOUNDS[i];
        let within = sups[i] <= bound + slack[i];
        ok &= within;
        table.push(vec![names[i].into(), fmt_f64(sups[i]), fmt_f64(bound), within.to_string()]);
        out.lines.push(format!("{}={} (bound {bound})", names[i], fmt_f64(sups[i])));
    }
    out.csv(dir, "pgamma.csv", &table)?;
    let mut by_gamma = Table::new(&["gamma", "p", "xi1_d1_p", "xi2_d2_p", "xi1_xi2_d12_p"]);
    for r in &report.rows {
        by_gamma.push([r.gamma, r.p, r.x1_d1, r.x2_d2, r.x1x2_d12].iter().map(|v| fmt_f64(*v)).collect());
    }
    out.csv(dir, "pgamma_by_gamma.csv", &by_gamma)?;
    if !ok {
        return Err(Error::CheckFailed("a Marcinkiewicz supremum exceeds its bound".into()));
    }
    Ok(())
}

fn sweep(config: &RunConfig, dir: &Path, out: &mut RunOutput) -> Result<()> {
    let grid = grid_of(config)?;
    let params = config.physical_params();
    let rows = gamma_sweep(&grid, &config.sweep_gammas, &params, &config.data, &config.newton)?;
    let mut table = Table::new(&["gamma", "difference", "anisotropic", "iterations", "status"]);
    for r in &rows {
        let status = if r.error.is_some() { "failed" } else { "ok" };
        table.push(vec![fmt_f64(r.gamma), fmt_f64(r.difference), fmt_f64(r.anisotropic), r.iterations.to_string(), status.into()]);
        if let Some(e) = &r.error {
            out.lines.push(format!("gamma={}: {e}", fmt_f64(r.gamma)));
        }
    }
    out.csv(dir, "sweep.csv", &table)?;
    out.lines.push(format!("rows={}", rows.len()));
    Ok(())
}

fn selftest(dir: &Path, out: &mut RunOutput) -> Result<()> {
    let results = Suite::new().run_all();
    let mut table = Table::new(&["criterion", "passed", "elapsed_s", "budget_s"]);
    for r in &results {
        out.lines.push(r.to_string());
        table.push(vec![r.id.to_string(), r.passed.to_string(), fmt_f64(r.elapsed.as_secs_f64()), r.budget.as_secs().to_string()]);
    }
    out.csv(dir, "selftest.csv", &table)?;
    let failed: Vec<String> = results.iter().filter(|r| !r.passed).map(|r| r.id.to_string()).collect();
    if !failed.is_empty() {
        return Err(Error::CheckFailed(format!("criteria {} failed", failed.join(" "))));
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small(dir: &Path, extra: &str) -> RunConfig {
        let text = format!("grid.L=4\ngrid.Nx=8\ngrid.Ny=10\noutput_dir={}\n{extra}", dir.display());
        RunConfig::parse(&text).unwrap()
    }

    #[test]
    fn names() {
        assert_eq!(Command::PgammaCheck.name(), "pgamma-check");
        assert_eq!(Command::SymbolScan.name(), "symbol-scan");
    }

    #[test]
    fn zero_data_solve_takes_one_evaluation() {
        let dir = tempfile::tempdir().unwrap();
        let out = run(Command::Solve, &small(dir.path(), "")).unwrap();
        assert_eq!(out.lines[0], "iterations=1");
        let recs = read_slb1(&fs::read(dir.path().join("solution.slb")).unwrap()).unwrap();
        for r in &recs {
            if let (Array::F64(v), true) = (&r.data, r.name != "y") {
                assert!(v.iter().all(|x| *x == 0.0), "{}", r.name);
            }
        }
        assert_eq!(recs[1].shape, vec![3, 8, 8, 10]);
    }

    #[test]
    fn linear_command_solves_expression_data() {
        let dir = tempfile::tempdir().unwrap();
        let cfg = small(dir.path(), "linear.f1=cos(1.5707963267948966*x2)*x3\nlinear.h=0.1*sin(1.5707963267948966*x1)\n");
        let out = run(Command::Linear, &cfg).unwrap();
        let csv = fs::read_to_string(dir.path().join("linear.csv")).unwrap();
        assert!(csv.starts_with("quantity,value\nmax_p,"));
        let res: f64 = out.lines[0].trim_start_matches("relative_residual=").parse().unwrap();
        assert!(res < 1e-10);
    }

    #[test]
    fn incompatible_linear_data_is_a_numerical_failure() {
        let dir = tempfile::tempdir().unwrap();
        let e = run(Command::Linear, &small(dir.path(), "linear.h=1\n")).unwrap_err();
        assert_eq!((e.code(), e.exit_code()), ("compatibility", 3));
    }

    #[test]
    fn pgamma_check_writes_four_rows_within_bounds() {
        let dir = tempfile::tempdir().unwrap();
        run(Command::PgammaCheck, &small(dir.path(), "pgamma.n_radii=61\npgamma.n_angles=16\n")).unwrap();
        let csv = fs::read_to_string(dir.path().join("pgamma.csv")).unwrap();
        let lines: Vec<&str> = csv.lines().collect();
        assert_eq!(lines.len(), 5);
        assert!(lines[1..].iter().all(|l| l.ends_with(",true")));
    }

    #[test]
    fn scan_and_sweep_tables() {
        let dir = tempfile::tempdir().unwrap();
        let cfg = small(dir.path(), "scan.n_radii=2\nscan.n_angles=1\nscan.ny=8\nparams.s=0\nsweep.gammas=0.5,0\n");
        run(Command::SymbolScan, &cfg).unwrap();
        let scan = fs::read_to_string(dir.path().join("scan.csv")).unwrap();
        assert_eq!(scan.lines().count(), 1 + 2 * 3 * 9);
        let data = "data.F1=1e-3*exp(-(x1-2)^2-(x2-2)^2)\n";
        run(Command::GammaSweep, &small(dir.path(), data)).unwrap();
        let sweep = fs::read_to_string(dir.path().join("sweep.csv")).unwrap();
        assert_eq!(sweep.lines().count(), 11);
        assert!(sweep.lines().last().unwrap().starts_with("0.0000000000000000e0,0.0000000000000000e0,"));
    }
}
