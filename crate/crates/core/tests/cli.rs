//! End-to-end behaviour of the `slabwave` binary: exit codes, error
//! prefixes, output files and determinism.

use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn slabwave(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_slabwave")).args(args).output().expect("binary runs")
}

fn write_config(dir: &Path, text: &str) -> String {
    let path = dir.join("run.cfg");
    fs::write(&path, text).unwrap();
    path.to_string_lossy().into_owned()
}

const SMALL: &str = "grid.L=4\ngrid.Nx=8\ngrid.Ny=10\n";

#[test]
fn unknown_key_exits_with_config_error() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "grid.Nx=16\nnewton.tolerance=1e-8\n");
    let out = slabwave(&["solve", &cfg]);
    assert_eq!(out.status.code(), Some(2));
    let err = String::from_utf8(out.stderr).unwrap();
    assert!(err.starts_with("E:config:"), "{err}");
    assert!(err.contains("newton.tolerance"), "{err}");
}

#[test]
fn missing_config_file_is_a_config_error() {
    let out = slabwave(&["linear", "/nonexistent/run.cfg"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).starts_with("E:config:"));
}

#[test]
fn incompatible_data_is_a_numerical_error() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), &format!("{SMALL}linear.h=1\n"));
    let out = slabwave(&["linear", &cfg, "-o", &dir.path().to_string_lossy()]);
    assert_eq!(out.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&out.stderr).starts_with("E:compatibility:"));
}

#[test]
fn pgamma_check_with_defaults() {
    let dir = tempfile::tempdir().unwrap();
    let out = slabwave(&["pgamma-check", "-o", &dir.path().to_string_lossy()]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let csv = fs::read_to_string(dir.path().join("pgamma.csv")).unwrap();
    let rows: Vec<Vec<&str>> = csv.lines().skip(1).map(|l| l.split(',').collect()).collect();
    assert_eq!(rows.len(), 4);
    let bounds = [1.0, 0.5, 1.0, 3.0];
    for (row, bound) in rows.iter().zip(bounds) {
        let sup: f64 = row[1].parse().unwrap();
        assert!(sup <= bound + 1e-9 && sup > 0.0, "{row:?}");
        assert_eq!(row[3], "true");
    }
}

#[test]
fn zero_data_solve_reports_one_iteration() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), &format!("{SMALL}output_dir={}\n", dir.path().display()));
    let out = slabwave(&["solve", &cfg]);
    assert_eq!(out.status.code(), Some(0));
    assert!(String::from_utf8_lossy(&out.stdout).starts_with("iterations=1\n"));
    let bytes = fs::read(dir.path().join("solution.slb")).unwrap();
    assert!(bytes.starts_with(b"SLB1\n"));
    let recs = slabwave::cli::read_slb1(&bytes).unwrap();
    let names: Vec<&str> = recs.iter().map(|r| r.name.as_str()).collect();
    assert_eq!(names, ["p", "u", "eta", "y", "upsilon"]);
}

#[test]
fn diagnostics_are_bit_identical_across_runs() {
    let text = format!(
        "{SMALL}data.F1=1e-3*exp(-(x1-2)^2-(x2-2)^2-(x3-0.5)^2)\nparams.gamma=0.3\nparams.s=0\n\
         scan.n_radii=3\nscan.n_angles=2\nscan.ny=8\npgamma.n_radii=31\npgamma.n_angles=8\n"
    );
    let mut csvs = Vec::new();
    for _ in 0..2 {
        let dir = tempfile::tempdir().unwrap();
        let cfg = write_config(dir.path(), &text);
        let o = dir.path().to_string_lossy().into_owned();
        for cmd in ["solve", "symbol-scan", "pgamma-check"] {
            let out = slabwave(&[cmd, &cfg, "-o", &o]);
            assert_eq!(out.status.code(), Some(0), "{cmd}: {}", String::from_utf8_lossy(&out.stderr));
        }
        let files = ["solve.csv", "newton.csv", "scan.csv", "scan_sups.csv", "pgamma.csv", "pgamma_by_gamma.csv", "solution.slb"];
        csvs.push(files.map(|f| fs::read(dir.path().join(f)).unwrap()));
    }
    assert_eq!(csvs[0], csvs[1]);
}
