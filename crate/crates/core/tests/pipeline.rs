use std::path::{Path, PathBuf};
use std::process::Command;

use guidewave::config::Config;
use guidewave::pipeline::{run_convergence, run_solve, Reference};
use guidewave::Error;

fn root() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../..")
}

/// Example 1 coarsened for speed.
fn small_config() -> Config {
    let mut cfg = Config::load(&root().join("configs/example1.cfg")).unwrap();
    cfg.mesh.h = 0.1;
    cfg.truncation.n = 12;
    cfg.truncation.m = 3;
    cfg.output.plot_grid = [31, 11];
    cfg
}

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_guidewave"))
}

#[test]
fn shipped_configs_load() {
    for name in ["example1.cfg", "example2_polygonal.cfg"] {
        let cfg = Config::load(&root().join("configs").join(name)).unwrap();
        assert_eq!(Config::from_toml(&cfg.to_toml()).unwrap(), cfg);
    }
}

#[test]
fn config_errors_are_reported() {
    let good = small_config().to_toml();
    let cases = [
        good.replacen("wavenumber = 1.0", "", 1),
        good.replacen("wavenumber = 1.0", "wavenumber = -1.0", 1),
        good.replacen("h = 0.1", "h = 0.0", 1),
        format!("{good}\nunknown_key = 3\n"),
    ];
    for text in cases {
        match Config::from_toml(&text) {
            Err(Error::Config(_)) => {}
            other => panic!("expected a configuration error, got {other:?}"),
        }
    }
}

#[test]
fn unforced_problem_has_zero_field_and_complete_manifest() {
    let mut cfg = small_config();
    cfg.junction.source = None;
    let dir = tempfile::tempdir().unwrap();
    let manifest = run_solve(&cfg, dir.path()).unwrap();
    assert!(manifest.mesh.dofs > 0);
    assert_eq!(manifest.sides.len(), 2);
    for name in ["field.txt", "field.csv", "manifest.json"] {
        assert!(dir.path().join(name).is_file(), "{name} missing");
    }
    let json: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("manifest.json")).unwrap()).unwrap();
    for key in [
        "wavenumber",
        "N",
        "M",
        "eigensolver",
        "tolerances",
        "lap_epsilon",
        "sides",
        "mesh",
        "timings",
        "config",
        "right_guide_modes",
        "left_guide_modes",
    ] {
        assert!(json.get(key).is_some(), "manifest lacks {key}");
    }
    let csv = std::fs::read_to_string(dir.path().join("field.csv")).unwrap();
    let mut rows = 0;
    for line in csv.lines().skip(1) {
        let cols: Vec<f64> = line.split(',').map(|c| c.parse().unwrap()).collect();
        assert_eq!(cols.len(), 6);
        assert_eq!(cols[4], 0.0, "{line}");
        rows += 1;
    }
    assert_eq!(rows, 31 * 11);
}

#[test]
fn second_solve_reuses_cached_bases() {
    let cfg = small_config();
    let dir = tempfile::tempdir().unwrap();
    let first = run_solve(&cfg, dir.path()).unwrap();
    let field = std::fs::read(dir.path().join("field.txt")).unwrap();
    let second = run_solve(&cfg, dir.path()).unwrap();
    assert!(!first.right_guide_modes.cached);
    assert!(second.right_guide_modes.cached && second.left_guide_modes.cached);
    assert_eq!(std::fs::read(dir.path().join("field.txt")).unwrap(), field);
}

#[test]
fn cutoff_wavenumber_aborts() {
    // Constant index 1 in both guides: k = π is the cut-off of the first mode.
    let mut cfg = small_config();
    cfg.wavenumber = std::f64::consts::PI;
    for g in [&mut cfg.left_guide, &mut cfg.right_guide] {
        g.qhat = vec![[0.0, 0.0, 1.0, 0.0]];
    }
    cfg.junction.perturbation = None;
    let dir = tempfile::tempdir().unwrap();
    let err = run_solve(&cfg, dir.path()).unwrap_err();
    let text = err.to_string();
    assert!(
        text.contains("standing wave") || text.contains("non-positive energy"),
        "{text}"
    );
}

#[test]
fn duplicate_strip_counts_give_identical_rows() {
    let cfg = small_config();
    let table = run_convergence(&cfg, &[2, 2, 3], Reference::SelfRichest(4), None).unwrap();
    assert_eq!(table.rows[0], table.rows[1]);
    assert!(table.rows.iter().all(|r| r.1 > 0.0));
}

#[test]
fn convergence_arguments_are_validated() {
    let cfg = small_config();
    assert!(run_convergence(&cfg, &[], Reference::SelfRichest(4), None).is_err());
    assert!(run_convergence(&cfg, &[3, 2], Reference::SelfRichest(4), None).is_err());
    assert!(run_convergence(&cfg, &[2, 4], Reference::SelfRichest(4), None).is_err());
}

#[test]
fn cli_check_passes() {
    let out = bin().arg("check").output().unwrap();
    let text = String::from_utf8_lossy(&out.stdout);
    assert!(out.status.success(), "{text}");
    assert!(text.lines().count() >= 6 && !text.contains("FAIL"));
}

#[test]
fn cli_reports_bad_config_with_exit_code_two() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("bad.cfg");
    std::fs::write(&path, "wavenumber = \"fast\"\n").unwrap();
    let out = bin().args(["solve", path.to_str().unwrap()]).output().unwrap();
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).starts_with("error: configuration error"));
}

#[test]
fn cli_modes_dumps_requested_family() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("small.cfg");
    std::fs::write(&path, small_config().to_toml()).unwrap();
    for side in ["plus", "minus"] {
        let out = bin()
            .args(["modes", path.to_str().unwrap(), "--side", side])
            .output()
            .unwrap();
        assert!(out.status.success());
        let doc: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
        assert_eq!(doc["side"], side);
        assert_eq!(doc["N"], 12);
    }
}
