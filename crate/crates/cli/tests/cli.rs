use std::path::Path;
use std::process::{Command, Output};

fn tfim(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_tfim"))
        .args(args)
        .env_remove("TFIM_JOBS")
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

/// Numeric rows of a `.dat` rendering.
fn rows(text: &str) -> Vec<Vec<f64>> {
    text.lines()
        .filter(|l| !l.starts_with('#'))
        .map(|l| l.split_whitespace().map(|x| x.parse().unwrap_or(f64::NAN)).collect())
        .collect()
}

#[test]
fn modes_table_and_regime_error() {
    let o = tfim(&["modes", "--n", "8", "--xi", "1"]);
    assert!(o.status.success());
    assert_eq!(rows(&stdout(&o)).len(), 8);

    let o = tfim(&["modes", "--n", "8", "--xi", "0.5"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("N/(N+1)"));

    let o = tfim(&["modes", "--n", "1", "--xi", "2"]);
    let r = rows(&stdout(&o));
    assert_eq!(r.len(), 1);
    assert!((r[0][1] - 0.25f64.acos()).abs() < 1e-12);
}

#[test]
fn bad_flags_exit_two() {
    assert_eq!(tfim(&["modes", "--n", "many"]).status.code(), Some(2));
    assert_eq!(tfim(&["rms", "--p-min", "1.5"]).status.code(), Some(2));
    assert_eq!(tfim(&["cso", "--n", "4", "--k", "7"]).status.code(), Some(2));
}

#[test]
fn dat_output_has_provenance_and_sixteen_digits() {
    let o = tfim(&["rms", "--kind", "proj", "--n-max", "3"]);
    let text = stdout(&o);
    assert!(text.starts_with("# tfim "));
    assert!(text.contains("# p-min = 0.99"));
    let data: Vec<&str> = text.lines().filter(|l| !l.starts_with('#')).collect();
    assert_eq!(data[0].split_whitespace().nth(1), Some("9.900000000000000e-1"));
}

#[test]
fn projective_series_with_certain_confirmation_is_all_ones() {
    let o = tfim(&["rms", "--kind", "proj", "--p-min", "1", "--n-max", "5"]);
    for r in rows(&stdout(&o)) {
        assert_eq!(r[1], 1.0);
    }
}

#[test]
fn reruns_are_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("a.dat");
    let b = dir.path().join("b.dat");
    for (p, jobs) in [(&a, "1"), (&b, "3")] {
        let o = tfim(&[
            "cso", "--n", "4", "--t-max", "1", "--t-step", "0.1", "--jobs", jobs, "--out",
            p.to_str().unwrap(),
        ]);
        assert!(o.status.success());
    }
    assert_eq!(std::fs::read(&a).unwrap(), std::fs::read(&b).unwrap());
}

#[test]
fn config_file_is_overridden_by_flags() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.toml");
    std::fs::write(&cfg, "n = 3\nxi = 1.5\n").unwrap();
    let o = tfim(&["modes", "--config", cfg.to_str().unwrap(), "--xi", "2"]);
    let text = stdout(&o);
    assert!(text.contains("# xi = 2.0") && text.contains("# n = 3"));
    assert_eq!(rows(&text).len(), 3);

    std::fs::write(&cfg, "bogus = 1\n").unwrap();
    let o = tfim(&["modes", "--config", cfg.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn job_flag_beats_environment() {
    let run = |env: &str, flag: Option<&str>| {
        let mut c = Command::new(env!("CARGO_BIN_EXE_tfim"));
        c.args(["modes", "--n", "2"]).env("TFIM_JOBS", env);
        if let Some(f) = flag {
            c.args(["--jobs", f]);
        }
        c.output().unwrap().status.code()
    };
    assert_eq!(run("0", None), Some(2));
    assert_eq!(run("0", Some("1")), Some(0));
}

#[test]
fn formats_parse() {
    let o = tfim(&["modes", "--n", "3", "--format", "json"]);
    let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(v["rows"].as_array().unwrap().len(), 3);
    let o = tfim(&["modes", "--n", "3", "--format", "csv"]);
    let text = stdout(&o);
    assert_eq!(text.lines().find(|l| !l.starts_with('#')), Some("k,phi,lambda,norm"));
}

#[test]
fn cso_starts_at_two_point_variance() {
    // at t = 0 the block is in the vacuum and C = 2√(p(1 − p)), p = Σ_j h_kj²
    let o = tfim(&["cso", "--n", "4", "--k", "1", "--t-max", "0", "--t-step", "1"]);
    let c0 = rows(&stdout(&o))[0][1];
    let s = tfim_core::OpenChainSpectrum::new(4, 1.0).unwrap();
    let p: f64 = (0..4).map(|j| s.h[(1, j)].powi(2)).sum();
    assert!((c0 - 2.0 * (p * (1.0 - p)).sqrt()).abs() < 1e-10);
}

#[test]
fn ordered_side_plateau_stays_finite() {
    let o = tfim(&["cso", "--inset", "--n", "4", "--k", "1", "--xi-values", "0.85,1.2"]);
    let r = rows(&stdout(&o));
    assert!(r[0][1] > 1e-3, "plateau {}", r[0][1]);
    assert!(r[1][1] < r[0][1]);
}

#[test]
fn oracle_equivalence_passes_and_protocol_is_constant_without_waiting() {
    let o = tfim(&["oracle", "--l", "8", "--n", "2", "--t-max", "2", "--t-step", "0.5"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    assert!(stdout(&o).lines().all(|l| !l.ends_with(" fail")));
    assert!(stdout(&o).contains("# result failures = 0"));

    let o = tfim(&[
        "oracle", "--task", "protocol", "--dt", "0", "--l", "8", "--n", "2", "--n-max", "4",
        "--trajectories", "500",
    ]);
    assert!(o.status.success());
    for r in rows(&stdout(&o)) {
        assert_eq!(r[1], 1.0);
    }
}

fn sweep(dir: &Path, extra: &[&str]) -> Output {
    let mut args = vec![
        "sweep", "--kind", "cso", "--xi-values", "1,1.2,1.5,2", "--n-values", "2,4,8",
        "--k-values", "1", "--t-max", "0.5", "--t-step", "0.25", "--out",
    ];
    args.push(dir.to_str().unwrap());
    args.extend_from_slice(extra);
    tfim(&args)
}

#[test]
fn sweep_writes_cells_and_resumes() {
    let dir = tempfile::tempdir().unwrap();
    let o = sweep(dir.path(), &[]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let files: Vec<_> = std::fs::read_dir(dir.path()).unwrap().collect();
    assert_eq!(files.len(), 13);
    let done = tfim_cli::sweep::completed_files(dir.path()).unwrap();
    assert_eq!(done.len(), 12);
    let manifest = std::fs::read_to_string(dir.path().join("manifest.json")).unwrap();
    assert!(manifest.contains("\"quad_tol\"") && manifest.contains("\"seed\""));

    // drop one cell and rerun: only that cell is recomputed
    let victim = &done[5];
    let before = std::fs::read(&done[0]).unwrap();
    std::fs::remove_file(victim).unwrap();
    let o = sweep(dir.path(), &[]);
    let err = String::from_utf8_lossy(&o.stderr);
    assert!(err.contains("1 cells computed, 11 resumed"), "{err}");
    assert!(victim.is_file());
    assert_eq!(std::fs::read(&done[0]).unwrap(), before);
    assert_eq!(std::fs::read_to_string(dir.path().join("manifest.json")).unwrap(), manifest);

    let o = sweep(dir.path(), &["--fresh"]);
    assert!(String::from_utf8_lossy(&o.stderr).contains("12 cells computed"));
}

#[test]
fn sweep_marks_out_of_domain_cells() {
    let dir = tempfile::tempdir().unwrap();
    let o = tfim(&[
        "sweep", "--kind", "modes", "--xi-values", "0.5,1", "--n-values", "4", "--out",
        dir.path().to_str().unwrap(),
    ]);
    assert!(o.status.success());
    let manifest = std::fs::read_to_string(dir.path().join("manifest.json")).unwrap();
    assert!(manifest.contains("\"invalid\""));
    assert_eq!(tfim_cli::sweep::completed_files(dir.path()).unwrap().len(), 1);
}
