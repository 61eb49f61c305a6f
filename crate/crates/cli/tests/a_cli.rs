use std::path::Path;
use std::process::Command;

use landauer_runner::output::{Meta, Table, VerdictKind};
use landauer_runner::plot::emit_plots;
use landauer_runner::{run_scenario, CliError, Overrides, ScenarioConfig};

fn landauer(args: &[&str]) -> (i32, String, String) {
    let out = Command::new(env!("CARGO_BIN_EXE_landauer"))
        .args(args)
        .env("RUST_LOG", "warn")
        .output()
        .unwrap();
    (
        out.status.code().unwrap(),
        String::from_utf8_lossy(&out.stdout).into_owned(),
        String::from_utf8_lossy(&out.stderr).into_owned(),
    )
}

fn preset(name: &str, t_end: Option<f64>, samples: usize) -> ScenarioConfig {
    let mut cfg = ScenarioConfig::preset(name).unwrap();
    Overrides {
        t_end,
        n_samples: Some(samples),
        ..Default::default()
    }
    .apply(&mut cfg)
    .unwrap();
    cfg
}

#[test]
fn successful_run_exits_zero_and_writes_outputs() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("fig2");
    let (code, stdout, _) = landauer(&[
        "run",
        "--scenario",
        "fig2",
        "--samples",
        "21",
        "--out",
        out.to_str().unwrap(),
        "--plots",
    ]);
    assert_eq!(code, 0, "{stdout}");
    for f in [
        "trajectory.csv",
        "bounds.csv",
        "nlp.csv",
        "meta.json",
        "bounds.svg",
    ] {
        assert!(out.join(f).is_file(), "{f}");
    }
}

#[test]
fn out_directory_can_come_from_the_environment() {
    let dir = tempfile::tempdir().unwrap();
    let out = Command::new(env!("CARGO_BIN_EXE_landauer"))
        .args(["run", "--scenario", "fig2", "--samples", "5"])
        .env("LANDAUER_OUT", dir.path())
        .env("RUST_LOG", "warn")
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(0));
    assert!(dir.path().join("meta.json").is_file());
}

#[test]
fn configuration_errors_exit_three() {
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.json");
    std::fs::write(&bad, r#"{"model": {"kind": "erasure", "tau": -1}}"#).unwrap();
    let out = dir.path().join("o");
    let out = out.to_str().unwrap();
    assert_eq!(landauer(&["run", "--scenario", "fig9", "--out", out]).0, 3);
    assert_eq!(
        landauer(&["run", "--config", bad.to_str().unwrap(), "--out", out]).0,
        3
    );
    assert_eq!(
        landauer(&["run", "--config", "/nonexistent.json", "--out", out]).0,
        3
    );
    assert_eq!(landauer(&["run"]).0, 3);
    assert_eq!(
        landauer(&["run", "--scenario", "fig2", "--dt", "-1", "--out", out]).0,
        3
    );
    assert_eq!(landauer(&["frobnicate"]).0, 3);
    assert_eq!(landauer(&["--help"]).0, 0);
}

#[test]
fn unstable_step_exits_one() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().to_str().unwrap();
    let (code, _, stderr) = landauer(&[
        "run",
        "--scenario",
        "fig2",
        "--dt",
        "10",
        "--t-end",
        "10",
        "--out",
        out,
    ]);
    assert_eq!(code, 1, "{stderr}");
    assert!(stderr.contains("stab"), "{stderr}");
}

#[test]
fn violated_bound_exits_two() {
    // the engineered Rydberg channels do not thermalize to any bath, so a
    // cold nominal bath temperature breaks the Landauer lower bound
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("cold.json");
    std::fs::write(
        &cfg,
        r#"{"name": "cold", "model": {"kind": "rydberg"}, "bath_temperature": 0.001,
            "integrator": {"t_end": 500, "n_samples": 11}}"#,
    )
    .unwrap();
    let (code, stdout, _) = landauer(&[
        "run",
        "--config",
        cfg.to_str().unwrap(),
        "--out",
        dir.path().join("o").to_str().unwrap(),
    ]);
    assert_eq!(code, 2, "{stdout}");
    assert!(stdout.contains("landauer_lower") && stdout.contains("FAIL"));
    let meta = Meta::read(&dir.path().join("o/meta.json")).unwrap();
    assert!(!meta.all_hold);
    assert!(!meta.verdict("landauer_lower").unwrap().holds);
    // the reference-temperature bounds do not depend on the bath
    assert!(meta.verdict("heat_bound").unwrap().holds);
    assert!(meta.verdict("gap_identity").unwrap().holds);
}

fn column(t: &Table, name: &str) -> Vec<Option<f64>> {
    t.optional(name).unwrap().to_vec()
}

fn worst_min(v: impl Iterator<Item = f64>) -> f64 {
    v.fold(f64::INFINITY, f64::min)
}

#[test]
fn meta_verdicts_match_the_bounds_table() {
    let dir = tempfile::tempdir().unwrap();
    let summary = run_scenario(&preset("fig2", None, 41), dir.path()).unwrap();
    let meta = Meta::read(&dir.path().join("meta.json")).unwrap();
    assert_eq!(meta, summary.jobs[0].meta);
    let t = Table::read(&dir.path().join("bounds.csv")).unwrap();
    t.check_schema().unwrap();
    assert_eq!(t.len(), 41);

    let q = t.required("Q").unwrap();
    let gap = column(&t, "gap");
    let d = column(&t, "D_inst");
    let upper = column(&t, "upper");
    let lower = column(&t, "lp_lower");

    let close = |name: &str, recomputed: f64| {
        let v = meta.verdict(name).unwrap();
        assert!(
            (v.worst - recomputed).abs() < 1e-13 * (1.0 + recomputed.abs()),
            "{name}: {} vs {recomputed}",
            v.worst
        );
    };
    close("gap_non_negative", worst_min(gap.iter().flatten().copied()));
    close(
        "gap_identity",
        gap.iter()
            .zip(&d)
            .filter_map(|(g, d)| Some((g.as_ref()? - d.as_ref()?).abs()))
            .fold(0.0, f64::max),
    );
    close(
        "heat_bound",
        worst_min(upper.iter().zip(&q).map(|(u, q)| u.unwrap() - q)),
    );
    close(
        "landauer_lower",
        worst_min(lower.iter().zip(&q).map(|(l, q)| q - l.unwrap())),
    );
    assert_eq!(
        meta.verdict("gap_identity").unwrap().kind,
        VerdictKind::Identity
    );
    assert!(meta.all_hold);

    let nlp = Table::read(&dir.path().join("nlp.csv")).unwrap();
    close(
        "nlp_anchored",
        worst_min(nlp.required("slack_anchored").unwrap().into_iter()),
    );
    assert_eq!(meta.config, preset("fig2", None, 41));
}

#[test]
fn undriven_meta_records_degeneracy_and_fidelity() {
    let dir = tempfile::tempdir().unwrap();
    run_scenario(&preset("fig1", Some(100.0), 11), dir.path()).unwrap();
    let meta = Meta::read(&dir.path().join("meta.json")).unwrap();
    assert!(meta.degeneracy.degenerate_hamiltonian);
    assert!(meta.degeneracy.note.is_some());
    let f = meta.final_fidelity.unwrap();
    assert!((0.0..=1.0).contains(&f));
    assert!((meta.reference.beta_r0 - 30.0).abs() < 1e-7);
    assert_eq!(
        meta.integration.steps as f64 * meta.integration.dt_used,
        100.0
    );
    let traj = Table::read(&dir.path().join("trajectory.csv")).unwrap();
    assert_eq!(traj.header.len(), 6 + 9);
    let pops: f64 = (0..9)
        .map(|k| traj.required(&format!("p_{k}")).unwrap()[10])
        .sum();
    assert!((pops - 1.0).abs() < 1e-12);
}

fn read(p: &Path) -> Vec<u8> {
    std::fs::read(p).unwrap()
}

#[test]
fn repeated_runs_are_byte_identical() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    let args = |d: &Path| {
        vec![
            "run".to_string(),
            "--scenario".into(),
            "fig1".into(),
            "--t-end".into(),
            "200".into(),
            "--samples".into(),
            "21".into(),
            "--plots".into(),
            "--out".into(),
            d.to_str().unwrap().into(),
        ]
    };
    for d in [a.path(), b.path()] {
        let argv = args(d);
        let argv: Vec<&str> = argv.iter().map(String::as_str).collect();
        assert_eq!(landauer(&argv).0, 0);
    }
    for f in ["trajectory.csv", "bounds.csv", "meta.json", "bounds.svg"] {
        assert_eq!(read(&a.path().join(f)), read(&b.path().join(f)), "{f}");
    }
}

#[test]
fn svg_from_a_two_row_table() {
    let dir = tempfile::tempdir().unwrap();
    run_scenario(&preset("fig1", Some(1.0), 2), dir.path()).unwrap();
    assert_eq!(
        Table::read(&dir.path().join("bounds.csv")).unwrap().len(),
        2
    );
    let path = emit_plots(dir.path()).unwrap();
    let svg = std::fs::read_to_string(path).unwrap();
    assert!(svg.starts_with("<?xml"));
    assert!(svg.contains(r#"version="1.1""#));
    assert!(svg.contains("<polyline"));
    assert!(svg.trim_end().ends_with("</svg>"));
}

#[test]
fn plotting_rejects_an_unexpected_header() {
    let dir = tempfile::tempdir().unwrap();
    run_scenario(&preset("fig1", Some(1.0), 2), dir.path()).unwrap();
    let p = dir.path().join("bounds.csv");
    let text = std::fs::read_to_string(&p)
        .unwrap()
        .replacen("Q_u", "Qu", 1);
    std::fs::write(&p, text).unwrap();
    assert!(matches!(emit_plots(dir.path()), Err(CliError::Schema(_))));
}

#[test]
fn sweep_runs_each_entry_into_its_own_directory() {
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = preset("figS1", None, 11);
    cfg.outputs.plots = true;
    let summary = run_scenario(&cfg, dir.path()).unwrap();
    assert_eq!(summary.jobs.len(), 3);
    assert_eq!(summary.exit_code(), 0);
    for (job, label) in summary.jobs.iter().zip(["tau_5", "tau_10", "tau_20"]) {
        assert_eq!(job.dir, dir.path().join(label));
        assert_eq!(job.meta.scenario, format!("figS1/{label}"));
        assert!(job.dir.join("bounds.svg").is_file());
    }
    assert!(dir.path().join("sweep.svg").is_file());
}

#[test]
fn custom_model_file_relative_to_config() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(
        dir.path().join("qubit.json"),
        r#"{"hamiltonian": [[0.5, 0], [0, -0.5]],
            "jumps": [{"rate": 0.2, "operator": [[0, 0], [1, 0]]}],
            "target_state": [0, 1]}"#,
    )
    .unwrap();
    let cfg_path = dir.path().join("run.json");
    std::fs::write(
        &cfg_path,
        r#"{"name": "qubit", "model": {"kind": "custom", "path": "qubit.json"},
            "initial_state": {"kind": "pure", "amplitudes": [[0.6, 0], [0.8, 0]]},
            "integrator": {"dt": 0.01, "t_end": 20, "n_samples": 21}}"#,
    )
    .unwrap();
    let cfg = ScenarioConfig::from_path(&cfg_path).unwrap();
    let summary = run_scenario(&cfg, &dir.path().join("o")).unwrap();
    let meta = &summary.jobs[0].meta;
    assert_eq!(meta.model_kind, "custom");
    assert!(meta.all_hold, "{:?}", meta.verdicts);
    // decays towards |1>, the lower level of H = sigma_z / 2
    assert!(meta.final_fidelity.unwrap() > 0.9);
}
