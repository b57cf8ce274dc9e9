//! End-to-end checks of the compiled binary: exit codes, CSV shape,
//! config/flag precedence and bit-level reproducibility.

use std::path::Path;
use std::process::{Command, Output};

fn spinlight(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_spinlight"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout(out: &Output) -> String {
    assert!(
        out.status.success(),
        "expected success, got {:?}\nstderr: {}",
        out.status.code(),
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8(out.stdout.clone()).expect("CSV is UTF-8")
}

fn usage_error(out: &Output) -> String {
    assert_eq!(
        out.status.code(),
        Some(2),
        "expected a usage error\nstdout: {}\nstderr: {}",
        String::from_utf8_lossy(&out.stdout),
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8_lossy(&out.stderr).into_owned()
}

fn read(path: &Path) -> Vec<u8> {
    std::fs::read(path).expect("output file exists")
}

#[test]
fn evolve_emits_the_documented_header_and_lf_rows() {
    let out = stdout(&spinlight(&["evolve", "--kappa-sq", "1", "--t-end", "1"]));
    let mut lines = out.lines();
    assert_eq!(
        lines.next().unwrap(),
        "t,kappa_sq_t,theta,g11sd,g22sd,g33sd,g44sd,delta,geof,logneg"
    );
    assert!(!out.contains('\r'), "line endings must be bare LF");
    assert!(out.ends_with('\n'));
    let first = lines.next().unwrap();
    assert!(first.starts_with("0,"), "series starts at t = 0: {first}");
    assert_eq!(first.split(',').count(), 10);
}

#[test]
fn zero_coupling_stays_separable_for_every_engine() {
    for engine in ["discrete", "ode", "doubling", "analytic"] {
        let out = stdout(&spinlight(&[
            "evolve", "--kappa-sq", "0", "--t-end", "1", "--engine", engine,
        ]));
        for line in out.lines().skip(1) {
            let fields: Vec<&str> = line.split(',').collect();
            assert_eq!(fields[8], "0", "geof stays zero under engine {engine}: {line}");
        }
    }
}

#[test]
fn doubling_refuses_time_dependent_flows() {
    let err = usage_error(&spinlight(&[
        "evolve", "--alpha0", "10", "--eta", "1", "--t-end", "1", "--engine", "doubling",
    ]));
    assert!(
        err.contains("constant coefficients required"),
        "stderr: {err}"
    );
}

#[test]
fn bad_invocations_exit_with_code_two() {
    // No coupling at all.
    usage_error(&spinlight(&["evolve", "--t-end", "1"]));
    // alpha0 without decay cannot fix the measurement rate.
    usage_error(&spinlight(&["evolve", "--alpha0", "30", "--t-end", "1"]));
    // Missing duration.
    usage_error(&spinlight(&["evolve", "--kappa-sq", "1"]));
    // Empty ensemble.
    usage_error(&spinlight(&[
        "trajectories", "--kappa-sq", "1", "--t-end", "0.1", "--ntraj", "0",
    ]));
    // Too many sweep axes.
    usage_error(&spinlight(&[
        "sweep", "--t-end", "1", "--axis", "kappa_sq=1,2", "--axis", "omega=0,1",
        "--axis", "eta=0,1",
    ]));
    // Unknown preset.
    let err = usage_error(&spinlight(&["figure", "fig9"]));
    assert!(err.contains("fig9"), "stderr names the bad preset: {err}");
}

#[test]
fn reruns_are_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("a.csv");
    let b = dir.path().join("b.csv");
    for (path, _) in [(&a, 0), (&b, 1)] {
        let out = spinlight(&[
            "evolve", "--kappa-sq", "2", "--omega", "3", "--t-end", "1.5",
            "--out", path.to_str().unwrap(),
        ]);
        stdout(&out);
    }
    assert_eq!(read(&a), read(&b), "deterministic evolution must reproduce exactly");

    for (path, _) in [(&a, 0), (&b, 1)] {
        let out = spinlight(&[
            "trajectories", "--kappa-sq", "1", "--t-end", "0.2", "--tau", "0.01",
            "--ntraj", "25", "--seed", "99", "--out", path.to_str().unwrap(),
        ]);
        stdout(&out);
    }
    assert_eq!(read(&a), read(&b), "a fixed seed must reproduce the ensemble exactly");
}

#[test]
fn config_file_matches_flags_and_flags_override() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.conf");
    std::fs::write(
        &cfg,
        "# probe settings\n[run]\nalpha0 = 25\neta = 0.5\nt_end = 1.0\n",
    )
    .unwrap();

    let from_config = stdout(&spinlight(&["evolve", "--config", cfg.to_str().unwrap()]));
    let from_flags = stdout(&spinlight(&[
        "evolve", "--alpha0", "25", "--eta", "0.5", "--t-end", "1",
    ]));
    assert_eq!(from_config, from_flags);

    let overridden = stdout(&spinlight(&[
        "evolve", "--config", cfg.to_str().unwrap(), "--eta", "1",
    ]));
    let direct = stdout(&spinlight(&[
        "evolve", "--alpha0", "25", "--eta", "1", "--t-end", "1",
    ]));
    assert_eq!(overridden, direct);
    assert_ne!(from_config, overridden, "the eta flag must actually change the run");
}

#[test]
fn unknown_config_keys_are_rejected_with_a_location() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("bad.conf");
    std::fs::write(&cfg, "alpha0 = 25\nbanana = 7\n").unwrap();
    let err = usage_error(&spinlight(&["evolve", "--config", cfg.to_str().unwrap()]));
    assert!(err.contains("banana"), "stderr: {err}");
    assert!(err.contains(":2"), "stderr points at the line: {err}");
}

#[test]
fn sweep_emits_one_row_per_grid_cell() {
    let out = stdout(&spinlight(&[
        "sweep", "--t-end", "1", "--axis", "kappa_sq=1,2,4", "--axis", "omega=0:10:2",
        "--reduce", "peak",
    ]));
    let lines: Vec<&str> = out.lines().collect();
    assert_eq!(lines[0], "kappa_sq,omega,t,delta,geof,logneg");
    assert_eq!(lines.len(), 1 + 3 * 2, "3x2 grid plus header");
    assert!(lines[1].starts_with("1,0,"));
    assert!(lines[2].starts_with("1,10,"));
    assert!(lines[6].starts_with("4,10,"));
}

#[test]
fn sweep_death_cells_can_be_empty() {
    // A lossless probe never disentangles, so every death cell is blank.
    let out = stdout(&spinlight(&[
        "sweep", "--t-end", "1", "--axis", "kappa_sq=1,2", "--reduce", "death",
    ]));
    let lines: Vec<&str> = out.lines().collect();
    assert_eq!(lines[0], "kappa_sq,t,delta,geof,logneg");
    assert_eq!(lines[1], "1,,,,");
    assert_eq!(lines[2], "2,,,,");
}

#[test]
fn figure_presets_start_with_their_headers() {
    let out = stdout(&spinlight(&["figure", "fig2"]));
    assert_eq!(
        out.lines().next().unwrap(),
        "kappa_sq_t,theta,delta,geof,logneg"
    );
    let out = stdout(&spinlight(&["figure", "fig3"]));
    assert_eq!(out.lines().next().unwrap(), "eta_t,geof_ode,geof_analytic");
}

#[test]
fn trajectories_report_every_member_and_a_summary() {
    let dir = tempfile::tempdir().unwrap();
    let records = dir.path().join("records.csv");
    let out = stdout(&spinlight(&[
        "trajectories", "--kappa-sq", "1", "--t-end", "0.1", "--tau", "0.01",
        "--ntraj", "8", "--seed", "5", "--records", records.to_str().unwrap(),
    ]));
    let lines: Vec<&str> = out.lines().collect();
    assert_eq!(
        lines[0],
        "kind,index,seed,x_a1,p_a1,x_a2,p_a2,mean_p,var_mean_p,stderr_var,stderr_mean"
    );
    assert_eq!(lines.len(), 1 + 8 + 1, "8 members plus the ensemble row");
    for (i, line) in lines[1..9].iter().enumerate() {
        assert!(line.starts_with(&format!("trajectory,{i},")), "row {i}: {line}");
    }
    let summary = lines[9];
    assert!(summary.starts_with("ensemble,,5,"), "summary row: {summary}");
    assert_eq!(summary.split(',').count(), 11);

    let dump = String::from_utf8(read(&records)).unwrap();
    let dump_lines: Vec<&str> = dump.lines().collect();
    assert_eq!(
        dump_lines[0],
        "index,seed,slice,t,outcome,x_a1,p_a1,x_a2,p_a2"
    );
    // 8 trajectories x (initial boundary + 10 slices).
    assert_eq!(dump_lines.len(), 1 + 8 * 11);
    assert!(dump_lines[1].starts_with("0,"));
    let initial: Vec<&str> = dump_lines[1].split(',').collect();
    assert_eq!(initial[2], "0");
    assert_eq!(initial[4], "", "no detector read at the initial boundary");
    assert_eq!(initial[5..9], ["0", "0", "0", "0"]);
}
