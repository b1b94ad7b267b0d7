use std::path::Path;
use std::process::{Command, Output};

use mirrorsim_cli::report::strip_provenance;

fn mirrorsim(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_mirrorsim"))
        .args(args)
        .output()
        .expect("spawn mirrorsim")
}

fn netlist(name: &str) -> String {
    Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("netlists")
        .join(name)
        .display()
        .to_string()
}

#[test]
fn sim_runs_every_shipped_netlist() {
    for n in ["basic_cm.cir", "cascode_cm.cir", "wilson_cm.cir", "memristor_cm.cir"] {
        let out = mirrorsim(&["sim", &netlist(n)]);
        assert!(out.status.success(), "{n}: {}", String::from_utf8_lossy(&out.stderr));
        let text = String::from_utf8(out.stdout).unwrap();
        assert!(text.contains("operating point"), "{n}");
    }
}

#[test]
fn sim_writes_transient_csv() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("rc.cir");
    std::fs::write(
        &path,
        "V1 a 0 SIN(0 1 1k)\nR1 a b 1k\nC1 b 0 100n\n.tran 2m ppp=64 periods=2\n.thd V(b) f0=1k nh=5\n.end\n",
    )
    .unwrap();
    let out_dir = dir.path().join("waves");
    let out = mirrorsim(&["sim", path.to_str().unwrap(), "--out", out_dir.to_str().unwrap()]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let stdout = String::from_utf8(out.stdout).unwrap();
    assert!(stdout.contains("THD of V(b)"));
    let csv = std::fs::read_to_string(out_dir.join("tran0.csv")).unwrap();
    assert!(csv.starts_with("time,"));
    assert_eq!(csv.lines().count(), 1 + 129);
}

#[test]
fn run_writes_results_fits_and_plot_files() {
    let dir = tempfile::tempdir().unwrap();
    let out = mirrorsim(&["run", "dc-ron", "--out", dir.path().to_str().unwrap()]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let results = std::fs::read_to_string(dir.path().join("dc-ron.csv")).unwrap();
    assert!(results.starts_with("# mirrorsim "));
    assert!(results.contains("# generated "));
    let body = strip_provenance(&results);
    assert!(body.starts_with("variant,supply_v,swept,ron_ohm"));
    assert_eq!(body.lines().count(), 1 + 33);
    assert!(dir.path().join("dc-ron_fits.csv").exists());
    let plots = std::fs::read_dir(dir.path().join("plot")).unwrap().count();
    assert_eq!(plots, 3);
}

#[test]
fn config_file_is_used_and_flags_win() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.conf");
    let out_dir = dir.path().join("out");
    std::fs::write(
        &cfg,
        format!(
            "# dc sweep at one supply\nsupplies = 8\nsweep = 500, 525, 550\nout = {}\n",
            out_dir.display()
        ),
    )
    .unwrap();
    let out = mirrorsim(&["run", "dc-ron", "--config", cfg.to_str().unwrap(), "--supplies", "3"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let body = strip_provenance(&std::fs::read_to_string(out_dir.join("dc-ron.csv")).unwrap());
    let rows: Vec<&str> = body.lines().skip(1).collect();
    assert_eq!(rows.len(), 3);
    assert!(rows.iter().all(|r| r.starts_with("memristive,3,")));
}

#[test]
fn unknown_experiment_fails_with_message() {
    let dir = tempfile::tempdir().unwrap();
    let out = mirrorsim(&["run", "nonsense", "--out", dir.path().to_str().unwrap()]);
    assert!(!out.status.success());
    let err = String::from_utf8(out.stderr).unwrap();
    assert!(err.starts_with("error: unknown experiment `nonsense`"), "{err}");
}

#[test]
fn missing_out_dir_fails() {
    let out = mirrorsim(&["run", "dc-ron"]);
    assert!(!out.status.success());
    assert!(String::from_utf8(out.stderr).unwrap().contains("--out"));
}

#[test]
fn broken_netlist_reports_cause() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("bad.cir");
    std::fs::write(&path, "V1 a 0 DC 1\nR1 a b 1k\n.end\n").unwrap();
    let out = mirrorsim(&["sim", path.to_str().unwrap()]);
    assert!(!out.status.success());
    let err = String::from_utf8(out.stderr).unwrap();
    assert!(err.starts_with("error: loading netlist"), "{err}");
    assert!(err.contains("caused by:"), "{err}");
}

#[test]
fn missing_netlist_file_fails() {
    let out = mirrorsim(&["sim", "/nonexistent/x.cir"]);
    assert!(!out.status.success());
    assert!(String::from_utf8(out.stderr).unwrap().contains("reading /nonexistent/x.cir"));
}

#[test]
fn bad_flag_value_fails() {
    let dir = tempfile::tempdir().unwrap();
    let out = mirrorsim(&["run", "freq-thd", "--freqs", "1k,abc", "--out", dir.path().to_str().unwrap()]);
    assert!(!out.status.success());
    assert!(String::from_utf8(out.stderr).unwrap().contains("--freqs"));
}
