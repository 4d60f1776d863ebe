use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn repo() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../..")
}

fn scnls(args: &[&str], out: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_scnls"))
        .current_dir(repo())
        .arg("--out")
        .arg(out)
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

#[test]
fn sweep_writes_csv_and_summary() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("run1");
    let o = scnls(&["--config", "configs/transport.cfg", "sweep"], &out);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let csv = fs::read_to_string(out.join("sweep.csv")).unwrap();
    assert!(csv.starts_with("epsilon,metric,value,runtime_s\n"));
    assert_eq!(csv.lines().count(), 1 + 4 * 3);
    let summary: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(out.join("summary.json")).unwrap()).unwrap();
    assert_eq!(summary["all_pass"], true);
    assert!(stdout(&o).contains("[PASS] transport_mismatch_s0"));
}

#[test]
fn jobs_do_not_change_rows() {
    let dir = tempfile::tempdir().unwrap();
    let (a, b) = (dir.path().join("a"), dir.path().join("b"));
    for (out, jobs) in [(&a, "1"), (&b, "4")] {
        let o = scnls(&["--config", "configs/transport.cfg", "--jobs", jobs, "sweep"], out);
        assert!(o.status.success());
    }
    assert_eq!(
        fs::read(a.join("sweep.csv")).unwrap(),
        fs::read(b.join("sweep.csv")).unwrap()
    );
    assert_eq!(
        fs::read(a.join("summary.json")).unwrap(),
        fs::read(b.join("summary.json")).unwrap()
    );
}

#[test]
fn classify_prints_diagnostics_and_verdict() {
    let dir = tempfile::tempdir().unwrap();
    let o = scnls(&["--config", "configs/coherent.cfg", "classify"], dir.path());
    assert!(o.status.success());
    let text = stdout(&o);
    assert!(text.contains("eps*||grad c||"), "{text}");
    assert!(text.contains("generalized wavepacket"), "{text}");
    assert!(
        text.contains("strengthened o-condition: gamma = 0.5 <= 0.5 -> fails"),
        "{text}"
    );

    let o = scnls(&["--config", "configs/three_dim.cfg", "classify"], dir.path());
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    assert!(stdout(&o).contains("regime band eps^4 < |b| <= eps^1.5: inside"));
}

#[test]
fn solve_and_wigner_write_their_files() {
    let dir = tempfile::tempdir().unwrap();
    let o = scnls(&["--config", "configs/coherent.cfg", "solve"], dir.path());
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let conserved = fs::read_to_string(dir.path().join("conserved.csv")).unwrap();
    assert!(conserved.starts_with("t,mass,energy,kinetic,potential\n"));
    assert!(fs::read_to_string(dir.path().join("frames.csv"))
        .unwrap()
        .starts_with("t,x,re,im\n"));

    let o = scnls(
        &["--config", "configs/coherent.cfg", "wigner", "--time", "0.5"],
        dir.path(),
    );
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let norms: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(dir.path().join("wigner_norms.json")).unwrap()).unwrap();
    assert!((norms["fourier_wigner_sup"].as_f64().unwrap() - 1.0).abs() < 1e-10);
    assert!(fs::read_to_string(dir.path().join("wigner.csv"))
        .unwrap()
        .starts_with("x,k,value\n"));
}

#[test]
fn exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    // missing --config
    assert_eq!(scnls(&["sweep"], dir.path()).status.code(), Some(2));
    // malformed configuration
    let bad = dir.path().join("bad.cfg");
    fs::write(&bad, "dim = 1\nepsilons = 0.1, 0.2\n").unwrap();
    assert_eq!(
        scnls(&["--config", bad.to_str().unwrap(), "sweep"], dir.path())
            .status
            .code(),
        Some(2)
    );
    // three-dimensional runs are unsupported, a numerical-side failure
    assert_eq!(
        scnls(&["--config", "configs/three_dim.cfg", "solve"], dir.path())
            .status
            .code(),
        Some(3)
    );
}

#[test]
fn norm_tables_pass() {
    let dir = tempfile::tempdir().unwrap();
    let o = scnls(&["tables", "--norms-only"], dir.path());
    assert_eq!(o.status.code(), Some(0));
    let csv = fs::read_to_string(dir.path().join("tables.csv")).unwrap();
    assert!(csv.starts_with("table,row,cell,predicted_exponent,fitted_exponent,pass\n"));
    assert_eq!(csv.lines().count(), 13);
}
