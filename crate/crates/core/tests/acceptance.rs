//! Acceptance suite: one PASS/FAIL line per criterion.
//!
//! Criteria 1 to 10 run in-process through `scnls::acceptance`; criterion 11
//! runs `scnls verify` twice with the same seed and compares the outputs.

use std::fs;
use std::path::Path;
use std::process::{Command, ExitCode};

use scnls::acceptance::{run_acceptance, AcceptanceOptions, CriterionResult, DEFAULT_SEED};

fn verify_into(dir: &Path) -> Result<(), String> {
    let status = Command::new(env!("CARGO_BIN_EXE_scnls"))
        .args(["--quiet", "--seed", &DEFAULT_SEED.to_string(), "--out"])
        .arg(dir)
        .arg("verify")
        .status()
        .map_err(|e| e.to_string())?;
    // Exit code 1 means criteria failed, which is reported separately.
    match status.code() {
        Some(0) | Some(1) => Ok(()),
        other => Err(format!("verify exited with {other:?}")),
    }
}

fn listing(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let mut files: Vec<_> = fs::read_dir(dir)
        .into_iter()
        .flatten()
        .flatten()
        .filter(|e| e.path().is_file())
        .map(|e| {
            (
                e.file_name().to_string_lossy().into_owned(),
                fs::read(e.path()).unwrap_or_default(),
            )
        })
        .collect();
    files.sort();
    files
}

fn reproducibility() -> CriterionResult {
    let start = std::time::Instant::now();
    let (mut pass, mut checks) = (true, Vec::new());
    let tmp = tempfile::tempdir().expect("temporary directory");
    let (a, b) = (tmp.path().join("a"), tmp.path().join("b"));
    for dir in [&a, &b] {
        if let Err(e) = verify_into(dir) {
            pass = false;
            checks.push(e);
        }
    }
    let (la, lb) = (listing(&a), listing(&b));
    let names: Vec<&str> = la.iter().map(|f| f.0.as_str()).collect();
    checks.push(format!("{} files: {}", la.len(), names.join(", ")));
    let differing: Vec<&str> = la
        .iter()
        .zip(&lb)
        .filter(|(x, y)| x != y)
        .map(|(x, _)| x.0.as_str())
        .collect();
    let same = !la.is_empty() && la.len() == lb.len() && differing.is_empty();
    checks.push(if same {
        "byte-identical across runs".to_string()
    } else {
        format!("differing: {differing:?}")
    });
    CriterionResult {
        id: 11,
        name: "seeded reproducibility",
        pass: pass && same,
        checks,
        seconds: start.elapsed().as_secs_f64(),
    }
}

fn main() -> ExitCode {
    let jobs = std::thread::available_parallelism().map_or(1, |n| n.get());
    let options = AcceptanceOptions {
        seed: DEFAULT_SEED,
        jobs,
    };
    let report = run_acceptance(&options, |r| println!("{}  [{:.1}s]", r.line(), r.seconds));
    let repro = reproducibility();
    println!("{}  [{:.1}s]", repro.line(), repro.seconds);

    let failed: Vec<u32> = report
        .results
        .iter()
        .chain(std::iter::once(&repro))
        .filter(|r| !r.pass)
        .map(|r| r.id)
        .collect();
    println!("acceptance: {} of 11 criteria pass", 11 - failed.len());
    if failed.is_empty() {
        ExitCode::SUCCESS
    } else {
        println!("failed criteria: {failed:?}");
        ExitCode::FAILURE
    }
}
