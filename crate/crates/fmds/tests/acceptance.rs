//! Acceptance gate: one test per verification suite, each printing a
//! pass/fail line per sub-check plus a criterion verdict, and enforcing
//! the suite's runtime budget.
//!
//! Suites are serialized through a mutex so each one gets the machine to
//! itself and the wall-clock budgets mean something.

use std::sync::Mutex;
use std::time::Instant;

use fmds::suites::run_suite;

const SEED: u64 = 20260826;

static GATE: Mutex<()> = Mutex::new(());

fn run(name: &str, budget_secs: f64) {
    let _lock = GATE.lock().unwrap_or_else(|e| e.into_inner());
    let start = Instant::now();
    let report = run_suite(name, SEED).expect("suite runner failed");
    let elapsed = start.elapsed().as_secs_f64();
    for line in report.summary_lines() {
        println!("  {line}");
    }
    println!(
        "[{}] {} ({elapsed:.1}s, budget {budget_secs:.0}s)",
        if report.passed() { "PASS" } else { "FAIL" },
        report.suite
    );
    assert!(
        report.passed(),
        "suite {name} failed:\n{}",
        report.summary_lines().join("\n")
    );
    assert!(
        elapsed <= budget_secs,
        "suite {name} exceeded its runtime budget: {elapsed:.1}s > {budget_secs:.0}s"
    );
}

#[test]
fn criterion_01_closed_form_agreement() {
    run("closed-forms", 30.0);
}

#[test]
fn criterion_02_pca_cs_equivalence() {
    run("pca-cs-equivalence", 10.0);
}

#[test]
fn criterion_03_cs_exactness() {
    run("cs-exactness", 5.0);
}

#[test]
fn criterion_04_isomap_consistency() {
    run("isomap-consistency", 120.0);
}

#[test]
fn criterion_05_uniform_blowup() {
    run("uniform-blowup", 60.0);
}

#[test]
fn criterion_06_timewarp_convergence() {
    run("timewarp-convergence", 60.0);
}

#[test]
fn criterion_07_sample_consistency() {
    run("sample-consistency", 120.0);
}

#[test]
fn criterion_08_tensor_probes() {
    run("tensor-probes", 30.0);
}

#[test]
fn criterion_09_oracle_equivalence() {
    run("oracle-equivalence", 60.0);
}

#[test]
fn criterion_10_schoenberg() {
    run("schoenberg", 5.0);
}
