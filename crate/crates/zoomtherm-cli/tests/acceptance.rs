//! Acceptance suite: every criterion runs at its stated tolerance and prints
//! one pass/fail line. The final test drives the installed binary twice to
//! check byte-level determinism of the artifacts.

use std::process::Command;
use zoomtherm_cli::selftest::{run_all, RowResult};

fn check(rows: &[RowResult], id: usize) {
    let row = rows.iter().find(|r| r.id == id).expect("row present");
    println!(
        "{:>2}  {}  {}: {}",
        row.id,
        if row.passed { "PASS" } else { "FAIL" },
        row.name,
        row.detail
    );
    assert!(row.passed, "criterion {id} failed: {}", row.detail);
}

#[test]
fn acceptance_criteria() {
    let rows = run_all(std::thread::available_parallelism().map(|n| n.get()).unwrap_or(1));
    for id in 1..=12 {
        check(&rows, id);
    }
}

#[test]
fn selftest_binary_is_deterministic_and_green() {
    let exe = env!("CARGO_BIN_EXE_zoomtherm");
    let run = || {
        Command::new(exe)
            .arg("selftest")
            .env("ZOOMTHERM_THREADS", "2")
            .output()
            .expect("selftest runs")
    };
    let a = run();
    let b = run();
    assert!(a.status.success(), "selftest exit: {:?}\n{}", a.status, String::from_utf8_lossy(&a.stdout));
    assert_eq!(a.stdout, b.stdout, "selftest output must be byte-identical");
    let table = String::from_utf8_lossy(&a.stdout);
    assert!(table.contains("12/12 rows passed"), "table:\n{table}");
}
