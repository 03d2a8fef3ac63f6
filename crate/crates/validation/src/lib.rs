//! Reporting helpers for the acceptance suite in `tests/acceptance.rs`.

use std::io::Write;
use std::time::Duration;

/// Prints a PASS/FAIL line straight to the stderr handle, so it survives
/// test output capture, then fails the test if needed.
pub fn verdict(id: u32, name: &str, pass: bool, elapsed: Duration, limit: Duration, detail: &str) {
    let within = elapsed <= limit;
    let line = format!(
        "[{}] criterion {id:>2} {name}: {detail} ({:.2}s, limit {}s)\n",
        if pass && within { "PASS" } else { "FAIL" },
        elapsed.as_secs_f64(),
        limit.as_secs()
    );
    std::io::stderr().write_all(line.as_bytes()).unwrap();
    assert!(pass, "criterion {id} {name}: {detail}");
    assert!(
        within,
        "criterion {id} {name}: took {elapsed:?}, limit {limit:?}"
    );
}

pub fn median(mut xs: Vec<f64>) -> f64 {
    xs.sort_by(f64::total_cmp);
    xs[xs.len() / 2]
}
