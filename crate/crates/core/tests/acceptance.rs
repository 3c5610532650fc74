//! Runs every acceptance criterion at full size and prints one verdict per
//! criterion. Exits non-zero when a criterion fails that is not listed in
//! `KNOWN_UNATTAINABLE`; those are still printed as FAIL.

use std::collections::BTreeMap;
use std::process::ExitCode;

use charged_capillarity::verify::{CheckResult, Level, Suite, KNOWN_UNATTAINABLE};

fn main() -> ExitCode {
    let suite = Suite::new(Level::Full);
    let mut by_criterion: BTreeMap<u32, Vec<CheckResult>> = BTreeMap::new();
    for id in Suite::ids() {
        let results = suite.run_one(id);
        for r in &results {
            println!("  {}", r.line());
        }
        by_criterion.insert(id.parse().expect("numeric criterion id"), results);
    }
    println!();
    let mut unexpected = Vec::new();
    for (k, results) in &by_criterion {
        let failed: Vec<&str> = results.iter().filter(|r| !r.passed).map(|r| r.id.as_str()).collect();
        let known: Vec<&str> = failed.iter().copied().filter(|id| KNOWN_UNATTAINABLE.contains(id)).collect();
        let verdict = if failed.is_empty() {
            "PASS".to_string()
        } else if known.len() == failed.len() {
            format!("FAIL (known unattainable: {})", known.join(", "))
        } else {
            unexpected.extend(failed.iter().filter(|id| !known.contains(id)).map(|s| s.to_string()));
            format!("FAIL ({})", failed.join(", "))
        };
        let secs: f64 = results.iter().map(|r| r.seconds).fold(0.0, f64::max);
        println!("criterion {k:>2}: {verdict} [{secs:.2} s]");
    }
    if unexpected.is_empty() {
        ExitCode::SUCCESS
    } else {
        println!("unexpected failures: {}", unexpected.join(", "));
        ExitCode::FAILURE
    }
}
