//! The thirteen acceptance criteria at full scale, one PASS/FAIL line each.
//! Set `XSENSE_ACCEPTANCE_SEED` to rerun under another master seed.

use std::process::ExitCode;

use xsense_core::verify::{run_criterion, Scale, CRITERIA};

fn main() -> ExitCode {
    let seed = std::env::var("XSENSE_ACCEPTANCE_SEED")
        .ok()
        .and_then(|s| s.parse().ok())
        .unwrap_or(20_240_601);
    let only: Vec<u8> = std::env::args()
        .skip(1)
        .filter(|a| !a.starts_with('-'))
        .filter_map(|a| a.parse().ok())
        .collect();
    println!("acceptance suite, seed {seed}");
    let mut failed = Vec::new();
    for &(id, _) in CRITERIA.iter().filter(|(id, _)| only.is_empty() || only.contains(id)) {
        let outcome = run_criterion(id, Scale::Full, seed);
        println!("{outcome}");
        if !outcome.passed {
            failed.push(id);
        }
    }
    if failed.is_empty() {
        println!("all criteria passed");
        ExitCode::SUCCESS
    } else {
        println!("failed criteria: {failed:?}");
        ExitCode::FAILURE
    }
}
