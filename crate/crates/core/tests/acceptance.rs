//! Runs every acceptance criterion and prints one line per criterion.
//!
//! Criteria listed in `KNOWN_UNATTAINABLE` are expected to fail; the target
//! fails if any other criterion fails, or if a known one starts passing.

use std::process::ExitCode;

use nvm_core::acceptance::{run, KNOWN_UNATTAINABLE};

fn main() -> ExitCode {
    println!("running acceptance criteria");
    let outcomes = run(None, |o| println!("{}", o.line()));
    let unexpected: Vec<u8> = outcomes
        .iter()
        .filter(|o| o.passed == o.known_unattainable())
        .map(|o| o.id)
        .collect();
    let passed = outcomes.iter().filter(|o| o.passed).count();
    println!(
        "acceptance: {passed} of {} passed; known unattainable: {KNOWN_UNATTAINABLE:?}",
        outcomes.len()
    );
    if unexpected.is_empty() {
        ExitCode::SUCCESS
    } else {
        println!("unexpected results for criteria {unexpected:?}");
        ExitCode::FAILURE
    }
}
