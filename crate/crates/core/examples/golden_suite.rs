//! Runs the reference fixture checks.

use anticipation::golden::run_golden;

fn main() {
    let checks = run_golden();
    for c in &checks {
        println!("{} {} ({})", if c.passed { "PASS" } else { "FAIL" }, c.name, c.detail);
    }
    if checks.iter().any(|c| !c.passed) {
        std::process::exit(1);
    }
}
