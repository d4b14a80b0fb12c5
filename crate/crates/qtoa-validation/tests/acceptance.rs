//! Acceptance runner: one PASS/FAIL line per criterion, details underneath,
//! nonzero exit status if any criterion fails.

use std::process::ExitCode;
use std::time::Instant;

fn main() -> ExitCode {
    let start = Instant::now();
    let reports = qtoa_validation::run_all();
    println!();
    for r in &reports {
        println!("criterion {} {} — {}", r.id, if r.pass { "PASS" } else { "FAIL" }, r.title);
        for d in &r.details {
            println!("    {d}");
        }
    }
    let passed = reports.iter().filter(|r| r.pass).count();
    println!();
    println!(
        "acceptance: {passed}/{} criteria passed in {:.1} s",
        reports.len(),
        start.elapsed().as_secs_f64()
    );
    for r in &reports {
        println!("criterion {}: {}", r.id, if r.pass { "PASS" } else { "FAIL" });
    }
    if passed == reports.len() {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
