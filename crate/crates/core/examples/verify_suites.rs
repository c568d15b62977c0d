//! Runs the named verification suites (default: all but the slow oracle
//! comparison) and prints each check.

use gffpin::cli::{run_suite, SUITES};

fn main() -> gffpin::Result<()> {
    let mut names: Vec<String> = std::env::args().skip(1).collect();
    if names.is_empty() {
        names = SUITES
            .iter()
            .filter(|s| **s != "oracle")
            .map(|s| s.to_string())
            .collect();
    }
    for name in names {
        let report = run_suite(&name, 0)?;
        println!("{name}: {}", if report.passed { "pass" } else { "FAIL" });
        for c in &report.checks {
            println!(
                "  {:<40} {:>14.8} {}",
                c.name,
                c.measured,
                if c.passed { "ok" } else { "fail" }
            );
        }
    }
    Ok(())
}
