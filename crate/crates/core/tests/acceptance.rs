//! Acceptance suite: prints one pass/fail line per criterion and exits with
//! a failure status if any criterion fails.  Runs without the libtest
//! harness so that the table is always shown.

use std::process::ExitCode;

use slabwave::acceptance::Suite;

fn main() -> ExitCode {
    let mut suite = Suite::new();
    let mut failed = Vec::new();
    for id in 1..=9 {
        let r = suite.run(id);
        println!("{r}");
        if !r.passed {
            failed.push(r.id);
        }
    }
    if failed.is_empty() {
        println!("acceptance: all 9 criteria passed");
        ExitCode::SUCCESS
    } else {
        println!("acceptance: failed criteria {failed:?}");
        ExitCode::FAILURE
    }
}
