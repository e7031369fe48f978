use std::process::ExitCode;

use rqsvt_validation::{criteria, evaluate};

fn main() -> ExitCode {
    let mut failed = 0;
    for c in criteria() {
        let o = evaluate(&c);
        let tag = if o.pass { "PASS" } else { "FAIL" };
        println!("criterion {:>2} {tag} {} ({:.2}s): {}", o.id, o.name, o.elapsed.as_secs_f64(), o.detail);
        if !o.pass {
            failed += 1;
        }
    }
    println!("{failed} of 13 criteria failed");
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
