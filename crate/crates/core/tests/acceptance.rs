//! Acceptance runner: one PASS/FAIL line per criterion, non-zero exit on any failure.

mod common;

use std::process::ExitCode;
use std::time::Instant;

use common::*;

type Criterion = (&'static str, Box<dyn Fn() -> Outcome>);

fn main() -> ExitCode {
    let criteria: Vec<Criterion> = vec![
        (
            "manufactured solution, (1/5,1,5) alpha=1.3 gamma=0.8",
            Box::new(|| manufactured_row(0.2, 1.3, 0.8, &TABLE_ROW_A)),
        ),
        (
            "manufactured solution, (3,1,5) alpha=1.8 gamma=0.3",
            Box::new(|| manufactured_row(3.0, 1.8, 0.3, &TABLE_ROW_B)),
        ),
        ("self-convergence on (0,2), tau=1/400", Box::new(self_convergence_table)),
        ("operator order suite", Box::new(operator_order_suite)),
        ("coefficient identity suite", Box::new(coefficient_suite)),
        ("matrix property suite", Box::new(matrix_suite)),
        ("stability suite", Box::new(|| stability_suite(&[0.2, 0.1]))),
        ("first-passage desk run", Box::new(survival_desk_run)),
    ];
    let mut failed = 0;
    for (name, check) in &criteria {
        let started = Instant::now();
        let outcome = check();
        let secs = started.elapsed().as_secs_f64();
        match outcome {
            Ok(detail) => println!("PASS  {name} [{secs:.1}s]: {detail}"),
            Err(detail) => {
                failed += 1;
                println!("FAIL  {name} [{secs:.1}s]: {detail}");
            }
        }
    }
    println!("acceptance: {} passed, {failed} failed", criteria.len() - failed);
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
