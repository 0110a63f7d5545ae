use std::process::ExitCode;

use clf_verify::{run_all, ACCEPTANCE_SEED};

fn main() -> ExitCode {
    let results = match run_all(ACCEPTANCE_SEED) {
        Ok(r) => r,
        Err(e) => {
            println!("acceptance runs could not be set up: {e}");
            return ExitCode::FAILURE;
        }
    };
    for r in &results {
        println!("{r}");
    }
    let failed: Vec<_> = results.iter().filter(|r| !r.passed).map(|r| r.id.to_string()).collect();
    println!("acceptance: {}/{} criteria passed", results.len() - failed.len(), results.len());
    if failed.is_empty() {
        ExitCode::SUCCESS
    } else {
        println!("failed criteria: {}", failed.join(", "));
        ExitCode::FAILURE
    }
}
