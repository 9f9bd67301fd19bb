//! Runs every acceptance criterion, prints one line each, and fails if any
//! criterion fails.

use incentive_core::validation;

#[test]
fn acceptance() {
    let reports = validation::run_all();
    for r in &reports {
        println!("{}", r.line());
    }
    let failed: Vec<u8> = reports.iter().filter(|r| !r.passed).map(|r| r.id).collect();
    println!(
        "{} of {} criteria passed",
        reports.len() - failed.len(),
        reports.len()
    );
    assert!(failed.is_empty(), "failed criteria: {failed:?}");
}
