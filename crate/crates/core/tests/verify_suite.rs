use rbreuse::verify::{run_all, VerifyOptions};

#[test]
fn reproduction_checks_pass() {
    let outcomes = run_all(&VerifyOptions::default());
    for o in &outcomes {
        println!("{} {}: {}", if o.passed { "PASS" } else { "FAIL" }, o.name, o.detail);
    }
    assert!(outcomes.iter().all(|o| o.passed));
}
