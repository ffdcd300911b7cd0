//! The acceptance gate: every shipped criterion must pass, at the pinned
//! tolerances, printing one line per criterion.

use std::collections::BTreeMap;

use plaplace::acceptance::verify_suite;

#[test]
fn all_acceptance_criteria_pass() {
    let out = std::env::temp_dir().join(format!("plaplace-acceptance-{}", std::process::id()));
    let summary = verify_suite(&out, &BTreeMap::new()).expect("suite runs");
    for c in &summary.criteria {
        assert!(
            c.pass,
            "criterion {} ({}) failed: target {}, measured {}, {:.2}s (budget {:.0}s)",
            c.id, c.name, c.target, c.measured, c.seconds, c.budget_seconds
        );
    }
    assert_eq!(summary.criteria.len(), 13);
    assert!(summary.all_pass);
    let _ = std::fs::remove_dir_all(&out);
}

#[test]
fn tightened_tolerance_forces_a_failure() {
    // One tolerance tightened 100x: that row fails and the summary reports it.
    let out = std::env::temp_dir().join(format!("plaplace-acceptance-t-{}", std::process::id()));
    let mut tols = BTreeMap::new();
    tols.insert("c7_capacity_gap".to_string(), 1e-4 / 100.0 * 1e-6); // far below reach
    let summary = verify_suite(&out, &tols).expect("suite runs");
    let c7 = summary.criteria.iter().find(|c| c.id == 7).unwrap();
    assert!(
        !c7.pass,
        "criterion 7 should fail at 1e-12: {}",
        c7.measured
    );
    assert!(!summary.all_pass);
    let _ = std::fs::remove_dir_all(&out);
}
