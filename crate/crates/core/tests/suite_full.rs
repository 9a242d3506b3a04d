use steplab::suite::{junit_xml, run_suite, Kernel};
use steplab::Exec;

#[test]
fn full_suite_passes_for_seed_zero() {
    let rep = run_suite(None, 0, Kernel::default(), Exec::default());
    for r in &rep.results {
        println!("{:<55} passed={} trials={} {:?}", r.id, r.outcome.passed, r.outcome.trials, r.outcome.metrics);
        if !r.outcome.passed {
            println!("  witnesses: {:?}", r.outcome.witnesses);
        }
    }
    assert!(rep.uncovered_anchors.is_empty());
    assert!(rep.passed);
    let xml = junit_xml(&rep);
    assert_eq!(xml.matches("<testcase").count(), rep.results.len());
    assert!(!xml.contains("<failure"));
}

#[test]
fn suite_is_deterministic_across_exec_modes() {
    let f = vec!["c0-non-extension".to_string(), "l1-four-ball".to_string()];
    let a = run_suite(Some(&f), 5, Kernel::default(), Exec::Sequential);
    let b = run_suite(Some(&f), 5, Kernel::default(), Exec::Parallel);
    assert_eq!(serde_json::to_string(&a).unwrap(), serde_json::to_string(&b).unwrap());
}
