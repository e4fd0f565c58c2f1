//! One PASS/FAIL line per acceptance criterion.

use std::time::{Duration, Instant};

use branchlab_core::verify::{criterion_suites, run, VerifyConfig, VerifyReport, SUITES};

const BUDGETS: [(u8, u64); 10] = [
    (1, 1),
    (2, 5),
    (3, 10),
    (4, 30),
    (5, 30),
    (6, 30),
    (7, 60),
    (8, 60),
    (9, 180),
    (10, 300),
];

fn main() {
    let config = VerifyConfig::default();
    let mut failed = 0;
    let mut report = VerifyReport {
        tool_version: String::new(),
        seed: config.seed,
        replicas: config.replicas,
        model_hash: None,
        suites: Vec::new(),
        checks: Vec::new(),
        all_pass: true,
    };
    for (criterion, budget) in BUDGETS {
        let start = Instant::now();
        let part = match run(&config, criterion_suites(criterion)) {
            Ok(r) => r,
            Err(e) => {
                println!("FAIL criterion {criterion}: error: {e}");
                failed += 1;
                continue;
            }
        };
        let elapsed = start.elapsed();
        let in_time = elapsed <= Duration::from_secs(budget);
        let ok = part.all_pass && in_time;
        for c in &part.checks {
            println!("    [{}] {}", c.suite, c.summary);
        }
        println!(
            "{} criterion {criterion}: {} ({:.2}s, budget {budget}s)",
            if ok { "PASS" } else { "FAIL" },
            part.suites.join("+"),
            elapsed.as_secs_f64(),
        );
        if !ok {
            failed += 1;
        }
        report.checks.extend(part.checks);
    }

    // Criterion 11: a full rerun must serialise to the same bytes.
    report.tool_version = env!("CARGO_PKG_VERSION").to_string();
    report.suites = SUITES.iter().map(|s| s.to_string()).collect();
    report.all_pass = report.checks.iter().all(|c| c.pass);
    let first = report.to_json();
    let start = Instant::now();
    let second = run(&config, SUITES).map(|r| r.to_json());
    let same = second.as_deref().map(|s| s == first).unwrap_or(false);
    println!(
        "{} criterion 11: rerun of all suites with seed {} is byte-identical: {same} ({:.2}s)",
        if same { "PASS" } else { "FAIL" },
        config.seed,
        start.elapsed().as_secs_f64(),
    );
    if !same {
        failed += 1;
    }
    println!("{failed} of 11 criteria failed");
}
