//! Runs all eleven acceptance criteria and prints one line per criterion.

use qhm::config::RunConfig;
use qhm::suites::{run_criterion, CRITERIA};

fn main() {
    let cfg = RunConfig::default();
    cfg.validate().expect("default configuration is valid");
    let mut failed = Vec::new();
    for c in &CRITERIA {
        let (props, timing) = match run_criterion(&cfg, c.id) {
            Ok(r) => r,
            Err(e) => {
                println!("criterion {:>2} FAIL {:<34} error: {e}", c.id, c.title);
                failed.push(c.id);
                continue;
            }
        };
        let ok = props.iter().all(|p| p.passed) && timing.elapsed_s <= timing.budget_s;
        let worst = props
            .iter()
            .find(|p| !p.passed)
            .or_else(|| props.first())
            .map(|p| format!("{} = {:.3e} (limit {:.3e})", p.name, p.measured, p.limit))
            .unwrap_or_default();
        println!(
            "criterion {:>2} {} {:<34} {:>7.1}s/{:>4.0}s  {}",
            c.id,
            if ok { "PASS" } else { "FAIL" },
            c.title,
            timing.elapsed_s,
            timing.budget_s,
            worst
        );
        for p in props.iter().filter(|p| !p.passed) {
            println!("    failed: {} measured {:e} limit {:e} ({})", p.name, p.measured, p.limit, p.detail);
        }
        if !ok {
            failed.push(c.id);
        }
    }
    if !failed.is_empty() {
        eprintln!("failed criteria: {failed:?}");
        std::process::exit(1);
    }
    println!("all {} acceptance criteria passed", CRITERIA.len());
}
