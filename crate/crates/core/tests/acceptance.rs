//! Runs every acceptance criterion at its stated tolerance and prints one
//! PASS/FAIL line each, then a negative control that must fail. Exits
//! non-zero when any criterion fails or the control passes.
//!
//! `cargo test --test acceptance`; pass criterion ids to run a subset.

use std::process::ExitCode;

use panel_sphericity::dist::normal_cdf;
use panel_sphericity::validate::{run_criterion, Hooks, CRITERIA};

fn shifted_cdf(x: f64) -> f64 {
    normal_cdf(x - 0.5)
}

fn main() -> ExitCode {
    let selected: Vec<u8> = std::env::args()
        .skip(1)
        .filter_map(|a| a.parse().ok())
        .collect();
    let ids: Vec<u8> = CRITERIA
        .iter()
        .map(|(id, _)| *id)
        .filter(|id| selected.is_empty() || selected.contains(id))
        .collect();

    let mut failed = Vec::new();
    for id in &ids {
        let r = run_criterion(*id, &Hooks::default()).expect("known criterion id");
        println!("{r}");
        if !r.passed {
            failed.push(r.name);
        }
    }

    // A shifted normal CDF biases every p-value; the null criterion must notice.
    let control = run_criterion(1, &Hooks { normal_cdf: shifted_cdf }).expect("criterion 1");
    let caught = !control.passed && control.to_string().contains("FAIL null-grj-lpa");
    println!(
        "negative control {}: shifted normal cdf {} criterion 1",
        if caught { "PASS" } else { "FAIL" },
        if caught { "fails" } else { "does not fail" }
    );

    println!("passed={}/{}", ids.len() - failed.len(), ids.len());
    if failed.is_empty() && caught {
        ExitCode::SUCCESS
    } else {
        if !failed.is_empty() {
            println!("failed: {}", failed.join(", "));
        }
        ExitCode::FAILURE
    }
}
