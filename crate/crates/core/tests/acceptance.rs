//! Runs every acceptance criterion at full sample size and prints one line
//! per criterion. Exits non-zero if any criterion does not pass.

use hciz::validate::{run_criterion, Criterion, ValidationOptions};

fn main() {
    let opts = ValidationOptions::default();
    let mut failed = Vec::new();
    for c in Criterion::ALL {
        match run_criterion(c, &opts) {
            Ok(check) => {
                println!("{}", check.summary());
                for note in &check.notes {
                    println!("    note: {note}");
                }
                for (label, d) in &check.diagnostics {
                    println!(
                        "    chains {label}: psrf {:.4}, ess {:.0}, acceptance {:.3}",
                        d.psrf, d.effective_sample_size, d.acceptance_rate
                    );
                }
                if !check.passed() {
                    failed.push(c);
                }
            }
            Err(e) => {
                println!("criterion {} {c}: FAIL (error: {e})", c.number());
                failed.push(c);
            }
        }
    }
    if failed.is_empty() {
        println!("acceptance: all {} criteria passed", Criterion::ALL.len());
    } else {
        let names: Vec<String> = failed.iter().map(|c| c.to_string()).collect();
        println!("acceptance: failed {}", names.join(", "));
        std::process::exit(1);
    }
}
