//! How often each criterion picks each class count across replicates.
//!
//! cargo run --release --example selection_study -- I 100

use std::time::Instant;

use lcsurv::selection::Criterion;
use lcsurv::sim::{run_selection_study, Scenario, ScenarioId};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let args: Vec<String> = std::env::args().skip(1).collect();
    let id: ScenarioId = args.first().map_or("I", String::as_str).parse()?;
    let replicates: usize = args.get(1).map_or(Ok(20), |s| s.parse())?;
    let candidates = [2, 3, 4];

    let scenario = Scenario::builtin(id, 1000, 7);
    let start = Instant::now();
    let study = run_selection_study(&scenario, replicates, &candidates)?;
    println!(
        "scenario {id}, {replicates} replicates, {} failed ({:.1}s)",
        study.failures,
        start.elapsed().as_secs_f64()
    );
    print!("{:<10}", "criterion");
    for l in candidates {
        print!(" {:>7}", format!("L={l}"));
    }
    println!();
    for c in Criterion::ALL {
        print!("{:<10}", c.name());
        for l in candidates {
            print!(" {:>7.2}", study.frequency(c, l));
        }
        println!();
    }
    Ok(())
}
