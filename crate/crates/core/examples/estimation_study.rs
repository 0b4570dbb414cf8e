//! Monte-Carlo bias, standard error and coverage study for one scenario.
//!
//! cargo run --release --example estimation_study -- I 1000 100 [--no-se]

use std::time::Instant;

use lcsurv::sim::{run_replicates, InitMode, Scenario, ScenarioId, StudyOptions};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let args: Vec<String> = std::env::args().skip(1).collect();
    let id: ScenarioId = args.first().map_or("I", String::as_str).parse()?;
    let n: usize = args.get(1).map_or(Ok(1000), |s| s.parse())?;
    let replicates: usize = args.get(2).map_or(Ok(50), |s| s.parse())?;
    let standard_errors = !args.iter().any(|a| a == "--no-se");

    let scenario = Scenario::builtin(id, n, 20240601);
    let start = Instant::now();
    let study = run_replicates(
        &scenario,
        &StudyOptions {
            replicates,
            init: InitMode::PerturbedTruth,
            standard_errors,
        },
    )?;
    let s = &study.summary;
    println!(
        "scenario {} n={} R={} ({:.1}s)",
        s.scenario,
        s.n,
        s.replicates,
        start.elapsed().as_secs_f64()
    );
    println!(
        "convergence {:.3}  median entropy {:.4}  median censoring {:.3}  failures {}",
        s.convergence_rate, s.median_entropy, s.median_censoring, s.failures
    );
    println!("{:<18} {:>8} {:>9} {:>8} {:>8} {:>6}", "parameter", "truth", "M.bias", "SE", "SEE", "CP");
    for p in s.parameters.iter().chain([&s.baseline]) {
        println!(
            "{:<18} {:>8.3} {:>9.4} {:>8.4} {:>8} {:>6}",
            p.name,
            p.truth,
            p.median_bias,
            p.sd,
            p.median_see.map_or("-".into(), |v| format!("{v:.4}")),
            p.coverage.map_or("-".into(), |v| format!("{v:.3}")),
        );
    }
    Ok(())
}
