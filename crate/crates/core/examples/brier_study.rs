//! Cross-validated Brier curves of the latent class model against Cox
//! regression, summarized by pointwise medians over replicates.
//!
//! cargo run --release --example brier_study -- IV 50

use std::time::Instant;

use lcsurv::sim::{regular_grid, run_brier_study, Scenario, ScenarioId};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let args: Vec<String> = std::env::args().skip(1).collect();
    let id: ScenarioId = args.first().map_or("IV", String::as_str).parse()?;
    let replicates: usize = args.get(1).map_or(Ok(10), |s| s.parse())?;

    let scenario = Scenario::builtin(id, 1000, 11);
    let upper = if scenario.num_classes >= 3 { 5.75 } else { 5.0 };
    let grid = regular_grid(0.25, upper);
    let start = Instant::now();
    let study = run_brier_study(&scenario, replicates, 5, &grid)?;
    println!(
        "scenario {id}, {} replicates used ({:.1}s)",
        study.curves.len(),
        start.elapsed().as_secs_f64()
    );
    let (lca1, cox1) = study.median_bs1();
    let (lca2, cox2) = study.median_bs2();
    let f = |v: Option<f64>| v.map_or("     -".to_string(), |x| format!("{x:.4}"));
    println!("{:>6}  {:>8} {:>8}  {:>8} {:>8}", "t", "LCA BS1", "Cox BS1", "LCA BS2", "Cox BS2");
    for (k, t) in grid.iter().enumerate() {
        println!("{t:>6.2}  {:>8} {:>8}  {:>8} {:>8}", f(lca1[k]), f(cox1[k]), f(lca2[k]), f(cox2[k]));
    }
    Ok(())
}
