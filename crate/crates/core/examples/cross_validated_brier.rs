//! Five-fold cross-validated Brier scores of a two-class model against the
//! single-class Cox model on one simulated dataset.
//!
//! cargo run --release --example cross_validated_brier -- [scenario]

use lcsurv::model::ModelConfig;
use lcsurv::prediction::cross_validated_brier;
use lcsurv::sim::{generate_replicate, regular_grid, Scenario, ScenarioId};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let id: ScenarioId = std::env::args().nth(1).as_deref().unwrap_or("IV").parse()?;
    let scenario = Scenario::builtin(id, 1000, 5);
    let sim = generate_replicate(&scenario, 0)?;
    let config = scenario.model_config().with_starts(3);
    let cox = ModelConfig::new(1, sim.data.num_covariates());
    let grid = regular_grid(0.5, 5.0);

    let cv = cross_validated_brier(&sim.data, &config, &cox, 5, &grid, 5)?;
    println!(
        "scenario {id}: {} folds used, {} skipped, censoring weights from {}",
        cv.model.folds,
        cv.skipped.len(),
        cv.censoring_estimate
    );
    println!("{:>5} {:>10} {:>10} {:>10} {:>10}", "t", "BS1 L=2", "BS1 Cox", "BS2 L=2", "BS2 Cox");
    let show = |v: Option<f64>| v.map_or("-".to_string(), |x| format!("{x:.4}"));
    for (k, t) in grid.iter().enumerate() {
        println!(
            "{t:>5.2} {:>10} {:>10} {:>10} {:>10}",
            show(cv.model.bs1[k]),
            show(cv.competitor.bs1[k]),
            show(cv.model.bs2[k]),
            show(cv.competitor.bs2[k])
        );
    }
    Ok(())
}
