//! Compare one to four latent classes on a simulated dataset by AIC, BIC,
//! ICL-BIC and the entropy index.
//!
//! cargo run --release --example choose_classes -- [scenario]

use lcsurv::selection::{select_num_classes, Criterion};
use lcsurv::sim::{generate_replicate, Scenario, ScenarioId};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let id: ScenarioId = std::env::args().nth(1).as_deref().unwrap_or("I").parse()?;
    let scenario = Scenario::builtin(id, 1000, 8);
    let sim = generate_replicate(&scenario, 0)?;
    let config = scenario.model_config().with_starts(3).with_seed(8);

    let selection = select_num_classes(&sim.data, &config, &[1, 2, 3, 4])?;
    println!("scenario {id} (true L = {})", scenario.num_classes);
    println!(
        "{:>2} {:>11} {:>4} {:>10} {:>10} {:>10} {:>8} {:>9}",
        "L", "loglik", "r", "AIC", "BIC", "ICL-BIC", "entropy", "converged"
    );
    for row in &selection.table {
        println!(
            "{:>2} {:>11.3} {:>4} {:>10.2} {:>10.2} {:>10.2} {:>8.4} {:>9}",
            row.num_classes, row.loglik, row.num_params, row.aic, row.bic, row.icl_bic, row.entropy_index, row.converged
        );
    }
    for (l, reason) in &selection.failed {
        println!("L={l} failed: {reason}");
    }
    for c in Criterion::ALL {
        println!("{:<8} -> L = {}", c.name(), selection.best_for(c).map_or("-".into(), |l| l.to_string()));
    }
    Ok(())
}
