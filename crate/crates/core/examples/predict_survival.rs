//! Predicted survival for new covariate profiles, and the covariate-averaged
//! curve against the Kaplan-Meier estimate as a goodness-of-fit check.
//!
//! cargo run --release --example predict_survival

use lcsurv::em::fit_from_weights;
use lcsurv::model::PosteriorWeights;
use lcsurv::prediction::{kaplan_meier, marginal_survival, KmTarget, Predictor};
use lcsurv::sim::{generate_replicate, Scenario, ScenarioId};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let scenario = Scenario::builtin(ScenarioId::I, 1000, 3);
    let sim = generate_replicate(&scenario, 0)?;
    let config = scenario.model_config();
    let start = PosteriorWeights::perturbed(&sim.labels, scenario.num_classes, 0.9)?;
    let state = fit_from_weights(&sim.data, &config, &start)?;

    let times = [0.5, 1.0, 2.0, 3.0, 5.0, 8.0];
    let predictor = Predictor::new(&state.params, &config);
    println!("predicted survival");
    print!("{:<14}", "x1, x2");
    for t in times {
        print!(" {:>7}", format!("t={t}"));
    }
    println!();
    for x in [[-1.0, -1.0], [0.0, 0.0], [1.0, 1.0], [1.0, -1.0]] {
        print!("{:<14}", format!("{}, {}", x[0], x[1]));
        for s in predictor.survival_at(&x, &times) {
            print!(" {s:>7.3}");
        }
        println!();
    }

    let km = kaplan_meier(&sim.data, KmTarget::Event);
    let grid: Vec<f64> = (1..=16).map(|k| k as f64 * 0.5).collect();
    let model = marginal_survival(&sim.data, &state.params, &config, &grid);
    println!("\n{:>5} {:>8} {:>8} {:>8}", "t", "KM", "model", "diff");
    let mut worst: f64 = 0.0;
    for (t, m) in grid.iter().zip(&model) {
        let k = km.eval(*t);
        worst = worst.max((k - m).abs());
        println!("{t:>5.1} {k:>8.4} {m:>8.4} {:>8.4}", m - k);
    }
    println!("largest gap {worst:.4}");
    Ok(())
}
