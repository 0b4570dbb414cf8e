//! Fit a latent class model to a CSV file and print estimates with 95% Wald
//! intervals from the profile-likelihood covariance. Without a file, a
//! simulated two-class dataset is written to the temp directory and used.
//!
//! cargo run --release --example quickstart -- [data.csv] [classes]

use std::path::PathBuf;

use lcsurv::em::fit;
use lcsurv::inference::{covariance, wald_intervals};
use lcsurv::io::{read_dataset_path, write_dataset};
use lcsurv::model::ModelConfig;
use lcsurv::sim::{generate_replicate, Scenario, ScenarioId};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let args: Vec<String> = std::env::args().skip(1).collect();
    let path = match args.first() {
        Some(p) => PathBuf::from(p),
        None => {
            let sim = generate_replicate(&Scenario::builtin(ScenarioId::I, 500, 1), 0)?;
            let path = std::env::temp_dir().join("lcsurv_quickstart.csv");
            write_dataset(&sim.data, None, std::fs::File::create(&path)?)?;
            path
        }
    };
    let classes: usize = args.get(1).map_or(Ok(2), |s| s.parse())?;

    let data = read_dataset_path(&path)?;
    println!(
        "{}: n={} events={} covariates={:?}",
        path.display(),
        data.len(),
        data.num_events(),
        data.covariate_names()
    );

    let config = ModelConfig::new(classes, data.num_covariates()).with_starts(5).with_seed(1);
    let state = fit(&data, &config)?;
    println!(
        "loglik {:.4} after {} iterations (converged: {}, start {})",
        state.loglik(),
        state.iterations,
        state.converged,
        state.start
    );

    let cov = covariance(&data, &state, &config)?;
    let intervals = wald_intervals(&cov, 0.95)?;
    let names = config.parameter_names(data.covariate_names());
    println!("{:<22} {:>9} {:>8} {:>20}", "parameter", "estimate", "SE", "95% CI");
    for (k, name) in names.iter().enumerate() {
        let (lo, hi) = intervals[k];
        println!(
            "{name:<22} {:>9.4} {:>8.4} {:>20}",
            cov.theta_hat[k],
            cov.standard_errors()[k],
            format!("({lo:.3}, {hi:.3})")
        );
    }
    Ok(())
}
