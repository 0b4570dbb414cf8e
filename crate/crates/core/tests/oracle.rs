mod common;

use common::{cox_full_loglik, cox_oracle, invert, naive_breslow, naive_partial_loglik, numeric_information, random_fixture};
use lcsurv::em::{fit, fit_from_weights, OWN_CLASS_WEIGHT};
use lcsurv::inference::{covariance, profile_loglik_at, step_size};
use lcsurv::io::read_dataset_path;
use lcsurv::model::{ModelConfig, PosteriorWeights};
use lcsurv::sim::{generate_replicate, Scenario, ScenarioId};
use nalgebra::DVector;

fn data_path(name: &str) -> std::path::PathBuf {
    std::path::Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/data").join(name)
}

#[test]
fn single_class_matches_brute_force_cox() {
    for seed in 0..20u64 {
        let data = random_fixture(seed, 200, 2, seed % 2 == 1);
        let state = fit(&data, &ModelConfig::new(1, 2)).unwrap();
        assert!(state.converged && state.is_monotone());
        let beta = cox_oracle(&data);
        for k in 0..2 {
            assert!(
                (state.params.gamma[k] - beta[k]).abs() < 1e-6,
                "fixture {seed}: {} vs {}",
                state.params.gamma[k],
                beta[k]
            );
        }
        let (times, cum) = naive_breslow(&data, &beta);
        assert_eq!(state.params.baseline.jump_times(), times.as_slice());
        for (a, b) in state.params.baseline.cumulative().iter().zip(&cum) {
            assert!((a - b).abs() < 1e-8, "fixture {seed}: {a} vs {b}");
        }
    }
}

#[test]
fn toy_fixture_matches_packaged_cox_fit() {
    let data = read_dataset_path(&data_path("toy50.csv")).unwrap();
    let golden: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(data_path("toy50_cox.json")).unwrap()).unwrap();
    let coef: Vec<f64> = serde_json::from_value(golden["coefficients"].clone()).unwrap();
    let times: Vec<f64> = serde_json::from_value(golden["event_times"].clone()).unwrap();
    let left: Vec<f64> = serde_json::from_value(golden["cumulative_hazard_left"].clone()).unwrap();
    let partial: f64 = golden["loglik"].as_f64().unwrap();

    let state = fit(&data, &ModelConfig::new(1, 2)).unwrap();
    for k in 0..2 {
        assert!((state.params.gamma[k] - coef[k]).abs() < 1e-6);
    }
    let beta: Vec<f64> = state.params.gamma.iter().copied().collect();
    assert!((naive_partial_loglik(&data, &beta) - partial).abs() < 1e-6);
    assert_eq!(state.params.baseline.jump_times(), times.as_slice());
    for (t, l) in times.iter().zip(&left) {
        assert!((state.params.baseline.eval_left(*t) - l).abs() < 1e-6);
    }
}

fn se_ratios(seed: u64, n: usize) -> Vec<f64> {
    let data = random_fixture(seed, n, 2, false);
    let config = ModelConfig::new(1, 2);
    let state = fit(&data, &config).unwrap();
    let cov = covariance(&data, &state, &config).unwrap();
    let beta: Vec<f64> = state.params.gamma.iter().copied().collect();
    let inv = invert(&numeric_information(&data, &beta));
    cov.standard_errors()
        .iter()
        .enumerate()
        .map(|(k, se)| se / inv[k][k].sqrt())
        .collect()
}

// The outer-product estimate fluctuates around the observed information by
// up to about 20% on a single n=500 sample, so the 10% agreement is checked
// on the median over fixtures and per coefficient on one large sample.
#[test]
fn single_class_standard_errors_match_inverse_information() {
    let mut ratios: Vec<f64> = (0..20u64).flat_map(|seed| se_ratios(seed, 500)).collect();
    ratios.sort_by(f64::total_cmp);
    let median = 0.5 * (ratios[19] + ratios[20]);
    assert!((median - 1.0).abs() < 0.10, "median ratio {median}");
    for r in se_ratios(99, 5000) {
        assert!((r - 1.0).abs() < 0.10, "ratio {r}");
    }
}

#[test]
fn single_class_profile_is_breslow_plug_in() {
    let data = random_fixture(5, 150, 2, true);
    let config = ModelConfig::new(1, 2);
    let state = fit(&data, &config).unwrap();
    for beta in [[0.0, 0.0], [0.3, -0.7], [-1.0, 0.4]] {
        let terms = profile_loglik_at(&data, &DVector::from_row_slice(&beta), &config, &state).unwrap();
        let total: f64 = terms.iter().sum();
        assert!((total - cox_full_loglik(&data, &beta)).abs() < 1e-8);
    }
}

fn two_class_fit() -> (lcsurv::model::Dataset, ModelConfig, lcsurv::em::EmState) {
    let scenario = Scenario::builtin(ScenarioId::I, 400, 17);
    let sim = generate_replicate(&scenario, 0).unwrap();
    let config = scenario.model_config();
    let w = PosteriorWeights::perturbed(&sim.labels, 2, OWN_CLASS_WEIGHT).unwrap();
    let state = fit_from_weights(&sim.data, &config, &w).unwrap();
    assert!(state.converged);
    (sim.data, config, state)
}

#[test]
fn profile_at_estimate_is_the_fitted_likelihood_and_a_local_maximum() {
    let (data, config, state) = two_class_fit();
    let theta = state.params.theta();
    let at_hat: f64 = profile_loglik_at(&data, &theta, &config, &state).unwrap().iter().sum();
    assert!((at_hat - state.loglik()).abs() < 1e-8, "{at_hat} vs {}", state.loglik());
    let h = step_size(data.len());
    for k in 0..theta.len() {
        let mut values = Vec::new();
        for sign in [1.0, -1.0] {
            let mut t = theta.clone();
            t[k] += sign * h;
            let v: f64 = profile_loglik_at(&data, &t, &config, &state).unwrap().iter().sum();
            assert!(v <= at_hat + 1e-6, "coordinate {k}: {v} > {at_hat}");
            values.push(v);
        }
        // second-order smoothness: the mean of the two sides is below the peak by O(h^2)
        let gap = at_hat - 0.5 * (values[0] + values[1]);
        assert!(gap >= -1e-6 && gap < 1e3 * h * h, "coordinate {k}: gap {gap}");
    }
}

#[test]
fn covariance_is_symmetric_positive_definite() {
    let (data, config, state) = two_class_fit();
    let cov = covariance(&data, &state, &config).unwrap();
    let c = &cov.covariance;
    assert_eq!(c.nrows(), config.num_params());
    assert!((c - c.transpose()).amax() < 1e-10);
    assert!(c.clone().cholesky().is_some());
    assert_eq!(cov.per_subject_profile_scores.shape(), (data.len(), config.num_params()));
}

#[test]
fn no_parameters_gives_empty_covariance() {
    let data = random_fixture(3, 60, 0, false);
    let config = ModelConfig::new(1, 0);
    let state = fit(&data, &config).unwrap();
    let cov = covariance(&data, &state, &config).unwrap();
    assert_eq!(cov.covariance.shape(), (0, 0));
    assert!(cov.standard_errors().is_empty());
}
