use super::*;
use crate::model::{mixture_loglik, Observation};
use rand::Rng;
use rand_distr::{Distribution, Exp1};

/// Two well separated classes with one covariate in each submodel.
fn two_class_data(n: usize, seed: u64) -> Dataset {
    let mut rng = crate::rng::stream_rng(seed, 0);
    let obs = (0..n)
        .map(|_| {
            let x: f64 = rng.random();
            let p2 = 1.0 / (1.0 + (-(0.5 - x)).exp());
            let class2 = rng.random::<f64>() < p2;
            let eta = if class2 { 2.0 + x } else { -1.0 + x };
            let e: f64 = Exp1.sample(&mut rng);
            let t = e / (0.5 * eta.exp());
            let c = 3.0 * rng.random::<f64>() + 0.5;
            Observation::new(t.min(c), t <= c, vec![x]).unwrap()
        })
        .collect();
    Dataset::with_default_names(obs).unwrap()
}

#[test]
fn aitken_rule() {
    assert!(!aitken_stop(&[-10.0, -9.0, -8.5], 1e-7));
    // geometric sequence with ratio 0.5 has a constant extrapolated limit
    assert!(aitken_stop(&[-10.0, -9.0, -8.5, -8.25], 1e-7));
    // linear growth has ratio one: never converged
    assert!(!aitken_stop(&[-10.0, -9.0, -8.0, -7.0], 1e-7));
    // no movement at all
    assert!(aitken_stop(&[-3.0, -2.0, -2.0], 1e-7));
    assert!(!aitken_stop(&[-4.0, -3.0, -2.5, -2.2], 1e-7));
}

#[test]
fn single_class_has_constant_likelihood() {
    let data = two_class_data(80, 1);
    let state = fit(&data, &ModelConfig::new(1, 1)).unwrap();
    assert!(state.converged);
    assert!(state.iterations <= 3);
    let ll = mixture_loglik(&data, &state.params, &ModelConfig::new(1, 1)).unwrap();
    assert!((ll - state.loglik()).abs() < 1e-9);
}

#[test]
fn two_class_fit_is_monotone_and_converges() {
    let data = two_class_data(300, 2);
    let config = ModelConfig::new(2, 1);
    let state = fit(&data, &config).unwrap();
    assert!(state.converged, "{} iterations", state.iterations);
    assert!(state.is_monotone(), "decrease {}", state.max_decrease());
    let ll = mixture_loglik(&data, &state.params, &config).unwrap();
    assert!((ll - state.loglik()).abs() < 1e-8);
    // the baseline sits at the profile maximizer for the final weights
    let again = breslow_update(&data, &state.weights, &state.params.gamma, &config).unwrap();
    let lam = state.params.baseline.cumulative().last().unwrap();
    assert!((again.cumulative().last().unwrap() - lam).abs() / lam < 1e-4);
}

#[test]
fn more_starts_never_lower_the_likelihood() {
    let data = two_class_data(200, 3);
    let one = fit(&data, &ModelConfig::new(2, 1)).unwrap();
    let many = fit(&data, &ModelConfig::new(2, 1).with_starts(4)).unwrap();
    assert!(many.loglik() >= one.loglik() - 1e-12);
}

#[test]
fn underdetermined_problems_rejected() {
    let data = two_class_data(8, 4);
    let err = fit(&data, &ModelConfig::new(3, 1)).unwrap_err();
    assert!(matches!(err, Error::Underdetermined { n: 8, params: 9 }));
}

#[test]
fn m_steps_do_not_decrease_their_objectives() {
    let data = two_class_data(150, 5);
    let config = ModelConfig::new(2, 1);
    let w = initialize_weights(&data, &config).unwrap();
    let design = Design::new(&data, &config).unwrap();
    let a0 = DMatrix::zeros(1, 2);
    let a1 = m_step_alpha(&data, &w, &a0, &config).unwrap();
    assert!(design.membership_objective(w.matrix(), &a1) >= design.membership_objective(w.matrix(), &a0));
    let g0 = DVector::zeros(config.gamma_len());
    let g1 = m_step_gamma(&data, &w, &g0, &config).unwrap();
    assert!(g1.gradient_norm < 1e-6);
    assert!(design.hazard_objective(w.matrix(), &g1.gamma) >= design.hazard_objective(w.matrix(), &g0));
}

#[test]
fn e_step_rows_sum_to_one() {
    let data = two_class_data(60, 6);
    let config = ModelConfig::new(2, 1);
    let state = fit(&data, &config).unwrap();
    let w = e_step(&data, &state.params, &config).unwrap();
    for row in w.matrix().row_iter() {
        assert!((row.sum() - 1.0).abs() < 1e-12);
    }
}
