//! Profile-likelihood standard errors for the finite-dimensional parameters.
//!
//! The covariance of `θ = (α, γ)` is estimated from numerical differences of
//! each subject's profile log-likelihood contribution, where the baseline
//! hazard is re-maximized for every perturbed `θ`.

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;
use statrs::distribution::{ContinuousCDF, Normal};

use crate::em::{profile_baseline, Design, EmState};
use crate::error::{Error, Result};
use crate::model::{Dataset, ModelConfig, Parameters};

/// Aitken tolerance for the inner baseline-only EM loop.
pub const PROFILE_TOL: f64 = 1e-7;

#[derive(Debug, Clone)]
pub struct CovarianceResult {
    pub theta_hat: DVector<f64>,
    pub covariance: DMatrix<f64>,
    /// Difference step `5 / sqrt(n)`.
    pub h_n: f64,
    /// `n x r` matrix of numerical profile scores.
    pub per_subject_profile_scores: DMatrix<f64>,
}

impl CovarianceResult {
    pub fn standard_errors(&self) -> Vec<f64> {
        (0..self.covariance.nrows())
            .map(|k| self.covariance[(k, k)].max(0.0).sqrt())
            .collect()
    }
}

/// Difference step used for the profile scores.
pub fn step_size(n: usize) -> f64 {
    5.0 / (n as f64).sqrt()
}

/// Each subject's observed-data log-likelihood contribution at `theta`, with
/// the baseline hazard profiled out by iterating E-steps and Breslow updates
/// from the fitted state.
pub fn profile_loglik_at(
    data: &Dataset,
    theta: &DVector<f64>,
    config: &ModelConfig,
    warm_start: &EmState,
) -> Result<Vec<f64>> {
    let design = Design::new(data, config)?;
    check_theta(config, theta)?;
    if warm_start.weights.num_subjects() != data.len() {
        return Err(Error::Dimension("warm start was fitted to different data".into()));
    }
    profile_terms(&design, config, theta, warm_start)
}

fn check_theta(config: &ModelConfig, theta: &DVector<f64>) -> Result<()> {
    if theta.len() != config.num_params() {
        return Err(Error::Dimension(format!(
            "theta has length {}, expected {}",
            theta.len(),
            config.num_params()
        )));
    }
    Ok(())
}

fn profile_terms(
    design: &Design,
    config: &ModelConfig,
    theta: &DVector<f64>,
    warm_start: &EmState,
) -> Result<Vec<f64>> {
    let mut params: Parameters = warm_start.params.clone();
    params.set_theta(theta);
    let profiled = profile_baseline(
        design,
        &params.alpha,
        &params.gamma,
        warm_start.weights.matrix().clone(),
        PROFILE_TOL,
        config.max_iterations,
    )?;
    if !profiled.converged {
        return Err(Error::ProfileNotConverged(config.max_iterations));
    }
    Ok(profiled.estep.terms)
}

/// Inverse of the summed outer products of the per-subject central
/// differences `(pl_i(θ + h e_k) - pl_i(θ - h e_k)) / 2h`.
pub fn covariance(data: &Dataset, fit: &EmState, config: &ModelConfig) -> Result<CovarianceResult> {
    let design = Design::new(data, config)?;
    let theta_hat = fit.params.theta();
    check_theta(config, &theta_hat)?;
    let n = data.len();
    let r = theta_hat.len();
    let h_n = step_size(n);

    let columns: Vec<Vec<f64>> = (0..r)
        .into_par_iter()
        .map(|k| {
            let mut plus = theta_hat.clone();
            plus[k] += h_n;
            let mut minus = theta_hat.clone();
            minus[k] -= h_n;
            let up = profile_terms(&design, config, &plus, fit)?;
            let down = profile_terms(&design, config, &minus, fit)?;
            Ok(up.iter().zip(&down).map(|(u, d)| (u - d) / (2.0 * h_n)).collect())
        })
        .collect::<Result<_>>()?;
    let scores = DMatrix::from_fn(n, r, |i, k| columns[k][i]);

    let info = scores.transpose() * &scores;
    let info = (&info + info.transpose()) * 0.5;
    let covariance = if r == 0 {
        info
    } else {
        let chol = info.cholesky().ok_or(Error::SingularCovariance)?;
        let inv = chol.inverse();
        let inv = (&inv + inv.transpose()) * 0.5;
        if inv.clone().cholesky().is_none() {
            return Err(Error::SingularCovariance);
        }
        inv
    };
    Ok(CovarianceResult {
        theta_hat,
        covariance,
        h_n,
        per_subject_profile_scores: scores,
    })
}

/// Wald intervals `θ_k ± z_{(1+level)/2} SE_k`.
pub fn wald_intervals(cov: &CovarianceResult, level: f64) -> Result<Vec<(f64, f64)>> {
    if !(level > 0.0 && level < 1.0) {
        return Err(Error::InvalidConfig(format!("confidence level {level} not in (0, 1)")));
    }
    let z = normal_quantile((1.0 + level) / 2.0);
    Ok(cov
        .theta_hat
        .iter()
        .zip(cov.standard_errors())
        .map(|(&t, se)| (t - z * se, t + z * se))
        .collect())
}

pub fn normal_quantile(p: f64) -> f64 {
    Normal::standard().inverse_cdf(p)
}

pub fn median(values: &[f64]) -> f64 {
    assert!(!values.is_empty(), "median of an empty slice");
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let m = v.len() / 2;
    if v.len() % 2 == 1 {
        v[m]
    } else {
        0.5 * (v[m - 1] + v[m])
    }
}

/// Raw median absolute deviation (no consistency factor).
pub fn mad(values: &[f64]) -> f64 {
    let m = median(values);
    let dev: Vec<f64> = values.iter().map(|v| (v - m).abs()).collect();
    median(&dev)
}

/// Flags estimates whose distance from `truth` exceeds the median distance
/// by more than five median absolute deviations.
pub fn nonconvergence_flag(estimates: &[DVector<f64>], truth: &DVector<f64>) -> Vec<bool> {
    if estimates.is_empty() {
        return Vec::new();
    }
    let norms: Vec<f64> = estimates.iter().map(|e| (e - truth).norm()).collect();
    let cutoff = median(&norms) + 5.0 * mad(&norms);
    norms.iter().map(|&d| d > cutoff).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn result(theta: Vec<f64>, se: Vec<f64>) -> CovarianceResult {
        let r = theta.len();
        CovarianceResult {
            theta_hat: DVector::from_vec(theta),
            covariance: DMatrix::from_diagonal(&DVector::from_iterator(r, se.iter().map(|s| s * s))),
            h_n: 0.1,
            per_subject_profile_scores: DMatrix::zeros(0, r),
        }
    }

    #[test]
    fn wald_examples() {
        let ci = wald_intervals(&result(vec![0.0], vec![1.0]), 0.95).unwrap();
        assert!((ci[0].0 + 1.959964).abs() < 1e-6 && (ci[0].1 - 1.959964).abs() < 1e-6);
        let ci = wald_intervals(&result(vec![2.0], vec![2.0]), 0.5).unwrap();
        assert!((ci[0].0 - (2.0 - 2.0 * 0.67449)).abs() < 1e-4);
        assert!((ci[0].1 - (2.0 + 2.0 * 0.67449)).abs() < 1e-4);
        let ci = wald_intervals(&result(vec![3.0], vec![0.0]), 0.9).unwrap();
        assert_eq!(ci[0], (3.0, 3.0));
        assert!(wald_intervals(&result(vec![0.0], vec![1.0]), 1.0).is_err());
    }

    #[test]
    fn step_size_example() {
        assert!((step_size(1000) - 0.158113883).abs() < 1e-8);
    }

    #[test]
    fn outlier_rule() {
        let truth = DVector::zeros(1);
        let same = vec![DVector::from_vec(vec![0.5]); 4];
        assert_eq!(nonconvergence_flag(&same, &truth), vec![false; 4]);
        let est: Vec<_> = [1.0, 1.0, 1.0, 1.0, 100.0]
            .iter()
            .map(|&v| DVector::from_vec(vec![v]))
            .collect();
        assert_eq!(
            nonconvergence_flag(&est, &truth),
            vec![false, false, false, false, true]
        );
    }

    #[test]
    fn median_and_mad() {
        assert_eq!(median(&[3.0, 1.0, 2.0]), 2.0);
        assert_eq!(median(&[4.0, 1.0, 2.0, 3.0]), 2.5);
        assert_eq!(mad(&[1.0, 2.0, 3.0, 4.0, 100.0]), 1.0);
    }
}
