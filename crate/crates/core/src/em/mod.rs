//! EM fitting of the latent class proportional hazards model.
//!
//! Each iteration takes the current posterior weights, solves the two
//! M-step score equations (a weighted multinomial logistic regression for
//! the membership coefficients and a weighted partial-likelihood score for
//! the hazard coefficients), plugs the hazard coefficients into the weighted
//! Breslow estimator, and recomputes the weights by Bayes' rule. Iteration
//! stops on the Aitken-accelerated log-likelihood criterion.

mod design;
mod init;
pub(crate) mod newton;

use std::sync::atomic::{AtomicU64, Ordering};

use nalgebra::{DMatrix, DVector};

pub use design::RiskSetIndex;
pub(crate) use design::{Design, EStep};
pub use init::{initialize_weights, kmeans_1d, random_weights, Kmeans1d, OWN_CLASS_WEIGHT};

use crate::error::{Error, Result};
use crate::model::{Dataset, Initialization, ModelConfig, Parameters, PosteriorWeights, StepFunction};
use newton::{Evaluation, NewtonProblem};

/// Largest per-iteration log-likelihood decrease tolerated as round-off.
pub const MONOTONE_TOL: f64 = 1e-8;

/// Bits of the largest per-iteration decrease seen by any EM run in this process.
static LARGEST_DECREASE: AtomicU64 = AtomicU64::new(0);

/// Largest drop in observed log-likelihood between consecutive iterations
/// across every EM run in this process so far.
pub fn largest_decrease_seen() -> f64 {
    f64::from_bits(LARGEST_DECREASE.load(Ordering::Relaxed))
}

fn record_decrease(d: f64) {
    if d > 0.0 {
        // nonnegative floats order the same as their bit patterns
        LARGEST_DECREASE.fetch_max(d.to_bits(), Ordering::Relaxed);
    }
}

/// Membership linear predictors beyond this magnitude mean the multinomial
/// model has separated (or a class has emptied).
const MEMBERSHIP_BOUND: f64 = 30.0;
/// Hazard linear predictors beyond this magnitude mean a monotone likelihood.
const HAZARD_BOUND: f64 = 60.0;
/// Aitken tolerance for re-maximizing the baseline once the full EM has
/// converged, so the fitted state is a fixed point of the profile loop.
pub const POLISH_TOL: f64 = 1e-10;

#[derive(Debug, Clone)]
pub struct EmState {
    pub params: Parameters,
    /// Posterior weights evaluated at `params`.
    pub weights: PosteriorWeights,
    /// Observed-data log-likelihood after each iteration, followed by the
    /// baseline-only refinement once the EM has converged.
    pub loglik_history: Vec<f64>,
    /// Full EM iterations, excluding the baseline refinement.
    pub iterations: usize,
    pub converged: bool,
    /// Hazard coefficients left at their starting value for lack of information.
    pub frozen_gamma: Vec<usize>,
    /// Which EM start produced this state.
    pub start: usize,
}

impl EmState {
    pub fn loglik(&self) -> f64 {
        self.loglik_history.last().copied().unwrap_or(f64::NEG_INFINITY)
    }

    /// Largest drop between consecutive log-likelihoods (zero when monotone).
    pub fn max_decrease(&self) -> f64 {
        self.loglik_history
            .windows(2)
            .map(|w| w[0] - w[1])
            .fold(0.0, f64::max)
    }

    pub fn is_monotone(&self) -> bool {
        self.max_decrease() <= MONOTONE_TOL
    }
}

#[derive(Debug, Clone)]
pub struct GammaUpdate {
    pub gamma: DVector<f64>,
    /// Coordinates with no information under the given weights.
    pub frozen: Vec<usize>,
    pub iterations: usize,
    pub gradient_norm: f64,
    pub converged: bool,
}

/// Posterior class membership probabilities by Bayes' rule.
pub fn e_step(data: &Dataset, params: &Parameters, config: &ModelConfig) -> Result<PosteriorWeights> {
    let design = Design::new(data, config)?;
    params.validate(config)?;
    design.check_baseline(&params.baseline)?;
    let est = design.e_step(&params.alpha, &params.gamma, &params.baseline)?;
    Ok(PosteriorWeights::from_matrix_unchecked(est.weights))
}

/// Weighted Breslow estimator of the baseline cumulative hazard.
pub fn breslow_update(
    data: &Dataset,
    weights: &PosteriorWeights,
    gamma: &DVector<f64>,
    config: &ModelConfig,
) -> Result<StepFunction> {
    let design = Design::new(data, config)?;
    check_weights(&design, weights)?;
    check_gamma(config, gamma)?;
    design.breslow(weights.matrix(), gamma)
}

/// Newton-Raphson solution of the weighted multinomial logistic score.
pub fn m_step_alpha(
    data: &Dataset,
    weights: &PosteriorWeights,
    alpha_init: &DMatrix<f64>,
    config: &ModelConfig,
) -> Result<DMatrix<f64>> {
    let design = Design::new(data, config)?;
    check_weights(&design, weights)?;
    if alpha_init.nrows() != config.num_classes - 1 || alpha_init.ncols() != config.membership_width() {
        return Err(Error::Dimension("alpha_init does not match the configuration".into()));
    }
    solve_alpha(&design, weights.matrix(), alpha_init.clone())
}

/// Newton-Raphson solution of the weighted partial-likelihood score, with
/// every subject replicated over classes at its posterior weights.
pub fn m_step_gamma(
    data: &Dataset,
    weights: &PosteriorWeights,
    gamma_init: &DVector<f64>,
    config: &ModelConfig,
) -> Result<GammaUpdate> {
    let design = Design::new(data, config)?;
    check_weights(&design, weights)?;
    check_gamma(config, gamma_init)?;
    solve_gamma(&design, weights.matrix(), gamma_init.clone())
}

/// Aitken-accelerated stopping rule on a log-likelihood sequence.
///
/// With `a_k = (l_{k+1} - l_k) / (l_k - l_{k-1})` and the extrapolated limit
/// `lA_{k+1} = l_k + (l_{k+1} - l_k) / (1 - a_k)`, stops once consecutive
/// limits differ by less than `tol`. A sequence that has stopped moving is
/// converged; a ratio of one (no geometric decay) is not.
pub fn aitken_stop(history: &[f64], tol: f64) -> bool {
    let n = history.len();
    if n >= 2 && history[n - 1] == history[n - 2] {
        return true;
    }
    if n < 4 {
        return false;
    }
    let h = &history[n - 4..];
    match (aitken_limit(h[0], h[1], h[2]), aitken_limit(h[1], h[2], h[3])) {
        (Limit::Stalled, _) | (_, Limit::Stalled) => true,
        (Limit::Undefined, _) | (_, Limit::Undefined) => false,
        (Limit::Value(prev), Limit::Value(next)) => (next - prev).abs() < tol,
    }
}

enum Limit {
    Value(f64),
    Stalled,
    Undefined,
}

fn aitken_limit(l0: f64, l1: f64, l2: f64) -> Limit {
    let before = l1 - l0;
    let after = l2 - l1;
    if before == 0.0 {
        return Limit::Stalled;
    }
    let a = after / before;
    let denom = 1.0 - a;
    if !a.is_finite() || denom.abs() < 1e-12 {
        return Limit::Undefined;
    }
    let limit = l1 + after / denom;
    if limit.is_finite() {
        Limit::Value(limit)
    } else {
        Limit::Undefined
    }
}

/// Fits the model, running `config.starts` EM starts and keeping the one
/// with the largest final log-likelihood.
pub fn fit(data: &Dataset, config: &ModelConfig) -> Result<EmState> {
    let design = Design::new(data, config)?;
    check_identifiable(&design, config)?;
    let mut best: Option<EmState> = None;
    let mut first_error = None;
    for start in 0..config.starts {
        let init = if start == 0 {
            config.initialization.clone()
        } else {
            Initialization::Random
        };
        let w0 = init::initialize_with(data, config, &init, start as u64)?;
        match run_em(&design, config, w0.into_matrix(), start) {
            Ok(state) => {
                if best.as_ref().is_none_or(|b| state.loglik() > b.loglik()) {
                    best = Some(state);
                }
            }
            Err(e) => {
                first_error.get_or_insert(e);
            }
        }
    }
    best.ok_or_else(|| first_error.expect("at least one start"))
}

/// Runs a single EM start from the given weights.
pub fn fit_from_weights(
    data: &Dataset,
    config: &ModelConfig,
    weights: &PosteriorWeights,
) -> Result<EmState> {
    let design = Design::new(data, config)?;
    check_identifiable(&design, config)?;
    check_weights(&design, weights)?;
    run_em(&design, config, weights.matrix().clone(), 0)
}

fn check_identifiable(design: &Design, config: &ModelConfig) -> Result<()> {
    let params = config.num_params();
    if design.n <= params {
        return Err(Error::Underdetermined {
            n: design.n,
            params,
        });
    }
    Ok(())
}

fn check_weights(design: &Design, weights: &PosteriorWeights) -> Result<()> {
    if weights.num_subjects() != design.n || weights.num_classes() != design.num_classes {
        return Err(Error::Dimension(format!(
            "weights are {}x{}, expected {}x{}",
            weights.num_subjects(),
            weights.num_classes(),
            design.n,
            design.num_classes
        )));
    }
    Ok(())
}

fn check_gamma(config: &ModelConfig, gamma: &DVector<f64>) -> Result<()> {
    if gamma.len() != config.gamma_len() {
        return Err(Error::Dimension(format!(
            "gamma has length {}, expected {}",
            gamma.len(),
            config.gamma_len()
        )));
    }
    Ok(())
}

pub(crate) fn run_em(
    design: &Design,
    config: &ModelConfig,
    mut weights: DMatrix<f64>,
    start: usize,
) -> Result<EmState> {
    let mut alpha = DMatrix::zeros(config.num_classes - 1, config.membership_width());
    let mut gamma = DVector::zeros(config.gamma_len());
    let mut history = Vec::new();
    let mut last = None;
    for iter in 0..config.max_iterations {
        let step = (|| -> Result<_> {
            alpha = solve_alpha(design, &weights, alpha.clone())?;
            let gu = solve_gamma(design, &weights, gamma.clone())?;
            gamma = gu.gamma;
            let baseline = design.breslow(&weights, &gamma)?;
            let est = design.e_step(&alpha, &gamma, &baseline)?;
            Ok((baseline, est, gu.frozen))
        })()
        .map_err(|e| e.at_iteration(iter))?;
        let (baseline, est, frozen) = step;
        let loglik = est.loglik();
        if let Some(&prev) = history.last() {
            record_decrease(prev - loglik);
        }
        history.push(loglik);
        weights = est.weights;
        let converged = aitken_stop(&history, config.tolerance);
        last = Some((baseline, frozen));
        if converged {
            break;
        }
    }
    let (mut baseline, frozen_gamma) = last.expect("max_iterations > 0");
    let converged = aitken_stop(&history, config.tolerance);
    let iterations = history.len();
    if converged {
        let polished = profile_baseline(design, &alpha, &gamma, weights.clone(), POLISH_TOL, config.max_iterations)?;
        for &v in &polished.history {
            record_decrease(history.last().copied().unwrap_or(v) - v);
            history.push(v);
        }
        baseline = polished.baseline;
        weights = polished.estep.weights;
    }
    Ok(EmState {
        params: Parameters {
            alpha,
            gamma,
            baseline,
        },
        weights: PosteriorWeights::from_matrix_unchecked(weights),
        iterations,
        loglik_history: history,
        converged,
        frozen_gamma,
        start,
    })
}

pub(crate) struct ProfiledBaseline {
    pub baseline: StepFunction,
    pub estep: EStep,
    pub history: Vec<f64>,
    pub converged: bool,
}

/// Alternates Breslow updates and E-steps with `(alpha, gamma)` held fixed,
/// which maximizes the likelihood over the baseline hazard alone.
pub(crate) fn profile_baseline(
    design: &Design,
    alpha: &DMatrix<f64>,
    gamma: &DVector<f64>,
    mut weights: DMatrix<f64>,
    tol: f64,
    max_iterations: usize,
) -> Result<ProfiledBaseline> {
    let mut history = Vec::new();
    let mut iter = 0;
    loop {
        let baseline = design.breslow(&weights, gamma)?;
        let estep = design.e_step(alpha, gamma, &baseline)?;
        history.push(estep.loglik());
        iter += 1;
        let converged = aitken_stop(&history, tol);
        if converged || iter >= max_iterations {
            return Ok(ProfiledBaseline {
                baseline,
                estep,
                history,
                converged,
            });
        }
        weights = estep.weights;
    }
}

pub(crate) fn solve_alpha(
    design: &Design,
    weights: &DMatrix<f64>,
    alpha0: DMatrix<f64>,
) -> Result<DMatrix<f64>> {
    let rows = alpha0.nrows();
    let cols = alpha0.ncols();
    if rows == 0 {
        return Ok(alpha0);
    }
    let to_matrix = |x: &DVector<f64>| DMatrix::from_row_slice(rows, cols, x.as_slice());
    let x0 = DVector::from_iterator(rows * cols, alpha0.transpose().iter().copied());
    let mut evaluate = |x: &DVector<f64>| {
        let (value, gradient, information) = design.membership_derivatives(weights, &to_matrix(x));
        Evaluation {
            value,
            gradient,
            information,
        }
    };
    let mut value = |x: &DVector<f64>| design.membership_objective(weights, &to_matrix(x));
    let mut check = |x: &DVector<f64>, iterations: usize| {
        let a = to_matrix(x);
        for i in 0..design.n {
            let row = design.xm_row(i);
            for r in 0..rows {
                let eta: f64 = (0..cols).map(|c| a[(r, c)] * row[c]).sum();
                if eta.abs() > MEMBERSHIP_BOUND {
                    return Err(Error::Separation { iterations });
                }
            }
        }
        Ok(())
    };
    let out = newton::maximize(
        NewtonProblem {
            what: "membership",
            allow_freeze: false,
            evaluate: &mut evaluate,
            value: &mut value,
            check: &mut check,
        },
        x0,
    )?;
    Ok(to_matrix(&out.x))
}

pub(crate) fn solve_gamma(
    design: &Design,
    weights: &DMatrix<f64>,
    gamma0: DVector<f64>,
) -> Result<GammaUpdate> {
    let mut evaluate = |x: &DVector<f64>| {
        let (value, gradient, information) = design.hazard_derivatives(weights, x);
        Evaluation {
            value,
            gradient,
            information,
        }
    };
    let mut value = |x: &DVector<f64>| design.hazard_objective(weights, x);
    let l_count = design.num_classes;
    let mut check = |x: &DVector<f64>, iterations: usize| {
        let eta = design.hazard_predictors(x);
        for (k, e) in eta.iter().enumerate() {
            if e.abs() > HAZARD_BOUND && weights[(k / l_count, k % l_count)] > 0.0 {
                return Err(Error::Diverged {
                    what: "hazard",
                    iterations,
                });
            }
        }
        Ok(())
    };
    let out = newton::maximize(
        NewtonProblem {
            what: "hazard",
            allow_freeze: true,
            evaluate: &mut evaluate,
            value: &mut value,
            check: &mut check,
        },
        gamma0,
    )?;
    Ok(GammaUpdate {
        gamma: out.x,
        frozen: out.frozen,
        iterations: out.iterations,
        gradient_norm: out.gradient_norm,
        converged: out.converged,
    })
}

#[cfg(test)]
mod tests;
