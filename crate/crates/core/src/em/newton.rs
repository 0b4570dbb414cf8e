use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

pub(crate) const GRAD_TOL: f64 = 1e-8;
pub(crate) const MAX_NEWTON_ITER: usize = 100;
pub(crate) const MAX_HALVINGS: usize = 30;

/// Relative size of an information diagonal below which the coordinate is
/// treated as unidentified.
const FREEZE_RTOL: f64 = 1e-12;

/// Objective value, gradient and information matrix (negative Hessian).
pub(crate) struct Evaluation {
    pub value: f64,
    pub gradient: DVector<f64>,
    pub information: DMatrix<f64>,
}

#[derive(Debug, Clone)]
pub(crate) struct NewtonOutcome {
    pub x: DVector<f64>,
    pub iterations: usize,
    pub frozen: Vec<usize>,
    pub gradient_norm: f64,
    pub converged: bool,
}

pub(crate) struct NewtonProblem<'a> {
    pub what: &'static str,
    pub allow_freeze: bool,
    pub evaluate: &'a mut dyn FnMut(&DVector<f64>) -> Evaluation,
    pub value: &'a mut dyn FnMut(&DVector<f64>) -> f64,
    /// Returns an error when the iterate has run off to infinity.
    pub check: &'a mut dyn FnMut(&DVector<f64>, usize) -> Result<()>,
}

/// Damped Newton ascent on a concave objective. Each step is halved until
/// the objective does not decrease; coordinates with (numerically) zero
/// information are held fixed when `allow_freeze` is set.
pub(crate) fn maximize(problem: NewtonProblem<'_>, x0: DVector<f64>) -> Result<NewtonOutcome> {
    let NewtonProblem {
        what,
        allow_freeze,
        evaluate,
        value,
        check,
    } = problem;
    let dim = x0.len();
    let mut x = x0;
    if dim == 0 {
        return Ok(NewtonOutcome {
            x,
            iterations: 0,
            frozen: Vec::new(),
            gradient_norm: 0.0,
            converged: true,
        });
    }

    let mut frozen = Vec::new();
    let mut last_norm = f64::INFINITY;
    for iter in 0..MAX_NEWTON_ITER {
        let eval = evaluate(&x);
        if !eval.value.is_finite() {
            return Err(Error::NonFinite { what });
        }
        let max_diag = (0..dim)
            .map(|k| eval.information[(k, k)])
            .fold(0.0f64, f64::max);
        let active: Vec<usize> = if allow_freeze {
            let floor = FREEZE_RTOL * max_diag.max(1.0);
            (0..dim)
                .filter(|&k| eval.information[(k, k)] > floor)
                .collect()
        } else {
            (0..dim).collect()
        };
        frozen = (0..dim).filter(|k| !active.contains(k)).collect();

        let g = DVector::from_iterator(active.len(), active.iter().map(|&k| eval.gradient[k]));
        let norm = g.norm();
        last_norm = norm;
        if !norm.is_finite() {
            return Err(Error::NonFinite { what });
        }
        if norm < GRAD_TOL {
            return Ok(NewtonOutcome {
                x,
                iterations: iter,
                frozen,
                gradient_norm: norm,
                converged: true,
            });
        }
        if active.is_empty() {
            break;
        }

        let info = DMatrix::from_fn(active.len(), active.len(), |a, b| {
            eval.information[(active[a], active[b])]
        });
        let chol = info
            .cholesky()
            .ok_or(Error::Singular { what, iterations: iter })?;
        let delta = chol.solve(&g);
        if delta.iter().any(|d| !d.is_finite()) {
            return Err(Error::NonFinite { what });
        }

        // Round-off floor for accepting a step that leaves the value unchanged.
        let slack = 1e-13 * eval.value.abs().max(1.0);
        let mut t = 1.0;
        let mut accepted = None;
        for _ in 0..=MAX_HALVINGS {
            let mut cand = x.clone();
            for (a, &k) in active.iter().enumerate() {
                cand[k] += t * delta[a];
            }
            let v = value(&cand);
            if v.is_finite() && v >= eval.value - slack {
                accepted = Some(cand);
                break;
            }
            t *= 0.5;
        }
        match accepted {
            Some(cand) => {
                x = cand;
                check(&x, iter + 1)?;
            }
            None if norm < 1e-6 => {
                // No representable ascent remains.
                return Ok(NewtonOutcome {
                    x,
                    iterations: iter,
                    frozen,
                    gradient_norm: norm,
                    converged: true,
                });
            }
            None => return Err(Error::StepHalving { what, iterations: iter }),
        }
    }
    Ok(NewtonOutcome {
        x,
        iterations: MAX_NEWTON_ITER,
        frozen,
        gradient_norm: last_norm,
        converged: false,
    })
}
