//! Predicted survival, Kaplan-Meier curves and censoring-adjusted Brier scores.

use rand::seq::SliceRandom;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::em::fit;
use crate::error::{Error, Result};
use crate::model::{class_membership_probs, linear_predictor, Dataset, ModelConfig, Parameters};
use crate::rng::stream_rng;

/// Right-continuous step survival curve.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SurvivalCurve {
    pub times: Vec<f64>,
    pub values: Vec<f64>,
}

impl SurvivalCurve {
    /// Value at `t`, which is 1 before the first time point.
    pub fn eval(&self, t: f64) -> f64 {
        match self.times.partition_point(|&s| s <= t) {
            0 => 1.0,
            k => self.values[k - 1],
        }
    }

    /// Left limit at `t`.
    pub fn eval_left(&self, t: f64) -> f64 {
        match self.times.partition_point(|&s| s < t) {
            0 => 1.0,
            k => self.values[k - 1],
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum KmTarget {
    Event,
    /// Reverse Kaplan-Meier: censorings are the events.
    Censoring,
}

/// Product-limit estimator with jumps at the distinct target-event times.
pub fn kaplan_meier(data: &Dataset, target: KmTarget) -> SurvivalCurve {
    let mut rows: Vec<(f64, bool)> = data
        .observations()
        .iter()
        .map(|o| {
            let hit = match target {
                KmTarget::Event => o.status,
                KmTarget::Censoring => !o.status,
            };
            (o.time, hit)
        })
        .collect();
    rows.sort_by(|a, b| a.0.total_cmp(&b.0));
    let mut at_risk = rows.len();
    let mut s = 1.0;
    let mut times = Vec::new();
    let mut values = Vec::new();
    let mut k = 0;
    while k < rows.len() {
        let t = rows[k].0;
        let mut end = k;
        let mut hits = 0;
        while end < rows.len() && rows[end].0 == t {
            hits += rows[end].1 as usize;
            end += 1;
        }
        if hits > 0 {
            s *= 1.0 - hits as f64 / at_risk as f64;
            times.push(t);
            values.push(s);
        }
        at_risk -= end - k;
        k = end;
    }
    SurvivalCurve { times, values }
}

/// A fitted model ready to produce survival predictions for new covariates.
#[derive(Debug, Clone)]
pub struct Predictor<'a> {
    pub params: &'a Parameters,
    pub config: &'a ModelConfig,
}

impl<'a> Predictor<'a> {
    pub fn new(params: &'a Parameters, config: &'a ModelConfig) -> Self {
        Predictor { params, config }
    }

    /// `Ŝ(t | x)` at each of `times`, where `x` is the full covariate vector.
    pub fn survival_at(&self, x: &[f64], times: &[f64]) -> Vec<f64> {
        let xm: Vec<f64> = self.config.membership_covariates.iter().map(|&c| x[c]).collect();
        let xs: Vec<f64> = self.config.survival_covariates.iter().map(|&c| x[c]).collect();
        let probs = class_membership_probs(&xm, &self.params.alpha);
        let risks: Vec<f64> = (0..self.config.num_classes)
            .map(|l| linear_predictor(&xs, l, &self.params.gamma).exp())
            .collect();
        times
            .iter()
            .map(|&t| {
                let cum = self.params.baseline.eval(t);
                probs
                    .iter()
                    .zip(&risks)
                    .map(|(p, r)| p * (-cum * r).exp())
                    .sum::<f64>()
                    .clamp(0.0, 1.0)
            })
            .collect()
    }
}

/// `Ŝ(t | x) = Σ_l p_l(x) exp(-Λ(t) e^{η_l(x)})`.
pub fn predicted_survival(x: &[f64], t: f64, params: &Parameters, config: &ModelConfig) -> f64 {
    Predictor::new(params, config).survival_at(x, &[t])[0]
}

/// Covariate-averaged predicted survival, for overlaying on a Kaplan-Meier curve.
pub fn marginal_survival(data: &Dataset, params: &Parameters, config: &ModelConfig, times: &[f64]) -> Vec<f64> {
    let predictor = Predictor::new(params, config);
    let mut total = vec![0.0; times.len()];
    for obs in data.observations() {
        for (acc, s) in total.iter_mut().zip(predictor.survival_at(&obs.covariates, times)) {
            *acc += s;
        }
    }
    total.iter().map(|s| s / data.len() as f64).collect()
}

/// Brier score estimates on a time grid; `None` where the censoring
/// survival estimate is zero.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BrierCurve {
    pub times: Vec<f64>,
    /// Inverse-probability-of-censoring weighted estimate.
    pub bs1: Vec<Option<f64>>,
    /// Estimate imputing censored subjects from the model.
    pub bs2: Vec<Option<f64>>,
    pub folds: usize,
}

/// Both Brier estimators for one test set. `survival(x, times)` returns the
/// model's predicted survival at each time for covariates `x`.
pub fn brier_scores<F>(test: &Dataset, survival: F, g_hat: &SurvivalCurve, grid: &[f64]) -> BrierCurve
where
    F: Fn(&[f64], &[f64]) -> Vec<f64>,
{
    let n = test.len() as f64;
    let mut bs1 = vec![0.0; grid.len()];
    let mut bs2 = vec![0.0; grid.len()];
    for obs in test.observations() {
        let s_grid = survival(&obs.covariates, grid);
        let s_own = survival(&obs.covariates, &[obs.time])[0];
        let g_own = g_hat.eval_left(obs.time);
        for (k, &t) in grid.iter().enumerate() {
            let s = s_grid[k];
            if obs.time > t {
                let g = g_hat.eval(t);
                if g > 0.0 {
                    bs1[k] += (1.0 - s).powi(2) / g;
                }
                bs2[k] += (1.0 - s).powi(2);
            } else if obs.status {
                if g_own > 0.0 {
                    bs1[k] += s * s / g_own;
                }
                bs2[k] += s * s;
            } else {
                // a zero denominator forces s = 0 as well; the subject counts as dead
                let ratio = if s_own > 0.0 { (s / s_own).min(1.0) } else { 0.0 };
                bs2[k] += (1.0 - s).powi(2) * ratio + s * s * (1.0 - ratio);
            }
        }
    }
    let bs1 = grid
        .iter()
        .zip(bs1)
        .map(|(&t, v)| (g_hat.eval(t) > 0.0).then_some(v / n))
        .collect();
    BrierCurve {
        times: grid.to_vec(),
        bs1,
        bs2: bs2.into_iter().map(|v| Some(v / n)).collect(),
        folds: 1,
    }
}

/// Fold labels `0..folds`, assigned separately within events and censorings
/// after a seeded shuffle.
pub fn stratified_folds(data: &Dataset, folds: usize, seed: u64) -> Vec<usize> {
    let mut rng = stream_rng(seed, u64::MAX);
    let mut labels = vec![0; data.len()];
    let mut offset = 0;
    for status in [true, false] {
        let mut idx: Vec<usize> = (0..data.len())
            .filter(|&i| data.observations()[i].status == status)
            .collect();
        idx.shuffle(&mut rng);
        for (k, &i) in idx.iter().enumerate() {
            labels[i] = (k + offset) % folds;
        }
        offset += idx.len();
    }
    labels
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CvBrier {
    pub model: BrierCurve,
    pub competitor: BrierCurve,
    /// Folds dropped because a training fit failed, with the reason.
    pub skipped: Vec<(usize, String)>,
    /// Which data the censoring distribution was estimated from.
    pub censoring_estimate: String,
}

/// K-fold cross-validated Brier curves for `config` and a competitor (usually
/// the single-class Cox model). A fold whose fit fails for either model is
/// dropped for both.
pub fn cross_validated_brier(
    data: &Dataset,
    config: &ModelConfig,
    competitor: &ModelConfig,
    folds: usize,
    grid: &[f64],
    seed: u64,
) -> Result<CvBrier> {
    if folds < 2 {
        return Err(Error::InvalidConfig("need at least two folds".into()));
    }
    let labels = stratified_folds(data, folds, seed);
    let outcomes: Vec<Result<(BrierCurve, BrierCurve)>> = (0..folds)
        .into_par_iter()
        .map(|f| {
            let train_idx: Vec<usize> = (0..data.len()).filter(|&i| labels[i] != f).collect();
            let test_idx: Vec<usize> = (0..data.len()).filter(|&i| labels[i] == f).collect();
            let train = data.subset(&train_idx)?;
            let test = data.subset(&test_idx)?;
            let g_hat = kaplan_meier(&test, KmTarget::Censoring);
            let mut curves = Vec::with_capacity(2);
            for cfg in [config, competitor] {
                let state = fit(&train, cfg)?;
                let predictor = Predictor::new(&state.params, cfg);
                curves.push(brier_scores(&test, |x, t| predictor.survival_at(x, t), &g_hat, grid));
            }
            let competitor_curve = curves.pop().unwrap();
            Ok((curves.pop().unwrap(), competitor_curve))
        })
        .collect();

    let mut model_curves = Vec::new();
    let mut competitor_curves = Vec::new();
    let mut skipped = Vec::new();
    for (f, out) in outcomes.into_iter().enumerate() {
        match out {
            Ok((m, c)) => {
                model_curves.push(m);
                competitor_curves.push(c);
            }
            Err(e) => skipped.push((f, e.to_string())),
        }
    }
    let needed = folds.min(3);
    if model_curves.len() < needed {
        return Err(Error::TooFewFolds {
            succeeded: model_curves.len(),
            folds,
        });
    }
    Ok(CvBrier {
        model: average_curves(&model_curves),
        competitor: average_curves(&competitor_curves),
        skipped,
        censoring_estimate: "test-fold Kaplan-Meier".into(),
    })
}

/// Pointwise mean over folds, ignoring folds where the point is undefined.
pub fn average_curves(curves: &[BrierCurve]) -> BrierCurve {
    let times = curves[0].times.clone();
    let mean = |pick: fn(&BrierCurve) -> &Vec<Option<f64>>, k: usize| {
        let vals: Vec<f64> = curves.iter().filter_map(|c| pick(c)[k]).collect();
        (!vals.is_empty()).then(|| vals.iter().sum::<f64>() / vals.len() as f64)
    };
    BrierCurve {
        bs1: (0..times.len()).map(|k| mean(|c| &c.bs1, k)).collect(),
        bs2: (0..times.len()).map(|k| mean(|c| &c.bs2, k)).collect(),
        folds: curves.len(),
        times,
    }
}

/// Distinct event times in `(0, upper]`.
pub fn event_time_grid(data: &Dataset, upper: f64) -> Vec<f64> {
    data.event_times().into_iter().filter(|&t| t > 0.0 && t <= upper).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{Observation, StepFunction};
    use nalgebra::{DMatrix, DVector};

    fn data(rows: &[(f64, bool)]) -> Dataset {
        Dataset::with_default_names(
            rows.iter()
                .map(|&(t, s)| Observation::new(t, s, vec![0.0]).unwrap())
                .collect(),
        )
        .unwrap()
    }

    #[test]
    fn km_examples() {
        let km = kaplan_meier(&data(&[(1.0, true), (2.0, true), (3.0, true)]), KmTarget::Event);
        assert_eq!(km.times, vec![1.0, 2.0, 3.0]);
        for (v, e) in km.values.iter().zip([2.0 / 3.0, 1.0 / 3.0, 0.0]) {
            assert!((v - e).abs() < 1e-15);
        }
        let km = kaplan_meier(&data(&[(1.0, false), (2.0, true), (3.0, false)]), KmTarget::Event);
        assert_eq!(km.eval(2.0), 0.5);
        assert_eq!(km.eval(1.5), 1.0);
        assert_eq!(km.eval_left(2.0), 1.0);
        let rev = kaplan_meier(&data(&[(1.0, false), (2.0, true), (3.0, false)]), KmTarget::Censoring);
        assert!((rev.eval(1.0) - 2.0 / 3.0).abs() < 1e-15);
        assert_eq!(rev.eval(3.0), 0.0);
    }

    #[test]
    fn constant_half_prediction_scores_quarter() {
        let d = data(&[(1.0, true), (2.0, true), (3.0, true), (4.0, true)]);
        let g = kaplan_meier(&d, KmTarget::Censoring);
        let bc = brier_scores(&d, |_, t| vec![0.5; t.len()], &g, &[0.5, 1.5, 2.5, 3.5]);
        for k in 0..4 {
            assert!((bc.bs1[k].unwrap() - 0.25).abs() < 1e-15);
            assert!((bc.bs2[k].unwrap() - 0.25).abs() < 1e-15);
        }
    }

    #[test]
    fn four_subject_fixture() {
        // subject 2 censored at 1.5; predictor S(t) = exp(-t / 4)
        let d = data(&[(1.0, true), (1.5, false), (2.0, true), (3.0, true)]);
        let g = kaplan_meier(&d, KmTarget::Censoring);
        let s = |t: f64| (-t / 4.0f64).exp();
        let bc = brier_scores(&d, |_, ts| ts.iter().map(|&t| s(t)).collect(), &g, &[2.5]);
        // Ĝ(2.5) = Ĝ(2-) = 2/3 and Ĝ(1-) = 1
        let g = 2.0 / 3.0;
        let st = s(2.5);
        let bs1 = ((1.0 - st).powi(2) / g + st * st + st * st / g) / 4.0;
        let ratio = st / s(1.5);
        let bs2 = ((1.0 - st).powi(2) + st * st + st * st + (1.0 - st).powi(2) * ratio + st * st * (1.0 - ratio)) / 4.0;
        assert!((bc.bs1[0].unwrap() - bs1).abs() < 1e-14);
        assert!((bc.bs2[0].unwrap() - bs2).abs() < 1e-14);
    }

    #[test]
    fn undefined_where_censoring_survival_is_zero() {
        let d = data(&[(1.0, true), (2.0, false)]);
        let g = kaplan_meier(&d, KmTarget::Censoring);
        let bc = brier_scores(&d, |_, t| vec![0.5; t.len()], &g, &[1.5, 2.5]);
        assert!(bc.bs1[0].is_some());
        assert_eq!(bc.bs1[1], None);
    }

    #[test]
    fn two_class_prediction_matches_direct_sum() {
        let config = ModelConfig::new(2, 1);
        let baseline = StepFunction::new(vec![1.0, 2.0], vec![0.3, 0.5]).unwrap();
        let params = Parameters {
            alpha: DMatrix::from_row_slice(1, 2, &[0.4, -1.0]),
            gamma: DVector::from_vec(vec![0.7, -0.2, 1.1]),
            baseline,
        };
        let x = 0.8;
        let p2 = (0.4f64 - x).exp() / (1.0 + (0.4f64 - x).exp());
        let cum = 0.8;
        let expected = (1.0 - p2) * (-cum * (0.7 * x).exp()).exp()
            + p2 * (-cum * (0.7 * x - 0.2 + 1.1 * x).exp()).exp();
        assert!((predicted_survival(&[x], 2.5, &params, &config) - expected).abs() < 1e-14);
        assert_eq!(predicted_survival(&[x], 0.0, &params, &config), 1.0);
    }

    #[test]
    fn folds_are_balanced_within_strata() {
        let rows: Vec<(f64, bool)> = (0..23).map(|i| (1.0 + i as f64, i % 3 != 0)).collect();
        let d = data(&rows);
        let labels = stratified_folds(&d, 5, 9);
        let counts: Vec<usize> = (0..5).map(|f| labels.iter().filter(|&&l| l == f).count()).collect();
        assert!(counts.iter().all(|&c| c == 4 || c == 5));
        assert_eq!(labels, stratified_folds(&d, 5, 9));
    }
}
