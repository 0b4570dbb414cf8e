//! Simulation scenarios and Monte-Carlo replicate studies.
//!
//! Data follow the two-covariate design `x1 ~ Bernoulli(0.5)`,
//! `x2 ~ Uniform(0, 1)` with baseline cumulative hazard `0.1 (e^t - 1)` and
//! censoring at `min(Exponential(rate r), Uniform(5, 6))`.

use std::fmt;
use std::str::FromStr;

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::em::{fit, fit_from_weights};
use crate::error::{Error, Result};
use crate::inference::{covariance, median, nonconvergence_flag, normal_quantile};
use crate::model::{
    class_membership_probs, linear_predictor, Dataset, Initialization, ModelConfig, Observation,
    PosteriorWeights,
};
use crate::prediction::{cross_validated_brier, BrierCurve};
use crate::rng::{child_seed, stream_rng};
use crate::selection::{entropy_index, select_num_classes, Criterion};

/// Time at which the baseline cumulative hazard is summarized.
pub const BASELINE_CHECK_TIME: f64 = 3.0;

/// True baseline cumulative hazard `0.1 (e^t - 1)`.
pub fn true_cumulative_hazard(t: f64) -> f64 {
    0.1 * t.exp_m1()
}

/// Inverse of `F(t) = 1 - exp{-0.1 (e^t - 1) e^eta}` applied to `-log U`.
pub fn event_time(neg_log_u: f64, eta: f64) -> f64 {
    (neg_log_u / (0.1 * eta.exp())).ln_1p()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum ScenarioId {
    I,
    II,
    III,
    IV,
    V,
}

impl ScenarioId {
    pub const ALL: [ScenarioId; 5] = [ScenarioId::I, ScenarioId::II, ScenarioId::III, ScenarioId::IV, ScenarioId::V];
}

impl fmt::Display for ScenarioId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            ScenarioId::I => "I",
            ScenarioId::II => "II",
            ScenarioId::III => "III",
            ScenarioId::IV => "IV",
            ScenarioId::V => "V",
        };
        f.write_str(s)
    }
}

impl FromStr for ScenarioId {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_uppercase().as_str() {
            "I" | "1" => Ok(ScenarioId::I),
            "II" | "2" => Ok(ScenarioId::II),
            "III" | "3" => Ok(ScenarioId::III),
            "IV" | "4" => Ok(ScenarioId::IV),
            "V" | "5" => Ok(ScenarioId::V),
            _ => Err(Error::UnknownScenario(s.to_string())),
        }
    }
}

/// A data-generating design. `alpha[k]` is `(intercept, x1, x2)` for class
/// `k + 2`; `gamma` is laid out as `(zeta_1, a_2, zeta_2, ..., a_L, zeta_L)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Scenario {
    pub name: String,
    pub num_classes: usize,
    /// Rate of the exponential censoring component.
    pub censor_rate: f64,
    pub alpha: Vec<Vec<f64>>,
    pub gamma: Vec<f64>,
    pub n: usize,
    #[serde(default)]
    pub seed: u64,
}

pub const NUM_COVARIATES: usize = 2;

impl Scenario {
    pub fn builtin(id: ScenarioId, n: usize, seed: u64) -> Scenario {
        let ln2 = std::f64::consts::LN_2;
        let (num_classes, censor_rate, alpha, gamma) = match id {
            ScenarioId::I => (2, 0.1, vec![vec![ln2, 0.0, 0.0]], vec![-2.0, 0.0, 2.0, 2.0, 2.0]),
            ScenarioId::II => (2, 0.1, vec![vec![ln2, 0.0, 0.0]], vec![-2.0, 0.0, 0.0, 2.0, 2.0]),
            ScenarioId::III => (2, 0.6, vec![vec![ln2, 0.0, 0.0]], vec![-2.0, 0.0, 2.0, 2.0, 2.0]),
            ScenarioId::IV => (2, 0.1, vec![vec![2.0, -4.0, 0.0]], vec![0.0, -3.0, 0.5, 0.0, 6.0]),
            ScenarioId::V => (
                3,
                0.1,
                vec![vec![0.0, -0.5, 0.0], vec![0.0, 0.0, 0.5]],
                vec![-2.0, -2.0, 2.0, 2.0, 2.0, 4.0, 4.0, 4.0],
            ),
        };
        Scenario {
            name: id.to_string(),
            num_classes,
            censor_rate,
            alpha,
            gamma,
            n,
            seed,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let l = self.num_classes;
        if l == 0 {
            return Err(Error::InvalidConfig("scenario needs at least one class".into()));
        }
        if self.alpha.len() != l - 1 || self.alpha.iter().any(|r| r.len() != NUM_COVARIATES + 1) {
            return Err(Error::InvalidConfig(format!(
                "scenario {} needs {} membership rows of length {}",
                self.name,
                l - 1,
                NUM_COVARIATES + 1
            )));
        }
        if self.gamma.len() != NUM_COVARIATES * l + l - 1 {
            return Err(Error::InvalidConfig(format!(
                "scenario {} needs {} hazard coefficients",
                self.name,
                NUM_COVARIATES * l + l - 1
            )));
        }
        if !(self.censor_rate > 0.0) || self.n == 0 {
            return Err(Error::InvalidConfig("censoring rate and n must be positive".into()));
        }
        Ok(())
    }

    pub fn model_config(&self) -> ModelConfig {
        ModelConfig::new(self.num_classes, NUM_COVARIATES)
    }

    pub fn alpha_matrix(&self) -> DMatrix<f64> {
        DMatrix::from_fn(self.num_classes - 1, NUM_COVARIATES + 1, |r, c| self.alpha[r][c])
    }

    pub fn gamma_vector(&self) -> DVector<f64> {
        DVector::from_vec(self.gamma.clone())
    }

    /// True `θ = (α, γ)` in the order of [`crate::model::Parameters::theta`].
    pub fn theta(&self) -> DVector<f64> {
        DVector::from_iterator(
            self.alpha.iter().flatten().count() + self.gamma.len(),
            self.alpha.iter().flatten().chain(&self.gamma).copied(),
        )
    }

    pub fn parameter_names(&self) -> Vec<String> {
        self.model_config()
            .parameter_names(&["x1".to_string(), "x2".to_string()])
    }
}

#[derive(Debug, Clone)]
pub struct SimulatedData {
    pub data: Dataset,
    /// Zero-based true class of each subject.
    pub labels: Vec<usize>,
}

pub fn generate(scenario: &Scenario, rng: &mut ChaCha8Rng) -> Result<SimulatedData> {
    scenario.validate()?;
    let alpha = scenario.alpha_matrix();
    let gamma = scenario.gamma_vector();
    let censor = Exp::new(scenario.censor_rate).map_err(|e| Error::InvalidConfig(e.to_string()))?;
    let mut observations = Vec::with_capacity(scenario.n);
    let mut labels = Vec::with_capacity(scenario.n);
    for _ in 0..scenario.n {
        let x = vec![
            if rng.random::<f64>() < 0.5 { 1.0 } else { 0.0 },
            rng.random::<f64>(),
        ];
        let probs = class_membership_probs(&x, &alpha);
        let u: f64 = rng.random();
        let mut class = probs.len() - 1;
        let mut acc = 0.0;
        for (l, p) in probs.iter().enumerate() {
            acc += p;
            if u < acc {
                class = l;
                break;
            }
        }
        let eta = linear_predictor(&x, class, &gamma);
        let neg_log_u = -(1.0 - rng.random::<f64>()).ln();
        let t = event_time(neg_log_u, eta);
        let c = censor.sample(rng).min(rng.random_range(5.0..6.0));
        observations.push(Observation::new(t.min(c), t <= c, x)?);
        labels.push(class);
    }
    let data = Dataset::new(observations, vec!["x1".into(), "x2".into()])?;
    Ok(SimulatedData { data, labels })
}

/// Dataset for replicate `index`; independent of how replicates are scheduled.
pub fn generate_replicate(scenario: &Scenario, index: u64) -> Result<SimulatedData> {
    generate(scenario, &mut stream_rng(scenario.seed, index))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum InitMode {
    /// True labels at weight 0.9, the rest spread evenly.
    PerturbedTruth,
    Kmeans,
    Random,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ReplicateFit {
    pub index: usize,
    pub theta: Option<Vec<f64>>,
    pub standard_errors: Option<Vec<f64>>,
    pub baseline_at_check: Option<f64>,
    pub em_converged: bool,
    pub iterations: usize,
    pub max_decrease: f64,
    pub entropy_index: Option<f64>,
    pub censoring_rate: f64,
    pub error: Option<String>,
    /// Set after the outlier rule has been applied across replicates.
    pub flagged: bool,
}

impl ReplicateFit {
    pub fn converged(&self) -> bool {
        self.theta.is_some() && self.em_converged && !self.flagged
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ParameterSummary {
    pub name: String,
    pub truth: f64,
    pub median_bias: f64,
    /// Empirical standard deviation of the estimates.
    pub sd: f64,
    pub median_see: Option<f64>,
    pub coverage: Option<f64>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ReplicateSummary {
    pub scenario: String,
    pub n: usize,
    pub replicates: usize,
    pub failures: usize,
    pub convergence_rate: f64,
    pub median_entropy: f64,
    pub median_censoring: f64,
    pub max_decrease: f64,
    pub parameters: Vec<ParameterSummary>,
    /// `Λ(3)`, point estimates only.
    pub baseline: ParameterSummary,
}

impl ReplicateSummary {
    pub fn parameter(&self, name: &str) -> Option<&ParameterSummary> {
        self.parameters.iter().find(|p| p.name == name)
    }
}

#[derive(Debug, Clone)]
pub struct EstimationStudy {
    pub summary: ReplicateSummary,
    pub fits: Vec<ReplicateFit>,
}

#[derive(Debug, Clone, Copy)]
pub struct StudyOptions {
    pub replicates: usize,
    pub init: InitMode,
    /// Whether to compute profile-likelihood standard errors.
    pub standard_errors: bool,
}

fn fit_replicate(scenario: &Scenario, index: usize, options: &StudyOptions) -> ReplicateFit {
    let mut out = ReplicateFit {
        index,
        theta: None,
        standard_errors: None,
        baseline_at_check: None,
        em_converged: false,
        iterations: 0,
        max_decrease: 0.0,
        entropy_index: None,
        censoring_rate: f64::NAN,
        error: None,
        flagged: false,
    };
    let sim = match generate_replicate(scenario, index as u64) {
        Ok(sim) => sim,
        Err(e) => {
            out.error = Some(e.to_string());
            return out;
        }
    };
    out.censoring_rate = sim.data.censoring_rate();
    let config = scenario
        .model_config()
        .with_seed(child_seed(scenario.seed, index as u64));
    let state = match options.init {
        InitMode::PerturbedTruth => PosteriorWeights::perturbed(&sim.labels, scenario.num_classes, crate::em::OWN_CLASS_WEIGHT)
            .and_then(|w| fit_from_weights(&sim.data, &config, &w)),
        InitMode::Kmeans => fit(&sim.data, &config.clone().with_initialization(Initialization::Kmeans)),
        InitMode::Random => fit(&sim.data, &config.clone().with_initialization(Initialization::Random)),
    };
    let state = match state {
        Ok(s) => s,
        Err(e) => {
            out.error = Some(e.to_string());
            return out;
        }
    };
    out.em_converged = state.converged;
    out.iterations = state.iterations;
    out.max_decrease = state.max_decrease();
    out.entropy_index = Some(entropy_index(&state.weights));
    out.theta = Some(state.params.theta().iter().copied().collect());
    out.baseline_at_check = Some(state.params.baseline.eval(BASELINE_CHECK_TIME));
    if options.standard_errors && state.converged {
        match covariance(&sim.data, &state, &config) {
            Ok(cov) => out.standard_errors = Some(cov.standard_errors()),
            Err(e) => out.error = Some(format!("standard errors: {e}")),
        }
    }
    out
}

fn sample_sd(values: &[f64]) -> f64 {
    let n = values.len();
    if n < 2 {
        return 0.0;
    }
    let mean = values.iter().sum::<f64>() / n as f64;
    (values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1) as f64).sqrt()
}

fn median_or_nan(values: &[f64]) -> f64 {
    if values.is_empty() {
        f64::NAN
    } else {
        median(values)
    }
}

/// Fits `options.replicates` simulated datasets and summarizes bias,
/// variability, standard error calibration and coverage over the replicates
/// that converged.
pub fn run_replicates(scenario: &Scenario, options: &StudyOptions) -> Result<EstimationStudy> {
    scenario.validate()?;
    if options.replicates == 0 {
        return Err(Error::InvalidConfig("need at least one replicate".into()));
    }
    let mut fits: Vec<ReplicateFit> = (0..options.replicates)
        .into_par_iter()
        .map(|i| fit_replicate(scenario, i, options))
        .collect();

    let truth = scenario.theta();
    let fitted: Vec<usize> = (0..fits.len()).filter(|&i| fits[i].theta.is_some()).collect();
    let failures = fits.len() - fitted.len();
    if 2 * failures > fits.len() {
        return Err(Error::TooManyFailures {
            failed: failures,
            total: fits.len(),
        });
    }
    let estimates: Vec<DVector<f64>> = fitted
        .iter()
        .map(|&i| DVector::from_vec(fits[i].theta.clone().unwrap()))
        .collect();
    if estimates.len() >= 2 {
        for (&i, flag) in fitted.iter().zip(nonconvergence_flag(&estimates, &truth)) {
            fits[i].flagged = flag;
        }
    }

    let good: Vec<&ReplicateFit> = fits.iter().filter(|f| f.converged()).collect();
    let z = normal_quantile(0.975);
    let names = scenario.parameter_names();
    let parameters = names
        .iter()
        .enumerate()
        .map(|(k, name)| {
            let est: Vec<f64> = good.iter().map(|f| f.theta.as_ref().unwrap()[k]).collect();
            let bias: Vec<f64> = est.iter().map(|e| e - truth[k]).collect();
            let with_se: Vec<(f64, f64)> = good
                .iter()
                .filter_map(|f| f.standard_errors.as_ref().map(|se| (f.theta.as_ref().unwrap()[k], se[k])))
                .collect();
            let (median_see, coverage) = if with_se.is_empty() {
                (None, None)
            } else {
                let ses: Vec<f64> = with_se.iter().map(|&(_, s)| s).collect();
                let covered = with_se
                    .iter()
                    .filter(|&&(e, s)| (e - truth[k]).abs() <= z * s)
                    .count();
                (Some(median(&ses)), Some(covered as f64 / with_se.len() as f64))
            };
            ParameterSummary {
                name: name.clone(),
                truth: truth[k],
                median_bias: median_or_nan(&bias),
                sd: sample_sd(&est),
                median_see,
                coverage,
            }
        })
        .collect();

    let lam_truth = true_cumulative_hazard(BASELINE_CHECK_TIME);
    let lam: Vec<f64> = good.iter().filter_map(|f| f.baseline_at_check).collect();
    let lam_bias: Vec<f64> = lam.iter().map(|v| v - lam_truth).collect();
    let entropies: Vec<f64> = good.iter().filter_map(|f| f.entropy_index).collect();
    let censoring: Vec<f64> = fits.iter().map(|f| f.censoring_rate).filter(|c| c.is_finite()).collect();

    let summary = ReplicateSummary {
        scenario: scenario.name.clone(),
        n: scenario.n,
        replicates: fits.len(),
        failures,
        convergence_rate: good.len() as f64 / fits.len() as f64,
        median_entropy: median_or_nan(&entropies),
        median_censoring: median_or_nan(&censoring),
        max_decrease: fits.iter().map(|f| f.max_decrease).fold(0.0, f64::max),
        parameters,
        baseline: ParameterSummary {
            name: format!("Lambda0({BASELINE_CHECK_TIME})"),
            truth: lam_truth,
            median_bias: median_or_nan(&lam_bias),
            sd: sample_sd(&lam),
            median_see: None,
            coverage: None,
        },
    };
    Ok(EstimationStudy { summary, fits })
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SelectionStudy {
    pub candidates: Vec<usize>,
    pub replicates: usize,
    pub failures: usize,
    /// `counts[c][k]`: replicates where criterion `c` chose `candidates[k]`.
    pub counts: Vec<(Criterion, Vec<usize>)>,
}

impl SelectionStudy {
    /// Fraction of replicates in which `criterion` selected `num_classes`.
    pub fn frequency(&self, criterion: Criterion, num_classes: usize) -> f64 {
        let Some(k) = self.candidates.iter().position(|&l| l == num_classes) else {
            return 0.0;
        };
        self.counts
            .iter()
            .find(|(c, _)| *c == criterion)
            .map_or(0.0, |(_, v)| v[k] as f64 / self.replicates as f64)
    }
}

pub fn run_selection_study(scenario: &Scenario, replicates: usize, candidates: &[usize]) -> Result<SelectionStudy> {
    scenario.validate()?;
    if candidates.is_empty() {
        return Err(Error::NoCandidates);
    }
    let results: Vec<Option<Vec<(Criterion, usize)>>> = (0..replicates)
        .into_par_iter()
        .map(|i| {
            let sim = generate_replicate(scenario, i as u64).ok()?;
            let config = scenario
                .model_config()
                .with_seed(child_seed(scenario.seed, i as u64));
            select_num_classes(&sim.data, &config, candidates).ok().map(|s| s.best)
        })
        .collect();
    let mut counts: Vec<(Criterion, Vec<usize>)> = Criterion::ALL
        .iter()
        .map(|&c| (c, vec![0; candidates.len()]))
        .collect();
    let mut failures = 0;
    for best in &results {
        let Some(best) = best else {
            failures += 1;
            continue;
        };
        for (c, l) in best {
            let k = candidates.iter().position(|x| x == l).unwrap();
            counts.iter_mut().find(|(cc, _)| cc == c).unwrap().1[k] += 1;
        }
    }
    Ok(SelectionStudy {
        candidates: candidates.to_vec(),
        replicates,
        failures,
        counts,
    })
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BrierStudy {
    pub grid: Vec<f64>,
    /// Per replicate, the latent class and single-class curves.
    pub curves: Vec<(BrierCurve, BrierCurve)>,
    pub failures: usize,
}

impl BrierStudy {
    /// Pointwise medians across replicates of BS1 for the model and the
    /// competitor.
    pub fn median_bs1(&self) -> (Vec<Option<f64>>, Vec<Option<f64>>) {
        self.medians(|c| &c.bs1)
    }

    pub fn median_bs2(&self) -> (Vec<Option<f64>>, Vec<Option<f64>>) {
        self.medians(|c| &c.bs2)
    }

    fn medians(&self, pick: fn(&BrierCurve) -> &Vec<Option<f64>>) -> (Vec<Option<f64>>, Vec<Option<f64>>) {
        let at = |k: usize, which: usize| {
            let v: Vec<f64> = self
                .curves
                .iter()
                .filter_map(|pair| pick(if which == 0 { &pair.0 } else { &pair.1 })[k])
                .collect();
            (!v.is_empty()).then(|| median(&v))
        };
        (
            (0..self.grid.len()).map(|k| at(k, 0)).collect(),
            (0..self.grid.len()).map(|k| at(k, 1)).collect(),
        )
    }
}

/// Regular grid `step, 2 step, ..., upper`.
pub fn regular_grid(step: f64, upper: f64) -> Vec<f64> {
    let count = (upper / step + 1e-9).floor() as usize;
    (1..=count).map(|k| k as f64 * step).collect()
}

/// Cross-validated Brier curves of the true-L model against the Cox model.
pub fn run_brier_study(scenario: &Scenario, replicates: usize, folds: usize, grid: &[f64]) -> Result<BrierStudy> {
    scenario.validate()?;
    let results: Vec<Option<(BrierCurve, BrierCurve)>> = (0..replicates)
        .into_par_iter()
        .map(|i| {
            let sim = generate_replicate(scenario, i as u64).ok()?;
            let seed = child_seed(scenario.seed, i as u64);
            let config = scenario.model_config().with_seed(seed);
            let cox = ModelConfig::new(1, NUM_COVARIATES);
            cross_validated_brier(&sim.data, &config, &cox, folds, grid, seed)
                .ok()
                .map(|cv| (cv.model, cv.competitor))
        })
        .collect();
    let failures = results.iter().filter(|r| r.is_none()).count();
    if 2 * failures > replicates {
        return Err(Error::TooManyFailures {
            failed: failures,
            total: replicates,
        });
    }
    Ok(BrierStudy {
        grid: grid.to_vec(),
        curves: results.into_iter().flatten().collect(),
        failures,
    })
}

/// Covariate names of the synthetic cohort, a cognitive-assessment panel.
pub const COHORT_COVARIATES: [&str; 14] = [
    "MMSE", "TB", "DS", "LMD", "CF", "BN", "TA", "DSF", "EH", "IADLs", "NPI-Q", "GDS", "AGE", "SEX",
];

/// A two-class cohort with fourteen mixed-type covariates, follow-up up to
/// eight years and roughly 72% censoring. Class 2 subjects are older, more
/// impaired and progress faster.
pub fn synthetic_cohort(n: usize, seed: u64) -> Result<SimulatedData> {
    let mut rng = stream_rng(seed, 0);
    let normal = rand_distr::Normal::new(0.0, 1.0).expect("unit normal");
    let mut observations = Vec::with_capacity(n);
    let mut labels = Vec::with_capacity(n);
    for _ in 0..n {
        let age: f64 = normal.sample(&mut rng);
        let class2 = rng.random::<f64>() < 1.0 / (1.0 + (1.0 - 0.9 * age).exp());
        let shift = if class2 { 1.0 } else { 0.0 };
        let mut z = || -> f64 { normal.sample(&mut rng) };
        let mmse = z() - 1.0 - shift;
        let tb = z() + 0.5 + 1.2 * shift;
        let ds = z() - 0.5 - 0.8 * shift;
        let lmd = z() - 1.2 - 0.3 * shift;
        let cf = z() - 0.7 - 0.5 * shift;
        let bn = z() - 0.6 + 0.1 * shift;
        let ta = z() + 0.1 + 0.6 * shift;
        let dsf = z() - 0.3;
        let eh = if rng.random::<f64>() < 0.06 { 1.0 } else { 0.0 };
        let iadls = (rng.random::<f64>() * (3.0 + 4.0 * shift)).floor();
        let npiq = (rng.random::<f64>() * (3.0 + 2.0 * shift)).floor();
        let gds = if rng.random::<f64>() < 0.18 { 1.0 } else { 0.0 };
        let sex = if rng.random::<f64>() < 0.45 { 1.0 } else { 0.0 };
        let x = vec![mmse, tb, ds, lmd, cf, bn, ta, dsf, eh, iadls, npiq, gds, age, sex];
        let eta = if class2 {
            1.2 - 0.1 * mmse + 0.1 * tb - 0.25 * lmd
        } else {
            -1.2 - 0.15 * mmse - 0.6 * lmd + 0.2 * iadls + 0.35 * age
        };
        // baseline cumulative hazard 0.02 t^1.5
        let neg_log_u = -(1.0 - rng.random::<f64>()).ln();
        let t = (neg_log_u / (0.02 * eta.exp())).powf(1.0 / 1.5);
        let c = (rng.random::<f64>() * 8.0).max(0.05);
        observations.push(Observation::new(t.min(c), t <= c, x)?);
        labels.push(class2 as usize);
    }
    let names = COHORT_COVARIATES.iter().map(|s| s.to_string()).collect();
    Ok(SimulatedData {
        data: Dataset::new(observations, names)?,
        labels,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn median_event_time_at_zero_predictor() {
        // F(t) = 1/2  <=>  -log U = log 2
        let t = event_time(std::f64::consts::LN_2, 0.0);
        assert!((t - 2.070_839).abs() < 1e-6);
        assert!((true_cumulative_hazard(t) - std::f64::consts::LN_2).abs() < 1e-12);
    }

    #[test]
    fn builtin_scenarios_validate() {
        for id in ScenarioId::ALL {
            let s = Scenario::builtin(id, 100, 1);
            s.validate().unwrap();
            assert_eq!(s.theta().len(), s.model_config().num_params());
        }
        assert!("VI".parse::<ScenarioId>().is_err());
        assert_eq!("iv".parse::<ScenarioId>().unwrap(), ScenarioId::IV);
    }

    #[test]
    fn generation_is_reproducible() {
        let s = Scenario::builtin(ScenarioId::I, 200, 5);
        let a = generate_replicate(&s, 3).unwrap();
        let b = generate_replicate(&s, 3).unwrap();
        assert_eq!(a.data, b.data);
        assert_eq!(a.labels, b.labels);
        let c = generate_replicate(&s, 4).unwrap();
        assert_ne!(a.data, c.data);
    }

    #[test]
    fn censoring_is_bounded_by_six() {
        let s = Scenario::builtin(ScenarioId::II, 500, 2);
        let sim = generate_replicate(&s, 0).unwrap();
        assert!(sim.data.observations().iter().all(|o| o.time < 6.0));
    }

    #[test]
    fn cohort_is_mostly_censored() {
        let sim = synthetic_cohort(2000, 1).unwrap();
        assert_eq!(sim.data.num_covariates(), 14);
        let c = sim.data.censoring_rate();
        assert!((0.66..0.78).contains(&c), "censoring {c}");
    }

    #[test]
    fn grid_endpoints() {
        let g = regular_grid(0.25, 5.0);
        assert_eq!(g.len(), 20);
        assert_eq!(g[0], 0.25);
        assert_eq!(*g.last().unwrap(), 5.0);
    }
}
