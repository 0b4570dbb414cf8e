//! Data model and the per-observation likelihood pieces of the latent class
//! proportional hazards model.
//!
//! Class indices are zero based throughout the crate: class `0` is the
//! reference class whose membership coefficients are pinned at zero and whose
//! hazard carries only the shared covariate effect `zeta_1`. Names written for
//! humans (parameter labels, CSV headers) use one-based class numbers.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Row-sum tolerance for posterior weight matrices.
pub const ROW_SUM_TOL: f64 = 1e-10;

/// One right-censored observation `(min(T, C), 1{T <= C}, x)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Observation {
    pub time: f64,
    pub status: bool,
    pub covariates: Vec<f64>,
}

impl Observation {
    pub fn new(time: f64, status: bool, covariates: Vec<f64>) -> Result<Self> {
        let obs = Observation {
            time,
            status,
            covariates,
        };
        obs.validate()?;
        Ok(obs)
    }

    fn validate(&self) -> Result<()> {
        if !self.time.is_finite() || self.time < 0.0 {
            return Err(Error::InvalidData(format!(
                "follow-up time must be finite and nonnegative, got {}",
                self.time
            )));
        }
        if self.status && self.time == 0.0 {
            return Err(Error::InvalidData("event recorded at time zero".into()));
        }
        if let Some(v) = self.covariates.iter().find(|v| !v.is_finite()) {
            return Err(Error::InvalidData(format!("non-finite covariate value {v}")));
        }
        Ok(())
    }
}

/// A validated collection of observations sharing one covariate layout.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    observations: Vec<Observation>,
    covariate_names: Vec<String>,
}

impl Dataset {
    pub fn new(observations: Vec<Observation>, covariate_names: Vec<String>) -> Result<Self> {
        if observations.is_empty() {
            return Err(Error::InvalidData("dataset has no observations".into()));
        }
        let p = covariate_names.len();
        for (i, obs) in observations.iter().enumerate() {
            obs.validate()
                .map_err(|e| Error::InvalidData(format!("observation {i}: {e}")))?;
            if obs.covariates.len() != p {
                return Err(Error::Dimension(format!(
                    "observation {i} has {} covariates, expected {p}",
                    obs.covariates.len()
                )));
            }
        }
        if !observations.iter().any(|o| o.status) {
            return Err(Error::InvalidData(
                "dataset has no uncensored event times".into(),
            ));
        }
        Ok(Dataset {
            observations,
            covariate_names,
        })
    }

    /// Builds a dataset naming the covariates `x1..xp`.
    pub fn with_default_names(observations: Vec<Observation>) -> Result<Self> {
        let p = observations.first().map_or(0, |o| o.covariates.len());
        let names = (1..=p).map(|k| format!("x{k}")).collect();
        Dataset::new(observations, names)
    }

    pub fn observations(&self) -> &[Observation] {
        &self.observations
    }

    pub fn covariate_names(&self) -> &[String] {
        &self.covariate_names
    }

    pub fn len(&self) -> usize {
        self.observations.len()
    }

    pub fn is_empty(&self) -> bool {
        self.observations.is_empty()
    }

    pub fn num_covariates(&self) -> usize {
        self.covariate_names.len()
    }

    pub fn num_events(&self) -> usize {
        self.observations.iter().filter(|o| o.status).count()
    }

    pub fn censoring_rate(&self) -> f64 {
        1.0 - self.num_events() as f64 / self.len() as f64
    }

    /// Distinct uncensored event times in increasing order.
    pub fn event_times(&self) -> Vec<f64> {
        let mut times: Vec<f64> = self
            .observations
            .iter()
            .filter(|o| o.status)
            .map(|o| o.time)
            .collect();
        times.sort_by(f64::total_cmp);
        times.dedup();
        times
    }

    pub fn subset(&self, indices: &[usize]) -> Result<Dataset> {
        let obs = indices
            .iter()
            .map(|&i| self.observations[i].clone())
            .collect();
        Dataset::new(obs, self.covariate_names.clone())
    }

    /// Z-scores every covariate column, returning the transform applied.
    /// Constant columns are centred but left unscaled.
    pub fn standardized(&self) -> (Dataset, Vec<Standardization>) {
        let n = self.len() as f64;
        let transforms: Vec<Standardization> = (0..self.num_covariates())
            .map(|k| {
                let mean = self.observations.iter().map(|o| o.covariates[k]).sum::<f64>() / n;
                let var = self
                    .observations
                    .iter()
                    .map(|o| (o.covariates[k] - mean).powi(2))
                    .sum::<f64>()
                    / (n - 1.0).max(1.0);
                let sd = if var > 0.0 { var.sqrt() } else { 1.0 };
                Standardization { mean, sd }
            })
            .collect();
        let observations = self
            .observations
            .iter()
            .map(|o| Observation {
                time: o.time,
                status: o.status,
                covariates: apply_standardization(&o.covariates, &transforms),
            })
            .collect();
        (
            Dataset {
                observations,
                covariate_names: self.covariate_names.clone(),
            },
            transforms,
        )
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Standardization {
    pub mean: f64,
    pub sd: f64,
}

pub fn apply_standardization(x: &[f64], transforms: &[Standardization]) -> Vec<f64> {
    x.iter()
        .zip(transforms)
        .map(|(v, s)| (v - s.mean) / s.sd)
        .collect()
}

/// How the EM algorithm obtains its first posterior weight matrix.
#[derive(Debug, Clone, PartialEq)]
pub enum Initialization {
    /// Rows drawn from the flat Dirichlet distribution.
    Random,
    /// One-dimensional k-means on the follow-up times.
    Kmeans,
    /// Caller-provided weights.
    Supplied(PosteriorWeights),
}

impl Initialization {
    pub fn name(&self) -> &'static str {
        match self {
            Initialization::Random => "random",
            Initialization::Kmeans => "kmeans",
            Initialization::Supplied(_) => "supplied",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ModelConfig {
    pub num_classes: usize,
    /// Covariate columns entering the class membership model.
    pub membership_covariates: Vec<usize>,
    /// Covariate columns entering the class-specific hazards.
    pub survival_covariates: Vec<usize>,
    /// Aitken stopping tolerance on the observed-data log-likelihood.
    pub tolerance: f64,
    pub max_iterations: usize,
    pub initialization: Initialization,
    /// Number of EM starts. The first uses `initialization`, the rest are random.
    pub starts: usize,
    pub seed: u64,
}

impl ModelConfig {
    /// A configuration using every covariate in both submodels.
    pub fn new(num_classes: usize, num_covariates: usize) -> Self {
        ModelConfig {
            num_classes,
            membership_covariates: (0..num_covariates).collect(),
            survival_covariates: (0..num_covariates).collect(),
            tolerance: 1e-7,
            max_iterations: 5000,
            initialization: Initialization::Kmeans,
            starts: 1,
            seed: 0,
        }
    }

    pub fn with_initialization(mut self, init: Initialization) -> Self {
        self.initialization = init;
        self
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn with_starts(mut self, starts: usize) -> Self {
        self.starts = starts;
        self
    }

    pub fn with_tolerance(mut self, tolerance: f64) -> Self {
        self.tolerance = tolerance;
        self
    }

    /// `p + 1`: width of a membership coefficient row including the intercept.
    pub fn membership_width(&self) -> usize {
        self.membership_covariates.len() + 1
    }

    /// `q`: number of covariates in the hazard submodel.
    pub fn survival_width(&self) -> usize {
        self.survival_covariates.len()
    }

    pub fn alpha_len(&self) -> usize {
        (self.num_classes - 1) * self.membership_width()
    }

    pub fn gamma_len(&self) -> usize {
        self.survival_width() * self.num_classes + self.num_classes - 1
    }

    /// `r`, the number of finite-dimensional parameters.
    pub fn num_params(&self) -> usize {
        self.alpha_len() + self.gamma_len()
    }

    pub fn validate(&self, num_covariates: usize) -> Result<()> {
        if self.num_classes == 0 {
            return Err(Error::InvalidConfig("need at least one class".into()));
        }
        if !(self.tolerance > 0.0) {
            return Err(Error::InvalidConfig("tolerance must be positive".into()));
        }
        if self.max_iterations == 0 {
            return Err(Error::InvalidConfig("max_iterations must be positive".into()));
        }
        if self.starts == 0 {
            return Err(Error::InvalidConfig("need at least one start".into()));
        }
        for (label, cols) in [
            ("membership", &self.membership_covariates),
            ("survival", &self.survival_covariates),
        ] {
            let mut seen = vec![false; num_covariates];
            for &c in cols {
                if c >= num_covariates {
                    return Err(Error::InvalidConfig(format!(
                        "{label} covariate index {c} out of range (p = {num_covariates})"
                    )));
                }
                if std::mem::replace(&mut seen[c], true) {
                    return Err(Error::InvalidConfig(format!(
                        "{label} covariate index {c} listed twice"
                    )));
                }
            }
        }
        Ok(())
    }

    pub fn membership_row(&self, obs: &Observation) -> Vec<f64> {
        self.membership_covariates
            .iter()
            .map(|&c| obs.covariates[c])
            .collect()
    }

    pub fn survival_row(&self, obs: &Observation) -> Vec<f64> {
        self.survival_covariates
            .iter()
            .map(|&c| obs.covariates[c])
            .collect()
    }

    /// Human-readable labels for the entries of [`Parameters::theta`].
    pub fn parameter_names(&self, covariate_names: &[String]) -> Vec<String> {
        let mut names = Vec::with_capacity(self.num_params());
        for class in 2..=self.num_classes {
            names.push(format!("alpha[{class}](Intercept)"));
            for &c in &self.membership_covariates {
                names.push(format!("alpha[{class}]({})", covariate_names[c]));
            }
        }
        for &c in &self.survival_covariates {
            names.push(format!("zeta[1]({})", covariate_names[c]));
        }
        for class in 2..=self.num_classes {
            names.push(format!("a[{class}]"));
            for &c in &self.survival_covariates {
                names.push(format!("zeta[{class}]({})", covariate_names[c]));
            }
        }
        names
    }
}

/// Right-continuous nondecreasing step function with positive jumps, used
/// for the baseline cumulative hazard.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "StepFunctionRepr", into = "StepFunctionRepr")]
pub struct StepFunction {
    jump_times: Vec<f64>,
    jump_sizes: Vec<f64>,
    cumulative: Vec<f64>,
}

#[derive(Serialize, Deserialize)]
struct StepFunctionRepr {
    jump_times: Vec<f64>,
    jump_sizes: Vec<f64>,
}

impl TryFrom<StepFunctionRepr> for StepFunction {
    type Error = Error;
    fn try_from(r: StepFunctionRepr) -> Result<Self> {
        StepFunction::new(r.jump_times, r.jump_sizes)
    }
}

impl From<StepFunction> for StepFunctionRepr {
    fn from(s: StepFunction) -> Self {
        StepFunctionRepr {
            jump_times: s.jump_times,
            jump_sizes: s.jump_sizes,
        }
    }
}

impl StepFunction {
    pub fn new(jump_times: Vec<f64>, jump_sizes: Vec<f64>) -> Result<Self> {
        if jump_times.len() != jump_sizes.len() {
            return Err(Error::Dimension(format!(
                "{} jump times but {} jump sizes",
                jump_times.len(),
                jump_sizes.len()
            )));
        }
        if jump_times.iter().any(|t| !t.is_finite() || *t <= 0.0) {
            return Err(Error::InvalidData("jump times must be positive and finite".into()));
        }
        if jump_times.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::InvalidData("jump times must be strictly increasing".into()));
        }
        if jump_sizes.iter().any(|d| !d.is_finite() || *d <= 0.0) {
            return Err(Error::InvalidData("jump sizes must be positive and finite".into()));
        }
        Ok(Self::from_parts(jump_times, jump_sizes))
    }

    pub(crate) fn from_parts(jump_times: Vec<f64>, jump_sizes: Vec<f64>) -> Self {
        let cumulative = jump_sizes
            .iter()
            .scan(0.0, |acc, d| {
                *acc += d;
                Some(*acc)
            })
            .collect();
        StepFunction {
            jump_times,
            jump_sizes,
            cumulative,
        }
    }

    pub fn jump_times(&self) -> &[f64] {
        &self.jump_times
    }

    pub fn jump_sizes(&self) -> &[f64] {
        &self.jump_sizes
    }

    /// Values at the jump times, `Λ(t_j)`.
    pub fn cumulative(&self) -> &[f64] {
        &self.cumulative
    }

    pub fn len(&self) -> usize {
        self.jump_times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.jump_times.is_empty()
    }

    /// `Σ_{j: t_j <= t} d_j`.
    pub fn eval(&self, t: f64) -> f64 {
        let k = self.jump_times.partition_point(|&s| s <= t);
        if k == 0 {
            0.0
        } else {
            self.cumulative[k - 1]
        }
    }

    /// Left limit `Σ_{j: t_j < t} d_j`.
    pub fn eval_left(&self, t: f64) -> f64 {
        let k = self.jump_times.partition_point(|&s| s < t);
        if k == 0 {
            0.0
        } else {
            self.cumulative[k - 1]
        }
    }

    pub fn jump_index(&self, t: f64) -> Option<usize> {
        self.jump_times
            .binary_search_by(|s| s.total_cmp(&t))
            .ok()
    }
}

/// Membership coefficients, hazard coefficients and baseline cumulative hazard.
///
/// `alpha` holds rows for classes `1..L` (the reference row is implicit and
/// zero), each laid out as `(intercept, membership covariates...)`. `gamma`
/// is laid out as `(zeta_1, a_2, zeta_2, ..., a_L, zeta_L)`.
#[derive(Debug, Clone, PartialEq)]
pub struct Parameters {
    pub alpha: DMatrix<f64>,
    pub gamma: DVector<f64>,
    pub baseline: StepFunction,
}

impl Parameters {
    pub fn zeros(config: &ModelConfig, baseline: StepFunction) -> Self {
        Parameters {
            alpha: DMatrix::zeros(config.num_classes - 1, config.membership_width()),
            gamma: DVector::zeros(config.gamma_len()),
            baseline,
        }
    }

    pub fn num_classes(&self) -> usize {
        self.alpha.nrows() + 1
    }

    /// `(vec(alpha) by class row, gamma)`.
    pub fn theta(&self) -> DVector<f64> {
        let mut theta = Vec::with_capacity(self.alpha.len() + self.gamma.len());
        for row in self.alpha.row_iter() {
            theta.extend(row.iter());
        }
        theta.extend(self.gamma.iter());
        DVector::from_vec(theta)
    }

    pub fn set_theta(&mut self, theta: &DVector<f64>) {
        assert_eq!(theta.len(), self.alpha.len() + self.gamma.len());
        let width = self.alpha.ncols();
        for r in 0..self.alpha.nrows() {
            for c in 0..width {
                self.alpha[(r, c)] = theta[r * width + c];
            }
        }
        let off = self.alpha.len();
        for k in 0..self.gamma.len() {
            self.gamma[k] = theta[off + k];
        }
    }

    pub fn validate(&self, config: &ModelConfig) -> Result<()> {
        if self.alpha.nrows() != config.num_classes - 1
            || self.alpha.ncols() != config.membership_width()
        {
            return Err(Error::Dimension(format!(
                "alpha is {}x{}, expected {}x{}",
                self.alpha.nrows(),
                self.alpha.ncols(),
                config.num_classes - 1,
                config.membership_width()
            )));
        }
        if self.gamma.len() != config.gamma_len() {
            return Err(Error::Dimension(format!(
                "gamma has length {}, expected {}",
                self.gamma.len(),
                config.gamma_len()
            )));
        }
        if self.alpha.iter().chain(self.gamma.iter()).any(|v| !v.is_finite()) {
            return Err(Error::InvalidData("non-finite regression coefficient".into()));
        }
        Ok(())
    }
}

/// `n x L` matrix of posterior class membership probabilities.
#[derive(Debug, Clone, PartialEq)]
pub struct PosteriorWeights {
    weights: DMatrix<f64>,
}

impl PosteriorWeights {
    pub fn new(weights: DMatrix<f64>) -> Result<Self> {
        for (i, row) in weights.row_iter().enumerate() {
            if row.iter().any(|w| !w.is_finite() || *w < 0.0 || *w > 1.0) {
                return Err(Error::InvalidData(format!(
                    "posterior weight row {i} has entries outside [0, 1]"
                )));
            }
            let sum: f64 = row.iter().sum();
            if (sum - 1.0).abs() > ROW_SUM_TOL {
                return Err(Error::InvalidData(format!(
                    "posterior weight row {i} sums to {sum}"
                )));
            }
        }
        Ok(PosteriorWeights { weights })
    }

    pub(crate) fn from_matrix_unchecked(weights: DMatrix<f64>) -> Self {
        PosteriorWeights { weights }
    }

    /// Weights putting mass `1` on each subject's given class.
    pub fn one_hot(labels: &[usize], num_classes: usize) -> Result<Self> {
        Self::perturbed(labels, num_classes, 1.0)
    }

    /// Mass `own` on the given class and `(1 - own) / (L - 1)` elsewhere.
    pub fn perturbed(labels: &[usize], num_classes: usize, own: f64) -> Result<Self> {
        let mut m = DMatrix::zeros(labels.len(), num_classes);
        for (i, &l) in labels.iter().enumerate() {
            if l >= num_classes {
                return Err(Error::ClassOutOfRange {
                    class: l,
                    num_classes,
                });
            }
            if num_classes == 1 {
                m[(i, 0)] = 1.0;
                continue;
            }
            let other = (1.0 - own) / (num_classes - 1) as f64;
            for c in 0..num_classes {
                m[(i, c)] = if c == l { own } else { other };
            }
        }
        PosteriorWeights::new(m)
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.weights
    }

    pub fn into_matrix(self) -> DMatrix<f64> {
        self.weights
    }

    pub fn num_subjects(&self) -> usize {
        self.weights.nrows()
    }

    pub fn num_classes(&self) -> usize {
        self.weights.ncols()
    }

    pub fn get(&self, subject: usize, class: usize) -> f64 {
        self.weights[(subject, class)]
    }

    /// Index of the most probable class for each subject.
    pub fn modal_assignment(&self) -> Vec<usize> {
        self.weights
            .row_iter()
            .map(|row| {
                let mut best = 0;
                for c in 1..row.len() {
                    if row[c] > row[best] {
                        best = c;
                    }
                }
                best
            })
            .collect()
    }
}

/// The expanded hazard design vector `z_l` for one subject, of length
/// `qL + L - 1`, such that `z_l . gamma` is the class-`l` linear predictor.
pub fn expand_design(x_bar: &[f64], class: usize, num_classes: usize) -> Result<Vec<f64>> {
    if class >= num_classes {
        return Err(Error::ClassOutOfRange {
            class,
            num_classes,
        });
    }
    let q = x_bar.len();
    let mut z = vec![0.0; q * num_classes + num_classes - 1];
    z[..q].copy_from_slice(x_bar);
    if class > 0 {
        let off = q + (class - 1) * (q + 1);
        z[off] = 1.0;
        z[off + 1..off + 1 + q].copy_from_slice(x_bar);
    }
    Ok(z)
}

/// `z_l . gamma` without materialising `z_l`.
pub fn linear_predictor(x_bar: &[f64], class: usize, gamma: &DVector<f64>) -> f64 {
    let q = x_bar.len();
    let mut eta: f64 = x_bar.iter().zip(gamma.iter()).map(|(x, g)| x * g).sum();
    if class > 0 {
        let off = q + (class - 1) * (q + 1);
        eta += gamma[off];
        eta += x_bar
            .iter()
            .zip(gamma.iter().skip(off + 1))
            .map(|(x, g)| x * g)
            .sum::<f64>();
    }
    eta
}

/// Log class membership probabilities from the polytomous logistic model.
/// `x` holds the membership covariates without the intercept.
pub fn log_class_membership_probs(x: &[f64], alpha: &DMatrix<f64>) -> Vec<f64> {
    assert_eq!(
        alpha.ncols(),
        x.len() + 1,
        "membership coefficients do not match covariate length"
    );
    let mut eta = Vec::with_capacity(alpha.nrows() + 1);
    eta.push(0.0);
    for row in alpha.row_iter() {
        eta.push(row[0] + x.iter().zip(row.iter().skip(1)).map(|(a, b)| a * b).sum::<f64>());
    }
    let lse = log_sum_exp(&eta);
    eta.iter_mut().for_each(|e| *e -= lse);
    eta
}

pub fn class_membership_probs(x: &[f64], alpha: &DMatrix<f64>) -> Vec<f64> {
    let mut p: Vec<f64> = log_class_membership_probs(x, alpha)
        .into_iter()
        .map(f64::exp)
        .collect();
    let s: f64 = p.iter().sum();
    p.iter_mut().for_each(|v| *v /= s);
    p
}

/// Log of the class-specific density of `(time, status)`, with the hazard
/// at an event time read as the baseline jump at that time.
pub fn class_density(
    obs: &Observation,
    class: usize,
    params: &Parameters,
    config: &ModelConfig,
) -> Result<f64> {
    if class >= config.num_classes {
        return Err(Error::ClassOutOfRange {
            class,
            num_classes: config.num_classes,
        });
    }
    let eta = linear_predictor(&config.survival_row(obs), class, &params.gamma);
    let cumhaz = params.baseline.eval(obs.time);
    let mut logf = -cumhaz * eta.exp();
    if obs.status {
        let j = params
            .baseline
            .jump_index(obs.time)
            .ok_or(Error::NotAJumpTime(obs.time))?;
        logf += params.baseline.jump_sizes()[j].ln() + eta;
    }
    Ok(logf)
}

/// Each subject's contribution `log Σ_l p_l f_l` to the observed-data
/// log-likelihood.
pub fn mixture_loglik_terms(
    data: &Dataset,
    params: &Parameters,
    config: &ModelConfig,
) -> Result<Vec<f64>> {
    config.validate(data.num_covariates())?;
    params.validate(config)?;
    let mut terms = Vec::with_capacity(data.len());
    let mut buf = vec![0.0; config.num_classes];
    for obs in data.observations() {
        let logp = log_class_membership_probs(&config.membership_row(obs), &params.alpha);
        for (l, slot) in buf.iter_mut().enumerate() {
            *slot = logp[l] + class_density(obs, l, params, config)?;
        }
        terms.push(log_sum_exp(&buf));
    }
    Ok(terms)
}

/// Observed-data log-likelihood (the covariate density is dropped).
pub fn mixture_loglik(data: &Dataset, params: &Parameters, config: &ModelConfig) -> Result<f64> {
    Ok(mixture_loglik_terms(data, params, config)?.iter().sum())
}

pub fn log_sum_exp(v: &[f64]) -> f64 {
    let m = v.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if m == f64::NEG_INFINITY {
        return m;
    }
    m + v.iter().map(|x| (x - m).exp()).sum::<f64>().ln()
}
