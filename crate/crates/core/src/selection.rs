//! Information criteria for choosing the number of latent classes.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::em::{fit, EmState};
use crate::error::{Error, Result};
use crate::model::{Dataset, Initialization, ModelConfig, PosteriorWeights};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CriteriaReport {
    pub num_classes: usize,
    pub loglik: f64,
    /// Finite-dimensional parameter count (baseline jumps excluded).
    pub num_params: usize,
    pub aic: f64,
    pub bic: f64,
    pub icl_bic: f64,
    /// `1 - EN / (n log L)`, reported as 1 for a single class.
    pub entropy_index: f64,
    pub converged: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Criterion {
    Aic,
    Bic,
    IclBic,
    Entropy,
}

impl Criterion {
    pub const ALL: [Criterion; 4] = [Criterion::Aic, Criterion::Bic, Criterion::IclBic, Criterion::Entropy];

    pub fn name(self) -> &'static str {
        match self {
            Criterion::Aic => "AIC",
            Criterion::Bic => "BIC",
            Criterion::IclBic => "ICL-BIC",
            Criterion::Entropy => "entropy",
        }
    }

    /// Value oriented so that smaller is better.
    fn score(self, report: &CriteriaReport) -> f64 {
        match self {
            Criterion::Aic => report.aic,
            Criterion::Bic => report.bic,
            Criterion::IclBic => report.icl_bic,
            Criterion::Entropy => -report.entropy_index,
        }
    }
}

/// Classification entropy `Σ_i Σ_l -w_il log w_il`, with `0 log 0 = 0`.
pub fn classification_entropy(weights: &PosteriorWeights) -> f64 {
    weights
        .matrix()
        .iter()
        .filter(|&&w| w > 0.0)
        .map(|&w| -w * w.ln())
        .sum()
}

pub fn entropy_index(weights: &PosteriorWeights) -> f64 {
    let l = weights.num_classes();
    if l <= 1 {
        return 1.0;
    }
    let n = weights.num_subjects() as f64;
    (1.0 - classification_entropy(weights) / (n * (l as f64).ln())).clamp(0.0, 1.0)
}

pub fn criteria(fit: &EmState, data: &Dataset, config: &ModelConfig) -> CriteriaReport {
    let loglik = fit.loglik();
    let r = config.num_params();
    let n = data.len() as f64;
    let aic = -2.0 * loglik + 2.0 * r as f64;
    let bic = -2.0 * loglik + r as f64 * n.ln();
    let en = classification_entropy(&fit.weights);
    CriteriaReport {
        num_classes: config.num_classes,
        loglik,
        num_params: r,
        aic,
        bic,
        icl_bic: bic + 2.0 * en,
        entropy_index: entropy_index(&fit.weights),
        converged: fit.converged,
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Selection {
    pub table: Vec<CriteriaReport>,
    /// Candidate class counts whose fit failed, with the reason.
    pub failed: Vec<(usize, String)>,
    pub best: Vec<(Criterion, usize)>,
}

impl Selection {
    pub fn best_for(&self, criterion: Criterion) -> Option<usize> {
        self.best.iter().find(|(c, _)| *c == criterion).map(|&(_, l)| l)
    }
}

/// The class count preferred by `criterion`, breaking ties toward fewer classes.
pub fn choose(table: &[CriteriaReport], criterion: Criterion) -> Option<usize> {
    let mut best: Option<&CriteriaReport> = None;
    for report in table {
        let s = criterion.score(report);
        if s.is_nan() {
            continue;
        }
        best = match best {
            Some(b) => {
                let bs = criterion.score(b);
                if s < bs || (s == bs && report.num_classes < b.num_classes) {
                    Some(report)
                } else {
                    Some(b)
                }
            }
            None => Some(report),
        };
    }
    best.map(|r| r.num_classes)
}

/// Fits every candidate class count with k-means initialization and picks
/// the best under each criterion.
pub fn select_num_classes(data: &Dataset, config: &ModelConfig, candidates: &[usize]) -> Result<Selection> {
    if candidates.is_empty() {
        return Err(Error::NoCandidates);
    }
    let results: Vec<(usize, Result<CriteriaReport>)> = candidates
        .par_iter()
        .map(|&l| {
            let mut cfg = config.clone();
            cfg.num_classes = l;
            cfg.initialization = Initialization::Kmeans;
            (l, fit(data, &cfg).map(|state| criteria(&state, data, &cfg)))
        })
        .collect();
    let mut table = Vec::new();
    let mut failed = Vec::new();
    for (l, res) in results {
        match res {
            Ok(report) => table.push(report),
            Err(e) => failed.push((l, e.to_string())),
        }
    }
    if table.is_empty() {
        return Err(Error::NoCandidates);
    }
    let best = Criterion::ALL
        .iter()
        .filter_map(|&c| choose(&table, c).map(|l| (c, l)))
        .collect();
    Ok(Selection { table, failed, best })
}
