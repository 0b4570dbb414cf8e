//! CSV input and the JSON fit report.

use std::io::Read;
use std::path::Path;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::em::EmState;
use crate::error::{Error, Result};
use crate::inference::CovarianceResult;
use crate::model::{
    Dataset, Initialization, ModelConfig, Observation, Parameters, Standardization, StepFunction,
};
use crate::selection::CriteriaReport;

pub const SCHEMA_VERSION: u32 = 1;

/// Reads `time,status,<covariates...>` with a header row. Errors carry the
/// 1-based line number of the offending record.
pub fn read_dataset<R: Read>(reader: R) -> Result<Dataset> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_reader(reader);
    let header = rdr.headers()?.clone();
    if header.is_empty() || header.iter().all(str::is_empty) {
        return Err(Error::Parse {
            line: 1,
            msg: "empty input, expected a header row".into(),
        });
    }
    if header.len() < 2 || !header[0].eq_ignore_ascii_case("time") || !header[1].eq_ignore_ascii_case("status") {
        return Err(Error::Parse {
            line: 1,
            msg: "header must start with time,status".into(),
        });
    }
    let names: Vec<String> = header.iter().skip(2).map(String::from).collect();
    let mut observations = Vec::new();
    for record in rdr.records() {
        let record = record.map_err(|e| {
            let line = e.position().map_or(0, |p| p.line() as usize);
            Error::Parse {
                line,
                msg: e.to_string(),
            }
        })?;
        let line = record.position().map_or(0, |p| p.line() as usize);
        let parse_err = |msg: String| Error::Parse { line, msg };
        if record.len() != header.len() {
            return Err(parse_err(format!(
                "expected {} fields, found {}",
                header.len(),
                record.len()
            )));
        }
        let number = |k: usize| -> Result<f64> {
            record[k]
                .parse::<f64>()
                .map_err(|_| parse_err(format!("column '{}': '{}' is not a number", &header[k], &record[k])))
        };
        let time = number(0)?;
        let status = match &record[1] {
            "1" => true,
            "0" => false,
            other => return Err(parse_err(format!("status must be 0 or 1, found '{other}'"))),
        };
        let covariates = (2..record.len()).map(number).collect::<Result<Vec<_>>>()?;
        let obs = Observation::new(time, status, covariates).map_err(|e| parse_err(e.to_string()))?;
        observations.push(obs);
    }
    if observations.is_empty() {
        return Err(Error::Parse {
            line: 2,
            msg: "no data rows".into(),
        });
    }
    Dataset::new(observations, names)
}

/// Reads a covariate table for prediction. Leading `time,status` columns, if
/// present, are skipped.
pub fn read_covariates<R: Read>(reader: R) -> Result<(Vec<String>, Vec<Vec<f64>>)> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_reader(reader);
    let header = rdr.headers()?.clone();
    if header.is_empty() || header.iter().all(str::is_empty) {
        return Err(Error::Parse {
            line: 1,
            msg: "empty input, expected a header row".into(),
        });
    }
    let skip = if header.len() >= 2
        && header[0].eq_ignore_ascii_case("time")
        && header[1].eq_ignore_ascii_case("status")
    {
        2
    } else {
        0
    };
    let names: Vec<String> = header.iter().skip(skip).map(String::from).collect();
    let mut rows = Vec::new();
    for record in rdr.records() {
        let record = record.map_err(|e| Error::Parse {
            line: e.position().map_or(0, |p| p.line() as usize),
            msg: e.to_string(),
        })?;
        let line = record.position().map_or(0, |p| p.line() as usize);
        if record.len() != header.len() {
            return Err(Error::Parse {
                line,
                msg: format!("expected {} fields, found {}", header.len(), record.len()),
            });
        }
        let row = (skip..record.len())
            .map(|k| {
                record[k]
                    .parse::<f64>()
                    .ok()
                    .filter(|v| v.is_finite())
                    .ok_or_else(|| Error::Parse {
                        line,
                        msg: format!("column '{}': '{}' is not a finite number", &header[k], &record[k]),
                    })
            })
            .collect::<Result<Vec<_>>>()?;
        rows.push(row);
    }
    Ok((names, rows))
}

pub fn read_dataset_path(path: &Path) -> Result<Dataset> {
    read_dataset(std::fs::File::open(path)?)
}

pub fn write_dataset<W: std::io::Write>(data: &Dataset, labels: Option<&[usize]>, writer: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    let mut header = vec!["time".to_string(), "status".to_string()];
    header.extend(data.covariate_names().iter().cloned());
    if labels.is_some() {
        header.push("class".into());
    }
    w.write_record(&header)?;
    for (i, obs) in data.observations().iter().enumerate() {
        let mut row = vec![obs.time.to_string(), (obs.status as u8).to_string()];
        row.extend(obs.covariates.iter().map(f64::to_string));
        if let Some(l) = labels {
            row.push((l[i] + 1).to_string());
        }
        w.write_record(&row)?;
    }
    w.flush()?;
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConfigEcho {
    pub num_classes: usize,
    pub membership_covariates: Vec<String>,
    pub survival_covariates: Vec<String>,
    pub tolerance: f64,
    pub max_iterations: usize,
    pub initialization: String,
    pub starts: usize,
    pub standardize: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Estimate {
    pub name: String,
    pub value: f64,
    pub se: Option<f64>,
    pub lower: Option<f64>,
    pub upper: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Jump {
    pub time: f64,
    pub jump: f64,
    pub cumulative: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitReport {
    pub schema_version: u32,
    pub timestamp: String,
    pub seed: u64,
    pub input: Option<String>,
    pub config: ConfigEcho,
    pub covariate_names: Vec<String>,
    /// Column transforms applied before fitting, when standardizing.
    pub standardization: Option<Vec<Standardization>>,
    pub n: usize,
    pub events: usize,
    pub estimates: Vec<Estimate>,
    pub confidence_level: f64,
    pub covariance_error: Option<String>,
    pub baseline: Vec<Jump>,
    pub loglik: f64,
    pub loglik_history: Vec<f64>,
    pub iterations: usize,
    pub converged: bool,
    pub frozen: Vec<String>,
    pub criteria: CriteriaReport,
}

/// Everything needed to assemble a [`FitReport`].
pub struct ReportInputs<'a> {
    pub data: &'a Dataset,
    pub config: &'a ModelConfig,
    pub state: &'a EmState,
    pub covariance: std::result::Result<&'a CovarianceResult, String>,
    pub intervals: Option<Vec<(f64, f64)>>,
    pub level: f64,
    pub criteria: CriteriaReport,
    pub standardization: Option<Vec<Standardization>>,
    pub seed: u64,
    pub input: Option<String>,
    pub timestamp: String,
}

impl FitReport {
    pub fn new(inp: ReportInputs<'_>) -> FitReport {
        let names = inp.config.parameter_names(inp.data.covariate_names());
        let theta = inp.state.params.theta();
        let ses = inp.covariance.as_ref().ok().map(|c| c.standard_errors());
        let estimates = names
            .iter()
            .enumerate()
            .map(|(k, name)| Estimate {
                name: name.clone(),
                value: theta[k],
                se: ses.as_ref().map(|s| s[k]),
                lower: inp.intervals.as_ref().map(|ci| ci[k].0),
                upper: inp.intervals.as_ref().map(|ci| ci[k].1),
            })
            .collect();
        let b = &inp.state.params.baseline;
        let baseline = (0..b.len())
            .map(|j| Jump {
                time: b.jump_times()[j],
                jump: b.jump_sizes()[j],
                cumulative: b.cumulative()[j],
            })
            .collect();
        let pick = |cols: &[usize]| cols.iter().map(|&c| inp.data.covariate_names()[c].clone()).collect();
        let offset = inp.config.alpha_len();
        FitReport {
            schema_version: SCHEMA_VERSION,
            timestamp: inp.timestamp,
            seed: inp.seed,
            input: inp.input,
            config: ConfigEcho {
                num_classes: inp.config.num_classes,
                membership_covariates: pick(&inp.config.membership_covariates),
                survival_covariates: pick(&inp.config.survival_covariates),
                tolerance: inp.config.tolerance,
                max_iterations: inp.config.max_iterations,
                initialization: inp.config.initialization.name().into(),
                starts: inp.config.starts,
                standardize: inp.standardization.is_some(),
            },
            covariate_names: inp.data.covariate_names().to_vec(),
            standardization: inp.standardization,
            n: inp.data.len(),
            events: inp.data.num_events(),
            estimates,
            confidence_level: inp.level,
            covariance_error: inp.covariance.err(),
            baseline,
            loglik: inp.state.loglik(),
            loglik_history: inp.state.loglik_history.clone(),
            iterations: inp.state.iterations,
            converged: inp.state.converged,
            frozen: inp.state.frozen_gamma.iter().map(|&k| names[offset + k].clone()).collect(),
            criteria: inp.criteria,
        }
    }

    /// Rebuilds the model configuration from the echoed column names.
    pub fn model_config(&self) -> Result<ModelConfig> {
        let index = |name: &String| {
            self.covariate_names
                .iter()
                .position(|c| c == name)
                .ok_or_else(|| Error::InvalidConfig(format!("unknown covariate '{name}' in report")))
        };
        let config = ModelConfig {
            num_classes: self.config.num_classes,
            membership_covariates: self.config.membership_covariates.iter().map(index).collect::<Result<_>>()?,
            survival_covariates: self.config.survival_covariates.iter().map(index).collect::<Result<_>>()?,
            tolerance: self.config.tolerance,
            max_iterations: self.config.max_iterations,
            initialization: match self.config.initialization.as_str() {
                "random" => Initialization::Random,
                _ => Initialization::Kmeans,
            },
            starts: self.config.starts,
            seed: self.seed,
        };
        config.validate(self.covariate_names.len())?;
        Ok(config)
    }

    /// The fitted parameters on the (possibly standardized) fitting scale.
    pub fn parameters(&self) -> Result<Parameters> {
        let config = self.model_config()?;
        if self.estimates.len() != config.num_params() {
            return Err(Error::Dimension("report has the wrong number of estimates".into()));
        }
        let baseline = StepFunction::new(
            self.baseline.iter().map(|j| j.time).collect(),
            self.baseline.iter().map(|j| j.jump).collect(),
        )?;
        let mut params = Parameters {
            alpha: DMatrix::zeros(config.num_classes - 1, config.membership_width()),
            gamma: DVector::zeros(config.gamma_len()),
            baseline,
        };
        params.set_theta(&DVector::from_iterator(
            self.estimates.len(),
            self.estimates.iter().map(|e| e.value),
        ));
        Ok(params)
    }

    /// Applies the stored standardization, if any, to raw data.
    pub fn prepare(&self, data: &Dataset) -> Result<Dataset> {
        if data.covariate_names() != self.covariate_names.as_slice() {
            return Err(Error::InvalidData(format!(
                "covariates {:?} do not match the fitted model's {:?}",
                data.covariate_names(),
                self.covariate_names
            )));
        }
        match &self.standardization {
            None => Ok(data.clone()),
            Some(t) => {
                let obs = data
                    .observations()
                    .iter()
                    .map(|o| {
                        Observation::new(o.time, o.status, crate::model::apply_standardization(&o.covariates, t))
                    })
                    .collect::<Result<Vec<_>>>()?;
                Dataset::new(obs, data.covariate_names().to_vec())
            }
        }
    }
}
