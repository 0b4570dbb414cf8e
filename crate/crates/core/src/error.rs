use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid data: {0}")]
    InvalidData(String),

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("class index {class} out of range for {num_classes} classes")]
    ClassOutOfRange { class: usize, num_classes: usize },

    #[error("event time {0} is not a jump time of the baseline cumulative hazard")]
    NotAJumpTime(f64),

    #[error("subject {subject} has zero likelihood under every class")]
    DegenerateLikelihood { subject: usize },

    #[error("weighted risk set is empty at event time {time}")]
    ZeroRiskSet { time: f64 },

    #[error("membership model separated after {iterations} Newton iterations")]
    Separation { iterations: usize },

    #[error("{what} coefficients diverged after {iterations} Newton iterations")]
    Diverged { what: &'static str, iterations: usize },

    #[error("{what} information matrix is singular at Newton iteration {iterations}")]
    Singular { what: &'static str, iterations: usize },

    #[error("step halving exhausted in {what} Newton solver at iteration {iterations}")]
    StepHalving { what: &'static str, iterations: usize },

    #[error("non-finite Newton step in {what} solver")]
    NonFinite { what: &'static str },

    #[error("EM iteration {iteration}: {source}")]
    EmIteration {
        iteration: usize,
        #[source]
        source: Box<Error>,
    },

    #[error("too few subjects ({n}) for {params} free parameters")]
    Underdetermined { n: usize, params: usize },

    #[error("profile likelihood inner loop did not converge in {0} iterations")]
    ProfileNotConverged(usize),

    #[error("outer-product information matrix is singular; use a larger sample or fewer classes")]
    SingularCovariance,

    #[error("{failed} of {total} replicates failed")]
    TooManyFailures { failed: usize, total: usize },

    #[error("only {succeeded} of {folds} cross-validation folds produced fits (need 3)")]
    TooFewFolds { succeeded: usize, folds: usize },

    #[error("no candidate class count could be fitted")]
    NoCandidates,

    #[error("unknown scenario `{0}`")]
    UnknownScenario(String),

    #[error("line {line}: {msg}")]
    Parse { line: usize, msg: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Toml(#[from] toml::de::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

impl Error {
    pub(crate) fn at_iteration(self, iteration: usize) -> Self {
        match self {
            e @ Error::EmIteration { .. } => e,
            e => Error::EmIteration {
                iteration,
                source: Box::new(e),
            },
        }
    }
}
