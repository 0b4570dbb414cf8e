//! Latent class proportional hazards models for right-censored survival data.
//!
//! A subject belongs to one of `L` unobserved classes with probabilities given
//! by a multinomial logistic model, and within each class the hazard follows a
//! proportional hazards model sharing a single nonparametric baseline. The
//! crate fits the model by EM (nonparametric maximum likelihood), estimates
//! standard errors by profile likelihood, chooses `L` by information criteria,
//! and scores predictions with inverse-probability-weighted Brier scores.

pub mod cli;
pub mod em;
pub mod error;
pub mod inference;
pub mod io;
pub mod model;
pub mod prediction;
pub mod rng;
pub mod selection;
pub mod sim;

pub use error::{Error, Result};
