//! Discrete-choice modeling toolkit.
//!
//! The crate is organised around a single probability oracle, [`ChoiceModel`],
//! which maps an [`Assortment`] to a [`ProbVector`]. Everything else plugs into
//! that interface:
//!
//! - [`models`]: ground-truth generators (MNL, Markov chain, ranking lists,
//!   mixed logit), their feature-based variants and the assortment samplers.
//! - [`estimate`]: MNL maximum likelihood and EM for the Markov chain model.
//! - [`neural`]: gated and residual assortment networks with hand-written
//!   backpropagation, Adam training, feature encoders and warm starts.
//! - [`opt`]: assortment optimization (enumeration, revenue ordering, ADXOpt,
//!   Bellman iteration, MILPs and the big-M encoding of a trained network).
//! - [`eval`]: experiment pipelines and diagnostics.
//!
//! Index convention: when a universe declares a no-purchase option it is
//! always the last index `n - 1` and it is always offered.

pub mod choice;
pub mod error;
pub mod estimate;
pub mod eval;
pub mod io;
pub mod models;
pub mod neural;
pub mod opt;
pub mod rng;

pub use choice::{
    ce_loss, expected_revenue, sample_choice, validate_dataset, Assortment, CapacityConstraint,
    ChoiceDataset, ChoiceModel, ChoiceSample, ProbVector, RevenueSpec, Universe, Violation,
};
pub use error::{ChoiceError, Result};
