//! Classical estimators: MNL maximum likelihood (plain and linear in
//! features) and EM for the Markov chain choice model.

mod em;
mod mle;

pub use em::{fit_mccm_em, EmConfig, EmFit};
pub use mle::{fit_feature_mnl_mle, fit_mnl_mle, FeatureMleFit, MleConfig, MleFit};
