//! Gated and residual assortment networks.
//!
//! A network maps the assortment bit-vector `S` (or, for the feature-based
//! variants, a latent-utility vector built from product and customer
//! features) through ReLU layers to one logit per item; the gated softmax
//! turns logits into choice probabilities supported on `S`.
//! Gradients are derived by hand; training is mini-batch Adam with
//! best-validation snapshots.

mod bound;
mod feature;
mod params;
mod train;
mod warm;

pub use bound::generalization_bound;
pub use feature::{FeatureNet, Mlp};
pub use params::{Activations, Arch, Layer, NetworkParams, INIT_BIAS};
pub use train::{train, train_with, Adam, EpochLog, TrainConfig, TrainLog, Trainable};
pub use warm::{warm_start_augment, WarmInit};
