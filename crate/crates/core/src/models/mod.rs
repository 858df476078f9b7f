//! Ground-truth choice models, their generators and the assortment samplers.

mod dataset;
mod feature;
mod fixtures;
mod generate;
mod mccm;
mod mmnl;
mod mnl;
mod np;
mod persist;
mod sampler;
mod tabular;

pub use dataset::{augment_no_purchase, gen_dataset, gen_dataset_from};
pub use feature::{FeatureMccmModel, FeatureMnlModel};
pub use fixtures::{fixture_tables, Fixture, FIXTURE_SAMPLES};
pub use generate::{
    gen_feature_instance, gen_instance, mccm_recipe, mmnl_windows, np_perm_count, FeatureKind,
    MccmRecipe, ModelKind,
};
pub use mccm::{fundamental_matrix, MccmModel};
pub use mmnl::MmnlModel;
pub use mnl::{softmax, MnlModel};
pub use np::NpModel;
pub use persist::AnyModel;
pub use sampler::{sample_assortments, AssortmentSampler, SamplerKind};
pub use tabular::TabularModel;
