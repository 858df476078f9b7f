use std::path::Path;

use serde::{Deserialize, Serialize};

use super::feature::{FeatureMccmModel, FeatureMnlModel};
use super::mccm::MccmModel;
use super::mmnl::MmnlModel;
use super::mnl::MnlModel;
use super::np::NpModel;
use super::tabular::TabularModel;
use crate::choice::{Assortment, ChoiceModel, ProbVector};
use crate::error::Result;
use crate::io::write_atomic;
use crate::neural::{FeatureNet, NetworkParams};

/// Any persisted model. The JSON form carries a `kind` tag next to the raw
/// parameter arrays.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum AnyModel {
    Mnl(MnlModel),
    Mccm(MccmModel),
    Np(NpModel),
    Mmnl(MmnlModel),
    FeatureMnl(FeatureMnlModel),
    FeatureMccm(FeatureMccmModel),
    Tabular(TabularModel),
    Network(NetworkParams),
    FeatureNetwork(FeatureNet),
}

impl AnyModel {
    pub fn kind(&self) -> &'static str {
        match self {
            AnyModel::Mnl(_) => "mnl",
            AnyModel::Mccm(_) => "mccm",
            AnyModel::Np(_) => "np",
            AnyModel::Mmnl(_) => "mmnl",
            AnyModel::FeatureMnl(_) => "feature-mnl",
            AnyModel::FeatureMccm(_) => "feature-mccm",
            AnyModel::Tabular(_) => "tabular",
            AnyModel::Network(_) => "network",
            AnyModel::FeatureNetwork(_) => "feature-network",
        }
    }

    fn inner(&self) -> &dyn ChoiceModel {
        match self {
            AnyModel::Mnl(m) => m,
            AnyModel::Mccm(m) => m,
            AnyModel::Np(m) => m,
            AnyModel::Mmnl(m) => m,
            AnyModel::FeatureMnl(m) => m,
            AnyModel::FeatureMccm(m) => m,
            AnyModel::Tabular(m) => m,
            AnyModel::Network(m) => m,
            AnyModel::FeatureNetwork(m) => m,
        }
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        write_atomic(path, self.to_json()?.as_bytes())
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }
}

impl ChoiceModel for AnyModel {
    fn n(&self) -> usize {
        self.inner().n()
    }

    fn probabilities(&self, assortment: &Assortment) -> Result<ProbVector> {
        self.inner().probabilities(assortment)
    }

    fn probabilities_for(
        &self,
        assortment: &Assortment,
        customer: Option<&[f64]>,
    ) -> Result<ProbVector> {
        self.inner().probabilities_for(assortment, customer)
    }
}
