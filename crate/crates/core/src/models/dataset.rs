use super::sampler::AssortmentSampler;
use crate::choice::{draw_index, Assortment, ChoiceDataset, ChoiceModel, ChoiceSample, Universe};
use crate::error::{ChoiceError, Result};
use crate::rng;

/// `m` transactions: assortments from `sampler`, choices from `model`.
/// Assortments and choices use separate streams of `seed`, so the assortment
/// sequence does not depend on the model.
pub fn gen_dataset<M: ChoiceModel + ?Sized>(
    model: &M,
    sampler: &AssortmentSampler,
    m: usize,
    seed: u64,
) -> Result<ChoiceDataset> {
    let mut arng = rng::stream(seed, 0);
    let assortments: Vec<Assortment> = (0..m).map(|_| sampler.sample(&mut arng)).collect();
    gen_dataset_from(model, sampler.universe, assortments, seed)
}

/// Draws one choice for each given assortment.
pub fn gen_dataset_from<M: ChoiceModel + ?Sized>(
    model: &M,
    universe: Universe,
    assortments: Vec<Assortment>,
    seed: u64,
) -> Result<ChoiceDataset> {
    if model.n() != universe.n() {
        return Err(ChoiceError::Dimension {
            expected: universe.n(),
            got: model.n(),
            context: "model universe",
        });
    }
    let mut crng = rng::stream(seed, 1);
    let mut samples = Vec::with_capacity(assortments.len());
    for a in assortments {
        let p = model.probabilities(&a)?;
        samples.push(ChoiceSample::new(draw_index(p.as_slice(), &mut crng), a));
    }
    Ok(ChoiceDataset::new(universe, samples))
}

/// Appends `copies` no-purchase transactions per original transaction, with
/// the same assortment and customer features.
pub fn augment_no_purchase(data: &ChoiceDataset, copies: usize) -> Result<ChoiceDataset> {
    let np = data
        .universe
        .no_purchase_index()
        .ok_or_else(|| ChoiceError::Dataset("universe has no no-purchase option".into()))?;
    let mut out = data.clone();
    for s in &data.samples {
        for _ in 0..copies {
            out.samples.push(ChoiceSample {
                chosen: np,
                assortment: s.assortment.clone(),
                customer_features: s.customer_features.clone(),
            });
        }
    }
    Ok(out)
}
