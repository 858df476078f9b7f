use super::dataset::gen_dataset;
use super::sampler::{AssortmentSampler, SamplerKind};
use super::tabular::TabularModel;
use crate::choice::{Assortment, ChoiceDataset, ProbVector, Universe};
use crate::error::Result;

pub const FIXTURE_SAMPLES: usize = 8000;

/// A behavioral vignette: item labels, the offered cases with their true
/// choice probabilities, and a training set drawn with each case equally
/// likely.
#[derive(Debug, Clone)]
pub struct Fixture {
    pub name: &'static str,
    pub labels: Vec<&'static str>,
    pub universe: Universe,
    pub cases: Vec<(&'static str, Assortment, ProbVector)>,
    pub truth: TabularModel,
    pub data: ChoiceDataset,
}

fn build(
    name: &'static str,
    labels: Vec<&'static str>,
    universe: Universe,
    cases: Vec<(&'static str, Vec<usize>, Vec<f64>)>,
    samples: usize,
    seed: u64,
) -> Result<Fixture> {
    let cases: Vec<_> = cases
        .into_iter()
        .map(|(label, items, p)| {
            let mut mask = vec![false; universe.n()];
            items.iter().for_each(|&i| mask[i] = true);
            Ok((label, Assortment::new(&universe, mask)?, ProbVector(p)))
        })
        .collect::<Result<_>>()?;
    let truth = TabularModel::new(
        universe.n(),
        cases
            .iter()
            .map(|(_, a, p)| (a.clone(), p.clone()))
            .collect(),
    )?;
    let sampler = AssortmentSampler::new(
        SamplerKind::Explicit(cases.iter().map(|c| c.1.clone()).collect()),
        universe,
    )?;
    let data = gen_dataset(&truth, &sampler, samples, seed)?;
    Ok(Fixture {
        name,
        labels,
        universe,
        cases,
        truth,
        data,
    })
}

/// The IIA (duplicate product), decoy (newspaper subscription) and
/// preference-cycle (gambles) vignettes.
pub fn fixture_tables(samples: usize, seed: u64) -> Result<Vec<Fixture>> {
    let iia = build(
        "iia",
        vec!["A", "A'", "No-purchase"],
        Universe::with_no_purchase(3)?,
        vec![
            ("Case I", vec![0, 2], vec![0.6, 0.0, 0.4]),
            ("Case II", vec![0, 1, 2], vec![0.3, 0.3, 0.4]),
        ],
        samples,
        seed,
    )?;
    let decoy = build(
        "decoy",
        vec![
            "Internet-Only",
            "Print-&-Internet",
            "Print-Only",
            "No-purchase",
        ],
        Universe::with_no_purchase(4)?,
        vec![
            ("Case I", vec![0, 1, 3], vec![0.57, 0.29, 0.0, 0.14]),
            ("Case II", vec![0, 1, 2, 3], vec![0.29, 0.57, 0.0, 0.14]),
        ],
        samples,
        seed.wrapping_add(1),
    )?;
    let cycle = build(
        "cycle",
        vec!["A", "B", "C"],
        Universe::new(3, false)?,
        vec![
            ("Case I", vec![0, 1], vec![0.75, 0.25, 0.0]),
            ("Case II", vec![1, 2], vec![0.0, 0.75, 0.25]),
            ("Case III", vec![0, 2], vec![0.2, 0.0, 0.8]),
        ],
        samples,
        seed.wrapping_add(2),
    )?;
    Ok(vec![iia, decoy, cycle])
}
