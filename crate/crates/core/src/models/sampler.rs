use std::str::FromStr;

use rand::seq::index;
use rand::Rng as _;
use serde::{Deserialize, Serialize};

use crate::choice::{Assortment, Universe};
use crate::error::{ChoiceError, Result};
use crate::rng::{self, Rng};

/// How offered sets are drawn. All kinds act on the real products; the
/// no-purchase option is always added when the universe declares one.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", tag = "kind", content = "arg")]
pub enum SamplerKind {
    /// Size uniform on `1..=P`, then a uniform subset of that size (D-1).
    UniformSize,
    /// Every product independently with probability 1/2 (D-2).
    BernoulliHalf,
    /// One half of the products is blocked, the other half is sampled as in
    /// `UniformSize` (D-3). Needs an even product count.
    HalfBlocked,
    /// Size `P/3` or `P/3 + 1` with equal probability (D-4). Needs `3 | P`.
    WindowThird,
    FixedSize(usize),
    /// Uniform over a fixed list of assortments.
    Explicit(Vec<Assortment>),
}

impl SamplerKind {
    pub fn label(&self) -> String {
        match self {
            SamplerKind::UniformSize => "D-1".into(),
            SamplerKind::BernoulliHalf => "D-2".into(),
            SamplerKind::HalfBlocked => "D-3".into(),
            SamplerKind::WindowThird => "D-4".into(),
            SamplerKind::FixedSize(k) => format!("size-{k}"),
            SamplerKind::Explicit(list) => format!("explicit-{}", list.len()),
        }
    }
}

impl FromStr for SamplerKind {
    type Err = ChoiceError;
    fn from_str(s: &str) -> Result<Self> {
        let s = s.to_ascii_lowercase();
        Ok(match s.as_str() {
            "uniform-size" | "d-1" | "d1" => SamplerKind::UniformSize,
            "bernoulli-half" | "d-2" | "d2" => SamplerKind::BernoulliHalf,
            "half-blocked" | "d-3" | "d3" => SamplerKind::HalfBlocked,
            "window-third" | "d-4" | "d4" => SamplerKind::WindowThird,
            other => match other
                .strip_prefix("fixed-size-")
                .or_else(|| other.strip_prefix("size-"))
            {
                Some(k) => SamplerKind::FixedSize(
                    k.parse()
                        .map_err(|_| ChoiceError::Config(format!("bad size in {other:?}")))?,
                ),
                None => return Err(ChoiceError::Config(format!("unknown sampler {other:?}"))),
            },
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AssortmentSampler {
    pub kind: SamplerKind,
    pub universe: Universe,
}

impl AssortmentSampler {
    pub fn new(kind: SamplerKind, universe: Universe) -> Result<Self> {
        let p = universe.product_count();
        match &kind {
            SamplerKind::HalfBlocked if p % 2 != 0 || p < 2 => {
                return Err(ChoiceError::Config(format!(
                    "half-blocked sampling needs an even product count, got {p}"
                )))
            }
            SamplerKind::WindowThird if p % 3 != 0 || p < 3 => {
                return Err(ChoiceError::Config(format!(
                    "window-third sampling needs a product count divisible by 3, got {p}"
                )))
            }
            SamplerKind::FixedSize(k) if *k == 0 || *k > p => {
                return Err(ChoiceError::Config(format!(
                    "fixed size {k} outside 1..={p}"
                )))
            }
            SamplerKind::Explicit(list) => {
                if list.is_empty() {
                    return Err(ChoiceError::Config(
                        "explicit sampler needs assortments".into(),
                    ));
                }
                for a in list {
                    Assortment::new(&universe, a.mask().to_vec())?;
                }
            }
            _ => {}
        }
        Ok(Self { kind, universe })
    }

    pub fn sample(&self, rng: &mut Rng) -> Assortment {
        let p = self.universe.product_count();
        let mut mask = vec![false; self.universe.n()];
        let pick = |offset: usize, pool: usize, k: usize, rng: &mut Rng, mask: &mut Vec<bool>| {
            for i in index::sample(rng, pool, k) {
                mask[offset + i] = true;
            }
        };
        match &self.kind {
            SamplerKind::UniformSize => {
                let k = rng.random_range(1..=p);
                pick(0, p, k, rng, &mut mask);
            }
            SamplerKind::BernoulliHalf => loop {
                for m in mask.iter_mut().take(p) {
                    *m = rng.random_bool(0.5);
                }
                if self.universe.has_no_purchase() || mask.iter().any(|&b| b) {
                    break;
                }
            },
            SamplerKind::HalfBlocked => {
                let h = p / 2;
                let offset = if rng.random_bool(0.5) { 0 } else { h };
                let k = rng.random_range(1..=h);
                pick(offset, h, k, rng, &mut mask);
            }
            SamplerKind::WindowThird => {
                let k = p / 3 + usize::from(rng.random_bool(0.5));
                pick(0, p, k.min(p), rng, &mut mask);
            }
            SamplerKind::FixedSize(k) => pick(0, p, *k, rng, &mut mask),
            SamplerKind::Explicit(list) => return list[rng.random_range(0..list.len())].clone(),
        }
        if let Some(np) = self.universe.no_purchase_index() {
            mask[np] = true;
        }
        Assortment::from_mask(mask)
    }
}

pub fn sample_assortments(sampler: &AssortmentSampler, m: usize, seed: u64) -> Vec<Assortment> {
    let mut rng = rng::seeded(seed);
    (0..m).map(|_| sampler.sample(&mut rng)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn uni(products: usize) -> Universe {
        Universe::with_no_purchase(products + 1).unwrap()
    }

    #[test]
    fn fixed_size_counts() {
        let s = AssortmentSampler::new(SamplerKind::FixedSize(4), uni(20)).unwrap();
        for a in sample_assortments(&s, 500, 1) {
            assert_eq!(a.len(), 5);
            assert!(a.contains(20));
        }
    }

    #[test]
    fn bernoulli_inclusion_rate() {
        let s = AssortmentSampler::new(SamplerKind::BernoulliHalf, uni(10)).unwrap();
        let draws = sample_assortments(&s, 100_000, 2);
        for i in 0..10 {
            let f = draws.iter().filter(|a| a.contains(i)).count() as f64 / 1e5;
            assert!((f - 0.5).abs() < 0.01, "product {i}: {f}");
        }
    }

    #[test]
    fn half_blocked_blocks_a_half() {
        let s = AssortmentSampler::new(SamplerKind::HalfBlocked, uni(20)).unwrap();
        for a in sample_assortments(&s, 1000, 3) {
            let low = (0..10).any(|i| a.contains(i));
            let high = (10..20).any(|i| a.contains(i));
            assert!(low != high);
        }
        assert!(AssortmentSampler::new(SamplerKind::HalfBlocked, uni(19)).is_err());
    }

    #[test]
    fn window_third_sizes() {
        let s = AssortmentSampler::new(SamplerKind::WindowThird, uni(30)).unwrap();
        for a in sample_assortments(&s, 1000, 4) {
            assert!(a.len() == 11 || a.len() == 12);
        }
        assert!(AssortmentSampler::new(SamplerKind::WindowThird, uni(20)).is_err());
    }

    #[test]
    fn uniform_size_valid_and_deterministic() {
        let u = uni(8);
        let s = AssortmentSampler::new(SamplerKind::UniformSize, u).unwrap();
        let a = sample_assortments(&s, 200, 5);
        assert_eq!(a, sample_assortments(&s, 200, 5));
        for x in &a {
            assert!(Assortment::new(&u, x.mask().to_vec()).is_ok());
            assert!(x.len() >= 2);
        }
    }

    #[test]
    fn parses_names() {
        assert_eq!(
            "d-3".parse::<SamplerKind>().unwrap(),
            SamplerKind::HalfBlocked
        );
        assert_eq!(
            "fixed-size-4".parse::<SamplerKind>().unwrap(),
            SamplerKind::FixedSize(4)
        );
        assert!("nope".parse::<SamplerKind>().is_err());
    }
}
