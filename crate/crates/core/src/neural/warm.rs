use rand::Rng as _;
use serde::{Deserialize, Serialize};

use super::params::{Layer, NetworkParams, INIT_BIAS};
use crate::error::{ChoiceError, Result};
use crate::rng;

/// Initialisation of the entries a warm start adds.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum WarmInit {
    /// Same uniform scheme as a fresh network of the new size.
    Standard,
    Zero,
}

/// Grows a feature-free network from `old.n` to `n_new` items. Every width
/// equal to the old item count is enlarged; old items keep their index
/// except the no-purchase option, which moves to `n_new - 1`. Old weights
/// are copied into the corresponding positions.
pub fn warm_start_augment(
    old: &NetworkParams,
    n_new: usize,
    init: WarmInit,
    seed: u64,
) -> Result<NetworkParams> {
    let n_old = old.n;
    if old.input != n_old {
        return Err(ChoiceError::Unsupported(
            "warm start needs a feature-free network".into(),
        ));
    }
    if n_new <= n_old {
        return Err(ChoiceError::Unsupported(format!(
            "cannot shrink a network from {n_old} to {n_new} items"
        )));
    }
    // map[k] = new index of old position k for an item-indexed width
    let item_map: Vec<usize> = (0..n_old)
        .map(|k| if k + 1 == n_old { n_new - 1 } else { k })
        .collect();
    let resize = |w: usize| if w == n_old { n_new } else { w };
    let map_for = |w: usize| -> Vec<usize> {
        if w == n_old {
            item_map.clone()
        } else {
            (0..w).collect()
        }
    };
    let mut r = rng::seeded(seed);
    let mut layers = Vec::with_capacity(old.layers.len());
    for l in &old.layers {
        let (rows, cols) = (resize(l.rows), resize(l.cols));
        let mut new = match init {
            WarmInit::Zero => Layer::zeros(rows, cols),
            WarmInit::Standard => {
                let bound = (6.0 / (rows + cols) as f64).sqrt();
                let mut x = Layer::zeros(rows, cols);
                x.w.iter_mut()
                    .for_each(|v| *v = r.random_range(-bound..=bound));
                x.b.iter_mut().for_each(|b| *b = INIT_BIAS);
                x
            }
        };
        let (rmap, cmap) = (map_for(l.rows), map_for(l.cols));
        for (i, &ni) in rmap.iter().enumerate() {
            new.b[ni] = l.b[i];
            for (j, &nj) in cmap.iter().enumerate() {
                *new.at_mut(ni, nj) = l.at(i, j);
            }
        }
        layers.push(new);
    }
    NetworkParams::new(old.arch, layers, n_new, n_new)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::choice::{Assortment, ChoiceModel};
    use crate::neural::Arch;

    #[test]
    fn copies_old_block() {
        let old = NetworkParams::glorot(Arch::Gasn, &[4, 6, 4], 1).unwrap();
        let new = warm_start_augment(&old, 7, WarmInit::Standard, 2).unwrap();
        assert_eq!(new.dims(), vec![7, 6, 7]);
        for i in 0..6 {
            for j in 0..3 {
                assert_eq!(new.layers[0].at(i, j), old.layers[0].at(i, j));
            }
            assert_eq!(new.layers[0].at(i, 6), old.layers[0].at(i, 3));
        }
        assert_eq!(new.layers[1].at(6, 2), old.layers[1].at(3, 2));
        assert!(warm_start_augment(&old, 4, WarmInit::Zero, 0).is_err());
    }

    #[test]
    fn zero_init_preserves_old_predictions() {
        for arch in [Arch::Gasn, Arch::Rasn] {
            let dims = [5, 5, 5];
            let old = NetworkParams::glorot(arch, &dims, 9).unwrap();
            let new = warm_start_augment(&old, 8, WarmInit::Zero, 0).unwrap();
            for bits in 1u64..32 {
                let s_old = Assortment::from_bits(5, bits | 16);
                let mut mask = vec![false; 8];
                for i in 0..4 {
                    mask[i] = s_old.contains(i);
                }
                mask[7] = true;
                let s_new = Assortment::from_mask(mask);
                let a = old.probabilities(&s_old).unwrap();
                let b = new.probabilities(&s_new).unwrap();
                for i in 0..4 {
                    assert!((a.get(i) - b.get(i)).abs() < 1e-12);
                }
                assert!((a.get(4) - b.get(7)).abs() < 1e-12);
            }
        }
    }
}
