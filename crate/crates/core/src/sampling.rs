//! Row index sets, sampling and seed derivation.

use rand::seq::index;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};

/// Generator used everywhere randomness is needed.
pub type StreamRng = ChaCha8Rng;

pub fn rng_from_seed(seed: u64) -> StreamRng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// SplitMix64 finalizer.
pub fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Derives an independent stream seed from a base seed and a path of
/// indices, e.g. `(rank_ratio index, sample_ratio index, trial)`.
pub fn derive_seed(base: u64, path: &[u64]) -> u64 {
    path.iter()
        .fold(splitmix64(base), |h, &p| splitmix64(h ^ splitmix64(p.wrapping_add(0x6A09_E667_F3BC_C909))))
}

/// A sampled set of row indices `Ω ⊂ [0, bound)`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct IndexSet {
    indices: Vec<usize>,
    bound: usize,
    with_replacement: bool,
}

impl IndexSet {
    pub fn new(indices: Vec<usize>, bound: usize, with_replacement: bool) -> Result<Self> {
        if let Some(&bad) = indices.iter().find(|&&i| i >= bound) {
            return Err(Error::IndexOutOfBounds { index: bad, bound });
        }
        if !with_replacement {
            let mut seen = vec![false; bound];
            for &i in &indices {
                if std::mem::replace(&mut seen[i], true) {
                    return Err(Error::DuplicateIndex(i));
                }
            }
        }
        Ok(IndexSet {
            indices,
            bound,
            with_replacement,
        })
    }

    /// `d` uniform draws from `[0, m)`, with or without replacement.
    pub fn sample<R: Rng + ?Sized>(rng: &mut R, m: usize, d: usize, with_replacement: bool) -> Self {
        let indices = if with_replacement {
            (0..d).map(|_| rng.random_range(0..m)).collect()
        } else {
            assert!(d <= m, "cannot draw {d} distinct indices from {m}");
            index::sample(rng, m, d).into_vec()
        };
        IndexSet {
            indices,
            bound: m,
            with_replacement,
        }
    }

    /// Keeps each of `[0, n)` independently with probability `p`.
    pub fn bernoulli<R: Rng + ?Sized>(rng: &mut R, n: usize, p: f64) -> Self {
        let indices = (0..n).filter(|_| rng.random::<f64>() < p).collect();
        IndexSet {
            indices,
            bound: n,
            with_replacement: false,
        }
    }

    pub fn indices(&self) -> &[usize] {
        &self.indices
    }

    pub fn len(&self) -> usize {
        self.indices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.indices.is_empty()
    }

    pub fn bound(&self) -> usize {
        self.bound
    }

    pub fn with_replacement(&self) -> bool {
        self.with_replacement
    }

    /// Same set with repeated indices removed (first occurrence kept).
    pub fn deduplicated(&self) -> IndexSet {
        let mut seen = vec![false; self.bound];
        let indices = self
            .indices
            .iter()
            .copied()
            .filter(|&i| !std::mem::replace(&mut seen[i], true))
            .collect();
        IndexSet {
            indices,
            bound: self.bound,
            with_replacement: false,
        }
    }

    pub fn gather(&self, v: &[f64]) -> Vec<f64> {
        self.indices.iter().map(|&i| v[i]).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn validates_bounds_and_duplicates() {
        assert!(IndexSet::new(vec![0, 3], 3, true).is_err());
        assert!(matches!(
            IndexSet::new(vec![1, 1], 3, false),
            Err(Error::DuplicateIndex(1))
        ));
        assert!(IndexSet::new(vec![1, 1], 3, true).is_ok());
    }

    #[test]
    fn without_replacement_draws_are_distinct() {
        let mut rng = rng_from_seed(3);
        let s = IndexSet::sample(&mut rng, 20, 20, false);
        let mut idx = s.indices().to_vec();
        idx.sort_unstable();
        assert_eq!(idx, (0..20).collect::<Vec<_>>());
    }

    #[test]
    fn dedup_keeps_first_occurrences() {
        let s = IndexSet::new(vec![4, 1, 4, 2, 1], 5, true).unwrap();
        assert_eq!(s.deduplicated().indices(), &[4, 1, 2]);
    }

    #[test]
    fn derived_seeds_differ_along_each_axis() {
        let a = derive_seed(7, &[0, 0, 0]);
        assert_ne!(a, derive_seed(7, &[0, 0, 1]));
        assert_ne!(a, derive_seed(7, &[0, 1, 0]));
        assert_ne!(a, derive_seed(8, &[0, 0, 0]));
        assert_eq!(a, derive_seed(7, &[0, 0, 0]));
    }
}
