use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Disjoint train/validation/test index lists into a sample pool.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SplitSpec {
    pub train_idx: Vec<usize>,
    pub val_idx: Vec<usize>,
    pub test_idx: Vec<usize>,
    pub seed: u64,
}

/// Seeded permutation of `0..pool_size`, cut into contiguous slices of the
/// requested sizes. Indices beyond the three slices stay unused.
pub fn make_split(pool_size: usize, sizes: (usize, usize, usize), seed: u64) -> Result<SplitSpec> {
    let (n_train, n_val, n_test) = sizes;
    let requested = n_train + n_val + n_test;
    if requested > pool_size {
        return Err(Error::SplitOverflow {
            requested,
            pool: pool_size,
        });
    }
    let mut perm: Vec<usize> = (0..pool_size).collect();
    perm.shuffle(&mut crate::seed::rng(seed));
    Ok(SplitSpec {
        train_idx: perm[..n_train].to_vec(),
        val_idx: perm[n_train..n_train + n_val].to_vec(),
        test_idx: perm[n_train + n_val..requested].to_vec(),
        seed,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::collections::HashSet;

    #[test]
    fn small_pool_disjoint_cover() {
        let s = make_split(10, (6, 2, 2), 3).unwrap();
        let all: HashSet<usize> = s
            .train_idx
            .iter()
            .chain(&s.val_idx)
            .chain(&s.test_idx)
            .copied()
            .collect();
        assert_eq!(all, (0..10).collect());
        assert_eq!(s.train_idx.len(), 6);
    }

    #[test]
    fn deterministic_and_seed_sensitive() {
        assert_eq!(make_split(100, (50, 25, 25), 1).unwrap(), make_split(100, (50, 25, 25), 1).unwrap());
        assert_ne!(
            make_split(100, (50, 25, 25), 1).unwrap().train_idx,
            make_split(100, (50, 25, 25), 2).unwrap().train_idx
        );
    }

    #[test]
    fn full_scale_sizes() {
        let s = make_split(280_000, (60_000, 20_000, 200_000), 9).unwrap();
        assert_eq!(
            (s.train_idx.len(), s.val_idx.len(), s.test_idx.len()),
            (60_000, 20_000, 200_000)
        );
    }

    #[test]
    fn overflow_rejected() {
        assert!(matches!(
            make_split(10, (6, 3, 2), 0),
            Err(Error::SplitOverflow { requested: 11, pool: 10 })
        ));
    }
}
