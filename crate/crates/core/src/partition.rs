//! Hierarchical holdout/development/validation splits and the random
//! half-partitions used by the sliced-Wasserstein engine.

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::seed;

pub const N_HOLDOUTS: usize = 3;
pub const N_FOLDS: usize = 5;
pub const DEFAULT_PARTITIONS: usize = 10;

/// Three holdout thirds, their development complements, and five validation
/// folds inside each development set. All index sets are sorted.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SplitPlan {
    pub n: usize,
    pub seed: u64,
    pub holdouts: Vec<Vec<usize>>,
    pub developments: Vec<Vec<usize>>,
    /// `folds[h][v]` is validation fold `v` of development set `h`.
    pub folds: Vec<Vec<Vec<usize>>>,
}

impl SplitPlan {
    /// Development rows of holdout `h` that are not in validation fold `v`.
    pub fn training_rows(&self, h: usize, v: usize) -> Vec<usize> {
        let fold = &self.folds[h][v];
        self.developments[h]
            .iter()
            .copied()
            .filter(|i| fold.binary_search(i).is_err())
            .collect()
    }
}

/// Smallest `n` for which every validation fold is non-empty.
pub fn min_split_size() -> usize {
    (1usize..)
        .find(|&n| {
            let largest_holdout = n.div_ceil(N_HOLDOUTS);
            n - largest_holdout >= N_FOLDS
        })
        .unwrap()
}

pub fn make_split_plan(n: usize, seed: u64) -> Result<SplitPlan> {
    if n < min_split_size() {
        return Err(Error::invalid(format!(
            "{n} rows are too few for {N_HOLDOUTS} holdouts with {N_FOLDS} non-empty folds (need {})",
            min_split_size()
        )));
    }
    let mut rng = seed::rng(seed);
    let mut perm: Vec<usize> = (0..n).collect();
    perm.shuffle(&mut rng);

    // the first n mod 3 holdouts take one extra row
    let base = n / N_HOLDOUTS;
    let extra = n % N_HOLDOUTS;
    let mut holdouts = Vec::with_capacity(N_HOLDOUTS);
    let mut start = 0;
    for h in 0..N_HOLDOUTS {
        let len = base + usize::from(h < extra);
        let mut set = perm[start..start + len].to_vec();
        set.sort_unstable();
        holdouts.push(set);
        start += len;
    }

    let mut developments = Vec::with_capacity(N_HOLDOUTS);
    let mut folds = Vec::with_capacity(N_HOLDOUTS);
    for holdout in &holdouts {
        let dev: Vec<usize> = (0..n).filter(|i| holdout.binary_search(i).is_err()).collect();
        let mut shuffled = dev.clone();
        shuffled.shuffle(&mut rng);
        let mut fold_sets = vec![Vec::new(); N_FOLDS];
        for (k, i) in shuffled.into_iter().enumerate() {
            fold_sets[k % N_FOLDS].push(i);
        }
        for f in &mut fold_sets {
            f.sort_unstable();
        }
        developments.push(dev);
        folds.push(fold_sets);
    }
    Ok(SplitPlan {
        n,
        seed,
        holdouts,
        developments,
        folds,
    })
}

/// `P` random splits of `0..n` into `I` of size `ceil(n/2)` and `J` of size
/// `floor(n/2)`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct HalfPartitionSet {
    pub seed: u64,
    pub pairs: Vec<(Vec<usize>, Vec<usize>)>,
}

impl HalfPartitionSet {
    pub fn len(&self) -> usize {
        self.pairs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }
}

pub fn make_half_partitions(n: usize, p: usize, seed: u64) -> Result<HalfPartitionSet> {
    if n < 2 {
        return Err(Error::invalid("half partitions need at least two rows"));
    }
    if p == 0 {
        return Err(Error::invalid("need at least one half partition"));
    }
    let mut rng = seed::rng(seed);
    let pairs = (0..p)
        .map(|_| {
            let mut perm: Vec<usize> = (0..n).collect();
            perm.shuffle(&mut rng);
            let mut first = perm[..n.div_ceil(2)].to_vec();
            let mut second = perm[n.div_ceil(2)..].to_vec();
            first.sort_unstable();
            second.sort_unstable();
            (first, second)
        })
        .collect();
    Ok(HalfPartitionSet { seed, pairs })
}
