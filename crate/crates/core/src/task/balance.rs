//! Class balancing by undersampling.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::Choice;

pub trait HasGold {
    fn gold(&self) -> Choice;
}

impl HasGold for super::TaskSample {
    fn gold(&self) -> Choice {
        self.gold
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct BalanceReport {
    /// Candidate count per class before balancing.
    pub supply: Vec<usize>,
    /// Emitted count per class.
    pub emitted: Vec<usize>,
    /// True when some class had no supply at all.
    pub missing_class: bool,
}

/// Undersamples every class to a common quota, shuffles and truncates to `cap`.
///
/// The quota is the scarcest non-empty class count, further limited to
/// `ceil(cap / k)`. Classes with no supply are reported and left empty.
pub fn balance_and_cap<T: HasGold>(items: Vec<T>, n_classes: usize, cap: usize, seed: u64) -> (Vec<T>, BalanceReport) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut buckets: Vec<Vec<T>> = (0..n_classes).map(|_| Vec::new()).collect();
    for item in items {
        let i = item.gold().index();
        assert!(i < n_classes, "gold {} outside {n_classes} classes", item.gold());
        buckets[i].push(item);
    }
    let supply: Vec<usize> = buckets.iter().map(Vec::len).collect();
    let present = supply.iter().filter(|n| **n > 0).count();
    let mut out = Vec::new();
    if present > 0 {
        let scarcest = supply.iter().copied().filter(|n| *n > 0).min().unwrap_or(0);
        let quota = scarcest.min(cap.div_ceil(present));
        for bucket in &mut buckets {
            bucket.shuffle(&mut rng);
            out.extend(bucket.drain(..).take(quota));
        }
        out.shuffle(&mut rng);
        out.truncate(cap);
    }
    let mut emitted = vec![0; n_classes];
    for item in &out {
        emitted[item.gold().index()] += 1;
    }
    let report = BalanceReport {
        missing_class: present < n_classes,
        supply,
        emitted,
    };
    (out, report)
}
