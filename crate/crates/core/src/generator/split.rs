use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

/// Maximum number of training instances kept per BLM dataset.
pub const BLM_TRAIN_CAP: usize = 2000;

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct DatasetSplit {
    pub seed: u64,
    pub train: Vec<String>,
    pub dev: Vec<String>,
    pub test: Vec<String>,
}

impl DatasetSplit {
    pub fn sizes(&self) -> (usize, usize, usize) {
        (self.train.len(), self.dev.len(), self.test.len())
    }

    fn canonicalize(&mut self) {
        self.train.sort();
        self.dev.sort();
        self.test.sort();
    }
}

/// Test-side size of a 90:10 split, rounded up.
pub fn blm_test_size(total: usize) -> usize {
    total.div_ceil(10)
}

/// 20% of `n`, rounded down.
pub fn fifth(n: usize) -> usize {
    n / 5
}

/// 90:10 train:test, then at most [`BLM_TRAIN_CAP`] training instances
/// sampled, then a fifth of those moved to dev. Pool instances beyond the
/// cap belong to no split.
pub fn blm_split(ids: &[String], seed: u64) -> DatasetSplit {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(0);
    let mut order: Vec<&String> = ids.iter().collect();
    order.shuffle(&mut rng);
    let test_n = blm_test_size(ids.len());
    let (test, pool) = order.split_at(test_n);
    let sampled = &pool[..pool.len().min(BLM_TRAIN_CAP)];
    let dev_n = fifth(sampled.len());
    let mut split = DatasetSplit {
        seed,
        train: sampled[dev_n..].iter().map(|s| s.to_string()).collect(),
        dev: sampled[..dev_n].iter().map(|s| s.to_string()).collect(),
        test: test.iter().map(|s| s.to_string()).collect(),
    };
    split.canonicalize();
    split
}

/// Per-class sizes of the sentence dataset: 80:20 train:test, then the
/// train part 80:20 train:dev, both rounding the held-out side down.
pub fn sentence_class_split(n: usize) -> (usize, usize, usize) {
    let test = fifth(n);
    let dev = fifth(n - test);
    (n - test - dev, dev, test)
}

pub(crate) fn finish(mut split: DatasetSplit) -> DatasetSplit {
    split.canonicalize();
    split
}
