//! Contrastive sentence triples `(input, positive, negatives)`.

use rand::seq::index;
use rand::seq::IndexedRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::pattern::{enumerate_patterns, ChunkPattern, PATTERN_COUNT};
use super::sentence::{realize_sentence, Sentence, SlotSeeds};
use super::split::{finish, sentence_class_split, DatasetSplit};
use crate::error::{Error, Result};
use crate::seeds::{LanguageConfig, SeedRecord};

pub const NEGATIVE_COUNT: usize = 7;

/// Default number of triples requested per language.
pub const DEFAULT_TARGET: usize = 4000;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SentenceTriple {
    pub triple_id: String,
    pub input: Sentence,
    pub positive: Sentence,
    pub negatives: Vec<Sentence>,
}

impl SentenceTriple {
    /// Checks the contrastive-set invariants.
    pub fn validate(&self) -> Result<()> {
        let p = self.input.pattern();
        let fail = |m: &str| Err(Error::generation(format!("triple {}: {m}", self.triple_id)));
        if self.positive.pattern() != p {
            return fail("positive pattern differs from input");
        }
        if self.positive.text == self.input.text {
            return fail("positive repeats the input");
        }
        if self.negatives.len() != NEGATIVE_COUNT {
            return fail("wrong number of negatives");
        }
        let mut seen: Vec<ChunkPattern> = Vec::new();
        for n in &self.negatives {
            if n.pattern() == p || seen.contains(&n.pattern()) {
                return fail("negative patterns must differ from the input and from each other");
            }
            seen.push(n.pattern());
        }
        Ok(())
    }
}

/// Every distinct main-clause sentence of `pattern` realizable from `seeds`.
pub fn pattern_class(
    pattern: ChunkPattern,
    seeds: &[SeedRecord],
    config: &LanguageConfig,
) -> Result<Vec<Sentence>> {
    let mut out: Vec<Sentence> = Vec::with_capacity(seeds.len());
    for record in seeds {
        let s = realize_sentence(pattern, &SlotSeeds::uniform(record), config)?;
        if !out.iter().any(|o| o.id == s.id) {
            out.push(s);
        }
    }
    Ok(out)
}

/// Samples `ceil(target / 14)` triples per input pattern (fewer when a class
/// has fewer distinct (input, positive) pairs) and splits every pattern class
/// 80:20 train:test, then the train side 80:20 train:dev.
pub fn generate_sentence_dataset(
    seeds: &[SeedRecord],
    config: &LanguageConfig,
    target: usize,
    seed: u64,
) -> Result<(Vec<SentenceTriple>, DatasetSplit)> {
    config.validate()?;
    let patterns = enumerate_patterns();
    let classes = patterns
        .iter()
        .map(|&p| pattern_class(p, seeds, config))
        .collect::<Result<Vec<_>>>()?;
    for (p, class) in patterns.iter().zip(&classes) {
        if class.len() < 2 {
            return Err(Error::generation(format!(
                "pattern class {p} has {} sentence(s); at least 2 are needed",
                class.len()
            )));
        }
    }

    let per_class = target.div_ceil(PATTERN_COUNT);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut triples = Vec::new();
    let mut split = DatasetSplit {
        seed,
        ..Default::default()
    };

    for (pi, class) in classes.iter().enumerate() {
        let n = class.len();
        let pairs = n * (n - 1);
        let k = per_class.min(pairs);
        let picks = index::sample(&mut rng, pairs, k).into_vec();
        let (train_n, dev_n, _) = sentence_class_split(k);
        for (rank, pair) in picks.into_iter().enumerate() {
            let i = pair / (n - 1);
            let j = {
                let j = pair % (n - 1);
                if j >= i {
                    j + 1
                } else {
                    j
                }
            };
            let other: Vec<usize> = (0..PATTERN_COUNT).filter(|&q| q != pi).collect();
            let negatives = index::sample(&mut rng, other.len(), NEGATIVE_COUNT)
                .into_iter()
                .map(|q| {
                    classes[other[q]]
                        .choose(&mut rng)
                        .expect("classes are non-empty")
                        .clone()
                })
                .collect();
            let triple = SentenceTriple {
                triple_id: format!("{}-s{:02}-{:05}", config.language, pi, rank),
                input: class[i].clone(),
                positive: class[j].clone(),
                negatives,
            };
            let bucket = if rank < train_n {
                &mut split.train
            } else if rank < train_n + dev_n {
                &mut split.dev
            } else {
                &mut split.test
            };
            bucket.push(triple.triple_id.clone());
            triples.push(triple);
        }
    }
    triples.sort_by(|a, b| a.triple_id.cmp(&b.triple_id));
    Ok((triples, finish(split)))
}
