//! Synthetic sentence embeddings with a known answer.
//!
//! Each language owns a block of [`SUBSPACE_WIDTH`] coordinates. A sentence
//! gets Gaussian noise everywhere plus 1.0 at `start + structure_index` of
//! its pattern, and 1.0 on a flag coordinate when it is coordinated or
//! extended. With disjoint blocks, nothing a probe learns in one language
//! carries any signal in another.

use std::collections::BTreeMap;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use super::table::{EmbeddingTable, EMBEDDING_DIM};
use crate::error::{Error, Result};
use crate::generator::{Sentence, STRUCTURE_COUNT};
use crate::seeds::Language;

/// 28 pattern coordinates, a coordination flag and an extension flag.
pub const SUBSPACE_WIDTH: usize = STRUCTURE_COUNT + 2;
const COORD_FLAG: usize = STRUCTURE_COUNT;
const EXTENDED_FLAG: usize = STRUCTURE_COUNT + 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SubspaceMode {
    /// Every language writes to its own block.
    Disjoint,
    /// All languages share block 0.
    Shared,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SyntheticEmbedderConfig {
    pub dim: usize,
    pub starts: BTreeMap<Language, usize>,
    pub noise_sigma: f64,
    pub rng_seed: u64,
}

impl SyntheticEmbedderConfig {
    pub fn new(mode: SubspaceMode, noise_sigma: f64, rng_seed: u64) -> Self {
        let starts = Language::ALL
            .into_iter()
            .map(|l| {
                let start = match mode {
                    SubspaceMode::Disjoint => l.index() * SUBSPACE_WIDTH,
                    SubspaceMode::Shared => 0,
                };
                (l, start)
            })
            .collect();
        SyntheticEmbedderConfig {
            dim: EMBEDDING_DIM,
            starts,
            noise_sigma,
            rng_seed,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.noise_sigma >= 0.0 && self.noise_sigma.is_finite()) {
            return Err(Error::config("noise sigma must be finite and non-negative"));
        }
        for (lang, &start) in &self.starts {
            if start + SUBSPACE_WIDTH > self.dim {
                return Err(Error::config(format!(
                    "subspace of {lang} does not fit in dim {}",
                    self.dim
                )));
            }
        }
        Ok(())
    }

    pub fn start(&self, language: Language) -> Result<usize> {
        self.starts
            .get(&language)
            .copied()
            .ok_or_else(|| Error::config(format!("no subspace configured for {language}")))
    }

    /// True when no two languages' blocks overlap.
    pub fn is_disjoint(&self) -> bool {
        let mut starts: Vec<usize> = self.starts.values().copied().collect();
        starts.sort_unstable();
        starts.windows(2).all(|w| w[1] >= w[0] + SUBSPACE_WIDTH)
    }
}

fn noise_rng(cfg: &SyntheticEmbedderConfig, sentence: &Sentence) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(sentence.id.0 ^ cfg.rng_seed.wrapping_mul(0x9e37_79b9_7f4a_7c15))
}

/// Deterministic in `(sentence.id, cfg)`.
pub fn synthetic_embed(sentence: &Sentence, cfg: &SyntheticEmbedderConfig) -> Result<Vec<f64>> {
    let start = cfg.start(sentence.language)?;
    let mut v = vec![0.0; cfg.dim];
    if cfg.noise_sigma > 0.0 {
        let normal = Normal::new(0.0, cfg.noise_sigma).map_err(|e| Error::config(e.to_string()))?;
        let mut rng = noise_rng(cfg, sentence);
        for x in &mut v {
            *x = normal.sample(&mut rng);
        }
    }
    v[start + sentence.pattern().structure_index()] += 1.0;
    if sentence.shape.coordinated {
        v[start + COORD_FLAG] += 1.0;
    }
    if sentence.shape.extended {
        v[start + EXTENDED_FLAG] += 1.0;
    }
    Ok(v)
}

/// Embeds every distinct sentence.
pub fn embed_all<'a>(
    sentences: impl IntoIterator<Item = &'a Sentence>,
    cfg: &SyntheticEmbedderConfig,
) -> Result<EmbeddingTable> {
    cfg.validate()?;
    let mut table = EmbeddingTable::new(cfg.dim)?;
    for s in sentences {
        if table.contains(s.id) {
            continue;
        }
        let v = synthetic_embed(s, cfg)?;
        table.insert(s.id, v.into_iter().map(|x| x as f32).collect())?;
    }
    Ok(table)
}
