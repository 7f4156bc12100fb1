//! Datasets joined with their embeddings, ready for training.

use std::collections::HashMap;
use std::hash::Hasher;
use std::sync::Arc;

use fnv::FnvHasher;
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::embedding::EmbeddingTable;
use crate::error::{Error, Result};
use crate::generator::{BlmInstance, SentenceId, SentenceTriple};

/// An embedding shared by every item that mentions the sentence.
pub type Vector = Arc<[f64]>;

/// One sentence-task example: the input, its same-pattern positive and the
/// different-pattern negatives, as f64 vectors.
#[derive(Debug, Clone, PartialEq)]
pub struct SentenceItem {
    pub id: String,
    pub input: Vector,
    pub positive: Vector,
    pub negatives: Vec<Vector>,
    /// Pattern of the positive, then of each negative.
    pub labels: Vec<String>,
}

/// One BLM instance with its context and answers embedded.
#[derive(Debug, Clone, PartialEq)]
pub struct BlmItem {
    pub id: String,
    pub context: Vec<Vector>,
    pub candidates: Vec<Vector>,
    /// Answer label names in candidate order.
    pub labels: Vec<String>,
    pub correct: usize,
}

/// A candidate list in presentation order.
#[derive(Debug, Clone, PartialEq)]
pub struct Candidates<'a> {
    pub vectors: Vec<&'a [f64]>,
    pub labels: Vec<&'a str>,
    pub correct: usize,
}

/// Upcasts each table entry once.
pub struct VectorCache<'a> {
    table: &'a EmbeddingTable,
    seen: HashMap<SentenceId, Vector>,
}

impl<'a> VectorCache<'a> {
    pub fn new(table: &'a EmbeddingTable) -> Self {
        VectorCache {
            table,
            seen: HashMap::new(),
        }
    }

    pub fn get(&mut self, id: SentenceId) -> Result<Vector> {
        if let Some(v) = self.seen.get(&id) {
            return Ok(v.clone());
        }
        let v: Vector = self.table.get_f64(id)?.into();
        self.seen.insert(id, v.clone());
        Ok(v)
    }
}

fn id_rng(id: &str) -> ChaCha8Rng {
    let mut h = FnvHasher::default();
    h.write(id.as_bytes());
    ChaCha8Rng::seed_from_u64(h.finish())
}

impl SentenceItem {
    pub fn from_triple(t: &SentenceTriple, cache: &mut VectorCache<'_>) -> Result<Self> {
        let mut labels = vec![t.positive.pattern().to_string()];
        labels.extend(t.negatives.iter().map(|n| n.pattern().to_string()));
        Ok(SentenceItem {
            id: t.triple_id.clone(),
            input: cache.get(t.input.id)?,
            positive: cache.get(t.positive.id)?,
            negatives: t
                .negatives
                .iter()
                .map(|n| cache.get(n.id))
                .collect::<Result<_>>()?,
            labels,
        })
    }

    pub fn negative_refs(&self) -> Vec<&[f64]> {
        self.negatives.iter().map(|v| &**v).collect()
    }

    /// Positive and negatives in an order fixed by the item id, so the
    /// positive is not always first.
    pub fn candidates(&self) -> Candidates<'_> {
        let mut order: Vec<usize> = (0..=self.negatives.len()).collect();
        order.shuffle(&mut id_rng(&self.id));
        let vec_of = |k: usize| {
            if k == 0 {
                &*self.positive
            } else {
                &*self.negatives[k - 1]
            }
        };
        Candidates {
            vectors: order.iter().map(|&k| vec_of(k)).collect(),
            labels: order.iter().map(|&k| self.labels[k].as_str()).collect(),
            correct: order.iter().position(|&k| k == 0).unwrap(),
        }
    }
}

impl BlmItem {
    pub fn from_instance(inst: &BlmInstance, cache: &mut VectorCache<'_>) -> Result<Self> {
        Ok(BlmItem {
            id: inst.instance_id.clone(),
            context: inst
                .context
                .iter()
                .map(|s| cache.get(s.id))
                .collect::<Result<_>>()?,
            candidates: inst
                .answers
                .iter()
                .map(|a| cache.get(a.sentence.id))
                .collect::<Result<_>>()?,
            labels: inst
                .answers
                .iter()
                .map(|a| a.label.name().to_string())
                .collect(),
            correct: inst.correct_index,
        })
    }

    pub fn context_refs(&self) -> Vec<&[f64]> {
        self.context.iter().map(|v| &**v).collect()
    }

    pub fn candidates(&self) -> Candidates<'_> {
        Candidates {
            vectors: self.candidates.iter().map(|v| &**v).collect(),
            labels: self.labels.iter().map(String::as_str).collect(),
            correct: self.correct,
        }
    }
}

pub fn sentence_items(
    triples: &[SentenceTriple],
    table: &EmbeddingTable,
) -> Result<Vec<SentenceItem>> {
    let mut cache = VectorCache::new(table);
    triples
        .iter()
        .map(|t| SentenceItem::from_triple(t, &mut cache))
        .collect()
}

pub fn blm_items(instances: &[BlmInstance], table: &EmbeddingTable) -> Result<Vec<BlmItem>> {
    let mut cache = VectorCache::new(table);
    instances
        .iter()
        .map(|i| BlmItem::from_instance(i, &mut cache))
        .collect()
}

/// Items whose ids are listed, in list order.
pub fn select_by_id<T: Clone>(
    items: &[T],
    id_of: impl Fn(&T) -> &str,
    ids: &[String],
) -> Result<Vec<T>> {
    let index: HashMap<&str, &T> = items.iter().map(|t| (id_of(t), t)).collect();
    ids.iter()
        .map(|id| {
            index
                .get(id.as_str())
                .map(|t| (*t).clone())
                .ok_or_else(|| Error::config(format!("split lists unknown item {id}")))
        })
        .collect()
}
