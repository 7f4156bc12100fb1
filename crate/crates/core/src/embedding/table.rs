use std::collections::BTreeMap;

use crate::error::{Error, Result};
use crate::generator::SentenceId;

/// Default embedding width (a 32x24 grid).
pub const EMBEDDING_DIM: usize = 768;

/// Sentence id to fixed-width vector. Values are kept at f32, the precision
/// of the on-disk format; models upcast on lookup.
#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddingTable {
    dim: usize,
    entries: BTreeMap<SentenceId, Vec<f32>>,
}

impl EmbeddingTable {
    pub fn new(dim: usize) -> Result<Self> {
        if dim == 0 {
            return Err(Error::config("embedding dimension must be positive"));
        }
        Ok(EmbeddingTable {
            dim,
            entries: BTreeMap::new(),
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Inserts or replaces a vector.
    pub fn insert(&mut self, id: SentenceId, vector: Vec<f32>) -> Result<()> {
        if vector.len() != self.dim {
            return Err(Error::shape(format!(
                "vector for {id} has length {}, table dim is {}",
                vector.len(),
                self.dim
            )));
        }
        if let Some(bad) = vector.iter().position(|v| !v.is_finite()) {
            return Err(Error::numeric(format!(
                "vector for {id} has non-finite value at {bad}"
            )));
        }
        self.entries.insert(id, vector);
        Ok(())
    }

    pub fn contains(&self, id: SentenceId) -> bool {
        self.entries.contains_key(&id)
    }

    /// Missing ids are errors, never zeros.
    pub fn get(&self, id: SentenceId) -> Result<&[f32]> {
        self.entries
            .get(&id)
            .map(Vec::as_slice)
            .ok_or(Error::MissingEmbedding(id.0))
    }

    pub fn get_f64(&self, id: SentenceId) -> Result<Vec<f64>> {
        Ok(self.get(id)?.iter().map(|&v| f64::from(v)).collect())
    }

    /// Entries in ascending id order.
    pub fn iter(&self) -> impl Iterator<Item = (SentenceId, &[f32])> {
        self.entries.iter().map(|(id, v)| (*id, v.as_slice()))
    }

    /// Adds every entry of `other`; ids present in both must agree.
    pub fn merge(&mut self, other: &EmbeddingTable) -> Result<()> {
        if other.dim != self.dim {
            return Err(Error::shape(format!(
                "cannot merge dim {} into dim {}",
                other.dim, self.dim
            )));
        }
        for (id, v) in other.iter() {
            match self.entries.get(&id) {
                Some(existing) if existing.as_slice() != v => {
                    return Err(Error::format(format!("conflicting vectors for {id}")));
                }
                Some(_) => {}
                None => {
                    self.entries.insert(id, v.to_vec());
                }
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn lookups_fail_loudly() {
        let mut t = EmbeddingTable::new(3).unwrap();
        t.insert(SentenceId(7), vec![1.0, 2.0, 3.0]).unwrap();
        assert_eq!(t.get(SentenceId(7)).unwrap(), &[1.0, 2.0, 3.0]);
        assert!(matches!(
            t.get(SentenceId(8)),
            Err(Error::MissingEmbedding(8))
        ));
        assert!(t.insert(SentenceId(9), vec![1.0]).is_err());
        assert!(t.insert(SentenceId(9), vec![1.0, f32::NAN, 0.0]).is_err());
        assert!(EmbeddingTable::new(0).is_err());
    }

    #[test]
    fn merge_rejects_conflicts() {
        let mut a = EmbeddingTable::new(2).unwrap();
        a.insert(SentenceId(1), vec![1.0, 0.0]).unwrap();
        let mut b = EmbeddingTable::new(2).unwrap();
        b.insert(SentenceId(1), vec![1.0, 0.0]).unwrap();
        b.insert(SentenceId(2), vec![0.0, 1.0]).unwrap();
        a.merge(&b).unwrap();
        assert_eq!(a.len(), 2);
        let mut c = EmbeddingTable::new(2).unwrap();
        c.insert(SentenceId(2), vec![5.0, 1.0]).unwrap();
        assert!(a.merge(&c).is_err());
    }
}
