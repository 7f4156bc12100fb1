//! Saving and loading trained models.

use std::path::Path;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::sentence_vae::{SentenceVae, SentenceVaeSpec};
use super::two_level::{TwoLevelModel, TwoLevelSpec};
use crate::error::{Error, Result};
use crate::fsutil::write_atomic;
use crate::nn::{decode_checkpoint, encode_checkpoint, RawCheckpoint, Tensor};

pub const SENTENCE_KIND: &str = "sentence-vae";
pub const TWO_LEVEL_KIND: &str = "two-level-vae";

fn expect_kind(raw: &RawCheckpoint, kind: &str) -> Result<()> {
    if raw.kind != kind {
        return Err(Error::format(format!(
            "expected a {kind} checkpoint, found {}",
            raw.kind
        )));
    }
    Ok(())
}

fn no_leftovers(mut rest: impl Iterator<Item = Tensor>) -> Result<()> {
    match rest.next() {
        None => Ok(()),
        Some(_) => Err(Error::format("checkpoint has extra tensors")),
    }
}

/// Placeholder init, overwritten by the stored values.
fn scratch_rng() -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(0)
}

impl SentenceVae {
    pub fn to_checkpoint(&self) -> Result<Vec<u8>> {
        let spec = serde_json::to_string(&self.spec)?;
        let tensors: Vec<&Tensor> = self.params().into_iter().map(|p| &p.value).collect();
        Ok(encode_checkpoint(SENTENCE_KIND, &spec, &tensors))
    }

    pub fn from_checkpoint(bytes: &[u8]) -> Result<Self> {
        let raw = decode_checkpoint(bytes)?;
        expect_kind(&raw, SENTENCE_KIND)?;
        let spec: SentenceVaeSpec = serde_json::from_str(&raw.spec_json)?;
        let mut model = SentenceVae::new(spec, &mut scratch_rng())?;
        let mut values = raw.tensors.into_iter();
        model.load_values(&mut values)?;
        no_leftovers(values)?;
        Ok(model)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        write_atomic(path, &self.to_checkpoint()?)
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_checkpoint(&std::fs::read(path)?)
    }
}

impl TwoLevelModel {
    pub fn to_checkpoint(&self) -> Result<Vec<u8>> {
        let spec = serde_json::to_string(&self.spec)?;
        let tensors: Vec<&Tensor> = self.params().into_iter().map(|p| &p.value).collect();
        Ok(encode_checkpoint(TWO_LEVEL_KIND, &spec, &tensors))
    }

    pub fn from_checkpoint(bytes: &[u8]) -> Result<Self> {
        let raw = decode_checkpoint(bytes)?;
        expect_kind(&raw, TWO_LEVEL_KIND)?;
        let spec: TwoLevelSpec = serde_json::from_str(&raw.spec_json)?;
        let mut model = TwoLevelModel::new(spec, &mut scratch_rng())?;
        let mut values = raw.tensors.into_iter();
        model.sentence.load_values(&mut values)?;
        for p in model.task.params_mut() {
            let t = values
                .next()
                .ok_or_else(|| Error::format("checkpoint has too few tensors"))?;
            if t.shape() != p.value.shape() {
                return Err(Error::format(
                    "checkpoint tensor does not fit the task model",
                ));
            }
            p.value = t;
        }
        no_leftovers(values)?;
        Ok(model)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        write_atomic(path, &self.to_checkpoint()?)
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_checkpoint(&std::fs::read(path)?)
    }
}

/// Either probe, as found in a checkpoint file.
#[derive(Debug, Clone, PartialEq)]
pub enum TrainedModel {
    Sentence(SentenceVae),
    TwoLevel(TwoLevelModel),
}

impl TrainedModel {
    pub fn from_checkpoint(bytes: &[u8]) -> Result<Self> {
        let raw = decode_checkpoint(bytes)?;
        match raw.kind.as_str() {
            SENTENCE_KIND => Ok(TrainedModel::Sentence(SentenceVae::from_checkpoint(bytes)?)),
            TWO_LEVEL_KIND => Ok(TrainedModel::TwoLevel(TwoLevelModel::from_checkpoint(
                bytes,
            )?)),
            other => Err(Error::format(format!("unknown checkpoint kind {other:?}"))),
        }
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_checkpoint(&std::fs::read(path)?)
    }

    pub fn to_checkpoint(&self) -> Result<Vec<u8>> {
        match self {
            TrainedModel::Sentence(m) => m.to_checkpoint(),
            TrainedModel::TwoLevel(m) => m.to_checkpoint(),
        }
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        write_atomic(path, &self.to_checkpoint()?)
    }

    /// The sentence-level encoder, shared by both probes.
    pub fn sentence_vae(&self) -> &SentenceVae {
        match self {
            TrainedModel::Sentence(m) => m,
            TrainedModel::TwoLevel(m) => &m.sentence,
        }
    }
}
