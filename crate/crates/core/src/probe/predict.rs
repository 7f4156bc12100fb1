use serde::{Deserialize, Serialize};

use super::data::{BlmItem, Candidates, SentenceItem};
use super::sentence_vae::SentenceVae;
use super::two_level::TwoLevelModel;
use crate::error::{Error, Result};
use crate::nn::cosine_similarity;

/// Index of the most cosine-similar candidate; ties go to the lowest index.
pub fn select_by_cosine(query: &[f64], candidates: &[&[f64]]) -> Result<usize> {
    if candidates.is_empty() {
        return Err(Error::shape("no candidates to choose from"));
    }
    let mut best = 0;
    let mut best_score = f64::NEG_INFINITY;
    for (i, c) in candidates.iter().enumerate() {
        let score = cosine_similarity(query, c)?;
        if score > best_score {
            best = i;
            best_score = score;
        }
    }
    Ok(best)
}

/// Decodes the input from its latent mean and picks the closest candidate.
pub fn predict_sentence(
    model: &SentenceVae,
    input: &[f64],
    candidates: &[&[f64]],
) -> Result<usize> {
    let decoded = model.reconstruct(input)?;
    select_by_cosine(&decoded, candidates)
}

/// Compares the task decoder output with each candidate's latent mean.
pub fn predict_blm(
    model: &TwoLevelModel,
    context: &[&[f64]],
    candidates: &[&[f64]],
) -> Result<usize> {
    let answer = model.answer_vector(context)?;
    let latents = candidates
        .iter()
        .map(|c| model.sentence.encode_mean(c))
        .collect::<Result<Vec<_>>>()?;
    let refs: Vec<&[f64]> = latents.iter().map(Vec::as_slice).collect();
    select_by_cosine(&answer, &refs)
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Prediction {
    pub item_id: String,
    pub chosen: usize,
    pub correct: usize,
    pub chosen_label: String,
}

impl Prediction {
    pub fn is_correct(&self) -> bool {
        self.chosen == self.correct
    }

    fn new(item_id: &str, chosen: usize, c: &Candidates<'_>) -> Self {
        Prediction {
            item_id: item_id.to_string(),
            chosen,
            correct: c.correct,
            chosen_label: c.labels[chosen].to_string(),
        }
    }
}

pub fn evaluate_sentences(model: &SentenceVae, items: &[SentenceItem]) -> Result<Vec<Prediction>> {
    items
        .iter()
        .map(|item| {
            let c = item.candidates();
            let chosen = predict_sentence(model, &item.input, &c.vectors)?;
            Ok(Prediction::new(&item.id, chosen, &c))
        })
        .collect()
}

pub fn evaluate_blm(model: &TwoLevelModel, items: &[BlmItem]) -> Result<Vec<Prediction>> {
    items
        .iter()
        .map(|item| {
            let c = item.candidates();
            let chosen = predict_blm(model, &item.context_refs(), &c.vectors)?;
            Ok(Prediction::new(&item.id, chosen, &c))
        })
        .collect()
}

/// Share of correct predictions; 0 for an empty list.
pub fn prediction_f1(predictions: &[Prediction]) -> f64 {
    if predictions.is_empty() {
        return 0.0;
    }
    predictions.iter().filter(|p| p.is_correct()).count() as f64 / predictions.len() as f64
}
