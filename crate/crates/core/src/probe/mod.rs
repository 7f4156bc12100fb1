//! The probing models: a sentence-level VAE that maps a sentence embedding
//! to a 5-d latent and decodes a same-pattern sentence, and a two-level
//! model that solves BLM puzzles over the sentence latents.

pub mod checks;
pub mod data;
pub mod predict;
pub mod sentence_vae;
pub mod store;
pub mod train;
pub mod two_level;

pub use checks::{gradient_suite, CheckOutcome, SuiteOptions};
pub use data::{
    blm_items, select_by_id, sentence_items, BlmItem, Candidates, SentenceItem, Vector, VectorCache,
};
pub use predict::{
    evaluate_blm, evaluate_sentences, predict_blm, predict_sentence, prediction_f1,
    select_by_cosine, Prediction,
};
pub use sentence_vae::{LossConfig, SentenceExample, SentenceVae, SentenceVaeSpec};
pub use store::{TrainedModel, SENTENCE_KIND, TWO_LEVEL_KIND};
pub use train::{train_sentence_vae, train_two_level, EpochRecord, History, TrainConfig};
pub use two_level::{
    BlmExample, TaskVae, TwoLevelLoss, TwoLevelModel, TwoLevelNoise, TwoLevelSpec,
};
