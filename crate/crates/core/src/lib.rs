//! Generation of multilingual subject-verb agreement datasets (sentence
//! triples and Blackbird Language Matrices) and VAE probes that look for
//! chunk structure in sentence embeddings.

pub mod embedding;
pub mod error;
pub mod experiments;
pub mod fsutil;
pub mod generator;
pub mod nn;
pub mod probe;
pub mod seeds;

pub use error::{Error, Result};
pub use generator::{
    enumerate_patterns, AnswerLabel, BlmInstance, ChunkPattern, DatasetSplit, LexicalType,
    Sentence, SentenceId, SentenceTriple,
};
pub use seeds::{ChunkSlot, GrammNumber, Language, LanguageConfig, SeedRecord};
