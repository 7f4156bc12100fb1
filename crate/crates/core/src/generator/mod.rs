//! Sentence and BLM dataset generation from seed records.

pub mod blm;
pub mod io;
pub mod pattern;
pub mod sentence;
pub mod split;
pub mod triples;

pub use blm::{
    build_answer_set, build_blm_context, generate_blm_dataset, Answer, AnswerLabel, AnswerSet,
    BlmInstance, BlmOptions, LexicalType, CONTEXT_LEN,
};
pub use pattern::{enumerate_patterns, ChunkPattern, PATTERN_COUNT, STRUCTURE_COUNT};
pub use sentence::{
    realize_sentence, realize_shape, Clause, Sentence, SentenceId, SentenceShape, SlotSeeds,
};
pub use split::DatasetSplit;
pub use triples::{generate_sentence_dataset, SentenceTriple};
