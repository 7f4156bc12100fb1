//! Fixtures shared by the criterion benches in `benches/`.

use std::path::PathBuf;

use blmlab_core::embedding::{embed_all, SubspaceMode, SyntheticEmbedderConfig};
use blmlab_core::generator::generate_sentence_dataset;
use blmlab_core::probe::{sentence_items, SentenceItem};
use blmlab_core::seeds::parse_seed_file;
use blmlab_core::{Language, LanguageConfig, SeedRecord};

/// Records from the shipped seed file for `language`.
pub fn seed_records(language: Language) -> Vec<SeedRecord> {
    let path = PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("../../data/seeds")
        .join(format!("{}.tsv", language.code()));
    let text = std::fs::read_to_string(&path).unwrap_or_else(|e| panic!("{path:?}: {e}"));
    parse_seed_file(&text, language)
        .expect("shipped seed file parses")
        .records
}

/// English sentence triples embedded at noise `sigma`.
pub fn sentence_fixture(target: usize, sigma: f64) -> Vec<SentenceItem> {
    let language = Language::En;
    let config = LanguageConfig::for_language(language);
    let (triples, _) =
        generate_sentence_dataset(&seed_records(language), &config, target, 0).expect("generation");
    let sentences = triples
        .iter()
        .flat_map(|t| [&t.input, &t.positive].into_iter().chain(&t.negatives));
    let table = embed_all(
        sentences,
        &SyntheticEmbedderConfig::new(SubspaceMode::Disjoint, sigma, 0),
    )
    .expect("embedding");
    sentence_items(&triples, &table).expect("items")
}
