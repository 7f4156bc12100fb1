//! JSON-lines serialization of generated datasets.
//!
//! A dataset directory holds `manifest.json`, the records
//! (`instances.jsonl` or `triples.jsonl`) and `split.json`.

use std::io::{BufRead, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::blm::{context_pattern, Answer, AnswerLabel, BlmInstance, LexicalType, CONTEXT_LEN};
use super::pattern::ChunkPattern;
use super::sentence::{Clause, Sentence, SentenceShape};
use super::split::DatasetSplit;
use super::triples::SentenceTriple;
use crate::error::{Error, Result};
use crate::fsutil::write_atomic;
use crate::seeds::Language;

pub const MANIFEST_FILE: &str = "manifest.json";
pub const BLM_FILE: &str = "instances.jsonl";
pub const TRIPLES_FILE: &str = "triples.jsonl";
pub const SPLIT_FILE: &str = "split.json";

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DatasetKind {
    Sentences,
    Blm,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DatasetManifest {
    pub kind: DatasetKind,
    pub language: Language,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lexical_type: Option<LexicalType>,
    pub seed: u64,
    pub count: usize,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct AnswerRecord {
    text: String,
    label: AnswerLabel,
    pattern: ChunkPattern,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct BlmRecord {
    instance_id: String,
    language: Language,
    lexical_type: LexicalType,
    clause: Clause,
    context: Vec<String>,
    context_patterns: Vec<ChunkPattern>,
    answers: Vec<AnswerRecord>,
    correct_index: usize,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct SentenceRecord {
    text: String,
    pattern: ChunkPattern,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct TripleRecord {
    triple_id: String,
    language: Language,
    input: SentenceRecord,
    positive: SentenceRecord,
    negatives: Vec<SentenceRecord>,
}

impl From<&BlmInstance> for BlmRecord {
    fn from(inst: &BlmInstance) -> Self {
        BlmRecord {
            instance_id: inst.instance_id.clone(),
            language: inst.language,
            lexical_type: inst.lexical_type,
            clause: inst.clause,
            context: inst.context.iter().map(|s| s.text.clone()).collect(),
            context_patterns: inst.context.iter().map(Sentence::pattern).collect(),
            answers: inst
                .answers
                .iter()
                .map(|a| AnswerRecord {
                    text: a.sentence.text.clone(),
                    label: a.label,
                    pattern: a.sentence.pattern(),
                })
                .collect(),
            correct_index: inst.correct_index,
        }
    }
}

impl BlmRecord {
    fn into_instance(self, line: usize) -> Result<BlmInstance> {
        let invalid = |message: String| Error::Validation { line, message };
        if self.context.len() != CONTEXT_LEN || self.context_patterns.len() != CONTEXT_LEN {
            return Err(invalid(format!(
                "context must have {CONTEXT_LEN} sentences"
            )));
        }
        for (row, p) in self.context_patterns.iter().enumerate() {
            if *p != context_pattern(row) {
                return Err(invalid(format!("context row {} has pattern {p}", row + 1)));
            }
        }
        if self.answers.get(self.correct_index).map(|a| a.label) != Some(AnswerLabel::Correct) {
            return Err(invalid(
                "correct_index does not point at the Correct answer".into(),
            ));
        }
        let context = self
            .context
            .into_iter()
            .zip(self.context_patterns)
            .map(|(text, pattern)| {
                let shape = SentenceShape {
                    clause: self.clause,
                    ..SentenceShape::main(pattern)
                };
                Sentence::from_parts(text, shape, self.language)
            })
            .collect();
        let answers = self
            .answers
            .into_iter()
            .map(|a| {
                if a.pattern != a.label.pattern() {
                    return Err(invalid(format!(
                        "{} answer has pattern {}",
                        a.label, a.pattern
                    )));
                }
                Ok(Answer {
                    sentence: Sentence::from_parts(
                        a.text,
                        a.label.shape(self.clause),
                        self.language,
                    ),
                    label: a.label,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(BlmInstance {
            instance_id: self.instance_id,
            language: self.language,
            lexical_type: self.lexical_type,
            clause: self.clause,
            context,
            answers,
            correct_index: self.correct_index,
        })
    }
}

fn sentence_record(s: &Sentence) -> SentenceRecord {
    SentenceRecord {
        text: s.text.clone(),
        pattern: s.pattern(),
    }
}

fn sentence_from(r: SentenceRecord, language: Language) -> Sentence {
    Sentence::from_parts(r.text, SentenceShape::main(r.pattern), language)
}

fn write_jsonl<T: Serialize>(items: impl Iterator<Item = T>) -> Result<Vec<u8>> {
    let mut buf = Vec::new();
    for item in items {
        serde_json::to_writer(&mut buf, &item)?;
        buf.write_all(b"\n")?;
    }
    Ok(buf)
}

fn read_jsonl<T: for<'de> Deserialize<'de>>(reader: impl BufRead) -> Result<Vec<(usize, T)>> {
    let mut out = Vec::new();
    for (i, line) in reader.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let item = serde_json::from_str(&line).map_err(|e| Error::Parse {
            line: i + 1,
            message: e.to_string(),
        })?;
        out.push((i + 1, item));
    }
    Ok(out)
}

pub fn blm_to_jsonl(instances: &[BlmInstance]) -> Result<Vec<u8>> {
    write_jsonl(instances.iter().map(BlmRecord::from))
}

pub fn blm_from_jsonl(reader: impl BufRead) -> Result<Vec<BlmInstance>> {
    read_jsonl::<BlmRecord>(reader)?
        .into_iter()
        .map(|(line, r)| r.into_instance(line))
        .collect()
}

pub fn triples_to_jsonl(triples: &[SentenceTriple]) -> Result<Vec<u8>> {
    write_jsonl(triples.iter().map(|t| TripleRecord {
        triple_id: t.triple_id.clone(),
        language: t.input.language,
        input: sentence_record(&t.input),
        positive: sentence_record(&t.positive),
        negatives: t.negatives.iter().map(sentence_record).collect(),
    }))
}

pub fn triples_from_jsonl(reader: impl BufRead) -> Result<Vec<SentenceTriple>> {
    read_jsonl::<TripleRecord>(reader)?
        .into_iter()
        .map(|(line, r)| {
            let lang = r.language;
            let triple = SentenceTriple {
                triple_id: r.triple_id,
                input: sentence_from(r.input, lang),
                positive: sentence_from(r.positive, lang),
                negatives: r
                    .negatives
                    .into_iter()
                    .map(|s| sentence_from(s, lang))
                    .collect(),
            };
            triple.validate().map_err(|e| Error::Validation {
                line,
                message: e.to_string(),
            })?;
            Ok(triple)
        })
        .collect()
}

fn to_json_pretty<T: Serialize>(value: &T) -> Result<Vec<u8>> {
    let mut buf = serde_json::to_vec_pretty(value)?;
    buf.push(b'\n');
    Ok(buf)
}

fn read_json<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<T> {
    let bytes = std::fs::read(path)?;
    Ok(serde_json::from_slice(&bytes)?)
}

pub fn read_manifest(dir: &Path) -> Result<DatasetManifest> {
    read_json(&dir.join(MANIFEST_FILE))
}

pub fn read_split(dir: &Path) -> Result<DatasetSplit> {
    read_json(&dir.join(SPLIT_FILE))
}

pub fn write_blm_dataset(
    dir: &Path,
    instances: &[BlmInstance],
    split: &DatasetSplit,
) -> Result<DatasetManifest> {
    let first = instances
        .first()
        .ok_or_else(|| Error::generation("refusing to write an empty dataset"))?;
    std::fs::create_dir_all(dir)?;
    let manifest = DatasetManifest {
        kind: DatasetKind::Blm,
        language: first.language,
        lexical_type: Some(first.lexical_type),
        seed: split.seed,
        count: instances.len(),
    };
    write_atomic(&dir.join(BLM_FILE), &blm_to_jsonl(instances)?)?;
    write_atomic(&dir.join(SPLIT_FILE), &to_json_pretty(split)?)?;
    write_atomic(&dir.join(MANIFEST_FILE), &to_json_pretty(&manifest)?)?;
    Ok(manifest)
}

pub fn write_sentence_dataset(
    dir: &Path,
    triples: &[SentenceTriple],
    split: &DatasetSplit,
) -> Result<DatasetManifest> {
    let first = triples
        .first()
        .ok_or_else(|| Error::generation("refusing to write an empty dataset"))?;
    std::fs::create_dir_all(dir)?;
    let manifest = DatasetManifest {
        kind: DatasetKind::Sentences,
        language: first.input.language,
        lexical_type: None,
        seed: split.seed,
        count: triples.len(),
    };
    write_atomic(&dir.join(TRIPLES_FILE), &triples_to_jsonl(triples)?)?;
    write_atomic(&dir.join(SPLIT_FILE), &to_json_pretty(split)?)?;
    write_atomic(&dir.join(MANIFEST_FILE), &to_json_pretty(&manifest)?)?;
    Ok(manifest)
}

pub fn read_blm_instances(dir: &Path) -> Result<Vec<BlmInstance>> {
    let file = std::fs::File::open(dir.join(BLM_FILE))?;
    blm_from_jsonl(std::io::BufReader::new(file))
}

pub fn read_triples(dir: &Path) -> Result<Vec<SentenceTriple>> {
    let file = std::fs::File::open(dir.join(TRIPLES_FILE))?;
    triples_from_jsonl(std::io::BufReader::new(file))
}

/// Every sentence a dataset mentions, in file order, repeats included.
pub fn read_dataset_sentences(dir: &Path) -> Result<Vec<Sentence>> {
    Ok(match read_manifest(dir)?.kind {
        DatasetKind::Sentences => read_triples(dir)?
            .into_iter()
            .flat_map(|t| [t.input, t.positive].into_iter().chain(t.negatives))
            .collect(),
        DatasetKind::Blm => read_blm_instances(dir)?
            .into_iter()
            .flat_map(|i| {
                i.context
                    .into_iter()
                    .chain(i.answers.into_iter().map(|a| a.sentence))
            })
            .collect(),
    })
}
