//! Blackbird Language Matrices for subject-verb agreement with two attractors.
//!
//! A context is seven sentences whose attractor count grows and whose chunk
//! numbers alternate; the eighth sentence must be chosen from a candidate set
//! built by minimally altering the correct continuation.

use std::fmt;
use std::str::FromStr;

use rand::seq::{IndexedRandom, SliceRandom};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::pattern::ChunkPattern;
use super::sentence::{realize_shape, Clause, Sentence, SentenceShape, SlotSeeds};
use super::split::{blm_split, DatasetSplit};
use crate::error::{Error, Result};
use crate::seeds::GrammNumber::{self, Pl, Sg};
use crate::seeds::{LanguageConfig, SeedRecord};

/// Context rows as `(np, pp1, pp2, vp)`.
pub const CONTEXT_TEMPLATE: [(
    GrammNumber,
    Option<GrammNumber>,
    Option<GrammNumber>,
    GrammNumber,
); 7] = [
    (Sg, Some(Sg), None, Sg),
    (Pl, Some(Sg), None, Pl),
    (Sg, Some(Pl), None, Sg),
    (Pl, Some(Pl), None, Pl),
    (Sg, Some(Sg), Some(Sg), Sg),
    (Pl, Some(Sg), Some(Sg), Pl),
    (Sg, Some(Pl), Some(Sg), Sg),
];

pub const CONTEXT_LEN: usize = 7;

pub fn context_pattern(row: usize) -> ChunkPattern {
    let (np, pp1, pp2, vp) = CONTEXT_TEMPLATE[row];
    ChunkPattern { np, pp1, pp2, vp }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum AnswerLabel {
    Correct,
    /// Sequence error: a coordination in place of the second attractor.
    Coord,
    /// Sequence error: wrong number of attractors.
    #[serde(rename = "WNA")]
    Wna,
    /// Sequence error: wrong number on the first attractor.
    #[serde(rename = "WN1")]
    Wn1,
    /// Sequence error: wrong number on the second attractor.
    #[serde(rename = "WN2")]
    Wn2,
    /// Agreement error: the verb disagrees with the subject.
    #[serde(rename = "AEV")]
    Aev,
    /// Agreement error: the verb agrees with the first attractor.
    #[serde(rename = "AEN1")]
    Aen1,
    /// Agreement error: the verb agrees with the second attractor.
    #[serde(rename = "AEN2")]
    Aen2,
    /// Optional longer-sequence distractor (a third attractor). Not part of
    /// the canonical eight.
    Extended,
}

impl AnswerLabel {
    pub const CANONICAL: [AnswerLabel; 8] = [
        AnswerLabel::Correct,
        AnswerLabel::Coord,
        AnswerLabel::Wna,
        AnswerLabel::Wn1,
        AnswerLabel::Wn2,
        AnswerLabel::Aev,
        AnswerLabel::Aen1,
        AnswerLabel::Aen2,
    ];

    pub fn name(self) -> &'static str {
        match self {
            AnswerLabel::Correct => "Correct",
            AnswerLabel::Coord => "Coord",
            AnswerLabel::Wna => "WNA",
            AnswerLabel::Wn1 => "WN1",
            AnswerLabel::Wn2 => "WN2",
            AnswerLabel::Aev => "AEV",
            AnswerLabel::Aen1 => "AEN1",
            AnswerLabel::Aen2 => "AEN2",
            AnswerLabel::Extended => "Extended",
        }
    }

    /// The candidate's pattern as `(np, pp1, pp2, vp)`.
    pub fn pattern(self) -> ChunkPattern {
        let (np, pp1, pp2, vp) = match self {
            AnswerLabel::Correct | AnswerLabel::Coord | AnswerLabel::Extended => {
                (Pl, Some(Pl), Some(Sg), Pl)
            }
            AnswerLabel::Wna => (Pl, Some(Pl), None, Pl),
            AnswerLabel::Wn1 => (Pl, Some(Sg), Some(Sg), Pl),
            AnswerLabel::Wn2 => (Pl, Some(Pl), Some(Pl), Pl),
            AnswerLabel::Aev => (Pl, Some(Pl), Some(Pl), Sg),
            AnswerLabel::Aen1 => (Pl, Some(Sg), Some(Pl), Sg),
            AnswerLabel::Aen2 => (Pl, Some(Pl), Some(Sg), Sg),
        };
        ChunkPattern { np, pp1, pp2, vp }
    }

    pub fn shape(self, clause: Clause) -> SentenceShape {
        SentenceShape {
            pattern: self.pattern(),
            clause,
            coordinated: self == AnswerLabel::Coord,
            extended: self == AnswerLabel::Extended,
        }
    }

    pub fn is_agreement_error(self) -> bool {
        matches!(
            self,
            AnswerLabel::Aev | AnswerLabel::Aen1 | AnswerLabel::Aen2
        )
    }
}

impl fmt::Display for AnswerLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for AnswerLabel {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        AnswerLabel::CANONICAL
            .into_iter()
            .chain([AnswerLabel::Extended])
            .find(|l| l.name() == s)
            .ok_or_else(|| Error::Parse {
                line: 0,
                message: format!("unknown answer label {s:?}"),
            })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum LexicalType {
    I,
    #[serde(rename = "II")]
    Ii,
    #[serde(rename = "III")]
    Iii,
}

impl LexicalType {
    pub const ALL: [LexicalType; 3] = [LexicalType::I, LexicalType::Ii, LexicalType::Iii];

    pub fn name(self) -> &'static str {
        match self {
            LexicalType::I => "I",
            LexicalType::Ii => "II",
            LexicalType::Iii => "III",
        }
    }
}

impl fmt::Display for LexicalType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for LexicalType {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "I" | "1" | "i" => Ok(LexicalType::I),
            "II" | "2" | "ii" => Ok(LexicalType::Ii),
            "III" | "3" | "iii" => Ok(LexicalType::Iii),
            _ => Err(Error::config(format!("unknown lexical type {s:?}"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Answer {
    pub sentence: Sentence,
    pub label: AnswerLabel,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AnswerSet {
    pub answers: Vec<Answer>,
    pub correct_index: usize,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BlmInstance {
    pub instance_id: String,
    pub language: crate::seeds::Language,
    pub lexical_type: LexicalType,
    pub clause: Clause,
    pub context: Vec<Sentence>,
    pub answers: Vec<Answer>,
    pub correct_index: usize,
}

impl BlmInstance {
    pub fn correct(&self) -> &Answer {
        &self.answers[self.correct_index]
    }
}

/// The seven context sentences, row `i` realized with `seed_choice(i)`.
pub fn build_blm_context<'a>(
    seed_choice: impl Fn(usize) -> SlotSeeds<'a>,
    config: &LanguageConfig,
    clause: Clause,
) -> Result<Vec<Sentence>> {
    (0..CONTEXT_LEN)
        .map(|row| {
            let shape = SentenceShape {
                clause,
                ..SentenceShape::main(context_pattern(row))
            };
            realize_shape(&shape, &seed_choice(row), config)
        })
        .collect()
}

/// All candidates, shuffled by `rng`. `extended` adds the ninth,
/// longer-sequence distractor.
pub fn build_answer_set<'a, R: Rng + ?Sized>(
    seed_choice: impl Fn(AnswerLabel) -> SlotSeeds<'a>,
    config: &LanguageConfig,
    clause: Clause,
    extended: bool,
    rng: &mut R,
) -> Result<AnswerSet> {
    let mut labels: Vec<AnswerLabel> = AnswerLabel::CANONICAL.to_vec();
    if extended {
        labels.push(AnswerLabel::Extended);
    }
    let mut answers = labels
        .into_iter()
        .map(|label| {
            let sentence = realize_shape(&label.shape(clause), &seed_choice(label), config)?;
            Ok(Answer { sentence, label })
        })
        .collect::<Result<Vec<_>>>()?;
    answers.shuffle(rng);
    let correct_index = answers
        .iter()
        .position(|a| a.label == AnswerLabel::Correct)
        .expect("Correct is always generated");
    Ok(AnswerSet {
        answers,
        correct_index,
    })
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct BlmOptions {
    pub extended_candidate: bool,
}

fn instance_rng(seed: u64, index: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index as u64 + 1);
    rng
}

/// Generates instances of one lexical type and splits them.
///
/// Type I yields one instance per (record, supported clause structure);
/// `target_count` below that total keeps a random subset. Types II and III
/// yield exactly `target_count` instances.
pub fn generate_blm_dataset(
    seeds: &[SeedRecord],
    lexical_type: LexicalType,
    target_count: usize,
    options: &BlmOptions,
    seed: u64,
) -> Result<(Vec<BlmInstance>, DatasetSplit)> {
    let Some(first) = seeds.first() else {
        return Err(Error::generation("no seed records"));
    };
    let language = first.language;
    if seeds.iter().any(|r| r.language != language) {
        return Err(Error::generation("seed records mix languages"));
    }
    if lexical_type != LexicalType::I && seeds.len() < 8 {
        return Err(Error::generation(format!(
            "type {lexical_type} needs at least 8 seed records, got {}",
            seeds.len()
        )));
    }
    let config = LanguageConfig::for_language(language);
    let mut selection_rng = instance_rng(seed, usize::MAX - 1);

    let instances: Vec<BlmInstance> = match lexical_type {
        LexicalType::I => {
            let mut plan: Vec<(&SeedRecord, Clause)> = Vec::new();
            for record in seeds {
                for clause in Clause::ALL {
                    if clause.supported_by(record) {
                        plan.push((record, clause));
                    }
                }
            }
            if target_count < plan.len() {
                let mut keep =
                    rand::seq::index::sample(&mut selection_rng, plan.len(), target_count)
                        .into_vec();
                keep.sort_unstable();
                plan = keep.into_iter().map(|i| plan[i]).collect();
            }
            plan.into_iter()
                .enumerate()
                .map(|(i, (record, clause))| {
                    let mut rng = instance_rng(seed, i);
                    let uniform = SlotSeeds::uniform(record);
                    let context = build_blm_context(|_| uniform, &config, clause)?;
                    let set = build_answer_set(
                        |_| uniform,
                        &config,
                        clause,
                        options.extended_candidate,
                        &mut rng,
                    )?;
                    Ok(assemble(i, lexical_type, clause, context, set, &config))
                })
                .collect::<Result<_>>()?
        }
        LexicalType::Ii | LexicalType::Iii => {
            let clauses: Vec<Clause> = Clause::ALL
                .into_iter()
                .filter(|c| seeds.iter().all(|r| c.supported_by(r)))
                .collect();
            (0..target_count)
                .map(|i| {
                    let mut rng = instance_rng(seed, i);
                    let clause = *clauses
                        .choose(&mut rng)
                        .expect("main clause always available");
                    let picks = rand::seq::index::sample(&mut rng, seeds.len(), 8).into_vec();
                    let context_records: Vec<&SeedRecord> =
                        picks[..7].iter().map(|&j| &seeds[j]).collect();
                    let context = build_blm_context(
                        |row| SlotSeeds::uniform(context_records[row]),
                        &config,
                        clause,
                    )?;
                    let set = if lexical_type == LexicalType::Ii {
                        let answer_record = &seeds[picks[7]];
                        build_answer_set(
                            |_| SlotSeeds::uniform(answer_record),
                            &config,
                            clause,
                            options.extended_candidate,
                            &mut rng,
                        )?
                    } else {
                        let n =
                            AnswerLabel::CANONICAL.len() + usize::from(options.extended_candidate);
                        let answer_picks =
                            rand::seq::index::sample(&mut rng, seeds.len(), n.min(seeds.len()))
                                .into_vec();
                        let label_slot = |label: AnswerLabel| match label {
                            AnswerLabel::Extended => 8 % answer_picks.len(),
                            other => AnswerLabel::CANONICAL
                                .iter()
                                .position(|&l| l == other)
                                .unwrap(),
                        };
                        build_answer_set(
                            |label| SlotSeeds::uniform(&seeds[answer_picks[label_slot(label)]]),
                            &config,
                            clause,
                            options.extended_candidate,
                            &mut rng,
                        )?
                    };
                    Ok(assemble(i, lexical_type, clause, context, set, &config))
                })
                .collect::<Result<_>>()?
        }
    };

    let ids: Vec<String> = instances
        .iter()
        .map(|inst| inst.instance_id.clone())
        .collect();
    let split = blm_split(&ids, seed);
    Ok((instances, split))
}

fn assemble(
    index: usize,
    lexical_type: LexicalType,
    clause: Clause,
    context: Vec<Sentence>,
    set: AnswerSet,
    config: &LanguageConfig,
) -> BlmInstance {
    BlmInstance {
        instance_id: format!("{}-{}-{:06}", config.language, lexical_type, index),
        language: config.language,
        lexical_type,
        clause,
        context,
        answers: set.answers,
        correct_index: set.correct_index,
    }
}
