use std::collections::BTreeMap;
use std::fmt;
use std::hash::Hasher;
use std::str::FromStr;

use fnv::FnvHasher;
use serde::{Deserialize, Serialize};

use super::pattern::ChunkPattern;
use crate::error::{Error, Result};
use crate::seeds::{Capitalization, ChunkSlot, ExtraColumn, Language, LanguageConfig, SeedRecord};

/// Stable 64-bit sentence identifier: FNV-1a over the UTF-8 text, a NUL
/// byte, and the language code.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub struct SentenceId(pub u64);

impl SentenceId {
    pub fn of(text: &str, language: Language) -> Self {
        let mut h = FnvHasher::default();
        h.write(text.as_bytes());
        h.write(&[0]);
        h.write(language.code().as_bytes());
        SentenceId(h.finish())
    }
}

impl fmt::Display for SentenceId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:016x}", self.0)
    }
}

impl FromStr for SentenceId {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        u64::from_str_radix(s, 16)
            .map(SentenceId)
            .map_err(|_| Error::Parse {
                line: 0,
                message: format!("bad sentence id {s:?}"),
            })
    }
}

impl TryFrom<String> for SentenceId {
    type Error = Error;
    fn try_from(s: String) -> Result<Self> {
        s.parse()
    }
}

impl From<SentenceId> for String {
    fn from(id: SentenceId) -> String {
        id.to_string()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Clause {
    Main,
    /// Sentence embedded under the record's `completive_prefix`.
    Completive,
    /// The record's `relative_insert` placed right before the verb.
    Relative,
}

impl Clause {
    pub const ALL: [Clause; 3] = [Clause::Main, Clause::Completive, Clause::Relative];

    fn column(self) -> Option<ExtraColumn> {
        match self {
            Clause::Main => None,
            Clause::Completive => Some(ExtraColumn::CompletivePrefix),
            Clause::Relative => Some(ExtraColumn::RelativeInsert),
        }
    }

    /// True when `record` has what this clause structure needs.
    pub fn supported_by(self, record: &SeedRecord) -> bool {
        self.column().is_none_or(|c| record.extra(c).is_some())
    }
}

/// Which seed record supplies each chunk slot.
#[derive(Debug, Clone, Copy, Default)]
pub struct SlotSeeds<'a> {
    slots: [Option<&'a SeedRecord>; 4],
}

impl<'a> SlotSeeds<'a> {
    pub fn uniform(record: &'a SeedRecord) -> Self {
        SlotSeeds {
            slots: [Some(record); 4],
        }
    }

    pub fn with(mut self, slot: ChunkSlot, record: &'a SeedRecord) -> Self {
        self.slots[slot as usize] = Some(record);
        self
    }

    pub fn get(&self, slot: ChunkSlot) -> Option<&'a SeedRecord> {
        self.slots[slot as usize]
    }

    fn require(&self, slot: ChunkSlot) -> Result<&'a SeedRecord> {
        self.get(slot)
            .ok_or_else(|| Error::generation(format!("no seed record for slot {slot:?}")))
    }
}

/// Everything about a sentence except its lexical material.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct SentenceShape {
    pub pattern: ChunkPattern,
    pub clause: Clause,
    /// The coordination token sits between the first and second attractor.
    pub coordinated: bool,
    /// A third, plural attractor follows the second one.
    pub extended: bool,
}

impl SentenceShape {
    pub fn main(pattern: ChunkPattern) -> Self {
        SentenceShape {
            pattern,
            clause: Clause::Main,
            coordinated: false,
            extended: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Sentence {
    pub text: String,
    pub shape: SentenceShape,
    pub language: Language,
    pub id: SentenceId,
    /// Record id per slot used. Empty for sentences loaded from a dataset file.
    #[serde(skip)]
    pub seed_ids: BTreeMap<ChunkSlot, String>,
}

impl Sentence {
    pub fn pattern(&self) -> ChunkPattern {
        self.shape.pattern
    }

    /// Rebuilds a sentence from stored text; the id is recomputed.
    pub fn from_parts(text: String, shape: SentenceShape, language: Language) -> Self {
        let id = SentenceId::of(&text, language);
        Sentence {
            text,
            shape,
            language,
            id,
            seed_ids: BTreeMap::new(),
        }
    }
}

fn lowercase_first(s: &str) -> String {
    let mut chars = s.chars();
    match chars.next() {
        Some(c) => c.to_lowercase().chain(chars).collect(),
        None => String::new(),
    }
}

fn uppercase_first(s: &str) -> String {
    let mut chars = s.chars();
    match chars.next() {
        Some(c) => c.to_uppercase().chain(chars).collect(),
        None => String::new(),
    }
}

/// Main-clause realization: `Subj [P1 [P2]] V` plus the terminator.
pub fn realize_sentence(
    pattern: ChunkPattern,
    seeds: &SlotSeeds<'_>,
    config: &LanguageConfig,
) -> Result<Sentence> {
    realize_shape(&SentenceShape::main(pattern), seeds, config)
}

pub fn realize_shape(
    shape: &SentenceShape,
    seeds: &SlotSeeds<'_>,
    config: &LanguageConfig,
) -> Result<Sentence> {
    let pattern = shape.pattern;
    if (shape.coordinated || shape.extended) && pattern.pp2.is_none() {
        return Err(Error::generation(
            "coordinated and extended sentences need a second attractor",
        ));
    }
    let subj = seeds.require(ChunkSlot::Subj)?;
    let mut seed_ids = BTreeMap::new();
    let mut parts: Vec<String> = Vec::with_capacity(7);

    let clause_extra = |record: &SeedRecord| -> Result<Option<String>> {
        match shape.clause.column() {
            None => Ok(None),
            Some(column) => record
                .extra(column)
                .map(|s| Some(s.to_string()))
                .ok_or_else(|| {
                    Error::generation(format!(
                        "seed {} has no {} column value",
                        record.id,
                        column.header()
                    ))
                }),
        }
    };

    let clause_text = clause_extra(subj)?;
    let subject = subj.form(ChunkSlot::Subj, pattern.np);
    seed_ids.insert(ChunkSlot::Subj, subj.id.clone());
    if shape.clause == Clause::Completive {
        parts.push(clause_text.clone().unwrap_or_default());
        parts.push(lowercase_first(subject));
    } else {
        parts.push(subject.to_string());
    }

    if let Some(n) = pattern.pp1 {
        let rec = seeds.require(ChunkSlot::P1)?;
        parts.push(rec.form(ChunkSlot::P1, n).to_string());
        seed_ids.insert(ChunkSlot::P1, rec.id.clone());
    }
    if let Some(n) = pattern.pp2 {
        let rec = seeds.require(ChunkSlot::P2)?;
        if shape.coordinated {
            parts.push(config.coordination_token.clone());
            let column = match n {
                crate::seeds::GrammNumber::Sg => ExtraColumn::CoordP2Sg,
                crate::seeds::GrammNumber::Pl => ExtraColumn::CoordP2Pl,
            };
            let conjunct = rec
                .extra(column)
                .unwrap_or_else(|| rec.form(ChunkSlot::P2, n));
            parts.push(conjunct.to_string());
        } else {
            parts.push(rec.form(ChunkSlot::P2, n).to_string());
        }
        if shape.extended {
            let extra = rec.extra(ExtraColumn::P3Pl).ok_or_else(|| {
                Error::generation(format!("seed {} has no p3_pl column value", rec.id))
            })?;
            parts.push(extra.to_string());
        }
        seed_ids.insert(ChunkSlot::P2, rec.id.clone());
    }
    if shape.clause == Clause::Relative {
        parts.push(clause_text.unwrap_or_default());
    }
    let verb = seeds.require(ChunkSlot::V)?;
    parts.push(verb.form(ChunkSlot::V, pattern.vp).to_string());
    seed_ids.insert(ChunkSlot::V, verb.id.clone());

    let mut text = parts.join(" ");
    text.push_str(&config.sentence_terminator);
    if config.capitalization == Capitalization::CapitalizeFirst {
        text = uppercase_first(&text);
    }
    let id = SentenceId::of(&text, config.language);
    Ok(Sentence {
        text,
        shape: *shape,
        language: config.language,
        id,
        seed_ids,
    })
}
