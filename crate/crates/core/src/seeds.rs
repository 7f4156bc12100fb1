//! Seed files: one lexical family per line, giving the singular and plural
//! surface form of every chunk slot.
//!
//! The container is a UTF-8, tab-separated file with a header line. The
//! first eight columns are fixed:
//!
//! ```text
//! Subj_sg  Subj_pl  P1_sg  P1_pl  P2_sg  P2_pl  V_sg  V_pl
//! ```
//!
//! Optional trailing columns, in any order, decorate the record:
//! `completive_prefix` and `relative_insert` enable the two embedded clause
//! structures, `coord_p2_sg`/`coord_p2_pl` override the conjunct used by the
//! coordination distractor, and `p3_pl` enables the longer-sequence
//! distractor. Lines starting with `#` are comments; blank lines are skipped.
//! Contracted preposition/determiner forms ("du", "sull'") are stored fully
//! realized in the cells, so generation never inflects anything.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const FIELD_SEPARATOR: char = '\t';

/// Header names of the eight mandatory columns, in file order.
pub const CORE_COLUMNS: [&str; 8] = [
    "Subj_sg", "Subj_pl", "P1_sg", "P1_pl", "P2_sg", "P2_pl", "V_sg", "V_pl",
];

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum GrammNumber {
    Sg,
    Pl,
}

impl GrammNumber {
    pub const ALL: [GrammNumber; 2] = [GrammNumber::Sg, GrammNumber::Pl];

    pub fn flip(self) -> Self {
        match self {
            GrammNumber::Sg => GrammNumber::Pl,
            GrammNumber::Pl => GrammNumber::Sg,
        }
    }

    /// One-letter tag used in pattern strings ("np-s").
    pub fn tag(self) -> char {
        match self {
            GrammNumber::Sg => 's',
            GrammNumber::Pl => 'p',
        }
    }

    fn index(self) -> usize {
        self as usize
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum ChunkSlot {
    Subj,
    P1,
    P2,
    V,
}

impl ChunkSlot {
    pub const ALL: [ChunkSlot; 4] = [ChunkSlot::Subj, ChunkSlot::P1, ChunkSlot::P2, ChunkSlot::V];

    fn index(self) -> usize {
        self as usize
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Language {
    En,
    Fr,
    It,
    Ro,
}

impl Language {
    pub const ALL: [Language; 4] = [Language::En, Language::Fr, Language::It, Language::Ro];

    pub fn code(self) -> &'static str {
        match self {
            Language::En => "en",
            Language::Fr => "fr",
            Language::It => "it",
            Language::Ro => "ro",
        }
    }

    pub fn index(self) -> usize {
        self as usize
    }
}

impl fmt::Display for Language {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.code())
    }
}

impl FromStr for Language {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "en" => Ok(Language::En),
            "fr" => Ok(Language::Fr),
            "it" => Ok(Language::It),
            "ro" => Ok(Language::Ro),
            other => Err(Error::config(format!(
                "unsupported language code {other:?} (expected en, fr, it or ro)"
            ))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Capitalization {
    CapitalizeFirst,
    None,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LanguageConfig {
    pub language: Language,
    pub coordination_token: String,
    pub sentence_terminator: String,
    pub capitalization: Capitalization,
}

impl LanguageConfig {
    pub fn for_language(language: Language) -> Self {
        let token = match language {
            Language::En => "and",
            Language::Fr => "et",
            Language::It => "e",
            Language::Ro => "și",
        };
        LanguageConfig {
            language,
            coordination_token: token.to_string(),
            sentence_terminator: ".".to_string(),
            capitalization: Capitalization::CapitalizeFirst,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.coordination_token.trim().is_empty() {
            return Err(Error::config("coordination token must not be empty"));
        }
        Ok(())
    }
}

/// Optional decoration columns a seed file may carry after the core eight.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum ExtraColumn {
    CompletivePrefix,
    RelativeInsert,
    CoordP2Sg,
    CoordP2Pl,
    P3Pl,
}

impl ExtraColumn {
    pub const ALL: [ExtraColumn; 5] = [
        ExtraColumn::CompletivePrefix,
        ExtraColumn::RelativeInsert,
        ExtraColumn::CoordP2Sg,
        ExtraColumn::CoordP2Pl,
        ExtraColumn::P3Pl,
    ];

    pub fn header(self) -> &'static str {
        match self {
            ExtraColumn::CompletivePrefix => "completive_prefix",
            ExtraColumn::RelativeInsert => "relative_insert",
            ExtraColumn::CoordP2Sg => "coord_p2_sg",
            ExtraColumn::CoordP2Pl => "coord_p2_pl",
            ExtraColumn::P3Pl => "p3_pl",
        }
    }

    fn from_header(name: &str) -> Option<Self> {
        ExtraColumn::ALL.into_iter().find(|c| c.header() == name)
    }

    fn index(self) -> usize {
        self as usize
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SeedRecord {
    pub id: String,
    pub language: Language,
    forms: [[String; 2]; 4],
    extras: [Option<String>; 5],
}

impl SeedRecord {
    /// Builds a record from its eight core cells in header order.
    pub fn new(id: impl Into<String>, language: Language, cells: [&str; 8]) -> Result<Self> {
        let mut record = SeedRecord {
            id: id.into(),
            language,
            forms: Default::default(),
            extras: Default::default(),
        };
        for (i, cell) in cells.iter().enumerate() {
            record.forms[i / 2][i % 2] = cell.to_string();
        }
        record.validate(0)?;
        Ok(record)
    }

    pub fn with_extra(mut self, column: ExtraColumn, value: &str) -> Result<Self> {
        check_cell(value, 0, column.header())?;
        self.extras[column.index()] = (!value.is_empty()).then(|| value.to_string());
        Ok(self)
    }

    pub fn form(&self, slot: ChunkSlot, number: GrammNumber) -> &str {
        &self.forms[slot.index()][number.index()]
    }

    pub fn extra(&self, column: ExtraColumn) -> Option<&str> {
        self.extras[column.index()].as_deref()
    }

    /// Same lexical content regardless of id.
    pub fn same_content(&self, other: &SeedRecord) -> bool {
        self.language == other.language && self.forms == other.forms && self.extras == other.extras
    }

    fn validate(&self, line: usize) -> Result<()> {
        for (i, name) in CORE_COLUMNS.iter().enumerate() {
            let cell = &self.forms[i / 2][i % 2];
            if cell.trim().is_empty() {
                return Err(Error::Validation {
                    line,
                    message: format!("empty cell in column {name}"),
                });
            }
            check_cell(cell, line, name)?;
        }
        Ok(())
    }
}

fn check_cell(cell: &str, line: usize, column: &str) -> Result<()> {
    if cell.contains(FIELD_SEPARATOR) || cell.contains('\n') {
        return Err(Error::Validation {
            line,
            message: format!("cell in column {column} contains a field or line separator"),
        });
    }
    Ok(())
}

/// Surface text for one chunk; a plain table lookup.
pub fn realize_chunk(record: &SeedRecord, slot: ChunkSlot, number: GrammNumber) -> &str {
    record.form(slot, number)
}

/// A parsed seed file: the records plus the optional columns its header declared.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SeedFile {
    pub language: Language,
    pub extra_columns: Vec<ExtraColumn>,
    pub records: Vec<SeedRecord>,
    /// `(line, earlier_line)` for every record whose content repeats an earlier one.
    pub duplicates: Vec<(usize, usize)>,
}

impl SeedFile {
    /// Serializes back to TSV. Ids are not stored; re-parsing reassigns them
    /// from line numbers, so only files without comments or blank lines
    /// round-trip their ids exactly.
    pub fn to_tsv(&self) -> String {
        let mut out = String::new();
        let header: Vec<&str> = CORE_COLUMNS
            .iter()
            .copied()
            .chain(self.extra_columns.iter().map(|c| c.header()))
            .collect();
        out.push_str(&header.join("\t"));
        out.push('\n');
        for record in &self.records {
            let mut cells: Vec<&str> = Vec::with_capacity(header.len());
            for slot in ChunkSlot::ALL {
                for number in GrammNumber::ALL {
                    cells.push(record.form(slot, number));
                }
            }
            for column in &self.extra_columns {
                cells.push(record.extra(*column).unwrap_or(""));
            }
            out.push_str(&cells.join("\t"));
            out.push('\n');
        }
        out
    }
}

/// Parses a seed TSV. Record ids are `<language>-<line number>` (1-based,
/// counting the header and comment lines).
pub fn parse_seed_file(content: &str, language: Language) -> Result<SeedFile> {
    let mut lines = content
        .split('\n')
        .enumerate()
        .map(|(i, l)| (i + 1, l.strip_suffix('\r').unwrap_or(l)))
        .filter(|(_, l)| !l.trim().is_empty() && !l.trim_start().starts_with('#'));

    let (header_line, header) = lines.next().ok_or(Error::Parse {
        line: 1,
        message: "missing header line".to_string(),
    })?;
    let names: Vec<&str> = header.split(FIELD_SEPARATOR).map(str::trim).collect();
    if names.len() < CORE_COLUMNS.len() || names[..CORE_COLUMNS.len()] != CORE_COLUMNS {
        return Err(Error::Parse {
            line: header_line,
            message: format!("header must start with {}", CORE_COLUMNS.join(" ")),
        });
    }
    let mut extra_columns = Vec::new();
    for name in &names[CORE_COLUMNS.len()..] {
        let column = ExtraColumn::from_header(name).ok_or_else(|| Error::Parse {
            line: header_line,
            message: format!("unknown column {name:?}"),
        })?;
        if extra_columns.contains(&column) {
            return Err(Error::Parse {
                line: header_line,
                message: format!("duplicate column {name:?}"),
            });
        }
        extra_columns.push(column);
    }

    let mut records: Vec<SeedRecord> = Vec::new();
    let mut record_lines: Vec<usize> = Vec::new();
    let mut duplicates = Vec::new();
    for (line_no, line) in lines {
        let cells: Vec<&str> = line.split(FIELD_SEPARATOR).map(str::trim).collect();
        if cells.len() != names.len() {
            return Err(Error::Parse {
                line: line_no,
                message: format!("expected {} columns, found {}", names.len(), cells.len()),
            });
        }
        let mut record = SeedRecord {
            id: format!("{}-{}", language.code(), line_no),
            language,
            forms: Default::default(),
            extras: Default::default(),
        };
        for (i, cell) in cells[..CORE_COLUMNS.len()].iter().enumerate() {
            record.forms[i / 2][i % 2] = cell.to_string();
        }
        record.validate(line_no)?;
        for (column, cell) in extra_columns.iter().zip(&cells[CORE_COLUMNS.len()..]) {
            if !cell.is_empty() {
                record.extras[column.index()] = Some(cell.to_string());
            }
        }
        if let Some(pos) = records.iter().position(|r| r.same_content(&record)) {
            log::warn!(
                "seed line {line_no} duplicates line {}; keeping both",
                record_lines[pos]
            );
            duplicates.push((line_no, record_lines[pos]));
        }
        records.push(record);
        record_lines.push(line_no);
    }

    Ok(SeedFile {
        language,
        extra_columns,
        records,
        duplicates,
    })
}
