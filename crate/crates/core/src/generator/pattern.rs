use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::seeds::{ChunkSlot, GrammNumber};

/// Number of grammatical `np [pp1 [pp2]] vp` patterns.
pub const PATTERN_COUNT: usize = 14;

/// Number of patterns once agreement is not enforced (every number
/// assignment of the three chunk shapes).
pub const STRUCTURE_COUNT: usize = 28;

/// Chunk sequence with the grammatical number of every chunk.
///
/// Agreement (`vp == np`) is not enforced by the type: agreement-error
/// candidates are patterns too. [`ChunkPattern::is_grammatical`] tells
/// them apart.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub struct ChunkPattern {
    pub np: GrammNumber,
    pub pp1: Option<GrammNumber>,
    pub pp2: Option<GrammNumber>,
    pub vp: GrammNumber,
}

impl ChunkPattern {
    pub fn new(
        np: GrammNumber,
        pp1: Option<GrammNumber>,
        pp2: Option<GrammNumber>,
        vp: GrammNumber,
    ) -> Result<Self> {
        if pp2.is_some() && pp1.is_none() {
            return Err(Error::config("pp2 requires pp1"));
        }
        Ok(ChunkPattern { np, pp1, pp2, vp })
    }

    pub fn is_grammatical(&self) -> bool {
        self.np == self.vp
    }

    /// Number of chunks (2, 3 or 4).
    pub fn len(&self) -> usize {
        2 + usize::from(self.pp1.is_some()) + usize::from(self.pp2.is_some())
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// `(slot, number)` for every chunk, in surface order.
    pub fn chunks(&self) -> Vec<(ChunkSlot, GrammNumber)> {
        let mut out = vec![(ChunkSlot::Subj, self.np)];
        if let Some(n) = self.pp1 {
            out.push((ChunkSlot::P1, n));
        }
        if let Some(n) = self.pp2 {
            out.push((ChunkSlot::P2, n));
        }
        out.push((ChunkSlot::V, self.vp));
        out
    }

    fn sort_key(&self) -> (usize, Vec<GrammNumber>) {
        (
            self.len(),
            self.chunks().into_iter().map(|(_, n)| n).collect(),
        )
    }

    /// Position among the 14 grammatical patterns, `None` for agreement errors.
    pub fn pattern_index(&self) -> Option<usize> {
        if !self.is_grammatical() {
            return None;
        }
        enumerate_patterns().iter().position(|p| p == self)
    }

    /// Position in `0..STRUCTURE_COUNT`: the grammatical patterns first (in
    /// [`enumerate_patterns`] order), then the agreement errors in the same
    /// length-then-numbers order.
    pub fn structure_index(&self) -> usize {
        match self.pattern_index() {
            Some(i) => i,
            None => {
                PATTERN_COUNT
                    + enumerate_all()
                        .into_iter()
                        .filter(|p| !p.is_grammatical())
                        .position(|p| p == *self)
                        .expect("every pattern is enumerated")
            }
        }
    }
}

fn enumerate_all() -> Vec<ChunkPattern> {
    let mut all = Vec::with_capacity(STRUCTURE_COUNT);
    for np in GrammNumber::ALL {
        for vp in GrammNumber::ALL {
            all.push(ChunkPattern {
                np,
                pp1: None,
                pp2: None,
                vp,
            });
            for p1 in GrammNumber::ALL {
                all.push(ChunkPattern {
                    np,
                    pp1: Some(p1),
                    pp2: None,
                    vp,
                });
                for p2 in GrammNumber::ALL {
                    all.push(ChunkPattern {
                        np,
                        pp1: Some(p1),
                        pp2: Some(p2),
                        vp,
                    });
                }
            }
        }
    }
    all.sort_by_key(ChunkPattern::sort_key);
    all
}

/// The 14 grammatical patterns, ordered by length and then by the number
/// tuple (singular before plural).
pub fn enumerate_patterns() -> Vec<ChunkPattern> {
    enumerate_all()
        .into_iter()
        .filter(ChunkPattern::is_grammatical)
        .collect()
}

impl fmt::Display for ChunkPattern {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let names = ["np", "pp1", "pp2", "vp"];
        let parts: Vec<String> = self
            .chunks()
            .into_iter()
            .map(|(slot, n)| format!("{}-{}", names[slot as usize], n.tag()))
            .collect();
        f.write_str(&parts.join(" "))
    }
}

impl FromStr for ChunkPattern {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::Parse {
            line: 0,
            message: format!("malformed chunk pattern {s:?}"),
        };
        let mut np = None;
        let mut pp1 = None;
        let mut pp2 = None;
        let mut vp = None;
        for part in s.split_whitespace() {
            let (name, tag) = part.split_once('-').ok_or_else(bad)?;
            let number = match tag {
                "s" => GrammNumber::Sg,
                "p" => GrammNumber::Pl,
                _ => return Err(bad()),
            };
            let slot = match name {
                "np" => &mut np,
                "pp1" => &mut pp1,
                "pp2" => &mut pp2,
                "vp" => &mut vp,
                _ => return Err(bad()),
            };
            if slot.replace(number).is_some() {
                return Err(bad());
            }
        }
        let pattern = ChunkPattern::new(np.ok_or_else(bad)?, pp1, pp2, vp.ok_or_else(bad)?)
            .map_err(|_| bad())?;
        if pattern.to_string() != s.split_whitespace().collect::<Vec<_>>().join(" ") {
            return Err(bad());
        }
        Ok(pattern)
    }
}

impl TryFrom<String> for ChunkPattern {
    type Error = Error;

    fn try_from(s: String) -> Result<Self> {
        s.parse()
    }
}

impl From<ChunkPattern> for String {
    fn from(p: ChunkPattern) -> String {
        p.to_string()
    }
}
