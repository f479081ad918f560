//! Binary matrix forms of 2TR-periodic states.
//!
//! Row 0 describes unit A, row 1 unit B. Each row is split into two chunks,
//! one per active-tone interval (A tone first, then B tone). Within a chunk
//! the columns are, depending on the kind:
//!
//! | kind    | columns | meaning                                              |
//! |---------|---------|------------------------------------------------------|
//! | `Sm`    | `x y`   | ON at onset, ON during the tone                      |
//! | `Sc`    | `x y z` | as `Sm`, plus `z`: ON by the end of the tone         |
//! | `Lm`    | `x y w` | as `Sm`, plus `w`: both units remain ON after the tone |
//! | `Mixed` | `x y z w` | all of the above                                   |

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MatrixKind {
    Sm,
    Sc,
    Lm,
    Mixed,
}

impl MatrixKind {
    /// Entries per interval chunk.
    pub fn width(self) -> usize {
        match self {
            MatrixKind::Sm => 2,
            MatrixKind::Sc | MatrixKind::Lm => 3,
            MatrixKind::Mixed => 4,
        }
    }

    fn z_col(self) -> Option<usize> {
        match self {
            MatrixKind::Sc | MatrixKind::Mixed => Some(2),
            _ => None,
        }
    }

    fn w_col(self) -> Option<usize> {
        match self {
            MatrixKind::Lm => Some(2),
            MatrixKind::Mixed => Some(3),
            _ => None,
        }
    }
}

/// How the pair of tone sequences is perceived.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Percept {
    Integration,
    Segregation,
    Bistability,
}

impl fmt::Display for Percept {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Percept::Integration => "integration",
            Percept::Segregation => "segregation",
            Percept::Bistability => "bistability",
        })
    }
}

/// A 2-row binary matrix with a layout tag.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct StateMatrix {
    kind: MatrixKind,
    rows: [Vec<u8>; 2],
}

impl StateMatrix {
    pub fn new(kind: MatrixKind, row_a: Vec<u8>, row_b: Vec<u8>) -> Result<Self> {
        let n = 2 * kind.width();
        for row in [&row_a, &row_b] {
            if row.len() != n || row.iter().any(|&v| v > 1) {
                return Err(Error::Domain(format!(
                    "{kind:?} matrix rows need {n} binary entries, got {row:?}"
                )));
            }
        }
        Ok(StateMatrix { kind, rows: [row_a, row_b] })
    }

    /// Parses `"1100/0011"` or `"1100|0011"`.
    pub fn parse(kind: MatrixKind, s: &str) -> Result<Self> {
        let (a, b) = s
            .split_once(['/', '|'])
            .ok_or_else(|| Error::Domain(format!("matrix `{s}` needs two rows")))?;
        let digits = |r: &str| -> Result<Vec<u8>> {
            r.trim()
                .chars()
                .map(|c| match c {
                    '0' => Ok(0),
                    '1' => Ok(1),
                    _ => Err(Error::Domain(format!("bad matrix entry `{c}` in `{s}`"))),
                })
                .collect()
        };
        StateMatrix::new(kind, digits(a)?, digits(b)?)
    }

    pub fn kind(&self) -> MatrixKind {
        self.kind
    }

    pub fn row(&self, unit: usize) -> &[u8] {
        &self.rows[unit]
    }

    /// Entries of `unit` (0 = A, 1 = B) in interval `k` (0 = A tone, 1 = B tone).
    pub fn chunk(&self, unit: usize, k: usize) -> &[u8] {
        let w = self.kind.width();
        &self.rows[unit][k * w..(k + 1) * w]
    }

    /// Swaps units and intervals: the new A row is the old B row with its
    /// interval chunks exchanged, and vice versa.
    pub fn conjugate(&self) -> Self {
        let swap = |row: &[u8]| {
            let w = self.kind.width();
            let mut v = row[w..].to_vec();
            v.extend_from_slice(&row[..w]);
            v
        };
        StateMatrix {
            kind: self.kind,
            rows: [swap(&self.rows[1]), swap(&self.rows[0])],
        }
    }

    pub fn is_symmetric(&self) -> bool {
        *self == self.conjugate()
    }

    /// Whether a unit is ON at some point of interval `k`.
    pub fn responds(&self, unit: usize, k: usize) -> bool {
        let c = self.chunk(unit, k);
        c[1] == 1 || self.kind.z_col().is_some_and(|z| c[z] == 1)
    }

    /// Integration when one unit follows every tone and the other follows
    /// all or none; bistability when the other follows exactly one;
    /// segregation when no unit follows every tone.
    pub fn percept(&self) -> Percept {
        let count = |u| (0..2).filter(|&k| self.responds(u, k)).count();
        let (ra, rb) = (count(0), count(1));
        match (ra.max(rb), ra.min(rb)) {
            (2, 1) => Percept::Bistability,
            (2, _) => Percept::Integration,
            _ => Percept::Segregation,
        }
    }

    /// Per-chunk ordering `x <= y (<= z)` and equal `w` entries across rows.
    pub fn is_well_formed(&self) -> bool {
        for unit in 0..2 {
            for k in 0..2 {
                let c = self.chunk(unit, k);
                if c[0] > c[1] {
                    return false;
                }
                if let Some(z) = self.kind.z_col() {
                    if c[1] > c[z] {
                        return false;
                    }
                }
            }
        }
        if let Some(w) = self.kind.w_col() {
            for k in 0..2 {
                if self.chunk(0, k)[w] != self.chunk(1, k)[w] {
                    return false;
                }
            }
        }
        true
    }
}

impl fmt::Display for StateMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for v in &self.rows[0] {
            write!(f, "{v}")?;
        }
        f.write_str("|")?;
        for v in &self.rows[1] {
            write!(f, "{v}")?;
        }
        Ok(())
    }
}

#[derive(Serialize, Deserialize)]
struct MatrixRepr {
    kind: MatrixKind,
    rows: String,
}

impl Serialize for StateMatrix {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        MatrixRepr { kind: self.kind, rows: self.to_string() }.serialize(s)
    }
}

impl<'de> Deserialize<'de> for StateMatrix {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let r = MatrixRepr::deserialize(d)?;
        StateMatrix::parse(r.kind, &r.rows).map_err(serde::de::Error::custom)
    }
}
