//! Dense value tables keyed by (state, others' joint action, own choice) and
//! their plain-text checkpoint format.
//!
//! A checkpoint line is `TAG state others choice value`. Only non-zero
//! entries are written, sorted by (tag, state, others, choice); values use 17
//! significant digits so a reload is bit-exact.

use std::collections::BTreeSet;
use std::fmt::Write as _;
use std::hash::{Hash, Hasher};

use crate::error::{Error, Result};
use crate::game::StateId;

/// Largest table the dense representation will allocate.
const MAX_ENTRIES: usize = 1 << 27;

#[derive(Debug, Clone, PartialEq)]
pub struct QTable {
    states: usize,
    others: usize,
    width: usize,
    values: Vec<f64>,
}

/// Own-action values, `lowQ(s, a^-j, a^j)`.
pub type LowQTable = QTable;
/// Advisor values, `highQ(s, a^-j, ad)`.
pub type HighQTable = QTable;

impl QTable {
    pub fn new(states: usize, others: usize, width: usize) -> Result<Self> {
        let n = states
            .checked_mul(others)
            .and_then(|x| x.checked_mul(width))
            .filter(|&n| n <= MAX_ENTRIES)
            .ok_or_else(|| {
                Error::config(format!(
                    "table of {states} x {others} x {width} entries is too large for a tabular learner"
                ))
            })?;
        Ok(QTable {
            states,
            others,
            width,
            values: vec![0.0; n],
        })
    }

    pub fn states(&self) -> usize {
        self.states
    }

    pub fn others(&self) -> usize {
        self.others
    }

    pub fn width(&self) -> usize {
        self.width
    }

    /// Dense index of a row, also used to key pair counters.
    pub fn row_index(&self, s: StateId, others: usize) -> usize {
        debug_assert!(s < self.states && others < self.others);
        s * self.others + others
    }

    pub fn get(&self, s: StateId, others: usize, k: usize) -> f64 {
        self.values[self.row_index(s, others) * self.width + k]
    }

    pub fn set(&mut self, s: StateId, others: usize, k: usize, v: f64) {
        let i = self.row_index(s, others) * self.width + k;
        self.values[i] = v;
    }

    pub fn row(&self, s: StateId, others: usize) -> &[f64] {
        let i = self.row_index(s, others) * self.width;
        &self.values[i..i + self.width]
    }

    pub fn row_mut(&mut self, s: StateId, others: usize) -> &mut [f64] {
        let i = self.row_index(s, others) * self.width;
        &mut self.values[i..i + self.width]
    }

    pub fn max(&self, s: StateId, others: usize) -> f64 {
        self.row(s, others)
            .iter()
            .copied()
            .fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn argmax(&self, s: StateId, others: usize) -> usize {
        argmax(self.row(s, others))
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn hash_bits<H: Hasher>(&self, h: &mut H) {
        for v in &self.values {
            v.to_bits().hash(h);
        }
    }

    /// Append this table's non-zero entries under `tag`.
    pub fn write_entries(&self, tag: &str, out: &mut Vec<CheckpointEntry>) {
        for s in 0..self.states {
            for o in 0..self.others {
                for (k, &v) in self.row(s, o).iter().enumerate() {
                    if v != 0.0 {
                        out.push(CheckpointEntry {
                            tag: tag.to_string(),
                            state: s,
                            others: o,
                            choice: k,
                            value: v,
                        });
                    }
                }
            }
        }
    }

    /// Fill from checkpoint entries carrying `tag`; others are ignored.
    pub fn load_entries(&mut self, tag: &str, entries: &[CheckpointEntry]) -> Result<()> {
        for e in entries.iter().filter(|e| e.tag == tag) {
            if e.state >= self.states || e.others >= self.others || e.choice >= self.width {
                return Err(Error::parse(
                    format!("{tag} {} {} {}", e.state, e.others, e.choice),
                    format!(
                        "key outside table shape {} x {} x {}",
                        self.states, self.others, self.width
                    ),
                ));
            }
            self.set(e.state, e.others, e.choice, e.value);
        }
        Ok(())
    }
}

/// Lowest index among the maxima.
pub fn argmax(values: &[f64]) -> usize {
    let mut best = 0;
    for (i, &v) in values.iter().enumerate().skip(1) {
        if v > values[best] {
            best = i;
        }
    }
    best
}

#[derive(Debug, Clone, PartialEq)]
pub struct CheckpointEntry {
    pub tag: String,
    pub state: StateId,
    pub others: usize,
    pub choice: usize,
    pub value: f64,
}

/// 17 significant digits, enough for an exact f64 round trip.
pub fn format_f64(v: f64) -> String {
    format!("{v:.16e}")
}

pub fn render_checkpoint(mut entries: Vec<CheckpointEntry>) -> String {
    entries.sort_by(|a, b| {
        (&a.tag, a.state, a.others, a.choice).cmp(&(&b.tag, b.state, b.others, b.choice))
    });
    let mut out = String::new();
    for e in entries {
        let _ = writeln!(
            out,
            "{} {} {} {} {}",
            e.tag,
            e.state,
            e.others,
            e.choice,
            format_f64(e.value)
        );
    }
    out
}

pub fn parse_checkpoint(text: &str, origin: &str) -> Result<Vec<CheckpointEntry>> {
    let mut out = Vec::new();
    for (n, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let at = || format!("{origin}:{}", n + 1);
        let fields: Vec<&str> = line.split_whitespace().collect();
        if fields.len() != 5 {
            return Err(Error::parse(at(), "expected `TAG state others choice value`"));
        }
        let int = |f: &str| {
            f.parse::<usize>()
                .map_err(|_| Error::parse(at(), format!("bad index `{f}`")))
        };
        let value = fields[4]
            .parse::<f64>()
            .map_err(|_| Error::parse(at(), format!("bad value `{}`", fields[4])))?;
        out.push(CheckpointEntry {
            tag: fields[0].to_string(),
            state: int(fields[1])?,
            others: int(fields[2])?,
            choice: int(fields[3])?,
            value,
        });
    }
    Ok(out)
}

/// States mentioned by any entry under `tag`.
pub fn covered_states(entries: &[CheckpointEntry], tag: &str) -> BTreeSet<StateId> {
    entries
        .iter()
        .filter(|e| e.tag == tag)
        .map(|e| e.state)
        .collect()
}
