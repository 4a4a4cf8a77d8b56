use std::collections::BTreeSet;
use std::io::{BufRead, Write};

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

fn is_unit(v: &f64) -> bool {
    *v == 1.0
}

fn unit() -> f64 {
    1.0
}

/// One answered query.
///
/// `tau` and `answer` refer to the range-normalized query; the issuer's
/// quantity is `scale * answer`. `scale` is omitted from JSON when it is 1.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TranscriptEntry {
    pub round: usize,
    pub label_dep: bool,
    pub tau: f64,
    pub answer: f64,
    #[serde(default = "unit", skip_serializing_if = "is_unit")]
    pub scale: f64,
}

/// Ordered log of oracle calls, with rounds supplied by the protocol driver.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Transcript {
    entries: Vec<TranscriptEntry>,
}

impl Transcript {
    pub fn new() -> Self {
        Self::default()
    }

    /// Appends an entry; rounds must be nondecreasing.
    pub fn push(&mut self, entry: TranscriptEntry) -> Result<()> {
        if let Some(last) = self.entries.last() {
            if entry.round < last.round {
                return Err(Error::Protocol(format!(
                    "round {} issued after round {} was opened",
                    entry.round, last.round
                )));
            }
        }
        self.entries.push(entry);
        Ok(())
    }

    /// Checks the round ordering before any of `count` entries is written.
    pub fn check_round(&self, round: usize) -> Result<()> {
        match self.entries.last() {
            Some(last) if round < last.round => Err(Error::Protocol(format!(
                "round {round} issued after round {} was opened",
                last.round
            ))),
            _ => Ok(()),
        }
    }

    pub fn entries(&self) -> &[TranscriptEntry] {
        &self.entries
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn label_dependent_count(&self) -> usize {
        self.entries.iter().filter(|e| e.label_dep).count()
    }

    /// Answers bit-for-bit, for identity comparisons.
    pub fn answer_bits(&self) -> Vec<u64> {
        self.entries.iter().map(|e| e.answer.to_bits()).collect()
    }

    pub fn write_jsonl<W: Write>(&self, mut w: W) -> Result<()> {
        for e in &self.entries {
            serde_json::to_writer(&mut w, e)?;
            w.write_all(b"\n")?;
        }
        Ok(())
    }

    pub fn to_jsonl(&self) -> String {
        let mut buf = Vec::new();
        self.write_jsonl(&mut buf).expect("writing to a Vec cannot fail");
        String::from_utf8(buf).expect("serde_json emits UTF-8")
    }

    pub fn read_jsonl<R: BufRead>(r: R) -> Result<Self> {
        let mut t = Transcript::new();
        for line in r.lines() {
            let line = line?;
            if line.trim().is_empty() {
                continue;
            }
            t.push(serde_json::from_str(&line)?)?;
        }
        Ok(t)
    }
}

/// True iff every label-dependent entry was issued in round 0.
pub fn assert_label_non_adaptive(t: &Transcript) -> bool {
    t.entries().iter().all(|e| !e.label_dep || e.round == 0)
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AdaptivityProfile {
    /// Number of distinct rounds that carried at least one query.
    pub rounds: usize,
    pub label_dependent_rounds: BTreeSet<usize>,
}

pub fn adaptivity_profile(t: &Transcript) -> AdaptivityProfile {
    let rounds: BTreeSet<usize> = t.entries().iter().map(|e| e.round).collect();
    let label_dependent_rounds = t
        .entries()
        .iter()
        .filter(|e| e.label_dep)
        .map(|e| e.round)
        .collect();
    AdaptivityProfile { rounds: rounds.len(), label_dependent_rounds }
}
