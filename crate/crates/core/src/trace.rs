//! JSON-lines trajectory traces.
//!
//! One record per round, with configurations in their canonical text form so
//! every analytical quantity can be recomputed from the trace alone.

use std::io::{self, BufRead, Write};

use serde::{Deserialize, Serialize};

use crate::opinion::Configuration;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RoundRecord {
    pub round: u64,
    /// Configuration after the update, before the adversary.
    pub pre_adv: String,
    /// Configuration after the adversary; input of the next round.
    pub post_adv: String,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub events: Vec<String>,
}

impl RoundRecord {
    pub fn new(round: u64, pre: &Configuration, post: &Configuration) -> Self {
        RoundRecord {
            round,
            pre_adv: pre.canonical_string(),
            post_adv: post.canonical_string(),
            events: Vec::new(),
        }
    }

    pub fn pre_configuration(&self) -> Result<Configuration, crate::opinion::ConfigError> {
        self.pre_adv.parse()
    }

    pub fn post_configuration(&self) -> Result<Configuration, crate::opinion::ConfigError> {
        self.post_adv.parse()
    }
}

pub fn write_jsonl<W: Write>(records: &[RoundRecord], mut out: W) -> io::Result<()> {
    for record in records {
        serde_json::to_writer(&mut out, record)?;
        out.write_all(b"\n")?;
    }
    Ok(())
}

pub fn read_jsonl<R: BufRead>(input: R) -> io::Result<Vec<RoundRecord>> {
    let mut records = Vec::new();
    for line in input.lines() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        records.push(serde_json::from_str(&line)?);
    }
    Ok(records)
}
