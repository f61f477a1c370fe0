//! Two-stage triage: the informativeness gate runs first and only messages it
//! accepts are tagged for actionability.

use std::io::{BufRead, Write};
use std::sync::atomic::{AtomicUsize, Ordering};

use rayon::prelude::*;
use serde::Serialize;

use crate::actionability::{ActionSet, Ensemble};
use crate::corpus::{Message, MessageRecord};
use crate::error::{Error, Result};
use crate::informativeness::{check_threshold, classify, CnnModel, InformativenessDecision};
use crate::text::EmbeddingTable;

/// One output line of `classify`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Classified {
    pub id: String,
    pub informative: bool,
    pub p: f64,
    pub actions: Vec<String>,
}

pub struct Pipeline {
    gate: CnnModel,
    ensemble: Ensemble,
    table: EmbeddingTable,
    threshold: f64,
    actionability_calls: AtomicUsize,
}

/// Messages handled per parallel chunk while streaming.
pub const STREAM_CHUNK: usize = 512;

impl Pipeline {
    pub fn new(gate: CnnModel, ensemble: Ensemble, table: EmbeddingTable, threshold: f64) -> Result<Self> {
        check_threshold(threshold)?;
        Ok(Pipeline {
            gate,
            ensemble,
            table,
            threshold,
            actionability_calls: AtomicUsize::new(0),
        })
    }

    pub fn threshold(&self) -> f64 {
        self.threshold
    }

    pub fn set_threshold(&mut self, threshold: f64) -> Result<()> {
        check_threshold(threshold)?;
        self.threshold = threshold;
        Ok(())
    }

    pub fn gate(&self) -> &CnnModel {
        &self.gate
    }

    pub fn ensemble(&self) -> &Ensemble {
        &self.ensemble
    }

    pub fn table(&self) -> &EmbeddingTable {
        &self.table
    }

    /// How many messages reached the actionability stage so far.
    pub fn actionability_calls(&self) -> usize {
        self.actionability_calls.load(Ordering::Relaxed)
    }

    pub fn screen(&self, text: &str) -> Result<InformativenessDecision> {
        classify(&self.gate, text, self.threshold)
    }

    pub fn classify_text(&self, text: &str) -> Result<(InformativenessDecision, ActionSet)> {
        let decision = self.screen(text)?;
        if !decision.decision.is_informative() {
            return Ok((decision, ActionSet::new()));
        }
        self.actionability_calls.fetch_add(1, Ordering::Relaxed);
        let actions = self.ensemble.classify_actionability(text, &self.table, Some(&decision))?;
        Ok((decision, actions))
    }

    pub fn classify_message(&self, message: &Message) -> Result<Classified> {
        let (decision, actions) = self.classify_text(message.text())?;
        Ok(Classified {
            id: message.id().to_string(),
            informative: decision.decision.is_informative(),
            p: decision.probability_informative,
            actions: actions.codes(),
        })
    }

    /// Classify JSON-lines messages from `input`, writing one JSON record per
    /// message to `output` in input order. Chunks are processed in parallel.
    /// Returns the number of messages written; malformed lines are errors.
    pub fn classify_stream(&self, input: impl BufRead, mut output: impl Write) -> Result<usize> {
        let mut lines = input.lines().enumerate();
        let mut written = 0;
        loop {
            let mut chunk = Vec::with_capacity(STREAM_CHUNK);
            for (i, line) in lines.by_ref() {
                let line = line.map_err(|e| Error::io("<input>", e))?;
                if line.trim().is_empty() {
                    continue;
                }
                chunk.push((i + 1, line));
                if chunk.len() == STREAM_CHUNK {
                    break;
                }
            }
            if chunk.is_empty() {
                return Ok(written);
            }
            let results: Vec<Result<String>> = chunk
                .par_iter()
                .map(|(line_no, line)| {
                    let parse_err = |message: String| Error::Parse {
                        context: "message stream".into(),
                        line: *line_no,
                        message,
                    };
                    let record: MessageRecord = serde_json::from_str(line).map_err(|e| parse_err(e.to_string()))?;
                    let message = record.to_message().map_err(|e| parse_err(e.to_string()))?;
                    let out = self.classify_message(&message)?;
                    Ok(serde_json::to_string(&out).expect("plain record serializes"))
                })
                .collect();
            for r in results {
                writeln!(output, "{}", r?).map_err(|e| Error::io("<output>", e))?;
                written += 1;
            }
        }
    }
}
