//! Categorical feature vocabulary mapping `field:value` tokens to dense
//! indices. Index 0 is reserved for tokens unseen at build time.

use std::collections::HashMap;
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use crate::error::{Error, Result};
use crate::grid::AuctionRecord;

/// Reserved index for out-of-vocabulary tokens.
pub const OOV_INDEX: usize = 0;
/// Token name written for the reserved index in vocabulary files.
pub const OOV_TOKEN: &str = "<unk>";

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FeatureVocabulary {
    index: HashMap<String, usize>,
    tokens: Vec<String>,
}

impl FeatureVocabulary {
    /// A vocabulary holding only the reserved out-of-vocabulary slot.
    pub fn empty() -> Self {
        Self {
            index: HashMap::new(),
            tokens: vec![OOV_TOKEN.to_string()],
        }
    }

    /// Builds a vocabulary from training records. Tokens with frequency
    /// `>= min_count` receive indices `1..K` in first-appearance order;
    /// everything else maps to index 0. Deterministic for a fixed record
    /// order.
    pub fn build(records: &[AuctionRecord], min_count: usize) -> Result<Self> {
        if records.is_empty() {
            return Err(Error::EmptyInput("training records"));
        }
        let mut counts: HashMap<&str, usize> = HashMap::new();
        for record in records {
            for token in &record.features {
                *counts.entry(token.as_str()).or_insert(0) += 1;
            }
        }
        let mut vocab = Self::empty();
        for record in records {
            for token in &record.features {
                if counts[token.as_str()] >= min_count && !vocab.index.contains_key(token) {
                    let idx = vocab.tokens.len();
                    vocab.index.insert(token.clone(), idx);
                    vocab.tokens.push(token.clone());
                }
            }
        }
        Ok(vocab)
    }

    /// Total number of indices, including the reserved slot.
    pub fn size(&self) -> usize {
        self.tokens.len()
    }

    pub fn lookup(&self, token: &str) -> usize {
        self.index.get(token).copied().unwrap_or(OOV_INDEX)
    }

    /// One index per token, order preserved; unseen tokens map to 0.
    pub fn encode(&self, features: &[String]) -> Vec<usize> {
        features.iter().map(|t| self.lookup(t)).collect()
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let mut out = BufWriter::new(File::create(path)?);
        self.write(&mut out)
    }

    pub fn write(&self, out: &mut impl Write) -> Result<()> {
        for (idx, token) in self.tokens.iter().enumerate() {
            writeln!(out, "{token}\t{idx}")?;
        }
        Ok(())
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let reader = BufReader::new(File::open(path)?);
        Self::read_lines(reader.lines().map(|l| l.map_err(Error::from)))
    }

    /// Reads `token<TAB>index` lines sorted by index, 0 first.
    pub fn read_lines(lines: impl Iterator<Item = Result<String>>) -> Result<Self> {
        let mut tokens = Vec::new();
        let mut index = HashMap::new();
        for (lineno, line) in lines.enumerate() {
            let line = line?;
            let (token, idx_s) = line.split_once('\t').ok_or_else(|| Error::Parse {
                line: lineno + 1,
                msg: "expected token<TAB>index".into(),
            })?;
            let idx: usize = idx_s.parse().map_err(|_| Error::Parse {
                line: lineno + 1,
                msg: format!("invalid index `{idx_s}`"),
            })?;
            if idx != tokens.len() {
                return Err(Error::Parse {
                    line: lineno + 1,
                    msg: format!("indices must be dense and sorted, got {idx}"),
                });
            }
            if idx != OOV_INDEX {
                index.insert(token.to_string(), idx);
            }
            tokens.push(token.to_string());
        }
        if tokens.is_empty() {
            return Err(Error::EmptyInput("vocabulary"));
        }
        Ok(Self { index, tokens })
    }
}
