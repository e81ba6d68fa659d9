//! Document frequencies and the FREQ rarity/commonness penalty.

use std::collections::{HashMap, HashSet};
use std::io::{BufRead, Write};
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::board::WordToken;

/// Default FREQ cutoff: words seen in more than 1 in 1,667 documents are
/// treated as too common.
pub const DEFAULT_ALPHA: f64 = 1.0 / 1667.0;

#[derive(Debug, Error)]
pub enum CorpusError {
    #[error("corpus contains no documents")]
    EmptyCorpus,
    #[error("document-frequency table line {line}: {message}")]
    Malformed { line: usize, message: String },
    #[error("df of `{token}` is {df}, outside 1..={total}")]
    InvalidCount { token: String, df: u64, total: u64 },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// Splits on non-alphabetic characters and lowercases.
pub fn tokenize(text: &str) -> impl Iterator<Item = String> + '_ {
    text.split(|c: char| !c.is_alphabetic())
        .filter(|s| !s.is_empty())
        .map(str::to_lowercase)
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DocFreqTable {
    counts: HashMap<WordToken, u64>,
    total_docs: u64,
}

impl DocFreqTable {
    pub fn from_counts<'a>(
        counts: impl IntoIterator<Item = (&'a str, u64)>,
        total_docs: u64,
    ) -> Result<Self, CorpusError> {
        if total_docs == 0 {
            return Err(CorpusError::EmptyCorpus);
        }
        let mut map = HashMap::new();
        for (raw, df) in counts {
            let token = WordToken::new(raw).map_err(|_| CorpusError::Malformed {
                line: 0,
                message: "empty token".into(),
            })?;
            if df == 0 || df > total_docs {
                return Err(CorpusError::InvalidCount {
                    token: raw.to_string(),
                    df,
                    total: total_docs,
                });
            }
            map.insert(token, df);
        }
        Ok(Self {
            counts: map,
            total_docs,
        })
    }

    pub fn df(&self, token: &str) -> Option<u64> {
        self.counts.get(token).copied()
    }

    pub fn total_docs(&self) -> u64 {
        self.total_docs
    }

    pub fn len(&self) -> usize {
        self.counts.len()
    }

    pub fn is_empty(&self) -> bool {
        self.counts.is_empty()
    }

    /// Entries sorted by token.
    pub fn entries(&self) -> Vec<(&WordToken, u64)> {
        let mut v: Vec<_> = self.counts.iter().map(|(t, &n)| (t, n)).collect();
        v.sort();
        v
    }

    /// Writes `#totaldocs\t<n>` followed by `<token>\t<df>` lines sorted by token.
    pub fn write<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        writeln!(out, "#totaldocs\t{}", self.total_docs)?;
        for (token, df) in self.entries() {
            writeln!(out, "{token}\t{df}")?;
        }
        Ok(())
    }

    pub fn read<R: BufRead>(reader: R) -> Result<Self, CorpusError> {
        let mut total = None;
        let mut rows: Vec<(String, u64)> = Vec::new();
        for (i, line) in reader.lines().enumerate() {
            let line = line?;
            let line = line.trim_end_matches('\r');
            if line.is_empty() {
                continue;
            }
            let malformed = |message: &str| CorpusError::Malformed {
                line: i + 1,
                message: message.to_string(),
            };
            let (key, value) = line.split_once('\t').ok_or_else(|| malformed("expected a tab"))?;
            let n: u64 = value.trim().parse().map_err(|_| malformed("count is not an integer"))?;
            if key == "#totaldocs" {
                total = Some(n);
            } else {
                rows.push((key.to_string(), n));
            }
        }
        let total = total.ok_or(CorpusError::Malformed {
            line: 1,
            message: "missing #totaldocs header".into(),
        })?;
        Self::from_counts(rows.iter().map(|(t, n)| (t.as_str(), *n)), total)
    }

    pub fn load(path: &Path) -> Result<Self, CorpusError> {
        Self::read(std::io::BufReader::new(std::fs::File::open(path)?))
    }

    pub fn save(&self, path: &Path) -> Result<(), CorpusError> {
        let mut out = std::io::BufWriter::new(std::fs::File::create(path)?);
        self.write(&mut out)?;
        out.flush()?;
        Ok(())
    }
}

/// Counts, for every token, the number of documents containing it.
pub fn ingest_corpus<D, T, S>(documents: D) -> Result<DocFreqTable, CorpusError>
where
    D: IntoIterator<Item = T>,
    T: IntoIterator<Item = S>,
    S: AsRef<str>,
{
    let mut counts: HashMap<String, u64> = HashMap::new();
    let mut total = 0u64;
    for doc in documents {
        total += 1;
        let seen: HashSet<String> = doc
            .into_iter()
            .filter_map(|t| crate::board::normalize_token(t.as_ref()).ok())
            .map(String::from)
            .collect();
        for t in seen {
            *counts.entry(t).or_default() += 1;
        }
    }
    if total == 0 {
        return Err(CorpusError::EmptyCorpus);
    }
    DocFreqTable::from_counts(counts.iter().map(|(t, &n)| (t.as_str(), n)), total)
}

/// Same result as [`ingest_corpus`] over tokenized texts, sharded across the
/// rayon pool and merged.
pub fn ingest_texts_parallel(texts: &[String]) -> Result<DocFreqTable, CorpusError> {
    if texts.is_empty() {
        return Err(CorpusError::EmptyCorpus);
    }
    let merged = texts
        .par_iter()
        .fold(HashMap::<String, u64>::new, |mut acc, text| {
            let seen: HashSet<String> = tokenize(text).collect();
            for t in seen {
                *acc.entry(t).or_default() += 1;
            }
            acc
        })
        .reduce(HashMap::new, |mut a, b| {
            for (t, n) in b {
                *a.entry(t).or_default() += n;
            }
            a
        });
    DocFreqTable::from_counts(merged.iter().map(|(t, &n)| (t.as_str(), n)), texts.len() as u64)
}

/// Reads documents from a directory (one per file, sorted by name) or from a
/// single file split on lines equal to `delimiter`.
pub fn read_documents(path: &Path, delimiter: &str) -> Result<Vec<String>, CorpusError> {
    if path.is_dir() {
        let mut files: Vec<_> = std::fs::read_dir(path)?
            .filter_map(Result::ok)
            .map(|e| e.path())
            .filter(|p| p.is_file())
            .collect();
        files.sort();
        files
            .into_iter()
            .map(|p| std::fs::read_to_string(p).map_err(CorpusError::from))
            .collect()
    } else {
        let text = std::fs::read_to_string(path)?;
        let mut docs = Vec::new();
        let mut current = String::new();
        for line in text.lines() {
            if line.trim_end() == delimiter {
                docs.push(std::mem::take(&mut current));
            } else {
                current.push_str(line);
                current.push('\n');
            }
        }
        if !current.trim().is_empty() {
            docs.push(current);
        }
        Ok(docs)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FreqParams {
    pub alpha: f64,
}

impl Default for FreqParams {
    fn default() -> Self {
        Self { alpha: DEFAULT_ALPHA }
    }
}

/// FREQ(w): `-1/df` while `1/df >= alpha`, otherwise `-1`. Tokens missing
/// from the table score `-1`.
pub fn freq_score(table: &DocFreqTable, word: &str, params: FreqParams) -> f64 {
    match table.df(word) {
        Some(df) => {
            let inv = 1.0 / df as f64;
            if inv >= params.alpha {
                -inv
            } else {
                -1.0
            }
        }
        None => -1.0,
    }
}
