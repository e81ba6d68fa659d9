use std::collections::HashMap;
use std::io::BufRead;

use crate::board::{normalize_token, WordToken};
use crate::corpusfreq::DocFreqTable;
use crate::numeric;

use super::EmbeddingError;

/// Immutable token -> vector table.
///
/// Vectors are stored contiguously as `f32`; norms are precomputed in `f64`.
#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddingStore {
    name: String,
    dim: usize,
    tokens: Vec<WordToken>,
    lookup: HashMap<WordToken, usize>,
    data: Vec<f32>,
    norms: Vec<f64>,
}

impl EmbeddingStore {
    /// Builds a store from `(token, vector)` rows. The first occurrence of a
    /// token wins.
    pub fn from_rows<I>(name: impl Into<String>, rows: I) -> Result<Self, EmbeddingError>
    where
        I: IntoIterator<Item = (WordToken, Vec<f32>)>,
    {
        let mut builder = StoreBuilder::new(name.into());
        for (token, vector) in rows {
            builder.push(token, &vector)?;
        }
        builder.finish()
    }

    /// Writes `token v1 v2 ...` lines, readable by `load_embeddings`.
    pub fn write_text<W: std::io::Write>(&self, mut out: W) -> std::io::Result<()> {
        for (i, token) in self.tokens.iter().enumerate() {
            write!(out, "{}", token.as_str())?;
            for v in self.row(i) {
                write!(out, " {v}")?;
            }
            writeln!(out)?;
        }
        Ok(())
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }

    pub fn contains(&self, token: &str) -> bool {
        self.lookup.contains_key(token)
    }

    /// Tokens in file order.
    pub fn tokens(&self) -> &[WordToken] {
        &self.tokens
    }

    pub fn index_of(&self, token: &str) -> Option<usize> {
        self.lookup.get(token).copied()
    }

    pub fn vector(&self, token: &str) -> Option<&[f32]> {
        self.index_of(token).map(|i| self.row(i))
    }

    pub(crate) fn row(&self, i: usize) -> &[f32] {
        &self.data[i * self.dim..(i + 1) * self.dim]
    }

    pub(crate) fn norm(&self, i: usize) -> f64 {
        self.norms[i]
    }

    pub(crate) fn cosine_at(&self, i: usize, j: usize) -> f64 {
        let c = numeric::dot(self.row(i), self.row(j)) / (self.norms[i] * self.norms[j]);
        c.clamp(-1.0, 1.0)
    }

    /// Cosine similarity, i.e. one minus the cosine distance.
    pub fn similarity(&self, w1: &str, w2: &str) -> Result<f64, EmbeddingError> {
        let i = self
            .index_of(w1)
            .ok_or_else(|| EmbeddingError::UnknownToken(w1.to_string()))?;
        let j = self
            .index_of(w2)
            .ok_or_else(|| EmbeddingError::UnknownToken(w2.to_string()))?;
        if i == j {
            return Ok(1.0);
        }
        Ok(self.cosine_at(i, j))
    }

    /// Renames the store, e.g. when one file backs several representations.
    pub fn renamed(mut self, name: impl Into<String>) -> Self {
        self.name = name.into();
        self
    }

    /// Restricts the store to the `k` tokens with the highest document
    /// frequency among those present in both the store and `df`.
    pub fn filter_top_common(&self, df: &DocFreqTable, k: usize) -> Result<Self, EmbeddingError> {
        let mut ranked: Vec<(u64, &WordToken)> = self
            .tokens
            .iter()
            .filter_map(|t| df.df(t.as_str()).map(|n| (n, t)))
            .collect();
        if ranked.is_empty() || k == 0 {
            return Err(EmbeddingError::EmptyStore);
        }
        ranked.sort_by(|a, b| b.0.cmp(&a.0).then_with(|| a.1.cmp(b.1)));
        ranked.truncate(k);
        let keep: std::collections::HashSet<&WordToken> = ranked.into_iter().map(|(_, t)| t).collect();

        let mut builder = StoreBuilder::new(format!("{}-top{}", self.name, k));
        for (i, token) in self.tokens.iter().enumerate() {
            if keep.contains(token) {
                builder.push(token.clone(), self.row(i))?;
            }
        }
        builder.finish()
    }
}

pub(crate) struct StoreBuilder {
    name: String,
    dim: Option<usize>,
    tokens: Vec<WordToken>,
    lookup: HashMap<WordToken, usize>,
    data: Vec<f32>,
    norms: Vec<f64>,
}

impl StoreBuilder {
    pub(crate) fn new(name: String) -> Self {
        Self {
            name,
            dim: None,
            tokens: Vec::new(),
            lookup: HashMap::new(),
            data: Vec::new(),
            norms: Vec::new(),
        }
    }

    pub(crate) fn with_dim(mut self, dim: usize) -> Self {
        self.dim = Some(dim);
        self
    }

    /// Returns false if the token was already present (and the row ignored).
    pub(crate) fn push(&mut self, token: WordToken, vector: &[f32]) -> Result<bool, EmbeddingError> {
        let dim = *self.dim.get_or_insert(vector.len());
        if vector.len() != dim || dim == 0 {
            return Err(EmbeddingError::DimensionMismatch {
                token: token.to_string(),
                expected: dim,
                found: vector.len(),
            });
        }
        if self.lookup.contains_key(&token) {
            return Ok(false);
        }
        let norm = numeric::norm(vector);
        if norm == 0.0 || !norm.is_finite() {
            return Err(EmbeddingError::ZeroVector(token.to_string()));
        }
        self.lookup.insert(token.clone(), self.tokens.len());
        self.tokens.push(token);
        self.data.extend_from_slice(vector);
        self.norms.push(norm);
        Ok(true)
    }

    pub(crate) fn finish(self) -> Result<EmbeddingStore, EmbeddingError> {
        if self.tokens.is_empty() {
            return Err(EmbeddingError::EmptyStore);
        }
        Ok(EmbeddingStore {
            name: self.name,
            dim: self.dim.unwrap_or(0),
            tokens: self.tokens,
            lookup: self.lookup,
            data: self.data,
            norms: self.norms,
        })
    }
}

/// One parsed line of the vector text format.
pub(crate) enum VectorLine {
    Header { dim: usize },
    Row(WordToken, Vec<f32>),
    Skip,
}

pub(crate) fn parse_vector_line(line: &str, first: bool) -> VectorLine {
    let line = line.trim_end_matches(['\r', '\n']);
    let mut fields = line.split(' ').filter(|f| !f.is_empty());
    let Some(head) = fields.next() else {
        return VectorLine::Skip;
    };
    let rest: Vec<&str> = fields.collect();
    if first && rest.len() == 1 {
        if let (Ok(_count), Ok(dim)) = (head.parse::<usize>(), rest[0].parse::<usize>()) {
            return VectorLine::Header { dim };
        }
    }
    let Ok(token) = normalize_token(head) else {
        return VectorLine::Skip;
    };
    match rest.iter().map(|f| f.parse::<f32>()).collect::<Result<Vec<_>, _>>() {
        Ok(v) if !v.is_empty() => VectorLine::Row(token, v),
        _ => VectorLine::Skip,
    }
}

/// Reads the vector text format: optional `<count> <dim>` header, then
/// `<token> <v1> ... <vd>` lines. Lines whose fields are not numbers are
/// skipped; a numeric line of the wrong length is an error.
pub fn load_embeddings<R: BufRead>(reader: R, name: &str) -> Result<EmbeddingStore, EmbeddingError> {
    let mut builder = StoreBuilder::new(name.to_string());
    let mut skipped = 0usize;
    for (lineno, line) in reader.lines().enumerate() {
        let line = line?;
        match parse_vector_line(&line, lineno == 0) {
            VectorLine::Header { dim } => builder = builder.with_dim(dim),
            VectorLine::Row(token, v) => {
                builder.push(token, &v)?;
            }
            VectorLine::Skip => skipped += 1,
        }
    }
    if skipped > 0 {
        log::warn!("{name}: skipped {skipped} unparseable lines");
    }
    builder.finish()
}

pub fn load_embeddings_file(path: &std::path::Path, name: &str) -> Result<EmbeddingStore, EmbeddingError> {
    let file = std::fs::File::open(path)?;
    load_embeddings(std::io::BufReader::new(file), name)
}
