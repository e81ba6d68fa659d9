use std::collections::HashMap;
use std::io::BufRead;

use crate::board::WordToken;
use crate::numeric::CompensatedSum;

use super::store::{parse_vector_line, StoreBuilder, VectorLine};
use super::{EmbeddingError, EmbeddingStore};

/// One occurrence's contextual vector.
#[derive(Debug, Clone, PartialEq)]
pub struct ContextOccurrence {
    pub token: WordToken,
    pub vector: Vec<f32>,
}

struct Running {
    sums: Vec<CompensatedSum>,
    count: u64,
}

/// Averages per-occurrence vectors into one vector per token. Output order
/// follows each token's first occurrence.
pub fn average_contexts<I>(name: &str, occurrences: I) -> Result<EmbeddingStore, EmbeddingError>
where
    I: IntoIterator<Item = Result<ContextOccurrence, EmbeddingError>>,
{
    let mut dim: Option<usize> = None;
    let mut order: Vec<WordToken> = Vec::new();
    let mut acc: HashMap<WordToken, Running> = HashMap::new();
    for occ in occurrences {
        let occ = occ?;
        let d = *dim.get_or_insert(occ.vector.len());
        if occ.vector.len() != d {
            return Err(EmbeddingError::DimensionMismatch {
                token: occ.token.to_string(),
                expected: d,
                found: occ.vector.len(),
            });
        }
        let entry = acc.entry(occ.token.clone()).or_insert_with(|| {
            order.push(occ.token.clone());
            Running {
                sums: vec![CompensatedSum::new(); d],
                count: 0,
            }
        });
        for (s, &x) in entry.sums.iter_mut().zip(&occ.vector) {
            s.add(f64::from(x));
        }
        entry.count += 1;
    }
    let mut builder = StoreBuilder::new(name.to_string());
    for token in order {
        let run = &acc[&token];
        let n = run.count as f64;
        let mean: Vec<f32> = run.sums.iter().map(|s| (s.value() / n) as f32).collect();
        builder.push(token, &mean)?;
    }
    builder.finish()
}

/// Streams occurrences from the context file format (the vector text format
/// with one line per occurrence).
pub fn read_occurrences<R: BufRead>(
    reader: R,
) -> impl Iterator<Item = Result<ContextOccurrence, EmbeddingError>> {
    reader
        .lines()
        .enumerate()
        .filter_map(|(lineno, line)| match line {
            Err(e) => Some(Err(EmbeddingError::Io(e))),
            Ok(line) => match parse_vector_line(&line, lineno == 0) {
                VectorLine::Row(token, vector) => Some(Ok(ContextOccurrence { token, vector })),
                VectorLine::Header { .. } | VectorLine::Skip => None,
            },
        })
}
