//! Word-vector stores, cosine relatedness and neighbor indexes.

mod contexts;
mod index;
mod store;

use thiserror::Error;

pub use contexts::{average_contexts, read_occurrences, ContextOccurrence};
pub use index::{
    top_neighbors, CandidateFilter, Hnsw, HnswParams, IndexMode, Neighbor, NeighborIndex,
    NeighborList,
};
pub use store::{load_embeddings, load_embeddings_file, EmbeddingStore};

#[derive(Debug, Error)]
pub enum EmbeddingError {
    #[error("vector for `{token}` has {found} components, expected {expected}")]
    DimensionMismatch {
        token: String,
        expected: usize,
        found: usize,
    },
    #[error("embedding store is empty")]
    EmptyStore,
    #[error("token `{0}` is not in the vocabulary")]
    UnknownToken(String),
    #[error("vector for `{0}` has zero norm")]
    ZeroVector(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}
