//! Knowledge-graph relatedness over BabelNet synset subgraphs.
//!
//! The pipeline is: look up the synsets of every board word, pull their
//! outgoing edges level by level (expanding only curated hypernym edges past
//! the first level), cache the result per word, then enumerate constrained
//! paths from each word and turn the synsets they reach into weighted
//! single-word labels.

mod cache;
mod client;
mod fixture;
mod labels;
mod paths;
mod subgraph;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use cache::SubgraphCache;
pub use client::{
    BabelNetClient, ClientConfig, HttpResponse, HttpTransport, RateLimiter, ReqwestTransport,
};
pub use fixture::FixtureGraph;
pub use labels::{extract_single_word_labels, LabelMode, LabelWeights, WeightedLabel};
pub use paths::{
    graph_neighbors, path_similarity, validate_path, GraphNeighbor, GraphNeighborhood, GraphPath,
};
pub use subgraph::{fetch_synsets, query_edges, query_word, CachedSubgraph, GraphSource};

pub const DEFAULT_LEVELS: usize = 3;

#[derive(Debug, Error)]
pub enum BabelNetError {
    #[error("BabelNet daily request budget exhausted")]
    ApiQuotaExceeded,
    #[error("network failure: {0}")]
    NetworkFailure(String),
    #[error("no BabelNet API key configured (set BABELNET_KEY)")]
    MissingKey,
    #[error("unexpected BabelNet response: {0}")]
    BadResponse(String),
    #[error("no cached subgraph for `{0}`")]
    IncompleteCache(String),
    #[error("synset `{0}` not found")]
    UnknownSynset(String),
    #[error("cache record {path}:{line}: {message}")]
    CorruptRecord {
        path: String,
        line: usize,
        message: String,
    },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct Synset {
    pub id: String,
    pub main_sense: String,
    #[serde(default)]
    pub other_senses: Vec<String>,
    #[serde(default)]
    pub pos: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub definition: Option<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum RelationGroup {
    Hypernym,
    Other,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct Edge {
    pub source: String,
    pub target: String,
    pub relation_name: String,
    pub relation_group: RelationGroup,
    pub is_automatic: bool,
}

impl Edge {
    /// Edges a traversal may follow past the first hop.
    pub fn is_expandable(&self) -> bool {
        !self.is_automatic && self.relation_group == RelationGroup::Hypernym
    }
}

/// Maps relation names onto relation groups. Names not listed are `OTHER`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RelationMap {
    pub hypernym: Vec<String>,
}

impl Default for RelationMap {
    fn default() -> Self {
        Self {
            hypernym: vec!["is-a".into(), "subclass-of".into()],
        }
    }
}

impl RelationMap {
    pub fn group(&self, relation_name: &str) -> RelationGroup {
        if self
            .hypernym
            .iter()
            .any(|h| h.eq_ignore_ascii_case(relation_name))
        {
            RelationGroup::Hypernym
        } else {
            RelationGroup::Other
        }
    }
}
