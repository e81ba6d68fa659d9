use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use crate::board::{Board, WordToken};

use super::{BabelNetError, Edge, Synset};

/// Read access to a synset graph: the live API or an offline fixture.
pub trait GraphSource {
    /// Synsets whose lemmas include `word`. An unknown word yields an empty list.
    fn synsets_for(&self, word: &WordToken) -> Result<Vec<Synset>, BabelNetError>;
    fn synset(&self, id: &str) -> Result<Synset, BabelNetError>;
    fn outgoing_edges(&self, id: &str) -> Result<Vec<Edge>, BabelNetError>;
}

pub fn fetch_synsets(word: &WordToken, source: &dyn GraphSource) -> Result<Vec<Synset>, BabelNetError> {
    source.synsets_for(word)
}

/// Edges retrieved around one board word, keyed by `(synset id, level)`.
///
/// Level 1 holds the outgoing edges of the word's own synsets; level `l + 1`
/// holds the edges of synsets reached through an expandable edge at level `l`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CachedSubgraph {
    pub word: WordToken,
    pub levels_requested: usize,
    pub origins: BTreeSet<String>,
    pub synsets: BTreeMap<String, Synset>,
    pub edges: BTreeMap<(String, usize), Vec<Edge>>,
    pub complete: bool,
}

impl CachedSubgraph {
    pub fn new(word: WordToken, levels: usize) -> Self {
        Self {
            word,
            levels_requested: levels,
            origins: BTreeSet::new(),
            synsets: BTreeMap::new(),
            edges: BTreeMap::new(),
            complete: false,
        }
    }

    pub fn edges_at(&self, synset: &str, level: usize) -> &[Edge] {
        self.edges
            .get(&(synset.to_string(), level))
            .map(Vec::as_slice)
            .unwrap_or(&[])
    }

    pub fn max_level(&self) -> usize {
        self.edges.keys().map(|(_, l)| *l).max().unwrap_or(0)
    }

    pub fn edge_count(&self) -> usize {
        self.edges.values().map(Vec::len).sum()
    }
}

/// Walks `levels` hops out from `synsets`. On a source error the partial
/// subgraph (marked incomplete) is returned alongside the error.
#[allow(clippy::result_large_err)]
pub fn query_word(
    source: &dyn GraphSource,
    word: &WordToken,
    synsets: &[Synset],
    levels: usize,
) -> Result<CachedSubgraph, (CachedSubgraph, BabelNetError)> {
    let mut graph = CachedSubgraph::new(word.clone(), levels);
    for s in synsets {
        graph.origins.insert(s.id.clone());
        graph.synsets.insert(s.id.clone(), s.clone());
    }
    let mut frontier: BTreeSet<String> = graph.origins.iter().cloned().collect();
    // Targets that a valid path can end on; their labels are needed later.
    let mut wanted: BTreeSet<String> = BTreeSet::new();

    for level in 1..=levels {
        let mut next = BTreeSet::new();
        for synset in &frontier {
            let edges = match source.outgoing_edges(synset) {
                Ok(e) => e,
                Err(err) => return Err((graph, err)),
            };
            for edge in &edges {
                if edge.is_expandable() {
                    next.insert(edge.target.clone());
                }
                if !edge.is_automatic && (level == 1 || edge.is_expandable()) {
                    wanted.insert(edge.target.clone());
                }
            }
            if !edges.is_empty() {
                graph.edges.insert((synset.clone(), level), edges);
            }
        }
        frontier = next;
    }

    for id in wanted {
        if graph.synsets.contains_key(&id) {
            continue;
        }
        match source.synset(&id) {
            Ok(s) => {
                graph.synsets.insert(id, s);
            }
            Err(BabelNetError::UnknownSynset(_)) => {}
            Err(err) => return Err((graph, err)),
        }
    }
    graph.complete = true;
    Ok(graph)
}

/// Builds the subgraph of every board word from its looked-up synsets.
pub fn query_edges(
    source: &dyn GraphSource,
    lemma_synsets: &BTreeMap<WordToken, Vec<Synset>>,
    board: &Board,
    levels: usize,
) -> Result<BTreeMap<WordToken, CachedSubgraph>, BabelNetError> {
    let mut out = BTreeMap::new();
    for word in board.words() {
        let synsets = lemma_synsets.get(&word).map(Vec::as_slice).unwrap_or(&[]);
        let graph = query_word(source, &word, synsets, levels).map_err(|(_, e)| e)?;
        out.insert(word, graph);
    }
    Ok(out)
}
