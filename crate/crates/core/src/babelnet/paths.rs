use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::board::WordToken;

use super::labels::{extract_single_word_labels, LabelMode, LabelWeights};
use super::{BabelNetError, CachedSubgraph, Edge, RelationGroup, Synset};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GraphPath {
    pub origin: WordToken,
    pub edges: Vec<Edge>,
    pub terminal: Synset,
}

impl GraphPath {
    pub fn len(&self) -> usize {
        self.edges.len()
    }

    pub fn is_empty(&self) -> bool {
        self.edges.is_empty()
    }
}

/// A path is usable when no edge is automatic, every edge after the first is
/// a hypernym edge, those later edges all share one relation name, and the
/// path is at most `max_len` edges long. The first edge may be any relation.
pub fn validate_path(edges: &[Edge], max_len: usize) -> bool {
    if edges.len() > max_len || edges.iter().any(|e| e.is_automatic) {
        return false;
    }
    let Some(rest) = edges.get(1..) else {
        return true;
    };
    rest.iter().all(|e| e.relation_group == RelationGroup::Hypernym)
        && rest.windows(2).all(|w| w[0].relation_name == w[1].relation_name)
}

/// `1 / (weight * h + 1)`.
pub fn path_similarity(h: usize, label_weight: f64) -> f64 {
    1.0 / (label_weight * h as f64 + 1.0)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GraphNeighbor {
    pub token: WordToken,
    pub path_length: usize,
    pub label_weight: f64,
    pub provenance: GraphPath,
}

impl GraphNeighbor {
    pub fn similarity(&self) -> f64 {
        path_similarity(self.path_length, self.label_weight)
    }
}

/// Shortest valid path to each reachable synset.
fn shortest_paths(graph: &CachedSubgraph, max_len: usize) -> BTreeMap<String, Vec<Edge>> {
    let mut best: BTreeMap<String, Vec<Edge>> = BTreeMap::new();
    let mut stack: Vec<(String, Vec<Edge>)> = Vec::new();
    for origin in &graph.origins {
        stack.push((origin.clone(), Vec::new()));
    }
    while let Some((synset, path)) = stack.pop() {
        match best.get(&synset) {
            Some(p) if p.len() <= path.len() => {}
            _ => {
                best.insert(synset.clone(), path.clone());
            }
        }
        if path.len() == max_len {
            continue;
        }
        for edge in graph.edges_at(&synset, path.len() + 1).iter().rev() {
            let revisits = edge.target == synset
                || graph.origins.contains(&edge.target)
                || path.iter().any(|e| e.source == edge.target);
            if revisits {
                continue;
            }
            let mut next = path.clone();
            next.push(edge.clone());
            if validate_path(&next, max_len) {
                stack.push((edge.target.clone(), next));
            }
        }
    }
    best
}

/// Every single-word label on every synset reachable from `graph.word` by a
/// valid path, one entry per (synset, label). Unknown synsets reached by an
/// edge but without a record contribute nothing.
pub fn graph_neighbors(
    graph: &CachedSubgraph,
    max_len: usize,
    weights: LabelWeights,
    mode: LabelMode,
) -> Result<Vec<GraphNeighbor>, BabelNetError> {
    if !graph.complete {
        return Err(BabelNetError::IncompleteCache(graph.word.to_string()));
    }
    let mut out = Vec::new();
    for (id, edges) in shortest_paths(graph, max_len) {
        let Some(synset) = graph.synsets.get(&id) else {
            continue;
        };
        let labels = extract_single_word_labels(&synset.main_sense, &synset.other_senses, weights, mode);
        for (token, weight) in labels {
            out.push(GraphNeighbor {
                token,
                path_length: edges.len(),
                label_weight: weight,
                provenance: GraphPath {
                    origin: graph.word.clone(),
                    edges: edges.clone(),
                    terminal: synset.clone(),
                },
            });
        }
    }
    Ok(out)
}

/// One representative neighbor per token: shortest path first, then the
/// lightest label weight, then the smallest synset id.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GraphNeighborhood {
    pub word: WordToken,
    pub neighbors: BTreeMap<WordToken, GraphNeighbor>,
}

impl GraphNeighborhood {
    pub fn from_neighbors(word: WordToken, list: Vec<GraphNeighbor>) -> Self {
        let mut neighbors: BTreeMap<WordToken, GraphNeighbor> = BTreeMap::new();
        for n in list {
            let better = match neighbors.get(&n.token) {
                None => true,
                Some(cur) => {
                    (n.path_length, n.label_weight, &n.provenance.terminal.id)
                        .partial_cmp(&(cur.path_length, cur.label_weight, &cur.provenance.terminal.id))
                        == Some(std::cmp::Ordering::Less)
                }
            };
            if better {
                neighbors.insert(n.token.clone(), n);
            }
        }
        Self { word, neighbors }
    }

    pub fn build(
        graph: &CachedSubgraph,
        max_len: usize,
        weights: LabelWeights,
        mode: LabelMode,
    ) -> Result<Self, BabelNetError> {
        let list = graph_neighbors(graph, max_len, weights, mode)?;
        Ok(Self::from_neighbors(graph.word.clone(), list))
    }

    /// Path similarity to `token`; zero when no valid path reaches it.
    pub fn similarity(&self, token: &str) -> f64 {
        self.neighbors.get(token).map_or(0.0, GraphNeighbor::similarity)
    }

    pub fn get(&self, token: &str) -> Option<&GraphNeighbor> {
        self.neighbors.get(token)
    }

    pub fn tokens(&self) -> impl Iterator<Item = &WordToken> {
        self.neighbors.keys()
    }
}
