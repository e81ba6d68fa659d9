//! Top-T neighbor queries: exact brute force and an HNSW graph.

use std::cmp::{Ordering, Reverse};
use std::collections::{BinaryHeap, HashSet};

use rand::{RngExt, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::board::WordToken;

use super::{EmbeddingError, EmbeddingStore};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Neighbor {
    pub token: WordToken,
    pub similarity: f64,
}

/// Neighbors of `origin`, sorted by similarity descending then token ascending.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NeighborList {
    pub origin: WordToken,
    pub neighbors: Vec<Neighbor>,
}

impl NeighborList {
    pub fn len(&self) -> usize {
        self.neighbors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.neighbors.is_empty()
    }

    pub fn tokens(&self) -> impl Iterator<Item = &WordToken> {
        self.neighbors.iter().map(|n| &n.token)
    }
}

fn rank(a: &Neighbor, b: &Neighbor) -> Ordering {
    b.similarity
        .total_cmp(&a.similarity)
        .then_with(|| a.token.cmp(&b.token))
}

pub type CandidateFilter<'a> = dyn Fn(&WordToken) -> bool + Sync + 'a;

/// Exact top-`t` by scanning the whole vocabulary.
pub fn top_neighbors(
    store: &EmbeddingStore,
    word: &str,
    t: usize,
    filter: &CandidateFilter<'_>,
) -> Result<NeighborList, EmbeddingError> {
    let origin = store
        .index_of(word)
        .ok_or_else(|| EmbeddingError::UnknownToken(word.to_string()))?;
    let mut all: Vec<Neighbor> = (0..store.len())
        .into_par_iter()
        .filter(|&j| j != origin && filter(&store.tokens()[j]))
        .map(|j| Neighbor {
            token: store.tokens()[j].clone(),
            similarity: store.cosine_at(origin, j),
        })
        .collect();
    let t = t.min(all.len());
    if t > 0 && t < all.len() {
        all.select_nth_unstable_by(t - 1, rank);
        all.truncate(t);
    }
    all.sort_by(rank);
    Ok(NeighborList {
        origin: store.tokens()[origin].clone(),
        neighbors: all,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum IndexMode {
    #[default]
    Exact,
    Hnsw,
}

impl std::str::FromStr for IndexMode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "exact" => Ok(IndexMode::Exact),
            "hnsw" | "approx" => Ok(IndexMode::Hnsw),
            other => Err(format!("unknown index mode `{other}`")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct HnswParams {
    /// Links per node on upper layers; layer 0 keeps twice as many.
    pub m: usize,
    pub ef_construction: usize,
    pub ef_search: usize,
    pub seed: u64,
}

impl Default for HnswParams {
    fn default() -> Self {
        Self {
            m: 16,
            ef_construction: 200,
            ef_search: 200,
            seed: 0x5eed,
        }
    }
}

/// Answers top-T queries over one store.
#[derive(Debug, Clone)]
pub enum NeighborIndex {
    Exact,
    Hnsw(Hnsw),
}

impl NeighborIndex {
    pub fn build(store: &EmbeddingStore, mode: IndexMode, params: HnswParams) -> Self {
        match mode {
            IndexMode::Exact => NeighborIndex::Exact,
            IndexMode::Hnsw if store.len() <= 3 => NeighborIndex::Exact,
            IndexMode::Hnsw => NeighborIndex::Hnsw(Hnsw::build(store, params)),
        }
    }

    pub fn mode(&self) -> IndexMode {
        match self {
            NeighborIndex::Exact => IndexMode::Exact,
            NeighborIndex::Hnsw(_) => IndexMode::Hnsw,
        }
    }

    pub fn top_neighbors(
        &self,
        store: &EmbeddingStore,
        word: &str,
        t: usize,
        filter: &CandidateFilter<'_>,
    ) -> Result<NeighborList, EmbeddingError> {
        match self {
            NeighborIndex::Exact => top_neighbors(store, word, t, filter),
            NeighborIndex::Hnsw(h) => h.top_neighbors(store, word, t, filter),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
struct Scored {
    dist: f32,
    id: u32,
}

impl Eq for Scored {}

impl Ord for Scored {
    fn cmp(&self, other: &Self) -> Ordering {
        self.dist.total_cmp(&other.dist).then(self.id.cmp(&other.id))
    }
}

impl PartialOrd for Scored {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// Hierarchical navigable small-world graph over unit-normalized vectors.
/// Construction is single-threaded and seeded, so the graph is reproducible.
#[derive(Debug, Clone)]
pub struct Hnsw {
    params: HnswParams,
    dim: usize,
    unit: Vec<f32>,
    /// `links[node][layer]`
    links: Vec<Vec<Vec<u32>>>,
    entry: u32,
    top_layer: usize,
}

impl Hnsw {
    pub fn build(store: &EmbeddingStore, params: HnswParams) -> Self {
        let n = store.len();
        let dim = store.dim();
        let mut unit = Vec::with_capacity(n * dim);
        for i in 0..n {
            let inv = 1.0 / store.norm(i);
            unit.extend(store.row(i).iter().map(|&x| (f64::from(x) * inv) as f32));
        }
        let m = params.m.max(2);
        let level_mult = 1.0 / (m as f64).ln();
        let mut rng = ChaCha8Rng::seed_from_u64(params.seed);

        let mut index = Hnsw {
            params: HnswParams { m, ..params },
            dim,
            unit,
            links: Vec::with_capacity(n),
            entry: 0,
            top_layer: 0,
        };
        for node in 0..n {
            let u: f64 = rng.random_range(f64::EPSILON..1.0);
            let level = (-u.ln() * level_mult).floor() as usize;
            index.insert(node as u32, level);
        }
        index
    }

    fn vec(&self, id: u32) -> &[f32] {
        let i = id as usize * self.dim;
        &self.unit[i..i + self.dim]
    }

    fn dist_to(&self, query: &[f32], id: u32) -> f32 {
        let v = self.vec(id);
        1.0 - query.iter().zip(v).map(|(a, b)| a * b).sum::<f32>()
    }

    fn max_links(&self, layer: usize) -> usize {
        if layer == 0 {
            self.params.m * 2
        } else {
            self.params.m
        }
    }

    fn insert(&mut self, id: u32, level: usize) {
        self.links.push(vec![Vec::new(); level + 1]);
        if id == 0 {
            self.entry = 0;
            self.top_layer = level;
            return;
        }
        let query = self.vec(id).to_vec();
        let mut ep = vec![Scored {
            dist: self.dist_to(&query, self.entry),
            id: self.entry,
        }];
        for layer in (level + 1..=self.top_layer).rev() {
            ep = self.search_layer(&query, &ep, 1, layer);
        }
        for layer in (0..=level.min(self.top_layer)).rev() {
            let found = self.search_layer(&query, &ep, self.params.ef_construction, layer);
            let cap = self.max_links(layer);
            let chosen: Vec<u32> = found.iter().take(self.params.m).map(|s| s.id).collect();
            self.links[id as usize][layer] = chosen.clone();
            for nb in chosen {
                self.links[nb as usize][layer].push(id);
                if self.links[nb as usize][layer].len() > cap {
                    self.prune(nb, layer, cap);
                }
            }
            ep = found;
        }
        if level > self.top_layer {
            self.top_layer = level;
            self.entry = id;
        }
    }

    fn prune(&mut self, node: u32, layer: usize, cap: usize) {
        let base = self.vec(node).to_vec();
        let mut scored: Vec<Scored> = self.links[node as usize][layer]
            .iter()
            .map(|&id| Scored {
                dist: self.dist_to(&base, id),
                id,
            })
            .collect();
        scored.sort();
        scored.truncate(cap);
        self.links[node as usize][layer] = scored.into_iter().map(|s| s.id).collect();
    }

    /// Best-first search on one layer; returns up to `ef` nodes, nearest first.
    fn search_layer(&self, query: &[f32], entry: &[Scored], ef: usize, layer: usize) -> Vec<Scored> {
        let mut visited: HashSet<u32> = entry.iter().map(|s| s.id).collect();
        let mut frontier: BinaryHeap<Reverse<Scored>> = entry.iter().copied().map(Reverse).collect();
        let mut best: BinaryHeap<Scored> = entry.iter().copied().collect();
        while best.len() > ef {
            best.pop();
        }
        while let Some(Reverse(current)) = frontier.pop() {
            if let Some(worst) = best.peek() {
                if best.len() >= ef && current.dist > worst.dist {
                    break;
                }
            }
            for &nb in &self.links[current.id as usize][layer] {
                if !visited.insert(nb) {
                    continue;
                }
                let cand = Scored {
                    dist: self.dist_to(query, nb),
                    id: nb,
                };
                if best.len() < ef || cand < *best.peek().unwrap() {
                    frontier.push(Reverse(cand));
                    best.push(cand);
                    if best.len() > ef {
                        best.pop();
                    }
                }
            }
        }
        best.into_sorted_vec()
    }

    /// Approximate nearest ids to `query`, nearest first.
    fn search(&self, query: &[f32], ef: usize) -> Vec<Scored> {
        let mut ep = vec![Scored {
            dist: self.dist_to(query, self.entry),
            id: self.entry,
        }];
        for layer in (1..=self.top_layer).rev() {
            ep = self.search_layer(query, &ep, 1, layer);
        }
        self.search_layer(query, &ep, ef, 0)
    }

    pub fn top_neighbors(
        &self,
        store: &EmbeddingStore,
        word: &str,
        t: usize,
        filter: &CandidateFilter<'_>,
    ) -> Result<NeighborList, EmbeddingError> {
        let origin = store
            .index_of(word)
            .ok_or_else(|| EmbeddingError::UnknownToken(word.to_string()))?;
        let query = self.vec(origin as u32).to_vec();
        let n = store.len();
        let mut ef = self.params.ef_search.max(t + 1);
        loop {
            let hits = self.search(&query, ef.min(n));
            let mut out: Vec<Neighbor> = hits
                .iter()
                .map(|s| s.id as usize)
                .filter(|&j| j != origin && filter(&store.tokens()[j]))
                .map(|j| Neighbor {
                    token: store.tokens()[j].clone(),
                    similarity: store.cosine_at(origin, j),
                })
                .collect();
            if out.len() >= t || ef >= n {
                out.sort_by(rank);
                out.truncate(t);
                return Ok(NeighborList {
                    origin: store.tokens()[origin].clone(),
                    neighbors: out,
                });
            }
            ef *= 2;
        }
    }
}
