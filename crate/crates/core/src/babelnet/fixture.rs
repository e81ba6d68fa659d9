use std::collections::BTreeMap;
use std::io::BufRead;
use std::path::Path;

use serde::Deserialize;

use crate::board::WordToken;

use super::{BabelNetError, Edge, GraphSource, RelationGroup, RelationMap, Synset};

#[derive(Debug, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
enum FixtureRecord {
    Synset(Synset),
    Edge {
        source: String,
        target: String,
        #[serde(rename = "relationName")]
        relation_name: String,
        #[serde(rename = "relationGroup", default)]
        relation_group: Option<RelationGroup>,
        #[serde(rename = "isAutomatic", default)]
        is_automatic: bool,
    },
    Lemma {
        word: String,
        synsets: Vec<String>,
    },
}

/// An in-memory synset graph loaded from a line-delimited file, used when no
/// API access is available.
///
/// Lines are JSON objects tagged by `kind`: `synset`, `edge` (relation group
/// optional, derived from the relation map) and `lemma` (`word` → synset ids).
#[derive(Debug, Clone, Default)]
pub struct FixtureGraph {
    synsets: BTreeMap<String, Synset>,
    edges: BTreeMap<String, Vec<Edge>>,
    lemmas: BTreeMap<WordToken, Vec<String>>,
}

impl FixtureGraph {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add_synset(&mut self, synset: Synset) -> &mut Self {
        self.synsets.insert(synset.id.clone(), synset);
        self
    }

    pub fn add_edge(&mut self, edge: Edge) -> &mut Self {
        self.edges.entry(edge.source.clone()).or_default().push(edge);
        self
    }

    pub fn add_lemma(&mut self, word: &str, synset_ids: &[&str]) -> &mut Self {
        let word = WordToken::new(word).expect("non-empty lemma");
        self.lemmas
            .entry(word)
            .or_default()
            .extend(synset_ids.iter().map(|s| s.to_string()));
        self
    }

    pub fn read<R: BufRead>(reader: R, relations: &RelationMap) -> Result<Self, BabelNetError> {
        let mut graph = FixtureGraph::new();
        for (i, line) in reader.lines().enumerate() {
            let line = line?;
            let trimmed = line.trim();
            if trimmed.is_empty() || trimmed.starts_with('#') {
                continue;
            }
            let rec: FixtureRecord = serde_json::from_str(trimmed).map_err(|e| BabelNetError::CorruptRecord {
                path: "fixture".into(),
                line: i + 1,
                message: e.to_string(),
            })?;
            match rec {
                FixtureRecord::Synset(s) => {
                    graph.add_synset(s);
                }
                FixtureRecord::Edge {
                    source,
                    target,
                    relation_name,
                    relation_group,
                    is_automatic,
                } => {
                    let group = relation_group.unwrap_or_else(|| relations.group(&relation_name));
                    graph.add_edge(Edge {
                        source,
                        target,
                        relation_name,
                        relation_group: group,
                        is_automatic,
                    });
                }
                FixtureRecord::Lemma { word, synsets } => {
                    let ids: Vec<&str> = synsets.iter().map(String::as_str).collect();
                    graph.add_lemma(&word, &ids);
                }
            }
        }
        Ok(graph)
    }

    pub fn load(path: &Path, relations: &RelationMap) -> Result<Self, BabelNetError> {
        Self::read(std::io::BufReader::new(std::fs::File::open(path)?), relations)
    }
}

impl GraphSource for FixtureGraph {
    fn synsets_for(&self, word: &WordToken) -> Result<Vec<Synset>, BabelNetError> {
        let Some(ids) = self.lemmas.get(word) else {
            return Ok(Vec::new());
        };
        ids.iter().map(|id| self.synset(id)).collect()
    }

    fn synset(&self, id: &str) -> Result<Synset, BabelNetError> {
        self.synsets
            .get(id)
            .cloned()
            .ok_or_else(|| BabelNetError::UnknownSynset(id.to_string()))
    }

    fn outgoing_edges(&self, id: &str) -> Result<Vec<Edge>, BabelNetError> {
        Ok(self.edges.get(id).cloned().unwrap_or_default())
    }
}
