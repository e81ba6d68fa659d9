use std::io::{BufRead, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::board::WordToken;

use super::{BabelNetError, CachedSubgraph, Edge, RelationGroup, Synset};

#[derive(Debug, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
enum Record {
    Synset {
        #[serde(flatten)]
        synset: Synset,
        #[serde(default)]
        origin: bool,
    },
    Edge {
        source: String,
        target: String,
        #[serde(rename = "relationName")]
        relation_name: String,
        #[serde(rename = "relationGroup")]
        relation_group: RelationGroup,
        #[serde(rename = "isAutomatic")]
        is_automatic: bool,
        level: usize,
    },
    Marker {
        word: WordToken,
        levels: usize,
        complete: bool,
    },
}

/// One line-delimited record file per board word under a directory.
#[derive(Debug, Clone)]
pub struct SubgraphCache {
    dir: PathBuf,
}

impl SubgraphCache {
    pub fn new(dir: impl Into<PathBuf>) -> Self {
        Self { dir: dir.into() }
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }

    pub fn path_for(&self, word: &WordToken) -> PathBuf {
        self.dir.join(format!("{}.jsonl", word.as_str()))
    }

    pub fn write_to<W: Write>(graph: &CachedSubgraph, mut out: W) -> std::io::Result<()> {
        let mut line = |rec: &Record| -> std::io::Result<()> {
            serde_json::to_writer(&mut out, rec)?;
            out.write_all(b"\n")
        };
        for (id, synset) in &graph.synsets {
            line(&Record::Synset {
                synset: synset.clone(),
                origin: graph.origins.contains(id),
            })?;
        }
        for ((_, level), edges) in &graph.edges {
            for e in edges {
                line(&Record::Edge {
                    source: e.source.clone(),
                    target: e.target.clone(),
                    relation_name: e.relation_name.clone(),
                    relation_group: e.relation_group,
                    is_automatic: e.is_automatic,
                    level: *level,
                })?;
            }
        }
        line(&Record::Marker {
            word: graph.word.clone(),
            levels: graph.levels_requested,
            complete: graph.complete,
        })
    }

    /// Reads a record file. A file without a trailing marker is treated as
    /// incomplete.
    pub fn read_from<R: BufRead>(reader: R, word: &WordToken, label: &str) -> Result<CachedSubgraph, BabelNetError> {
        let mut graph = CachedSubgraph::new(word.clone(), 0);
        let mut origins = std::collections::BTreeSet::new();
        let mut saw_marker = false;
        for (i, line) in reader.lines().enumerate() {
            let line = line?;
            if line.trim().is_empty() {
                continue;
            }
            let rec: Record = serde_json::from_str(&line).map_err(|e| BabelNetError::CorruptRecord {
                path: label.to_string(),
                line: i + 1,
                message: e.to_string(),
            })?;
            match rec {
                Record::Synset { synset, origin } => {
                    if origin {
                        origins.insert(synset.id.clone());
                    }
                    graph.synsets.insert(synset.id.clone(), synset);
                }
                Record::Edge {
                    source,
                    target,
                    relation_name,
                    relation_group,
                    is_automatic,
                    level,
                } => {
                    graph
                        .edges
                        .entry((source.clone(), level))
                        .or_default()
                        .push(Edge {
                            source,
                            target,
                            relation_name,
                            relation_group,
                            is_automatic,
                        });
                }
                Record::Marker { word, levels, complete } => {
                    graph.word = word;
                    graph.levels_requested = levels;
                    graph.complete = complete;
                    saw_marker = true;
                }
            }
        }
        if !saw_marker {
            graph.complete = false;
        }
        graph.origins = origins;
        Ok(graph)
    }

    /// Writes atomically: readers see the old record or the new one.
    pub fn store(&self, graph: &CachedSubgraph) -> Result<(), BabelNetError> {
        std::fs::create_dir_all(&self.dir)?;
        let target = self.path_for(&graph.word);
        let tmp = self.dir.join(format!(".{}.tmp", graph.word.as_str()));
        {
            let mut out = std::io::BufWriter::new(std::fs::File::create(&tmp)?);
            Self::write_to(graph, &mut out)?;
            out.flush()?;
        }
        std::fs::rename(&tmp, &target)?;
        Ok(())
    }

    pub fn load(&self, word: &WordToken) -> Result<Option<CachedSubgraph>, BabelNetError> {
        let path = self.path_for(word);
        match std::fs::File::open(&path) {
            Ok(f) => {
                let g = Self::read_from(std::io::BufReader::new(f), word, &path.display().to_string())?;
                Ok(Some(g))
            }
            Err(e) if e.kind() == std::io::ErrorKind::NotFound => Ok(None),
            Err(e) => Err(e.into()),
        }
    }

    /// Loads a complete record, or fails with `IncompleteCache`.
    pub fn load_complete(&self, word: &WordToken) -> Result<CachedSubgraph, BabelNetError> {
        match self.load(word)? {
            Some(g) if g.complete => Ok(g),
            _ => Err(BabelNetError::IncompleteCache(word.to_string())),
        }
    }
}
