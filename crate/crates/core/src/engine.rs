//! Loaded resources plus one-call clue generation per configuration.

use std::collections::BTreeMap;
use std::sync::Arc;

use thiserror::Error;

use crate::babelnet::{BabelNetError, FixtureGraph, RelationMap, SubgraphCache};
use crate::board::{generate_board, Board, BoardError, ClueResult, WordToken};
use crate::cluegiver::{choose_clue, ClueError, ClueRequest, DetectResources, GraphRelatedness, RelatednessSource};
use crate::config::{ConfigError, EngineConfig, RepresentationKind};
use crate::corpusfreq::{CorpusError, DocFreqTable};
use crate::embeddings::{load_embeddings_file, EmbeddingError, EmbeddingStore, NeighborIndex};
use crate::eval::TrialConfig;
use crate::scoring::ScoringParams;

#[derive(Debug, Error)]
pub enum EngineError {
    #[error("unknown representation `{0}`")]
    UnknownRepresentation(String),
    #[error("missing resource: {0}")]
    MissingResource(String),
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Clue(#[from] ClueError),
    #[error(transparent)]
    Board(#[from] BoardError),
    #[error(transparent)]
    Embedding(#[from] EmbeddingError),
    #[error(transparent)]
    Corpus(#[from] CorpusError),
    #[error(transparent)]
    Graph(#[from] BabelNetError),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

#[derive(Debug, Clone)]
pub enum Representation {
    Embedding {
        store: Arc<EmbeddingStore>,
        index: Arc<NeighborIndex>,
    },
    Graph {
        cache: Option<SubgraphCache>,
        fixture: Option<Arc<FixtureGraph>>,
    },
}

#[derive(Debug, Clone)]
pub struct LoadedRepresentation {
    pub repr: Representation,
    pub lambda_d: Option<f64>,
}

#[derive(Debug, Clone, Default)]
pub struct Engine {
    pub representations: BTreeMap<String, LoadedRepresentation>,
    pub docfreq: Option<Arc<DocFreqTable>>,
    pub dict: Option<Arc<EmbeddingStore>>,
    pub wordlist: Vec<WordToken>,
    pub params: ScoringParams,
}

impl Engine {
    pub fn new(params: ScoringParams) -> Self {
        Self {
            params,
            ..Default::default()
        }
    }

    pub fn add_embedding(&mut self, name: &str, store: EmbeddingStore, index: NeighborIndex, lambda_d: Option<f64>) {
        self.representations.insert(
            name.to_string(),
            LoadedRepresentation {
                repr: Representation::Embedding {
                    store: Arc::new(store),
                    index: Arc::new(index),
                },
                lambda_d,
            },
        );
    }

    pub fn add_graph(&mut self, name: &str, cache: Option<SubgraphCache>, fixture: Option<FixtureGraph>, lambda_d: Option<f64>) {
        self.representations.insert(
            name.to_string(),
            LoadedRepresentation {
                repr: Representation::Graph {
                    cache,
                    fixture: fixture.map(Arc::new),
                },
                lambda_d,
            },
        );
    }

    pub fn set_detect(&mut self, docfreq: DocFreqTable, dict: EmbeddingStore) {
        self.docfreq = Some(Arc::new(docfreq));
        self.dict = Some(Arc::new(dict));
    }

    pub fn from_config(cfg: &EngineConfig) -> Result<Self, EngineError> {
        cfg.validate()?;
        let mut engine = Engine::new(cfg.params);
        if let Some(p) = &cfg.docfreq {
            engine.docfreq = Some(Arc::new(DocFreqTable::load(p)?));
        }
        if let Some(p) = &cfg.dict {
            engine.dict = Some(Arc::new(load_embeddings_file(p, "dict")?));
        }
        if let Some(p) = &cfg.wordlist {
            engine.wordlist = load_wordlist(&std::fs::read_to_string(p)?)?;
        }
        for r in &cfg.representations {
            match &r.kind {
                RepresentationKind::Embedding {
                    path,
                    index,
                    hnsw,
                    top_common,
                } => {
                    let mut store = load_embeddings_file(path, &r.name)?;
                    if let Some(k) = top_common {
                        let df = engine.docfreq.as_ref().expect("validated");
                        store = store.filter_top_common(df, *k)?;
                    }
                    let idx = NeighborIndex::build(&store, *index, *hnsw);
                    engine.add_embedding(&r.name, store, idx, r.lambda_d);
                }
                RepresentationKind::Graph { cache_dir, fixture } => {
                    let fixture = match fixture {
                        Some(p) => Some(FixtureGraph::load(p, &RelationMap::default())?),
                        None => None,
                    };
                    engine.add_graph(&r.name, cache_dir.as_ref().map(SubgraphCache::new), fixture, r.lambda_d);
                }
            }
        }
        Ok(engine)
    }

    /// Scoring parameters with the representation's λ_D override applied.
    pub fn params_for(&self, representation: &str) -> Result<ScoringParams, EngineError> {
        let r = self
            .representations
            .get(representation)
            .ok_or_else(|| EngineError::UnknownRepresentation(representation.to_string()))?;
        let mut p = self.params;
        if let Some(ld) = r.lambda_d {
            p.lambda_d = ld;
        }
        Ok(p)
    }

    /// The relatedness source a board is scored against.
    pub fn source_for(&self, representation: &str, board: &Board) -> Result<RelatednessSource, EngineError> {
        let r = self
            .representations
            .get(representation)
            .ok_or_else(|| EngineError::UnknownRepresentation(representation.to_string()))?;
        Ok(match &r.repr {
            Representation::Embedding { store, index } => RelatednessSource::embedding(store.clone(), index.clone()),
            Representation::Graph { cache, fixture } => {
                let p = &self.params;
                let words = board.words();
                let mut rel = GraphRelatedness::default();
                if let Some(c) = cache {
                    rel = GraphRelatedness::from_cache(c, &words, p.levels, p.weights, p.label_mode)?;
                }
                if let Some(f) = fixture {
                    let missing: Vec<WordToken> =
                        words.into_iter().filter(|w| !rel.neighborhoods.contains_key(w)).collect();
                    let extra = GraphRelatedness::from_source(f.as_ref(), &missing, p.levels, p.weights, p.label_mode)?;
                    rel.neighborhoods.extend(extra.neighborhoods);
                }
                RelatednessSource::Graph(rel)
            }
        })
    }

    pub fn detect_resources(&self) -> Option<DetectResources<'_>> {
        match (&self.docfreq, &self.dict) {
            (Some(df), Some(dict)) => Some(DetectResources { df, dict }),
            _ => None,
        }
    }

    /// Checks that a configuration can run at all.
    pub fn check_config(&self, config: &TrialConfig) -> Result<(), EngineError> {
        if !self.representations.contains_key(&config.representation) {
            return Err(EngineError::UnknownRepresentation(config.representation.clone()));
        }
        if config.detect && self.detect_resources().is_none() {
            return Err(EngineError::MissingResource(
                "DETECT needs both a docfreq table and a dict embedding".into(),
            ));
        }
        Ok(())
    }

    pub fn clue(&self, board: &Board, config: &TrialConfig) -> Result<ClueResult, EngineError> {
        self.check_config(config)?;
        let source = self.source_for(&config.representation, board)?;
        let params = self.params_for(&config.representation)?;
        let request = ClueRequest {
            representation: config.representation.clone(),
            scoring_fn: config.scoring_fn,
            detect: config.detect,
        };
        Ok(choose_clue(board, &source, &params, &request, self.detect_resources())?)
    }

    /// Board number `i` of a run seeded with `seed`.
    pub fn board(&self, per_team: usize, seed: u64, i: u64) -> Result<Board, EngineError> {
        if self.wordlist.is_empty() {
            return Err(EngineError::MissingResource("no word list configured".into()));
        }
        Ok(generate_board(&self.wordlist, per_team, board_seed(seed, i))?)
    }
}

/// Seed of the i-th board in a seeded run.
pub fn board_seed(seed: u64, i: u64) -> u64 {
    seed.wrapping_add(i.wrapping_mul(0x9e37_79b9_7f4a_7c15))
}

/// One word per line; blank lines and `#` comments ignored; duplicates dropped.
pub fn load_wordlist(text: &str) -> Result<Vec<WordToken>, BoardError> {
    let mut seen = std::collections::BTreeSet::new();
    let mut out = Vec::new();
    for line in text.lines() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let w = crate::board::normalize_token(line)?;
        if seen.insert(w.clone()) {
            out.push(w);
        }
    }
    Ok(out)
}
