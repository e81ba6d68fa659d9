//! Candidate generation and clue selection.

use std::cmp::Ordering;
use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::sync::Arc;

use itertools::Itertools;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::babelnet::{
    query_word, BabelNetError, GraphNeighborhood, GraphSource, LabelMode, LabelWeights, SubgraphCache,
};
use crate::board::{Board, CandidateOrigin, ClueResult, IntendedPair, ScoringFn, WordToken};
use crate::corpusfreq::DocFreqTable;
use crate::embeddings::{EmbeddingError, EmbeddingStore, NeighborIndex};
use crate::corpusfreq::freq_score;
use crate::scoring::{
    detect_value, dict_relatedness, g_value, gkim_value, total_score, ScoreBreakdown, ScoringParams,
};

#[derive(Debug, Error)]
pub enum ClueError {
    #[error("board words missing from the representation: {}", .0.join(", "))]
    UnknownBoardWord(Vec<String>),
    #[error("no legal candidate clue for any intended set")]
    NoCandidates,
    #[error("DETECT needs a document-frequency table and a dictionary embedding")]
    MissingDetectResources,
    #[error("invalid parameters: {0}")]
    InvalidParams(String),
    #[error(transparent)]
    Embedding(#[from] EmbeddingError),
    #[error(transparent)]
    Graph(#[from] BabelNetError),
}

/// Graph neighborhoods of a set of board words.
#[derive(Debug, Clone, Default)]
pub struct GraphRelatedness {
    pub neighborhoods: BTreeMap<WordToken, GraphNeighborhood>,
}

impl GraphRelatedness {
    /// Builds neighborhoods straight from a graph source.
    pub fn from_source(
        source: &dyn GraphSource,
        words: &[WordToken],
        levels: usize,
        weights: LabelWeights,
        mode: LabelMode,
    ) -> Result<Self, BabelNetError> {
        let mut neighborhoods = BTreeMap::new();
        for word in words {
            let synsets = source.synsets_for(word)?;
            if synsets.is_empty() {
                continue;
            }
            let graph = query_word(source, word, &synsets, levels).map_err(|(_, e)| e)?;
            neighborhoods.insert(word.clone(), GraphNeighborhood::build(&graph, levels, weights, mode)?);
        }
        Ok(Self { neighborhoods })
    }

    /// Loads neighborhoods for `words` from cached subgraphs. Words without a
    /// complete record are skipped; `choose_clue` reports them.
    pub fn from_cache(
        cache: &SubgraphCache,
        words: &[WordToken],
        levels: usize,
        weights: LabelWeights,
        mode: LabelMode,
    ) -> Result<Self, BabelNetError> {
        let mut neighborhoods = BTreeMap::new();
        for word in words {
            match cache.load(word)? {
                Some(g) if g.complete && !g.origins.is_empty() => {
                    neighborhoods.insert(word.clone(), GraphNeighborhood::build(&g, levels, weights, mode)?);
                }
                _ => {}
            }
        }
        Ok(Self { neighborhoods })
    }
}

/// s(w1, w2) plus neighbor enumeration, over embeddings or a graph.
#[derive(Debug, Clone)]
pub enum RelatednessSource {
    Embedding {
        store: Arc<EmbeddingStore>,
        index: Arc<NeighborIndex>,
    },
    Graph(GraphRelatedness),
}

impl RelatednessSource {
    pub fn embedding(store: Arc<EmbeddingStore>, index: Arc<NeighborIndex>) -> Self {
        RelatednessSource::Embedding { store, index }
    }

    pub fn exact(store: EmbeddingStore) -> Self {
        RelatednessSource::Embedding {
            store: Arc::new(store),
            index: Arc::new(NeighborIndex::Exact),
        }
    }

    fn knows(&self, word: &WordToken) -> bool {
        match self {
            RelatednessSource::Embedding { store, .. } => store.contains(word.as_str()),
            RelatednessSource::Graph(g) => g.neighborhoods.contains_key(word),
        }
    }

    /// s(clue, word). For graphs, zero when no valid path connects them.
    pub fn similarity(&self, clue: &str, word: &WordToken) -> f64 {
        match self {
            RelatednessSource::Embedding { store, .. } => store.similarity(clue, word.as_str()).unwrap_or(0.0),
            RelatednessSource::Graph(g) => g
                .neighborhoods
                .get(word)
                .map_or(0.0, |n| n.similarity(clue)),
        }
    }
}

/// Crude suffix stripping used by the optional stem rule.
fn stem(word: &str) -> &str {
    let mut base = word;
    for suffix in ["ing", "ers", "er", "ies", "es", "ed", "ly", "s"] {
        if let Some(b) = word.strip_suffix(suffix) {
            if b.chars().count() >= 3 {
                base = b;
                break;
            }
        }
    }
    match base.strip_suffix('e') {
        Some(b) if b.chars().count() >= 3 => b,
        _ => base,
    }
}

/// Single alphabetic word, not on the board (and optionally not sharing a
/// stem with a board word).
pub fn is_legal_candidate(token: &WordToken, board: &Board, exclude_stems: bool) -> bool {
    if !token.is_single_word() || board.contains(token.as_str()) {
        return false;
    }
    if exclude_stems {
        let s = stem(token.as_str());
        if board.words().iter().any(|w| stem(w.as_str()) == s) {
            return false;
        }
    }
    true
}

fn pair_candidates(
    board: &Board,
    pair: &[WordToken],
    source: &RelatednessSource,
    params: &ScoringParams,
    neighbor_cache: &HashMap<WordToken, BTreeSet<WordToken>>,
) -> (BTreeSet<WordToken>, CandidateOrigin) {
    let sets: Vec<&BTreeSet<WordToken>> = pair.iter().filter_map(|b| neighbor_cache.get(b)).collect();
    let union = || -> BTreeSet<WordToken> { sets.iter().flat_map(|s| s.iter().cloned()).collect() };
    let (set, origin) = match source {
        RelatednessSource::Embedding { .. } => (union(), CandidateOrigin::Union),
        RelatednessSource::Graph(_) => {
            let mut iter = sets.iter();
            let first = iter.next().map(|s| (*s).clone()).unwrap_or_default();
            let inter: BTreeSet<WordToken> = iter.fold(first, |acc, s| acc.intersection(s).cloned().collect());
            if inter.is_empty() {
                (union(), CandidateOrigin::UnionFallback)
            } else {
                (inter, CandidateOrigin::Intersection)
            }
        }
    };
    let set = set
        .into_iter()
        .filter(|t| is_legal_candidate(t, board, params.exclude_stems))
        .collect();
    (set, origin)
}

fn blue_neighbors(
    board: &Board,
    source: &RelatednessSource,
    params: &ScoringParams,
) -> Result<HashMap<WordToken, BTreeSet<WordToken>>, ClueError> {
    let filter = |t: &WordToken| is_legal_candidate(t, board, params.exclude_stems);
    board
        .blue()
        .iter()
        .map(|b| {
            let set = match source {
                RelatednessSource::Embedding { store, index } => index
                    .top_neighbors(store, b.as_str(), params.t, &filter)?
                    .neighbors
                    .into_iter()
                    .map(|n| n.token)
                    .collect(),
                RelatednessSource::Graph(g) => g.neighborhoods[b].tokens().filter(|t| filter(t)).cloned().collect(),
            };
            Ok((b.clone(), set))
        })
        .collect()
}

/// Every legal candidate for an intended set, and how the set was formed.
pub fn candidate_clues(
    board: &Board,
    pair: &IntendedPair,
    source: &RelatednessSource,
    params: &ScoringParams,
) -> Result<(BTreeSet<WordToken>, CandidateOrigin), ClueError> {
    check_coverage(board, source)?;
    let neighbors = blue_neighbors(board, source, params)?;
    Ok(pair_candidates(board, pair.words(), source, params, &neighbors))
}

fn check_coverage(board: &Board, source: &RelatednessSource) -> Result<(), ClueError> {
    let missing: Vec<String> = board
        .words()
        .into_iter()
        .filter(|w| !source.knows(w))
        .map(String::from)
        .collect();
    if missing.is_empty() {
        Ok(())
    } else {
        Err(ClueError::UnknownBoardWord(missing))
    }
}

/// Resources DETECT draws on.
#[derive(Debug, Clone, Copy)]
pub struct DetectResources<'a> {
    pub df: &'a DocFreqTable,
    pub dict: &'a EmbeddingStore,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ClueRequest {
    pub representation: String,
    pub scoring_fn: ScoringFn,
    pub detect: bool,
}

/// Everything about one candidate that does not depend on the pair.
struct CandidateStats {
    blue: Vec<f64>,
    red_max: Option<f64>,
    freq_term: f64,
    dict_blue: Vec<f64>,
    dict_red_max: f64,
}

impl CandidateStats {
    fn compute(
        clue: &WordToken,
        blue: &[WordToken],
        red: &[WordToken],
        source: &RelatednessSource,
        detect: Option<DetectResources<'_>>,
        params: &ScoringParams,
    ) -> Self {
        let sim = |w: &WordToken| source.similarity(clue.as_str(), w);
        let (freq_term, dict_blue, dict_red_max) = match detect {
            Some(d) => {
                let terms = |w: &WordToken| 1.0 - dict_relatedness(d.dict, clue.as_str(), w.as_str());
                (
                    freq_score(d.df, clue.as_str(), params.freq_params()),
                    blue.iter().map(terms).collect(),
                    red.iter().map(terms).reduce(f64::max).unwrap_or(0.0),
                )
            }
            None => (0.0, Vec::new(), 0.0),
        };
        Self {
            blue: blue.iter().map(sim).collect(),
            red_max: red.iter().map(sim).reduce(f64::max),
            freq_term,
            dict_blue,
            dict_red_max,
        }
    }
}

struct Pair {
    words: Vec<WordToken>,
    /// Positions in the sorted blue list.
    index: Vec<usize>,
    origin: CandidateOrigin,
}

#[derive(Clone, Copy)]
struct Scored {
    key: f64,
    pair: usize,
    cand: usize,
}

/// Scores every (intended set, candidate) combination and returns the best.
///
/// With `kim` scoring, if no candidate meets the constraints anywhere on the
/// board, candidates are ranked by their minimum blue similarity instead.
pub fn choose_clue(
    board: &Board,
    source: &RelatednessSource,
    params: &ScoringParams,
    request: &ClueRequest,
    detect: Option<DetectResources<'_>>,
) -> Result<ClueResult, ClueError> {
    params.validate().map_err(ClueError::InvalidParams)?;
    if board.blue().len() < params.m {
        return Err(ClueError::InvalidParams(format!(
            "board has {} blue words, fewer than m = {}",
            board.blue().len(),
            params.m
        )));
    }
    let detect = match (request.detect, detect) {
        (true, Some(d)) => Some(d),
        (true, None) => return Err(ClueError::MissingDetectResources),
        (false, _) => None,
    };
    check_coverage(board, source)?;
    let neighbors = blue_neighbors(board, source, params)?;

    let blue: Vec<WordToken> = board.blue().iter().cloned().collect();
    let red: Vec<WordToken> = board.red().iter().cloned().collect();

    let mut candidates: Vec<WordToken> = Vec::new();
    let mut cand_index: HashMap<WordToken, usize> = HashMap::new();
    let mut pairs: Vec<Pair> = Vec::new();
    let mut jobs: Vec<(usize, usize)> = Vec::new();
    for index in (0..blue.len()).combinations(params.m) {
        let words: Vec<WordToken> = index.iter().map(|&i| blue[i].clone()).collect();
        let (cands, origin) = pair_candidates(board, &words, source, params, &neighbors);
        let p = pairs.len();
        for c in cands {
            let next = candidates.len();
            let ci = *cand_index.entry(c.clone()).or_insert(next);
            if ci == next {
                candidates.push(c);
            }
            jobs.push((p, ci));
        }
        pairs.push(Pair { words, index, origin });
    }
    if jobs.is_empty() {
        return Err(ClueError::NoCandidates);
    }
    let stats: Vec<CandidateStats> = candidates
        .par_iter()
        .map(|c| CandidateStats::compute(c, &blue, &red, source, detect, params))
        .collect();

    let terms = |p: &Pair, st: &CandidateStats, relaxed: bool| -> (f64, bool, f64, f64) {
        let sims = p.index.iter().map(|&i| st.blue[i]);
        let min_blue = || sims.clone().fold(f64::INFINITY, f64::min);
        let (base, passed) = match request.scoring_fn {
            ScoringFn::Ours => (g_value(sims.clone(), st.red_max, params), true),
            ScoringFn::Kim if relaxed => (min_blue(), false),
            ScoringFn::Kim => gkim_value(min_blue(), st.red_max, params),
        };
        let (dict_blue_sum, det) = if detect.is_some() {
            let sum: f64 = p.index.iter().map(|&i| st.dict_blue[i]).sum();
            (sum, detect_value(st.freq_term, sum, st.dict_red_max, params))
        } else {
            (0.0, 0.0)
        };
        (base, passed, dict_blue_sum, det)
    };

    // Higher key wins, then the smaller clue, then the smaller pair.
    let better = |a: &Scored, b: &Scored| -> Ordering {
        a.key
            .total_cmp(&b.key)
            .then_with(|| candidates[b.cand].cmp(&candidates[a.cand]))
            .then_with(|| pairs[b.pair].words.cmp(&pairs[a.pair].words))
    };
    let pick = |relaxed: bool| -> Option<Scored> {
        jobs.par_iter()
            .filter_map(|&(p, c)| {
                let (base, passed, _, det) = terms(&pairs[p], &stats[c], relaxed);
                let key = if relaxed {
                    base + det
                } else {
                    total_score(base, passed, det, request.scoring_fn, request.detect)
                };
                (key > f64::NEG_INFINITY).then_some(Scored { key, pair: p, cand: c })
            })
            .max_by(|a, b| better(a, b))
    };

    let (best, relaxed) = match pick(false) {
        Some(b) => (b, false),
        None if request.scoring_fn == ScoringFn::Kim => (pick(true).ok_or(ClueError::NoCandidates)?, true),
        None => return Err(ClueError::NoCandidates),
    };

    let pair = &pairs[best.pair];
    let st = &stats[best.cand];
    let (base, passed, dict_blue_sum, det) = terms(pair, st, relaxed);
    let mut breakdown = ScoreBreakdown {
        base,
        kim_constraint_passed: passed,
        ..Default::default()
    };
    if detect.is_some() {
        breakdown.freq_term = st.freq_term;
        breakdown.dict_blue_sum = dict_blue_sum;
        breakdown.dict_red_max = st.dict_red_max;
        breakdown.detect = det;
    }
    breakdown.total = breakdown.recompute_total(request.detect);

    Ok(ClueResult {
        clue: candidates[best.cand].clone(),
        intended: IntendedPair::from_sorted(pair.words.clone()),
        score: breakdown.total,
        breakdown,
        representation: request.representation.clone(),
        scoring_fn: request.scoring_fn,
        detect: request.detect,
        candidate_origin: pair.origin,
        kim_relaxed: relaxed,
    })
}
