#![allow(dead_code)]

use std::collections::BTreeSet;
use std::path::PathBuf;

use codenames_core::babelnet::{Edge, FixtureGraph, RelationGroup, Synset};
use codenames_core::corpusfreq::DocFreqTable;
use codenames_core::embeddings::EmbeddingStore;
use codenames_core::engine::load_wordlist;
use codenames_core::{Board, ScoringFn, ScoringParams, WordToken};
use rand::{RngExt, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn fixture(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures").join(name)
}

pub fn tok(s: &str) -> WordToken {
    WordToken::new(s).unwrap()
}

pub fn wordlist() -> Vec<WordToken> {
    load_wordlist(&std::fs::read_to_string(fixture("wordlist.txt")).unwrap()).unwrap()
}

/// Pronounceable alphabetic pseudo-words, distinct for distinct `i`.
pub fn pseudo_word(mut i: usize) -> String {
    const ONSETS: [&str; 12] = ["b", "d", "f", "g", "k", "l", "m", "n", "p", "r", "s", "t"];
    const VOWELS: [&str; 5] = ["a", "e", "i", "o", "u"];
    let mut out = String::from("z");
    loop {
        out.push_str(ONSETS[i % 12]);
        i /= 12;
        out.push_str(VOWELS[i % 5]);
        i /= 5;
        if i == 0 {
            break;
        }
    }
    out
}

fn unit(rng: &mut ChaCha8Rng, dim: usize) -> Vec<f64> {
    let v: Vec<f64> = (0..dim).map(|_| rng.random_range(-1.0..1.0)).collect();
    let n = v.iter().map(|x| x * x).sum::<f64>().sqrt();
    v.into_iter().map(|x| x / n).collect()
}

/// Embeddings, dictionary embeddings and a df table over a shared vocabulary.
pub struct World {
    pub store: EmbeddingStore,
    pub dict: EmbeddingStore,
    pub df: DocFreqTable,
    pub board_words: Vec<WordToken>,
    pub clue_words: Vec<WordToken>,
}

/// Each token mixes one or two of `topics` random directions plus noise, so
/// neighbor lists are meaningful rather than uniform.
pub fn world(board_words: &[WordToken], clue_count: usize, dim: usize, topics: usize, seed: u64) -> World {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let centers: Vec<Vec<f64>> = (0..topics).map(|_| unit(&mut rng, dim)).collect();
    let clue_words: Vec<WordToken> = (0..clue_count).map(|i| tok(&pseudo_word(i))).collect();
    let mut rows = Vec::new();
    let mut dict_rows = Vec::new();
    let mut counts = Vec::new();
    for w in board_words.iter().chain(clue_words.iter()) {
        let a = rng.random_range(0..topics);
        let b = rng.random_range(0..topics);
        let mix = rng.random_range(0.2..0.8);
        let noise = unit(&mut rng, dim);
        let v: Vec<f32> = (0..dim)
            .map(|k| (mix * centers[a][k] + (1.0 - mix) * centers[b][k] + 0.35 * noise[k]) as f32)
            .collect();
        let dn = unit(&mut rng, dim);
        let d: Vec<f32> = (0..dim).map(|k| (0.6 * centers[a][k] + 0.4 * dn[k]) as f32).collect();
        rows.push((w.clone(), v));
        if rng.random_range(0..10) > 0 {
            dict_rows.push((w.clone(), d));
        }
        if rng.random_range(0..8) > 0 {
            counts.push((w.as_str().to_string(), rng.random_range(1..3000u64)));
        }
    }
    let df = DocFreqTable::from_counts(counts.iter().map(|(w, c)| (w.as_str(), *c)), 3000).unwrap();
    World {
        store: EmbeddingStore::from_rows("synthetic", rows).unwrap(),
        dict: EmbeddingStore::from_rows("dict", dict_rows).unwrap(),
        df,
        board_words: board_words.to_vec(),
        clue_words,
    }
}

/// Writes a store in the plain text vector format.
pub fn write_store(store: &EmbeddingStore, path: &std::path::Path) {
    let mut buf = Vec::new();
    store.write_text(&mut buf).unwrap();
    std::fs::write(path, buf).unwrap();
}

/// What the brute-force enumerator picked.
#[derive(Debug, Clone, PartialEq)]
pub struct OracleChoice {
    pub clue: String,
    pub pair: Vec<String>,
    pub score: f64,
    pub relaxed: bool,
}

fn legal(token: &str, board: &Board) -> bool {
    !token.is_empty() && token.chars().all(char::is_alphabetic) && !board.contains(token)
}

fn freq(df: &DocFreqTable, token: &str, alpha: f64) -> f64 {
    match df.df(token) {
        Some(n) if n > 0 && 1.0 / n as f64 >= alpha => -1.0 / n as f64,
        _ => -1.0,
    }
}

fn dict_cos(dict: &EmbeddingStore, a: &str, b: &str) -> f64 {
    dict.similarity(a, b).unwrap_or(0.0)
}

/// Exhaustive reference scorer for embedding sources: every size-2 blue pair,
/// every token in the union of the pair's top-T legal neighbors.
pub fn oracle_embedding(
    store: &EmbeddingStore,
    board: &Board,
    params: &ScoringParams,
    scoring: ScoringFn,
    detect: Option<(&DocFreqTable, &EmbeddingStore)>,
) -> Option<OracleChoice> {
    assert_eq!(params.m, 2, "the reference scorer enumerates pairs only");
    let vocab: Vec<&str> = store.tokens().iter().map(WordToken::as_str).collect();
    let blue: Vec<&str> = board.blue().iter().map(WordToken::as_str).collect();
    let red: Vec<&str> = board.red().iter().map(WordToken::as_str).collect();
    let s = |a: &str, b: &str| store.similarity(a, b).unwrap();

    let top = |b: &str| -> BTreeSet<&str> {
        let mut all: Vec<(f64, &str)> = vocab
            .iter()
            .filter(|t| legal(t, board))
            .map(|t| (s(b, t), *t))
            .collect();
        all.sort_by(|x, y| y.0.partial_cmp(&x.0).unwrap().then(x.1.cmp(y.1)));
        all.into_iter().take(params.t).map(|(_, t)| t).collect()
    };
    let neighbor_sets: Vec<BTreeSet<&str>> = blue.iter().map(|b| top(b)).collect();

    // (total, clue, pair, passed)
    let mut scored: Vec<(f64, f64, String, Vec<String>, bool)> = Vec::new();
    for i in 0..blue.len() {
        for j in i + 1..blue.len() {
            let pair = [blue[i], blue[j]];
            let cands: BTreeSet<&str> = neighbor_sets[i].union(&neighbor_sets[j]).copied().collect();
            for c in cands {
                let bs: Vec<f64> = pair.iter().map(|b| s(c, b)).collect();
                let red_max = red.iter().map(|r| s(c, r)).fold(None, |m: Option<f64>, v| Some(m.map_or(v, |m| m.max(v))));
                let min_blue = bs[0].min(bs[1]);
                let (base, passed) = match scoring {
                    ScoringFn::Ours => (params.lambda_b * (bs[0] + bs[1]) - params.lambda_r * red_max.unwrap_or(0.0), true),
                    ScoringFn::Kim => {
                        let ok = min_blue > params.lambda_t && red_max.is_none_or(|r| min_blue > r);
                        (if ok { min_blue } else { 0.0 }, ok)
                    }
                };
                let det = detect.map_or(0.0, |(df, dict)| {
                    let blue_sum = dict_cos(dict, c, pair[0]) + dict_cos(dict, c, pair[1]);
                    let red_max = red.iter().map(|r| dict_cos(dict, c, r)).fold(None, |m: Option<f64>, v| Some(m.map_or(v, |m| m.max(v))));
                    params.lambda_f * freq(df, c, params.alpha) + params.lambda_d * (blue_sum - red_max.unwrap_or(0.0))
                });
                scored.push((base + det, min_blue + det, c.to_string(), vec![pair[0].to_string(), pair[1].to_string()], passed));
            }
        }
    }
    let pick = |rows: Vec<(f64, String, Vec<String>)>| {
        rows.into_iter().reduce(|a, b| {
            if b.0 > a.0 || (b.0 == a.0 && (b.1 < a.1 || (b.1 == a.1 && b.2 < a.2))) {
                b
            } else {
                a
            }
        })
    };
    let strict: Vec<_> = scored
        .iter()
        .filter(|r| r.4)
        .map(|r| (r.0, r.2.clone(), r.3.clone()))
        .collect();
    if let Some((score, clue, pair)) = pick(strict) {
        return Some(OracleChoice { clue, pair, score, relaxed: false });
    }
    if scoring == ScoringFn::Kim {
        let relaxed: Vec<_> = scored.iter().map(|r| (r.1, r.2.clone(), r.3.clone())).collect();
        return pick(relaxed).map(|(score, clue, pair)| OracleChoice { clue, pair, score, relaxed: true });
    }
    None
}

/// An obscure token and a common token with identical relatedness to the
/// board: `aether` (df 1) and `sky` (df 200).
pub struct TieFixture {
    pub board: Board,
    pub store: EmbeddingStore,
    pub graph: FixtureGraph,
    pub df: DocFreqTable,
    pub dict: EmbeddingStore,
}

pub fn tie_fixture() -> TieFixture {
    let board = Board::new([tok("fish"), tok("bison")], [tok("calf"), tok("crown")]).unwrap();
    let store = EmbeddingStore::from_rows(
        "tie",
        [
            (tok("fish"), vec![1.0, 0.0, 0.0]),
            (tok("bison"), vec![0.0, 1.0, 0.0]),
            (tok("calf"), vec![0.0, 0.0, 1.0]),
            (tok("crown"), vec![0.0, 0.0, -1.0]),
            (tok("aether"), vec![1.0, 1.0, 0.0]),
            (tok("sky"), vec![1.0, 1.0, 0.0]),
        ],
    )
    .unwrap();
    let dict = EmbeddingStore::from_rows(
        "dict",
        [
            (tok("fish"), vec![1.0, 0.2]),
            (tok("bison"), vec![0.2, 1.0]),
            (tok("calf"), vec![-1.0, 0.1]),
            (tok("crown"), vec![0.1, -1.0]),
            (tok("aether"), vec![1.0, 1.0]),
            (tok("sky"), vec![1.0, 1.0]),
        ],
    )
    .unwrap();
    let df = DocFreqTable::from_counts([("aether", 1), ("sky", 200), ("fish", 90), ("bison", 12)], 1701).unwrap();

    let mut graph = FixtureGraph::new();
    let synset = |id: &str, main: &str| Synset {
        id: id.into(),
        main_sense: main.into(),
        other_senses: Vec::new(),
        pos: "NOUN".into(),
        definition: None,
    };
    let is_a = |s: &str, t: &str| Edge {
        source: s.into(),
        target: t.into(),
        relation_name: "is-a".into(),
        relation_group: RelationGroup::Hypernym,
        is_automatic: false,
    };
    for (id, main) in [
        ("t:fish", "fish"),
        ("t:bison", "bison"),
        ("t:calf", "calf"),
        ("t:crown", "crown"),
        ("t:aether", "aether"),
        ("t:sky", "sky"),
        ("t:young", "young_animal"),
        ("t:headdress", "headdress"),
    ] {
        graph.add_synset(synset(id, main));
    }
    for w in ["fish", "bison"] {
        let id = format!("t:{w}");
        graph.add_edge(is_a(&id, "t:aether")).add_edge(is_a(&id, "t:sky"));
    }
    graph.add_edge(is_a("t:calf", "t:young")).add_edge(is_a("t:crown", "t:headdress"));
    for w in ["fish", "bison", "calf", "crown"] {
        graph.add_lemma(w, &[&format!("t:{w}")]);
    }
    TieFixture {
        board,
        store,
        graph,
        df,
        dict,
    }
}
