//! Trials, responder metrics, significance tests and a bot guesser.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt::Write as _;
use std::io::{BufRead, Write};
use std::path::Path;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, Normal};
use thiserror::Error;

use crate::board::{Board, ClueResult, IntendedPair, ScoringFn, WordToken};
use crate::embeddings::EmbeddingStore;

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Error)]
pub enum EvalError {
    #[error("invalid response: {0}")]
    InvalidResponse(String),
    #[error("clue {0:?} is not in the guesser's vocabulary")]
    UnknownClue(String),
    #[error("invalid z-test input: {0}")]
    InvalidInput(String),
    #[error("response for unknown trial {0}")]
    UnknownTrial(String),
    #[error("{path}:{line}: {message}")]
    Corrupt { path: String, line: usize, message: String },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// Which clue-giver produced a trial.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct TrialConfig {
    pub representation: String,
    pub scoring_fn: ScoringFn,
    pub detect: bool,
}

impl TrialConfig {
    pub fn new(representation: impl Into<String>, scoring_fn: ScoringFn, detect: bool) -> Self {
        Self {
            representation: representation.into(),
            scoring_fn,
            detect,
        }
    }

    /// e.g. `fasttext+DETECT`.
    pub fn row_label(&self) -> String {
        if self.detect {
            format!("{}+DETECT", self.representation)
        } else {
            self.representation.clone()
        }
    }
}

impl std::fmt::Display for TrialConfig {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let scoring = match self.scoring_fn {
            ScoringFn::Ours => "ours",
            ScoringFn::Kim => "kim",
        };
        write!(f, "{}/{}", self.row_label(), scoring)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct Trial {
    pub id: String,
    pub board: Board,
    pub display_order: Vec<WordToken>,
    pub clue: WordToken,
    pub intended: IntendedPair,
    pub config: TrialConfig,
}

impl Trial {
    /// Builds a trial, shuffling the board words with `shuffle_seed`.
    pub fn from_clue(id: impl Into<String>, board: &Board, result: &ClueResult, config: TrialConfig, shuffle_seed: u64) -> Self {
        let mut display_order = board.words();
        display_order.shuffle(&mut ChaCha8Rng::seed_from_u64(shuffle_seed));
        Self {
            id: id.into(),
            board: board.clone(),
            display_order,
            clue: result.clue.clone(),
            intended: result.intended.clone(),
            config,
        }
    }

    pub fn public_view(&self) -> PublicTrial {
        PublicTrial {
            schema_version: SCHEMA_VERSION,
            trial_id: self.id.clone(),
            words: self.display_order.clone(),
            clue: self.clue.clone(),
        }
    }

    /// Checks response invariants plus board membership.
    pub fn validate_response(&self, response: &TrialResponse) -> Result<(), EvalError> {
        if response.trial_id != self.id {
            return Err(EvalError::InvalidResponse(format!(
                "response targets trial {}, expected {}",
                response.trial_id, self.id
            )));
        }
        response.validate()?;
        for w in response.ranks() {
            if !self.board.contains(w.as_str()) {
                return Err(EvalError::InvalidResponse(format!("{w} is not on the board")));
            }
        }
        Ok(())
    }
}

/// What a responder sees: words and clue, no colors, no intended words.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct PublicTrial {
    pub schema_version: u32,
    pub trial_id: String,
    pub words: Vec<WordToken>,
    pub clue: WordToken,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct TrialResponse {
    pub trial_id: String,
    pub rank1: WordToken,
    pub rank2: WordToken,
    #[serde(default)]
    pub rank3: Option<WordToken>,
    #[serde(default)]
    pub rank4: Option<WordToken>,
    #[serde(default)]
    pub responder_id: String,
    #[serde(default)]
    pub timestamp: u64,
}

impl TrialResponse {
    pub fn ranks(&self) -> impl Iterator<Item = &WordToken> {
        [Some(&self.rank1), Some(&self.rank2), self.rank3.as_ref(), self.rank4.as_ref()]
            .into_iter()
            .flatten()
    }

    pub fn validate(&self) -> Result<(), EvalError> {
        if self.rank3.is_none() && self.rank4.is_some() {
            return Err(EvalError::InvalidResponse("rank4 given without rank3".into()));
        }
        let mut seen = BTreeSet::new();
        for w in self.ranks() {
            if !seen.insert(w) {
                return Err(EvalError::InvalidResponse(format!("{w} ranked twice")));
            }
        }
        Ok(())
    }
}

/// (precision@2, recall@4) of one response.
pub fn trial_metrics(response: &TrialResponse, intended: &IntendedPair) -> Result<(f64, f64), EvalError> {
    let (p, r) = hit_counts(response, intended)?;
    let m = intended.words().len() as f64;
    Ok((p as f64 / m, r as f64 / m))
}

fn hit_counts(response: &TrialResponse, intended: &IntendedPair) -> Result<(usize, usize), EvalError> {
    response.validate()?;
    let hit = |w: &WordToken| intended.words().contains(w);
    let p = [&response.rank1, &response.rank2].into_iter().filter(|w| hit(w)).count();
    let r = response.ranks().filter(|w| hit(w)).count();
    Ok((p, r))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct ZTest {
    pub z: f64,
    pub p_value: f64,
    pub degenerate_variance: bool,
}

/// Pooled two-proportion z-test, two-sided.
pub fn two_proportion_ztest(p1: f64, n1: u64, p2: f64, n2: u64) -> Result<ZTest, EvalError> {
    if n1 == 0 || n2 == 0 {
        return Err(EvalError::InvalidInput("sample sizes must be at least 1".into()));
    }
    if !(0.0..=1.0).contains(&p1) || !(0.0..=1.0).contains(&p2) {
        return Err(EvalError::InvalidInput(format!("proportions {p1}, {p2} outside [0, 1]")));
    }
    let (n1f, n2f) = (n1 as f64, n2 as f64);
    let pooled = (p1 * n1f + p2 * n2f) / (n1f + n2f);
    let var = pooled * (1.0 - pooled) * (1.0 / n1f + 1.0 / n2f);
    if var <= 0.0 {
        return Ok(ZTest {
            z: 0.0,
            p_value: 1.0,
            degenerate_variance: true,
        });
    }
    let z = (p1 - p2) / var.sqrt();
    let normal = Normal::standard();
    let p_value = (2.0 * normal.cdf(-z.abs())).min(1.0);
    Ok(ZTest {
        z,
        p_value,
        degenerate_variance: false,
    })
}

/// Human responses or simulated guesser output.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum EvaluationKind {
    #[serde(rename = "human")]
    Human,
    #[serde(rename = "bot-evaluation")]
    Bot,
}

impl EvaluationKind {
    pub fn label(self) -> &'static str {
        match self {
            EvaluationKind::Human => "human",
            EvaluationKind::Bot => "bot-evaluation",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct ConfigMetrics {
    pub config: TrialConfig,
    pub n: u64,
    pub precision_at_2: f64,
    pub recall_at_4: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct Comparison {
    pub representation: String,
    pub scoring_fn: ScoringFn,
    pub metric: String,
    /// Trials times intended words, per side.
    pub n_baseline: u64,
    pub n_detect: u64,
    pub test: ZTest,
}

impl Comparison {
    pub fn significant(&self) -> bool {
        !self.test.degenerate_variance && self.test.p_value < 0.05
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct MetricsReport {
    pub schema_version: u32,
    pub evaluation: EvaluationKind,
    pub configs: Vec<ConfigMetrics>,
    pub comparisons: Vec<Comparison>,
}

#[derive(Default)]
struct Bucket {
    trials: u64,
    words: u64,
    p_hits: u64,
    r_hits: u64,
}

/// Per-config means and DETECT-vs-baseline z-tests.
///
/// Means are exact hit counts over `trials × |intended|`, so they do not
/// depend on response order. Configs with no responses are left out.
pub fn aggregate(responses: &[(TrialResponse, Trial)], evaluation: EvaluationKind) -> Result<MetricsReport, EvalError> {
    let mut buckets: BTreeMap<TrialConfig, Bucket> = BTreeMap::new();
    for (response, trial) in responses {
        trial.validate_response(response)?;
        let (p, r) = hit_counts(response, &trial.intended)?;
        let b = buckets.entry(trial.config.clone()).or_default();
        b.trials += 1;
        b.words += trial.intended.words().len() as u64;
        b.p_hits += p as u64;
        b.r_hits += r as u64;
    }
    let configs: Vec<ConfigMetrics> = buckets
        .iter()
        .map(|(config, b)| ConfigMetrics {
            config: config.clone(),
            n: b.trials,
            precision_at_2: b.p_hits as f64 / b.words as f64,
            recall_at_4: b.r_hits as f64 / b.words as f64,
        })
        .collect();

    let mut comparisons = Vec::new();
    for (config, base) in buckets.iter().filter(|(c, _)| !c.detect) {
        let mut with = config.clone();
        with.detect = true;
        let Some(det) = buckets.get(&with) else { continue };
        for (metric, bh, dh) in [
            ("precisionAt2", base.p_hits, det.p_hits),
            ("recallAt4", base.r_hits, det.r_hits),
        ] {
            let test = two_proportion_ztest(
                bh as f64 / base.words as f64,
                base.words,
                dh as f64 / det.words as f64,
                det.words,
            )?;
            comparisons.push(Comparison {
                representation: config.representation.clone(),
                scoring_fn: config.scoring_fn,
                metric: metric.into(),
                n_baseline: base.words,
                n_detect: det.words,
                test,
            });
        }
    }
    Ok(MetricsReport {
        schema_version: SCHEMA_VERSION,
        evaluation,
        configs,
        comparisons,
    })
}

/// Ranks board words by similarity to the clue. Words outside the store come
/// last; ties go to the lexicographically smaller word.
pub fn simulate_guesser(store: &EmbeddingStore, trial: &Trial) -> Result<TrialResponse, EvalError> {
    if !store.contains(trial.clue.as_str()) {
        return Err(EvalError::UnknownClue(trial.clue.to_string()));
    }
    let words = trial.board.words();
    let mut scored: Vec<(Option<f64>, &WordToken)> = words
        .iter()
        .map(|w| (store.similarity(trial.clue.as_str(), w.as_str()).ok(), w))
        .collect();
    scored.sort_by(|a, b| match (a.0, b.0) {
        (Some(x), Some(y)) => y.total_cmp(&x).then_with(|| a.1.cmp(b.1)),
        (Some(_), None) => std::cmp::Ordering::Less,
        (None, Some(_)) => std::cmp::Ordering::Greater,
        (None, None) => a.1.cmp(b.1),
    });
    let mut ranked = scored.into_iter().map(|(_, w)| w.clone());
    let (Some(rank1), Some(rank2)) = (ranked.next(), ranked.next()) else {
        return Err(EvalError::InvalidResponse("board has fewer than two words".into()));
    };
    Ok(TrialResponse {
        trial_id: trial.id.clone(),
        rank1,
        rank2,
        rank3: ranked.next(),
        rank4: ranked.next(),
        responder_id: EvaluationKind::Bot.label().into(),
        timestamp: 0,
    })
}

/// Appends one JSON record per line.
pub fn append_jsonl<T: Serialize, W: Write>(out: &mut W, record: &T) -> Result<(), EvalError> {
    let mut line = serde_json::to_vec(record).map_err(std::io::Error::other)?;
    line.push(b'\n');
    out.write_all(&line)?;
    Ok(())
}

pub fn read_jsonl<T: for<'de> Deserialize<'de>, R: BufRead>(reader: R, label: &str) -> Result<Vec<T>, EvalError> {
    let mut out = Vec::new();
    for (i, line) in reader.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        out.push(serde_json::from_str(&line).map_err(|e| EvalError::Corrupt {
            path: label.into(),
            line: i + 1,
            message: e.to_string(),
        })?);
    }
    Ok(out)
}

pub fn load_jsonl<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<Vec<T>, EvalError> {
    let f = std::fs::File::open(path)?;
    read_jsonl(std::io::BufReader::new(f), &path.display().to_string())
}

/// Pairs responses with their trials, in response order.
pub fn join_responses(trials: &[Trial], responses: Vec<TrialResponse>) -> Result<Vec<(TrialResponse, Trial)>, EvalError> {
    let by_id: HashMap<&str, &Trial> = trials.iter().map(|t| (t.id.as_str(), t)).collect();
    responses
        .into_iter()
        .map(|r| {
            let t = by_id
                .get(r.trial_id.as_str())
                .ok_or_else(|| EvalError::UnknownTrial(r.trial_id.clone()))?;
            Ok((r, (*t).clone()))
        })
        .collect()
}

/// Plain-text table: one row per representation (and its DETECT variant),
/// precision@2 / recall@4 / n under each scoring function. `*` marks a
/// significant difference from the row without DETECT.
pub fn render_table(report: &MetricsReport) -> String {
    let mut rows: BTreeMap<(String, bool), BTreeMap<ScoringFn, &ConfigMetrics>> = BTreeMap::new();
    for c in &report.configs {
        rows.entry((c.config.representation.clone(), c.config.detect))
            .or_default()
            .insert(c.config.scoring_fn, c);
    }
    let star = |rep: &str, scoring: ScoringFn, metric: &str| {
        report
            .comparisons
            .iter()
            .any(|c| c.representation == rep && c.scoring_fn == scoring && c.metric == metric && c.significant())
    };
    let mut out = String::new();
    let _ = writeln!(out, "evaluation: {}", report.evaluation.label());
    let _ = writeln!(
        out,
        "{:<28} {:>10} {:>10} {:>6}   {:>10} {:>10} {:>6}",
        "", "g", "", "", "g_kim", "", ""
    );
    let _ = writeln!(
        out,
        "{:<28} {:>10} {:>10} {:>6}   {:>10} {:>10} {:>6}",
        "Word Representation", "P@2", "R@4", "n", "P@2", "R@4", "n"
    );
    let mut last_rep: Option<&str> = None;
    for ((rep, detect), cells) in &rows {
        if last_rep.is_some_and(|l| l != rep) {
            let _ = writeln!(out, "{}", "-".repeat(90));
        }
        last_rep = Some(rep);
        let label = if *detect { format!("{rep}+DETECT") } else { rep.clone() };
        let mut line = format!("{label:<28}");
        for scoring in [ScoringFn::Ours, ScoringFn::Kim] {
            match cells.get(&scoring) {
                Some(c) => {
                    let mark = |metric| if *detect && star(rep, scoring, metric) { "*" } else { "" };
                    let p = format!("{:.3}{}", c.precision_at_2, mark("precisionAt2"));
                    let r = format!("{:.3}{}", c.recall_at_4, mark("recallAt4"));
                    let _ = write!(line, " {p:>10} {r:>10} {:>6}  ", c.n);
                }
                None => {
                    let _ = write!(line, " {:>10} {:>10} {:>6}  ", "-", "-", "-");
                }
            }
        }
        let _ = writeln!(out, "{}", line.trim_end());
    }
    out
}
