//! Clue scoring: the red-penalized sum `g`, Kim et al.'s thresholded `g_kim`,
//! and the DETECT re-weighting term built from FREQ and dictionary
//! embeddings.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::babelnet::{LabelMode, LabelWeights, DEFAULT_LEVELS};
use crate::board::{IntendedPair, ScoringFn, WordToken};
use crate::corpusfreq::{freq_score, DocFreqTable, FreqParams, DEFAULT_ALPHA};
use crate::embeddings::EmbeddingStore;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ScoringParams {
    pub lambda_b: f64,
    pub lambda_r: f64,
    /// Minimum blue similarity a `g_kim` clue must exceed. No published
    /// value exists; tune per representation.
    pub lambda_t: f64,
    pub lambda_f: f64,
    pub lambda_d: f64,
    pub alpha: f64,
    pub weights: LabelWeights,
    pub label_mode: LabelMode,
    /// Nearest neighbors taken per blue word (embedding sources only).
    pub t: usize,
    /// Intended words per clue.
    pub m: usize,
    /// Maximum graph path length.
    pub levels: usize,
    /// Also reject clues sharing a crude stem with a board word.
    pub exclude_stems: bool,
}

impl Default for ScoringParams {
    fn default() -> Self {
        Self {
            lambda_b: 1.0,
            lambda_r: 0.5,
            lambda_t: 0.3,
            lambda_f: 2.0,
            lambda_d: 2.0,
            alpha: DEFAULT_ALPHA,
            weights: LabelWeights::default(),
            label_mode: LabelMode::Overwrite,
            t: 500,
            m: 2,
            levels: DEFAULT_LEVELS,
            exclude_stems: false,
        }
    }
}

impl ScoringParams {
    pub fn validate(&self) -> Result<(), String> {
        let finite = [
            self.lambda_b,
            self.lambda_r,
            self.lambda_t,
            self.lambda_f,
            self.lambda_d,
            self.alpha,
        ]
        .iter()
        .all(|v| v.is_finite());
        if !finite {
            return Err("scoring parameters must be finite".into());
        }
        if self.lambda_b < 0.0 || self.lambda_r < 0.0 || self.lambda_f < 0.0 || self.lambda_d < 0.0 {
            return Err("lambda_b, lambda_r, lambda_f and lambda_d must be non-negative".into());
        }
        if !(self.alpha > 0.0 && self.alpha <= 1.0) {
            return Err("alpha must lie in (0, 1]".into());
        }
        if self.m == 0 || self.t == 0 || self.levels == 0 {
            return Err("m, t and levels must be at least 1".into());
        }
        if !self.weights.is_ordered() {
            return Err("label weights must satisfy 0 < w1 <= w2 <= w3 <= w4".into());
        }
        Ok(())
    }

    pub fn freq_params(&self) -> FreqParams {
        FreqParams { alpha: self.alpha }
    }
}

/// s(clue, w) for the intended words and for every red word.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimilarityProfile {
    pub clue: WordToken,
    pub blue_sims: BTreeMap<WordToken, f64>,
    pub red_sims: BTreeMap<WordToken, f64>,
}

impl SimilarityProfile {
    pub fn red_max(&self) -> Option<f64> {
        self.red_sims.values().copied().reduce(f64::max)
    }

    pub fn blue_min(&self) -> f64 {
        self.blue_sims.values().copied().fold(f64::INFINITY, f64::min)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct ScoreBreakdown {
    /// `g` or `g_kim` (or the relaxed minimum blue similarity).
    pub base: f64,
    pub freq_term: f64,
    /// Sum over intended words of `1 - DICT(clue, b)`.
    pub dict_blue_sum: f64,
    /// Max over red words of `1 - DICT(clue, r)`.
    pub dict_red_max: f64,
    pub detect: f64,
    pub total: f64,
    /// Always true for `ours`.
    pub kim_constraint_passed: bool,
}

impl ScoreBreakdown {
    pub fn recompute_detect(&self, params: &ScoringParams) -> f64 {
        detect_value(self.freq_term, self.dict_blue_sum, self.dict_red_max, params)
    }

    pub fn recompute_total(&self, detect_enabled: bool) -> f64 {
        if detect_enabled {
            self.base + self.detect
        } else {
            self.base
        }
    }
}

/// `lambda_b * sum_b s(c, b) - lambda_r * max_r s(c, r)`; no red words, no penalty.
pub fn score_g(profile: &SimilarityProfile, params: &ScoringParams) -> f64 {
    g_value(profile.blue_sims.values().copied(), profile.red_max(), params)
}

/// `score_g` over raw similarities, blue values in intended-word order.
pub fn g_value(blue: impl IntoIterator<Item = f64>, red_max: Option<f64>, params: &ScoringParams) -> f64 {
    let blue: f64 = blue.into_iter().sum();
    params.lambda_b * blue - params.lambda_r * red_max.unwrap_or(0.0)
}

/// `(min_b s(c, b), true)` when that minimum beats both `lambda_t` and every
/// red similarity, otherwise `(0, false)`.
pub fn score_gkim(profile: &SimilarityProfile, params: &ScoringParams) -> (f64, bool) {
    gkim_value(profile.blue_min(), profile.red_max(), params)
}

pub fn gkim_value(min_blue: f64, red_max: Option<f64>, params: &ScoringParams) -> (f64, bool) {
    let beats_red = red_max.is_none_or(|r| min_blue > r);
    if min_blue > params.lambda_t && beats_red {
        (min_blue, true)
    } else {
        (0.0, false)
    }
}

/// Cosine distance in the dictionary-embedding space; 1 when either word is
/// out of vocabulary.
pub fn dict_relatedness(dict: &EmbeddingStore, w1: &str, w2: &str) -> f64 {
    match dict.similarity(w1, w2) {
        Ok(sim) => 1.0 - sim,
        Err(_) => 1.0,
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DetectTerms {
    pub freq_term: f64,
    pub dict_blue_sum: f64,
    pub dict_red_max: f64,
    pub detect: f64,
}

pub fn detect_terms<'a>(
    clue: &str,
    intended: impl IntoIterator<Item = &'a WordToken>,
    red: impl IntoIterator<Item = &'a WordToken>,
    df: &DocFreqTable,
    dict: &EmbeddingStore,
    params: &ScoringParams,
) -> DetectTerms {
    let mut blue: Vec<&WordToken> = intended.into_iter().collect();
    blue.sort();
    let freq_term = freq_score(df, clue, params.freq_params());
    let dict_blue_sum: f64 = blue.iter().map(|b| 1.0 - dict_relatedness(dict, clue, b.as_str())).sum();
    let dict_red_max = red
        .into_iter()
        .map(|r| 1.0 - dict_relatedness(dict, clue, r.as_str()))
        .reduce(f64::max)
        .unwrap_or(0.0);
    let detect = detect_value(freq_term, dict_blue_sum, dict_red_max, params);
    DetectTerms {
        freq_term,
        dict_blue_sum,
        dict_red_max,
        detect,
    }
}

pub fn detect_value(freq_term: f64, dict_blue_sum: f64, dict_red_max: f64, params: &ScoringParams) -> f64 {
    params.lambda_f * freq_term + params.lambda_d * (dict_blue_sum - dict_red_max)
}

/// DETECT(c) for an intended set and red team.
pub fn detect_score<'a>(
    clue: &str,
    intended: &'a IntendedPair,
    red: impl IntoIterator<Item = &'a WordToken>,
    df: &DocFreqTable,
    dict: &EmbeddingStore,
    params: &ScoringParams,
) -> f64 {
    detect_terms(clue, intended.words(), red, df, dict, params).detect
}

/// Value used to rank a candidate. A Kim candidate that failed its
/// constraints gets `-inf`, so DETECT cannot promote it.
pub fn total_score(base: f64, passed: bool, detect: f64, scoring_fn: ScoringFn, detect_enabled: bool) -> f64 {
    let extra = if detect_enabled { detect } else { 0.0 };
    match scoring_fn {
        ScoringFn::Ours => base + extra,
        ScoringFn::Kim if passed => base + extra,
        ScoringFn::Kim => f64::NEG_INFINITY,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::embeddings::load_embeddings;
    use proptest::prelude::*;

    fn tok(s: &str) -> WordToken {
        WordToken::new(s).unwrap()
    }

    fn profile(blue: &[f64], red: &[f64]) -> SimilarityProfile {
        SimilarityProfile {
            clue: tok("clue"),
            blue_sims: blue.iter().enumerate().map(|(i, &s)| (tok(&format!("b{i}")), s)).collect(),
            red_sims: red.iter().enumerate().map(|(i, &s)| (tok(&format!("r{i}")), s)).collect(),
        }
    }

    #[test]
    fn g_examples() {
        let p = ScoringParams::default();
        assert!((score_g(&profile(&[0.6, 0.5], &[0.4]), &p) - 0.9).abs() < 1e-12);
        assert_eq!(score_g(&profile(&[0.0, 0.0], &[0.0, 0.0]), &p), 0.0);
        let a = score_g(&profile(&[0.6, 0.5], &[0.4]), &p);
        let b = score_g(&profile(&[0.6, 0.5], &[0.4, 0.3]), &p);
        assert_eq!(a, b);
        assert!((score_g(&profile(&[0.6, 0.5], &[]), &p) - 1.1).abs() < 1e-12);
    }

    #[test]
    fn gkim_examples() {
        let p = ScoringParams {
            lambda_t: 0.3,
            ..Default::default()
        };
        assert_eq!(score_gkim(&profile(&[0.5, 0.7], &[0.4]), &p), (0.5, true));
        assert_eq!(score_gkim(&profile(&[0.2, 0.7], &[0.1]), &p), (0.0, false));
        assert_eq!(score_gkim(&profile(&[0.5, 0.7], &[0.6]), &p), (0.0, false));
    }

    #[test]
    fn dict_examples() {
        let dict = load_embeddings("a 1 0\nb 0 1\n".as_bytes(), "dict").unwrap();
        assert_eq!(dict_relatedness(&dict, "a", "a"), 0.0);
        assert_eq!(dict_relatedness(&dict, "a", "b"), 1.0);
        assert_eq!(dict_relatedness(&dict, "a", "zzz"), 1.0);
    }

    #[test]
    fn detect_examples() {
        // Vectors chosen so cosines to the clue are 0.7, 0.6 (blue) and 0.5 (red).
        let unit = |c: f64| format!("{} {}", c, (1.0 - c * c).sqrt());
        let text = format!(
            "clue 1 0\nb1 {}\nb2 {}\nr1 {}\n",
            unit(0.7),
            unit(0.6),
            unit(0.5)
        );
        let dict = load_embeddings(text.as_bytes(), "dict").unwrap();
        let df = DocFreqTable::from_counts([("clue", 100)], 5000).unwrap();
        let board = crate::board::parse_board("blue: b1, b2\nred: r1, r2").unwrap();
        let pair = IntendedPair::new(&board, [tok("b1"), tok("b2")]).unwrap();
        let p = ScoringParams::default();
        let d = detect_score("clue", &pair, [&tok("r1")], &df, &dict, &p);
        assert!((d - 1.58).abs() < 1e-6, "{d}");

        let empty_df = DocFreqTable::from_counts([("other", 1)], 1).unwrap();
        let d = detect_score("unknown", &pair, [&tok("r1")], &empty_df, &dict, &p);
        assert_eq!(d, -2.0);

        let zero = ScoringParams {
            lambda_f: 0.0,
            lambda_d: 0.0,
            ..Default::default()
        };
        assert_eq!(detect_score("clue", &pair, [&tok("r1")], &df, &dict, &zero), 0.0);
    }

    #[test]
    fn total_examples() {
        assert!((total_score(0.9, true, 1.58, ScoringFn::Ours, true) - 2.48).abs() < 1e-12);
        assert_eq!(total_score(0.0, false, 5.0, ScoringFn::Kim, true), f64::NEG_INFINITY);
        assert_eq!(total_score(0.9, true, 1.58, ScoringFn::Ours, false), 0.9);
        assert_eq!(total_score(0.4, true, 1.0, ScoringFn::Kim, false), 0.4);
    }

    #[test]
    fn params_validation() {
        assert!(ScoringParams::default().validate().is_ok());
        assert!(ScoringParams { m: 0, ..Default::default() }.validate().is_err());
        assert!(ScoringParams { alpha: 0.0, ..Default::default() }.validate().is_err());
        assert!(ScoringParams { lambda_b: -1.0, ..Default::default() }.validate().is_err());
    }

    proptest! {
        #[test]
        fn g_is_permutation_invariant(blue in prop::collection::vec(-1.0f64..1.0, 2..4),
                                      red in prop::collection::vec(-1.0f64..1.0, 0..6),
                                      rot in 0usize..6) {
            let p = ScoringParams::default();
            let base = score_g(&profile(&blue, &red), &p);
            let mut red2 = red.clone();
            if !red2.is_empty() { let k = rot % red2.len(); red2.rotate_left(k); }
            prop_assert_eq!(base, score_g(&profile(&blue, &red2), &p));
            let mut blue2 = blue.clone();
            blue2.rotate_left(rot % blue.len());
            prop_assert!((base - score_g(&profile(&blue2, &red), &p)).abs() < 1e-12);
        }

        #[test]
        fn g_is_monotone(blue in prop::collection::vec(-1.0f64..1.0, 2..4),
                         red in prop::collection::vec(-1.0f64..1.0, 1..6),
                         bump in 0.0f64..0.5, which in 0usize..6) {
            let p = ScoringParams::default();
            let base = score_g(&profile(&blue, &red), &p);
            let mut up = blue.clone();
            let i = which % up.len();
            up[i] += bump;
            prop_assert!(score_g(&profile(&up, &red), &p) >= base);
            let mut worse = red.clone();
            let j = which % worse.len();
            worse[j] += bump;
            prop_assert!(score_g(&profile(&blue, &worse), &p) <= base);
        }

        #[test]
        fn gkim_positive_iff_passed(blue in prop::collection::vec(0.0f64..1.0, 2..4),
                                    red in prop::collection::vec(0.0f64..1.0, 0..6)) {
            let p = ScoringParams::default();
            let (score, passed) = score_gkim(&profile(&blue, &red), &p);
            prop_assert_eq!(score > 0.0, passed);
            if passed {
                prop_assert_eq!(score, blue.iter().copied().fold(f64::INFINITY, f64::min));
            }
        }
    }
}
