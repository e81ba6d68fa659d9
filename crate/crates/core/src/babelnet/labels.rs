use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::board::WordToken;

/// Per-label-type weights; lower is better. Main-sense single word, main-sense
/// multi-word, other-sense single word, other-sense multi-word.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LabelWeights {
    pub w1: f64,
    pub w2: f64,
    pub w3: f64,
    pub w4: f64,
}

impl Default for LabelWeights {
    fn default() -> Self {
        Self {
            w1: 1.0,
            w2: 1.1,
            w3: 1.1,
            w4: 1.2,
        }
    }
}

impl LabelWeights {
    pub fn is_ordered(&self) -> bool {
        self.w1 > 0.0 && self.w1 <= self.w2 && self.w2 <= self.w3 && self.w3 <= self.w4
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum LabelMode {
    /// Later label writes replace earlier ones.
    #[default]
    Overwrite,
    /// Each token keeps the smallest weight it was assigned.
    MinWeight,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WeightedLabel {
    pub token: WordToken,
    pub weight: f64,
}

fn split_label(label: &str) -> Vec<WordToken> {
    label
        .split(|c: char| c == '_' || c.is_whitespace())
        .filter(|w| !w.is_empty())
        .filter_map(|w| WordToken::new(w).ok())
        .collect()
}

/// Breaks a synset's labels into single words with a weight per word.
///
/// The main sense is written first, then each other sense in order. In
/// `Overwrite` mode a word seen again takes the weight of its latest label.
pub fn extract_single_word_labels(
    main_sense: &str,
    other_senses: &[String],
    weights: LabelWeights,
    mode: LabelMode,
) -> BTreeMap<WordToken, f64> {
    let mut out: BTreeMap<WordToken, f64> = BTreeMap::new();
    let mut write = |token: WordToken, weight: f64| match mode {
        LabelMode::Overwrite => {
            out.insert(token, weight);
        }
        LabelMode::MinWeight => {
            let slot = out.entry(token).or_insert(weight);
            *slot = slot.min(weight);
        }
    };

    let main = split_label(main_sense);
    if main.len() == 1 {
        write(main[0].clone(), weights.w1);
    } else {
        for word in main {
            write(word, weights.w2);
        }
    }
    for sense in other_senses {
        let parts = split_label(sense);
        if parts.len() == 1 {
            write(parts[0].clone(), weights.w3);
        } else {
            for word in parts {
                write(word, weights.w4);
            }
        }
    }
    out
}
