//! Tokens, boards and the result record emitted by the clue-giver.

use std::collections::BTreeSet;
use std::fmt;

use rand::seq::IndexedRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::scoring::ScoreBreakdown;

/// Identifier of the generator used by [`generate_board`]. Stored next to
/// every generated board so runs can be reproduced.
pub const BOARD_RNG: &str = "chacha8";

#[derive(Debug, Error, PartialEq, Eq)]
pub enum BoardError {
    #[error("empty token")]
    EmptyToken,
    #[error("word list has {have} words, need at least {need}")]
    InsufficientWords { have: usize, need: usize },
    #[error("word list contains duplicate entry `{0}`")]
    DuplicateWord(String),
    #[error("malformed board: {0}")]
    MalformedBoard(String),
    #[error("`{0}` appears on both teams")]
    OverlappingTeams(String),
    #[error("blue team has {blue} words but red team has {red}")]
    WrongCount { blue: usize, red: usize },
    #[error("intended pair invalid: {0}")]
    InvalidPair(String),
}

/// A normalized word: lowercase, no whitespace, multi-word lemmas joined by `_`.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub struct WordToken(String);

impl WordToken {
    pub fn new(raw: &str) -> Result<Self, BoardError> {
        normalize_token(raw)
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }

    /// True when the token can be offered as a one-word clue: letters only.
    pub fn is_single_word(&self) -> bool {
        self.0.chars().all(char::is_alphabetic)
    }
}

impl fmt::Display for WordToken {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl AsRef<str> for WordToken {
    fn as_ref(&self) -> &str {
        &self.0
    }
}

impl std::borrow::Borrow<str> for WordToken {
    fn borrow(&self) -> &str {
        &self.0
    }
}

impl TryFrom<String> for WordToken {
    type Error = BoardError;

    fn try_from(value: String) -> Result<Self, Self::Error> {
        normalize_token(&value)
    }
}

impl From<WordToken> for String {
    fn from(value: WordToken) -> Self {
        value.0
    }
}

impl std::str::FromStr for WordToken {
    type Err = BoardError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        normalize_token(s)
    }
}

/// Lowercase, trim, and join internal whitespace runs with `_`.
pub fn normalize_token(raw: &str) -> Result<WordToken, BoardError> {
    let joined = raw.split_whitespace().collect::<Vec<_>>().join("_");
    if joined.is_empty() {
        return Err(BoardError::EmptyToken);
    }
    Ok(WordToken(joined.to_lowercase()))
}

/// Two equally sized, disjoint teams of words.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Board {
    blue: BTreeSet<WordToken>,
    red: BTreeSet<WordToken>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    seed: Option<u64>,
}

impl Board {
    pub fn new(
        blue: impl IntoIterator<Item = WordToken>,
        red: impl IntoIterator<Item = WordToken>,
    ) -> Result<Self, BoardError> {
        let blue_list: Vec<WordToken> = blue.into_iter().collect();
        let red_list: Vec<WordToken> = red.into_iter().collect();
        let blue: BTreeSet<_> = blue_list.iter().cloned().collect();
        let red: BTreeSet<_> = red_list.iter().cloned().collect();
        if let Some(dup) = first_duplicate(&blue_list).or_else(|| first_duplicate(&red_list)) {
            return Err(BoardError::MalformedBoard(format!("duplicate word `{dup}`")));
        }
        if let Some(shared) = blue.intersection(&red).next() {
            return Err(BoardError::OverlappingTeams(shared.to_string()));
        }
        if blue.len() != red.len() {
            return Err(BoardError::WrongCount {
                blue: blue.len(),
                red: red.len(),
            });
        }
        if blue.is_empty() {
            return Err(BoardError::MalformedBoard("board has no words".into()));
        }
        Ok(Self {
            blue,
            red,
            seed: None,
        })
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = Some(seed);
        self
    }

    pub fn blue(&self) -> &BTreeSet<WordToken> {
        &self.blue
    }

    pub fn red(&self) -> &BTreeSet<WordToken> {
        &self.red
    }

    pub fn seed(&self) -> Option<u64> {
        self.seed
    }

    pub fn per_team(&self) -> usize {
        self.blue.len()
    }

    /// All board words in lexicographic order.
    pub fn words(&self) -> Vec<WordToken> {
        let mut all: Vec<_> = self.blue.iter().chain(self.red.iter()).cloned().collect();
        all.sort();
        all
    }

    pub fn contains(&self, word: &str) -> bool {
        self.blue.contains(word) || self.red.contains(word)
    }

    /// Renders the board in the `blue: ...` / `red: ...` text format.
    pub fn to_text(&self) -> String {
        let join = |set: &BTreeSet<WordToken>| {
            set.iter().map(WordToken::as_str).collect::<Vec<_>>().join(", ")
        };
        let mut out = String::new();
        if let Some(seed) = self.seed {
            out.push_str(&format!("# seed {seed} ({BOARD_RNG})\n"));
        }
        out.push_str(&format!("blue: {}\nred: {}\n", join(&self.blue), join(&self.red)));
        out
    }
}

fn first_duplicate(words: &[WordToken]) -> Option<&WordToken> {
    let mut seen = BTreeSet::new();
    words.iter().find(|w| !seen.insert(*w))
}

/// Parses the board text format. Blank lines and `#` comments are ignored.
pub fn parse_board(document: &str) -> Result<Board, BoardError> {
    let mut blue = None;
    let mut red = None;
    for (lineno, line) in document.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (key, rest) = line.split_once(':').ok_or_else(|| {
            BoardError::MalformedBoard(format!("line {}: expected `team: words`", lineno + 1))
        })?;
        let words = rest
            .split(',')
            .map(normalize_token)
            .collect::<Result<Vec<_>, _>>()
            .map_err(|_| BoardError::MalformedBoard(format!("line {}: empty word", lineno + 1)))?;
        let slot = match key.trim().to_lowercase().as_str() {
            "blue" => &mut blue,
            "red" => &mut red,
            other => {
                return Err(BoardError::MalformedBoard(format!(
                    "line {}: unknown team `{other}`",
                    lineno + 1
                )))
            }
        };
        if slot.replace(words).is_some() {
            return Err(BoardError::MalformedBoard(format!(
                "line {}: team `{}` given twice",
                lineno + 1,
                key.trim()
            )));
        }
    }
    match (blue, red) {
        (Some(b), Some(r)) => Board::new(b, r),
        _ => Err(BoardError::MalformedBoard("missing `blue:` or `red:` line".into())),
    }
}

/// Parses one or more boards separated by blank lines.
pub fn parse_boards(document: &str) -> Result<Vec<Board>, BoardError> {
    let mut boards = Vec::new();
    let mut block = String::new();
    let mut flush = |block: &mut String| -> Result<(), BoardError> {
        let has_content = block
            .lines()
            .any(|l| !l.trim().is_empty() && !l.trim().starts_with('#'));
        if has_content {
            let seed = block.lines().find_map(|l| {
                let rest = l.trim().strip_prefix("# seed ")?;
                rest.split_whitespace().next()?.parse::<u64>().ok()
            });
            let board = parse_board(block)?;
            boards.push(match seed {
                Some(s) => board.with_seed(s),
                None => board,
            });
        }
        block.clear();
        Ok(())
    };
    for line in document.lines() {
        if line.trim().is_empty() {
            flush(&mut block)?;
        } else {
            block.push_str(line);
            block.push('\n');
        }
    }
    flush(&mut block)?;
    if boards.is_empty() {
        return Err(BoardError::MalformedBoard("no board found".into()));
    }
    Ok(boards)
}

/// Samples `2 * per_team` distinct words without replacement; the first half
/// becomes the blue team.
pub fn generate_board(wordlist: &[WordToken], per_team: usize, seed: u64) -> Result<Board, BoardError> {
    let need = 2 * per_team;
    if wordlist.len() < need || per_team == 0 {
        return Err(BoardError::InsufficientWords {
            have: wordlist.len(),
            need: need.max(2),
        });
    }
    if let Some(dup) = first_duplicate(wordlist) {
        return Err(BoardError::DuplicateWord(dup.to_string()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let picked: Vec<WordToken> = wordlist.sample(&mut rng, need).cloned().collect();
    let (blue, red) = picked.split_at(per_team);
    Ok(Board::new(blue.to_vec(), red.to_vec())?.with_seed(seed))
}

/// `m` distinct blue words the clue is meant to point at.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct IntendedPair {
    words: Vec<WordToken>,
}

impl IntendedPair {
    pub fn new(board: &Board, words: impl IntoIterator<Item = WordToken>) -> Result<Self, BoardError> {
        let set: BTreeSet<WordToken> = words.into_iter().collect();
        if set.is_empty() {
            return Err(BoardError::InvalidPair("no words".into()));
        }
        if let Some(stray) = set.iter().find(|w| !board.blue().contains(*w)) {
            return Err(BoardError::InvalidPair(format!("`{stray}` is not a blue word")));
        }
        Ok(Self {
            words: set.into_iter().collect(),
        })
    }

    /// Builds a pair from already-validated blue words.
    pub(crate) fn from_sorted(words: Vec<WordToken>) -> Self {
        debug_assert!(words.windows(2).all(|w| w[0] < w[1]));
        Self { words }
    }

    /// Words in lexicographic order.
    pub fn words(&self) -> &[WordToken] {
        &self.words
    }

    pub fn len(&self) -> usize {
        self.words.len()
    }

    pub fn is_empty(&self) -> bool {
        self.words.is_empty()
    }

    pub fn contains(&self, word: &str) -> bool {
        self.words.iter().any(|w| w.as_str() == word)
    }
}

impl fmt::Display for IntendedPair {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<&str> = self.words.iter().map(WordToken::as_str).collect();
        f.write_str(&parts.join(", "))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ScoringFn {
    Ours,
    Kim,
}

impl fmt::Display for ScoringFn {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ScoringFn::Ours => "ours",
            ScoringFn::Kim => "kim",
        })
    }
}

impl std::str::FromStr for ScoringFn {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "ours" | "g" => Ok(ScoringFn::Ours),
            "kim" | "gkim" => Ok(ScoringFn::Kim),
            other => Err(format!("unknown scoring function `{other}` (expected ours|kim)")),
        }
    }
}

/// How the candidate set for the winning pair was formed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CandidateOrigin {
    /// Union of the intended words' nearest neighbors (embedding sources).
    Union,
    /// Tokens shared by every intended word's graph neighborhood.
    Intersection,
    /// The graph neighborhoods were disjoint; the clue may only cover one word.
    UnionFallback,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClueResult {
    pub clue: WordToken,
    pub intended: IntendedPair,
    pub score: f64,
    pub breakdown: ScoreBreakdown,
    pub representation: String,
    pub scoring_fn: ScoringFn,
    pub detect: bool,
    pub candidate_origin: CandidateOrigin,
    /// Set when no candidate met the Kim constraints and ranking fell back to
    /// the minimum blue similarity.
    #[serde(default)]
    pub kim_relaxed: bool,
}
