//! Codenames clue giving over word embeddings and BabelNet subgraphs.

pub mod babelnet;
pub mod board;
pub mod cli;
pub mod cluegiver;
pub mod config;
pub mod corpusfreq;
pub mod embeddings;
pub mod engine;
pub mod eval;
pub mod numeric;
pub mod scoring;
pub mod service;

pub use board::{Board, BoardError, CandidateOrigin, ClueResult, IntendedPair, ScoringFn, WordToken};
pub use cluegiver::{choose_clue, ClueError, ClueRequest, DetectResources, RelatednessSource};
pub use scoring::ScoringParams;
