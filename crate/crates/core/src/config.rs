//! Engine configuration file (TOML).

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::embeddings::{HnswParams, IndexMode};
use crate::scoring::ScoringParams;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read {path}: {source}")]
    Read { path: PathBuf, source: std::io::Error },
    #[error("cannot parse {path}: {message}")]
    Parse { path: PathBuf, message: String },
    #[error("{0}")]
    Invalid(String),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum RepresentationKind {
    Embedding {
        path: PathBuf,
        #[serde(default)]
        index: IndexMode,
        #[serde(default)]
        hnsw: HnswParams,
        /// Keep only the k most frequent tokens (needs `docfreq`).
        #[serde(default)]
        top_common: Option<usize>,
    },
    Graph {
        #[serde(default)]
        cache_dir: Option<PathBuf>,
        /// Offline synset graph file; used when a word is not cached.
        #[serde(default)]
        fixture: Option<PathBuf>,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RepresentationConfig {
    pub name: String,
    #[serde(flatten)]
    pub kind: RepresentationKind,
    /// Overrides `params.lambda_d` for this representation.
    #[serde(default)]
    pub lambda_d: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct EngineConfig {
    #[serde(rename = "representation")]
    pub representations: Vec<RepresentationConfig>,
    pub dict: Option<PathBuf>,
    pub docfreq: Option<PathBuf>,
    pub wordlist: Option<PathBuf>,
    pub results_dir: PathBuf,
    pub static_dir: Option<PathBuf>,
    pub port: u16,
    pub params: ScoringParams,
}

impl Default for EngineConfig {
    fn default() -> Self {
        Self {
            representations: Vec::new(),
            dict: None,
            docfreq: None,
            wordlist: None,
            results_dir: PathBuf::from("results"),
            static_dir: None,
            port: 8080,
            params: ScoringParams::default(),
        }
    }
}

impl EngineConfig {
    pub fn parse(text: &str, label: &Path) -> Result<Self, ConfigError> {
        toml::from_str(text).map_err(|e| ConfigError::Parse {
            path: label.to_path_buf(),
            message: e.to_string(),
        })
    }

    /// Reads a config file; relative paths are taken relative to its directory.
    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Read {
            path: path.to_path_buf(),
            source,
        })?;
        let mut cfg = Self::parse(&text, path)?;
        let base = path.parent().unwrap_or(Path::new("."));
        cfg.rebase(base);
        Ok(cfg)
    }

    pub fn rebase(&mut self, base: &Path) {
        let fix = |p: &mut PathBuf| {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        };
        for r in &mut self.representations {
            match &mut r.kind {
                RepresentationKind::Embedding { path, .. } => fix(path),
                RepresentationKind::Graph { cache_dir, fixture } => {
                    cache_dir.iter_mut().for_each(fix);
                    fixture.iter_mut().for_each(fix);
                }
            }
        }
        self.dict.iter_mut().for_each(fix);
        self.docfreq.iter_mut().for_each(fix);
        self.wordlist.iter_mut().for_each(fix);
        self.static_dir.iter_mut().for_each(fix);
        fix(&mut self.results_dir);
    }

    /// Parameter and path checks. Cache directories may be absent (nothing
    /// fetched yet); files must exist.
    pub fn validate(&self) -> Result<(), ConfigError> {
        self.params.validate().map_err(ConfigError::Invalid)?;
        let must_exist = |p: &Path, what: &str| {
            if p.is_file() {
                Ok(())
            } else {
                Err(ConfigError::Invalid(format!("{what} {} does not exist", p.display())))
            }
        };
        let mut names = std::collections::BTreeSet::new();
        for r in &self.representations {
            if !names.insert(r.name.as_str()) {
                return Err(ConfigError::Invalid(format!("representation `{}` defined twice", r.name)));
            }
            if let Some(ld) = r.lambda_d {
                if !ld.is_finite() || ld < 0.0 {
                    return Err(ConfigError::Invalid(format!("lambda_d of `{}` must be finite and >= 0", r.name)));
                }
            }
            match &r.kind {
                RepresentationKind::Embedding { path, top_common, .. } => {
                    must_exist(path, "embedding file")?;
                    if top_common.is_some() && self.docfreq.is_none() {
                        return Err(ConfigError::Invalid(format!(
                            "`{}` uses top_common but no docfreq table is configured",
                            r.name
                        )));
                    }
                }
                RepresentationKind::Graph { cache_dir, fixture } => {
                    if cache_dir.is_none() && fixture.is_none() {
                        return Err(ConfigError::Invalid(format!(
                            "graph representation `{}` needs cache_dir or fixture",
                            r.name
                        )));
                    }
                    if let Some(f) = fixture {
                        must_exist(f, "fixture graph")?;
                    }
                }
            }
        }
        for (p, what) in [(&self.dict, "dict embedding"), (&self.docfreq, "docfreq table"), (&self.wordlist, "word list")] {
            if let Some(p) = p {
                must_exist(p, what)?;
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_sections() {
        let text = r#"
port = 9000
docfreq = "df.tsv"

[params]
lambda_r = 0.25
t = 100

[[representation]]
name = "glove10k"
kind = "embedding"
path = "glove.txt"
top_common = 10000
lambda_d = 1.0

[[representation]]
name = "babelnet"
kind = "graph"
cache_dir = "cache"
"#;
        let mut cfg = EngineConfig::parse(text, Path::new("x.toml")).unwrap();
        assert_eq!(cfg.port, 9000);
        assert_eq!(cfg.params.lambda_r, 0.25);
        assert_eq!(cfg.params.lambda_b, 1.0);
        assert_eq!(cfg.params.t, 100);
        assert_eq!(cfg.representations.len(), 2);
        assert_eq!(cfg.representations[0].lambda_d, Some(1.0));
        cfg.rebase(Path::new("/etc/cn"));
        assert_eq!(cfg.docfreq.as_deref(), Some(Path::new("/etc/cn/df.tsv")));
        match &cfg.representations[1].kind {
            RepresentationKind::Graph { cache_dir, .. } => assert_eq!(cache_dir.as_deref(), Some(Path::new("/etc/cn/cache"))),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn missing_files_fail_validation() {
        let text = "[[representation]]\nname = \"w2v\"\nkind = \"embedding\"\npath = \"/nonexistent/w2v.txt\"\n";
        let cfg = EngineConfig::parse(text, Path::new("x.toml")).unwrap();
        assert!(cfg.validate().is_err());
    }
}
