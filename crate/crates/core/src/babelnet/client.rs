use std::path::PathBuf;
use std::sync::Mutex;
use std::time::{Duration, Instant};

use serde_json::Value;
use url::Url;

use crate::board::WordToken;

use super::{BabelNetError, Edge, GraphSource, RelationMap, Synset};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct HttpResponse {
    pub status: u16,
    pub body: String,
}

/// Blocking GET; swapped out in tests.
pub trait HttpTransport: Send + Sync {
    fn get(&self, url: &Url) -> Result<HttpResponse, String>;
}

pub struct ReqwestTransport {
    client: reqwest::blocking::Client,
}

impl ReqwestTransport {
    pub fn new(timeout: Duration) -> Result<Self, BabelNetError> {
        let client = reqwest::blocking::Client::builder()
            .timeout(timeout)
            .build()
            .map_err(|e| BabelNetError::NetworkFailure(e.to_string()))?;
        Ok(Self { client })
    }
}

impl HttpTransport for ReqwestTransport {
    fn get(&self, url: &Url) -> Result<HttpResponse, String> {
        let resp = self.client.get(url.clone()).send().map_err(|e| e.to_string())?;
        let status = resp.status().as_u16();
        let body = resp.text().map_err(|e| e.to_string())?;
        Ok(HttpResponse { status, body })
    }
}

/// Token bucket holding at most one day's budget, refilled continuously.
#[derive(Debug)]
pub struct RateLimiter {
    capacity: f64,
    tokens: f64,
    per_second: f64,
    last: Instant,
}

impl RateLimiter {
    pub fn per_day(budget: u32) -> Self {
        Self::starting_at(budget, Instant::now())
    }

    pub fn starting_at(budget: u32, now: Instant) -> Self {
        let capacity = f64::from(budget);
        Self {
            capacity,
            tokens: capacity,
            per_second: capacity / 86_400.0,
            last: now,
        }
    }

    pub fn try_acquire_at(&mut self, now: Instant) -> bool {
        let elapsed = now.saturating_duration_since(self.last).as_secs_f64();
        self.tokens = (self.tokens + elapsed * self.per_second).min(self.capacity);
        self.last = now;
        if self.tokens >= 1.0 {
            self.tokens -= 1.0;
            true
        } else {
            false
        }
    }

    pub fn try_acquire(&mut self) -> bool {
        self.try_acquire_at(Instant::now())
    }
}

#[derive(Debug, Clone)]
pub struct ClientConfig {
    pub base_url: Url,
    pub key: Option<String>,
    pub cache_dir: PathBuf,
    pub requests_per_day: u32,
    pub max_retries: u32,
    pub backoff_base: Duration,
    pub relations: RelationMap,
    pub lang: String,
}

impl ClientConfig {
    pub fn new(cache_dir: impl Into<PathBuf>) -> Self {
        Self {
            base_url: Url::parse("https://babelnet.io/v9/").expect("static url"),
            key: std::env::var("BABELNET_KEY").ok().filter(|k| !k.is_empty()),
            cache_dir: cache_dir.into(),
            requests_per_day: 1000,
            max_retries: 4,
            backoff_base: Duration::from_millis(500),
            relations: RelationMap::default(),
            lang: "EN".into(),
        }
    }
}

/// BabelNet REST client. Every successful response is kept on disk under
/// `<cache_dir>/http/` and served from there on later calls, so a warmed
/// cache needs neither network nor key.
pub struct BabelNetClient {
    config: ClientConfig,
    transport: Box<dyn HttpTransport>,
    limiter: Mutex<RateLimiter>,
}

impl BabelNetClient {
    pub fn new(config: ClientConfig, transport: Box<dyn HttpTransport>) -> Self {
        let limiter = Mutex::new(RateLimiter::per_day(config.requests_per_day));
        Self {
            config,
            transport,
            limiter,
        }
    }

    pub fn with_reqwest(config: ClientConfig) -> Result<Self, BabelNetError> {
        let transport = ReqwestTransport::new(Duration::from_secs(30))?;
        Ok(Self::new(config, Box::new(transport)))
    }

    fn cache_path(&self, endpoint: &str, param: &str) -> PathBuf {
        let safe: String = param
            .chars()
            .map(|c| if c.is_ascii_alphanumeric() || c == '_' || c == '-' { c } else { '%' })
            .collect();
        // Disambiguate escaped names by appending the raw length and a hash.
        let digest = param.bytes().fold(0xcbf29ce484222325u64, |h, b| {
            (h ^ u64::from(b)).wrapping_mul(0x100000001b3)
        });
        self.config
            .cache_dir
            .join("http")
            .join(endpoint)
            .join(format!("{safe}.{digest:016x}.json"))
    }

    fn fetch(&self, endpoint: &str, param_name: &str, param: &str) -> Result<Value, BabelNetError> {
        let path = self.cache_path(endpoint, param);
        if let Ok(text) = std::fs::read_to_string(&path) {
            return serde_json::from_str(&text).map_err(|e| BabelNetError::BadResponse(e.to_string()));
        }
        let key = self.config.key.as_deref().ok_or(BabelNetError::MissingKey)?;
        let mut url = self
            .config
            .base_url
            .join(endpoint)
            .map_err(|e| BabelNetError::BadResponse(e.to_string()))?;
        url.query_pairs_mut()
            .append_pair(param_name, param)
            .append_pair("key", key);
        if endpoint == "getSynsetIds" {
            url.query_pairs_mut().append_pair("searchLang", &self.config.lang);
        } else if endpoint == "getSynset" {
            url.query_pairs_mut().append_pair("targetLang", &self.config.lang);
        }

        let body = self.get_with_retry(&url)?;
        let value: Value = serde_json::from_str(&body).map_err(|e| BabelNetError::BadResponse(e.to_string()))?;
        if let Some(msg) = value.get("message").and_then(Value::as_str) {
            return Err(if msg.to_lowercase().contains("limit") {
                BabelNetError::ApiQuotaExceeded
            } else {
                BabelNetError::BadResponse(msg.to_string())
            });
        }
        if let Some(parent) = path.parent() {
            std::fs::create_dir_all(parent)?;
        }
        let tmp = path.with_extension("tmp");
        std::fs::write(&tmp, &body)?;
        std::fs::rename(&tmp, &path)?;
        Ok(value)
    }

    fn get_with_retry(&self, url: &Url) -> Result<String, BabelNetError> {
        let mut attempt = 0;
        loop {
            if !self.limiter.lock().expect("limiter poisoned").try_acquire() {
                return Err(BabelNetError::ApiQuotaExceeded);
            }
            let outcome = self.transport.get(url);
            let retryable = match &outcome {
                Ok(r) if r.status == 200 => return Ok(outcome.unwrap().body),
                Ok(r) if r.status == 429 || r.status >= 500 => true,
                Ok(r) => {
                    return Err(BabelNetError::BadResponse(format!("HTTP {}", r.status)));
                }
                Err(_) => true,
            };
            if !retryable || attempt >= self.config.max_retries {
                return Err(match outcome {
                    Ok(r) if r.status == 429 => BabelNetError::ApiQuotaExceeded,
                    Ok(r) => BabelNetError::NetworkFailure(format!("HTTP {}", r.status)),
                    Err(e) => BabelNetError::NetworkFailure(e),
                });
            }
            let delay = self.config.backoff_base * 2u32.pow(attempt);
            log::debug!("retrying {} in {:?}", url.path(), delay);
            std::thread::sleep(delay);
            attempt += 1;
        }
    }

    fn parse_synset(&self, id: &str, value: &Value) -> Result<Synset, BabelNetError> {
        let senses = value
            .get("senses")
            .and_then(Value::as_array)
            .ok_or_else(|| BabelNetError::BadResponse(format!("synset {id} has no senses")))?;
        let mut lemmas: Vec<String> = Vec::new();
        let mut pos = String::new();
        for sense in senses {
            let props = sense.get("properties").unwrap_or(sense);
            let lang = props.get("language").and_then(Value::as_str).unwrap_or("EN");
            if !lang.eq_ignore_ascii_case(&self.config.lang) {
                continue;
            }
            let lemma = props
                .get("fullLemma")
                .or_else(|| props.get("lemma"))
                .and_then(|l| l.as_str().or_else(|| l.get("lemma").and_then(Value::as_str)));
            if let Some(lemma) = lemma {
                if !lemmas.iter().any(|l| l.eq_ignore_ascii_case(lemma)) {
                    lemmas.push(lemma.to_string());
                }
            }
            if pos.is_empty() {
                pos = props.get("pos").and_then(Value::as_str).unwrap_or_default().to_string();
            }
        }
        let main = value
            .get("mainSense")
            .and_then(Value::as_str)
            .map(str::to_string)
            .or_else(|| lemmas.first().cloned())
            .ok_or_else(|| BabelNetError::BadResponse(format!("synset {id} has no {} senses", self.config.lang)))?;
        let other_senses = lemmas.into_iter().filter(|l| !l.eq_ignore_ascii_case(&main)).collect();
        let definition = value
            .get("glosses")
            .and_then(Value::as_array)
            .and_then(|g| g.first())
            .and_then(|g| g.get("gloss"))
            .and_then(Value::as_str)
            .map(str::to_string);
        Ok(Synset {
            id: id.to_string(),
            main_sense: main,
            other_senses,
            pos,
            definition,
        })
    }
}

impl GraphSource for BabelNetClient {
    fn synsets_for(&self, word: &WordToken) -> Result<Vec<Synset>, BabelNetError> {
        let value = self.fetch("getSynsetIds", "lemma", word.as_str())?;
        let ids: Vec<String> = value
            .as_array()
            .map(|a| {
                a.iter()
                    .filter_map(|e| e.get("id").and_then(Value::as_str).map(str::to_string))
                    .collect()
            })
            .unwrap_or_default();
        ids.iter().map(|id| self.synset(id)).collect()
    }

    fn synset(&self, id: &str) -> Result<Synset, BabelNetError> {
        let value = self.fetch("getSynset", "id", id)?;
        self.parse_synset(id, &value)
    }

    fn outgoing_edges(&self, id: &str) -> Result<Vec<Edge>, BabelNetError> {
        let value = self.fetch("getOutgoingEdges", "id", id)?;
        let Some(items) = value.as_array() else {
            return Err(BabelNetError::BadResponse(format!("edges of {id} are not a list")));
        };
        let mut edges = Vec::new();
        for item in items {
            let lang = item.get("language").and_then(Value::as_str).unwrap_or("MUL");
            if !(lang.eq_ignore_ascii_case(&self.config.lang) || lang.eq_ignore_ascii_case("MUL")) {
                continue;
            }
            let (Some(target), Some(pointer)) = (item.get("target").and_then(Value::as_str), item.get("pointer")) else {
                continue;
            };
            if target == id {
                continue;
            }
            let name = pointer
                .get("shortName")
                .or_else(|| pointer.get("name"))
                .and_then(Value::as_str)
                .unwrap_or("related")
                .to_lowercase();
            let is_automatic = pointer.get("isAutomatic").and_then(Value::as_bool).unwrap_or(false);
            edges.push(Edge {
                source: id.to_string(),
                target: target.to_string(),
                relation_group: self.config.relations.group(&name),
                relation_name: name,
                is_automatic,
            });
        }
        Ok(edges)
    }
}
