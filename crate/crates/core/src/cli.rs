//! Command-line entry points.

use std::io::Write;
use std::path::{Path, PathBuf};

use anyhow::{anyhow, bail, Context, Result};
use clap::{Args, Parser, Subcommand};

use crate::babelnet::{query_word, BabelNetClient, ClientConfig, FixtureGraph, GraphSource, RelationMap, SubgraphCache};
use crate::board::{parse_boards, Board, ClueResult, ScoringFn, WordToken};
use crate::config::{EngineConfig, RepresentationConfig, RepresentationKind};
use crate::corpusfreq::{ingest_texts_parallel, read_documents};
use crate::embeddings::{average_contexts, load_embeddings_file, read_occurrences, EmbeddingStore, IndexMode};
use crate::engine::{board_seed, load_wordlist, Engine, Representation};
use crate::eval::{
    aggregate, append_jsonl, join_responses, load_jsonl, render_table, simulate_guesser, EvaluationKind, MetricsReport,
    Trial, TrialConfig, TrialResponse,
};
use crate::service::{serve, AppState, SessionStore};

#[derive(Debug, Parser)]
#[command(name = "codenames", version, about = "Codenames clue giving and evaluation")]
pub struct Cli {
    /// Engine configuration file (TOML).
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Seed for every random choice.
    #[arg(long, global = true, default_value_t = 0)]
    pub seed: u64,
    /// Write the command's report here instead of stdout.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    #[command(flatten)]
    pub resources: ResourceFlags,
    #[command(subcommand)]
    pub command: Command,
}

/// Overrides for values in the configuration file.
#[derive(Debug, Args, Default)]
pub struct ResourceFlags {
    /// Embedding representation, `name=path`. Repeatable.
    #[arg(long = "embeddings", global = true, value_name = "NAME=PATH")]
    pub embeddings: Vec<String>,
    /// Graph representation backed by a fixture graph file, `name=path`.
    #[arg(long = "graph-fixture", global = true, value_name = "NAME=PATH")]
    pub graph_fixture: Vec<String>,
    /// Graph representation backed by a subgraph cache, `name=dir`.
    #[arg(long = "graph-cache", global = true, value_name = "NAME=DIR")]
    pub graph_cache: Vec<String>,
    #[arg(long, global = true)]
    pub dict: Option<PathBuf>,
    #[arg(long, global = true)]
    pub docfreq: Option<PathBuf>,
    #[arg(long, global = true)]
    pub wordlist: Option<PathBuf>,
    /// Neighbor index for embeddings given by flag.
    #[arg(long, global = true, default_value = "exact")]
    pub index: IndexMode,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Convert raw resources into the engine's formats.
    #[command(subcommand)]
    Ingest(IngestCommand),
    /// Knowledge-graph cache management.
    #[command(subcommand)]
    Babelnet(BabelnetCommand),
    /// Board generation.
    #[command(subcommand)]
    Board(BoardCommand),
    /// Pick a clue for each board in a file.
    Clue(ClueArgs),
    /// Run a clue-giver against the embedding guesser.
    Simulate(SimulateArgs),
    /// Evaluation reports.
    #[command(subcommand)]
    Eval(EvalCommand),
    /// Start the evaluation service.
    Serve(ServeArgs),
}

#[derive(Debug, Subcommand)]
pub enum IngestCommand {
    /// Normalize a text vector file, optionally keeping only common tokens.
    Embeddings {
        #[arg(long)]
        input: PathBuf,
        #[arg(long, default_value = "embeddings")]
        name: String,
        /// Keep the k tokens with the highest document frequency.
        #[arg(long, requires = "docfreq")]
        top_common: Option<usize>,
    },
    /// Count document frequencies over a corpus.
    Docfreq {
        /// A directory of text files, or one file of delimited documents.
        #[arg(long)]
        corpus: PathBuf,
        #[arg(long, default_value = "\n\n")]
        delimiter: String,
    },
    /// Average per-occurrence context vectors into one vector per token.
    Contexts {
        #[arg(long)]
        input: PathBuf,
        #[arg(long, default_value = "contexts")]
        name: String,
    },
}

#[derive(Debug, Subcommand)]
pub enum BabelnetCommand {
    /// Fetch and cache the subgraph of each word.
    Fetch {
        /// Board file or word list.
        #[arg(long)]
        words: PathBuf,
        #[arg(long, default_value_t = crate::babelnet::DEFAULT_LEVELS)]
        levels: usize,
        /// Cache directory; defaults to the first graph representation's.
        #[arg(long)]
        cache: Option<PathBuf>,
        /// Read synsets from a fixture graph instead of the API.
        #[arg(long)]
        fixture: Option<PathBuf>,
    },
}

#[derive(Debug, Subcommand)]
pub enum BoardCommand {
    /// Sample boards from the word list.
    Gen {
        /// Number of boards.
        #[arg(long, default_value_t = 1)]
        n: u64,
        #[arg(long, default_value_t = 10)]
        per_team: usize,
    },
}

fn parse_on_off(s: &str) -> Result<bool, String> {
    match s {
        "on" | "true" | "yes" | "1" => Ok(true),
        "off" | "false" | "no" | "0" => Ok(false),
        other => Err(format!("expected on/off, got `{other}`")),
    }
}

#[derive(Debug, Args)]
pub struct ConfigFlags {
    #[arg(long)]
    pub rep: String,
    #[arg(long, default_value = "ours")]
    pub scoring: ScoringFn,
    #[arg(long, default_value = "off", value_parser = parse_on_off, action = clap::ArgAction::Set)]
    pub detect: bool,
}

impl ConfigFlags {
    fn trial_config(&self) -> TrialConfig {
        TrialConfig::new(self.rep.clone(), self.scoring, self.detect)
    }
}

#[derive(Debug, Args)]
pub struct ClueArgs {
    #[arg(long)]
    pub board: PathBuf,
    #[command(flatten)]
    pub config: ConfigFlags,
    /// Print JSON instead of text.
    #[arg(long)]
    pub json: bool,
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    #[command(flatten)]
    pub config: ConfigFlags,
    #[arg(long, default_value_t = 60)]
    pub boards: u64,
    #[arg(long, default_value_t = 10)]
    pub per_team: usize,
    /// Embedding representation used by the guesser; defaults to `--rep`.
    #[arg(long)]
    pub guesser: Option<String>,
    /// Directory for trials.jsonl and responses.jsonl.
    #[arg(long)]
    pub record: Option<PathBuf>,
    #[arg(long)]
    pub json: bool,
}

#[derive(Debug, Subcommand)]
pub enum EvalCommand {
    /// Aggregate stored responses.
    Report {
        /// A session directory holding trials.jsonl and responses.jsonl.
        #[arg(long, conflicts_with_all = ["trials", "responses"])]
        session: Option<PathBuf>,
        #[arg(long, requires = "responses")]
        trials: Option<PathBuf>,
        #[arg(long, requires = "trials")]
        responses: Option<PathBuf>,
        /// Label the report as bot output.
        #[arg(long)]
        bot: bool,
        #[arg(long)]
        json: bool,
    },
}

#[derive(Debug, Args)]
pub struct ServeArgs {
    #[arg(long)]
    pub port: Option<u16>,
    #[arg(long)]
    pub results: Option<PathBuf>,
    #[arg(long = "static")]
    pub static_dir: Option<PathBuf>,
}

/// Parses `argv` (program name first) and runs it. Returns the exit status.
pub fn run<I, S>(argv: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = S>,
    S: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            if e.use_stderr() {
                let _ = write!(stderr, "{}", e.render());
                return 2;
            }
            let _ = write!(stdout, "{}", e.render());
            return 0;
        }
    };
    match execute(cli, stdout) {
        Ok(()) => 0,
        Err(e) => {
            let _ = writeln!(stderr, "error: {e:#}");
            1
        }
    }
}

fn split_named(spec: &str) -> Result<(String, PathBuf)> {
    let (name, path) = spec
        .split_once('=')
        .ok_or_else(|| anyhow!("expected NAME=PATH, got `{spec}`"))?;
    Ok((name.to_string(), PathBuf::from(path)))
}

fn load_config(cli: &Cli) -> Result<EngineConfig> {
    let mut cfg = match &cli.config {
        Some(p) => EngineConfig::load(p)?,
        None => EngineConfig::default(),
    };
    let r = &cli.resources;
    let mut add = |name: String, kind: RepresentationKind| {
        cfg.representations.retain(|x| x.name != name);
        cfg.representations.push(RepresentationConfig {
            name,
            kind,
            lambda_d: None,
        });
    };
    for spec in &r.embeddings {
        let (name, path) = split_named(spec)?;
        add(
            name,
            RepresentationKind::Embedding {
                path,
                index: r.index,
                hnsw: Default::default(),
                top_common: None,
            },
        );
    }
    for spec in &r.graph_fixture {
        let (name, path) = split_named(spec)?;
        add(
            name,
            RepresentationKind::Graph {
                cache_dir: None,
                fixture: Some(path),
            },
        );
    }
    for spec in &r.graph_cache {
        let (name, path) = split_named(spec)?;
        add(
            name,
            RepresentationKind::Graph {
                cache_dir: Some(path),
                fixture: None,
            },
        );
    }
    if r.dict.is_some() {
        cfg.dict = r.dict.clone();
    }
    if r.docfreq.is_some() {
        cfg.docfreq = r.docfreq.clone();
    }
    if r.wordlist.is_some() {
        cfg.wordlist = r.wordlist.clone();
    }
    Ok(cfg)
}

struct Output<'a> {
    path: Option<PathBuf>,
    stdout: &'a mut dyn Write,
}

impl Output<'_> {
    fn emit(&mut self, text: &str) -> Result<()> {
        match &self.path {
            Some(p) => std::fs::write(p, text).with_context(|| format!("writing {}", p.display())),
            None => Ok(self.stdout.write_all(text.as_bytes())?),
        }
    }
}

fn execute(cli: Cli, stdout: &mut dyn Write) -> Result<()> {
    let cfg = load_config(&cli)?;
    let mut out = Output {
        path: cli.out.clone(),
        stdout,
    };
    match &cli.command {
        Command::Ingest(cmd) => ingest(cmd, &cfg, &mut out),
        Command::Babelnet(BabelnetCommand::Fetch {
            words,
            levels,
            cache,
            fixture,
        }) => babelnet_fetch(words, *levels, cache.as_deref(), fixture.as_deref(), &cfg, &mut out),
        Command::Board(BoardCommand::Gen { n, per_team }) => {
            let path = cfg.wordlist.as_ref().ok_or_else(|| anyhow!("no word list given (--wordlist)"))?;
            let words = load_wordlist(&std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?)?;
            let engine = Engine {
                wordlist: words,
                ..Engine::default()
            };
            let texts = (0..*n)
                .map(|i| Ok(engine.board(*per_team, cli.seed, i)?.to_text()))
                .collect::<Result<Vec<_>>>()?;
            out.emit(&texts.join("\n"))
        }
        Command::Clue(args) => {
            let engine = Engine::from_config(&cfg)?;
            let text = std::fs::read_to_string(&args.board).with_context(|| format!("reading {}", args.board.display()))?;
            let boards = parse_boards(&text)?;
            let config = args.config.trial_config();
            let results = boards
                .iter()
                .map(|b| engine.clue(b, &config))
                .collect::<Result<Vec<_>, _>>()?;
            if args.json {
                let body = if results.len() == 1 {
                    serde_json::to_string_pretty(&results[0])?
                } else {
                    serde_json::to_string_pretty(&results)?
                };
                out.emit(&(body + "\n"))
            } else {
                out.emit(&results.iter().map(render_clue).collect::<Vec<_>>().join("\n"))
            }
        }
        Command::Simulate(args) => simulate(args, cli.seed, &cfg, &mut out),
        Command::Eval(EvalCommand::Report {
            session,
            trials,
            responses,
            bot,
            json,
        }) => {
            let (tp, rp) = match (session, trials, responses) {
                (Some(dir), _, _) => (dir.join("trials.jsonl"), dir.join("responses.jsonl")),
                (None, Some(t), Some(r)) => (t.clone(), r.clone()),
                _ => bail!("give --session or both --trials and --responses"),
            };
            let trials: Vec<Trial> = load_jsonl(&tp)?;
            let responses: Vec<TrialResponse> = load_jsonl(&rp)?;
            let kind = if *bot { EvaluationKind::Bot } else { EvaluationKind::Human };
            let report = aggregate(&join_responses(&trials, responses)?, kind)?;
            out.emit(&render_report(&report, *json)?)
        }
        Command::Serve(args) => {
            let engine = Engine::from_config(&cfg)?;
            let results = args.results.clone().unwrap_or_else(|| cfg.results_dir.clone());
            let store = SessionStore::open(&results).map_err(|e| anyhow!("{e}"))?;
            let state = AppState {
                engine: std::sync::Arc::new(engine),
                store: std::sync::Arc::new(store),
            };
            let port = args.port.unwrap_or(cfg.port);
            let static_dir = args.static_dir.clone().or_else(|| cfg.static_dir.clone());
            let rt = tokio::runtime::Runtime::new()?;
            rt.block_on(serve(state, port, static_dir))?;
            Ok(())
        }
    }
}

fn render_report(report: &MetricsReport, json: bool) -> Result<String> {
    Ok(if json {
        serde_json::to_string_pretty(report)? + "\n"
    } else {
        render_table(report)
    })
}

/// Clue, intended words and every score term.
pub fn render_clue(r: &ClueResult) -> String {
    let b = &r.breakdown;
    let intended: Vec<&str> = r.intended.words().iter().map(WordToken::as_str).collect();
    let mut s = format!(
        "clue: {}\nintended: {}\nscore: {}\nrepresentation: {}\nscoring: {:?}\ndetect: {}\norigin: {:?}\n",
        r.clue,
        intended.join(", "),
        r.score,
        r.representation,
        r.scoring_fn,
        if r.detect { "on" } else { "off" },
        r.candidate_origin,
    );
    s.push_str(&format!(
        "breakdown: base={} freq={} dict_blue_sum={} dict_red_max={} detect={} total={} kim_passed={}\n",
        b.base, b.freq_term, b.dict_blue_sum, b.dict_red_max, b.detect, b.total, b.kim_constraint_passed
    ));
    if r.kim_relaxed {
        s.push_str("note: no candidate met the kim constraints; ranked by minimum blue similarity\n");
    }
    s
}

fn ingest(cmd: &IngestCommand, cfg: &EngineConfig, out: &mut Output<'_>) -> Result<()> {
    match cmd {
        IngestCommand::Embeddings { input, name, top_common } => {
            let mut store = load_embeddings_file(input, name)?;
            if let Some(k) = top_common {
                let df_path = cfg.docfreq.as_ref().ok_or_else(|| anyhow!("--top-common needs --docfreq"))?;
                let df = crate::corpusfreq::DocFreqTable::load(df_path)?;
                store = store.filter_top_common(&df, *k)?;
            }
            emit_store(&store, out)
        }
        IngestCommand::Docfreq { corpus, delimiter } => {
            let docs = read_documents(corpus, &delimiter.replace("\\n", "\n"))?;
            let table = ingest_texts_parallel(&docs)?;
            let mut buf = Vec::new();
            table.write(&mut buf)?;
            out.emit(&String::from_utf8(buf)?)
        }
        IngestCommand::Contexts { input, name } => {
            let f = std::fs::File::open(input).with_context(|| format!("opening {}", input.display()))?;
            let store = average_contexts(name, read_occurrences(std::io::BufReader::new(f)))?;
            emit_store(&store, out)
        }
    }
}

fn emit_store(store: &EmbeddingStore, out: &mut Output<'_>) -> Result<()> {
    let mut buf = Vec::new();
    store.write_text(&mut buf)?;
    out.emit(&String::from_utf8(buf)?)
}

fn read_word_file(path: &Path) -> Result<Vec<WordToken>> {
    let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    if text.lines().any(|l| {
        let l = l.trim_start().to_lowercase();
        l.starts_with("blue:") || l.starts_with("red:")
    }) {
        let mut words: Vec<WordToken> = parse_boards(&text)?.iter().flat_map(Board::words).collect();
        words.sort();
        words.dedup();
        Ok(words)
    } else {
        Ok(load_wordlist(&text)?)
    }
}

fn babelnet_fetch(
    words_path: &Path,
    levels: usize,
    cache: Option<&Path>,
    fixture: Option<&Path>,
    cfg: &EngineConfig,
    out: &mut Output<'_>,
) -> Result<()> {
    let words = read_word_file(words_path)?;
    let cache_dir = match cache {
        Some(c) => c.to_path_buf(),
        None => cfg
            .representations
            .iter()
            .find_map(|r| match &r.kind {
                RepresentationKind::Graph { cache_dir, .. } => cache_dir.clone(),
                _ => None,
            })
            .ok_or_else(|| anyhow!("no cache directory (--cache or a graph representation with cache_dir)"))?,
    };
    let cache = SubgraphCache::new(&cache_dir);
    let source: Box<dyn GraphSource> = match fixture {
        Some(f) => Box::new(FixtureGraph::load(f, &RelationMap::default())?),
        None => Box::new(BabelNetClient::with_reqwest(ClientConfig::new(&cache_dir))?),
    };
    let mut report = String::new();
    for word in &words {
        if matches!(cache.load(word)?, Some(g) if g.complete && g.levels_requested >= levels) {
            report.push_str(&format!("{word}: cached\n"));
            continue;
        }
        let synsets = source.synsets_for(word).with_context(|| format!("looking up `{word}`"))?;
        match query_word(source.as_ref(), word, &synsets, levels) {
            Ok(g) => {
                cache.store(&g)?;
                report.push_str(&format!("{word}: {} synsets, {} edges\n", g.synsets.len(), g.edge_count()));
            }
            Err((partial, e)) => {
                cache.store(&partial)?;
                out.emit(&report)?;
                return Err(anyhow!(e).context(format!("fetching `{word}` (partial record kept)")));
            }
        }
    }
    out.emit(&report)
}

fn simulate(args: &SimulateArgs, seed: u64, cfg: &EngineConfig, out: &mut Output<'_>) -> Result<()> {
    let engine = Engine::from_config(cfg)?;
    let config = args.config.trial_config();
    let guesser_name = args.guesser.clone().unwrap_or_else(|| config.representation.clone());
    let guesser = match engine.representations.get(&guesser_name).map(|r| &r.repr) {
        Some(Representation::Embedding { store, .. }) => store.clone(),
        Some(_) => bail!("guesser `{guesser_name}` is not an embedding representation"),
        None => bail!("unknown guesser representation `{guesser_name}`"),
    };
    let mut trials = Vec::new();
    let mut responses = Vec::new();
    for i in 0..args.boards {
        let board = engine.board(args.per_team, seed, i)?;
        let result = engine.clue(&board, &config)?;
        let trial = Trial::from_clue(format!("t{i:05}"), &board, &result, config.clone(), board_seed(seed ^ 0xd15b_1a7e, i));
        responses.push(simulate_guesser(&guesser, &trial)?);
        trials.push(trial);
    }
    if let Some(dir) = &args.record {
        std::fs::create_dir_all(dir)?;
        let mut tf = std::fs::File::create(dir.join("trials.jsonl"))?;
        for t in &trials {
            append_jsonl(&mut tf, t)?;
        }
        let mut rf = std::fs::File::create(dir.join("responses.jsonl"))?;
        for r in &responses {
            append_jsonl(&mut rf, r)?;
        }
    }
    let report = aggregate(&join_responses(&trials, responses)?, EvaluationKind::Bot)?;
    out.emit(&render_report(&report, args.json)?)
}
