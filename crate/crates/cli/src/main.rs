use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde::Serialize;
use taxolint::config::{PipelineConfig, ProviderKind};
use taxolint::error::{CliError, CliResult, Exit};
use taxolint::pipeline;
use taxolint::server::{self, AppState};
use taxolint_core::EntityId;

/// Taxonomy consistency checks for P31/P279 graphs.
#[derive(Parser)]
#[command(name = "taxolint", version)]
struct Cli {
    /// TOML config file; flags given on the command line win.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Worker threads (default: available cores).
    #[arg(long, global = true)]
    jobs: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Parse triples and/or a JSON dump into canonical TSVs.
    Ingest {
        #[command(flatten)]
        input: InputArgs,
        #[command(flatten)]
        out: OutArgs,
    },
    /// Components, anti-pattern flags and pure classes.
    Cme {
        #[command(flatten)]
        out: OutArgs,
        #[arg(long)]
        max_paths: Option<usize>,
    },
    /// Multi-dimensional risk scores.
    Score {
        #[command(flatten)]
        out: OutArgs,
        #[command(flatten)]
        risk: RiskArgs,
        /// Score only these entities (repeatable).
        #[arg(long = "entity")]
        entities: Vec<EntityId>,
    },
    /// Embedding drift for screened multi-parent entities.
    Drift {
        #[command(flatten)]
        out: OutArgs,
        #[command(flatten)]
        drift: DriftArgs,
    },
    /// Per-pseudo-root drift summary.
    Aggregate {
        #[command(flatten)]
        out: OutArgs,
        #[arg(long)]
        threshold: Option<f64>,
    },
    /// Parent-count by drift histogram.
    Heatmap {
        #[command(flatten)]
        out: OutArgs,
    },
    /// Every stage from ingest to heatmap.
    Run {
        #[command(flatten)]
        input: InputArgs,
        #[command(flatten)]
        out: OutArgs,
        #[command(flatten)]
        risk: RiskArgs,
        #[command(flatten)]
        drift: DriftArgs,
        #[arg(long)]
        max_paths: Option<usize>,
    },
    /// HTTP API over a data directory.
    Serve(ServeArgs),
}

#[derive(Args)]
struct InputArgs {
    /// Triple TSV files (`child<TAB>P31|P279<TAB>parent`), optionally gzipped.
    #[arg(long, num_args = 1..)]
    triples: Vec<PathBuf>,
    /// Wikidata JSON dump, one entity per line, optionally gzipped.
    #[arg(long)]
    dump: Option<PathBuf>,
    /// Text TSV (`qid<TAB>lang<TAB>label<TAB>description`).
    #[arg(long)]
    texts: Option<PathBuf>,
    #[arg(long)]
    language: Option<String>,
}

#[derive(Args)]
struct OutArgs {
    /// Artifact directory.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Metaclass policy TOML.
    #[arg(long)]
    policy: Option<PathBuf>,
}

#[derive(Args)]
struct RiskArgs {
    #[arg(long)]
    root: Option<EntityId>,
    /// Four comma-separated weights: connection, coherence, depth variance, alignment.
    #[arg(long, value_delimiter = ',')]
    weights: Option<Vec<f64>>,
    #[arg(long)]
    d_max: Option<u32>,
}

#[derive(Args)]
struct DriftArgs {
    #[arg(long, value_enum)]
    provider: Option<ProviderKind>,
    #[arg(long)]
    endpoint: Option<String>,
    #[arg(long)]
    model: Option<String>,
    #[arg(long)]
    dimension: Option<usize>,
    #[arg(long)]
    threshold: Option<f64>,
    /// Embedding cache file.
    #[arg(long)]
    cache: Option<PathBuf>,
}

#[derive(Args)]
struct ServeArgs {
    #[arg(long, env = "TAXOLINT_DATA_DIR")]
    data_dir: Option<PathBuf>,
    #[arg(long, default_value = "127.0.0.1")]
    host: String,
    #[arg(long, default_value_t = 8080)]
    port: u16,
    /// Fetch entities missing from the snapshot from Wikidata.
    #[arg(long)]
    live: bool,
    #[arg(long)]
    console_dir: Option<PathBuf>,
    #[arg(long)]
    policy: Option<PathBuf>,
}

fn set<T>(slot: &mut T, value: Option<T>) {
    if let Some(v) = value {
        *slot = v;
    }
}

impl InputArgs {
    fn apply(self, c: &mut PipelineConfig) {
        if !self.triples.is_empty() {
            c.triples = self.triples;
        }
        if self.dump.is_some() {
            c.dump = self.dump;
        }
        if self.texts.is_some() {
            c.texts = self.texts;
        }
        set(&mut c.language, self.language);
    }
}

impl OutArgs {
    fn apply(self, c: &mut PipelineConfig) {
        set(&mut c.out_dir, self.out);
        if self.policy.is_some() {
            c.policy = self.policy;
        }
    }
}

impl RiskArgs {
    fn apply(self, c: &mut PipelineConfig) -> CliResult<()> {
        set(&mut c.root, self.root);
        set(&mut c.d_max, self.d_max);
        if let Some(w) = self.weights {
            let [a, b, x, y] = w[..] else {
                return Err(CliError::input(format!("--weights takes 4 values, got {}", w.len())));
            };
            [c.weight_connection, c.weight_coherence, c.weight_depth_variance, c.weight_alignment] = [a, b, x, y];
        }
        Ok(())
    }
}

impl DriftArgs {
    fn apply(self, c: &mut PipelineConfig) {
        set(&mut c.provider, self.provider);
        if self.endpoint.is_some() {
            c.endpoint = self.endpoint;
        }
        set(&mut c.model, self.model);
        set(&mut c.dimension, self.dimension);
        set(&mut c.drift_threshold, self.threshold);
        if self.cache.is_some() {
            c.embedding_cache = self.cache;
        }
    }
}

fn emit<T: Serialize>(value: &T) -> CliResult<()> {
    let text = serde_json::to_string_pretty(value).map_err(|e| CliError::new(Exit::Failure, e.to_string()))?;
    println!("{text}");
    Ok(())
}

#[derive(Serialize)]
struct Count {
    rows: usize,
}

fn run(cli: Cli) -> CliResult<()> {
    let mut cfg = match &cli.config {
        Some(path) => PipelineConfig::load(path)?,
        None => PipelineConfig::default(),
    };
    if cli.jobs.is_some() {
        cfg.jobs = cli.jobs;
    }
    if let Some(n) = cfg.jobs {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n.max(1))
            .build_global()
            .map_err(|e| CliError::new(Exit::Failure, e.to_string()))?;
    }

    match cli.command {
        Command::Ingest { input, out } => {
            input.apply(&mut cfg);
            out.apply(&mut cfg);
            emit(&pipeline::ingest(&cfg)?)
        }
        Command::Cme { out, max_paths } => {
            out.apply(&mut cfg);
            set(&mut cfg.max_paths, max_paths);
            emit(&pipeline::cme(&cfg)?)
        }
        Command::Score { out, risk, entities } => {
            out.apply(&mut cfg);
            risk.apply(&mut cfg)?;
            let subset = (!entities.is_empty()).then_some(entities.as_slice());
            emit(&Count {
                rows: pipeline::score(&cfg, subset)?,
            })
        }
        Command::Drift { out, drift } => {
            out.apply(&mut cfg);
            drift.apply(&mut cfg);
            emit(&pipeline::drift_stage(&cfg)?)
        }
        Command::Aggregate { out, threshold } => {
            out.apply(&mut cfg);
            set(&mut cfg.drift_threshold, threshold);
            emit(&Count {
                rows: pipeline::aggregate(&cfg)?,
            })
        }
        Command::Heatmap { out } => {
            out.apply(&mut cfg);
            let h = pipeline::heatmap(&cfg)?;
            emit(&Count { rows: h.total() as usize })
        }
        Command::Run {
            input,
            out,
            risk,
            drift,
            max_paths,
        } => {
            input.apply(&mut cfg);
            out.apply(&mut cfg);
            risk.apply(&mut cfg)?;
            drift.apply(&mut cfg);
            set(&mut cfg.max_paths, max_paths);
            pipeline::run_all(&cfg)
        }
        Command::Serve(args) => serve(cfg, args),
    }
}

fn serve(mut cfg: PipelineConfig, args: ServeArgs) -> CliResult<()> {
    let dir = args.data_dir.unwrap_or_else(|| cfg.out_dir.clone());
    if args.live {
        cfg.live_fetch = true;
    }
    if args.console_dir.is_some() {
        cfg.console_dir = args.console_dir;
    }
    if args.policy.is_some() {
        cfg.policy = args.policy;
    }
    if !dir.is_dir() {
        return Err(CliError::missing(&dir, "ingest --out <dir>"));
    }
    let state = AppState::open(&dir, cfg)?;
    let addr = format!("{}:{}", args.host, args.port);
    let listener = std::net::TcpListener::bind(&addr)
        .map_err(|e| CliError::new(Exit::Bind, format!("cannot bind {addr}: {e}")))?;
    listener
        .set_nonblocking(true)
        .map_err(|e| CliError::new(Exit::Bind, e.to_string()))?;
    let local = listener.local_addr().map_err(|e| CliError::new(Exit::Bind, e.to_string()))?;
    let stats = state.snapshot().stats();
    log::info!(
        "listening on http://{local} data_dir={} nodes={} edges={} texts={} flagged={} drift_records={}",
        dir.display(),
        stats.nodes,
        stats.edges,
        stats.texts,
        stats.flagged_entities,
        stats.drift_records.map_or("none".into(), |n| n.to_string()),
    );
    let runtime = tokio::runtime::Builder::new_multi_thread()
        .enable_all()
        .build()
        .map_err(|e| CliError::new(Exit::Failure, e.to_string()))?;
    runtime.block_on(async move {
        let listener =
            tokio::net::TcpListener::from_std(listener).map_err(|e| CliError::new(Exit::Bind, e.to_string()))?;
        server::serve(listener, state)
            .await
            .map_err(|e| CliError::new(Exit::Failure, e.to_string()))
    })
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { Exit::BadInput as u8 } else { 0 });
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("taxolint: {}", e.message);
            ExitCode::from(e.exit as u8)
        }
    }
}
