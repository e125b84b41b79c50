//! The batch stages behind each subcommand. Every stage reads its inputs
//! from the output directory, writes its CSV there atomically, and maps
//! failures onto the fixed exit codes.

use std::collections::HashMap;
use std::fs::File;
use std::io::{self, BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::sync::Arc;

use serde::Serialize;
use taxolint_core::cme::{self, DetectorConfig};
use taxolint_core::drift::{
    self, DriftRow, Embedder, EmbeddingCache, EmbeddingProvider, HashingProvider, Heatmap, RemoteProvider,
    RootAggregate,
};
use taxolint_core::ingest::{self, clean_relations, DumpReport, ParseReport};
use taxolint_core::risk;
use taxolint_core::{EmbedError, EntityId, EntityText, GraphBuilder, GraphError, TaxonomyGraph};

use crate::config::{PipelineConfig, ProviderKind};
use crate::error::{CliError, CliResult};

pub const TRIPLES: &str = "triples.tsv";
pub const TEXTS: &str = "texts.tsv";
pub const INGEST_REPORT: &str = "ingest_report.json";
pub const FLAGS: &str = "flags.csv";
pub const COMPONENTS: &str = "components.csv";
pub const PURE_CLASSES: &str = "pure_classes.csv";
pub const RISK: &str = "risk.csv";
pub const DRIFT: &str = "drift.csv";
pub const DRIFT_REPORT: &str = "drift_report.json";
pub const ROOTS: &str = "roots.csv";
pub const HEATMAP: &str = "heatmap.csv";

/// Writes through a temporary file in the target directory, then renames.
pub fn write_atomic(path: &Path, write: impl FnOnce(&mut dyn Write) -> io::Result<()>) -> CliResult<()> {
    let dir = path.parent().filter(|p| !p.as_os_str().is_empty()).unwrap_or(Path::new("."));
    std::fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))?;
    let mut tmp = tempfile::NamedTempFile::new_in(dir).map_err(|e| CliError::io(dir, e))?;
    {
        let mut w = BufWriter::new(tmp.as_file_mut());
        write(&mut w).map_err(|e| CliError::io(path, e))?;
        w.flush().map_err(|e| CliError::io(path, e))?;
    }
    tmp.persist(path).map_err(|e| CliError::io(path, e.error))?;
    Ok(())
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> CliResult<()> {
    write_atomic(path, |w| {
        serde_json::to_writer_pretty(&mut *w, value)?;
        writeln!(w)
    })
}

fn open_input(path: &Path) -> CliResult<Box<dyn BufRead>> {
    let file = File::open(path).map_err(|e| CliError::input(format!("{}: {e}", path.display())))?;
    if path.extension().is_some_and(|x| x == "gz") {
        Ok(Box::new(BufReader::new(flate2::read::MultiGzDecoder::new(file))))
    } else {
        Ok(Box::new(BufReader::with_capacity(1 << 20, file)))
    }
}

fn open_artifact(dir: &Path, name: &str, hint: &str) -> CliResult<BufReader<File>> {
    let path = dir.join(name);
    match File::open(&path) {
        Ok(f) => Ok(BufReader::new(f)),
        Err(e) if e.kind() == io::ErrorKind::NotFound => Err(CliError::missing(&path, hint)),
        Err(e) => Err(CliError::io(&path, e)),
    }
}

fn artifact_error(path: PathBuf) -> impl Fn(taxolint_core::IngestError) -> CliError {
    move |e| CliError::input(format!("{}: {e}", path.display()))
}

#[derive(Clone, Debug, Default, PartialEq, Serialize)]
pub struct IngestSummary {
    pub nodes: usize,
    pub edges: usize,
    pub p31_edges: usize,
    pub p279_edges: usize,
    pub self_loops: usize,
    pub texts: usize,
    pub triples: ParseReport,
    pub dump: Option<DumpReport>,
    pub text_lines: Option<ParseReport>,
}

pub fn ingest(cfg: &PipelineConfig) -> CliResult<IngestSummary> {
    if cfg.triples.is_empty() && cfg.dump.is_none() {
        return Err(CliError::input("nothing to ingest: give --triples or --dump"));
    }
    let mut builder = GraphBuilder::new();
    let mut summary = IngestSummary::default();
    for path in &cfg.triples {
        let report = ingest::read_triples_tsv(open_input(path)?, |r| {
            builder.add_edge(r.child, r.kind, r.parent);
        })
        .map_err(|e| CliError::input(format!("{}: {e}", path.display())))?;
        if report.malformed > 0 {
            log::warn!("{}: skipped {} malformed lines", path.display(), report.malformed);
        }
        summary.triples.merge(&report);
    }
    let mut texts: Vec<EntityText> = Vec::new();
    if let Some(path) = &cfg.dump {
        let contents = ingest::read_dump(open_input(path)?, &cfg.language)
            .map_err(|e| CliError::input(format!("{}: {e}", path.display())))?;
        builder.extend_edges(contents.edges.iter().map(|r| r.edge()));
        texts.extend(contents.texts);
        summary.dump = Some(contents.report);
    }
    if let Some(path) = &cfg.texts {
        let (parsed, report) = ingest::parse_texts_tsv(open_input(path)?)
            .map_err(|e| CliError::input(format!("{}: {e}", path.display())))?;
        texts.extend(parsed);
        summary.text_lines = Some(report);
    }
    let graph = builder.finalize();
    // First text per (entity, language) wins.
    texts.sort_by(|a, b| (a.entity, &a.language).cmp(&(b.entity, &b.language)));
    texts.dedup_by(|b, a| a.entity == b.entity && a.language == b.language);

    summary.nodes = graph.node_count();
    summary.edges = graph.total_edges();
    summary.p31_edges = graph.edge_count(taxolint_core::EdgeKind::InstanceOf);
    summary.p279_edges = graph.edge_count(taxolint_core::EdgeKind::SubclassOf);
    summary.self_loops = taxolint_core::EdgeKind::ALL.iter().map(|&k| graph.self_loop_count(k)).sum();
    summary.texts = texts.len();

    let out = &cfg.out_dir;
    write_atomic(&out.join(TRIPLES), |w| ingest::write_triples_tsv(&graph, w))?;
    write_atomic(&out.join(TEXTS), |w| ingest::write_texts_tsv(&texts, w))?;
    write_json(&out.join(INGEST_REPORT), &summary)?;
    Ok(summary)
}

pub fn load_graph(dir: &Path) -> CliResult<TaxonomyGraph> {
    let reader = open_artifact(dir, TRIPLES, "ingest")?;
    let mut builder = GraphBuilder::new();
    ingest::read_triples_tsv(reader, |r| {
        builder.add_edge(r.child, r.kind, r.parent);
    })
    .map_err(artifact_error(dir.join(TRIPLES)))?;
    Ok(builder.finalize())
}

pub fn load_texts(dir: &Path) -> CliResult<Vec<EntityText>> {
    let reader = open_artifact(dir, TEXTS, "ingest")?;
    let (texts, _) = ingest::parse_texts_tsv(reader).map_err(artifact_error(dir.join(TEXTS)))?;
    Ok(texts)
}

/// Texts in `language`, keyed by entity.
pub fn texts_in(texts: &[EntityText], language: &str) -> HashMap<EntityId, EntityText> {
    texts
        .iter()
        .filter(|t| t.language == language)
        .map(|t| (t.entity, t.clone()))
        .collect()
}

pub fn load_drift(dir: &Path) -> CliResult<Vec<DriftRow>> {
    drift::read_drift_csv(open_artifact(dir, DRIFT, "drift")?).map_err(artifact_error(dir.join(DRIFT)))
}

pub fn load_roots(dir: &Path) -> CliResult<Vec<RootAggregate>> {
    drift::read_roots_csv(open_artifact(dir, ROOTS, "aggregate")?).map_err(artifact_error(dir.join(ROOTS)))
}

pub fn load_heatmap(dir: &Path) -> CliResult<Heatmap> {
    drift::read_heatmap_csv(open_artifact(dir, HEATMAP, "heatmap")?).map_err(artifact_error(dir.join(HEATMAP)))
}

/// One row of the flag CSV, kept in its compact text form.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct FlagRow {
    pub qid: EntityId,
    pub tag: String,
    pub detail: String,
}

pub fn load_flags(dir: &Path) -> CliResult<Vec<FlagRow>> {
    let path = dir.join(FLAGS);
    let reader = open_artifact(dir, FLAGS, "cme")?;
    let mut out = Vec::new();
    for (i, line) in reader.lines().enumerate() {
        let line = line.map_err(|e| CliError::io(&path, e))?;
        if i == 0 || line.is_empty() {
            continue;
        }
        let mut cols = line.splitn(3, ',');
        let (Some(q), Some(tag), Some(detail)) = (cols.next(), cols.next(), cols.next()) else {
            return Err(CliError::input(format!("{}:{}: expected qid,tag,detail", path.display(), i + 1)));
        };
        let qid = q
            .parse()
            .map_err(|e| CliError::input(format!("{}:{}: {e}", path.display(), i + 1)))?;
        out.push(FlagRow {
            qid,
            tag: tag.to_owned(),
            detail: detail.to_owned(),
        });
    }
    Ok(out)
}

#[derive(Clone, Debug, Serialize)]
pub struct CmeSummary {
    pub components: usize,
    pub flags: usize,
    pub pure_classes: usize,
    pub tree_roots: usize,
}

pub fn cme(cfg: &PipelineConfig) -> CliResult<CmeSummary> {
    let g = load_graph(&cfg.out_dir)?;
    let policy = cfg.policy()?;
    let report = cme::run_cme(&g, &policy, &DetectorConfig::with_max_paths(cfg.max_paths));
    let pure = cme::pure_class_filter(&g);
    let out = &cfg.out_dir;
    write_atomic(&out.join(FLAGS), |w| cme::write_flags_csv(&report.flags, w))?;
    write_atomic(&out.join(COMPONENTS), |w| cme::write_components_csv(&report.components, w))?;
    write_atomic(&out.join(PURE_CLASSES), |w| cme::write_pure_classes_csv(&pure, w))?;
    Ok(CmeSummary {
        components: report.components.len(),
        flags: report.flags.len(),
        pure_classes: pure.pure_classes.len(),
        tree_roots: pure.tree_roots.len(),
    })
}

pub fn graph_error(e: GraphError) -> CliError {
    match e {
        GraphError::RootMissing(root) => CliError::input(format!(
            "root {root} is not in the graph; set `root` in the config or pass --root"
        )),
        GraphError::UnknownEntity(id) => CliError::input(format!("{id} is not in the graph")),
    }
}

/// Scores `entities`, or every entity when `None`.
pub fn score(cfg: &PipelineConfig, entities: Option<&[EntityId]>) -> CliResult<usize> {
    let g = load_graph(&cfg.out_dir)?;
    let policy = cfg.policy()?;
    let ids: Vec<EntityId> = match entities {
        Some(list) => list.to_vec(),
        None => g.entities().to_vec(),
    };
    let reports =
        risk::score_entities(&g, &ids, &cfg.weights()?, &policy, &cfg.risk_config()).map_err(graph_error)?;
    write_atomic(&cfg.out_dir.join(RISK), |w| risk::write_risk_csv(&reports, w))?;
    Ok(reports.len())
}

pub fn provider(cfg: &PipelineConfig) -> CliResult<Arc<dyn EmbeddingProvider>> {
    Ok(match cfg.provider {
        ProviderKind::Offline => Arc::new(HashingProvider::new(cfg.dimension)),
        ProviderKind::Remote => {
            let endpoint = cfg
                .endpoint
                .as_deref()
                .ok_or_else(|| CliError::input("the remote provider needs `endpoint`"))?;
            Arc::new(RemoteProvider::new(endpoint, &cfg.model, cfg.dimension))
        }
    })
}

pub fn embedder(cfg: &PipelineConfig) -> CliResult<Embedder> {
    let provider = provider(cfg)?;
    let path = cfg
        .embedding_cache
        .clone()
        .unwrap_or_else(|| cfg.out_dir.join("cache").join(format!("embeddings-{}.embc", cfg.dimension)));
    let cache = match EmbeddingCache::open(&path, provider.dimension()) {
        Ok(c) => Some(c),
        Err(e) => {
            log::warn!("embedding cache disabled: {e}");
            None
        }
    };
    Ok(Embedder::new(provider, cache))
}

fn embed_error(e: EmbedError) -> CliError {
    CliError::provider(format!("embedding provider failed: {e}"))
}

#[derive(Clone, Debug, Serialize)]
pub struct DriftSummary {
    pub records: usize,
    pub flagged: usize,
    pub discarded: usize,
    pub skipped: usize,
    pub provider: String,
    pub threshold: f64,
}

pub fn drift_stage(cfg: &PipelineConfig) -> CliResult<DriftSummary> {
    let raw = load_graph(&cfg.out_dir)?;
    let texts = load_texts(&cfg.out_dir)?;
    let clean = clean_relations(&raw, &cfg.policy()?);
    let embedder = embedder(cfg)?;
    let run = drift::run_drift(&clean.graph, &texts_in(&texts, &cfg.language), &embedder, cfg.drift_threshold)
        .map_err(embed_error)?;
    let summary = DriftSummary {
        records: run.rows.len(),
        flagged: run.rows.iter().filter(|r| r.flagged).count(),
        discarded: run.discarded,
        skipped: run.skipped.len(),
        provider: embedder.provider().identity(),
        threshold: cfg.drift_threshold,
    };
    write_atomic(&cfg.out_dir.join(DRIFT), |w| drift::write_drift_csv(&run.rows, w))?;
    #[derive(Serialize)]
    struct Report<'a> {
        #[serde(flatten)]
        summary: &'a DriftSummary,
        skipped_entities: &'a [(EntityId, drift::SkipReason)],
    }
    write_json(
        &cfg.out_dir.join(DRIFT_REPORT),
        &Report {
            summary: &summary,
            skipped_entities: &run.skipped,
        },
    )?;
    Ok(summary)
}

pub fn aggregate(cfg: &PipelineConfig) -> CliResult<usize> {
    let rows = load_drift(&cfg.out_dir)?;
    let raw = load_graph(&cfg.out_dir)?;
    let clean = clean_relations(&raw, &cfg.policy()?);
    let roots = drift::assign_pseudo_roots(&clean.graph);
    let aggs = drift::aggregate_by_root(rows.iter().map(|r| (r.entity, r.drift_adj)), &roots, cfg.drift_threshold);
    write_atomic(&cfg.out_dir.join(ROOTS), |w| drift::write_roots_csv(&aggs, w))?;
    Ok(aggs.len())
}

pub fn heatmap(cfg: &PipelineConfig) -> CliResult<Heatmap> {
    let rows = load_drift(&cfg.out_dir)?;
    let h = drift::heatmap(&rows);
    write_atomic(&cfg.out_dir.join(HEATMAP), |w| drift::write_heatmap_csv(&h, w))?;
    Ok(h)
}

/// Every stage in order.
pub fn run_all(cfg: &PipelineConfig) -> CliResult<()> {
    ingest(cfg)?;
    cme(cfg)?;
    score(cfg, None)?;
    drift_stage(cfg)?;
    aggregate(cfg)?;
    heatmap(cfg)?;
    Ok(())
}
