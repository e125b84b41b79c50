//! Read-only JSON API over a data directory of pipeline artifacts.

mod jobs;
mod snapshot;

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::sync::{Arc, RwLock};

use axum::extract::{Path as UrlPath, Query, State};
use axum::http::StatusCode;
use axum::response::{Html, IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use serde::Serialize;
use taxolint_core::cme::{self, DetectorConfig, RedundantEdge};
use taxolint_core::drift::{self, DriftRow, Embedder, ParentGroup, RootAggregate, BIN_EDGES};
use taxolint_core::ingest::{LiveClient, LiveConfig};
use taxolint_core::risk::{self, Catalogs, Locale, Narration, RiskReport, RiskWeights};
use taxolint_core::{EdgeKind, EntityId, EntityText, GraphBuilder, GraphError, LiveError, TaxonomyGraph};

pub use jobs::{JobManager, JobState, ScanJob, ScanSpec, Stage};
pub use snapshot::{FlagView, Snapshot, SnapshotStats};

use crate::config::PipelineConfig;
use crate::error::{CliError, CliResult};
use crate::pipeline;

pub const API_VERSION: u8 = 1;
pub const MAX_PATHS_LIMIT: usize = 64;

#[derive(Clone)]
pub struct AppState(Arc<Inner>);

struct Inner {
    data_dir: PathBuf,
    config: Arc<PipelineConfig>,
    snapshot: RwLock<Arc<Snapshot>>,
    embedder: Arc<Embedder>,
    live: Option<LiveClient>,
    jobs: Arc<JobManager>,
    catalogs: Catalogs,
}

impl AppState {
    pub fn open(data_dir: &Path, config: PipelineConfig) -> CliResult<Self> {
        let snapshot = Snapshot::load(data_dir, &config)?;
        let mut embed_cfg = config.clone();
        embed_cfg.out_dir = data_dir.to_owned();
        let embedder = pipeline::embedder(&embed_cfg)?;
        let live = config.live_fetch.then(|| {
            LiveClient::new(LiveConfig {
                endpoint: config.wikidata_endpoint.clone(),
                cache_dir: Some(data_dir.join("cache").join("live")),
                language: config.language.clone(),
                ..LiveConfig::default()
            })
        });
        let jobs = JobManager::open(&data_dir.join("jobs"), config.max_scan_jobs)
            .map_err(|e| CliError::io(&data_dir.join("jobs"), e))?;
        Ok(Self(Arc::new(Inner {
            data_dir: data_dir.to_owned(),
            config: Arc::new(config),
            snapshot: RwLock::new(Arc::new(snapshot)),
            embedder: Arc::new(embedder),
            live,
            jobs: Arc::new(jobs),
            catalogs: Catalogs::builtin(),
        })))
    }

    pub fn snapshot(&self) -> Arc<Snapshot> {
        Arc::clone(&self.0.snapshot.read().expect("snapshot lock poisoned"))
    }

    /// Re-reads the data directory and swaps the snapshot in one step.
    /// On error the old snapshot stays in place.
    pub fn reload(&self) -> CliResult<SnapshotStats> {
        let fresh = Snapshot::load(&self.0.data_dir, &self.0.config)?;
        let stats = fresh.stats();
        *self.0.snapshot.write().expect("snapshot lock poisoned") = Arc::new(fresh);
        Ok(stats)
    }

    pub fn config(&self) -> &PipelineConfig {
        &self.0.config
    }
}

pub fn router(state: AppState) -> Router {
    let api = Router::new()
        .route("/api/snapshot", get(snapshot_info))
        .route("/api/entity/{qid}", get(entity))
        .route("/api/entity/{qid}/redundancy", get(redundancy))
        .route("/api/entity/{qid}/similarity", get(similarity))
        .route("/api/roots/top", get(roots_top))
        .route("/api/heatmap", get(heatmap))
        .route("/api/scan", post(scan))
        .route("/api/jobs/{id}", get(job))
        .route("/api/i18n/{lang}", get(i18n))
        .fallback(not_found);
    let app = match &state.0.config.console_dir {
        Some(dir) => api.fallback_service(tower_http::services::ServeDir::new(dir)),
        None => api.route("/", get(index)),
    };
    app.with_state(state)
}

/// Serves until the process is stopped.
pub async fn serve(listener: tokio::net::TcpListener, state: AppState) -> std::io::Result<()> {
    axum::serve(listener, router(state)).await
}

pub struct ApiError {
    status: StatusCode,
    code: &'static str,
    message: String,
}

impl ApiError {
    fn new(status: StatusCode, code: &'static str, message: impl Into<String>) -> Self {
        Self {
            status,
            code,
            message: message.into(),
        }
    }

    fn bad_request(code: &'static str, message: impl Into<String>) -> Self {
        Self::new(StatusCode::BAD_REQUEST, code, message)
    }
}

#[derive(Serialize)]
struct ErrorBody<'a> {
    api: u8,
    error: ErrorDetail<'a>,
}

#[derive(Serialize)]
struct ErrorDetail<'a> {
    code: &'a str,
    message: &'a str,
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        let body = ErrorBody {
            api: API_VERSION,
            error: ErrorDetail {
                code: self.code,
                message: &self.message,
            },
        };
        (self.status, Json(body)).into_response()
    }
}

type ApiResult<T> = Result<Json<T>, ApiError>;

async fn not_found() -> ApiError {
    ApiError::new(StatusCode::NOT_FOUND, "NotFound", "no such endpoint")
}

async fn index() -> Html<&'static str> {
    Html(include_str!("index.html"))
}

fn parse_qid(raw: &str) -> Result<EntityId, ApiError> {
    raw.parse()
        .map_err(|e: taxolint_core::ParseIdError| ApiError::bad_request("MalformedId", e.to_string()))
}

async fn blocking<T: Send + 'static>(f: impl FnOnce() -> Result<T, ApiError> + Send + 'static) -> Result<T, ApiError> {
    tokio::task::spawn_blocking(f)
        .await
        .map_err(|e| ApiError::new(StatusCode::INTERNAL_SERVER_ERROR, "Internal", e.to_string()))?
}

fn unknown(id: EntityId) -> ApiError {
    ApiError::new(StatusCode::NOT_FOUND, "UnknownEntity", format!("{id} is not in the snapshot"))
}

#[derive(Serialize)]
struct SnapshotDoc {
    api: u8,
    data_dir: String,
    #[serde(flatten)]
    stats: SnapshotStats,
    live_fetch: bool,
}

async fn snapshot_info(State(state): State<AppState>) -> Json<SnapshotDoc> {
    let snap = state.snapshot();
    Json(SnapshotDoc {
        api: API_VERSION,
        data_dir: snap.data_dir.display().to_string(),
        stats: snap.stats(),
        live_fetch: state.0.live.is_some(),
    })
}

#[derive(Serialize)]
struct Parents {
    instance_of: Vec<EntityId>,
    subclass_of: Vec<EntityId>,
}

#[derive(Serialize)]
struct RiskDoc {
    weights: RiskWeights,
    #[serde(flatten)]
    report: RiskReport,
}

#[derive(Serialize)]
struct EntityDoc {
    api: u8,
    qid: EntityId,
    source: &'static str,
    locale: &'static str,
    label: Option<String>,
    description: Option<String>,
    text_language: Option<String>,
    parents: Parents,
    risk: Option<RiskDoc>,
    #[serde(skip_serializing_if = "Option::is_none")]
    risk_error: Option<String>,
    narrative: Vec<Narration>,
    drift: Option<DriftRow>,
    flags: Vec<FlagView>,
}

fn locale_param(q: &BTreeMap<String, String>, cfg: &PipelineConfig) -> Locale {
    Locale::or_english(q.get("lang").unwrap_or(&cfg.locale))
}

fn parents_of(g: &TaxonomyGraph, id: EntityId) -> Result<Parents, GraphError> {
    Ok(Parents {
        instance_of: g.parents(id, EdgeKind::InstanceOf)?,
        subclass_of: g.parents(id, EdgeKind::SubclassOf)?,
    })
}

struct EntityParts<'a> {
    graph: &'a TaxonomyGraph,
    text: Option<&'a EntityText>,
    drift: Option<DriftRow>,
    flags: Vec<FlagView>,
    source: &'static str,
}

fn entity_doc(state: &AppState, snap: &Snapshot, id: EntityId, locale: Locale, parts: EntityParts<'_>) -> EntityDoc {
    let cfg = &state.0.config;
    let weights = cfg.weights().unwrap_or_default();
    let (risk, risk_error) = match risk::aggregate_risk(parts.graph, id, &weights, &snap.policy, &cfg.risk_config()) {
        Ok(report) => (Some(RiskDoc { weights, report }), None),
        Err(e) => (None, Some(e.to_string())),
    };
    let narrative = risk
        .as_ref()
        .map(|r| risk::narrate_risk(&r.report, locale.code(), &state.0.catalogs))
        .unwrap_or_default();
    EntityDoc {
        api: API_VERSION,
        qid: id,
        source: parts.source,
        locale: locale.code(),
        label: parts.text.map(|t| t.label.clone()),
        description: parts.text.map(|t| t.description.clone()),
        text_language: parts.text.map(|t| t.language.clone()),
        parents: parents_of(parts.graph, id).expect("entity is in the graph"),
        risk,
        risk_error,
        narrative,
        drift: parts.drift,
        flags: parts.flags,
    }
}

async fn entity(
    State(state): State<AppState>,
    UrlPath(raw): UrlPath<String>,
    Query(q): Query<BTreeMap<String, String>>,
) -> ApiResult<EntityDoc> {
    let id = parse_qid(&raw)?;
    let locale = locale_param(&q, &state.0.config);
    blocking(move || {
        let snap = state.snapshot();
        if snap.graph.contains(id) {
            let parts = EntityParts {
                graph: &snap.graph,
                text: snap.text(id, locale.code()),
                drift: snap.drift.as_ref().and_then(|d| d.get(&id).cloned()),
                flags: snap.flags.get(&id).cloned().unwrap_or_default(),
                source: "snapshot",
            };
            return Ok(Json(entity_doc(&state, &snap, id, locale, parts)));
        }
        let Some(client) = &state.0.live else {
            return Err(unknown(id));
        };
        if client.config().offline {
            return Err(unknown(id));
        }
        let fetched = client.fetch(id).map_err(live_error)?;
        let mut builder = GraphBuilder::with_capacity(snap.graph.total_edges() + fetched.edges.len());
        builder.extend_edges(snap.graph.edges());
        builder.extend_edges(fetched.edges.iter().map(|r| r.edge()));
        builder.add_node(id);
        let extended = builder.finalize();
        let flags = live_flags(&extended, &snap, id, state.0.config.max_paths, state.0.config.d_max);
        let parts = EntityParts {
            graph: &extended,
            text: fetched.text.as_ref(),
            drift: None,
            flags,
            source: "live",
        };
        Ok(Json(entity_doc(&state, &snap, id, locale, parts)))
    })
    .await
}

/// Flags for a live-fetched entity, detected on its neighbourhood.
fn live_flags(g: &TaxonomyGraph, snap: &Snapshot, id: EntityId, max_paths: usize, radius: u32) -> Vec<FlagView> {
    let Ok(hood) = g.neighborhood(id, radius) else {
        return Vec::new();
    };
    let sub = TaxonomyGraph::from_edges(hood.edges);
    cme::detect_anti_patterns(&sub, &snap.policy, max_paths)
        .into_iter()
        .filter(|f| f.entity == id)
        .map(|f| FlagView {
            tag: f.tag.as_str().to_owned(),
            detail: f.detail.compact(),
        })
        .collect()
}

fn live_error(e: LiveError) -> ApiError {
    match e {
        LiveError::UnknownQid(id) => unknown(id),
        LiveError::RateLimited => ApiError::new(StatusCode::TOO_MANY_REQUESTS, "RateLimited", e.to_string()),
        other => ApiError::new(StatusCode::BAD_GATEWAY, "LiveFetchFailed", other.to_string()),
    }
}

#[derive(Serialize)]
struct RedundancyDoc {
    api: u8,
    qid: EntityId,
    max_paths: usize,
    redundant: Vec<RedundantEdge>,
}

async fn redundancy(
    State(state): State<AppState>,
    UrlPath(raw): UrlPath<String>,
    Query(q): Query<BTreeMap<String, String>>,
) -> ApiResult<RedundancyDoc> {
    let id = parse_qid(&raw)?;
    let k = match q.get("max_paths") {
        None => state.0.config.max_paths,
        Some(v) => v
            .parse::<usize>()
            .ok()
            .filter(|k| (1..=MAX_PATHS_LIMIT).contains(k))
            .ok_or_else(|| {
                ApiError::bad_request("InvalidMaxPaths", format!("max_paths must be 1..={MAX_PATHS_LIMIT}, got {v:?}"))
            })?,
    };
    blocking(move || {
        let snap = state.snapshot();
        let redundant =
            cme::redundant_edges(&snap.graph, id, &DetectorConfig::with_max_paths(k)).map_err(|_| unknown(id))?;
        Ok(Json(RedundancyDoc {
            api: API_VERSION,
            qid: id,
            max_paths: k,
            redundant,
        }))
    })
    .await
}

#[derive(Serialize)]
struct SimilarityDoc {
    api: u8,
    qid: EntityId,
    provider: String,
    /// Row and column order: the entity, then its parents ascending.
    labels: Vec<EntityId>,
    matrix: Vec<Vec<f64>>,
    /// Parents left out for lack of text.
    omitted: Vec<EntityId>,
}

async fn similarity(State(state): State<AppState>, UrlPath(raw): UrlPath<String>) -> ApiResult<SimilarityDoc> {
    let id = parse_qid(&raw)?;
    blocking(move || {
        let snap = state.snapshot();
        let lang = &state.0.config.language;
        if !snap.graph.contains(id) {
            return Err(unknown(id));
        }
        let empty = |msg: String| ApiError::new(StatusCode::UNPROCESSABLE_ENTITY, "EmptyText", msg);
        let usable = |e: EntityId| snap.texts.get(&e).and_then(|m| m.get(lang)).filter(|t| !t.is_empty());
        let entity_text = usable(id).ok_or_else(|| empty(format!("{id} has no {lang} text")))?;
        let parents = match snap.clean.node(id) {
            Ok(n) => snap.clean.ids_of(&drift::drift_parents(&snap.clean, n)),
            Err(_) => Vec::new(),
        };
        let mut labels = vec![id];
        let mut texts = vec![entity_text.clone()];
        let mut omitted = Vec::new();
        for p in parents {
            match usable(p) {
                Some(t) => {
                    labels.push(p);
                    texts.push(t.clone());
                }
                None => omitted.push(p),
            }
        }
        if labels.len() < 2 {
            return Err(empty(format!("no parent of {id} has {lang} text")));
        }
        let vectors = state
            .0
            .embedder
            .embed_many(&texts)
            .into_iter()
            .collect::<Result<Vec<_>, _>>()
            .map_err(|e| ApiError::new(StatusCode::BAD_GATEWAY, "ProviderUnavailable", e.to_string()))?;
        Ok(Json(SimilarityDoc {
            api: API_VERSION,
            qid: id,
            provider: state.0.embedder.provider().identity(),
            labels,
            matrix: drift::similarity_matrix(&vectors),
            omitted,
        }))
    })
    .await
}

fn drift_missing() -> ApiError {
    ApiError::new(
        StatusCode::SERVICE_UNAVAILABLE,
        "DriftArtifactsMissing",
        "run `taxolint drift` and `taxolint aggregate` for this data directory",
    )
}

#[derive(Serialize)]
struct RootView {
    root: String,
    cnt: usize,
    avg_drift: f64,
    p90: f64,
    high_ratio: f64,
}

impl From<&RootAggregate> for RootView {
    fn from(a: &RootAggregate) -> Self {
        Self {
            root: a.root.to_string(),
            cnt: a.cnt,
            avg_drift: a.avg_drift,
            p90: a.p90,
            high_ratio: a.high_ratio,
        }
    }
}

#[derive(Serialize)]
struct RootsDoc {
    api: u8,
    n: usize,
    total: usize,
    roots: Vec<RootView>,
}

async fn roots_top(State(state): State<AppState>, Query(q): Query<BTreeMap<String, String>>) -> ApiResult<RootsDoc> {
    let n = match q.get("n") {
        None => 20,
        Some(v) => v
            .parse::<usize>()
            .map_err(|_| ApiError::bad_request("InvalidN", format!("n must be a non-negative integer, got {v:?}")))?,
    };
    let snap = state.snapshot();
    let roots = snap.roots.as_ref().ok_or_else(drift_missing)?;
    Ok(Json(RootsDoc {
        api: API_VERSION,
        n,
        total: roots.len(),
        roots: roots.iter().take(n).map(RootView::from).collect(),
    }))
}

#[derive(Serialize)]
struct HeatmapDoc {
    api: u8,
    groups: Vec<&'static str>,
    /// `[lo, hi)`; the last bin has `hi = null` (unbounded).
    bins: Vec<(f64, Option<f64>)>,
    counts: Vec<Vec<u64>>,
    total: u64,
}

async fn heatmap(State(state): State<AppState>) -> ApiResult<HeatmapDoc> {
    let snap = state.snapshot();
    let h = snap.heatmap.as_ref().ok_or_else(drift_missing)?;
    Ok(Json(HeatmapDoc {
        api: API_VERSION,
        groups: ParentGroup::ALL.iter().map(|g| g.as_str()).collect(),
        bins: (0..BIN_EDGES.len())
            .map(|b| {
                let (lo, hi) = drift::bin_bounds(b);
                (lo, hi.is_finite().then_some(hi))
            })
            .collect(),
        counts: ParentGroup::ALL
            .iter()
            .map(|&g| (0..BIN_EDGES.len()).map(|b| h.get(g, b)).collect())
            .collect(),
        total: h.total(),
    }))
}

#[derive(Serialize)]
struct JobDoc {
    api: u8,
    #[serde(flatten)]
    job: ScanJob,
}

async fn scan(State(state): State<AppState>, body: axum::body::Bytes) -> Result<(StatusCode, Json<JobDoc>), ApiError> {
    let spec: ScanSpec =
        serde_json::from_slice(&body).map_err(|e| ApiError::bad_request("InvalidScanSpec", e.to_string()))?;
    let job = state
        .0
        .jobs
        .submit(spec, state.snapshot(), Arc::clone(&state.0.config), Arc::clone(&state.0.embedder))
        .map_err(|e| match e {
            jobs::SubmitError::Full(limit) => ApiError::new(
                StatusCode::TOO_MANY_REQUESTS,
                "QueueFull",
                format!("{limit} scan jobs are already queued or running"),
            ),
            jobs::SubmitError::Invalid(msg) => ApiError::bad_request("InvalidScanSpec", msg),
            jobs::SubmitError::Io(msg) => ApiError::new(StatusCode::INTERNAL_SERVER_ERROR, "Internal", msg),
        })?;
    Ok((StatusCode::ACCEPTED, Json(JobDoc { api: API_VERSION, job })))
}

async fn job(State(state): State<AppState>, UrlPath(id): UrlPath<String>) -> ApiResult<JobDoc> {
    let job = state
        .0
        .jobs
        .get(&id)
        .ok_or_else(|| ApiError::new(StatusCode::NOT_FOUND, "UnknownJob", format!("no job {id:?}")))?;
    Ok(Json(JobDoc { api: API_VERSION, job }))
}

#[derive(Serialize)]
struct CatalogDoc<'a> {
    api: u8,
    requested: String,
    locale: &'static str,
    messages: &'a BTreeMap<String, String>,
}

async fn i18n(State(state): State<AppState>, UrlPath(lang): UrlPath<String>) -> Response {
    let locale = Locale::or_english(&lang);
    Json(CatalogDoc {
        api: API_VERSION,
        requested: lang,
        locale: locale.code(),
        messages: state.0.catalogs.table(locale),
    })
    .into_response()
}
