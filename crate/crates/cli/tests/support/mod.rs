//! Shared harness for the integration tests and the acceptance runner.
#![allow(dead_code)]

use std::io::{BufRead, BufReader, Read, Write};
use std::net::TcpListener;
use std::path::{Path, PathBuf};
use std::sync::mpsc;
use std::time::{Duration, Instant};

use serde::Deserialize;
use taxolint::config::PipelineConfig;
use taxolint::pipeline;
use taxolint::server::{self, AppState};

pub fn fixture(name: &str) -> PathBuf {
    // Shared with the eval crate, so resolve through the workspace layout.
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../cli/tests/fixtures").join(name)
}

/// Offline G1 configuration writing into `out`.
pub fn g1_config(out: &Path) -> PipelineConfig {
    let mut cfg = PipelineConfig::load(&fixture("g1.toml")).expect("fixture config");
    cfg.triples = vec![fixture("g1_triples.tsv")];
    cfg.texts = Some(fixture("g1_texts.tsv"));
    cfg.out_dir = out.to_owned();
    cfg
}

/// A temporary directory holding every G1 artifact.
pub fn g1_artifacts() -> tempfile::TempDir {
    let dir = tempfile::tempdir().unwrap();
    pipeline::run_all(&g1_config(dir.path())).expect("G1 pipeline");
    dir
}

pub struct TestServer {
    pub base: String,
    pub state: AppState,
}

impl TestServer {
    /// Serves `dir` on an ephemeral port from a background runtime.
    pub fn start(dir: &Path, cfg: PipelineConfig) -> Self {
        let state = AppState::open(dir, cfg).expect("snapshot loads");
        let (tx, rx) = mpsc::channel();
        let serving = state.clone();
        std::thread::spawn(move || {
            let rt = tokio::runtime::Builder::new_multi_thread()
                .worker_threads(2)
                .enable_all()
                .build()
                .unwrap();
            rt.block_on(async move {
                let listener = tokio::net::TcpListener::bind("127.0.0.1:0").await.unwrap();
                tx.send(listener.local_addr().unwrap()).unwrap();
                server::serve(listener, serving).await.unwrap();
            });
        });
        let addr = rx.recv_timeout(Duration::from_secs(10)).expect("server starts");
        Self {
            base: format!("http://{addr}"),
            state,
        }
    }

    pub fn get(&self, path: &str) -> (u16, String) {
        request(&format!("{}{path}", self.base), None)
    }

    pub fn post(&self, path: &str, body: &str) -> (u16, String) {
        request(&format!("{}{path}", self.base), Some(body))
    }

    pub fn get_json(&self, path: &str) -> (u16, serde_json::Value) {
        let (status, body) = self.get(path);
        (status, serde_json::from_str(&body).unwrap_or_else(|e| panic!("{path}: {e}: {body}")))
    }

    /// Polls a job until it leaves the active states.
    pub fn wait_job(&self, id: &str) -> JobDoc {
        let deadline = Instant::now() + Duration::from_secs(30);
        loop {
            let (status, body) = self.get(&format!("/api/jobs/{id}"));
            assert_eq!(status, 200, "{body}");
            let doc: JobDoc = serde_json::from_str(&body).unwrap();
            if doc.state == "done" || doc.state == "failed" {
                return doc;
            }
            assert!(Instant::now() < deadline, "job {id} stuck in {}", doc.state);
            std::thread::sleep(Duration::from_millis(20));
        }
    }
}

pub fn request(url: &str, body: Option<&str>) -> (u16, String) {
    let agent: ureq::Agent = ureq::Agent::config_builder()
        .http_status_as_error(false)
        .timeout_global(Some(Duration::from_secs(30)))
        .build()
        .into();
    let mut resp = match body {
        None => agent.get(url).call(),
        Some(b) => agent.post(url).header("content-type", "application/json").send(b),
    }
    .unwrap_or_else(|e| panic!("{url}: {e}"));
    let status = resp.status().as_u16();
    let text = resp.body_mut().read_to_string().unwrap();
    (status, text)
}

/// A one-route HTTP stub. `respond` maps the request line to status and body.
pub fn stub_http(respond: impl Fn(&str) -> (u16, String) + Send + 'static) -> String {
    let listener = TcpListener::bind("127.0.0.1:0").unwrap();
    let addr = listener.local_addr().unwrap();
    std::thread::spawn(move || {
        for stream in listener.incoming() {
            let Ok(mut stream) = stream else { continue };
            let mut reader = BufReader::new(stream.try_clone().unwrap());
            let mut line = String::new();
            if reader.read_line(&mut line).is_err() {
                continue;
            }
            let mut length = 0usize;
            loop {
                let mut h = String::new();
                if reader.read_line(&mut h).unwrap_or(0) == 0 || h == "\r\n" {
                    break;
                }
                if let Some(v) = h.to_ascii_lowercase().strip_prefix("content-length:") {
                    length = v.trim().parse().unwrap_or(0);
                }
            }
            let mut sink = vec![0u8; length];
            let _ = reader.read_exact(&mut sink);
            let (status, body) = respond(&line);
            let _ = write!(
                stream,
                "HTTP/1.1 {status} X\r\nContent-Type: application/json\r\nContent-Length: {}\r\nConnection: close\r\n\r\n{body}",
                body.len()
            );
            let _ = stream.flush();
        }
    });
    format!("http://{addr}")
}

// Independent mirrors of the response documents. Unknown fields are
// rejected, so deserializing doubles as a schema check.

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ErrorDoc {
    pub api: u8,
    pub error: ErrorDetail,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ErrorDetail {
    pub code: String,
    pub message: String,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EntityDoc {
    pub api: u8,
    pub qid: String,
    pub source: String,
    pub locale: String,
    pub label: Option<String>,
    pub description: Option<String>,
    pub text_language: Option<String>,
    pub parents: Parents,
    pub risk: Option<RiskDoc>,
    #[serde(default)]
    pub risk_error: Option<String>,
    pub narrative: Vec<Narration>,
    pub drift: Option<DriftDoc>,
    pub flags: Vec<Flag>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Parents {
    pub instance_of: Vec<String>,
    pub subclass_of: Vec<String>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Weights {
    pub connection: f64,
    pub coherence: f64,
    pub depth_variance: f64,
    pub alignment: f64,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RiskDoc {
    pub weights: Weights,
    pub entity: String,
    pub p31_count: usize,
    pub p279_count: usize,
    pub dim_connection: f64,
    pub dim_coherence: f64,
    pub dim_depth_variance: f64,
    pub dim_alignment: f64,
    pub raw_parent_distances: Vec<u32>,
    pub parent_depths: Vec<(String, u32)>,
    pub unreachable_parents: Vec<String>,
    pub depth_variance: f64,
    pub cross_distance: Option<serde_json::Value>,
    pub aggregate: f64,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Narration {
    pub severity: String,
    pub dimension: String,
    pub key: String,
    pub params: Vec<(String, String)>,
    pub message: String,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DriftDoc {
    pub entity: String,
    pub parent_cnt: usize,
    pub min_depth: Option<u32>,
    pub segment: String,
    pub drift_raw: f64,
    pub drift_adj: f64,
    pub flagged: bool,
}

#[derive(Debug, Deserialize, PartialEq, Eq)]
#[serde(deny_unknown_fields)]
pub struct Flag {
    pub tag: String,
    pub detail: String,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RedundancyDoc {
    pub api: u8,
    pub qid: String,
    pub max_paths: usize,
    pub redundant: Vec<RedundantEdge>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RedundantEdge {
    pub child: String,
    pub parent: String,
    pub witnesses: Vec<Vec<String>>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimilarityDoc {
    pub api: u8,
    pub qid: String,
    pub provider: String,
    pub labels: Vec<String>,
    pub matrix: Vec<Vec<f64>>,
    pub omitted: Vec<String>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RootsDoc {
    pub api: u8,
    pub n: usize,
    pub total: usize,
    pub roots: Vec<RootView>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RootView {
    pub root: String,
    pub cnt: usize,
    pub avg_drift: f64,
    pub p90: f64,
    pub high_ratio: f64,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HeatmapDoc {
    pub api: u8,
    pub groups: Vec<String>,
    pub bins: Vec<(f64, Option<f64>)>,
    pub counts: Vec<Vec<u64>>,
    pub total: u64,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct JobDoc {
    pub api: u8,
    pub id: String,
    pub spec: serde_json::Value,
    pub state: String,
    pub progress: f64,
    pub result_path: String,
    pub rows: std::collections::BTreeMap<String, usize>,
    #[serde(default)]
    pub error: Option<String>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CatalogDoc {
    pub api: u8,
    pub requested: String,
    pub locale: String,
    pub messages: std::collections::BTreeMap<String, String>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SnapshotDoc {
    pub api: u8,
    pub data_dir: String,
    pub nodes: usize,
    pub edges: usize,
    pub texts: usize,
    pub flagged_entities: usize,
    pub drift_records: Option<usize>,
    pub roots: Option<usize>,
    pub live_fetch: bool,
}

/// Parses `body` as `T`, panicking with the body on schema mismatch.
pub fn doc<T: for<'de> Deserialize<'de>>(body: &str) -> T {
    serde_json::from_str(body).unwrap_or_else(|e| panic!("schema mismatch: {e}\n{body}"))
}

pub fn assert_similarity_shape(m: &[Vec<f64>], tol: f64) {
    for (i, row) in m.iter().enumerate() {
        assert_eq!(row.len(), m.len(), "square");
        assert!((row[i] - 1.0).abs() <= tol, "diagonal {i}: {}", row[i]);
        for (j, v) in row.iter().enumerate() {
            assert!((v - m[j][i]).abs() <= tol, "symmetry ({i},{j})");
        }
    }
}
