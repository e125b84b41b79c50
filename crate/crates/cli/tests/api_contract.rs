mod support;

use std::collections::BTreeSet;
use std::sync::Arc;
use std::sync::atomic::{AtomicBool, Ordering};
use std::time::Duration;

use support::*;
use taxolint::config::ProviderKind;
use taxolint::pipeline;

fn g1_server() -> (tempfile::TempDir, TestServer) {
    let dir = g1_artifacts();
    let server = TestServer::start(dir.path(), g1_config(dir.path()));
    (dir, server)
}

fn error_code(body: &str) -> String {
    let e: ErrorDoc = doc(body);
    assert_eq!(e.api, 1);
    assert!(!e.error.message.is_empty());
    e.error.code
}

#[test]
fn entity_summary_for_dual_role_q6() {
    let (_dir, s) = g1_server();
    let (status, body) = s.get("/api/entity/Q6");
    assert_eq!(status, 200, "{body}");
    let e: EntityDoc = doc(&body);
    assert_eq!((e.api, e.qid.as_str(), e.source.as_str()), (1, "Q6", "snapshot"));
    assert_eq!(e.label.as_deref(), Some("over-track railway station"));
    assert_eq!(e.parents.instance_of, ["Q2"]);
    assert_eq!(e.parents.subclass_of, ["Q4"]);
    assert!(e.flags.iter().any(|f| f.tag == "DualRole"), "{:?}", e.flags);

    // Root Q1: parent depths Q2=1, Q4=2; coherence 0.5/5; variance 0.25/9;
    // alignment: P31 target Q2 is one hop from P279 target Q4.
    let r = e.risk.expect("risk computed");
    let expect = [0.0, 0.1, 0.25 / 9.0, 0.1];
    let got = [r.dim_connection, r.dim_coherence, r.dim_depth_variance, r.dim_alignment];
    for (g, x) in got.iter().zip(expect) {
        assert!((g - x).abs() < 1e-12, "{got:?}");
    }
    assert!((r.aggregate - expect.iter().sum::<f64>() / 4.0).abs() < 1e-12);
    assert_eq!(e.narrative.len(), 4, "all four dimensions are strengths");
    assert!(e.narrative.iter().all(|n| n.severity == "strength"));

    let d = e.drift.expect("Q6 has two parents with text");
    assert_eq!((d.parent_cnt, d.segment.as_str()), (2, "A"));
}

#[test]
fn entity_locale_and_fallback() {
    let (_dir, s) = g1_server();
    let e: EntityDoc = doc(&s.get("/api/entity/Q4?lang=ja").1);
    assert_eq!(e.locale, "ja");
    // G1 only has English text.
    assert_eq!(e.text_language.as_deref(), Some("en"));
    assert!(e.narrative.iter().all(|n| !n.message.is_empty()));
    let en: EntityDoc = doc(&s.get("/api/entity/Q4").1);
    assert_ne!(
        e.narrative.first().map(|n| &n.message),
        en.narrative.first().map(|n| &n.message),
        "messages come from the ja catalog"
    );
    let unknown: EntityDoc = doc(&s.get("/api/entity/Q4?lang=xx").1);
    assert_eq!(unknown.locale, "en");
}

#[test]
fn entity_errors() {
    let (_dir, s) = g1_server();
    for bad in ["Q0", "q4", "Q04", "P31", "Q"] {
        let (status, body) = s.get(&format!("/api/entity/{bad}"));
        assert_eq!(status, 400, "{bad}");
        assert_eq!(error_code(&body), "MalformedId");
    }
    let (status, body) = s.get("/api/entity/Q404");
    assert_eq!(status, 404);
    assert_eq!(error_code(&body), "UnknownEntity");
    let (status, body) = s.get("/api/nowhere");
    assert_eq!(status, 404);
    error_code(&body);
}

#[test]
fn redundancy_witnesses_and_bounds() {
    let (_dir, s) = g1_server();
    let (status, body) = s.get("/api/entity/Q9/redundancy?max_paths=5");
    assert_eq!(status, 200);
    let r: RedundancyDoc = doc(&body);
    assert_eq!(r.max_paths, 5);
    assert_eq!(r.redundant.len(), 1);
    assert_eq!((r.redundant[0].child.as_str(), r.redundant[0].parent.as_str()), ("Q9", "Q1"));
    assert_eq!(r.redundant[0].witnesses, [["Q9", "Q2", "Q1"]]);

    let clean: RedundancyDoc = doc(&s.get("/api/entity/Q4/redundancy?max_paths=64").1);
    assert!(clean.redundant.is_empty());
    let default: RedundancyDoc = doc(&s.get("/api/entity/Q9/redundancy").1);
    assert_eq!(default.max_paths, 5);

    for k in ["0", "65", "-1", "x"] {
        let (status, body) = s.get(&format!("/api/entity/Q9/redundancy?max_paths={k}"));
        assert_eq!(status, 400, "k={k}");
        assert_eq!(error_code(&body), "InvalidMaxPaths");
    }
    assert_eq!(s.get("/api/entity/Q404/redundancy").0, 404);
}

#[test]
fn similarity_matrix_shape() {
    let (_dir, s) = g1_server();
    let (status, body) = s.get("/api/entity/Q4/similarity");
    assert_eq!(status, 200, "{body}");
    let m: SimilarityDoc = doc(&body);
    assert_eq!(m.labels, ["Q4", "Q2", "Q3"]);
    assert!(m.omitted.is_empty());
    assert!(m.provider.starts_with("offline:"));
    assert_similarity_shape(&m.matrix, 1e-6);
    // Regression baseline recorded from the 768-d offline provider.
    assert!((m.matrix[0][1] - 0.7812082372615428).abs() < 1e-9, "{}", m.matrix[0][1]);

    for q in ["Q6", "Q9"] {
        let m: SimilarityDoc = doc(&s.get(&format!("/api/entity/{q}/similarity")).1);
        assert_eq!(m.labels.len(), 3);
        assert_similarity_shape(&m.matrix, 1e-6);
    }
    // Q1 has no parents.
    let (status, body) = s.get("/api/entity/Q1/similarity");
    assert_eq!(status, 422);
    assert_eq!(error_code(&body), "EmptyText");
}

#[test]
fn similarity_without_texts_is_422() {
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = g1_config(dir.path());
    cfg.texts = None;
    pipeline::ingest(&cfg).unwrap();
    let s = TestServer::start(dir.path(), cfg);
    let (status, body) = s.get("/api/entity/Q4/similarity");
    assert_eq!(status, 422);
    assert_eq!(error_code(&body), "EmptyText");
    let e: EntityDoc = doc(&s.get("/api/entity/Q4").1);
    assert_eq!(e.label, None);
}

#[test]
fn roots_and_heatmap() {
    let (_dir, s) = g1_server();
    let r: RootsDoc = doc(&s.get("/api/roots/top?n=20").1);
    assert_eq!((r.total, r.roots.len()), (1, 1));
    assert_eq!((r.roots[0].root.as_str(), r.roots[0].cnt), ("Q1", 3));
    let none: RootsDoc = doc(&s.get("/api/roots/top?n=0").1);
    assert!(none.roots.is_empty());
    assert_eq!(s.get("/api/roots/top?n=abc").0, 400);

    let h: HeatmapDoc = doc(&s.get("/api/heatmap").1);
    assert_eq!(h.groups, ["<=2", "3-6", ">6"]);
    assert_eq!(h.bins.len(), 6);
    assert_eq!(h.bins.last().unwrap().1, None);
    let sum: u64 = h.counts.iter().flatten().sum();
    assert_eq!((sum, h.total), (3, 3), "cells partition the drift records");
}

#[test]
fn aggregate_views_need_drift_artifacts() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = g1_config(dir.path());
    pipeline::ingest(&cfg).unwrap();
    let s = TestServer::start(dir.path(), cfg.clone());
    for path in ["/api/roots/top", "/api/heatmap"] {
        let (status, body) = s.get(path);
        assert_eq!(status, 503, "{path}");
        assert_eq!(error_code(&body), "DriftArtifactsMissing");
    }
    let e: EntityDoc = doc(&s.get("/api/entity/Q6").1);
    assert!(e.drift.is_none());
    // Flags are computed at load when flags.csv is absent.
    assert!(e.flags.iter().any(|f| f.tag == "DualRole"));

    pipeline::drift_stage(&cfg).unwrap();
    pipeline::aggregate(&cfg).unwrap();
    pipeline::heatmap(&cfg).unwrap();
    s.state.reload().unwrap();
    assert_eq!(s.get("/api/heatmap").0, 200);
    assert_eq!(s.get("/api/roots/top").0, 200);
}

#[test]
fn reload_is_atomic_for_readers() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = g1_config(dir.path());
    pipeline::ingest(&cfg).unwrap();
    let s = Arc::new(TestServer::start(dir.path(), cfg.clone()));
    let before = s.get("/api/snapshot").1;
    pipeline::run_all(&cfg).unwrap();
    let stop = Arc::new(AtomicBool::new(false));
    let readers: Vec<_> = (0..4)
        .map(|_| {
            let (s, stop) = (Arc::clone(&s), Arc::clone(&stop));
            std::thread::spawn(move || {
                let mut seen = BTreeSet::new();
                while !stop.load(Ordering::Relaxed) {
                    seen.insert(s.get("/api/snapshot").1);
                }
                seen
            })
        })
        .collect();
    for _ in 0..10 {
        s.state.reload().unwrap();
    }
    std::thread::sleep(Duration::from_millis(50));
    stop.store(true, Ordering::Relaxed);
    let after = s.get("/api/snapshot").1;
    assert_ne!(before, after);
    for r in readers {
        for body in r.join().unwrap() {
            assert!(body == before || body == after, "torn snapshot: {body}");
        }
    }
}

#[test]
fn repeated_gets_are_byte_identical() {
    let (_dir, s) = g1_server();
    for path in [
        "/api/snapshot",
        "/api/entity/Q6",
        "/api/entity/Q4?lang=zh",
        "/api/entity/Q9/redundancy?max_paths=3",
        "/api/entity/Q4/similarity",
        "/api/roots/top?n=5",
        "/api/heatmap",
        "/api/i18n/ja",
        "/api/entity/Q0",
    ] {
        assert_eq!(s.get(path), s.get(path), "{path}");
    }
}

#[test]
fn catalogs_share_keys_and_fall_back() {
    let (_dir, s) = g1_server();
    let en: CatalogDoc = doc(&s.get("/api/i18n/en").1);
    for lang in ["zh", "ja"] {
        let c: CatalogDoc = doc(&s.get(&format!("/api/i18n/{lang}")).1);
        assert_eq!(c.locale, lang);
        assert!(c.messages.keys().eq(en.messages.keys()), "{lang} keys differ");
        assert_ne!(c.messages, en.messages);
    }
    let fallback: CatalogDoc = doc(&s.get("/api/i18n/fr").1);
    assert_eq!((fallback.requested.as_str(), fallback.locale.as_str()), ("fr", "en"));
    assert_eq!(fallback.messages, en.messages);
    for key in [
        "dimension.connection",
        "dimension.coherence",
        "dimension.depth_variance",
        "dimension.alignment",
    ] {
        assert!(en.messages.contains_key(key), "{key}");
    }
}

#[test]
fn scan_job_lifecycle() {
    let (dir, s) = g1_server();
    let (status, body) = s.post("/api/scan", r#"{"entities":["Q4","Q6"],"stages":["risk","cme","drift"]}"#);
    assert_eq!(status, 202, "{body}");
    let queued: JobDoc = doc(&body);
    assert_eq!(queued.state, "queued");
    let done = s.wait_job(&queued.id);
    assert_eq!(done.state, "done", "{:?}", done.error);
    assert_eq!(done.progress, 1.0);
    assert_eq!(done.rows["risk.csv"], 2);
    assert_eq!(done.rows["flags.csv"], 1);
    assert_eq!(done.rows["drift.csv"], 2);
    let out = dir.path().join(&done.result_path);
    let risk = std::fs::read_to_string(out.join("risk.csv")).unwrap();
    let lines: Vec<&str> = risk.lines().collect();
    assert_eq!(lines.len(), 3);
    assert!(lines[1].starts_with("Q4,0,2,") && lines[2].starts_with("Q6,1,1,"));
    assert!(dir.path().join("jobs").join(format!("{}.json", done.id)).is_file());

    let empty: JobDoc = doc(&s.post("/api/scan", r#"{"entities":[]}"#).1);
    let empty = s.wait_job(&empty.id);
    assert_eq!(empty.state, "done");
    let csv = std::fs::read_to_string(dir.path().join(&empty.result_path).join("risk.csv")).unwrap();
    assert_eq!(csv.lines().count(), 1, "header only");

    let component: JobDoc = doc(&s.post("/api/scan", r#"{"component":1,"stages":["cme"]}"#).1);
    let component = s.wait_job(&component.id);
    assert_eq!(component.rows["flags.csv"], 2, "Q7 and Q8 cycle flags");

    for bad in [
        r#"{"entities":["Q404"]}"#,
        r#"{"entities":["Q4"],"component":0}"#,
        r#"{}"#,
        r#"{"component":9}"#,
        r#"{"entities":["Q4"],"stages":["bogus"]}"#,
        "not json",
    ] {
        let (status, body) = s.post("/api/scan", bad);
        assert_eq!(status, 400, "{bad}");
        assert_eq!(error_code(&body), "InvalidScanSpec");
    }
    let (status, body) = s.get("/api/jobs/does-not-exist");
    assert_eq!(status, 404);
    assert_eq!(error_code(&body), "UnknownJob");
}

#[test]
fn scan_queue_limit_and_restart() {
    let dir = g1_artifacts();
    // An embedding endpoint that holds every request until released.
    let (release_tx, release_rx) = std::sync::mpsc::channel::<()>();
    let release_rx = std::sync::Mutex::new(release_rx);
    let endpoint = stub_http(move |_| {
        let _ = release_rx.lock().unwrap().recv_timeout(Duration::from_secs(20));
        (500, "{}".into())
    });
    let mut cfg = g1_config(dir.path());
    cfg.provider = ProviderKind::Remote;
    cfg.endpoint = Some(endpoint);
    cfg.embedding_cache = Some(dir.path().join("remote.embc"));
    cfg.max_scan_jobs = 1;
    let s = TestServer::start(dir.path(), cfg.clone());

    let blocked: JobDoc = doc(&s.post("/api/scan", r#"{"entities":["Q4"],"stages":["drift"]}"#).1);
    let (status, body) = s.post("/api/scan", r#"{"entities":["Q6"]}"#);
    assert_eq!(status, 429, "{body}");
    assert_eq!(error_code(&body), "QueueFull");
    release_tx.send(()).unwrap();
    let failed = s.wait_job(&blocked.id);
    assert_eq!(failed.state, "failed");
    assert!(failed.error.unwrap().contains("HTTP 500"));
    let (status, _) = s.post("/api/scan", r#"{"entities":["Q6"]}"#);
    assert_eq!(status, 202, "slot frees once the job ends");

    // A record left running by a crashed server reads back as failed.
    let id = "0123456789abcdef0123456789abcdef";
    let record = serde_json::json!({
        "id": id, "spec": {"entities": ["Q4"], "stages": ["risk"]}, "state": "running",
        "progress": 0.0, "result_path": format!("jobs/{id}"), "rows": {}
    });
    std::fs::write(dir.path().join("jobs").join(format!("{id}.json")), record.to_string()).unwrap();
    cfg.provider = ProviderKind::Offline;
    let restarted = TestServer::start(dir.path(), cfg);
    let job: JobDoc = doc(&restarted.get(&format!("/api/jobs/{id}")).1);
    assert_eq!(job.state, "failed");
    assert!(job.error.unwrap().contains("restart"));
    let old: JobDoc = doc(&restarted.get(&format!("/api/jobs/{}", failed.id)).1);
    assert_eq!(old.state, "failed");
}

#[test]
fn live_fetch_marks_source() {
    let dir = g1_artifacts();
    let body = std::fs::read_to_string(fixture("wbgetentities_Q10.json")).unwrap();
    let endpoint = stub_http(move |line| {
        if line.contains("ids=Q10&") {
            (200, body.clone())
        } else {
            (200, r#"{"error":{"code":"no-such-entity","info":"missing"},"success":0}"#.into())
        }
    });
    let mut cfg = g1_config(dir.path());
    cfg.live_fetch = true;
    cfg.wikidata_endpoint = format!("{endpoint}/w/api.php");
    let s = TestServer::start(dir.path(), cfg);
    let (status, body) = s.get("/api/entity/Q10");
    if taxolint_core::ingest::offline() {
        assert_eq!(status, 404, "{body}");
        return;
    }
    assert_eq!(status, 200, "{body}");
    let e: EntityDoc = doc(&body);
    assert_eq!(e.source, "live");
    assert_eq!(e.label.as_deref(), Some("heritage railway station"));
    assert_eq!(e.parents.subclass_of, ["Q4"]);
    assert_eq!(e.parents.instance_of, ["Q3"]);
    let r = e.risk.unwrap();
    assert_eq!((r.p31_count, r.p279_count), (1, 1));
    // P31 target Q3 is also an ancestor through Q4.
    assert!(e.flags.iter().any(|f| f.tag == "DualRole"), "{:?}", e.flags);

    let (status, body) = s.get("/api/entity/Q11");
    assert_eq!(status, 404);
    assert_eq!(error_code(&body), "UnknownEntity");
}

#[test]
fn absent_entity_is_404_when_live_fetch_is_off() {
    let (_dir, s) = g1_server();
    let snapshot: SnapshotDoc = doc(&s.get("/api/snapshot").1);
    assert!(!snapshot.live_fetch);
    assert_eq!((snapshot.nodes, snapshot.edges, snapshot.drift_records), (9, 11, Some(3)));
    assert_eq!(s.get("/api/entity/Q10").0, 404);
}

#[test]
fn index_page_without_console() {
    let (_dir, s) = g1_server();
    let (status, body) = s.get("/");
    assert_eq!(status, 200);
    assert!(body.contains("/api/entity/"));
}

#[test]
fn console_dir_is_served_at_root() {
    let dir = g1_artifacts();
    let console = tempfile::tempdir().unwrap();
    std::fs::write(console.path().join("index.html"), "<title>console</title>").unwrap();
    let mut cfg = g1_config(dir.path());
    cfg.console_dir = Some(console.path().to_owned());
    let s = TestServer::start(dir.path(), cfg);
    assert_eq!(s.get("/"), (200, "<title>console</title>".to_owned()));
    assert_eq!(s.get("/api/entity/Q4").0, 200);
}
