//! Background scan jobs. Each job record lives in `<data>/jobs/<id>.json`,
//! its CSVs in `<data>/jobs/<id>/`.

use std::collections::{BTreeMap, BTreeSet};
use std::path::{Path, PathBuf};
use std::sync::{Arc, Mutex};

use serde::{Deserialize, Serialize};
use taxolint_core::cme::weakly_connected_components;
use taxolint_core::drift::{self, Embedder};
use taxolint_core::risk;
use taxolint_core::EntityId;

use super::snapshot::Snapshot;
use crate::config::PipelineConfig;
use crate::pipeline::{write_atomic, texts_in};

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Stage {
    Risk,
    Cme,
    Drift,
}

impl Stage {
    fn file(self) -> &'static str {
        match self {
            Stage::Risk => "risk.csv",
            Stage::Cme => "flags.csv",
            Stage::Drift => "drift.csv",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScanSpec {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub entities: Option<Vec<EntityId>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub component: Option<u32>,
    #[serde(default = "default_stages")]
    pub stages: Vec<Stage>,
}

fn default_stages() -> Vec<Stage> {
    vec![Stage::Risk]
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum JobState {
    Queued,
    Running,
    Done,
    Failed,
}

impl JobState {
    pub fn is_active(self) -> bool {
        matches!(self, JobState::Queued | JobState::Running)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScanJob {
    pub id: String,
    pub spec: ScanSpec,
    pub state: JobState,
    pub progress: f64,
    pub result_path: String,
    /// Rows written per output file.
    #[serde(default)]
    pub rows: BTreeMap<String, usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

#[derive(Debug)]
pub enum SubmitError {
    Full(usize),
    Invalid(String),
    Io(String),
}

pub struct JobManager {
    dir: PathBuf,
    limit: usize,
    jobs: Mutex<BTreeMap<String, ScanJob>>,
}

impl JobManager {
    /// Loads persisted jobs. Anything left queued or running was interrupted
    /// by a restart and is marked failed.
    pub fn open(dir: &Path, limit: usize) -> std::io::Result<Self> {
        std::fs::create_dir_all(dir)?;
        let mut jobs = BTreeMap::new();
        for entry in std::fs::read_dir(dir)? {
            let path = entry?.path();
            if path.extension().is_none_or(|x| x != "json") {
                continue;
            }
            let Ok(text) = std::fs::read_to_string(&path) else { continue };
            let Ok(mut job) = serde_json::from_str::<ScanJob>(&text) else {
                log::warn!("ignoring unreadable job record {}", path.display());
                continue;
            };
            if job.state.is_active() {
                job.state = JobState::Failed;
                job.error = Some("interrupted by server restart".into());
                persist(dir, &job).map_err(std::io::Error::other)?;
            }
            jobs.insert(job.id.clone(), job);
        }
        Ok(Self {
            dir: dir.to_owned(),
            limit: limit.max(1),
            jobs: Mutex::new(jobs),
        })
    }

    pub fn get(&self, id: &str) -> Option<ScanJob> {
        self.jobs.lock().expect("job table poisoned").get(id).cloned()
    }

    fn update(&self, job: &ScanJob) {
        if let Err(e) = persist(&self.dir, job) {
            log::error!("cannot persist job {}: {e}", job.id);
        }
        self.jobs.lock().expect("job table poisoned").insert(job.id.clone(), job.clone());
    }

    /// Validates `spec` against the snapshot, records the job as queued and
    /// starts it on a worker thread.
    pub fn submit(
        self: &Arc<Self>,
        spec: ScanSpec,
        snapshot: Arc<Snapshot>,
        config: Arc<PipelineConfig>,
        embedder: Arc<Embedder>,
    ) -> Result<ScanJob, SubmitError> {
        let entities = resolve(&spec, &snapshot)?;
        let id = uuid::Uuid::new_v4().simple().to_string();
        let job = ScanJob {
            result_path: format!("jobs/{id}"),
            id: id.clone(),
            spec,
            state: JobState::Queued,
            progress: 0.0,
            rows: BTreeMap::new(),
            error: None,
        };
        {
            let mut jobs = self.jobs.lock().expect("job table poisoned");
            let active = jobs.values().filter(|j| j.state.is_active()).count();
            if active >= self.limit {
                return Err(SubmitError::Full(self.limit));
            }
            persist(&self.dir, &job).map_err(SubmitError::Io)?;
            jobs.insert(id.clone(), job.clone());
        }
        let manager = Arc::clone(self);
        let queued = job.clone();
        std::thread::spawn(move || manager.run(queued, entities, &snapshot, &config, &embedder));
        Ok(job)
    }

    fn run(&self, mut job: ScanJob, entities: Vec<EntityId>, snap: &Snapshot, cfg: &PipelineConfig, embedder: &Embedder) {
        job.state = JobState::Running;
        self.update(&job);
        let out = self.dir.join(&job.id);
        let stages: BTreeSet<Stage> = job.spec.stages.iter().copied().collect();
        let total = stages.len().max(1);
        for (i, stage) in stages.into_iter().enumerate() {
            match run_stage(stage, &entities, &out, snap, cfg, embedder) {
                Ok(rows) => {
                    job.rows.insert(stage.file().to_owned(), rows);
                    job.progress = (i + 1) as f64 / total as f64;
                    self.update(&job);
                }
                Err(e) => {
                    job.state = JobState::Failed;
                    job.error = Some(e);
                    self.update(&job);
                    return;
                }
            }
        }
        job.progress = 1.0;
        job.state = JobState::Done;
        self.update(&job);
    }
}

fn persist(dir: &Path, job: &ScanJob) -> Result<(), String> {
    write_atomic(&dir.join(format!("{}.json", job.id)), |w| {
        serde_json::to_writer_pretty(&mut *w, job)?;
        writeln!(w)
    })
    .map_err(|e| e.message)
}

fn resolve(spec: &ScanSpec, snap: &Snapshot) -> Result<Vec<EntityId>, SubmitError> {
    match (&spec.entities, spec.component) {
        (Some(list), None) => {
            if let Some(missing) = list.iter().find(|id| !snap.graph.contains(**id)) {
                return Err(SubmitError::Invalid(format!("{missing} is not in the snapshot")));
            }
            let mut ids = list.clone();
            ids.sort_unstable();
            ids.dedup();
            Ok(ids)
        }
        (None, Some(c)) => {
            let labeling = weakly_connected_components(&snap.graph);
            if c as usize >= labeling.component_count() {
                return Err(SubmitError::Invalid(format!("no component {c}")));
            }
            Ok(labeling.member_ids(&snap.graph, c))
        }
        _ => Err(SubmitError::Invalid("give exactly one of `entities` or `component`".into())),
    }
}

fn run_stage(
    stage: Stage,
    entities: &[EntityId],
    out: &Path,
    snap: &Snapshot,
    cfg: &PipelineConfig,
    embedder: &Embedder,
) -> Result<usize, String> {
    let path = out.join(stage.file());
    let done = |r: crate::CliResult<()>| r.map_err(|e| e.message);
    match stage {
        Stage::Risk => {
            let weights = cfg.weights().map_err(|e| e.message)?;
            let reports = risk::score_entities(&snap.graph, entities, &weights, &snap.policy, &cfg.risk_config())
                .map_err(|e| e.to_string())?;
            done(write_atomic(&path, |w| risk::write_risk_csv(&reports, w)))?;
            Ok(reports.len())
        }
        Stage::Cme => {
            let mut n = 0;
            done(write_atomic(&path, |w| {
                writeln!(w, "qid,tag,detail")?;
                for id in entities {
                    for f in snap.flags.get(id).into_iter().flatten() {
                        writeln!(w, "{id},{},{}", f.tag, f.detail)?;
                        n += 1;
                    }
                }
                Ok(())
            }))?;
            Ok(n)
        }
        Stage::Drift => {
            let wanted: BTreeSet<EntityId> = entities.iter().copied().collect();
            let texts: Vec<_> = snap.texts.values().flat_map(|m| m.values().cloned()).collect();
            let run = drift::run_drift(&snap.clean, &texts_in(&texts, &cfg.language), embedder, cfg.drift_threshold)
                .map_err(|e| e.to_string())?;
            let rows: Vec<_> = run.rows.into_iter().filter(|r| wanted.contains(&r.entity)).collect();
            done(write_atomic(&path, |w| drift::write_drift_csv(&rows, w)))?;
            Ok(rows.len())
        }
    }
}
