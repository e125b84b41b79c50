use std::collections::{BTreeMap, HashMap};
use std::path::{Path, PathBuf};

use serde::Serialize;
use taxolint_core::cme::{self, DetectorConfig};
use taxolint_core::drift::{self, DriftRow, Heatmap, RootAggregate};
use taxolint_core::ingest::clean_relations;
use taxolint_core::{EntityId, EntityText, MetaclassPolicy, TaxonomyGraph};

use crate::config::PipelineConfig;
use crate::error::{CliError, CliResult};
use crate::pipeline::{self, FLAGS};

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct FlagView {
    pub tag: String,
    pub detail: String,
}

/// Everything the API reads, loaded once and never mutated.
pub struct Snapshot {
    pub data_dir: PathBuf,
    pub graph: TaxonomyGraph,
    /// The graph without technical nodes; drift and similarity use this one.
    pub clean: TaxonomyGraph,
    pub policy: MetaclassPolicy,
    pub texts: HashMap<EntityId, BTreeMap<String, EntityText>>,
    pub drift: Option<BTreeMap<EntityId, DriftRow>>,
    pub roots: Option<Vec<RootAggregate>>,
    pub heatmap: Option<Heatmap>,
    pub flags: BTreeMap<EntityId, Vec<FlagView>>,
    pub flags_from_csv: bool,
}

#[derive(Clone, Debug, Serialize)]
pub struct SnapshotStats {
    pub nodes: usize,
    pub edges: usize,
    pub texts: usize,
    pub flagged_entities: usize,
    pub drift_records: Option<usize>,
    pub roots: Option<usize>,
}

fn optional<T>(result: CliResult<T>) -> CliResult<Option<T>> {
    match result {
        Ok(v) => Ok(Some(v)),
        Err(e) if e.exit == crate::Exit::MissingArtifact => Ok(None),
        Err(e) => Err(e),
    }
}

impl Snapshot {
    /// `triples.tsv` is required; every other artifact is optional.
    pub fn load(dir: &Path, cfg: &PipelineConfig) -> CliResult<Self> {
        if !dir.is_dir() {
            return Err(CliError::missing(dir, "ingest --out <dir>"));
        }
        let graph = pipeline::load_graph(dir)?;
        let policy = cfg.policy()?;
        let clean = clean_relations(&graph, &policy).graph;

        let mut texts: HashMap<EntityId, BTreeMap<String, EntityText>> = HashMap::new();
        for t in optional(pipeline::load_texts(dir))?.unwrap_or_default() {
            texts.entry(t.entity).or_default().entry(t.language.clone()).or_insert(t);
        }

        let rows = optional(pipeline::load_drift(dir))?;
        let heatmap = match optional(pipeline::load_heatmap(dir))? {
            Some(h) => Some(h),
            None => rows.as_ref().map(|r| drift::heatmap(r)),
        };
        let roots = match optional(pipeline::load_roots(dir))? {
            Some(r) => Some(r),
            None => rows.as_ref().map(|r| {
                let keys = drift::assign_pseudo_roots(&clean);
                drift::aggregate_by_root(r.iter().map(|x| (x.entity, x.drift_adj)), &keys, cfg.drift_threshold)
            }),
        };
        let drift = rows.map(|r| r.into_iter().map(|row| (row.entity, row)).collect());

        let mut flags: BTreeMap<EntityId, Vec<FlagView>> = BTreeMap::new();
        let flags_from_csv = dir.join(FLAGS).is_file();
        if flags_from_csv {
            for f in pipeline::load_flags(dir)? {
                flags.entry(f.qid).or_default().push(FlagView {
                    tag: f.tag,
                    detail: f.detail,
                });
            }
        } else {
            let report = cme::run_cme(&graph, &policy, &DetectorConfig::with_max_paths(cfg.max_paths));
            for f in report.flags {
                flags.entry(f.entity).or_default().push(FlagView {
                    tag: f.tag.as_str().to_owned(),
                    detail: f.detail.compact(),
                });
            }
        }

        Ok(Self {
            data_dir: dir.to_owned(),
            graph,
            clean,
            policy,
            texts,
            drift,
            roots,
            heatmap,
            flags,
            flags_from_csv,
        })
    }

    pub fn stats(&self) -> SnapshotStats {
        SnapshotStats {
            nodes: self.graph.node_count(),
            edges: self.graph.total_edges(),
            texts: self.texts.values().map(BTreeMap::len).sum(),
            flagged_entities: self.flags.len(),
            drift_records: self.drift.as_ref().map(BTreeMap::len),
            roots: self.roots.as_ref().map(Vec::len),
        }
    }

    /// Text in `locale`, else English.
    pub fn text(&self, entity: EntityId, locale: &str) -> Option<&EntityText> {
        let by_lang = self.texts.get(&entity)?;
        by_lang.get(locale).or_else(|| by_lang.get("en"))
    }
}
