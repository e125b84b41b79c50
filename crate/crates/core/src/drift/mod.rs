//! Semantic drift: structural screening, text embeddings, centroid drift,
//! pseudo-root aggregation and heatmap binning.

mod aggregate;
mod embed;
mod math;
mod screen;

use std::collections::{BTreeMap, HashMap};
use std::io::{self, BufRead, Write};

use rayon::prelude::*;
use serde::Serialize;

pub use aggregate::{
    aggregate_by_root, bin_bounds, bin_of, heatmap, nearest_rank, DriftRow, Heatmap, ParentGroup, RootAggregate,
    BIN_EDGES,
};
pub use embed::{
    content_hash, ContentHash, Embedder, Embedding, EmbeddingCache, EmbeddingProvider, HashingProvider,
    RemoteProvider, DEFAULT_DIMENSION, REFERENCE_MODEL,
};
pub use math::{adjust, cosine, drift, is_flagged, mean_parent_embedding, DriftRecord, DriftScore, DEFAULT_THRESHOLD};
pub use screen::{
    assign_pseudo_roots, drift_parents, screen, screen_with, PseudoRoots, RootKey, Screening, ScreeningRecord,
    Segment,
};

use crate::error::{EmbedError, IngestError};
use crate::graph::TaxonomyGraph;
use crate::id::EntityId;
use crate::text::EntityText;

/// Why a screened entity got no drift value.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub enum SkipReason {
    /// The entity or one of its parents has no text.
    MissingText(EntityId),
    /// Label and description are both empty.
    EmptyText(EntityId),
    /// The vectors could not be combined (mixed dimensions).
    Vectors(String),
}

#[derive(Clone, Debug, Serialize)]
pub struct DriftRun {
    /// Ascending by entity.
    pub rows: Vec<DriftRow>,
    pub discarded: usize,
    pub skipped: Vec<(EntityId, SkipReason)>,
    #[serde(skip)]
    pub roots: BTreeMap<EntityId, RootKey>,
}

impl DriftRun {
    pub fn aggregates(&self, threshold: f64) -> Vec<RootAggregate> {
        aggregate_by_root(self.rows.iter().map(|r| (r.entity, r.drift_adj)), &self.roots, threshold)
    }

    pub fn heatmap(&self) -> Heatmap {
        heatmap(&self.rows)
    }
}

/// Screens the cleaned graph, embeds every screened entity and its parents,
/// and scores drift. An entity is skipped unless it and all of its parents
/// have usable text, so `n` always equals `parent_cnt`.
pub fn run_drift(
    g: &TaxonomyGraph,
    texts: &HashMap<EntityId, EntityText>,
    embedder: &Embedder,
    threshold: f64,
) -> Result<DriftRun, EmbedError> {
    let roots = PseudoRoots::compute(g);
    let screening = screen_with(g, &roots);

    let mut needed: Vec<EntityId> = Vec::new();
    for r in &screening.records {
        let v = g.node(r.entity).expect("screened entities are in the graph");
        needed.push(r.entity);
        needed.extend(g.ids_of(&drift_parents(g, v)));
    }
    needed.sort_unstable();
    needed.dedup();

    let with_text: Vec<&EntityText> = needed.iter().filter_map(|id| texts.get(id)).collect();
    let inputs: Vec<EntityText> = with_text.iter().map(|&t| t.clone()).collect();
    let mut vectors: HashMap<EntityId, Result<Embedding, SkipReason>> = HashMap::with_capacity(inputs.len());
    for (t, result) in inputs.iter().zip(embedder.embed_many(&inputs)) {
        let v = match result {
            Ok(v) => Ok(v),
            Err(EmbedError::EmptyText) => Err(SkipReason::EmptyText(t.entity)),
            Err(e) => return Err(e),
        };
        vectors.insert(t.entity, v);
    }
    let lookup = |id: EntityId| -> Result<&Embedding, SkipReason> {
        match vectors.get(&id) {
            None => Err(SkipReason::MissingText(id)),
            Some(Ok(v)) => Ok(v),
            Some(Err(reason)) => Err(reason.clone()),
        }
    };

    let scored: Vec<Result<DriftRow, (EntityId, SkipReason)>> = screening
        .records
        .par_iter()
        .map(|r| {
            let v = g.node(r.entity).expect("screened entities are in the graph");
            let e = lookup(r.entity).map_err(|s| (r.entity, s))?;
            let parents = drift_parents(g, v)
                .into_iter()
                .map(|p| lookup(g.id(p)).cloned())
                .collect::<Result<Vec<_>, _>>()
                .map_err(|s| (r.entity, s))?;
            let s = drift(e, &parents, threshold).map_err(|err| (r.entity, SkipReason::Vectors(err.to_string())))?;
            Ok(DriftRow {
                entity: r.entity,
                parent_cnt: r.parent_cnt,
                min_depth: r.min_depth,
                segment: r.segment,
                drift_raw: s.drift_raw,
                drift_adj: s.drift_adj,
                flagged: s.flagged,
            })
        })
        .collect();

    let mut run = DriftRun {
        rows: Vec::with_capacity(scored.len()),
        discarded: screening.discarded,
        skipped: Vec::new(),
        roots: roots.to_map(),
    };
    for s in scored {
        match s {
            Ok(row) => run.rows.push(row),
            Err(skip) => run.skipped.push(skip),
        }
    }
    Ok(run)
}

/// Pairwise cosine similarity matrix.
pub fn similarity_matrix(vectors: &[Embedding]) -> Vec<Vec<f64>> {
    vectors
        .iter()
        .map(|a| vectors.iter().map(|b| a.cosine(b)).collect())
        .collect()
}

pub const DRIFT_CSV_HEADER: &str = "qid,parent_cnt,min_depth,segment,drift_raw,drift_adj,flagged";
pub const ROOTS_CSV_HEADER: &str = "root_qid,cnt,avg_drift,p90,high_ratio";
pub const HEATMAP_CSV_HEADER: &str = "group,bin_lo,bin_hi,count";

pub fn write_drift_csv<W: Write>(rows: &[DriftRow], mut out: W) -> io::Result<()> {
    writeln!(out, "{DRIFT_CSV_HEADER}")?;
    for r in rows {
        let depth = r.min_depth.map(|d| d.to_string()).unwrap_or_default();
        writeln!(
            out,
            "{},{},{},{},{},{},{}",
            r.entity, r.parent_cnt, depth, r.segment, r.drift_raw, r.drift_adj, r.flagged
        )?;
    }
    out.flush()
}

pub fn write_roots_csv<W: Write>(aggs: &[RootAggregate], mut out: W) -> io::Result<()> {
    writeln!(out, "{ROOTS_CSV_HEADER}")?;
    for a in aggs {
        writeln!(out, "{},{},{},{},{}", a.root, a.cnt, a.avg_drift, a.p90, a.high_ratio)?;
    }
    out.flush()
}

pub fn write_heatmap_csv<W: Write>(h: &Heatmap, mut out: W) -> io::Result<()> {
    writeln!(out, "{HEATMAP_CSV_HEADER}")?;
    for (g, lo, hi, count) in h.cells() {
        writeln!(out, "{g},{lo},{hi},{count}")?;
    }
    out.flush()
}

fn data_lines<R: BufRead>(reader: R, header: &str) -> Result<Vec<(usize, String)>, IngestError> {
    let mut lines = Vec::new();
    for (i, line) in reader.lines().enumerate() {
        let line = line?;
        let line = line.trim_end_matches('\r');
        if i == 0 {
            if line != header {
                return Err(IngestError::MalformedLine(format!("expected header {header:?}, found {line:?}")));
            }
            continue;
        }
        if !line.is_empty() {
            lines.push((i + 1, line.to_owned()));
        }
    }
    Ok(lines)
}

fn field<T: std::str::FromStr>(line_no: usize, name: &str, s: &str) -> Result<T, IngestError> {
    s.parse()
        .map_err(|_| IngestError::MalformedLine(format!("line {line_no}: bad {name} {s:?}")))
}

fn split_exact<'a>(line_no: usize, line: &'a str, n: usize) -> Result<Vec<&'a str>, IngestError> {
    let cols: Vec<&str> = line.split(',').collect();
    if cols.len() != n {
        return Err(IngestError::MalformedLine(format!(
            "line {line_no}: expected {n} columns, found {}",
            cols.len()
        )));
    }
    Ok(cols)
}

pub fn read_drift_csv<R: BufRead>(reader: R) -> Result<Vec<DriftRow>, IngestError> {
    data_lines(reader, DRIFT_CSV_HEADER)?
        .into_iter()
        .map(|(no, line)| {
            let c = split_exact(no, &line, 7)?;
            Ok(DriftRow {
                entity: field(no, "qid", c[0])?,
                parent_cnt: field(no, "parent_cnt", c[1])?,
                min_depth: if c[2].is_empty() { None } else { Some(field(no, "min_depth", c[2])?) },
                segment: field(no, "segment", c[3])?,
                drift_raw: field(no, "drift_raw", c[4])?,
                drift_adj: field(no, "drift_adj", c[5])?,
                flagged: field(no, "flagged", c[6])?,
            })
        })
        .collect()
}

pub fn read_roots_csv<R: BufRead>(reader: R) -> Result<Vec<RootAggregate>, IngestError> {
    data_lines(reader, ROOTS_CSV_HEADER)?
        .into_iter()
        .map(|(no, line)| {
            let c = split_exact(no, &line, 5)?;
            Ok(RootAggregate {
                root: field(no, "root_qid", c[0])?,
                cnt: field(no, "cnt", c[1])?,
                avg_drift: field(no, "avg_drift", c[2])?,
                p90: field(no, "p90", c[3])?,
                high_ratio: field(no, "high_ratio", c[4])?,
            })
        })
        .collect()
}

pub fn read_heatmap_csv<R: BufRead>(reader: R) -> Result<Heatmap, IngestError> {
    let mut h = Heatmap::default();
    for (no, line) in data_lines(reader, HEATMAP_CSV_HEADER)? {
        let c = split_exact(no, &line, 4)?;
        let group = ParentGroup::parse(c[0])
            .ok_or_else(|| IngestError::MalformedLine(format!("line {no}: bad group {:?}", c[0])))?;
        let lo: f64 = field(no, "bin_lo", c[1])?;
        let bin = BIN_EDGES
            .iter()
            .position(|&e| e == lo)
            .ok_or_else(|| IngestError::MalformedLine(format!("line {no}: unknown bin {lo}")))?;
        h.counts[group as usize][bin] = field(no, "count", c[3])?;
    }
    Ok(h)
}
