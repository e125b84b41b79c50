//! Per-entity structural risk: link counts, parent distances, depth spread
//! and instance/subclass target distance, combined by weighted mean.

mod catalog;
mod narrate;
mod scores;

use std::io::{self, Write};

use rayon::prelude::*;

pub use catalog::{CatalogError, Catalogs, Locale};
pub use narrate::{narrate_risk, Dimension, Narration, Severity, ISSUE_ABOVE, STRENGTH_BELOW};
pub use scores::{
    aggregate_risk, alignment_score, coherence_score, connection_score, depth_variance_score,
    DepthVariance, InvalidWeights, ParentScope, RiskConfig, RiskReport, RiskWeights, DEFAULT_ROOT,
    REFERENCE_P279, REFERENCE_P31,
};

use crate::error::GraphError;
use crate::graph::TaxonomyGraph;
use crate::id::EntityId;
use crate::policy::MetaclassPolicy;

/// Scores `entities` in parallel; output follows input order.
pub fn score_entities(
    g: &TaxonomyGraph,
    entities: &[EntityId],
    weights: &RiskWeights,
    policy: &MetaclassPolicy,
    config: &RiskConfig,
) -> Result<Vec<RiskReport>, GraphError> {
    entities
        .par_iter()
        .map(|&e| aggregate_risk(g, e, weights, policy, config))
        .collect()
}

pub const RISK_CSV_HEADER: &str =
    "qid,p31_cnt,p279_cnt,dim_connection,dim_coherence,dim_depth_var,dim_alignment,aggregate";

pub fn write_risk_csv<W: Write>(reports: &[RiskReport], mut out: W) -> io::Result<()> {
    writeln!(out, "{RISK_CSV_HEADER}")?;
    for r in reports {
        writeln!(
            out,
            "{},{},{},{},{},{},{},{}",
            r.entity,
            r.p31_count,
            r.p279_count,
            r.dim_connection,
            r.dim_coherence,
            r.dim_depth_variance,
            r.dim_alignment,
            r.aggregate
        )?;
    }
    out.flush()
}
