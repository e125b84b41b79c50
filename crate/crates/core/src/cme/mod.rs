//! Composite-meaning entity detection: component segmentation, entry points,
//! anti-pattern rules, and the pure-class / entity-tree analysis.

mod antipattern;
mod components;
mod pure;

use std::io::{self, Write};

use serde::Serialize;

pub use antipattern::{
    detect_anti_patterns, detect_in_components, redundant_edges, AntiPatternFlag, AntiPatternTag,
    DetectorConfig, FlagDetail, RedundantEdge, DEFAULT_MAX_DEPTH,
};
pub use components::{
    descendants, entry_points, sample_component, summarize_components, weakly_connected_components,
    ComponentId, ComponentLabeling, ComponentSummary,
};
pub use pure::{pure_class_filter, PureClassReport};

use crate::graph::TaxonomyGraph;
use crate::policy::MetaclassPolicy;

/// Everything the detection stage produces for one graph.
#[derive(Clone, Debug, Serialize)]
pub struct CmeReport {
    pub components: Vec<ComponentSummary>,
    pub flags: Vec<AntiPatternFlag>,
}

pub fn run_cme(g: &TaxonomyGraph, policy: &MetaclassPolicy, config: &DetectorConfig) -> CmeReport {
    let labeling = weakly_connected_components(g);
    CmeReport {
        components: summarize_components(g, &labeling),
        flags: detect_in_components(g, &labeling, policy, config),
    }
}

/// `qid,tag,detail`
pub fn write_flags_csv<W: Write>(flags: &[AntiPatternFlag], mut out: W) -> io::Result<()> {
    writeln!(out, "qid,tag,detail")?;
    for f in flags {
        writeln!(out, "{},{},{}", f.entity, f.tag, f.detail.compact())?;
    }
    out.flush()
}

/// `component,size,smallest_qid,entry_points`
pub fn write_components_csv<W: Write>(components: &[ComponentSummary], mut out: W) -> io::Result<()> {
    writeln!(out, "component,size,smallest_qid,entry_points")?;
    for c in components {
        let entries: Vec<String> = c.entry_points.iter().map(|e| e.to_string()).collect();
        writeln!(out, "{},{},{},{}", c.id, c.size, c.smallest, entries.join(" "))?;
    }
    out.flush()
}

/// `qid,with_instances,tree_root`
pub fn write_pure_classes_csv<W: Write>(report: &PureClassReport, mut out: W) -> io::Result<()> {
    writeln!(out, "qid,with_instances,tree_root")?;
    for id in &report.pure_classes {
        writeln!(
            out,
            "{},{},{}",
            id,
            report.pure_with_instances.contains(id),
            report.tree_roots.contains(id)
        )?;
    }
    out.flush()
}
