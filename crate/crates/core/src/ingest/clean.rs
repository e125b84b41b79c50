use crate::graph::{GraphBuilder, TaxonomyGraph};
use crate::policy::MetaclassPolicy;

/// The graph with technical nodes removed as parents (E_clean).
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CleanedRelations {
    pub graph: TaxonomyGraph,
    pub excluded_edge_count: usize,
}

/// Drops every edge whose parent is a technical node. Technical nodes that
/// appear only as children stay in the graph with their outgoing edges.
pub fn clean_relations(graph: &TaxonomyGraph, policy: &MetaclassPolicy) -> CleanedRelations {
    let mut builder = GraphBuilder::with_capacity(graph.total_edges());
    let mut excluded = 0;
    for e in graph.edges() {
        if policy.is_technical(e.parent) {
            excluded += 1;
        } else {
            builder.add_edge(e.child, e.kind, e.parent);
        }
    }
    // Keep the node set stable even when a node loses all of its edges.
    for &id in graph.entities() {
        builder.add_node(id);
    }
    CleanedRelations {
        graph: builder.finalize(),
        excluded_edge_count: excluded,
    }
}
