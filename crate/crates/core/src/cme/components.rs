use std::collections::VecDeque;

use rand::seq::index;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::error::GraphError;
use crate::graph::{Direction, DistanceMode, Node, TaxonomyGraph};
use crate::id::{EdgeKind, EntityId};

pub type ComponentId = u32;

/// Weakly connected components over the union of both edge kinds.
///
/// Component ids are dense and ordered by each component's smallest member.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ComponentLabeling {
    component_of: Vec<ComponentId>,
    sizes: Vec<usize>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct ComponentSummary {
    pub id: ComponentId,
    pub size: usize,
    pub smallest: EntityId,
    pub entry_points: Vec<EntityId>,
}

impl ComponentLabeling {
    pub fn component_count(&self) -> usize {
        self.sizes.len()
    }

    pub fn component_of(&self, g: &TaxonomyGraph, id: EntityId) -> Result<ComponentId, GraphError> {
        Ok(self.component_of[g.node(id)? as usize])
    }

    pub(crate) fn component_of_node(&self, node: Node) -> ComponentId {
        self.component_of[node as usize]
    }

    pub fn size(&self, component: ComponentId) -> Option<usize> {
        self.sizes.get(component as usize).copied()
    }

    pub fn sizes(&self) -> &[usize] {
        &self.sizes
    }

    /// Member ordinals of every component, each list ascending.
    pub(crate) fn members(&self) -> Vec<Vec<Node>> {
        let mut out: Vec<Vec<Node>> = self.sizes.iter().map(|&s| Vec::with_capacity(s)).collect();
        for (node, &c) in self.component_of.iter().enumerate() {
            out[c as usize].push(node as Node);
        }
        out
    }

    pub fn member_ids(&self, g: &TaxonomyGraph, component: ComponentId) -> Vec<EntityId> {
        self.component_of
            .iter()
            .enumerate()
            .filter(|&(_, &c)| c == component)
            .map(|(n, _)| g.id(n as Node))
            .collect()
    }
}

pub fn weakly_connected_components(g: &TaxonomyGraph) -> ComponentLabeling {
    const UNSEEN: ComponentId = ComponentId::MAX;
    let n = g.node_count();
    let mut component_of = vec![UNSEEN; n];
    let mut sizes = Vec::new();
    let mut queue = VecDeque::new();
    // Ordinals follow id order, so the first unseen node is the smallest
    // member of a new component.
    for start in 0..n as Node {
        if component_of[start as usize] != UNSEEN {
            continue;
        }
        let id = sizes.len() as ComponentId;
        let mut size = 0;
        component_of[start as usize] = id;
        queue.push_back(start);
        while let Some(u) = queue.pop_front() {
            size += 1;
            g.for_each_step(u, DistanceMode::UndirectedUnion, |v| {
                if component_of[v as usize] == UNSEEN {
                    component_of[v as usize] = id;
                    queue.push_back(v);
                }
            });
        }
        sizes.push(size);
    }
    ComponentLabeling {
        component_of,
        sizes,
    }
}

pub(crate) fn has_no_parents(g: &TaxonomyGraph, node: Node) -> bool {
    EdgeKind::ALL
        .iter()
        .all(|&k| g.adjacent(node, k, Direction::Out).is_empty())
}

/// Nodes of `component` without outgoing edges, ascending. Empty when every
/// node has a parent, which implies a cycle.
pub fn entry_points(g: &TaxonomyGraph, labeling: &ComponentLabeling, component: ComponentId) -> Vec<EntityId> {
    (0..g.node_count() as Node)
        .filter(|&n| labeling.component_of_node(n) == component && has_no_parents(g, n))
        .map(|n| g.id(n))
        .collect()
}

pub fn summarize_components(g: &TaxonomyGraph, labeling: &ComponentLabeling) -> Vec<ComponentSummary> {
    labeling
        .members()
        .into_iter()
        .enumerate()
        .map(|(c, members)| ComponentSummary {
            id: c as ComponentId,
            size: members.len(),
            smallest: g.id(members[0]),
            entry_points: members
                .iter()
                .filter(|&&n| has_no_parents(g, n))
                .map(|&n| g.id(n))
                .collect(),
        })
        .collect()
}

/// Proper descendants of `root` (reverse edges of either kind), ascending.
pub fn descendants(g: &TaxonomyGraph, root: EntityId) -> Result<Vec<EntityId>, GraphError> {
    let start = g.node(root)?;
    let mut seen = vec![false; g.node_count()];
    seen[start as usize] = true;
    let mut queue = VecDeque::from([start]);
    let mut out = Vec::new();
    while let Some(u) = queue.pop_front() {
        for kind in EdgeKind::ALL {
            for &v in g.adjacent(u, kind, Direction::In) {
                if !seen[v as usize] {
                    seen[v as usize] = true;
                    out.push(v);
                    queue.push_back(v);
                }
            }
        }
    }
    out.sort_unstable();
    Ok(g.ids_of(&out))
}

/// Uniform sample without replacement from the descendants of `root`,
/// truncated to however many exist. Deterministic in `rng_seed`.
pub fn sample_component(
    g: &TaxonomyGraph,
    root: EntityId,
    size: usize,
    rng_seed: u64,
) -> Result<Vec<EntityId>, GraphError> {
    let pool = descendants(g, root)?;
    if size >= pool.len() {
        return Ok(pool);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(rng_seed);
    let mut picked = index::sample(&mut rng, pool.len(), size).into_vec();
    picked.sort_unstable();
    Ok(picked.into_iter().map(|i| pool[i]).collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures::{g1, q};
    use crate::graph::{Edge, GraphBuilder};

    #[test]
    fn g1_has_two_components() {
        let g = g1();
        let wcc = weakly_connected_components(&g);
        assert_eq!(wcc.component_count(), 2);
        assert_eq!(
            wcc.member_ids(&g, 0),
            [1, 2, 3, 4, 5, 6, 9].map(q).to_vec()
        );
        assert_eq!(wcc.member_ids(&g, 1), vec![q(7), q(8)]);
        assert_eq!(wcc.sizes(), &[7, 2]);
    }

    #[test]
    fn empty_graph_has_no_components() {
        let g = TaxonomyGraph::default();
        assert_eq!(weakly_connected_components(&g).component_count(), 0);
    }

    #[test]
    fn g1_entry_points() {
        let g = g1();
        let wcc = weakly_connected_components(&g);
        assert_eq!(entry_points(&g, &wcc, 0), vec![q(1)]);
        assert!(entry_points(&g, &wcc, 1).is_empty());
    }

    #[test]
    fn isolated_node_is_its_own_entry_point() {
        let mut b = GraphBuilder::new();
        b.add_node(q(10));
        b.add_edge(q(2), EdgeKind::SubclassOf, q(1));
        let g = b.finalize();
        let wcc = weakly_connected_components(&g);
        let c = wcc.component_of(&g, q(10)).unwrap();
        assert_eq!(entry_points(&g, &wcc, c), vec![q(10)]);
    }

    #[test]
    fn sampling_is_truncated_and_deterministic() {
        let g = g1();
        let all = sample_component(&g, q(1), 100, 7).unwrap();
        assert_eq!(all, [2, 3, 4, 5, 6, 9].map(q).to_vec());

        let a = sample_component(&g, q(1), 3, 42).unwrap();
        let b = sample_component(&g, q(1), 3, 42).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.len(), 3);
        assert!(a.iter().all(|id| all.contains(id)));
    }

    #[test]
    fn forced_single_choice() {
        let g = TaxonomyGraph::from_edges([Edge::new(q(2), EdgeKind::InstanceOf, q(1))]);
        assert_eq!(sample_component(&g, q(1), 1, 0).unwrap(), vec![q(2)]);
    }

    #[test]
    fn sampling_unknown_root_fails() {
        assert!(sample_component(&g1(), q(77), 1, 0).is_err());
    }
}
