use std::collections::{BTreeSet, HashSet, VecDeque};

use serde::Serialize;

use crate::graph::{Direction, Node, TaxonomyGraph};
use crate::id::{EdgeKind, EntityId};

use super::antipattern::subclass_cycles;

/// Result of the pure-class filter and entity-tree split.
#[derive(Clone, Debug, Default, PartialEq, Serialize)]
pub struct PureClassReport {
    /// Exactly one P279 parent, at most two P31 parents, not on a P279 cycle.
    pub pure_classes: BTreeSet<EntityId>,
    /// Pure classes with at least one direct instance.
    pub pure_with_instances: BTreeSet<EntityId>,
    /// Pure classes with instances whose subclass closure is a tree.
    pub tree_roots: BTreeSet<EntityId>,
    /// Distinct entities with a P31 edge into any tree.
    pub instances_covered: usize,
    pub coverage_ratio: f64,
}

pub fn pure_class_filter(g: &TaxonomyGraph) -> PureClassReport {
    let on_cycle: HashSet<Node> = subclass_cycles(g).into_iter().flatten().collect();
    let is_pure = |n: Node| {
        let p279 = g.adjacent(n, EdgeKind::SubclassOf, Direction::Out);
        p279.len() == 1
            && p279[0] != n
            && g.out_degree(n, EdgeKind::InstanceOf) <= 2
            && !on_cycle.contains(&n)
    };

    let mut report = PureClassReport::default();
    let mut tree_nodes: HashSet<Node> = HashSet::new();
    for n in 0..g.node_count() as Node {
        if !is_pure(n) {
            continue;
        }
        let id = g.id(n);
        report.pure_classes.insert(id);
        if g.in_degree(n, EdgeKind::InstanceOf) == 0 {
            continue;
        }
        report.pure_with_instances.insert(id);
        if let Some(closure) = tree_closure(g, n) {
            report.tree_roots.insert(id);
            tree_nodes.extend(closure);
        }
    }

    let mut instances: HashSet<Node> = HashSet::new();
    for &t in &tree_nodes {
        instances.extend(g.adjacent(t, EdgeKind::InstanceOf, Direction::In));
    }
    report.instances_covered = instances.len();
    report.coverage_ratio = if g.is_empty() {
        0.0
    } else {
        instances.len() as f64 / g.node_count() as f64
    };
    report
}

/// The root plus its P279 descendants, if every descendant has exactly one
/// P279 parent inside that set (which also rules out cycles).
fn tree_closure(g: &TaxonomyGraph, root: Node) -> Option<Vec<Node>> {
    let mut members: HashSet<Node> = HashSet::from([root]);
    let mut order = vec![root];
    let mut queue = VecDeque::from([root]);
    while let Some(u) = queue.pop_front() {
        for &v in g.adjacent(u, EdgeKind::SubclassOf, Direction::In) {
            if members.insert(v) {
                order.push(v);
                queue.push_back(v);
            }
        }
    }
    for &n in &order[1..] {
        let inside = g
            .adjacent(n, EdgeKind::SubclassOf, Direction::Out)
            .iter()
            .filter(|p| members.contains(p))
            .count();
        if inside != 1 {
            return None;
        }
    }
    // A descendant pointing back at the root would close a cycle.
    if g
        .adjacent(root, EdgeKind::SubclassOf, Direction::Out)
        .iter()
        .any(|p| members.contains(p))
    {
        return None;
    }
    Some(order)
}
