//! Instance/class anti-pattern rules over P31/P279.

use std::collections::{HashMap, VecDeque};
use std::fmt;

use rayon::prelude::*;
use serde::Serialize;

use crate::graph::{Direction, Node, TaxonomyGraph};
use crate::id::{EdgeKind, EntityId};
use crate::policy::MetaclassPolicy;

use super::components::{weakly_connected_components, ComponentLabeling};

/// Default depth cap for redundancy witness enumeration.
pub const DEFAULT_MAX_DEPTH: usize = 10;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub enum AntiPatternTag {
    DualRole,
    InstanceWithSubclasses,
    CycleMember,
    RedundantEdge,
    SelfLoop,
}

impl AntiPatternTag {
    pub fn as_str(self) -> &'static str {
        match self {
            AntiPatternTag::DualRole => "DualRole",
            AntiPatternTag::InstanceWithSubclasses => "InstanceWithSubclasses",
            AntiPatternTag::CycleMember => "CycleMember",
            AntiPatternTag::RedundantEdge => "RedundantEdge",
            AntiPatternTag::SelfLoop => "SelfLoop",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        [
            AntiPatternTag::DualRole,
            AntiPatternTag::InstanceWithSubclasses,
            AntiPatternTag::CycleMember,
            AntiPatternTag::RedundantEdge,
            AntiPatternTag::SelfLoop,
        ]
        .into_iter()
        .find(|t| t.as_str() == s)
    }
}

impl fmt::Display for AntiPatternTag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Serialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum FlagDetail {
    /// Meaningful P31 targets alongside the entity's P279 parents.
    DualRole {
        instance_of: Vec<EntityId>,
        subclass_of: Vec<EntityId>,
    },
    InstanceWithSubclasses {
        instance_of: Vec<EntityId>,
        subclasses: Vec<EntityId>,
    },
    /// Members of the strongly connected P279 component, ascending.
    Cycle { members: Vec<EntityId> },
    /// The direct edge entity → `parent`, and up to `max_paths` longer
    /// routes, each a full node path starting at the entity.
    Redundant {
        parent: EntityId,
        witnesses: Vec<Vec<EntityId>>,
    },
    SelfLoop { kind: EdgeKind },
}

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Serialize)]
pub struct AntiPatternFlag {
    pub entity: EntityId,
    pub tag: AntiPatternTag,
    pub detail: FlagDetail,
}

fn join_ids(ids: &[EntityId], sep: &str) -> String {
    ids.iter().map(|id| id.to_string()).collect::<Vec<_>>().join(sep)
}

impl FlagDetail {
    /// Compact single-field rendering used in the flag CSV.
    pub fn compact(&self) -> String {
        match self {
            FlagDetail::DualRole {
                instance_of,
                subclass_of,
            } => format!("p31:{};p279:{}", join_ids(instance_of, "-"), join_ids(subclass_of, "-")),
            FlagDetail::InstanceWithSubclasses {
                instance_of,
                subclasses,
            } => format!("p31:{};subclasses:{}", join_ids(instance_of, "-"), join_ids(subclasses, "-")),
            FlagDetail::Cycle { members } => format!("cycle:{}", join_ids(members, "-")),
            FlagDetail::Redundant { parent, witnesses } => {
                let via: Vec<String> = witnesses
                    .iter()
                    .map(|path| join_ids(&path[1..path.len() - 1], "-"))
                    .collect();
                format!("to:{parent};via:{}", via.join("|"))
            }
            FlagDetail::SelfLoop { kind } => format!("kind:{kind}"),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct DetectorConfig {
    /// Witness paths reported per redundant edge (at least one).
    pub max_paths: usize,
    /// Depth cap for enumerating witnesses beyond the shortest one.
    pub max_depth: usize,
}

impl DetectorConfig {
    pub fn with_max_paths(max_paths: usize) -> Self {
        Self {
            max_paths: max_paths.max(1),
            max_depth: DEFAULT_MAX_DEPTH,
        }
    }
}

impl Default for DetectorConfig {
    fn default() -> Self {
        Self::with_max_paths(5)
    }
}

pub fn detect_anti_patterns(g: &TaxonomyGraph, policy: &MetaclassPolicy, max_paths: usize) -> Vec<AntiPatternFlag> {
    let labeling = weakly_connected_components(g);
    detect_in_components(g, &labeling, policy, &DetectorConfig::with_max_paths(max_paths))
}

/// Runs the rules component by component in parallel. Within a component,
/// nodes are visited breadth-first from its entry points (downward), then any
/// node not reachable from an entry point. Output is canonically sorted.
pub fn detect_in_components(
    g: &TaxonomyGraph,
    labeling: &ComponentLabeling,
    policy: &MetaclassPolicy,
    config: &DetectorConfig,
) -> Vec<AntiPatternFlag> {
    let cycles = subclass_cycles(g);
    let mut in_cycle: HashMap<Node, usize> = HashMap::new();
    for (i, scc) in cycles.iter().enumerate() {
        for &n in scc {
            in_cycle.insert(n, i);
        }
    }

    let mut flags: Vec<AntiPatternFlag> = labeling
        .members()
        .into_par_iter()
        .flat_map_iter(|members| {
            let mut out = Vec::new();
            for node in traversal_order(g, &members) {
                check_node(g, policy, config, node, &mut out);
                if let Some(&i) = in_cycle.get(&node) {
                    out.push(AntiPatternFlag {
                        entity: g.id(node),
                        tag: AntiPatternTag::CycleMember,
                        detail: FlagDetail::Cycle {
                            members: g.ids_of(&cycles[i]),
                        },
                    });
                }
            }
            out
        })
        .collect();
    flags.sort();
    flags
}

fn traversal_order(g: &TaxonomyGraph, members: &[Node]) -> Vec<Node> {
    let mut seen: HashMap<Node, ()> = HashMap::with_capacity(members.len());
    let mut order = Vec::with_capacity(members.len());
    let mut queue: VecDeque<Node> = members
        .iter()
        .copied()
        .filter(|&n| super::components::has_no_parents(g, n))
        .collect();
    for &n in &queue {
        seen.insert(n, ());
    }
    while let Some(u) = queue.pop_front() {
        order.push(u);
        for kind in EdgeKind::ALL {
            for &v in g.adjacent(u, kind, Direction::In) {
                if seen.insert(v, ()).is_none() {
                    queue.push_back(v);
                }
            }
        }
    }
    order.extend(members.iter().copied().filter(|n| !seen.contains_key(n)));
    order
}

fn check_node(
    g: &TaxonomyGraph,
    policy: &MetaclassPolicy,
    config: &DetectorConfig,
    node: Node,
    out: &mut Vec<AntiPatternFlag>,
) {
    let id = g.id(node);
    let p31 = g.adjacent(node, EdgeKind::InstanceOf, Direction::Out);
    let p279 = g.adjacent(node, EdgeKind::SubclassOf, Direction::Out);
    let meaningful_p31: Vec<EntityId> = p31
        .iter()
        .map(|&p| g.id(p))
        .filter(|&p| !policy.is_metaclass(p))
        .collect();

    if !meaningful_p31.is_empty() && !p279.is_empty() {
        out.push(AntiPatternFlag {
            entity: id,
            tag: AntiPatternTag::DualRole,
            detail: FlagDetail::DualRole {
                instance_of: meaningful_p31.clone(),
                subclass_of: g.ids_of(p279),
            },
        });
    }
    let subclasses = g.adjacent(node, EdgeKind::SubclassOf, Direction::In);
    if !meaningful_p31.is_empty() && !subclasses.is_empty() {
        out.push(AntiPatternFlag {
            entity: id,
            tag: AntiPatternTag::InstanceWithSubclasses,
            detail: FlagDetail::InstanceWithSubclasses {
                instance_of: meaningful_p31,
                subclasses: g.ids_of(subclasses),
            },
        });
    }
    for kind in EdgeKind::ALL {
        if g.adjacent(node, kind, Direction::Out).binary_search(&node).is_ok() {
            out.push(AntiPatternFlag {
                entity: id,
                tag: AntiPatternTag::SelfLoop,
                detail: FlagDetail::SelfLoop { kind },
            });
        }
    }
    for r in redundant_edges_of(g, node, config) {
        out.push(AntiPatternFlag {
            entity: id,
            tag: AntiPatternTag::RedundantEdge,
            detail: FlagDetail::Redundant {
                parent: r.parent,
                witnesses: r.witnesses,
            },
        });
    }
}

/// A direct P279 edge that is also implied by a longer P279 path.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct RedundantEdge {
    pub child: EntityId,
    pub parent: EntityId,
    /// Node paths from child to parent, each of length ≥ 2, shortest first.
    pub witnesses: Vec<Vec<EntityId>>,
}

/// Redundant outgoing P279 edges of `entity`.
pub fn redundant_edges(
    g: &TaxonomyGraph,
    entity: EntityId,
    config: &DetectorConfig,
) -> Result<Vec<RedundantEdge>, crate::error::GraphError> {
    let node = g.node(entity)?;
    Ok(redundant_edges_of(g, node, config))
}

fn redundant_edges_of(g: &TaxonomyGraph, child: Node, config: &DetectorConfig) -> Vec<RedundantEdge> {
    let parents: Vec<Node> = g
        .adjacent(child, EdgeKind::SubclassOf, Direction::Out)
        .iter()
        .copied()
        .filter(|&p| p != child)
        .collect();
    if parents.len() < 2 {
        return Vec::new();
    }

    // Shortest route child → x → … → a avoiding `child`, for every parent a
    // reachable from some other parent x. Exact: plain reachability.
    let mut shortest: HashMap<Node, Vec<Node>> = HashMap::new();
    for &start in &parents {
        let mut pred: HashMap<Node, Node> = HashMap::from([(start, start)]);
        let mut queue = VecDeque::from([start]);
        while let Some(u) = queue.pop_front() {
            for &v in g.adjacent(u, EdgeKind::SubclassOf, Direction::Out) {
                if v == child || pred.contains_key(&v) {
                    continue;
                }
                pred.insert(v, u);
                queue.push_back(v);
            }
        }
        for &target in &parents {
            if target == start || !pred.contains_key(&target) {
                continue;
            }
            let mut path = vec![target];
            let mut cur = target;
            while cur != start {
                cur = pred[&cur];
                path.push(cur);
            }
            path.push(child);
            path.reverse();
            let better = shortest
                .get(&target)
                .is_none_or(|best| (path.len(), &path) < (best.len(), best));
            if better {
                shortest.insert(target, path);
            }
        }
    }

    let mut out: Vec<RedundantEdge> = shortest
        .into_iter()
        .map(|(target, first)| {
            let mut witnesses = vec![first];
            if config.max_paths > 1 {
                enumerate_paths(g, child, target, config, &mut witnesses);
            }
            RedundantEdge {
                child: g.id(child),
                parent: g.id(target),
                witnesses: witnesses.iter().map(|p| g.ids_of(p)).collect(),
            }
        })
        .collect();
    out.sort_by_key(|r| r.parent);
    out
}

/// Depth-first enumeration of further simple paths child → … → target of
/// length 2..=max_depth, appended until `max_paths` witnesses exist.
fn enumerate_paths(
    g: &TaxonomyGraph,
    child: Node,
    target: Node,
    config: &DetectorConfig,
    witnesses: &mut Vec<Vec<Node>>,
) {
    let mut path = vec![child];
    // Stack of (node, index of next neighbour to try).
    let mut stack: Vec<(Node, usize)> = vec![(child, 0)];
    while let Some(&mut (u, ref mut next)) = stack.last_mut() {
        if witnesses.len() >= config.max_paths {
            return;
        }
        let nbrs = g.adjacent(u, EdgeKind::SubclassOf, Direction::Out);
        if *next >= nbrs.len() || path.len() > config.max_depth {
            stack.pop();
            path.pop();
            continue;
        }
        let v = nbrs[*next];
        *next += 1;
        if path.contains(&v) {
            continue;
        }
        if v == target {
            if path.len() >= 2 {
                let mut w = path.clone();
                w.push(v);
                if !witnesses.contains(&w) {
                    witnesses.push(w);
                }
            }
            continue;
        }
        path.push(v);
        stack.push((v, 0));
    }
}

/// P279 strongly connected components with at least two members, each
/// ascending, ordered by smallest member. Iterative Tarjan.
pub(crate) fn subclass_cycles(g: &TaxonomyGraph) -> Vec<Vec<Node>> {
    const UNVISITED: u32 = u32::MAX;
    let n = g.node_count();
    let mut index = vec![UNVISITED; n];
    let mut low = vec![0u32; n];
    let mut on_stack = vec![false; n];
    let mut stack: Vec<Node> = Vec::new();
    let mut counter = 0u32;
    let mut out = Vec::new();
    let mut call: Vec<(Node, usize)> = Vec::new();

    for root in 0..n as Node {
        if index[root as usize] != UNVISITED {
            continue;
        }
        call.push((root, 0));
        while let Some(&mut (u, ref mut next)) = call.last_mut() {
            let ui = u as usize;
            if *next == 0 && index[ui] == UNVISITED {
                index[ui] = counter;
                low[ui] = counter;
                counter += 1;
                stack.push(u);
                on_stack[ui] = true;
            }
            let nbrs = g.adjacent(u, EdgeKind::SubclassOf, Direction::Out);
            if *next < nbrs.len() {
                let v = nbrs[*next];
                *next += 1;
                let vi = v as usize;
                if index[vi] == UNVISITED {
                    call.push((v, 0));
                } else if on_stack[vi] {
                    low[ui] = low[ui].min(index[vi]);
                }
                continue;
            }
            call.pop();
            if let Some(&(parent, _)) = call.last() {
                let pi = parent as usize;
                low[pi] = low[pi].min(low[ui]);
            }
            if low[ui] == index[ui] {
                let mut scc = Vec::new();
                loop {
                    let w = stack.pop().expect("tarjan stack underflow");
                    on_stack[w as usize] = false;
                    scc.push(w);
                    if w == u {
                        break;
                    }
                }
                if scc.len() >= 2 {
                    scc.sort_unstable();
                    out.push(scc);
                }
            }
        }
    }
    out.sort();
    out
}
