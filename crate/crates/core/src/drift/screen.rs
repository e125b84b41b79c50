use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::graph::{Direction, Node, TaxonomyGraph};
use crate::id::{EdgeKind, EntityId};

/// Structural stratum of a screened entity.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Segment {
    A,
    C,
    E,
    Other,
}

impl Segment {
    /// `min_depth` is `None` when no pseudo-root is reachable.
    pub fn classify(parent_cnt: usize, min_depth: Option<u32>) -> Self {
        let shallow = min_depth.is_some_and(|d| d <= 2);
        match parent_cnt {
            n if n > 6 => Segment::E,
            n if n >= 3 && shallow => Segment::C,
            n if n <= 2 && shallow => Segment::A,
            _ => Segment::Other,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Segment::A => "A",
            Segment::C => "C",
            Segment::E => "E",
            Segment::Other => "Other",
        }
    }
}

impl fmt::Display for Segment {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Segment {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "A" => Ok(Segment::A),
            "C" => Ok(Segment::C),
            "E" => Ok(Segment::E),
            "Other" => Ok(Segment::Other),
            _ => Err(format!("unknown segment {s:?}")),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct ScreeningRecord {
    pub entity: EntityId,
    pub parent_cnt: usize,
    pub min_depth: Option<u32>,
    pub segment: Segment,
}

#[derive(Clone, Debug, PartialEq, Eq, Default, Serialize)]
pub struct Screening {
    /// Ascending by entity.
    pub records: Vec<ScreeningRecord>,
    /// Entities with fewer than two distinct parents.
    pub discarded: usize,
}

impl Screening {
    pub fn get(&self, entity: EntityId) -> Option<&ScreeningRecord> {
        self.records
            .binary_search_by_key(&entity, |r| r.entity)
            .ok()
            .map(|i| &self.records[i])
    }
}

/// Pseudo-root an entity was attached to.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum RootKey {
    Root(EntityId),
    /// No pseudo-root reaches the entity (cycle-only components).
    Unrooted,
}

impl RootKey {
    pub fn root(self) -> Option<EntityId> {
        match self {
            RootKey::Root(id) => Some(id),
            RootKey::Unrooted => None,
        }
    }
}

impl fmt::Display for RootKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            RootKey::Root(id) => id.fmt(f),
            RootKey::Unrooted => f.write_str("unrooted"),
        }
    }
}

impl FromStr for RootKey {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        if s == "unrooted" {
            return Ok(RootKey::Unrooted);
        }
        s.parse().map(RootKey::Root).map_err(|e| format!("{e}"))
    }
}

/// Distinct parents over both kinds, without the node itself.
pub fn drift_parents(g: &TaxonomyGraph, node: Node) -> Vec<Node> {
    let mut parents = g.union_parents(node);
    parents.retain(|&p| p != node);
    parents
}

fn is_pseudo_root(g: &TaxonomyGraph, node: Node) -> bool {
    EdgeKind::ALL.into_iter().all(|kind| {
        g.adjacent(node, kind, Direction::Out)
            .iter()
            .all(|&p| p == node)
    })
}

/// Nearest pseudo-root and hop count for every node, by level-synchronous
/// BFS from all roots at once over reversed edges. Ties go to the smallest
/// root id.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PseudoRoots {
    root: Vec<Option<Node>>,
    depth: Vec<Option<u32>>,
    ids: Vec<EntityId>,
}

impl PseudoRoots {
    pub fn compute(g: &TaxonomyGraph) -> Self {
        let n = g.node_count();
        let mut root: Vec<Option<Node>> = vec![None; n];
        let mut depth: Vec<Option<u32>> = vec![None; n];
        // Nodes are numbered in ascending id order, so node order is id order.
        let mut frontier: Vec<Node> = (0..n as Node).filter(|&v| is_pseudo_root(g, v)).collect();
        for &r in &frontier {
            root[r as usize] = Some(r);
            depth[r as usize] = Some(0);
        }
        let mut level = 0u32;
        while !frontier.is_empty() {
            level += 1;
            let mut next: Vec<Node> = Vec::new();
            for &u in &frontier {
                let ru = root[u as usize].expect("frontier nodes are rooted");
                for kind in EdgeKind::ALL {
                    for &c in g.adjacent(u, kind, Direction::In) {
                        let ci = c as usize;
                        match depth[ci] {
                            None => {
                                depth[ci] = Some(level);
                                root[ci] = Some(ru);
                                next.push(c);
                            }
                            Some(d) if d == level && root[ci].is_some_and(|r| ru < r) => {
                                root[ci] = Some(ru);
                            }
                            _ => {}
                        }
                    }
                }
            }
            frontier = next;
        }
        Self {
            root,
            depth,
            ids: g.entities().to_vec(),
        }
    }

    pub fn depth(&self, node: Node) -> Option<u32> {
        self.depth[node as usize]
    }

    pub fn key(&self, node: Node) -> RootKey {
        self.root[node as usize].map_or(RootKey::Unrooted, |r| RootKey::Root(self.ids[r as usize]))
    }

    pub fn roots(&self) -> impl Iterator<Item = EntityId> + '_ {
        self.root
            .iter()
            .enumerate()
            .filter(|&(i, r)| *r == Some(i as Node))
            .map(|(i, _)| self.ids[i])
    }

    pub fn to_map(&self) -> BTreeMap<EntityId, RootKey> {
        (0..self.ids.len() as Node).map(|v| (self.ids[v as usize], self.key(v))).collect()
    }
}

pub fn assign_pseudo_roots(g: &TaxonomyGraph) -> BTreeMap<EntityId, RootKey> {
    PseudoRoots::compute(g).to_map()
}

/// Keeps entities with at least two distinct parents and assigns segments.
pub fn screen(g: &TaxonomyGraph) -> Screening {
    screen_with(g, &PseudoRoots::compute(g))
}

pub fn screen_with(g: &TaxonomyGraph, roots: &PseudoRoots) -> Screening {
    let mut out = Screening::default();
    for v in 0..g.node_count() as Node {
        let parent_cnt = drift_parents(g, v).len();
        if parent_cnt < 2 {
            out.discarded += 1;
            continue;
        }
        let min_depth = roots.depth(v);
        out.records.push(ScreeningRecord {
            entity: g.id(v),
            parent_cnt,
            min_depth,
            segment: Segment::classify(parent_cnt, min_depth),
        });
    }
    out
}

/// Plain single-source BFS depth, for cross-checking.
#[cfg(test)]
pub(crate) fn depth_from(g: &TaxonomyGraph, root: Node) -> Vec<Option<u32>> {
    let mut depth = vec![None; g.node_count()];
    depth[root as usize] = Some(0);
    let mut q = std::collections::VecDeque::from([root]);
    while let Some(u) = q.pop_front() {
        let d = depth[u as usize].unwrap();
        for kind in EdgeKind::ALL {
            for &c in g.adjacent(u, kind, Direction::In) {
                if depth[c as usize].is_none() {
                    depth[c as usize] = Some(d + 1);
                    q.push_back(c);
                }
            }
        }
    }
    depth
}
