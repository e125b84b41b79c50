//! The dual-relation taxonomy graph.
//!
//! Edges are stored child → parent for both properties, in compressed sparse
//! row form, with a mirrored reverse index per kind. Entity ids are remapped
//! to dense ordinals assigned in ascending id order, so two graphs built from
//! the same edge set are identical regardless of input order.

use std::collections::{HashMap, HashSet, VecDeque};

use serde::Serialize;

use crate::error::GraphError;
use crate::id::{EdgeKind, EntityId};

pub type Node = u32;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub struct Edge {
    pub child: EntityId,
    pub kind: EdgeKind,
    pub parent: EntityId,
}

impl Edge {
    pub fn new(child: EntityId, kind: EdgeKind, parent: EntityId) -> Self {
        Self {
            child,
            kind,
            parent,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Direction {
    /// child → parent
    Out,
    /// parent → child
    In,
}

/// How `distance` interprets edges.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum DistanceMode {
    /// Both kinds, both directions.
    UndirectedUnion,
    /// Follow child → parent edges of either kind.
    UpwardAny,
    /// Follow child → parent P279 edges only.
    UpwardSubclass,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Serialize)]
pub enum Distance {
    Hops(u32),
    Unreachable,
}

impl Distance {
    pub fn hops(self) -> Option<u32> {
        match self {
            Distance::Hops(h) => Some(h),
            Distance::Unreachable => None,
        }
    }

    /// Unreachable (or anything beyond the cap) counts as the cap.
    pub fn capped(self, cap: u32) -> u32 {
        match self {
            Distance::Hops(h) => h.min(cap),
            Distance::Unreachable => cap,
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
struct Csr {
    offsets: Vec<u32>,
    targets: Vec<Node>,
}

impl Csr {
    /// `pairs` must be sorted by (source, target) and duplicate-free.
    fn from_sorted(node_count: usize, pairs: impl Iterator<Item = (Node, Node)>) -> Self {
        let mut offsets = vec![0u32; node_count + 1];
        let mut targets = Vec::new();
        for (src, dst) in pairs {
            offsets[src as usize + 1] += 1;
            targets.push(dst);
        }
        for i in 0..node_count {
            offsets[i + 1] += offsets[i];
        }
        Self { offsets, targets }
    }

    fn row(&self, node: Node) -> &[Node] {
        let i = node as usize;
        &self.targets[self.offsets[i] as usize..self.offsets[i + 1] as usize]
    }
}

/// Collects edges; `finalize` produces the immutable graph.
#[derive(Clone, Debug, Default)]
pub struct GraphBuilder {
    edges: Vec<(u64, EdgeKind, u64)>,
    isolated: Vec<u64>,
}

impl GraphBuilder {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn with_capacity(edges: usize) -> Self {
        Self {
            edges: Vec::with_capacity(edges),
            isolated: Vec::new(),
        }
    }

    pub fn add_edge(&mut self, child: EntityId, kind: EdgeKind, parent: EntityId) -> &mut Self {
        self.edges.push((child.get(), kind, parent.get()));
        self
    }

    /// Registers a node that may have no edges at all.
    pub fn add_node(&mut self, id: EntityId) -> &mut Self {
        self.isolated.push(id.get());
        self
    }

    pub fn extend_edges<I: IntoIterator<Item = Edge>>(&mut self, edges: I) -> &mut Self {
        for e in edges {
            self.add_edge(e.child, e.kind, e.parent);
        }
        self
    }

    pub fn finalize(self) -> TaxonomyGraph {
        let GraphBuilder {
            mut edges,
            mut isolated,
        } = self;
        edges.sort_unstable();
        edges.dedup();

        let mut ids: Vec<u64> = Vec::with_capacity(edges.len() + isolated.len());
        ids.extend(edges.iter().flat_map(|&(c, _, p)| [c, p]));
        ids.append(&mut isolated);
        ids.sort_unstable();
        ids.dedup();

        let ids: Vec<EntityId> = ids
            .into_iter()
            .map(|n| EntityId::new(n).expect("EntityId is non-zero"))
            .collect();
        let index: HashMap<EntityId, Node> = ids
            .iter()
            .enumerate()
            .map(|(i, &id)| (id, i as Node))
            .collect();
        let n = ids.len();
        let ord = |raw: u64| index[&EntityId::new(raw).expect("non-zero")];

        let mut per_kind: [Vec<(Node, Node)>; 2] = [Vec::new(), Vec::new()];
        let mut self_loops = [0usize; 2];
        for &(c, kind, p) in &edges {
            if c == p {
                self_loops[kind_slot(kind)] += 1;
            }
            per_kind[kind_slot(kind)].push((ord(c), ord(p)));
        }
        drop(edges);

        let mut adj: [Csr; 4] = Default::default();
        for kind in EdgeKind::ALL {
            let pairs = &mut per_kind[kind_slot(kind)];
            // Ordinals are monotone in ids, so the edge order carries over.
            adj[slot(kind, Direction::Out)] = Csr::from_sorted(n, pairs.iter().copied());
            pairs.iter_mut().for_each(|e| *e = (e.1, e.0));
            pairs.sort_unstable();
            adj[slot(kind, Direction::In)] = Csr::from_sorted(n, pairs.iter().copied());
        }

        TaxonomyGraph {
            ids,
            index,
            adj,
            self_loops,
        }
    }
}

fn kind_slot(kind: EdgeKind) -> usize {
    match kind {
        EdgeKind::InstanceOf => 0,
        EdgeKind::SubclassOf => 1,
    }
}

fn slot(kind: EdgeKind, dir: Direction) -> usize {
    kind_slot(kind) * 2
        + match dir {
            Direction::Out => 0,
            Direction::In => 1,
        }
}

/// Immutable P31/P279 adjacency over dense node ordinals.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct TaxonomyGraph {
    ids: Vec<EntityId>,
    index: HashMap<EntityId, Node>,
    adj: [Csr; 4],
    self_loops: [usize; 2],
}

impl TaxonomyGraph {
    pub fn from_edges<I: IntoIterator<Item = Edge>>(edges: I) -> Self {
        let mut b = GraphBuilder::new();
        b.extend_edges(edges);
        b.finalize()
    }

    pub fn node_count(&self) -> usize {
        self.ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ids.is_empty()
    }

    /// Distinct edges of `kind`, self-loops included.
    pub fn edge_count(&self, kind: EdgeKind) -> usize {
        self.adj[slot(kind, Direction::Out)].targets.len()
    }

    pub fn total_edges(&self) -> usize {
        EdgeKind::ALL.iter().map(|&k| self.edge_count(k)).sum()
    }

    pub fn self_loop_count(&self, kind: EdgeKind) -> usize {
        self.self_loops[kind_slot(kind)]
    }

    pub fn contains(&self, id: EntityId) -> bool {
        self.index.contains_key(&id)
    }

    /// All entities, ascending.
    pub fn entities(&self) -> &[EntityId] {
        &self.ids
    }

    pub fn node(&self, id: EntityId) -> Result<Node, GraphError> {
        self.index
            .get(&id)
            .copied()
            .ok_or(GraphError::UnknownEntity(id))
    }

    pub fn id(&self, node: Node) -> EntityId {
        self.ids[node as usize]
    }

    /// Neighbouring ordinals, sorted ascending.
    pub fn adjacent(&self, node: Node, kind: EdgeKind, dir: Direction) -> &[Node] {
        self.adj[slot(kind, dir)].row(node)
    }

    pub fn out_degree(&self, node: Node, kind: EdgeKind) -> usize {
        self.adjacent(node, kind, Direction::Out).len()
    }

    pub fn in_degree(&self, node: Node, kind: EdgeKind) -> usize {
        self.adjacent(node, kind, Direction::In).len()
    }

    pub fn parents(&self, id: EntityId, kind: EdgeKind) -> Result<Vec<EntityId>, GraphError> {
        let n = self.node(id)?;
        Ok(self.ids_of(self.adjacent(n, kind, Direction::Out)))
    }

    pub fn children(&self, id: EntityId, kind: EdgeKind) -> Result<Vec<EntityId>, GraphError> {
        let n = self.node(id)?;
        Ok(self.ids_of(self.adjacent(n, kind, Direction::In)))
    }

    /// Distinct parents over both kinds, ascending.
    pub fn union_parents(&self, node: Node) -> Vec<Node> {
        merge_sorted(
            self.adjacent(node, EdgeKind::InstanceOf, Direction::Out),
            self.adjacent(node, EdgeKind::SubclassOf, Direction::Out),
        )
    }

    pub fn ids_of(&self, nodes: &[Node]) -> Vec<EntityId> {
        nodes.iter().map(|&n| self.id(n)).collect()
    }

    /// Every edge in canonical (child, kind, parent) order.
    pub fn edges(&self) -> impl Iterator<Item = Edge> + '_ {
        (0..self.ids.len() as Node).flat_map(move |c| {
            EdgeKind::ALL.into_iter().flat_map(move |kind| {
                self.adjacent(c, kind, Direction::Out)
                    .iter()
                    .map(move |&p| Edge::new(self.id(c), kind, self.id(p)))
            })
        })
    }

    /// Calls `f` for each neighbour of `node` under `mode`.
    pub(crate) fn for_each_step(&self, node: Node, mode: DistanceMode, mut f: impl FnMut(Node)) {
        match mode {
            DistanceMode::UndirectedUnion => {
                for kind in EdgeKind::ALL {
                    for dir in [Direction::Out, Direction::In] {
                        self.adjacent(node, kind, dir).iter().for_each(|&n| f(n));
                    }
                }
            }
            DistanceMode::UpwardAny => {
                for kind in EdgeKind::ALL {
                    self.adjacent(node, kind, Direction::Out)
                        .iter()
                        .for_each(|&n| f(n));
                }
            }
            DistanceMode::UpwardSubclass => self
                .adjacent(node, EdgeKind::SubclassOf, Direction::Out)
                .iter()
                .for_each(|&n| f(n)),
        }
    }

    /// Shortest path length from `a` to `b` no longer than `cap`.
    pub fn distance(
        &self,
        a: EntityId,
        b: EntityId,
        cap: u32,
        mode: DistanceMode,
    ) -> Result<Distance, GraphError> {
        let a = self.node(a)?;
        let b = self.node(b)?;
        Ok(self.node_distance(a, b, cap, mode))
    }

    pub fn node_distance(&self, a: Node, b: Node, cap: u32, mode: DistanceMode) -> Distance {
        if a == b {
            return Distance::Hops(0);
        }
        match mode {
            DistanceMode::UndirectedUnion => self.bidirectional_bfs(a, b, cap),
            _ => self.forward_bfs(a, b, cap, mode),
        }
    }

    fn forward_bfs(&self, a: Node, b: Node, cap: u32, mode: DistanceMode) -> Distance {
        let mut seen: HashSet<Node> = HashSet::from([a]);
        let mut frontier = vec![a];
        let mut next = Vec::new();
        for depth in 1..=cap {
            for &u in &frontier {
                let mut found = false;
                self.for_each_step(u, mode, |v| {
                    if v == b {
                        found = true;
                    }
                    if seen.insert(v) {
                        next.push(v);
                    }
                });
                if found {
                    return Distance::Hops(depth);
                }
            }
            if next.is_empty() {
                break;
            }
            std::mem::swap(&mut frontier, &mut next);
            next.clear();
        }
        Distance::Unreachable
    }

    /// Alternating level-synchronous search from both ends. A full level is
    /// expanded before checking for a meeting, which keeps the result exact.
    fn bidirectional_bfs(&self, a: Node, b: Node, cap: u32) -> Distance {
        let mode = DistanceMode::UndirectedUnion;
        let mut dist: [HashMap<Node, u32>; 2] = [HashMap::from([(a, 0)]), HashMap::from([(b, 0)])];
        let mut frontier: [Vec<Node>; 2] = [vec![a], vec![b]];
        let mut level = [0u32; 2];

        while level[0] + level[1] < cap {
            if frontier[0].is_empty() || frontier[1].is_empty() {
                return Distance::Unreachable;
            }
            let side = usize::from(frontier[1].len() < frontier[0].len());
            let other = 1 - side;
            let depth = level[side] + 1;
            let mut next = Vec::new();
            let mut best: Option<u32> = None;
            for &u in &frontier[side] {
                self.for_each_step(u, mode, |v| {
                    if dist[side].contains_key(&v) {
                        return;
                    }
                    dist[side].insert(v, depth);
                    next.push(v);
                    if let Some(&d) = dist[other].get(&v) {
                        let total = depth + d;
                        best = Some(best.map_or(total, |b| b.min(total)));
                    }
                });
            }
            if let Some(total) = best {
                return if total <= cap {
                    Distance::Hops(total)
                } else {
                    Distance::Unreachable
                };
            }
            frontier[side] = next;
            level[side] = depth;
        }
        Distance::Unreachable
    }

    /// Induced subgraph of every node within `radius` undirected hops.
    pub fn neighborhood(&self, center: EntityId, radius: u32) -> Result<Neighborhood, GraphError> {
        let start = self.node(center)?;
        let mut seen: HashSet<Node> = HashSet::from([start]);
        let mut queue = VecDeque::from([(start, 0u32)]);
        while let Some((u, d)) = queue.pop_front() {
            if d == radius {
                continue;
            }
            self.for_each_step(u, DistanceMode::UndirectedUnion, |v| {
                if seen.insert(v) {
                    queue.push_back((v, d + 1));
                }
            });
        }
        let mut nodes: Vec<Node> = seen.iter().copied().collect();
        nodes.sort_unstable();
        let mut edges = Vec::new();
        for &c in &nodes {
            for kind in EdgeKind::ALL {
                for &p in self.adjacent(c, kind, Direction::Out) {
                    if seen.contains(&p) {
                        edges.push(Edge::new(self.id(c), kind, self.id(p)));
                    }
                }
            }
        }
        Ok(Neighborhood {
            center,
            nodes: self.ids_of(&nodes),
            edges,
        })
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Neighborhood {
    pub center: EntityId,
    pub nodes: Vec<EntityId>,
    pub edges: Vec<Edge>,
}

pub(crate) fn merge_sorted(a: &[Node], b: &[Node]) -> Vec<Node> {
    let mut out = Vec::with_capacity(a.len() + b.len());
    let (mut i, mut j) = (0, 0);
    while i < a.len() && j < b.len() {
        match a[i].cmp(&b[j]) {
            std::cmp::Ordering::Less => {
                out.push(a[i]);
                i += 1;
            }
            std::cmp::Ordering::Greater => {
                out.push(b[j]);
                j += 1;
            }
            std::cmp::Ordering::Equal => {
                out.push(a[i]);
                i += 1;
                j += 1;
            }
        }
    }
    out.extend_from_slice(&a[i..]);
    out.extend_from_slice(&b[j..]);
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures::{g1, q};

    #[test]
    fn g1_counts() {
        let g = g1();
        assert_eq!(g.node_count(), 9);
        assert_eq!(g.edge_count(EdgeKind::SubclassOf), 9);
        assert_eq!(g.edge_count(EdgeKind::InstanceOf), 2);
        assert_eq!(g.self_loop_count(EdgeKind::SubclassOf), 0);
    }

    #[test]
    fn empty_stream_gives_empty_graph() {
        let g = TaxonomyGraph::from_edges(std::iter::empty());
        assert!(g.is_empty());
        assert_eq!(g.total_edges(), 0);
    }

    #[test]
    fn duplicates_are_stored_once() {
        let e = Edge::new(q(4), EdgeKind::SubclassOf, q(2));
        let g = TaxonomyGraph::from_edges([e, e, e]);
        assert_eq!(g.edge_count(EdgeKind::SubclassOf), 1);
        assert_eq!(g.node_count(), 2);
    }

    #[test]
    fn self_loops_are_kept_and_counted() {
        let g = TaxonomyGraph::from_edges([
            Edge::new(q(3), EdgeKind::SubclassOf, q(3)),
            Edge::new(q(3), EdgeKind::SubclassOf, q(1)),
        ]);
        assert_eq!(g.self_loop_count(EdgeKind::SubclassOf), 1);
        assert_eq!(g.edge_count(EdgeKind::SubclassOf), 2);
        assert_eq!(g.parents(q(3), EdgeKind::SubclassOf).unwrap(), vec![q(1), q(3)]);
    }

    #[test]
    fn g1_distances() {
        let g = g1();
        let u = DistanceMode::UndirectedUnion;
        assert_eq!(g.distance(q(2), q(3), 10, u).unwrap(), Distance::Hops(2));
        assert_eq!(g.distance(q(4), q(4), 10, u).unwrap(), Distance::Hops(0));
        assert_eq!(
            g.distance(q(4), q(4), 10, DistanceMode::UpwardSubclass).unwrap(),
            Distance::Hops(0)
        );
        assert_eq!(g.distance(q(4), q(7), 10, u).unwrap(), Distance::Unreachable);
        assert_eq!(
            g.distance(q(6), q(1), 10, DistanceMode::UpwardSubclass).unwrap(),
            Distance::Hops(3)
        );
        assert_eq!(
            g.distance(q(6), q(1), 10, DistanceMode::UpwardAny).unwrap(),
            Distance::Hops(2)
        );
        assert_eq!(
            g.distance(q(1), q(6), 10, DistanceMode::UpwardAny).unwrap(),
            Distance::Unreachable
        );
        assert_eq!(g.distance(q(5), q(9), 2, u).unwrap(), Distance::Unreachable);
        assert_eq!(g.distance(q(5), q(9), 3, u).unwrap(), Distance::Hops(3));
    }

    #[test]
    fn unknown_entity_is_an_error() {
        let g = g1();
        assert_eq!(
            g.distance(q(2), q(100), 10, DistanceMode::UndirectedUnion),
            Err(GraphError::UnknownEntity(q(100)))
        );
        assert!(g.neighborhood(q(100), 1).is_err());
    }

    #[test]
    fn g1_neighborhoods() {
        let g = g1();
        let hood = g.neighborhood(q(4), 1).unwrap();
        assert_eq!(hood.nodes, vec![q(2), q(3), q(4), q(5), q(6)]);
        let sc = EdgeKind::SubclassOf;
        let io = EdgeKind::InstanceOf;
        assert_eq!(
            hood.edges,
            vec![
                Edge::new(q(4), sc, q(2)),
                Edge::new(q(4), sc, q(3)),
                Edge::new(q(5), io, q(4)),
                Edge::new(q(6), io, q(2)),
                Edge::new(q(6), sc, q(4)),
            ]
        );

        let zero = g.neighborhood(q(4), 0).unwrap();
        assert_eq!(zero.nodes, vec![q(4)]);
        assert!(zero.edges.is_empty());

        let cycle = g.neighborhood(q(7), 2).unwrap();
        assert_eq!(cycle.nodes, vec![q(7), q(8)]);
        assert_eq!(
            cycle.edges,
            vec![Edge::new(q(7), sc, q(8)), Edge::new(q(8), sc, q(7))]
        );
    }

    #[test]
    fn isolated_nodes_survive_finalize() {
        let mut b = GraphBuilder::new();
        b.add_node(q(42));
        let g = b.finalize();
        assert_eq!(g.entities(), &[q(42)]);
        assert_eq!(g.total_edges(), 0);
    }

    #[test]
    fn edges_iterate_in_canonical_order() {
        let g = g1();
        let edges: Vec<Edge> = g.edges().collect();
        assert_eq!(edges.len(), 11);
        let mut sorted = edges.clone();
        sorted.sort();
        assert_eq!(edges, sorted);
    }
}
