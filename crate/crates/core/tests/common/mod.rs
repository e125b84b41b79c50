#![allow(dead_code)]

pub mod checks;

use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};
use taxolint_core::{EdgeKind, Edge, EntityId};

pub const INF: u32 = u32::MAX;

/// Sparse ids so ordinal and numeric order differ from index order.
pub fn id_of(i: usize) -> EntityId {
    EntityId::new(i as u64 * 7 + 3).unwrap()
}

/// Random edge list over `n` nodes with planted cycles, self-loops,
/// shortcut edges and dual-role nodes.
pub fn random_edges(seed: u64, n: usize) -> Vec<Edge> {
    let mut rng = StdRng::seed_from_u64(seed);
    let mut edges = Vec::new();
    let m = rng.random_range(n / 2..=n * 2);
    for _ in 0..m {
        let c = rng.random_range(0..n);
        // Mostly upward towards lower indices, like a taxonomy.
        let p = if rng.random_bool(0.85) && c > 0 { rng.random_range(0..c) } else { rng.random_range(0..n) };
        let kind = if rng.random_bool(0.7) { EdgeKind::SubclassOf } else { EdgeKind::InstanceOf };
        edges.push(Edge::new(id_of(c), kind, id_of(p)));
    }
    if n >= 4 {
        for _ in 0..rng.random_range(1..4) {
            let a = rng.random_range(0..n);
            let b = rng.random_range(0..n);
            let c = rng.random_range(0..n);
            if a != b {
                edges.push(Edge::new(id_of(a), EdgeKind::SubclassOf, id_of(b)));
                edges.push(Edge::new(id_of(b), EdgeKind::SubclassOf, id_of(c)));
                edges.push(Edge::new(id_of(c), EdgeKind::SubclassOf, id_of(a)));
            }
        }
        let s = rng.random_range(0..n);
        edges.push(Edge::new(id_of(s), EdgeKind::SubclassOf, id_of(s)));
        let (a, b, c) = (rng.random_range(0..n), rng.random_range(0..n), rng.random_range(0..n));
        edges.push(Edge::new(id_of(a), EdgeKind::SubclassOf, id_of(b)));
        edges.push(Edge::new(id_of(b), EdgeKind::SubclassOf, id_of(c)));
        edges.push(Edge::new(id_of(a), EdgeKind::SubclassOf, id_of(c)));
        let d = rng.random_range(0..n);
        edges.push(Edge::new(id_of(d), EdgeKind::InstanceOf, id_of(rng.random_range(0..n))));
        edges.push(Edge::new(id_of(d), EdgeKind::SubclassOf, id_of(rng.random_range(0..n))));
    }
    edges
}

/// Dense index of every node named by the edge list, ascending id.
pub fn index(edges: &[Edge]) -> (Vec<EntityId>, std::collections::HashMap<EntityId, usize>) {
    let mut ids: Vec<EntityId> = edges.iter().flat_map(|e| [e.child, e.parent]).collect();
    ids.sort_unstable();
    ids.dedup();
    let pos = ids.iter().enumerate().map(|(i, &id)| (id, i)).collect();
    (ids, pos)
}

/// All-pairs shortest paths; `step(child, kind, parent)` yields the arcs
/// to relax for each edge.
pub fn floyd_warshall(n: usize, arcs: &[(usize, usize)]) -> Vec<Vec<u32>> {
    let mut d = vec![vec![INF; n]; n];
    for (i, row) in d.iter_mut().enumerate() {
        row[i] = 0;
    }
    for &(a, b) in arcs {
        if a != b {
            d[a][b] = d[a][b].min(1);
        }
    }
    for k in 0..n {
        for i in 0..n {
            if d[i][k] == INF {
                continue;
            }
            for j in 0..n {
                let via = d[i][k].saturating_add(d[k][j]);
                if via < d[i][j] {
                    d[i][j] = via;
                }
            }
        }
    }
    d
}

pub fn arcs(
    edges: &[Edge],
    pos: &std::collections::HashMap<EntityId, usize>,
    kinds: &[EdgeKind],
    undirected: bool,
) -> Vec<(usize, usize)> {
    let mut out = Vec::new();
    for e in edges.iter().filter(|e| kinds.contains(&e.kind)) {
        let (c, p) = (pos[&e.child], pos[&e.parent]);
        out.push((c, p));
        if undirected {
            out.push((p, c));
        }
    }
    out
}

/// Minimal union-find with path halving.
pub struct UnionFind(Vec<usize>);

impl UnionFind {
    pub fn new(n: usize) -> Self {
        Self((0..n).collect())
    }

    pub fn find(&mut self, mut x: usize) -> usize {
        while self.0[x] != x {
            self.0[x] = self.0[self.0[x]];
            x = self.0[x];
        }
        x
    }

    pub fn union(&mut self, a: usize, b: usize) {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra != rb {
            self.0[ra.max(rb)] = ra.min(rb);
        }
    }
}
