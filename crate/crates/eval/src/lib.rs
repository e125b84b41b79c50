//! Synthetic workloads shared by the benches and the acceptance runner.

use std::io::{self, Write};

use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};
use taxolint_core::{Edge, EdgeKind, EntityId};

/// A taxonomy-shaped edge stream: `triples` edges over roughly
/// `triples / 2` entities, mostly pointing towards older (smaller) ids,
/// with a sprinkling of self-loops and back edges.
pub struct Synthetic {
    rng: StdRng,
    remaining: usize,
    entities: u64,
    next_child: u64,
}

impl Synthetic {
    pub fn new(triples: usize, seed: u64) -> Self {
        Self {
            rng: StdRng::seed_from_u64(seed),
            remaining: triples,
            entities: (triples as u64 / 2).max(2),
            next_child: 2,
        }
    }
}

impl Iterator for Synthetic {
    type Item = Edge;

    fn next(&mut self) -> Option<Edge> {
        if self.remaining == 0 {
            return None;
        }
        self.remaining -= 1;
        let child = if self.rng.random_bool(0.5) {
            let c = self.next_child;
            self.next_child = if c >= self.entities { 2 } else { c + 1 };
            c
        } else {
            self.rng.random_range(2..=self.entities)
        };
        let parent = match self.rng.random_range(0..1000) {
            0 => child,
            1..=9 => self.rng.random_range(1..=self.entities),
            _ => self.rng.random_range(1..child),
        };
        let kind = if self.rng.random_bool(0.6) { EdgeKind::SubclassOf } else { EdgeKind::InstanceOf };
        Some(Edge::new(id(child), kind, id(parent)))
    }
}

fn id(n: u64) -> EntityId {
    EntityId::new(n).expect("synthetic ids start at 1")
}

/// Writes the edges as `child\tP\tparent` lines.
pub fn write_tsv<W: Write>(edges: impl IntoIterator<Item = Edge>, mut out: W) -> io::Result<()> {
    for e in edges {
        writeln!(out, "{}\t{}\t{}", e.child, e.kind, e.parent)?;
    }
    out.flush()
}

pub fn synthetic_tsv(triples: usize, seed: u64) -> Vec<u8> {
    let mut buf = Vec::with_capacity(triples * 20);
    write_tsv(Synthetic::new(triples, seed), &mut buf).expect("in-memory write");
    buf
}
