//! Oracle comparisons shared by the unit-style tests here and the
//! acceptance runner. Each returns a short summary or the first mismatch.

use std::collections::{BTreeMap, BTreeSet, HashMap, HashSet, VecDeque};

use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};
use taxolint_core::cme::{detect_anti_patterns, pure_class_filter, weakly_connected_components, AntiPatternTag, FlagDetail};
use taxolint_core::drift::{aggregate_by_root, RootKey, DEFAULT_THRESHOLD};
use taxolint_core::policy::MetaclassPolicy;
use taxolint_core::{Distance, DistanceMode, Edge, EdgeKind, EntityId, TaxonomyGraph};

use super::*;

pub type Check = Result<String, String>;

macro_rules! ensure {
    ($cond:expr, $($msg:tt)+) => {
        if !$cond {
            return Err(format!($($msg)+));
        }
    };
}

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub enum Key {
    None,
    Parent(EntityId),
    Kind(EdgeKind),
}

/// Every flag the definitions call for, computed straight from the edge set.
pub fn cme_oracle(edges: &[Edge], policy: &MetaclassPolicy) -> BTreeSet<(EntityId, AntiPatternTag, Key)> {
    let set: HashSet<Edge> = edges.iter().copied().collect();
    let (ids, _) = index(edges);
    let has = |c: EntityId, k: EdgeKind, p: EntityId| set.contains(&Edge::new(c, k, p));
    let p279_out = |c: EntityId| ids.iter().copied().filter(move |&p| has(c, EdgeKind::SubclassOf, p));

    // P279 reachability with one node removed, by plain BFS.
    let reach_without = |from: EntityId, to: EntityId, banned: Option<EntityId>| -> bool {
        let mut seen = HashSet::from([from]);
        let mut q = VecDeque::from([from]);
        while let Some(u) = q.pop_front() {
            if u == to {
                return true;
            }
            for v in p279_out(u) {
                if Some(v) != banned && seen.insert(v) {
                    q.push_back(v);
                }
            }
        }
        false
    };

    let mut out = BTreeSet::new();
    for &e in &ids {
        let meaningful_p31 = ids
            .iter()
            .any(|&p| has(e, EdgeKind::InstanceOf, p) && !policy.is_metaclass(p));
        let any_p279_out = ids.iter().any(|&p| has(e, EdgeKind::SubclassOf, p));
        let any_p279_in = ids.iter().any(|&c| has(c, EdgeKind::SubclassOf, e));
        if meaningful_p31 && any_p279_out {
            out.insert((e, AntiPatternTag::DualRole, Key::None));
        }
        if meaningful_p31 && any_p279_in {
            out.insert((e, AntiPatternTag::InstanceWithSubclasses, Key::None));
        }
        for k in EdgeKind::ALL {
            if has(e, k, e) {
                out.insert((e, AntiPatternTag::SelfLoop, Key::Kind(k)));
            }
        }
        // On a directed P279 cycle through some other node.
        if p279_out(e).any(|p| p != e && reach_without(p, e, None)) {
            out.insert((e, AntiPatternTag::CycleMember, Key::None));
        }
        // Direct edge e→a plus a simple path e→x→…→a.
        for a in p279_out(e).filter(|&a| a != e) {
            if p279_out(e).any(|x| x != e && x != a && reach_without(x, a, Some(e))) {
                out.insert((e, AntiPatternTag::RedundantEdge, Key::Parent(a)));
            }
        }
    }
    out
}

pub fn flag_key(detail: &FlagDetail) -> Key {
    match detail {
        FlagDetail::Redundant { parent, .. } => Key::Parent(*parent),
        FlagDetail::SelfLoop { kind } => Key::Kind(*kind),
        _ => Key::None,
    }
}

fn is_p279_path(set: &HashSet<Edge>, path: &[EntityId]) -> bool {
    let distinct: HashSet<_> = path.iter().collect();
    distinct.len() == path.len()
        && path
            .windows(2)
            .all(|w| set.contains(&Edge::new(w[0], EdgeKind::SubclassOf, w[1])))
}

/// Detector output against the brute-force predicates on 100 random graphs
/// of at most 200 nodes, plus witness validity.
pub fn check_cme_equivalence() -> Check {
    let started = std::time::Instant::now();
    let mut seen_tags = BTreeSet::new();
    let mut total = 0usize;
    for seed in 0..100u64 {
        let n = 10 + (seed as usize * 31) % 191;
        let edges = random_edges(seed.wrapping_mul(977), n);
        let (ids, _) = index(&edges);
        let policy = if seed % 3 == 0 {
            MetaclassPolicy::new([ids[0], ids[ids.len() / 2]], [ids[1]]).unwrap()
        } else {
            MetaclassPolicy::empty()
        };
        let max_paths = 1 + (seed as usize % 4);
        let g = TaxonomyGraph::from_edges(edges.iter().copied());
        let flags = detect_anti_patterns(&g, &policy, max_paths);
        let got: BTreeSet<_> = flags.iter().map(|f| (f.entity, f.tag, flag_key(&f.detail))).collect();
        ensure!(got.len() == flags.len(), "seed {seed}: duplicate flags");
        let want = cme_oracle(&edges, &policy);
        seen_tags.extend(want.iter().map(|(_, t, _)| *t));
        let missed: Vec<_> = want.difference(&got).collect();
        let spurious: Vec<_> = got.difference(&want).collect();
        ensure!(
            missed.is_empty() && spurious.is_empty(),
            "seed {seed}: missed {missed:?} spurious {spurious:?}"
        );
        total += flags.len();

        let set: HashSet<Edge> = edges.iter().copied().collect();
        for f in &flags {
            match &f.detail {
                FlagDetail::Redundant { parent, witnesses } => {
                    ensure!(!witnesses.is_empty() && witnesses.len() <= max_paths, "seed {seed}: witness count");
                    for w in witnesses {
                        ensure!(w.len() >= 3, "seed {seed}: witness {w:?} shorter than two hops");
                        ensure!((w[0], *w.last().unwrap()) == (f.entity, *parent), "seed {seed}: witness ends");
                        ensure!(is_p279_path(&set, w), "seed {seed}: invalid witness {w:?}");
                    }
                    let lens: Vec<usize> = witnesses.iter().map(Vec::len).collect();
                    ensure!(lens.iter().all(|&l| l >= lens[0]), "seed {seed}: shortest witness first");
                }
                FlagDetail::Cycle { members } => {
                    ensure!(members.len() >= 2 && members.contains(&f.entity), "seed {seed}: cycle members");
                }
                _ => {}
            }
        }
    }
    ensure!(seen_tags.len() == 5, "only tags {seen_tags:?} were exercised");
    let secs = started.elapsed().as_secs_f64();
    ensure!(secs < 30.0, "took {secs:.1}s");
    Ok(format!("100 graphs, {total} flags, precision = recall = 1.0, {secs:.2}s"))
}

/// Pure-class sets against distinct-degree counts. Edges only point to
/// lower indices (plus P279 self-loops), so there are no P279 cycles through
/// two or more nodes.
pub fn check_pure_classes(n: usize, seed: u64) -> Check {
    let mut rng = StdRng::seed_from_u64(seed);
    let mut edges = Vec::new();
    for i in 1..n {
        let k = match rng.random_range(0..10) {
            0 => 0,
            1..=6 => 1,
            7 | 8 => 2,
            _ => 3,
        };
        for _ in 0..k {
            edges.push(Edge::new(id_of(i), EdgeKind::SubclassOf, id_of(rng.random_range(0..i))));
        }
        if rng.random_bool(0.01) {
            edges.push(Edge::new(id_of(i), EdgeKind::SubclassOf, id_of(i)));
        }
        for _ in 0..rng.random_range(0..4) {
            let mut p = rng.random_range(0..n);
            if p == i {
                p = (p + 1) % n;
            }
            edges.push(Edge::new(id_of(i), EdgeKind::InstanceOf, id_of(p)));
        }
    }
    let g = TaxonomyGraph::from_edges(edges.iter().copied());

    let mut p279_out: HashMap<EntityId, BTreeSet<EntityId>> = HashMap::new();
    let mut p31_out: HashMap<EntityId, BTreeSet<EntityId>> = HashMap::new();
    let mut has_instance: HashSet<EntityId> = HashSet::new();
    for e in &edges {
        match e.kind {
            EdgeKind::SubclassOf => p279_out.entry(e.child).or_default().insert(e.parent),
            EdgeKind::InstanceOf => {
                has_instance.insert(e.parent);
                p31_out.entry(e.child).or_default().insert(e.parent)
            }
        };
    }
    let (ids, _) = index(&edges);
    let pure: BTreeSet<EntityId> = ids
        .iter()
        .copied()
        .filter(|e| {
            let up = p279_out.get(e);
            up.is_some_and(|s| s.len() == 1 && !s.contains(e)) && p31_out.get(e).map_or(0, BTreeSet::len) <= 2
        })
        .collect();
    let with_instances: BTreeSet<EntityId> = pure.iter().copied().filter(|e| has_instance.contains(e)).collect();

    let report = pure_class_filter(&g);
    ensure!(report.pure_classes == pure, "pure classes differ ({} vs {})", report.pure_classes.len(), pure.len());
    ensure!(report.pure_with_instances == with_instances, "pure classes with instances differ");
    ensure!(report.tree_roots.is_subset(&report.pure_with_instances), "tree roots outside pure set");
    Ok(format!(
        "{} entities: {} pure, {} with instances, {} tree roots",
        ids.len(),
        pure.len(),
        with_instances.len(),
        report.tree_roots.len()
    ))
}

fn expected(d: u32, cap: u32) -> Distance {
    if d <= cap {
        Distance::Hops(d)
    } else {
        Distance::Unreachable
    }
}

/// Bounded BFS distances in all three modes against Floyd–Warshall.
pub fn check_distances() -> Check {
    let mut compared = 0usize;
    for seed in 0..100u64 {
        let n = 20 + (seed as usize * 37) % 181;
        let edges = random_edges(seed, n);
        let g = TaxonomyGraph::from_edges(edges.iter().copied());
        let (ids, pos) = index(&edges);
        ensure!(g.entities() == ids.as_slice(), "seed {seed}: dense order");

        let modes = [
            (DistanceMode::UndirectedUnion, arcs(&edges, &pos, &EdgeKind::ALL, true)),
            (DistanceMode::UpwardAny, arcs(&edges, &pos, &EdgeKind::ALL, false)),
            (DistanceMode::UpwardSubclass, arcs(&edges, &pos, &[EdgeKind::SubclassOf], false)),
        ];
        let mut rng = StdRng::seed_from_u64(seed);
        for (mode, arcs) in modes {
            let fw = floyd_warshall(ids.len(), &arcs);
            for _ in 0..300 {
                let a = rng.random_range(0..ids.len());
                let b = rng.random_range(0..ids.len());
                for cap in [1, 3, 10, u32::MAX - 1] {
                    let got = g.distance(ids[a], ids[b], cap, mode).unwrap();
                    ensure!(
                        got == expected(fw[a][b], cap),
                        "seed {seed} {mode:?} {} {} cap {cap}: {got:?} vs {}",
                        ids[a],
                        ids[b],
                        fw[a][b]
                    );
                    compared += 1;
                }
            }
            if mode == DistanceMode::UndirectedUnion {
                for _ in 0..200 {
                    let [a, b, c] = [0; 3].map(|_| rng.random_range(0..ids.len()));
                    let d = |x: usize, y: usize| g.distance(ids[x], ids[y], 400, mode).unwrap().hops();
                    if let (Some(ab), Some(bc)) = (d(a, b), d(b, c)) {
                        ensure!(d(a, c).unwrap() <= ab + bc, "seed {seed}: triangle inequality");
                    }
                    ensure!(d(a, b) == d(b, a), "seed {seed}: symmetry");
                }
            }
        }
    }
    Ok(format!("100 graphs, {compared} bounded queries"))
}

/// Weakly connected components against union-find.
pub fn check_wcc() -> Check {
    for seed in 0..100u64 {
        let n = 10 + (seed as usize * 53) % 191;
        let edges = random_edges(seed ^ 0xabcd, n);
        let g = TaxonomyGraph::from_edges(edges.iter().copied());
        let (ids, pos) = index(&edges);
        let mut uf = UnionFind::new(ids.len());
        for e in &edges {
            uf.union(pos[&e.child], pos[&e.parent]);
        }
        let wcc = weakly_connected_components(&g);
        let roots: Vec<usize> = (0..ids.len()).map(|i| uf.find(i)).collect();
        let distinct: BTreeSet<usize> = roots.iter().copied().collect();
        ensure!(wcc.component_count() == distinct.len(), "seed {seed}: component count");
        for i in 0..ids.len() {
            for j in (i + 1..ids.len()).step_by(7) {
                let same = wcc.component_of(&g, ids[i]).unwrap() == wcc.component_of(&g, ids[j]).unwrap();
                ensure!(same == (roots[i] == roots[j]), "seed {seed}: {} {}", ids[i], ids[j]);
            }
        }
        // Ids are dense and ordered by smallest member.
        let mut next = 0;
        for &id in &ids {
            let c = wcc.component_of(&g, id).unwrap();
            if c == next {
                next += 1;
            } else {
                ensure!(c < next, "seed {seed}: component ids out of order");
            }
        }
        ensure!(next as usize == wcc.component_count(), "seed {seed}: sparse ids");
        ensure!(wcc.sizes().iter().sum::<usize>() == ids.len(), "seed {seed}: sizes");
    }
    Ok("100 graphs".into())
}

/// Per-root mean, nearest-rank p90 and high ratio against a sorted list.
pub fn check_aggregation(records: u64) -> Check {
    let mut rng = StdRng::seed_from_u64(7);
    let roots: BTreeMap<EntityId, RootKey> = (1..=records)
        .map(|i| {
            let r = rng.random_range(0..60u64);
            let key = if r == 59 { RootKey::Unrooted } else { RootKey::Root(EntityId::new(1_000_000 + r).unwrap()) };
            (EntityId::new(i).unwrap(), key)
        })
        .collect();
    let values: Vec<(EntityId, f64)> = roots.keys().map(|&e| (e, rng.random_range(0.0..2.5))).collect();
    let aggs = aggregate_by_root(values.iter().copied(), &roots, DEFAULT_THRESHOLD);

    let mut groups: HashMap<RootKey, Vec<f64>> = HashMap::new();
    for (e, v) in &values {
        groups.entry(roots[e]).or_default().push(*v);
    }
    ensure!(aggs.len() == groups.len(), "group count");
    for a in &aggs {
        let mut v = groups[&a.root].clone();
        v.sort_by(|x, y| x.partial_cmp(y).unwrap());
        let cnt = v.len();
        ensure!(a.cnt == cnt, "{}: count", a.root);
        let mean = v.iter().sum::<f64>() / cnt as f64;
        let rank = (9 * cnt).div_ceil(10);
        let high = v.iter().filter(|&&x| x >= DEFAULT_THRESHOLD).count() as f64 / cnt as f64;
        ensure!((a.avg_drift - mean).abs() < 1e-12, "{}: mean {} vs {mean}", a.root, a.avg_drift);
        ensure!(a.p90 == v[rank - 1], "{}: p90 {} vs {}", a.root, a.p90, v[rank - 1]);
        ensure!((a.high_ratio - high).abs() < 1e-12, "{}: high ratio", a.root);
    }
    ensure!(aggs.windows(2).all(|w| w[0].cnt >= w[1].cnt), "order by count");
    Ok(format!("{records} records over {} roots", aggs.len()))
}
