use serde::{Deserialize, Serialize};

use crate::error::GraphError;
use crate::graph::{Direction, Distance, DistanceMode, Node, TaxonomyGraph};
use crate::id::{EdgeKind, EntityId};
use crate::policy::MetaclassPolicy;

/// Q35120, "entity": the default taxonomy root.
pub const DEFAULT_ROOT: EntityId = EntityId::from_raw(35120);

/// Average P31 links per entity.
pub const REFERENCE_P31: f64 = 1.3;
/// Average P279 links per entity.
pub const REFERENCE_P279: f64 = 1.2;

/// Which parent pairs the coherence dimension measures.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ParentScope {
    /// All pairs over the union of P31 and P279 targets.
    #[default]
    Union,
    /// Only pairs of the same kind.
    PerKind,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RiskConfig {
    /// Distance cap; unreachable pairs count as this many hops.
    pub d_max: u32,
    pub link_divisor: f64,
    pub variance_divisor: f64,
    pub reference_p31: f64,
    pub reference_p279: f64,
    pub root: EntityId,
    pub parent_scope: ParentScope,
}

impl Default for RiskConfig {
    fn default() -> Self {
        Self {
            d_max: 10,
            link_divisor: 5.0,
            variance_divisor: 9.0,
            reference_p31: REFERENCE_P31,
            reference_p279: REFERENCE_P279,
            root: DEFAULT_ROOT,
            parent_scope: ParentScope::Union,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct RiskWeights {
    pub connection: f64,
    pub coherence: f64,
    pub depth_variance: f64,
    pub alignment: f64,
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
#[error("risk weights must be finite, non-negative and not all zero")]
pub struct InvalidWeights;

impl RiskWeights {
    /// Renormalizes so the four weights sum to one.
    pub fn new(connection: f64, coherence: f64, depth_variance: f64, alignment: f64) -> Result<Self, InvalidWeights> {
        let w = [connection, coherence, depth_variance, alignment];
        if w.iter().any(|x| !x.is_finite() || *x < 0.0) {
            return Err(InvalidWeights);
        }
        let sum: f64 = w.iter().sum();
        if sum <= 0.0 {
            return Err(InvalidWeights);
        }
        Ok(Self {
            connection: connection / sum,
            coherence: coherence / sum,
            depth_variance: depth_variance / sum,
            alignment: alignment / sum,
        })
    }

    pub fn as_array(&self) -> [f64; 4] {
        [self.connection, self.coherence, self.depth_variance, self.alignment]
    }
}

impl Default for RiskWeights {
    fn default() -> Self {
        Self {
            connection: 0.25,
            coherence: 0.25,
            depth_variance: 0.25,
            alignment: 0.25,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RiskReport {
    pub entity: EntityId,
    pub p31_count: usize,
    pub p279_count: usize,
    pub dim_connection: f64,
    pub dim_coherence: f64,
    pub dim_depth_variance: f64,
    pub dim_alignment: f64,
    /// Pairwise parent distances, capped.
    pub raw_parent_distances: Vec<u32>,
    /// (parent, depth) for parents that reach the root.
    pub parent_depths: Vec<(EntityId, u32)>,
    pub unreachable_parents: Vec<EntityId>,
    pub depth_variance: f64,
    pub cross_distance: Option<Distance>,
    pub aggregate: f64,
}

impl RiskReport {
    pub fn dimensions(&self) -> [f64; 4] {
        [
            self.dim_connection,
            self.dim_coherence,
            self.dim_depth_variance,
            self.dim_alignment,
        ]
    }
}

/// max over kinds of clamp((count − reference) / divisor, 0, 1).
pub fn connection_score(p31_count: usize, p279_count: usize, config: &RiskConfig) -> f64 {
    let s = |count: usize, reference: f64| ((count as f64 - reference) / config.link_divisor).clamp(0.0, 1.0);
    s(p31_count, config.reference_p31).max(s(p279_count, config.reference_p279))
}

/// Cleaned parents of `node` of the given kind, self excluded.
fn kind_parents(g: &TaxonomyGraph, node: Node, kind: EdgeKind, policy: &MetaclassPolicy) -> Vec<Node> {
    g.adjacent(node, kind, Direction::Out)
        .iter()
        .copied()
        .filter(|&p| p != node && !policy.is_technical(g.id(p)))
        .collect()
}

fn union_parents(g: &TaxonomyGraph, node: Node, policy: &MetaclassPolicy) -> Vec<Node> {
    crate::graph::merge_sorted(
        &kind_parents(g, node, EdgeKind::InstanceOf, policy),
        &kind_parents(g, node, EdgeKind::SubclassOf, policy),
    )
}

fn pair_distances(g: &TaxonomyGraph, parents: &[Node], cap: u32, out: &mut Vec<u32>) {
    for (i, &a) in parents.iter().enumerate() {
        for &b in &parents[i + 1..] {
            out.push(g.node_distance(a, b, cap, DistanceMode::UndirectedUnion).capped(cap));
        }
    }
}

/// Mean pairwise parent distance over the cap. Fewer than two parents → 0.
pub fn coherence_score(
    g: &TaxonomyGraph,
    entity: EntityId,
    policy: &MetaclassPolicy,
    config: &RiskConfig,
) -> Result<(f64, Vec<u32>), GraphError> {
    let node = g.node(entity)?;
    let cap = config.d_max;
    let mut distances = Vec::new();
    match config.parent_scope {
        ParentScope::Union => pair_distances(g, &union_parents(g, node, policy), cap, &mut distances),
        ParentScope::PerKind => {
            for kind in EdgeKind::ALL {
                pair_distances(g, &kind_parents(g, node, kind, policy), cap, &mut distances);
            }
        }
    }
    if distances.is_empty() {
        return Ok((0.0, distances));
    }
    let mean = distances.iter().map(|&d| d as f64).sum::<f64>() / distances.len() as f64;
    Ok(((mean / cap as f64).clamp(0.0, 1.0), distances))
}

#[derive(Clone, Debug, PartialEq)]
pub struct DepthVariance {
    pub score: f64,
    pub depths: Vec<(EntityId, u32)>,
    pub unreachable: Vec<EntityId>,
    pub variance: f64,
}

/// Population variance of the parents' upward depths to the root.
pub fn depth_variance_score(
    g: &TaxonomyGraph,
    entity: EntityId,
    policy: &MetaclassPolicy,
    config: &RiskConfig,
) -> Result<DepthVariance, GraphError> {
    let node = g.node(entity)?;
    let root = g.node(config.root).map_err(|_| GraphError::RootMissing(config.root))?;
    let cap = 2 * config.d_max;
    let mut depths = Vec::new();
    let mut unreachable = Vec::new();
    for p in union_parents(g, node, policy) {
        match g.node_distance(p, root, cap, DistanceMode::UpwardAny) {
            Distance::Hops(d) => depths.push((g.id(p), d)),
            Distance::Unreachable => unreachable.push(g.id(p)),
        }
    }
    let variance = if depths.is_empty() {
        0.0
    } else {
        let n = depths.len() as f64;
        let mean = depths.iter().map(|&(_, d)| d as f64).sum::<f64>() / n;
        depths.iter().map(|&(_, d)| (d as f64 - mean).powi(2)).sum::<f64>() / n
    };
    Ok(DepthVariance {
        score: (variance / config.variance_divisor).clamp(0.0, 1.0),
        depths,
        unreachable,
        variance,
    })
}

/// Closest P31 target to any P279 target, over the cap. Entities missing
/// either kind score 0 with no distance.
pub fn alignment_score(
    g: &TaxonomyGraph,
    entity: EntityId,
    policy: &MetaclassPolicy,
    config: &RiskConfig,
) -> Result<(f64, Option<Distance>), GraphError> {
    let node = g.node(entity)?;
    let p31 = kind_parents(g, node, EdgeKind::InstanceOf, policy);
    let p279 = kind_parents(g, node, EdgeKind::SubclassOf, policy);
    if p31.is_empty() || p279.is_empty() {
        return Ok((0.0, None));
    }
    let cap = config.d_max;
    let mut best = Distance::Unreachable;
    'outer: for &a in &p31 {
        for &b in &p279 {
            let d = g.node_distance(a, b, cap, DistanceMode::UndirectedUnion);
            best = best.min(d);
            if best == Distance::Hops(0) {
                break 'outer;
            }
        }
    }
    Ok((best.capped(cap) as f64 / cap as f64, Some(best)))
}

pub fn aggregate_risk(
    g: &TaxonomyGraph,
    entity: EntityId,
    weights: &RiskWeights,
    policy: &MetaclassPolicy,
    config: &RiskConfig,
) -> Result<RiskReport, GraphError> {
    let node = g.node(entity)?;
    let p31_count = g.out_degree(node, EdgeKind::InstanceOf);
    let p279_count = g.out_degree(node, EdgeKind::SubclassOf);
    let dim_connection = connection_score(p31_count, p279_count, config);
    let (dim_coherence, raw_parent_distances) = coherence_score(g, entity, policy, config)?;
    let depth = depth_variance_score(g, entity, policy, config)?;
    let (dim_alignment, cross_distance) = alignment_score(g, entity, policy, config)?;
    let dims = [dim_connection, dim_coherence, depth.score, dim_alignment];
    let aggregate = weights
        .as_array()
        .iter()
        .zip(dims)
        .map(|(w, d)| w * d)
        .sum::<f64>()
        .clamp(0.0, 1.0);
    Ok(RiskReport {
        entity,
        p31_count,
        p279_count,
        dim_connection,
        dim_coherence,
        dim_depth_variance: depth.score,
        dim_alignment,
        raw_parent_distances,
        parent_depths: depth.depths,
        unreachable_parents: depth.unreachable,
        depth_variance: depth.variance,
        cross_distance,
        aggregate,
    })
}
