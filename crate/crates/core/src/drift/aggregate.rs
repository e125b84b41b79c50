use std::collections::BTreeMap;
use std::fmt;

use serde::Serialize;

use super::screen::{RootKey, Segment};
use crate::id::EntityId;

/// One line of the drift table: screening fields plus the drift result.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct DriftRow {
    pub entity: EntityId,
    pub parent_cnt: usize,
    pub min_depth: Option<u32>,
    pub segment: Segment,
    pub drift_raw: f64,
    pub drift_adj: f64,
    pub flagged: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RootAggregate {
    pub root: RootKey,
    pub cnt: usize,
    pub avg_drift: f64,
    pub p90: f64,
    pub high_ratio: f64,
}

/// Nearest-rank percentile of an ascending slice: the element at 1-based
/// rank ⌈p·n/100⌉.
pub fn nearest_rank(sorted: &[f64], percent: u32) -> Option<f64> {
    if sorted.is_empty() {
        return None;
    }
    let n = sorted.len();
    let rank = (percent as usize * n).div_ceil(100).max(1);
    Some(sorted[rank - 1])
}

/// Groups drift values by pseudo-root. Entities missing from `roots` are
/// counted as unrooted. Sorted by count descending, then root.
pub fn aggregate_by_root<'a>(
    records: impl IntoIterator<Item = (EntityId, f64)>,
    roots: &'a BTreeMap<EntityId, RootKey>,
    threshold: f64,
) -> Vec<RootAggregate> {
    let mut groups: BTreeMap<RootKey, Vec<f64>> = BTreeMap::new();
    for (entity, adj) in records {
        let key = roots.get(&entity).copied().unwrap_or(RootKey::Unrooted);
        groups.entry(key).or_default().push(adj);
    }
    let mut out: Vec<RootAggregate> = groups
        .into_iter()
        .map(|(root, mut values)| {
            values.sort_by(f64::total_cmp);
            let cnt = values.len();
            let high = values.iter().filter(|&&v| v >= threshold).count();
            RootAggregate {
                root,
                cnt,
                avg_drift: values.iter().sum::<f64>() / cnt as f64,
                p90: nearest_rank(&values, 90).expect("groups are non-empty"),
                high_ratio: high as f64 / cnt as f64,
            }
        })
        .collect();
    out.sort_by(|a, b| b.cnt.cmp(&a.cnt).then(a.root.cmp(&b.root)));
    out
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub enum ParentGroup {
    #[serde(rename = "<=2")]
    AtMostTwo,
    #[serde(rename = "3-6")]
    ThreeToSix,
    #[serde(rename = ">6")]
    MoreThanSix,
}

impl ParentGroup {
    pub const ALL: [ParentGroup; 3] = [ParentGroup::AtMostTwo, ParentGroup::ThreeToSix, ParentGroup::MoreThanSix];

    pub fn of(parent_cnt: usize) -> Self {
        match parent_cnt {
            0..=2 => ParentGroup::AtMostTwo,
            3..=6 => ParentGroup::ThreeToSix,
            _ => ParentGroup::MoreThanSix,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            ParentGroup::AtMostTwo => "<=2",
            ParentGroup::ThreeToSix => "3-6",
            ParentGroup::MoreThanSix => ">6",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|g| g.as_str() == s)
    }
}

impl fmt::Display for ParentGroup {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Lower edges of the drift bins; each bin runs up to the next edge, the
/// last one is open.
pub const BIN_EDGES: [f64; 6] = [0.0, 0.2, 0.4, 0.6, 1.0, 1.5];

pub fn bin_bounds(bin: usize) -> (f64, f64) {
    (BIN_EDGES[bin], BIN_EDGES.get(bin + 1).copied().unwrap_or(f64::INFINITY))
}

pub fn bin_of(drift_adj: f64) -> usize {
    BIN_EDGES.iter().rposition(|&lo| drift_adj >= lo).unwrap_or(0)
}

/// Entity counts by parent group and adjusted-drift bin.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize)]
pub struct Heatmap {
    pub counts: [[u64; BIN_EDGES.len()]; 3],
}

impl Heatmap {
    pub fn add(&mut self, parent_cnt: usize, drift_adj: f64) {
        self.counts[ParentGroup::of(parent_cnt) as usize][bin_of(drift_adj)] += 1;
    }

    pub fn get(&self, group: ParentGroup, bin: usize) -> u64 {
        self.counts[group as usize][bin]
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().flatten().sum()
    }

    /// `(group, lo, hi, count)` for every cell, row-major.
    pub fn cells(&self) -> impl Iterator<Item = (ParentGroup, f64, f64, u64)> + '_ {
        ParentGroup::ALL.into_iter().flat_map(move |g| {
            (0..BIN_EDGES.len()).map(move |b| {
                let (lo, hi) = bin_bounds(b);
                (g, lo, hi, self.get(g, b))
            })
        })
    }
}

pub fn heatmap<'a>(rows: impl IntoIterator<Item = &'a DriftRow>) -> Heatmap {
    let mut h = Heatmap::default();
    for r in rows {
        h.add(r.parent_cnt, r.drift_adj);
    }
    h
}
