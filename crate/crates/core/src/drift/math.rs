use serde::Serialize;

use crate::error::DriftError;
use crate::id::EntityId;

use super::embed::Embedding;

/// Default flagging threshold on adjusted drift.
pub const DEFAULT_THRESHOLD: f64 = 0.60;

/// Componentwise mean of the parent vectors (not renormalized).
pub fn mean_parent_embedding(parents: &[Embedding]) -> Result<Vec<f64>, DriftError> {
    if parents.len() < 2 {
        return Err(DriftError::TooFewParents(parents.len()));
    }
    let dim = parents[0].len();
    let mut mean = vec![0.0f64; dim];
    for p in parents {
        if p.len() != dim {
            return Err(DriftError::DimensionMismatch(dim, p.len()));
        }
        for (m, &x) in mean.iter_mut().zip(p.as_slice()) {
            *m += x as f64;
        }
    }
    let n = parents.len() as f64;
    mean.iter_mut().for_each(|m| *m /= n);
    Ok(mean)
}

/// Cosine similarity; `None` when either side has zero norm.
pub fn cosine(a: &[f64], b: &[f64]) -> Option<f64> {
    let (mut dot, mut na, mut nb) = (0.0, 0.0, 0.0);
    for (&x, &y) in a.iter().zip(b) {
        dot += x * y;
        na += x * x;
        nb += y * y;
    }
    if na == 0.0 || nb == 0.0 {
        return None;
    }
    Some((dot / (na.sqrt() * nb.sqrt())).clamp(-1.0, 1.0))
}

/// `raw · ln(n + 1)`
pub fn adjust(drift_raw: f64, n: usize) -> f64 {
    drift_raw * ((n + 1) as f64).ln()
}

pub fn is_flagged(drift_adj: f64, threshold: f64) -> bool {
    drift_adj >= threshold
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct DriftScore {
    pub n: usize,
    pub drift_raw: f64,
    pub drift_adj: f64,
    pub flagged: bool,
}

/// Cosine drift of an entity from its parents' centroid, scaled by
/// ln(n + 1). A zero centroid counts as raw drift 1.
pub fn drift(entity: &Embedding, parents: &[Embedding], threshold: f64) -> Result<DriftScore, DriftError> {
    let mean = mean_parent_embedding(parents)?;
    if entity.len() != mean.len() {
        return Err(DriftError::DimensionMismatch(entity.len(), mean.len()));
    }
    let e: Vec<f64> = entity.as_slice().iter().map(|&x| x as f64).collect();
    let drift_raw = match cosine(&e, &mean) {
        Some(cos) => 1.0 - cos,
        None => 1.0,
    };
    let n = parents.len();
    let drift_adj = adjust(drift_raw, n);
    Ok(DriftScore {
        n,
        drift_raw,
        drift_adj,
        flagged: is_flagged(drift_adj, threshold),
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct DriftRecord {
    pub entity: EntityId,
    pub n: usize,
    pub drift_raw: f64,
    pub drift_adj: f64,
    pub flagged: bool,
}

impl DriftRecord {
    pub fn new(entity: EntityId, score: DriftScore) -> Self {
        Self {
            entity,
            n: score.n,
            drift_raw: score.drift_raw,
            drift_adj: score.drift_adj,
            flagged: score.flagged,
        }
    }
}
