use serde::Serialize;

use super::catalog::{Catalogs, Locale};
use super::scores::RiskReport;

pub const STRENGTH_BELOW: f64 = 0.2;
pub const ISSUE_ABOVE: f64 = 0.6;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Severity {
    Strength,
    Issue,
}

/// The four risk dimensions, in report order.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Dimension {
    Connection,
    Coherence,
    DepthVariance,
    Alignment,
}

impl Dimension {
    pub const ALL: [Dimension; 4] = [
        Dimension::Connection,
        Dimension::Coherence,
        Dimension::DepthVariance,
        Dimension::Alignment,
    ];

    pub fn key(self) -> &'static str {
        match self {
            Dimension::Connection => "connection",
            Dimension::Coherence => "coherence",
            Dimension::DepthVariance => "depth_variance",
            Dimension::Alignment => "alignment",
        }
    }

    /// Catalog key of the dimension's display name.
    pub fn label_key(self) -> String {
        format!("dimension.{}", self.key())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Narration {
    pub severity: Severity,
    pub dimension: Dimension,
    pub key: String,
    pub params: Vec<(String, String)>,
    pub message: String,
}

/// Strengths (score < 0.2) and issues (score > 0.6), highest score first.
pub fn narrate_risk(report: &RiskReport, locale: &str, catalogs: &Catalogs) -> Vec<Narration> {
    let locale = Locale::or_english(locale);
    let mut scored: Vec<(Dimension, f64)> = Dimension::ALL.into_iter().zip(report.dimensions()).collect();
    // Stable: ties keep dimension order.
    scored.sort_by(|a, b| b.1.total_cmp(&a.1));
    scored
        .into_iter()
        .filter_map(|(dim, score)| {
            let severity = if score < STRENGTH_BELOW {
                Severity::Strength
            } else if score > ISSUE_ABOVE {
                Severity::Issue
            } else {
                return None;
            };
            let suffix = match severity {
                Severity::Strength => "strength",
                Severity::Issue => "issue",
            };
            let key = format!("narrative.{}.{suffix}", dim.key());
            let shown = format!("{score:.3}");
            let message = catalogs.get(locale, &key).replace("{score}", &shown);
            Some(Narration {
                severity,
                dimension: dim,
                key,
                params: vec![("score".to_owned(), shown)],
                message,
            })
        })
        .collect()
}
