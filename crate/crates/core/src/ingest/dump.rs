//! One-entity-per-line Wikidata JSON dumps (`latest-all.json` layout).

use std::borrow::Cow;
use std::collections::HashMap;

use serde::Deserialize;

use crate::error::IngestError;
use crate::id::{EdgeKind, EntityId};
use crate::text::EntityText;

use super::TripleRecord;

/// What one dump line contributes.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct DumpEntity {
    pub edges: Vec<TripleRecord>,
    pub text: Option<EntityText>,
}

#[derive(Deserialize)]
pub(crate) struct RawEntity<'a> {
    #[serde(rename = "type", borrow, default)]
    kind: Option<Cow<'a, str>>,
    #[serde(borrow)]
    id: Cow<'a, str>,
    #[serde(borrow, default)]
    labels: HashMap<Cow<'a, str>, LangValue<'a>>,
    #[serde(borrow, default)]
    descriptions: HashMap<Cow<'a, str>, LangValue<'a>>,
    #[serde(borrow, default)]
    claims: Claims<'a>,
}

#[derive(Deserialize)]
struct LangValue<'a> {
    #[serde(borrow)]
    value: Cow<'a, str>,
}

#[derive(Deserialize, Default)]
struct Claims<'a> {
    #[serde(rename = "P31", borrow, default)]
    instance_of: Vec<Statement<'a>>,
    #[serde(rename = "P279", borrow, default)]
    subclass_of: Vec<Statement<'a>>,
}

#[derive(Deserialize)]
struct Statement<'a> {
    #[serde(borrow)]
    mainsnak: Snak<'a>,
    #[serde(borrow, default)]
    rank: Option<Cow<'a, str>>,
}

#[derive(Deserialize)]
struct Snak<'a> {
    #[serde(borrow)]
    snaktype: Cow<'a, str>,
    #[serde(default)]
    datavalue: Option<DataValue>,
}

#[derive(Deserialize)]
struct DataValue {
    value: serde_json::Value,
}

impl Statement<'_> {
    fn target(&self) -> Option<EntityId> {
        if self.mainsnak.snaktype != "value" {
            return None;
        }
        if matches!(self.rank.as_deref(), Some("deprecated")) {
            return None;
        }
        let value = &self.mainsnak.datavalue.as_ref()?.value;
        if let Some(id) = value.get("id").and_then(|v| v.as_str()) {
            return id.parse().ok();
        }
        value
            .get("numeric-id")
            .and_then(|v| v.as_u64())
            .and_then(EntityId::new)
    }
}

impl RawEntity<'_> {
    /// Converts to edges + text. Returns `None` for non-item entities.
    pub(crate) fn into_entity(self, language: &str, line: u64) -> Result<Option<DumpEntity>, IngestError> {
        if let Some(kind) = &self.kind {
            if kind != "item" {
                return Ok(None);
            }
        }
        if !self.id.starts_with('Q') {
            return Ok(None);
        }
        let entity: EntityId = self
            .id
            .parse()
            .map_err(|_| IngestError::MalformedLine(format!("bad entity id {:?}", self.id)))?;

        let mut edges = Vec::new();
        for (kind, statements) in [
            (EdgeKind::InstanceOf, &self.claims.instance_of),
            (EdgeKind::SubclassOf, &self.claims.subclass_of),
        ] {
            edges.extend(statements.iter().filter_map(Statement::target).map(|parent| {
                TripleRecord {
                    child: entity,
                    kind,
                    parent,
                    source_line: line,
                }
            }));
        }

        let label = self.labels.get(language).map(|v| v.value.as_ref()).unwrap_or("");
        let description = self
            .descriptions
            .get(language)
            .map(|v| v.value.as_ref())
            .unwrap_or("");
        Ok(Some(DumpEntity {
            edges,
            text: Some(EntityText::new(entity, language, label, description)),
        }))
    }
}

/// Parses one dump line. Array delimiters and blank lines yield nothing.
pub fn parse_dump_line(line: &str, language: &str, line_no: u64) -> Result<DumpEntity, IngestError> {
    let trimmed = line.trim();
    let trimmed = trimmed.strip_prefix('[').unwrap_or(trimmed).trim_start();
    let trimmed = trimmed.strip_suffix(',').unwrap_or(trimmed);
    let trimmed = trimmed.strip_suffix(']').unwrap_or(trimmed).trim_end();
    if trimmed.is_empty() {
        return Ok(DumpEntity::default());
    }
    let raw: RawEntity<'_> = serde_json::from_str(trimmed)
        .map_err(|e| IngestError::MalformedLine(format!("line {line_no}: {e}")))?;
    Ok(raw.into_entity(language, line_no)?.unwrap_or_default())
}
