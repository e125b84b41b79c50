use serde::{Deserialize, Serialize};

use crate::id::EntityId;

/// Label and description of an entity in one language.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct EntityText {
    pub entity: EntityId,
    pub language: String,
    pub label: String,
    pub description: String,
}

impl EntityText {
    /// Builds a text record, replacing tabs and newlines with single spaces.
    pub fn new(entity: EntityId, language: &str, label: &str, description: &str) -> Self {
        Self {
            entity,
            language: sanitize(language),
            label: sanitize(label),
            description: sanitize(description),
        }
    }

    /// `label. description`, dropping empty parts and the separator with them.
    pub fn embedding_input(&self) -> String {
        match (self.label.is_empty(), self.description.is_empty()) {
            (false, false) => format!("{}. {}", self.label, self.description),
            (false, true) => self.label.clone(),
            (true, false) => self.description.clone(),
            (true, true) => String::new(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.label.is_empty() && self.description.is_empty()
    }
}

/// Collapses every run of tab/CR/LF into one space.
pub fn sanitize(s: &str) -> String {
    let mut out = String::with_capacity(s.len());
    let mut in_break = false;
    for ch in s.chars() {
        if matches!(ch, '\t' | '\n' | '\r') {
            if !in_break {
                out.push(' ');
            }
            in_break = true;
        } else {
            out.push(ch);
            in_break = false;
        }
    }
    out
}
