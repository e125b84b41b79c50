use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use crate::id::EntityId;

/// Class `Q16889133`, the abstract definition of "class".
pub const CLASS: EntityId = EntityId::from_raw(16889133);
/// Wikimedia category.
pub const WIKIMEDIA_CATEGORY: EntityId = EntityId::from_raw(13442814);
/// Wikimedia disambiguation page.
pub const DISAMBIGUATION_PAGE: EntityId = EntityId::from_raw(4167410);

/// Which nodes do not count as meaningful classes.
///
/// `abstract_class_ids` only relaxes the instance/class rules; nodes in
/// `technical_node_ids` are additionally removed as parents by cleaning.
/// Both sets are treated as non-meaningful by the anti-pattern rules.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct MetaclassPolicy {
    abstract_class_ids: BTreeSet<EntityId>,
    technical_node_ids: BTreeSet<EntityId>,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("{0} is listed both as an abstract class and as a technical node")]
pub struct OverlappingPolicy(pub EntityId);

impl MetaclassPolicy {
    pub fn new(
        abstract_class_ids: impl IntoIterator<Item = EntityId>,
        technical_node_ids: impl IntoIterator<Item = EntityId>,
    ) -> Result<Self, OverlappingPolicy> {
        let abstract_class_ids: BTreeSet<_> = abstract_class_ids.into_iter().collect();
        let technical_node_ids: BTreeSet<_> = technical_node_ids.into_iter().collect();
        if let Some(&id) = abstract_class_ids.intersection(&technical_node_ids).next() {
            return Err(OverlappingPolicy(id));
        }
        Ok(Self {
            abstract_class_ids,
            technical_node_ids,
        })
    }

    /// No exemptions and no exclusions.
    pub fn empty() -> Self {
        Self {
            abstract_class_ids: BTreeSet::new(),
            technical_node_ids: BTreeSet::new(),
        }
    }

    pub fn abstract_class_ids(&self) -> &BTreeSet<EntityId> {
        &self.abstract_class_ids
    }

    pub fn technical_node_ids(&self) -> &BTreeSet<EntityId> {
        &self.technical_node_ids
    }

    pub fn is_technical(&self, id: EntityId) -> bool {
        self.technical_node_ids.contains(&id)
    }

    /// True for parents whose P31 links carry no instance-role evidence.
    pub fn is_metaclass(&self, id: EntityId) -> bool {
        self.abstract_class_ids.contains(&id) || self.technical_node_ids.contains(&id)
    }
}

impl Default for MetaclassPolicy {
    fn default() -> Self {
        Self {
            abstract_class_ids: BTreeSet::new(),
            technical_node_ids: [CLASS, WIKIMEDIA_CATEGORY, DISAMBIGUATION_PAGE]
                .into_iter()
                .collect(),
        }
    }
}
