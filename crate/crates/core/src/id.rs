use std::fmt;
use std::num::NonZeroU64;
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::ParseIdError;

/// A Wikidata item identifier, the `N` in `QN`.
///
/// The textual form is canonical: `Q` followed by a decimal number without
/// leading zeros, so `parse` and `Display` round-trip exactly.
#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct EntityId(NonZeroU64);

impl EntityId {
    pub fn new(numeric: u64) -> Option<Self> {
        NonZeroU64::new(numeric).map(Self)
    }

    /// Panics on zero. Intended for literals in tests and fixtures.
    pub const fn from_raw(numeric: u64) -> Self {
        match NonZeroU64::new(numeric) {
            Some(n) => Self(n),
            None => panic!("entity ids start at Q1"),
        }
    }

    pub fn get(self) -> u64 {
        self.0.get()
    }
}

impl fmt::Display for EntityId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Q{}", self.0)
    }
}

impl fmt::Debug for EntityId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(self, f)
    }
}

impl FromStr for EntityId {
    type Err = ParseIdError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let digits = s
            .strip_prefix('Q')
            .ok_or_else(|| ParseIdError(s.to_owned()))?;
        if digits.is_empty()
            || digits.starts_with('0')
            || !digits.bytes().all(|b| b.is_ascii_digit())
        {
            return Err(ParseIdError(s.to_owned()));
        }
        digits
            .parse::<u64>()
            .ok()
            .and_then(EntityId::new)
            .ok_or_else(|| ParseIdError(s.to_owned()))
    }
}

impl Serialize for EntityId {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for EntityId {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let s = std::borrow::Cow::<str>::deserialize(deserializer)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// The two taxonomic properties the engine understands.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum EdgeKind {
    /// P31
    InstanceOf,
    /// P279
    SubclassOf,
}

impl EdgeKind {
    pub const ALL: [EdgeKind; 2] = [EdgeKind::InstanceOf, EdgeKind::SubclassOf];

    pub fn property(self) -> &'static str {
        match self {
            EdgeKind::InstanceOf => "P31",
            EdgeKind::SubclassOf => "P279",
        }
    }

    pub fn from_property(s: &str) -> Option<Self> {
        match s {
            "P31" => Some(EdgeKind::InstanceOf),
            "P279" => Some(EdgeKind::SubclassOf),
            _ => None,
        }
    }
}

impl fmt::Display for EdgeKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.property())
    }
}
