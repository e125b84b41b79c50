use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::path::Path;

use serde::Serialize;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Locale {
    En,
    Zh,
    Ja,
}

impl Locale {
    pub const ALL: [Locale; 3] = [Locale::En, Locale::Zh, Locale::Ja];

    pub fn code(self) -> &'static str {
        match self {
            Locale::En => "en",
            Locale::Zh => "zh",
            Locale::Ja => "ja",
        }
    }

    pub fn parse(code: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|l| l.code() == code)
    }

    /// Unknown codes fall back to English.
    pub fn or_english(code: &str) -> Self {
        Self::parse(code).unwrap_or(Locale::En)
    }
}

impl fmt::Display for Locale {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.code())
    }
}

#[derive(Debug, thiserror::Error)]
pub enum CatalogError {
    #[error("catalog {0}: {1}")]
    Parse(Locale, String),
    #[error("catalog {locale} differs from en: missing {missing:?}, extra {extra:?}")]
    KeyMismatch {
        locale: Locale,
        missing: Vec<String>,
        extra: Vec<String>,
    },
}

/// Message tables for every supported locale, with identical key sets.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Catalogs {
    tables: BTreeMap<Locale, BTreeMap<String, String>>,
}

const BUILTIN: [(Locale, &str); 3] = [
    (Locale::En, include_str!("../../locales/en.json")),
    (Locale::Zh, include_str!("../../locales/zh.json")),
    (Locale::Ja, include_str!("../../locales/ja.json")),
];

impl Catalogs {
    pub fn builtin() -> Self {
        Self::from_sources(BUILTIN.iter().map(|&(l, s)| (l, s.to_owned())))
            .expect("bundled catalogs are valid")
    }

    /// Reads `en.json`, `zh.json` and `ja.json` from `dir`.
    pub fn load_dir(dir: &Path) -> Result<Self, CatalogError> {
        let mut sources = Vec::new();
        for locale in Locale::ALL {
            let path = dir.join(format!("{}.json", locale.code()));
            let text = std::fs::read_to_string(&path)
                .map_err(|e| CatalogError::Parse(locale, format!("{}: {e}", path.display())))?;
            sources.push((locale, text));
        }
        Self::from_sources(sources)
    }

    pub fn from_sources(sources: impl IntoIterator<Item = (Locale, String)>) -> Result<Self, CatalogError> {
        let mut tables = BTreeMap::new();
        for (locale, text) in sources {
            let table: BTreeMap<String, String> =
                serde_json::from_str(&text).map_err(|e| CatalogError::Parse(locale, e.to_string()))?;
            tables.insert(locale, table);
        }
        let english: BTreeSet<&String> = tables
            .get(&Locale::En)
            .ok_or_else(|| CatalogError::Parse(Locale::En, "missing".into()))?
            .keys()
            .collect();
        for locale in Locale::ALL {
            let keys: BTreeSet<&String> = tables
                .get(&locale)
                .ok_or_else(|| CatalogError::Parse(locale, "missing".into()))?
                .keys()
                .collect();
            if keys != english {
                return Err(CatalogError::KeyMismatch {
                    locale,
                    missing: english.difference(&keys).map(|s| s.to_string()).collect(),
                    extra: keys.difference(&english).map(|s| s.to_string()).collect(),
                });
            }
        }
        Ok(Self { tables })
    }

    pub fn table(&self, locale: Locale) -> &BTreeMap<String, String> {
        &self.tables[&locale]
    }

    /// Looks up `key`, falling back to English and then to the key itself.
    pub fn get<'a>(&'a self, locale: Locale, key: &'a str) -> &'a str {
        self.tables[&locale]
            .get(key)
            .or_else(|| self.tables[&Locale::En].get(key))
            .map(String::as_str)
            .unwrap_or(key)
    }
}
