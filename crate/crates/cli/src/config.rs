//! Pipeline configuration: a flat TOML document whose keys mirror
//! [`PipelineConfig`]. Command-line flags override file values.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use taxolint_core::drift::{DEFAULT_DIMENSION, DEFAULT_THRESHOLD, REFERENCE_MODEL};
use taxolint_core::ingest::WIKIDATA_API;
use taxolint_core::policy::MetaclassPolicy;
use taxolint_core::risk::{ParentScope, RiskConfig, RiskWeights, DEFAULT_ROOT, REFERENCE_P279, REFERENCE_P31};
use taxolint_core::EntityId;

use crate::error::{CliError, CliResult};

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum ProviderKind {
    #[default]
    Offline,
    Remote,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PipelineConfig {
    pub triples: Vec<PathBuf>,
    pub dump: Option<PathBuf>,
    pub texts: Option<PathBuf>,
    pub language: String,
    /// TOML file with `abstract_class_ids` and `technical_node_ids` arrays.
    pub policy: Option<PathBuf>,
    pub out_dir: PathBuf,

    pub weight_connection: f64,
    pub weight_coherence: f64,
    pub weight_depth_variance: f64,
    pub weight_alignment: f64,
    pub d_max: u32,
    pub link_divisor: f64,
    pub variance_divisor: f64,
    pub reference_p31: f64,
    pub reference_p279: f64,
    pub root: EntityId,
    pub parent_scope: ParentScope,

    pub max_paths: usize,
    pub drift_threshold: f64,
    pub provider: ProviderKind,
    pub endpoint: Option<String>,
    pub model: String,
    pub dimension: usize,
    pub embedding_cache: Option<PathBuf>,
    pub locale: String,
    pub jobs: Option<usize>,
    pub max_scan_jobs: usize,
    pub live_fetch: bool,
    pub wikidata_endpoint: String,
    /// Static console bundle served at `/`.
    pub console_dir: Option<PathBuf>,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        let w = RiskWeights::default();
        Self {
            triples: Vec::new(),
            dump: None,
            texts: None,
            language: "en".into(),
            policy: None,
            out_dir: PathBuf::from("taxolint-out"),
            weight_connection: w.connection,
            weight_coherence: w.coherence,
            weight_depth_variance: w.depth_variance,
            weight_alignment: w.alignment,
            d_max: 10,
            link_divisor: 5.0,
            variance_divisor: 9.0,
            reference_p31: REFERENCE_P31,
            reference_p279: REFERENCE_P279,
            root: DEFAULT_ROOT,
            parent_scope: ParentScope::Union,
            max_paths: 5,
            drift_threshold: DEFAULT_THRESHOLD,
            provider: ProviderKind::Offline,
            endpoint: None,
            model: REFERENCE_MODEL.into(),
            dimension: DEFAULT_DIMENSION,
            embedding_cache: None,
            locale: "en".into(),
            jobs: None,
            max_scan_jobs: 2,
            live_fetch: false,
            wikidata_endpoint: WIKIDATA_API.into(),
            console_dir: None,
        }
    }
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct PolicyFile {
    #[serde(default)]
    abstract_class_ids: Vec<EntityId>,
    #[serde(default)]
    technical_node_ids: Vec<EntityId>,
}

impl PipelineConfig {
    pub fn from_toml(text: &str) -> CliResult<Self> {
        toml::from_str(text).map_err(|e| CliError::input(format!("config: {e}")))
    }

    pub fn load(path: &Path) -> CliResult<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::input(format!("{}: {e}", path.display())))?;
        Self::from_toml(&text)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    pub fn risk_config(&self) -> RiskConfig {
        RiskConfig {
            d_max: self.d_max,
            link_divisor: self.link_divisor,
            variance_divisor: self.variance_divisor,
            reference_p31: self.reference_p31,
            reference_p279: self.reference_p279,
            root: self.root,
            parent_scope: self.parent_scope,
        }
    }

    pub fn weights(&self) -> CliResult<RiskWeights> {
        RiskWeights::new(
            self.weight_connection,
            self.weight_coherence,
            self.weight_depth_variance,
            self.weight_alignment,
        )
        .map_err(|e| CliError::input(e.to_string()))
    }

    /// The configured policy, or the built-in default.
    pub fn policy(&self) -> CliResult<MetaclassPolicy> {
        let Some(path) = &self.policy else {
            return Ok(MetaclassPolicy::default());
        };
        let text = std::fs::read_to_string(path).map_err(|e| CliError::input(format!("{}: {e}", path.display())))?;
        let file: PolicyFile =
            toml::from_str(&text).map_err(|e| CliError::input(format!("{}: {e}", path.display())))?;
        MetaclassPolicy::new(file.abstract_class_ids, file.technical_node_ids)
            .map_err(|e| CliError::input(format!("{}: {e}", path.display())))
    }
}
