//! Single-entity fetches against a `wbgetentities` endpoint, with an on-disk
//! response cache and client-side request spacing.

use std::fs;
use std::path::PathBuf;
use std::sync::Mutex;
use std::time::{Duration, Instant};

use serde::Deserialize;

use crate::error::LiveError;
use crate::id::EntityId;

use super::dump::{DumpEntity, RawEntity};

pub const WIKIDATA_API: &str = "https://www.wikidata.org/w/api.php";

/// Setting this variable to `1` disables every network call.
pub const OFFLINE_ENV: &str = "TAXOLINT_OFFLINE";

#[derive(Clone, Debug)]
pub struct LiveConfig {
    pub endpoint: String,
    pub cache_dir: Option<PathBuf>,
    pub language: String,
    pub min_interval: Duration,
    pub timeout: Duration,
    /// Defaults to the value of `TAXOLINT_OFFLINE`.
    pub offline: bool,
}

impl Default for LiveConfig {
    fn default() -> Self {
        Self {
            endpoint: WIKIDATA_API.to_owned(),
            cache_dir: None,
            language: "en".to_owned(),
            min_interval: Duration::from_secs(1),
            timeout: Duration::from_secs(30),
            offline: offline(),
        }
    }
}

pub struct LiveClient {
    config: LiveConfig,
    agent: ureq::Agent,
    last_request: Mutex<Option<Instant>>,
}

#[derive(Deserialize)]
struct ApiError {
    code: String,
    #[serde(default)]
    info: String,
}

pub fn offline() -> bool {
    std::env::var(OFFLINE_ENV).is_ok_and(|v| v == "1")
}

impl LiveClient {
    pub fn new(config: LiveConfig) -> Self {
        let agent = ureq::Agent::config_builder()
            .timeout_global(Some(config.timeout))
            .http_status_as_error(false)
            .user_agent("taxolint/0.1 (taxonomy consistency checks)")
            .build()
            .into();
        Self {
            config,
            agent,
            last_request: Mutex::new(None),
        }
    }

    pub fn config(&self) -> &LiveConfig {
        &self.config
    }

    /// Fetches `qid`, serving from the disk cache when a response is present.
    pub fn fetch(&self, qid: EntityId) -> Result<DumpEntity, LiveError> {
        if let Some(body) = self.cached(qid)? {
            return self.decode(qid, &body);
        }
        if self.config.offline {
            return Err(LiveError::Network(format!("{OFFLINE_ENV}=1, refusing to fetch {qid}")));
        }
        let body = self.request(qid)?;
        let entity = self.decode(qid, &body)?;
        self.store(qid, &body)?;
        Ok(entity)
    }

    fn request(&self, qid: EntityId) -> Result<String, LiveError> {
        {
            let mut last = self.last_request.lock().expect("rate limiter poisoned");
            if let Some(at) = *last {
                let elapsed = at.elapsed();
                if elapsed < self.config.min_interval {
                    std::thread::sleep(self.config.min_interval - elapsed);
                }
            }
            *last = Some(Instant::now());
        }
        let ids = qid.to_string();
        let mut resp = self
            .agent
            .get(&self.config.endpoint)
            .query("action", "wbgetentities")
            .query("ids", &ids)
            .query("props", "claims|labels|descriptions")
            .query("format", "json")
            .call()
            .map_err(|e| LiveError::Network(e.to_string()))?;
        let status = resp.status().as_u16();
        if status == 429 {
            return Err(LiveError::RateLimited);
        }
        let body = resp
            .body_mut()
            .read_to_string()
            .map_err(|e| LiveError::Network(e.to_string()))?;
        if !(200..300).contains(&status) {
            return Err(LiveError::BadResponse(format!("HTTP {status}")));
        }
        Ok(body)
    }

    fn decode(&self, qid: EntityId, body: &str) -> Result<DumpEntity, LiveError> {
        let value: serde_json::Value =
            serde_json::from_str(body).map_err(|e| LiveError::BadResponse(e.to_string()))?;
        if let Some(err) = value.get("error") {
            let err: ApiError = serde_json::from_value(err.clone())
                .map_err(|e| LiveError::BadResponse(e.to_string()))?;
            return match err.code.as_str() {
                "no-such-entity" => Err(LiveError::UnknownQid(qid)),
                "maxlag" | "ratelimited" => Err(LiveError::RateLimited),
                _ => Err(LiveError::BadResponse(format!("{}: {}", err.code, err.info))),
            };
        }
        let key = qid.to_string();
        let entity = value
            .get("entities")
            .and_then(|e| e.get(&key))
            .ok_or_else(|| LiveError::BadResponse(format!("no entry for {key}")))?;
        if entity.get("missing").is_some() {
            return Err(LiveError::UnknownQid(qid));
        }
        let raw = RawEntity::deserialize(entity).map_err(|e| LiveError::BadResponse(e.to_string()))?;
        raw.into_entity(&self.config.language, 0)
            .map_err(|e| LiveError::BadResponse(e.to_string()))?
            .ok_or_else(|| LiveError::BadResponse(format!("{key} is not an item")))
    }

    /// Most recent cached body for `qid`, if any.
    fn cached(&self, qid: EntityId) -> Result<Option<String>, LiveError> {
        let Some(dir) = &self.config.cache_dir else {
            return Ok(None);
        };
        let prefix = format!("{qid}-");
        let newest = match fs::read_dir(dir) {
            Ok(entries) => entries
                .filter_map(Result::ok)
                .filter_map(|e| e.file_name().into_string().ok())
                .filter(|name| name.starts_with(&prefix) && name.ends_with(".json"))
                .max(),
            Err(err) if err.kind() == std::io::ErrorKind::NotFound => None,
            Err(err) => return Err(err.into()),
        };
        newest
            .map(|name| fs::read_to_string(dir.join(name)))
            .transpose()
            .map_err(Into::into)
    }

    fn store(&self, qid: EntityId, body: &str) -> Result<(), LiveError> {
        let Some(dir) = &self.config.cache_dir else {
            return Ok(());
        };
        fs::create_dir_all(dir)?;
        let date = chrono::Local::now().format("%Y-%m-%d");
        let path = dir.join(format!("{qid}-{date}.json"));
        let tmp = path.with_extension("json.tmp");
        fs::write(&tmp, body)?;
        fs::rename(tmp, path)?;
        Ok(())
    }
}
