//! Text embedding: the provider contract, the two shipped providers and the
//! persistent vector cache.

use std::collections::HashMap;
use std::fs::{File, OpenOptions};
use std::io::{BufReader, BufWriter, ErrorKind, Read, Write};
use std::path::{Path, PathBuf};
use std::sync::{Arc, Mutex, RwLock};
use std::time::Duration;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::EmbedError;
use crate::ingest::{offline, OFFLINE_ENV};
use crate::text::EntityText;

/// Model identifier of the reference sentence encoder.
pub const REFERENCE_MODEL: &str = "sentence-transformers/all-mpnet-base-v2";
pub const DEFAULT_DIMENSION: usize = 768;

/// A unit-length embedding.
#[derive(Clone, Debug, PartialEq)]
pub struct Embedding(Arc<[f32]>);

impl Embedding {
    /// Normalizes `v` to unit length. `None` for zero or non-finite input.
    pub fn normalized(v: Vec<f64>) -> Option<Self> {
        let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        if norm == 0.0 || !norm.is_finite() {
            return None;
        }
        Some(Self(v.iter().map(|x| (x / norm) as f32).collect()))
    }

    fn from_stored(v: Vec<f32>) -> Self {
        Self(v.into())
    }

    pub fn as_slice(&self) -> &[f32] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn norm(&self) -> f64 {
        self.0.iter().map(|&x| (x as f64).powi(2)).sum::<f64>().sqrt()
    }

    pub fn cosine(&self, other: &Embedding) -> f64 {
        let a: Vec<f64> = self.0.iter().map(|&x| x as f64).collect();
        let b: Vec<f64> = other.0.iter().map(|&x| x as f64).collect();
        super::math::cosine(&a, &b).unwrap_or(0.0)
    }
}

/// Turns text into unit vectors. Implementations must be deterministic for a
/// fixed identity, and batch calls must agree with single calls.
pub trait EmbeddingProvider: Send + Sync {
    fn dimension(&self) -> usize;

    /// Provider name plus model identifier; part of every cache key.
    fn identity(&self) -> String;

    fn embed_batch(&self, texts: &[String]) -> Result<Vec<Embedding>, EmbedError>;

    fn embed_one(&self, text: &str) -> Result<Embedding, EmbedError> {
        self.embed_batch(&[text.to_owned()])?
            .pop()
            .ok_or_else(|| EmbedError::ProviderUnavailable("empty response".into()))
    }
}

/// Offline provider: every token maps to a pseudo-random Gaussian unit vector
/// seeded by its SHA-256; a text is the normalized sum of its tokens.
#[derive(Clone, Debug)]
pub struct HashingProvider {
    dimension: usize,
}

impl HashingProvider {
    pub fn new(dimension: usize) -> Self {
        assert!(dimension > 0, "embedding dimension must be positive");
        Self { dimension }
    }

    fn tokens(text: &str) -> Vec<String> {
        let tokens: Vec<String> = text
            .split(|c: char| !c.is_alphanumeric())
            .filter(|t| !t.is_empty())
            .map(str::to_lowercase)
            .collect();
        if tokens.is_empty() && !text.trim().is_empty() {
            return vec![text.trim().to_owned()];
        }
        tokens
    }

    fn token_vector(&self, token: &str, acc: &mut [f64]) {
        let seed: [u8; 32] = Sha256::digest(token.as_bytes()).into();
        let mut rng = ChaCha8Rng::from_seed(seed);
        let v: Vec<f64> = (0..self.dimension).map(|_| StandardNormal.sample(&mut rng)).collect();
        let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        for (a, x) in acc.iter_mut().zip(v) {
            *a += x / norm;
        }
    }

    fn embed_text(&self, text: &str) -> Result<Embedding, EmbedError> {
        let tokens = Self::tokens(text);
        if tokens.is_empty() {
            return Err(EmbedError::EmptyText);
        }
        let mut acc = vec![0.0f64; self.dimension];
        for t in &tokens {
            self.token_vector(t, &mut acc);
        }
        // Opposite token vectors cannot cancel exactly in practice; fall back
        // to the first token if they ever do.
        Embedding::normalized(acc).map_or_else(
            || {
                let mut acc = vec![0.0f64; self.dimension];
                self.token_vector(&tokens[0], &mut acc);
                Embedding::normalized(acc).ok_or(EmbedError::EmptyText)
            },
            Ok,
        )
    }
}

impl Default for HashingProvider {
    fn default() -> Self {
        Self::new(DEFAULT_DIMENSION)
    }
}

impl EmbeddingProvider for HashingProvider {
    fn dimension(&self) -> usize {
        self.dimension
    }

    fn identity(&self) -> String {
        format!("offline:token-hash-v1:{}", self.dimension)
    }

    fn embed_batch(&self, texts: &[String]) -> Result<Vec<Embedding>, EmbedError> {
        texts.iter().map(|t| self.embed_text(t)).collect()
    }
}

#[derive(Serialize)]
struct EmbedRequest<'a> {
    texts: &'a [String],
}

#[derive(Deserialize)]
struct EmbedResponse {
    vectors: Vec<Vec<f64>>,
}

/// Posts `{"texts": [...]}` to `{endpoint}/embed` and expects
/// `{"vectors": [[...], ...]}` back.
pub struct RemoteProvider {
    endpoint: String,
    model: String,
    dimension: usize,
    agent: ureq::Agent,
}

impl RemoteProvider {
    pub fn new(endpoint: &str, model: &str, dimension: usize) -> Self {
        let agent = ureq::Agent::config_builder()
            .timeout_global(Some(Duration::from_secs(120)))
            .http_status_as_error(false)
            .build()
            .into();
        Self {
            endpoint: endpoint.trim_end_matches('/').to_owned(),
            model: model.to_owned(),
            dimension,
            agent,
        }
    }
}

impl EmbeddingProvider for RemoteProvider {
    fn dimension(&self) -> usize {
        self.dimension
    }

    fn identity(&self) -> String {
        format!("remote:{}:{}", self.model, self.dimension)
    }

    fn embed_batch(&self, texts: &[String]) -> Result<Vec<Embedding>, EmbedError> {
        if offline() {
            return Err(EmbedError::ProviderUnavailable(format!("{OFFLINE_ENV}=1")));
        }
        if texts.iter().any(|t| t.trim().is_empty()) {
            return Err(EmbedError::EmptyText);
        }
        let unavailable = |e: &dyn std::fmt::Display| EmbedError::ProviderUnavailable(e.to_string());
        let mut resp = self
            .agent
            .post(&format!("{}/embed", self.endpoint))
            .send_json(EmbedRequest { texts })
            .map_err(|e| unavailable(&e))?;
        let status = resp.status().as_u16();
        if status != 200 {
            return Err(EmbedError::ProviderUnavailable(format!("HTTP {status}")));
        }
        let body: EmbedResponse = resp.body_mut().read_json().map_err(|e| unavailable(&e))?;
        if body.vectors.len() != texts.len() {
            return Err(EmbedError::ProviderUnavailable(format!(
                "asked for {} vectors, got {}",
                texts.len(),
                body.vectors.len()
            )));
        }
        body.vectors
            .into_iter()
            .map(|v| {
                if v.len() != self.dimension {
                    return Err(EmbedError::DimensionMismatch {
                        expected: self.dimension,
                        got: v.len(),
                    });
                }
                Embedding::normalized(v).ok_or_else(|| EmbedError::ProviderUnavailable("zero vector".into()))
            })
            .collect()
    }
}

pub type ContentHash = [u8; 32];

pub fn content_hash(identity: &str, input: &str) -> ContentHash {
    let mut h = Sha256::new();
    h.update(identity.as_bytes());
    h.update([0u8]);
    h.update(input.as_bytes());
    h.finalize().into()
}

const CACHE_MAGIC: &[u8; 4] = b"EMBC";

/// Append-only vector cache: `EMBC`, u32 LE dimension, then records of a
/// 32-byte content hash and `dimension` little-endian f32 values.
pub struct EmbeddingCache {
    path: PathBuf,
    dimension: usize,
    entries: RwLock<HashMap<ContentHash, Embedding>>,
    writer: Mutex<BufWriter<File>>,
}

impl EmbeddingCache {
    /// Opens (or creates) the cache at `path`. A trailing partial record is
    /// ignored and overwritten by the next append.
    pub fn open(path: &Path, dimension: usize) -> Result<Self, EmbedError> {
        let mut entries = HashMap::new();
        let mut valid_len = 8u64;
        match File::open(path) {
            Ok(file) => {
                let mut r = BufReader::new(file);
                let mut header = [0u8; 8];
                r.read_exact(&mut header)
                    .map_err(|e| EmbedError::Cache(format!("{}: {e}", path.display())))?;
                if &header[..4] != CACHE_MAGIC {
                    return Err(EmbedError::Cache(format!("{}: bad magic", path.display())));
                }
                let stored = u32::from_le_bytes(header[4..8].try_into().expect("4 bytes")) as usize;
                if stored != dimension {
                    return Err(EmbedError::DimensionMismatch {
                        expected: dimension,
                        got: stored,
                    });
                }
                let mut record = vec![0u8; 32 + 4 * dimension];
                loop {
                    match r.read_exact(&mut record) {
                        Ok(()) => {}
                        Err(e) if e.kind() == ErrorKind::UnexpectedEof => break,
                        Err(e) => return Err(e.into()),
                    }
                    let hash: ContentHash = record[..32].try_into().expect("32 bytes");
                    let v: Vec<f32> = record[32..]
                        .chunks_exact(4)
                        .map(|b| f32::from_le_bytes(b.try_into().expect("4 bytes")))
                        .collect();
                    entries.insert(hash, Embedding::from_stored(v));
                    valid_len += record.len() as u64;
                }
            }
            Err(e) if e.kind() == ErrorKind::NotFound => {
                if let Some(dir) = path.parent() {
                    std::fs::create_dir_all(dir)?;
                }
                let mut f = File::create(path)?;
                f.write_all(CACHE_MAGIC)?;
                f.write_all(&(dimension as u32).to_le_bytes())?;
                f.sync_all()?;
            }
            Err(e) => return Err(e.into()),
        }
        let file = OpenOptions::new().write(true).open(path)?;
        file.set_len(valid_len)?;
        let mut writer = BufWriter::new(file);
        std::io::Seek::seek(&mut writer, std::io::SeekFrom::End(0))?;
        Ok(Self {
            path: path.to_owned(),
            dimension,
            entries: RwLock::new(entries),
            writer: Mutex::new(writer),
        })
    }

    pub fn path(&self) -> &Path {
        &self.path
    }

    pub fn len(&self) -> usize {
        self.entries.read().expect("cache lock").len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn get(&self, hash: &ContentHash) -> Option<Embedding> {
        self.entries.read().expect("cache lock").get(hash).cloned()
    }

    pub fn insert(&self, hash: ContentHash, v: &Embedding) -> Result<(), EmbedError> {
        if v.len() != self.dimension {
            return Err(EmbedError::DimensionMismatch {
                expected: self.dimension,
                got: v.len(),
            });
        }
        {
            let mut entries = self.entries.write().expect("cache lock");
            if entries.contains_key(&hash) {
                return Ok(());
            }
            entries.insert(hash, v.clone());
        }
        let mut w = self.writer.lock().expect("cache writer lock");
        w.write_all(&hash)?;
        for x in v.as_slice() {
            w.write_all(&x.to_le_bytes())?;
        }
        Ok(())
    }

    pub fn flush(&self) -> Result<(), EmbedError> {
        self.writer.lock().expect("cache writer lock").flush()?;
        Ok(())
    }
}

impl Drop for EmbeddingCache {
    fn drop(&mut self) {
        if let Ok(mut w) = self.writer.lock() {
            let _ = w.flush();
        }
    }
}

/// A provider with an optional persistent cache in front of it.
pub struct Embedder {
    provider: Arc<dyn EmbeddingProvider>,
    cache: Option<EmbeddingCache>,
    batch_size: usize,
}

impl Embedder {
    pub fn new(provider: Arc<dyn EmbeddingProvider>, cache: Option<EmbeddingCache>) -> Self {
        Self {
            provider,
            cache,
            batch_size: 64,
        }
    }

    pub fn with_batch_size(mut self, batch_size: usize) -> Self {
        self.batch_size = batch_size.max(1);
        self
    }

    pub fn provider(&self) -> &dyn EmbeddingProvider {
        self.provider.as_ref()
    }

    pub fn cache(&self) -> Option<&EmbeddingCache> {
        self.cache.as_ref()
    }

    pub fn embed(&self, text: &EntityText) -> Result<Embedding, EmbedError> {
        self.embed_many(std::slice::from_ref(text)).pop().expect("one result per input")
    }

    /// One result per input, in order. Uncached inputs are sent to the
    /// provider in batches, several batches at a time.
    pub fn embed_many(&self, texts: &[EntityText]) -> Vec<Result<Embedding, EmbedError>> {
        let identity = self.provider.identity();
        let inputs: Vec<String> = texts.iter().map(EntityText::embedding_input).collect();
        let mut results: Vec<Option<Result<Embedding, EmbedError>>> = Vec::with_capacity(texts.len());
        let mut pending: Vec<(usize, ContentHash)> = Vec::new();
        let mut seen: HashMap<ContentHash, usize> = HashMap::new();
        for (i, input) in inputs.iter().enumerate() {
            if input.trim().is_empty() {
                results.push(Some(Err(EmbedError::EmptyText)));
                continue;
            }
            let hash = content_hash(&identity, input);
            match self.cache.as_ref().and_then(|c| c.get(&hash)) {
                Some(v) => results.push(Some(Ok(v))),
                None => {
                    results.push(None);
                    if let std::collections::hash_map::Entry::Vacant(e) = seen.entry(hash) {
                        e.insert(pending.len());
                        pending.push((i, hash));
                    }
                }
            }
        }

        let computed: Vec<Result<Embedding, String>> = pending
            .par_chunks(self.batch_size)
            .flat_map_iter(|chunk| {
                let batch: Vec<String> = chunk.iter().map(|&(i, _)| inputs[i].clone()).collect();
                match self.provider.embed_batch(&batch) {
                    Ok(vs) => vs.into_iter().map(Ok).collect::<Vec<_>>(),
                    Err(e) => vec![Err(e.to_string()); chunk.len()],
                }
            })
            .collect();

        for (&(_, hash), v) in pending.iter().zip(&computed) {
            if let (Ok(v), Some(cache)) = (v, &self.cache) {
                if let Err(e) = cache.insert(hash, v) {
                    log::warn!("embedding cache append failed: {e}");
                }
            }
        }
        if let Some(cache) = &self.cache {
            if let Err(e) = cache.flush() {
                log::warn!("embedding cache flush failed: {e}");
            }
        }

        results
            .into_iter()
            .zip(&inputs)
            .map(|(slot, input)| {
                slot.unwrap_or_else(|| {
                    let hash = content_hash(&identity, input);
                    match &computed[seen[&hash]] {
                        Ok(v) => Ok(v.clone()),
                        Err(msg) if msg == &EmbedError::EmptyText.to_string() => Err(EmbedError::EmptyText),
                        Err(msg) => Err(EmbedError::ProviderUnavailable(msg.clone())),
                    }
                })
            })
            .collect()
    }
}
