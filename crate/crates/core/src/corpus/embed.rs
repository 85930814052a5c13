use std::collections::{BTreeMap, HashMap};
use std::fs::{self, OpenOptions};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::{Arc, Mutex};
use std::thread;
use std::time::{Duration, Instant};

use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::text::{read_jsonl_lines, ChunkSet, TokenSpan};
use crate::error::{Error, Result};
use crate::geometry::Vector;
use crate::rng::{derive_seed, rng_from_seed};

pub const DEFAULT_MOCK_DIMENSION: usize = 768;

/// Batch text-to-vector client.
pub trait Embedder: Send + Sync {
    /// Identifies the model; stored with every record and in cache keys.
    fn model_tag(&self) -> String;

    fn embed_batch(&self, texts: &[&str]) -> Result<Vec<Vec<f64>>>;

    fn batch_size(&self) -> usize {
        64
    }

    /// Upper bound on batches in flight at once.
    fn max_concurrency(&self) -> usize {
        1
    }
}

impl<E: Embedder + ?Sized> Embedder for Box<E> {
    fn model_tag(&self) -> String {
        (**self).model_tag()
    }

    fn embed_batch(&self, texts: &[&str]) -> Result<Vec<Vec<f64>>> {
        (**self).embed_batch(texts)
    }

    fn batch_size(&self) -> usize {
        (**self).batch_size()
    }

    fn max_concurrency(&self) -> usize {
        (**self).max_concurrency()
    }
}

/// Offline embedder: each distinct normalized token maps to a seeded
/// Gaussian direction, and a text embeds as the count-weighted sum of its
/// token directions.
#[derive(Debug)]
pub struct MockEmbedder {
    dimension: usize,
    seed: u64,
    memo: Mutex<HashMap<String, Arc<Vec<f64>>>>,
}

impl MockEmbedder {
    pub fn new(dimension: usize, seed: u64) -> Result<Self> {
        if dimension < 2 {
            return Err(Error::invalid("mock embedding dimension must be at least 2"));
        }
        Ok(Self {
            dimension,
            seed,
            memo: Mutex::new(HashMap::new()),
        })
    }

    pub fn dimension(&self) -> usize {
        self.dimension
    }

    fn token_vector(&self, token: &str) -> Arc<Vec<f64>> {
        if let Some(v) = self.memo.lock().expect("memo lock").get(token) {
            return Arc::clone(v);
        }
        let digest = Sha256::digest(token.as_bytes());
        let mut head = [0u8; 8];
        head.copy_from_slice(&digest[..8]);
        let mut rng = rng_from_seed(derive_seed(self.seed, u64::from_le_bytes(head)));
        let scale = 1.0 / (self.dimension as f64).sqrt();
        let v: Arc<Vec<f64>> = Arc::new(
            (0..self.dimension)
                .map(|_| {
                    let z: f64 = StandardNormal.sample(&mut rng);
                    scale * z
                })
                .collect(),
        );
        self.memo
            .lock()
            .expect("memo lock")
            .insert(token.to_owned(), Arc::clone(&v));
        v
    }

    fn embed_one(&self, text: &str) -> Result<Vec<f64>> {
        let mut counts: BTreeMap<String, usize> = BTreeMap::new();
        for raw in text.split_whitespace() {
            let token = normalize_token(raw);
            if !token.is_empty() {
                *counts.entry(token).or_default() += 1;
            }
        }
        if counts.is_empty() {
            return Err(Error::Embedder("text has no embeddable tokens".into()));
        }
        let mut sum = vec![0.0; self.dimension];
        // BTreeMap order fixes the summation order
        for (token, count) in &counts {
            let v = self.token_vector(token);
            let c = *count as f64;
            for (s, x) in sum.iter_mut().zip(v.iter()) {
                *s += c * x;
            }
        }
        Ok(Vector::new(sum)?.normalize()?.into_inner())
    }
}

fn normalize_token(raw: &str) -> String {
    raw.trim_matches(|c: char| !c.is_alphanumeric()).to_lowercase()
}

impl Embedder for MockEmbedder {
    fn model_tag(&self) -> String {
        format!("mock-bow-d{}-s{}", self.dimension, self.seed)
    }

    fn embed_batch(&self, texts: &[&str]) -> Result<Vec<Vec<f64>>> {
        texts.iter().map(|t| self.embed_one(t)).collect()
    }
}

/// Settings of an OpenAI-compatible `/embeddings` endpoint.
#[derive(Clone, Debug, PartialEq)]
pub struct ServiceConfig {
    pub endpoint: String,
    pub api_key: Option<String>,
    pub model: String,
    pub batch_size: usize,
    pub concurrency: usize,
    pub max_retries: u32,
    pub backoff: Duration,
    /// Minimum spacing between request starts.
    pub min_interval: Duration,
    pub timeout: Duration,
}

impl ServiceConfig {
    pub const ENV_URL: &'static str = "SEMTOPO_EMBED_URL";
    pub const ENV_KEY: &'static str = "SEMTOPO_EMBED_KEY";
    pub const ENV_MODEL: &'static str = "SEMTOPO_EMBED_MODEL";
    pub const ENV_BATCH: &'static str = "SEMTOPO_EMBED_BATCH";
    pub const ENV_CONCURRENCY: &'static str = "SEMTOPO_EMBED_CONCURRENCY";
    pub const ENV_RETRIES: &'static str = "SEMTOPO_EMBED_RETRIES";
    pub const ENV_MIN_INTERVAL_MS: &'static str = "SEMTOPO_EMBED_MIN_INTERVAL_MS";

    pub fn new(endpoint: impl Into<String>, model: impl Into<String>) -> Self {
        Self {
            endpoint: endpoint.into(),
            api_key: None,
            model: model.into(),
            batch_size: 32,
            concurrency: 4,
            max_retries: 5,
            backoff: Duration::from_millis(500),
            min_interval: Duration::ZERO,
            timeout: Duration::from_secs(120),
        }
    }

    pub fn from_env() -> Result<Self> {
        Self::from_lookup(|k| std::env::var(k).ok())
    }

    pub fn from_lookup(get: impl Fn(&str) -> Option<String>) -> Result<Self> {
        let endpoint = get(Self::ENV_URL)
            .filter(|s| !s.is_empty())
            .ok_or_else(|| Error::Embedder(format!("{} is not set", Self::ENV_URL)))?;
        let model = get(Self::ENV_MODEL).unwrap_or_else(|| "default".into());
        let mut c = Self::new(endpoint, model);
        c.api_key = get(Self::ENV_KEY).filter(|s| !s.is_empty());
        let num = |key: &str, default: u64| -> Result<u64> {
            match get(key) {
                None => Ok(default),
                Some(s) => s
                    .parse()
                    .map_err(|_| Error::Embedder(format!("{key}={s:?} is not a non-negative integer"))),
            }
        };
        c.batch_size = num(Self::ENV_BATCH, 32)?.max(1) as usize;
        c.concurrency = num(Self::ENV_CONCURRENCY, 4)?.max(1) as usize;
        c.max_retries = num(Self::ENV_RETRIES, 5)? as u32;
        c.min_interval = Duration::from_millis(num(Self::ENV_MIN_INTERVAL_MS, 0)?);
        Ok(c)
    }
}

/// Client for an OpenAI-compatible embeddings endpoint with retry,
/// exponential backoff and request spacing.
pub struct ServiceEmbedder {
    config: ServiceConfig,
    agent: ureq::Agent,
    last_request: Mutex<Option<Instant>>,
}

#[derive(Serialize)]
struct EmbeddingRequest<'a> {
    model: &'a str,
    input: &'a [&'a str],
}

#[derive(Deserialize)]
struct EmbeddingResponse {
    data: Vec<EmbeddingDatum>,
}

#[derive(Deserialize)]
struct EmbeddingDatum {
    embedding: Vec<f64>,
    #[serde(default)]
    index: Option<usize>,
}

enum Attempt {
    Retry(String),
    Fatal(String),
}

impl ServiceEmbedder {
    pub fn new(config: ServiceConfig) -> Self {
        let agent = ureq::Agent::config_builder()
            .timeout_global(Some(config.timeout))
            .build()
            .into();
        Self {
            config,
            agent,
            last_request: Mutex::new(None),
        }
    }

    pub fn from_env() -> Result<Self> {
        Ok(Self::new(ServiceConfig::from_env()?))
    }

    fn pace(&self) {
        if self.config.min_interval.is_zero() {
            return;
        }
        let mut last = self.last_request.lock().expect("pacing lock");
        if let Some(t) = *last {
            let wait = self.config.min_interval.saturating_sub(t.elapsed());
            if !wait.is_zero() {
                thread::sleep(wait);
            }
        }
        *last = Some(Instant::now());
    }

    fn attempt(&self, texts: &[&str]) -> std::result::Result<Vec<Vec<f64>>, Attempt> {
        self.pace();
        let mut req = self
            .agent
            .post(&self.config.endpoint)
            .header("Content-Type", "application/json");
        if let Some(key) = &self.config.api_key {
            req = req.header("Authorization", &format!("Bearer {key}"));
        }
        let body = EmbeddingRequest {
            model: &self.config.model,
            input: texts,
        };
        let mut resp = match req.send_json(&body) {
            Ok(r) => r,
            Err(ureq::Error::StatusCode(code)) if code == 429 || code >= 500 => {
                return Err(Attempt::Retry(format!("HTTP {code}")))
            }
            Err(ureq::Error::StatusCode(code)) => return Err(Attempt::Fatal(format!("HTTP {code}"))),
            Err(e) => return Err(Attempt::Retry(e.to_string())),
        };
        let parsed: EmbeddingResponse = resp
            .body_mut()
            .read_json()
            .map_err(|e| Attempt::Fatal(format!("malformed response: {e}")))?;
        if parsed.data.len() != texts.len() {
            return Err(Attempt::Fatal(format!(
                "asked for {} embeddings, got {}",
                texts.len(),
                parsed.data.len()
            )));
        }
        let mut out = vec![Vec::new(); texts.len()];
        for (i, d) in parsed.data.into_iter().enumerate() {
            let slot = d.index.unwrap_or(i);
            if slot >= out.len() || !out[slot].is_empty() {
                return Err(Attempt::Fatal(format!("bad embedding index {slot}")));
            }
            out[slot] = d.embedding;
        }
        Ok(out)
    }
}

impl Embedder for ServiceEmbedder {
    fn model_tag(&self) -> String {
        self.config.model.clone()
    }

    fn embed_batch(&self, texts: &[&str]) -> Result<Vec<Vec<f64>>> {
        let mut delay = self.config.backoff;
        let mut tries = 0;
        loop {
            match self.attempt(texts) {
                Ok(v) => return Ok(v),
                Err(Attempt::Fatal(msg)) => return Err(Error::Embedder(format!("{}: {msg}", self.config.endpoint))),
                Err(Attempt::Retry(msg)) if tries < self.config.max_retries => {
                    log::warn!("embedding request failed ({msg}); retrying in {delay:?}");
                    thread::sleep(delay);
                    delay = delay.saturating_mul(2);
                    tries += 1;
                }
                Err(Attempt::Retry(msg)) => {
                    return Err(Error::Embedder(format!(
                        "{} unreachable after {} attempts: {msg}",
                        self.config.endpoint,
                        tries + 1
                    )))
                }
            }
        }
    }

    fn batch_size(&self) -> usize {
        self.config.batch_size
    }

    fn max_concurrency(&self) -> usize {
        self.config.concurrency
    }
}

#[derive(Serialize, Deserialize)]
struct CacheLine {
    key: String,
    vector: Vec<f64>,
}

/// Wraps an embedder with an append-only JSONL cache keyed by
/// `sha256(model_tag, text)`, so repeated runs need no service access.
pub struct CachedEmbedder<E> {
    inner: E,
    path: PathBuf,
    entries: Mutex<HashMap<String, Vec<f64>>>,
}

impl<E: Embedder> CachedEmbedder<E> {
    pub fn open(inner: E, path: impl Into<PathBuf>) -> Result<Self> {
        let path = path.into();
        let mut entries = HashMap::new();
        if path.exists() {
            for line in read_jsonl_lines::<CacheLine>(&path)? {
                entries.insert(line.key, line.vector);
            }
        }
        Ok(Self {
            inner,
            path,
            entries: Mutex::new(entries),
        })
    }

    pub fn len(&self) -> usize {
        self.entries.lock().expect("cache lock").len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    fn key(&self, text: &str) -> String {
        let mut h = Sha256::new();
        h.update(self.inner.model_tag().as_bytes());
        h.update([0u8]);
        h.update(text.as_bytes());
        h.finalize().iter().map(|b| format!("{b:02x}")).collect()
    }
}

impl<E: Embedder> Embedder for CachedEmbedder<E> {
    fn model_tag(&self) -> String {
        self.inner.model_tag()
    }

    fn embed_batch(&self, texts: &[&str]) -> Result<Vec<Vec<f64>>> {
        let keys: Vec<String> = texts.iter().map(|t| self.key(t)).collect();
        let mut out: Vec<Option<Vec<f64>>> = {
            let entries = self.entries.lock().expect("cache lock");
            keys.iter().map(|k| entries.get(k).cloned()).collect()
        };
        let missing: Vec<usize> = (0..texts.len()).filter(|&i| out[i].is_none()).collect();
        if !missing.is_empty() {
            let batch: Vec<&str> = missing.iter().map(|&i| texts[i]).collect();
            let fresh = self.inner.embed_batch(&batch)?;
            if fresh.len() != batch.len() {
                return Err(Error::Embedder("embedder returned the wrong number of vectors".into()));
            }
            let mut entries = self.entries.lock().expect("cache lock");
            let file = OpenOptions::new()
                .create(true)
                .append(true)
                .open(&self.path)
                .map_err(|e| Error::io(&self.path, e))?;
            let mut w = BufWriter::new(file);
            for (&i, v) in missing.iter().zip(fresh) {
                serde_json::to_writer(
                    &mut w,
                    &CacheLine {
                        key: keys[i].clone(),
                        vector: v.clone(),
                    },
                )?;
                w.write_all(b"\n").map_err(|e| Error::io(&self.path, e))?;
                entries.insert(keys[i].clone(), v.clone());
                out[i] = Some(v);
            }
            w.flush().map_err(|e| Error::io(&self.path, e))?;
        }
        Ok(out.into_iter().map(|v| v.expect("filled")).collect())
    }

    fn batch_size(&self) -> usize {
        self.inner.batch_size()
    }

    fn max_concurrency(&self) -> usize {
        self.inner.max_concurrency()
    }
}

type BatchResult = Result<Vec<Vec<f64>>>;

/// Embeds texts in batches with at most `max_concurrency` batches in
/// flight; all vectors must share one dimension.
pub fn embed_texts(embedder: &dyn Embedder, texts: &[&str]) -> Result<Vec<Vec<f64>>> {
    if let Some(i) = texts.iter().position(|t| t.trim().is_empty()) {
        return Err(Error::invalid(format!("text {i} is empty")));
    }
    let batches: Vec<&[&str]> = texts.chunks(embedder.batch_size().max(1)).collect();
    let workers = embedder.max_concurrency().clamp(1, batches.len().max(1));
    let results: Vec<BatchResult> = if workers == 1 {
        batches.iter().map(|b| embedder.embed_batch(b)).collect()
    } else {
        let next = AtomicUsize::new(0);
        let slots: Mutex<Vec<Option<BatchResult>>> = Mutex::new((0..batches.len()).map(|_| None).collect());
        thread::scope(|s| {
            for _ in 0..workers {
                s.spawn(|| loop {
                    let i = next.fetch_add(1, Ordering::Relaxed);
                    let Some(batch) = batches.get(i) else { break };
                    let r = embedder.embed_batch(batch);
                    slots.lock().expect("slot lock")[i] = Some(r);
                });
            }
        });
        slots
            .into_inner()
            .expect("slot lock")
            .into_iter()
            .map(|r| r.expect("every batch ran"))
            .collect()
    };

    let mut out = Vec::with_capacity(texts.len());
    let mut dim = None;
    for (b, r) in batches.iter().zip(results) {
        let vectors = r?;
        if vectors.len() != b.len() {
            return Err(Error::Embedder(format!(
                "batch of {} texts returned {} vectors",
                b.len(),
                vectors.len()
            )));
        }
        for v in vectors {
            match dim {
                None => dim = Some(v.len()),
                Some(d) if d != v.len() => {
                    return Err(Error::Embedder(format!(
                        "dimension drift: expected {d}, got {}",
                        v.len()
                    )))
                }
                Some(_) => {}
            }
            out.push(v);
        }
    }
    Ok(out)
}

/// One embedded chunk, unit-normalized.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EmbeddingRecord {
    pub doc_id: String,
    pub chunk_id: String,
    pub token_start: usize,
    pub token_end: usize,
    pub model_tag: String,
    pub vector: Vec<f64>,
}

impl TokenSpan for EmbeddingRecord {
    fn doc_id(&self) -> &str {
        &self.doc_id
    }
    fn token_start(&self) -> usize {
        self.token_start
    }
    fn token_end(&self) -> usize {
        self.token_end
    }
}

impl EmbeddingRecord {
    pub fn to_vector(&self) -> Result<Vector<f64>> {
        Vector::from_slice(&self.vector)
    }
}

/// One unit-norm record per chunk, in chunk order.
pub fn embed_chunks(chunks: &ChunkSet, embedder: &dyn Embedder) -> Result<Vec<EmbeddingRecord>> {
    let texts: Vec<&str> = chunks.chunks.iter().map(|c| c.text.as_str()).collect();
    if let Some(c) = chunks.chunks.iter().find(|c| c.text.trim().is_empty()) {
        return Err(Error::invalid(format!("chunk {} has empty text", c.chunk_id)));
    }
    let vectors = embed_texts(embedder, &texts)?;
    let tag = embedder.model_tag();
    chunks
        .chunks
        .iter()
        .zip(vectors)
        .map(|(c, v)| {
            Ok(EmbeddingRecord {
                doc_id: c.doc_id.clone(),
                chunk_id: c.chunk_id.clone(),
                token_start: c.token_start,
                token_end: c.token_end,
                model_tag: tag.clone(),
                vector: Vector::new(v)?.normalize()?.into_inner(),
            })
        })
        .collect()
}

pub fn write_records(path: &Path, records: &[EmbeddingRecord]) -> Result<()> {
    let file = fs::File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = BufWriter::new(file);
    for r in records {
        serde_json::to_writer(&mut w, r)?;
        w.write_all(b"\n").map_err(|e| Error::io(path, e))?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

/// Reads records, checking for a uniform dimension and normalizing vectors
/// that are off the unit sphere by more than 1e-9.
pub fn read_records(path: &Path) -> Result<Vec<EmbeddingRecord>> {
    let mut records: Vec<EmbeddingRecord> = read_jsonl_lines(path)?;
    let dim = records.first().map(|r| r.vector.len());
    for r in records.iter_mut() {
        let v = r.to_vector()?;
        if Some(v.dim()) != dim {
            return Err(Error::DimensionMismatch {
                expected: dim.unwrap_or(0),
                found: v.dim(),
            });
        }
        if (v.norm() - 1.0).abs() > 1e-9 {
            r.vector = v.normalize()?.into_inner();
        }
    }
    Ok(records)
}
