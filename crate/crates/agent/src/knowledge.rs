//! The grading-heuristic store and exact cosine top-k retrieval over it.

use std::collections::{HashMap, HashSet};
use std::hash::Hasher;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use fnv::FnvHasher;
use lumi_core::cdl::{CdlParams, FieldPath};
use serde::{Deserialize, Serialize};

use crate::backend::{EmbedBackend, EmbedError};

/// A suggested parameter nudge attached to a heuristic, e.g.
/// `lift.b:+0.02, gain.r:+0.05` or `Lift Blue +0.02, Gain Red +0.05`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ActionHint {
    pub deltas: Vec<HintDelta>,
    /// When set and the heuristic is retrieved, the search root starts from
    /// identity plus these deltas instead of plain identity.
    #[serde(default)]
    pub seed: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HintDelta {
    pub field: FieldPath,
    pub delta: f64,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("cannot parse action hint item {item:?}: {reason}")]
pub struct HintParseError {
    pub item: String,
    pub reason: String,
}

impl FromStr for ActionHint {
    type Err = HintParseError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let mut deltas = Vec::new();
        for item in s.split([',', ';']).map(str::trim).filter(|i| !i.is_empty()) {
            let err = |reason: &str| HintParseError { item: item.to_string(), reason: reason.to_string() };
            let (field, value) = match item.rsplit_once(':') {
                Some(pair) => pair,
                None => item.rsplit_once(char::is_whitespace).ok_or_else(|| err("expected `field:+delta` or `Field Name +delta`"))?,
            };
            let field: FieldPath = field.trim().parse().map_err(|e: lumi_core::cdl::UnknownField| err(&e.to_string()))?;
            let delta: f64 = value.trim().parse().map_err(|_| err("delta is not a number"))?;
            if !delta.is_finite() {
                return Err(err("delta is not finite"));
            }
            deltas.push(HintDelta { field, delta });
        }
        if deltas.is_empty() {
            return Err(HintParseError { item: s.to_string(), reason: "no deltas".into() });
        }
        Ok(Self { deltas, seed: false })
    }
}

impl ActionHint {
    pub fn apply(&self, base: &CdlParams<f64>) -> CdlParams<f64> {
        let mut p = *base;
        for d in &self.deltas {
            p.set(d.field, p.get(d.field) + d.delta);
        }
        p
    }

    pub fn describe(&self) -> String {
        self.deltas.iter().map(|d| format!("{}:{:+}", d.field, d.delta)).collect::<Vec<_>>().join(", ")
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Heuristic {
    pub id: String,
    pub text: String,
    pub action_hint: Option<ActionHint>,
    pub tags: Vec<String>,
    /// Unit-length vector from the store's embedder.
    #[serde(skip)]
    pub embedding: Vec<f64>,
}

#[derive(Debug, Clone)]
pub struct HeuristicStore {
    entries: Vec<Heuristic>,
    embed_dim: usize,
    embedder_id: String,
}

#[derive(Debug, thiserror::Error)]
pub enum KnowledgeError {
    #[error("{path}: {source}")]
    Io { path: String, source: std::io::Error },
    #[error("heuristic store is not valid TOML: {0}")]
    Toml(String),
    #[error("heuristic #{index}{}: {message}", id.as_ref().map(|i| format!(" ({i})")).unwrap_or_default())]
    Entry { index: usize, id: Option<String>, message: String },
    #[error("duplicate heuristic id {0:?}")]
    DuplicateId(String),
    #[error("stored embeddings come from {stored:?} but the configured embedder is {current:?}; re-embed the store")]
    StaleEmbeddings { stored: String, current: String },
    #[error("embedding sidecar: {0}")]
    Sidecar(String),
    #[error("heuristic store is empty")]
    EmptyStore,
    #[error("k must be at least 1")]
    InvalidK,
    #[error("embedding {id:?}: {source}")]
    Embed { id: String, source: EmbedError },
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawHeuristic {
    id: String,
    text: String,
    #[serde(default)]
    action: Option<String>,
    #[serde(default)]
    seed: bool,
    #[serde(default)]
    tags: Vec<String>,
}

#[derive(Debug, Serialize, Deserialize)]
struct Sidecar {
    embedder_id: String,
    dim: usize,
    vectors: HashMap<String, Vec<f64>>,
}

/// `store.toml` → `store.toml.embeddings.json`.
pub fn sidecar_path(store: &Path) -> PathBuf {
    let mut name = store.file_name().unwrap_or_default().to_os_string();
    name.push(".embeddings.json");
    store.with_file_name(name)
}

/// L2-normalized embedding of `text`.
pub fn embed_text(text: &str, backend: &dyn EmbedBackend) -> Result<Vec<f64>, EmbedError> {
    if text.trim().is_empty() {
        return Err(EmbedError::DegenerateText);
    }
    let mut v = backend.embed_raw(text)?;
    if v.len() != backend.dim() {
        return Err(EmbedError::Dimension { expected: backend.dim(), found: v.len() });
    }
    let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
    if !(norm > 0.0 && norm.is_finite()) {
        return Err(EmbedError::DegenerateText);
    }
    v.iter_mut().for_each(|x| *x /= norm);
    Ok(v)
}

fn parse_entries(text: &str) -> Result<Vec<Heuristic>, KnowledgeError> {
    let table: toml::Table = toml::from_str(text).map_err(|e| KnowledgeError::Toml(e.to_string()))?;
    let items = match table.get("heuristic") {
        None => return Ok(Vec::new()),
        Some(toml::Value::Array(a)) => a,
        Some(_) => return Err(KnowledgeError::Toml("`heuristic` must be an array of tables".into())),
    };
    let mut out = Vec::with_capacity(items.len());
    let mut seen = HashSet::new();
    for (index, item) in items.iter().enumerate() {
        let id_hint = item.get("id").and_then(|v| v.as_str()).map(str::to_string);
        let entry_err = |message: String| KnowledgeError::Entry { index, id: id_hint.clone(), message };
        let raw: RawHeuristic = item.clone().try_into().map_err(|e: toml::de::Error| entry_err(e.message().to_string()))?;
        if raw.id.trim().is_empty() {
            return Err(entry_err("id is empty".into()));
        }
        if raw.text.trim().is_empty() {
            return Err(entry_err("text is empty".into()));
        }
        let action_hint = match &raw.action {
            None => {
                if raw.seed {
                    return Err(entry_err("seed requires an action".into()));
                }
                None
            }
            Some(a) => {
                let mut hint: ActionHint = a.parse().map_err(|e: HintParseError| entry_err(e.to_string()))?;
                hint.seed = raw.seed;
                Some(hint)
            }
        };
        if !seen.insert(raw.id.clone()) {
            return Err(KnowledgeError::DuplicateId(raw.id));
        }
        let h = Heuristic { id: raw.id, text: raw.text.trim().to_string(), action_hint, tags: raw.tags, embedding: Vec::new() };
        out.push(h);
    }
    Ok(out)
}

impl HeuristicStore {
    /// Builds a store from already-parsed heuristics, embedding every entry.
    pub fn from_heuristics(entries: Vec<Heuristic>, embedder: &dyn EmbedBackend) -> Result<Self, KnowledgeError> {
        let mut seen = HashSet::new();
        for h in &entries {
            if !seen.insert(h.id.clone()) {
                return Err(KnowledgeError::DuplicateId(h.id.clone()));
            }
        }
        let mut entries = entries;
        for h in entries.iter_mut() {
            h.embedding = embed_text(&h.text, embedder).map_err(|source| KnowledgeError::Embed { id: h.id.clone(), source })?;
        }
        Ok(Self { entries, embed_dim: embedder.dim(), embedder_id: embedder.id() })
    }

    pub fn parse(text: &str, embedder: &dyn EmbedBackend) -> Result<Self, KnowledgeError> {
        let entries = parse_entries(text)?;
        Self::from_heuristics(entries, embedder)
    }

    /// Bundled seed heuristics.
    pub fn builtin(embedder: &dyn EmbedBackend) -> Result<Self, KnowledgeError> {
        Self::parse(BUILTIN_STORE, embedder)
    }

    /// Loads a store file. Vectors from a sidecar file are reused when it was
    /// written by the same embedder; a sidecar from another embedder is an
    /// error rather than a silent mix of incomparable vectors.
    pub fn load(path: &Path, embedder: &dyn EmbedBackend) -> Result<Self, KnowledgeError> {
        let text = std::fs::read_to_string(path).map_err(|source| KnowledgeError::Io { path: path.display().to_string(), source })?;
        let mut entries = parse_entries(&text)?;
        let side = sidecar_path(path);
        let mut cached = HashMap::new();
        if side.exists() {
            let raw = std::fs::read_to_string(&side).map_err(|source| KnowledgeError::Io { path: side.display().to_string(), source })?;
            let sc: Sidecar = serde_json::from_str(&raw).map_err(|e| KnowledgeError::Sidecar(e.to_string()))?;
            if sc.embedder_id != embedder.id() {
                return Err(KnowledgeError::StaleEmbeddings { stored: sc.embedder_id, current: embedder.id() });
            }
            if sc.dim != embedder.dim() {
                return Err(KnowledgeError::Sidecar(format!("dimension {} does not match embedder ({})", sc.dim, embedder.dim())));
            }
            cached = sc.vectors;
        }
        for h in entries.iter_mut() {
            h.embedding = match cached.remove(&h.id) {
                Some(v) => {
                    let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
                    if v.len() != embedder.dim() || (norm - 1.0).abs() > 1e-6 {
                        return Err(KnowledgeError::Sidecar(format!("vector for {:?} is not a unit vector of the right size", h.id)));
                    }
                    v
                }
                None => embed_text(&h.text, embedder).map_err(|source| KnowledgeError::Embed { id: h.id.clone(), source })?,
            };
        }
        Ok(Self { entries, embed_dim: embedder.dim(), embedder_id: embedder.id() })
    }

    /// Writes the sidecar of precomputed vectors next to `path`.
    pub fn write_sidecar(&self, path: &Path) -> Result<(), KnowledgeError> {
        let sc = Sidecar {
            embedder_id: self.embedder_id.clone(),
            dim: self.embed_dim,
            vectors: self.entries.iter().map(|h| (h.id.clone(), h.embedding.clone())).collect(),
        };
        let side = sidecar_path(path);
        let json = serde_json::to_string(&sc).expect("sidecar serializes");
        std::fs::write(&side, json).map_err(|source| KnowledgeError::Io { path: side.display().to_string(), source })
    }

    pub fn entries(&self) -> &[Heuristic] {
        &self.entries
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn embed_dim(&self) -> usize {
        self.embed_dim
    }

    pub fn embedder_id(&self) -> &str {
        &self.embedder_id
    }

    pub fn get(&self, id: &str) -> Option<&Heuristic> {
        self.entries.iter().find(|h| h.id == id)
    }
}

/// A retrieval hit.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Retrieved {
    pub id: String,
    pub text: String,
    pub action_hint: Option<ActionHint>,
    pub score: f64,
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Exhaustive cosine top-k: descending score, ties by ascending id.
pub fn retrieve_topk(store: &HeuristicStore, query: &str, k: usize, embedder: &dyn EmbedBackend) -> Result<Vec<Retrieved>, KnowledgeError> {
    if store.is_empty() {
        return Err(KnowledgeError::EmptyStore);
    }
    if k == 0 {
        return Err(KnowledgeError::InvalidK);
    }
    if embedder.id() != store.embedder_id {
        return Err(KnowledgeError::StaleEmbeddings { stored: store.embedder_id.clone(), current: embedder.id() });
    }
    let q = embed_text(query, embedder).map_err(|source| KnowledgeError::Embed { id: "<query>".into(), source })?;
    let mut scored: Vec<(&Heuristic, f64)> = store.entries.iter().map(|h| (h, dot(&h.embedding, &q).clamp(-1.0, 1.0))).collect();
    scored.sort_by(|a, b| b.1.total_cmp(&a.1).then_with(|| a.0.id.cmp(&b.0.id)));
    Ok(scored
        .into_iter()
        .take(k)
        .map(|(h, score)| Retrieved { id: h.id.clone(), text: h.text.clone(), action_hint: h.action_hint.clone(), score })
        .collect())
}

/// Deterministic hashed bag-of-tokens embedder: lowercase alphanumeric
/// tokens, FNV-1a hashed into `dim` buckets, counted.
#[derive(Debug, Clone, Copy)]
pub struct OfflineEmbedder {
    dim: usize,
}

impl OfflineEmbedder {
    pub const DEFAULT_DIM: usize = 256;

    pub fn new(dim: usize) -> Self {
        assert!(dim > 0);
        Self { dim }
    }
}

impl Default for OfflineEmbedder {
    fn default() -> Self {
        Self::new(Self::DEFAULT_DIM)
    }
}

impl EmbedBackend for OfflineEmbedder {
    fn id(&self) -> String {
        format!("offline-fnv1a-bow/{}", self.dim)
    }

    fn dim(&self) -> usize {
        self.dim
    }

    fn embed_raw(&self, text: &str) -> Result<Vec<f64>, EmbedError> {
        let mut v = vec![0.0; self.dim];
        let mut any = false;
        for token in text.split(|c: char| !c.is_alphanumeric()).filter(|t| !t.is_empty()) {
            let mut h = FnvHasher::default();
            h.write(token.to_lowercase().as_bytes());
            v[(h.finish() % self.dim as u64) as usize] += 1.0;
            any = true;
        }
        if !any {
            return Err(EmbedError::DegenerateText);
        }
        Ok(v)
    }
}

pub const BUILTIN_STORE: &str = include_str!("../assets/heuristics.toml");
