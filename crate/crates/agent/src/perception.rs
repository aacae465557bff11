//! Scene reading: a measured physical stream and a model-described
//! semantic stream over the normalized anchor frame.

use std::path::Path;

use lumi_core::color::{normalize_log_frame, ColorError};
use lumi_core::frame::{Colorimetry, Frame};
use lumi_core::stats::{exposure_profile, ExposureProfile, HueRange, StatsError};
use serde::{Deserialize, Serialize};
use serde_json::Value;
use sha2::{Digest, Sha256};

use crate::backend::{BackendError, ImagePayload, ModelRequest, Role, TextModel};
use crate::prompts;
use crate::structured::{self, StructuredError};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Narrative {
    pub genre: String,
    pub emotion: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SemanticAnalysis {
    pub lighting_mood: String,
    pub narrative: Narrative,
    pub subjects: Vec<String>,
    pub protected_tones: Vec<HueRange>,
}

impl SemanticAnalysis {
    /// Placeholder used when the analyst never produced a usable reply.
    pub fn unknown() -> Self {
        Self {
            lighting_mood: "unknown".into(),
            narrative: Narrative { genre: String::new(), emotion: String::new() },
            subjects: Vec::new(),
            protected_tones: Vec::new(),
        }
    }
}

/// Which frame the scene was read from.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AnchorRef {
    pub path: String,
    pub sha256: String,
}

impl AnchorRef {
    pub fn from_file(path: &Path) -> std::io::Result<Self> {
        let bytes = std::fs::read(path)?;
        Ok(Self { path: path.display().to_string(), sha256: hex::encode(Sha256::digest(&bytes)) })
    }

    pub fn from_bytes(label: impl Into<String>, bytes: &[u8]) -> Self {
        Self { path: label.into(), sha256: hex::encode(Sha256::digest(bytes)) }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SceneState {
    pub exposure: ExposureProfile,
    pub semantic: SemanticAnalysis,
    pub anchor: AnchorRef,
    /// Set when the analyst failed and `semantic` is the placeholder.
    pub semantic_degraded: bool,
    pub analyst_retries: u32,
}

impl SceneState {
    /// Canonical text form: pretty JSON with fields in declaration order.
    pub fn to_document(&self) -> String {
        serde_json::to_string_pretty(self).expect("scene state serializes")
    }

    pub fn from_document(text: &str) -> Result<Self, serde_json::Error> {
        serde_json::from_str(text)
    }
}

#[derive(Debug, thiserror::Error)]
pub enum PerceptionError {
    #[error("anchor frame must be camera-log encoded, got {0}")]
    NotCameraLog(Colorimetry),
    #[error(transparent)]
    Color(#[from] ColorError),
    #[error(transparent)]
    Stats(#[from] StatsError),
    #[error("scene analyst: {0}")]
    Backend(#[from] BackendError),
}

#[derive(Debug, Clone, Copy)]
pub struct PerceptionOptions {
    /// Long edge of the picture sent to the analyst.
    pub preview_long_edge: usize,
    pub max_retries: u32,
}

impl Default for PerceptionOptions {
    fn default() -> Self {
        Self { preview_long_edge: 768, max_retries: structured::DEFAULT_MAX_RETRIES }
    }
}

pub struct Perceived {
    pub scene: SceneState,
    /// The anchor after decode and Rec.709 transform, full resolution.
    pub normalized: Frame<f32>,
    /// Why the semantic stream degraded, if it did.
    pub degradation: Option<String>,
}

/// Decode + transform the anchor, then measure it and have the analyst
/// describe it. The two streams run concurrently over the same normalized
/// frame; only that frame (never the log original) is sent to the model.
pub fn analyze_scene(
    anchor: &Frame<f32>,
    anchor_ref: AnchorRef,
    analyst: &dyn TextModel,
    opts: PerceptionOptions,
) -> Result<Perceived, PerceptionError> {
    let curve = match anchor.colorimetry() {
        Colorimetry::CameraLog { curve, .. } => curve,
        other => return Err(PerceptionError::NotCameraLog(other)),
    };
    let normalized = normalize_log_frame(anchor, curve)?;

    let (exposure, semantic) = rayon::join(|| exposure_profile(&normalized), || describe(&normalized, analyst, opts));
    let exposure = exposure?;
    let (semantic, retries, degradation) = match semantic {
        Ok(s) => (s.value, s.retries, None),
        Err(StructuredError::Invalid { attempts, complaint }) => {
            tracing::warn!(attempts, %complaint, "scene analyst gave no valid reply; continuing physical-only");
            (SemanticAnalysis::unknown(), attempts.saturating_sub(1), Some(complaint))
        }
        Err(StructuredError::Backend(e)) => return Err(e.into()),
    };
    Ok(Perceived {
        scene: SceneState { exposure, semantic, anchor: anchor_ref, semantic_degraded: degradation.is_some(), analyst_retries: retries },
        normalized,
        degradation,
    })
}

fn describe(
    normalized: &Frame<f32>,
    analyst: &dyn TextModel,
    opts: PerceptionOptions,
) -> Result<structured::Structured<SemanticAnalysis>, StructuredError> {
    let preview = normalized.downscale_to(opts.preview_long_edge);
    let request = ModelRequest {
        role: Role::Analyst,
        key: "scene".into(),
        attempt: 0,
        system: prompts::SCENE_ANALYST.system(),
        prompt: prompts::SCENE_ANALYST.render(&[]),
        image: Some(ImagePayload::from_display_frame(&preview)),
    };
    structured::ask(analyst, request, opts.max_retries, parse_semantic)
}

fn hue(v: &Value, what: &str) -> Result<f64, String> {
    let x = structured::number(v, what)?;
    if !(0.0..=360.0).contains(&x) {
        return Err(format!("{what} must be a hue angle in [0, 360], got {x}"));
    }
    Ok(x.rem_euclid(360.0))
}

fn tone_range(name: &str, bounds: &Value) -> Result<HueRange, String> {
    let pair = bounds.as_array().filter(|a| a.len() == 2).ok_or_else(|| format!("protected tone {name:?} must be [low, high]"))?;
    let lo = hue(&pair[0], &format!("{name} low"))?;
    let hi = hue(&pair[1], &format!("{name} high"))?;
    HueRange::new(name, lo, hi).map_err(|e| e.to_string())
}

/// Validates the analyst's JSON into a [`SemanticAnalysis`].
pub fn parse_semantic(v: &Value) -> Result<SemanticAnalysis, String> {
    let obj = v.as_object().ok_or("reply must be a JSON object")?;
    let lighting_mood = structured::string(obj.get("lighting_mood").ok_or("missing lighting_mood")?, "lighting_mood")?;
    if lighting_mood.is_empty() {
        return Err("lighting_mood must not be empty".into());
    }
    let narrative = obj.get("narrative").and_then(Value::as_object).ok_or("missing narrative object")?;
    let field = |k: &str| -> Result<String, String> {
        narrative.get(k).map(|v| structured::string(v, &format!("narrative.{k}"))).unwrap_or(Ok(String::new()))
    };
    let narrative = Narrative { genre: field("genre")?, emotion: field("emotion")? };
    let subjects = match obj.get("subjects") {
        None | Some(Value::Null) => Vec::new(),
        Some(Value::Array(items)) => items.iter().map(|s| structured::string(s, "subject")).collect::<Result<_, _>>()?,
        Some(_) => return Err("subjects must be a list of strings".into()),
    };
    let protected_tones = match obj.get("protected_tones") {
        None | Some(Value::Null) => Vec::new(),
        Some(Value::Object(map)) => map.iter().map(|(name, b)| tone_range(name, b)).collect::<Result<_, _>>()?,
        Some(Value::Array(items)) => items
            .iter()
            .map(|item| {
                let name = item.get("name").and_then(Value::as_str).ok_or("protected tone entries need a name")?;
                let bounds = Value::Array(vec![
                    item.get("low_deg").or_else(|| item.get("low")).cloned().unwrap_or(Value::Null),
                    item.get("high_deg").or_else(|| item.get("high")).cloned().unwrap_or(Value::Null),
                ]);
                tone_range(name, &bounds)
            })
            .collect::<Result<_, _>>()?,
        Some(_) => return Err("protected_tones must be an object of name: [low, high]".into()),
    };
    Ok(SemanticAnalysis { lighting_mood, narrative, subjects, protected_tones })
}

#[derive(Debug, Clone, Deserialize)]
struct Rule {
    mood: String,
    genre: String,
    query: String,
}

#[derive(Debug, Clone, Deserialize)]
struct RuleFile {
    #[serde(default)]
    rule: Vec<Rule>,
}

#[derive(Debug, thiserror::Error)]
pub enum RulesError {
    #[error("{path}: {source}")]
    Io { path: String, source: std::io::Error },
    #[error("retrieval rules: {0}")]
    Parse(#[from] toml::de::Error),
}

/// Query used when the semantic stream is unavailable.
pub const DEGRADED_QUERY: &str = "balanced cinematic grade";

fn norm_mood(s: &str) -> String {
    s.trim().to_lowercase().replace([' ', '-'], "_")
}

fn norm_genre(s: &str) -> String {
    s.trim().to_lowercase().replace('_', " ")
}

/// (lighting mood, genre) → retrieval query table.
#[derive(Debug, Clone)]
pub struct RetrievalRules {
    rules: Vec<Rule>,
}

impl RetrievalRules {
    pub fn builtin() -> Self {
        Self::parse(include_str!("../assets/retrieval_rules.toml")).expect("bundled rules parse")
    }

    pub fn parse(text: &str) -> Result<Self, RulesError> {
        let file: RuleFile = toml::from_str(text)?;
        Ok(Self { rules: file.rule })
    }

    pub fn load(path: &Path) -> Result<Self, RulesError> {
        let text = std::fs::read_to_string(path).map_err(|source| RulesError::Io { path: path.display().to_string(), source })?;
        Self::parse(&text)
    }

    pub fn lookup(&self, mood: &str, genre: &str) -> Option<&str> {
        let (mood, genre) = (norm_mood(mood), norm_genre(genre));
        let hit = |g: &str| self.rules.iter().find(|r| norm_mood(&r.mood) == mood && norm_genre(&r.genre) == g);
        hit(&genre).or_else(|| hit("*")).map(|r| r.query.as_str())
    }

    /// The RAG query for a scene: the directive verbatim when there is one,
    /// else the rule table, else a template from the mood and subjects.
    pub fn query(&self, scene: &SceneState, directive: Option<&str>) -> String {
        if let Some(d) = directive.map(str::trim).filter(|d| !d.is_empty()) {
            return d.to_string();
        }
        if scene.semantic_degraded {
            return DEGRADED_QUERY.to_string();
        }
        let sem = &scene.semantic;
        if let Some(q) = self.lookup(&sem.lighting_mood, &sem.narrative.genre) {
            return q.to_string();
        }
        let mut q = format!("{} cinematic grade", norm_mood(&sem.lighting_mood));
        let keywords: Vec<&str> = sem.subjects.iter().take(3).map(|s| s.trim()).filter(|s| !s.is_empty()).collect();
        if !keywords.is_empty() {
            q.push_str(" for ");
            q.push_str(&keywords.join(", "));
        }
        q
    }
}

pub fn build_retrieval_query(rules: &RetrievalRules, scene: &SceneState, directive: Option<&str>) -> String {
    rules.query(scene, directive)
}
