//! Tree-of-thoughts beam search over grading parameters.
//!
//! The expander proposes `branching` children per beam node, every child is
//! rendered through a proxy LUT onto the preview frame and scored by the
//! critic, and the best `beam_width` children go on to the next depth. The
//! result is the best scored node anywhere in the tree.

use std::collections::HashMap;
use std::sync::{Arc, Mutex};

use lumi_core::cdl::{check_params, CdlParams, FieldPath, RolloffConfig};
use lumi_core::frame::Frame;
use lumi_core::lut::{apply_lut_trilinear, compile_lut, LutError};
use lumi_core::stats::{protected_tone_shift, ProtectedToneReport, DEFAULT_SATURATION_FLOOR};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};

use crate::backend::{Backends, ImagePayload, ModelRequest, Role, TextModel};
use crate::knowledge::{retrieve_topk, HeuristicStore, KnowledgeError, Retrieved};
use crate::perception::{RetrievalRules, SceneState};
use crate::prompts;
use crate::structured::{self, StructuredError};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SearchConfig {
    pub branching: usize,
    pub max_depth: usize,
    pub beam_width: usize,
    pub rag_k: usize,
    /// Long edge, in pixels, of the frame candidates are previewed on.
    pub preview_long_edge: usize,
    /// Concurrent candidate evaluations; 0 means one per core.
    pub workers: usize,
    pub max_retries: u32,
    pub lut_size: usize,
    pub saturation_floor: f64,
    /// Skip retrieval entirely (ablation).
    pub disable_rag: bool,
    /// Leave the protected-tone audit out of critic prompts (ablation).
    pub disable_protected_tones: bool,
}

impl Default for SearchConfig {
    fn default() -> Self {
        Self {
            branching: 3,
            max_depth: 2,
            beam_width: 2,
            rag_k: 3,
            preview_long_edge: 768,
            workers: 0,
            max_retries: structured::DEFAULT_MAX_RETRIES,
            lut_size: 33,
            saturation_floor: DEFAULT_SATURATION_FLOOR,
            disable_rag: false,
            disable_protected_tones: false,
        }
    }
}

impl SearchConfig {
    pub fn validate(&self) -> Result<(), String> {
        for (name, v) in [
            ("branching", self.branching),
            ("max_depth", self.max_depth),
            ("beam_width", self.beam_width),
            ("rag_k", self.rag_k),
            ("preview_long_edge", self.preview_long_edge),
        ] {
            if v == 0 {
                return Err(format!("{name} must be at least 1"));
            }
        }
        if !(2..=129).contains(&self.lut_size) {
            return Err(format!("lut_size must be in [2, 129], got {}", self.lut_size));
        }
        if !(0.0..1.0).contains(&self.saturation_floor) {
            return Err("saturation_floor must be in [0, 1)".into());
        }
        Ok(())
    }

    /// Most critic calls one search can make.
    pub fn max_evaluations(&self) -> usize {
        self.branching + self.branching * self.beam_width * (self.max_depth - 1)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ToTNode {
    pub id: u32,
    pub depth: u32,
    pub params: CdlParams<f64>,
    pub rationale: String,
    pub parent_id: Option<u32>,
    /// Critic score in [1, 5]; `None` for the root, which is never scored.
    pub score: Option<f64>,
    pub critique: Option<String>,
    /// The critic never produced a usable reply and the score is the
    /// pessimistic default.
    #[serde(default)]
    pub critic_failed: bool,
    pub tone_report: Option<ProtectedToneReport>,
}

/// Score given to a candidate whose critic call failed.
pub const FAILED_CRITIC_SCORE: f64 = 1.0;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExpansionFailure {
    pub node_id: u32,
    pub reason: String,
}

/// Everything a search did, kept for audit and display.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SearchTree {
    pub query: String,
    pub retrieved: Vec<Retrieved>,
    pub root_seed: Option<String>,
    pub nodes: Vec<ToTNode>,
    pub best_id: u32,
    pub evaluated: usize,
    pub expansion_failures: Vec<ExpansionFailure>,
}

impl SearchTree {
    pub fn node(&self, id: u32) -> Option<&ToTNode> {
        self.nodes.iter().find(|n| n.id == id)
    }

    pub fn best(&self) -> &ToTNode {
        self.node(self.best_id).expect("best node is in the tree")
    }
}

#[derive(Debug, thiserror::Error)]
pub enum SearchError {
    #[error("search config: {0}")]
    Config(String),
    #[error("retrieval: {0}")]
    Knowledge(#[from] KnowledgeError),
    #[error("every expansion at depth 1 failed: {}", .0.iter().map(|f| format!("node {}: {}", f.node_id, f.reason)).collect::<Vec<_>>().join("; "))]
    AllExpansionsFailed(Vec<ExpansionFailure>),
    #[error("preview rendering: {0}")]
    Render(#[from] LutError),
}

/// The normalized, downscaled anchor every candidate is previewed on.
#[derive(Debug, Clone)]
pub struct PreviewContext {
    pub ungraded: Frame<f32>,
}

impl PreviewContext {
    pub fn new(normalized: &Frame<f32>, long_edge: usize) -> Self {
        assert!(normalized.colorimetry().is_display(), "previews start from the normalized anchor");
        Self { ungraded: normalized.downscale_to(long_edge) }
    }
}

/// Renders `params` onto the preview through a proxy LUT.
pub fn render_preview(
    preview: &Frame<f32>,
    params: &CdlParams<f64>,
    rolloff: RolloffConfig,
    lut_size: usize,
) -> Result<Frame<f32>, LutError> {
    let lut = compile_lut(params, rolloff, lut_size)?.cast::<f32>();
    Ok(apply_lut_trilinear(preview, &lut))
}

fn set_field(p: &mut CdlParams<f64>, key: &str, v: &Value, delta: bool) -> Result<(), String> {
    let field: FieldPath = key.parse().map_err(|e: lumi_core::cdl::UnknownField| e.to_string())?;
    let x = structured::number(v, key)?;
    p.set(field, if delta { p.get(field) + x } else { x });
    Ok(())
}

/// Reads parameters from JSON on top of `base`. Accepts the struct shape
/// (`{"lift": [r, g, b], "saturation": s, ...}`), flat field paths
/// (`{"lift.b": 0.02}`), or a mix. Missing fields keep `base` values.
pub fn params_from_json(v: &Value, base: &CdlParams<f64>) -> Result<CdlParams<f64>, String> {
    let obj = v.as_object().ok_or("params must be an object")?;
    let mut p = *base;
    for (key, val) in obj {
        match (key.as_str(), val) {
            ("lift" | "gamma" | "gain", Value::Array(items)) => {
                if items.len() != 3 {
                    return Err(format!("{key} must have 3 values"));
                }
                for (c, item) in ["r", "g", "b"].iter().zip(items) {
                    set_field(&mut p, &format!("{key}.{c}"), item, false)?;
                }
            }
            _ => set_field(&mut p, key, val, false)?,
        }
    }
    Ok(p)
}

fn deltas_from_json(v: &Value, base: &CdlParams<f64>) -> Result<CdlParams<f64>, String> {
    let obj: &Map<String, Value> = v.as_object().ok_or("delta must be an object of field: amount")?;
    let mut p = *base;
    for (key, val) in obj {
        set_field(&mut p, key, val, true)?;
    }
    Ok(p)
}

/// Validates an expander reply into exactly `b` (params, rationale) pairs.
/// Out-of-range values are rejected, never clamped.
pub fn parse_candidates(v: &Value, parent: &CdlParams<f64>, b: usize) -> Result<Vec<(CdlParams<f64>, String)>, String> {
    let items = v.get("candidates").unwrap_or(v).as_array().ok_or("reply must contain a `candidates` array")?;
    if items.len() != b {
        return Err(format!("expected exactly {b} candidates, got {}", items.len()));
    }
    let mut out = Vec::with_capacity(b);
    for (i, item) in items.iter().enumerate() {
        let at = |e: String| format!("candidate {}: {e}", i + 1);
        let params = match (item.get("params"), item.get("delta")) {
            (Some(p), None) => params_from_json(p, parent).map_err(at)?,
            (None, Some(d)) => deltas_from_json(d, parent).map_err(at)?,
            (Some(_), Some(_)) => return Err(at("give either params or delta, not both".into())),
            (None, None) => return Err(at("missing params or delta".into())),
        };
        check_params(&params).map_err(|e| at(e.to_string()))?;
        let rationale = item.get("rationale").map(|r| structured::string(r, "rationale")).transpose().map_err(at)?;
        let rationale = rationale.filter(|r| !r.is_empty()).ok_or_else(|| at("missing rationale".into()))?;
        out.push((params, rationale));
    }
    Ok(out)
}

/// Validates a critic reply into (score, critique).
pub fn parse_critique(v: &Value) -> Result<(f64, String), String> {
    let score = structured::number(v.get("score").ok_or("missing score")?, "score")?;
    if !(1.0..=5.0).contains(&score) {
        return Err(format!("score must be between 1 and 5, got {score}"));
    }
    let critique = v.get("critique").map(|c| structured::string(c, "critique")).transpose()?.unwrap_or_default();
    Ok((score, critique))
}

fn heuristics_block(retrieved: &[Retrieved]) -> String {
    if retrieved.is_empty() {
        return "(none)".into();
    }
    retrieved
        .iter()
        .map(|h| match &h.action_hint {
            Some(a) => format!("- [{}] {} (suggested action: {})", h.id, h.text, a.describe()),
            None => format!("- [{}] {}", h.id, h.text),
        })
        .collect::<Vec<_>>()
        .join("\n")
}

fn directive_text(directive: Option<&str>) -> &str {
    directive.filter(|d| !d.trim().is_empty()).unwrap_or("none given; produce the best automatic base grade")
}

/// Asks the expander for `cfg.branching` children of `node`. Ids are taken
/// from `next_id` in order.
#[allow(clippy::too_many_arguments)]
pub fn expand_node(
    node: &ToTNode,
    scene: &SceneState,
    heuristics: &[Retrieved],
    directive: Option<&str>,
    expander: &dyn TextModel,
    cfg: &SearchConfig,
    next_id: &mut u32,
) -> Result<Vec<ToTNode>, StructuredError> {
    assert!((node.depth as usize) < cfg.max_depth, "node {} is already at max depth", node.id);
    let prompt = prompts::EXPANDER.render(&[
        ("scene", &scene.to_document()),
        ("heuristics", &heuristics_block(heuristics)),
        ("directive", directive_text(directive)),
        ("depth", &node.depth.to_string()),
        ("params", node.params.to_canonical_string().trim_end()),
        ("rationale", &node.rationale),
        ("branching", &cfg.branching.to_string()),
    ]);
    let request = ModelRequest {
        role: Role::Expander,
        key: format!("node-{}", node.id),
        attempt: 0,
        system: prompts::EXPANDER.system(),
        prompt,
        image: None,
    };
    let parent = node.params;
    let reply = structured::ask(expander, request, cfg.max_retries, |v| parse_candidates(v, &parent, cfg.branching))?;
    Ok(reply
        .value
        .into_iter()
        .map(|(params, rationale)| {
            let id = *next_id;
            *next_id += 1;
            ToTNode {
                id,
                depth: node.depth + 1,
                params,
                rationale,
                parent_id: Some(node.id),
                score: None,
                critique: None,
                critic_failed: false,
                tone_report: None,
            }
        })
        .collect())
}

struct Rendered {
    png: ImagePayload,
    tones: ProtectedToneReport,
}

/// Proxy renders keyed by the canonical parameter text.
#[derive(Default)]
pub struct PreviewCache {
    inner: Mutex<HashMap<String, Arc<Rendered>>>,
}

impl PreviewCache {
    pub fn len(&self) -> usize {
        self.inner.lock().unwrap().len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

fn rendered(
    cache: &PreviewCache,
    ctx: &PreviewContext,
    scene: &SceneState,
    params: &CdlParams<f64>,
    rolloff: RolloffConfig,
    cfg: &SearchConfig,
) -> Result<Arc<Rendered>, LutError> {
    let key = params.to_canonical_string();
    if let Some(hit) = cache.inner.lock().unwrap().get(&key) {
        return Ok(hit.clone());
    }
    let graded = render_preview(&ctx.ungraded, params, rolloff, cfg.lut_size)?;
    let tones = protected_tone_shift(&ctx.ungraded, &graded, &scene.semantic.protected_tones, cfg.saturation_floor)
        .expect("preview frames share size and are display-referred; ranges were validated on parse");
    let r = Arc::new(Rendered { png: ImagePayload::from_display_frame(&graded), tones });
    cache.inner.lock().unwrap().insert(key, r.clone());
    Ok(r)
}

/// Renders `node` through its proxy LUT and has the critic score the
/// picture. A critic that never answers sensibly yields
/// [`FAILED_CRITIC_SCORE`] instead of an error.
#[allow(clippy::too_many_arguments)]
pub fn evaluate_candidate(
    node: &ToTNode,
    ctx: &PreviewContext,
    scene: &SceneState,
    directive: Option<&str>,
    critic: &dyn TextModel,
    cfg: &SearchConfig,
    rolloff: RolloffConfig,
    cache: &PreviewCache,
) -> Result<ToTNode, LutError> {
    let r = rendered(cache, ctx, scene, &node.params, rolloff, cfg)?;
    let tones = if cfg.disable_protected_tones {
        "(not provided)".to_string()
    } else {
        serde_json::to_string_pretty(&r.tones).expect("report serializes")
    };
    let request = ModelRequest {
        role: Role::Critic,
        key: format!("node-{}", node.id),
        attempt: 0,
        system: prompts::CRITIC.system(),
        prompt: prompts::CRITIC.render(&[
            ("scene", &scene.to_document()),
            ("directive", directive_text(directive)),
            ("tones", &tones),
            ("rationale", &node.rationale),
        ]),
        image: Some(r.png.clone()),
    };
    let mut out = node.clone();
    out.tone_report = Some(r.tones.clone());
    match structured::ask(critic, request, cfg.max_retries, parse_critique) {
        Ok(s) => {
            out.score = Some(s.value.0);
            out.critique = Some(s.value.1);
        }
        Err(e) => {
            tracing::warn!(node = node.id, error = %e, "critic failed; scoring pessimistically");
            out.score = Some(FAILED_CRITIC_SCORE);
            out.critique = Some(format!("critic failure: {e}"));
            out.critic_failed = true;
        }
    }
    Ok(out)
}

/// Descending score, then ascending id.
fn rank(a: &ToTNode, b: &ToTNode) -> std::cmp::Ordering {
    let (sa, sb) = (a.score.unwrap_or(f64::NEG_INFINITY), b.score.unwrap_or(f64::NEG_INFINITY));
    sb.total_cmp(&sa).then(a.id.cmp(&b.id))
}

pub struct SearchInputs<'a> {
    pub preview: &'a PreviewContext,
    pub scene: &'a SceneState,
    pub store: &'a HeuristicStore,
    pub rules: &'a RetrievalRules,
    pub directive: Option<&'a str>,
}

#[derive(Debug, Clone)]
pub struct SearchOutcome {
    pub best: CdlParams<f64>,
    pub tree: SearchTree,
}

fn worker_pool(workers: usize) -> rayon::ThreadPool {
    rayon::ThreadPoolBuilder::new().num_threads(workers).build().expect("thread pool")
}

/// Runs the whole search. Expansion is sequential so node ids are fixed
/// before any concurrent work; evaluations within a depth run on
/// `cfg.workers` threads and pruning waits for all of them.
pub fn beam_search(
    inputs: &SearchInputs<'_>,
    backends: &Backends,
    cfg: &SearchConfig,
    rolloff: RolloffConfig,
) -> Result<SearchOutcome, SearchError> {
    cfg.validate().map_err(SearchError::Config)?;
    let query = inputs.rules.query(inputs.scene, inputs.directive);
    let retrieved = if cfg.disable_rag { Vec::new() } else { retrieve_topk(inputs.store, &query, cfg.rag_k, backends.embedder.as_ref())? };

    let mut root = ToTNode {
        id: 0,
        depth: 0,
        params: CdlParams::identity(),
        rationale: "identity starting point".into(),
        parent_id: None,
        score: None,
        critique: None,
        critic_failed: false,
        tone_report: None,
    };
    let mut root_seed = None;
    if let Some((h, hint)) = retrieved.iter().find_map(|h| h.action_hint.as_ref().filter(|a| a.seed).map(|a| (h, a))) {
        let seeded = hint.apply(&root.params);
        if check_params(&seeded).is_ok() {
            root.params = seeded;
            root.rationale = format!("seeded from heuristic {}: {}", h.id, hint.describe());
            root_seed = Some(h.id.clone());
        }
    }

    let pool = worker_pool(cfg.workers);
    let cache = PreviewCache::default();
    let mut nodes = vec![root.clone()];
    let mut beam = vec![root];
    let mut next_id = 1u32;
    let mut failures = Vec::new();
    let mut evaluated = 0usize;

    for depth in 1..=cfg.max_depth {
        beam.sort_by_key(|n| n.id);
        let mut children = Vec::new();
        for parent in &beam {
            match expand_node(parent, inputs.scene, &retrieved, inputs.directive, backends.expander.as_ref(), cfg, &mut next_id) {
                Ok(kids) => children.extend(kids),
                Err(e) => {
                    tracing::warn!(node = parent.id, error = %e, "expansion failed");
                    failures.push(ExpansionFailure { node_id: parent.id, reason: e.to_string() });
                }
            }
        }
        if children.is_empty() {
            if depth == 1 {
                return Err(SearchError::AllExpansionsFailed(failures));
            }
            break;
        }
        let scored: Vec<ToTNode> = pool.install(|| {
            children
                .par_iter()
                .map(|c| {
                    evaluate_candidate(c, inputs.preview, inputs.scene, inputs.directive, backends.critic.as_ref(), cfg, rolloff, &cache)
                })
                .collect::<Result<_, _>>()
        })?;
        evaluated += scored.len();
        nodes.extend(scored.iter().cloned());
        let mut ranked = scored;
        ranked.sort_by(rank);
        ranked.truncate(cfg.beam_width);
        beam = ranked;
    }

    debug_assert!(evaluated <= cfg.max_evaluations());
    let best = nodes.iter().filter(|n| n.score.is_some()).min_by(|a, b| rank(a, b)).expect("at least one evaluated node");
    Ok(SearchOutcome {
        best: best.params,
        tree: SearchTree { query, retrieved, root_seed, best_id: best.id, nodes, evaluated, expansion_failures: failures },
    })
}
