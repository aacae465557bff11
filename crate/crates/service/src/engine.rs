//! The session workflow shared by the HTTP service and the CLI: create,
//! grade, take feedback, preview, export, render.

use std::collections::HashMap;
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::{Arc, Mutex};
use std::time::{SystemTime, UNIX_EPOCH};

use lumi_agent::backend::{Backends, EmbedBackend};
use lumi_agent::knowledge::{HeuristicStore, OfflineEmbedder};
use lumi_agent::live::{chat_models_from_env, Endpoint, HttpEmbedder, ENV_EMBED_ENDPOINT};
use lumi_agent::perception::{analyze_scene, AnchorRef, PerceptionOptions, RetrievalRules, SceneState};
use lumi_agent::reasoning::{beam_search, render_preview, PreviewContext, SearchInputs, SearchTree};
use lumi_agent::reflection::{
    run_reflection, Approval, AuditEntry, FailureRecord, GradingSession, MagnitudeClass, ReflectionError, SessionSource, SessionStatus,
    StepOutcome,
};
use lumi_agent::scripted::ScriptedFixture;
use lumi_agent::session::{write_atomic, SessionStore, StoreError};
use lumi_core::cdl::{CdlParams, FieldPath};
use lumi_core::color::{normalize_log_frame, Gamut, LogCurve};
use lumi_core::frame::{Colorimetry, Frame};
use lumi_core::frame_io::{encode_png8, list_clip_frames, middle_frame, read_frame};
use lumi_core::lut::cdl_xml::export_cdl_xml;
use lumi_core::lut::cube::to_cube_string;
use lumi_core::lut::{compile_lut, Lut3D};
use lumi_core::stats::{exposure_profile, ExposureProfile};
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};
use sha2::{Digest, Sha256};

use crate::config::{BackendMode, EngineConfig};
use crate::render::{self, FrameRenderer, RenderReport};

/// Engine failures. Each carries a stable machine-readable code.
#[derive(Debug, thiserror::Error)]
pub enum EngineError {
    #[error("no session {0}")]
    SessionNotFound(String),
    #[error("session {id} has no iteration {iteration}")]
    IterationNotFound { id: String, iteration: usize },
    #[error("{message}")]
    InvalidInput { code: &'static str, message: String },
    #[error("{message}")]
    InvalidState { code: &'static str, message: String },
    #[error("{message}")]
    Backend { code: &'static str, message: String },
    #[error("{0}")]
    Io(String),
    #[error("{0}")]
    Config(String),
}

impl EngineError {
    pub fn code(&self) -> &'static str {
        match self {
            EngineError::SessionNotFound(_) => "session_not_found",
            EngineError::IterationNotFound { .. } => "iteration_not_found",
            EngineError::InvalidInput { code, .. } | EngineError::InvalidState { code, .. } | EngineError::Backend { code, .. } => code,
            EngineError::Io(_) => "io_error",
            EngineError::Config(_) => "config_error",
        }
    }

    fn input(code: &'static str, message: impl Into<String>) -> Self {
        EngineError::InvalidInput { code, message: message.into() }
    }

    fn state(code: &'static str, message: impl Into<String>) -> Self {
        EngineError::InvalidState { code, message: message.into() }
    }
}

impl From<StoreError> for EngineError {
    fn from(e: StoreError) -> Self {
        match e {
            StoreError::NotFound(id) => EngineError::SessionNotFound(id),
            StoreError::BadId(id) => EngineError::SessionNotFound(id),
            other => EngineError::Io(other.to_string()),
        }
    }
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CreateSession {
    /// A frame file or a clip directory.
    pub source: PathBuf,
    pub curve: String,
    /// Camera gamut; the curve's native gamut when omitted.
    #[serde(default)]
    pub gamut: Option<String>,
    #[serde(default)]
    pub directive: Option<String>,
}

/// One entry of the parameter history as shown to clients.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct IterationView {
    pub iteration: usize,
    pub params: CdlParams<f64>,
    /// `base` for the automatic grade, `feedback` for reflection steps.
    pub kind: &'static str,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub feedback: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub magnitude: Option<MagnitudeClass>,
    /// Fields that changed relative to the previous iteration.
    pub changed: Vec<FieldPath>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub rationale: Option<String>,
}

/// What `GET /sessions/{id}/state` returns.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SessionView {
    pub id: String,
    pub status: SessionStatus,
    pub iteration: i64,
    pub max_iterations: usize,
    /// `automatic` without a directive, `directed` with one.
    pub mode: &'static str,
    pub directive: Option<String>,
    pub source: SessionSource,
    pub scene: Option<SceneState>,
    pub semantic_degraded: bool,
    pub history: Vec<IterationView>,
    pub failures: Vec<FailureRecord>,
    pub approval: Option<Approval>,
}

impl SessionView {
    pub fn of(s: &GradingSession) -> Self {
        let history = s
            .params_history
            .iter()
            .enumerate()
            .map(|(t, p)| {
                let mut v = IterationView {
                    iteration: t,
                    params: *p,
                    kind: "base",
                    feedback: None,
                    magnitude: None,
                    changed: Vec::new(),
                    rationale: None,
                };
                match s.audits.get(t) {
                    Some(AuditEntry::Feedback { text, update, .. }) => {
                        v.kind = "feedback";
                        v.feedback = Some(text.clone());
                        v.magnitude = Some(update.magnitude_class);
                        v.changed = update.targeted.keys().copied().collect();
                        v.rationale = Some(update.rationale.clone());
                    }
                    Some(AuditEntry::Search { tree }) => {
                        v.rationale = tree.node(tree.best_id).map(|n| n.rationale.clone());
                        v.changed = FieldPath::ALL.into_iter().filter(|&f| p.get(f) != CdlParams::<f64>::identity().get(f)).collect();
                    }
                    None => {}
                }
                v
            })
            .collect();
        Self {
            id: s.id.clone(),
            status: s.status,
            iteration: s.iteration(),
            max_iterations: s.max_iterations,
            mode: if s.directive.is_some() { "directed" } else { "automatic" },
            directive: s.directive.clone(),
            source: s.source.clone(),
            scene: s.scene.clone(),
            semantic_degraded: s.scene.as_ref().is_some_and(|sc| sc.semantic_degraded),
            history,
            failures: s.failures.clone(),
            approval: s.approval.clone(),
        }
    }
}

/// Export products for one iteration, also written under the session's
/// `exports/` directory.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Artifacts {
    pub iteration: usize,
    pub cube: String,
    pub cdl: String,
    pub report: String,
    pub cube_path: PathBuf,
    pub cdl_path: PathBuf,
    pub report_path: PathBuf,
}

pub struct Engine {
    cfg: EngineConfig,
    backends: Backends,
    fixture: Option<ScriptedFixture>,
    store: HeuristicStore,
    rules: RetrievalRules,
    sessions: SessionStore,
    locks: Mutex<HashMap<String, Arc<Mutex<()>>>>,
    counter: AtomicU64,
}

fn parse_curve(s: &str) -> Result<LogCurve, EngineError> {
    s.parse().map_err(|e: lumi_core::color::UnknownCurve| EngineError::input("unknown_curve", e.to_string()))
}

fn parse_gamut(s: Option<&str>, curve: LogCurve) -> Result<Gamut, EngineError> {
    match s.filter(|g| !g.trim().is_empty()) {
        None => Ok(Gamut::native_for(curve)),
        Some(g) => g.parse().map_err(|e: lumi_core::color::UnknownGamut| EngineError::input("unknown_gamut", e.to_string())),
    }
}

/// Exposure profile of one camera-log frame after normalization.
pub fn frame_stats(path: &Path, curve: &str, gamut: Option<&str>) -> Result<ExposureProfile, EngineError> {
    let curve = parse_curve(curve)?;
    let gamut = parse_gamut(gamut, curve)?;
    let frame =
        read_frame(path, Colorimetry::CameraLog { curve, gamut }).map_err(|e| EngineError::input("unreadable_source", e.to_string()))?;
    let normalized = normalize_log_frame(&frame, curve).map_err(|e| EngineError::input("unreadable_source", e.to_string()))?;
    exposure_profile(&normalized).map_err(|e| EngineError::input("unreadable_source", e.to_string()))
}

impl Engine {
    /// Builds backends from the configuration: the fixture in scripted mode,
    /// environment endpoints in live mode.
    pub fn new(cfg: EngineConfig) -> Result<Self, EngineError> {
        cfg.validate().map_err(|e| EngineError::Config(e.to_string()))?;
        match cfg.mode {
            BackendMode::Scripted => {
                let path = cfg.fixture.as_ref().expect("validated");
                let fixture = ScriptedFixture::load(path).map_err(|e| EngineError::Config(e.to_string()))?;
                let backends = fixture.backends(Arc::new(OfflineEmbedder::default()));
                Self::with_backends(cfg, backends, Some(fixture))
            }
            BackendMode::Live => {
                let (vlm, llm) = chat_models_from_env().map_err(|e| EngineError::Config(e.to_string()))?;
                let embedder: Arc<dyn EmbedBackend> = if std::env::var(ENV_EMBED_ENDPOINT).is_ok_and(|v| !v.trim().is_empty()) {
                    let ep = Endpoint::embed_from_env().map_err(|e| EngineError::Config(e.to_string()))?;
                    Arc::new(HttpEmbedder::new(ep, cfg.embed_dim))
                } else {
                    tracing::info!("{ENV_EMBED_ENDPOINT} not set; using the offline embedder");
                    Arc::new(OfflineEmbedder::default())
                };
                let backends = Backends { analyst: vlm.clone(), critic: vlm, expander: llm.clone(), reflector: llm, embedder };
                Self::with_backends(cfg, backends, None)
            }
        }
    }

    pub fn with_backends(cfg: EngineConfig, backends: Backends, fixture: Option<ScriptedFixture>) -> Result<Self, EngineError> {
        cfg.validate().map_err(|e| EngineError::Config(e.to_string()))?;
        let embedder = backends.embedder.as_ref();
        let store = match &cfg.store {
            Some(p) => HeuristicStore::load(p, embedder),
            None => HeuristicStore::builtin(embedder),
        }
        .map_err(|e| EngineError::Config(e.to_string()))?;
        let rules = match &cfg.rules {
            Some(p) => RetrievalRules::load(p).map_err(|e| EngineError::Config(e.to_string()))?,
            None => RetrievalRules::builtin(),
        };
        let sessions =
            SessionStore::open(&cfg.sessions_dir).map_err(|e| EngineError::Io(format!("{}: {e}", cfg.sessions_dir.display())))?;
        Ok(Self { cfg, backends, fixture, store, rules, sessions, locks: Mutex::default(), counter: AtomicU64::new(0) })
    }

    pub fn config(&self) -> &EngineConfig {
        &self.cfg
    }

    /// The replay fixture in scripted mode, for request-log inspection.
    pub fn fixture(&self) -> Option<&ScriptedFixture> {
        self.fixture.as_ref()
    }

    pub fn sessions(&self) -> &SessionStore {
        &self.sessions
    }

    fn lock(&self, id: &str) -> Arc<Mutex<()>> {
        self.locks.lock().unwrap().entry(id.to_string()).or_default().clone()
    }

    fn new_id(&self, anchor_sha: &str) -> String {
        let nanos = SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_nanos()).unwrap_or(0);
        let n = self.counter.fetch_add(1, Ordering::Relaxed);
        let digest = Sha256::digest(format!("{anchor_sha}/{nanos}/{n}/{}", std::process::id()));
        format!("s-{}", &hex::encode(digest)[..12])
    }

    pub fn create_session(&self, req: &CreateSession) -> Result<SessionView, EngineError> {
        let curve = parse_curve(&req.curve)?;
        let gamut = parse_gamut(req.gamut.as_deref(), curve)?;
        let colorimetry = Colorimetry::CameraLog { curve, gamut };
        let is_clip = req.source.is_dir();
        let anchor = if is_clip {
            let frames = list_clip_frames(&req.source).map_err(|e| EngineError::input("unreadable_source", e.to_string()))?;
            middle_frame(&frames).expect("clip listing is never empty").1.clone()
        } else {
            req.source.clone()
        };
        read_frame(&anchor, colorimetry).map_err(|e| EngineError::input("unreadable_source", e.to_string()))?;
        let anchor_ref = AnchorRef::from_file(&anchor).map_err(|e| EngineError::input("unreadable_source", e.to_string()))?;
        let source = SessionSource { path: req.source.display().to_string(), anchor: anchor.display().to_string(), is_clip, colorimetry };
        let mut session = GradingSession::new(self.new_id(&anchor_ref.sha256), source, req.directive.clone());
        session.max_iterations = self.cfg.max_iterations;
        self.sessions.save(&session)?;
        tracing::info!(id = %session.id, anchor = %anchor.display(), "session created");
        Ok(SessionView::of(&session))
    }

    pub fn session(&self, id: &str) -> Result<GradingSession, EngineError> {
        Ok(self.sessions.load(id)?)
    }

    pub fn state(&self, id: &str) -> Result<SessionView, EngineError> {
        Ok(SessionView::of(&self.session(id)?))
    }

    fn read_anchor(&self, s: &GradingSession) -> Result<(Frame<f32>, Frame<f32>), EngineError> {
        let Colorimetry::CameraLog { curve, .. } = s.source.colorimetry else {
            return Err(EngineError::state("corrupt_session", "session source is not camera log"));
        };
        let frame = read_frame(Path::new(&s.source.anchor), s.source.colorimetry)
            .map_err(|e| EngineError::input("unreadable_source", e.to_string()))?;
        let normalized = normalize_log_frame(&frame, curve).map_err(|e| EngineError::input("unreadable_source", e.to_string()))?;
        Ok((frame, normalized))
    }

    fn preview_path(&self, id: &str, iteration: usize) -> Result<PathBuf, EngineError> {
        Ok(self.sessions.dir(id)?.join(format!("preview-{iteration}.png")))
    }

    fn write_preview(&self, s: &GradingSession, normalized: &Frame<f32>, iteration: usize) -> Result<Vec<u8>, EngineError> {
        let params = s.params_at(iteration).ok_or(EngineError::IterationNotFound { id: s.id.clone(), iteration })?;
        let small = normalized.downscale_to(self.cfg.preview_long_edge);
        let graded = render_preview(&small, params, self.cfg.rolloff, self.cfg.search.lut_size)
            .map_err(|e| EngineError::state("invalid_params", e.to_string()))?;
        let png = encode_png8(&graded);
        let path = self.preview_path(&s.id, iteration)?;
        write_atomic(&path, &png).map_err(|e| EngineError::Io(format!("{}: {e}", path.display())))?;
        Ok(png)
    }

    fn require_active(s: &GradingSession) -> Result<(), EngineError> {
        if s.status == SessionStatus::Active {
            Ok(())
        } else {
            Err(EngineError::state("session_inactive", format!("session {} is {}", s.id, s.status)))
        }
    }

    /// Perception, retrieval and search; stores P_0 and its preview.
    pub fn grade(&self, id: &str) -> Result<SessionView, EngineError> {
        let lock = self.lock(id);
        let _guard = lock.lock().unwrap();
        let mut s = self.sessions.load(id)?;
        Self::require_active(&s)?;
        if !s.params_history.is_empty() {
            return Err(EngineError::state("already_graded", format!("session {id} already has a base grade")));
        }
        let (frame, _) = self.read_anchor(&s)?;
        let anchor_ref = AnchorRef::from_file(Path::new(&s.source.anchor)).map_err(|e| EngineError::Io(e.to_string()))?;
        let search_cfg = self.cfg.effective_search();
        let opts = PerceptionOptions { preview_long_edge: search_cfg.preview_long_edge, max_retries: search_cfg.max_retries };

        let perceived = match analyze_scene(&frame, anchor_ref, self.backends.analyst.as_ref(), opts) {
            Ok(p) => p,
            Err(e) => {
                s.mark_failed("perception", e.to_string());
                self.sessions.save(&s)?;
                return Err(EngineError::Backend { code: "perception_failed", message: e.to_string() });
            }
        };
        if let Some(why) = &perceived.degradation {
            s.record_failure("perception", format!("semantic stream degraded: {why}"));
        }
        let preview = PreviewContext::new(&perceived.normalized, search_cfg.preview_long_edge);
        let inputs = SearchInputs {
            preview: &preview,
            scene: &perceived.scene,
            store: &self.store,
            rules: &self.rules,
            directive: s.directive.as_deref(),
        };
        let outcome = match beam_search(&inputs, &self.backends, &search_cfg, self.cfg.rolloff) {
            Ok(o) => o,
            Err(e) => {
                s.mark_failed("search", e.to_string());
                self.sessions.save(&s)?;
                return Err(EngineError::Backend { code: "search_failed", message: e.to_string() });
            }
        };
        s.set_base_grade(perceived.scene, outcome.best, outcome.tree).expect("checked active and ungraded");
        self.write_preview(&s, &perceived.normalized, 0)?;
        self.sessions.save(&s)?;
        tracing::info!(id, "base grade stored");
        Ok(SessionView::of(&s))
    }

    /// One reflection step; re-renders the new iteration's preview.
    pub fn feedback(&self, id: &str, text: &str) -> Result<SessionView, EngineError> {
        if text.trim().is_empty() {
            return Err(EngineError::input("empty_feedback", "feedback text is empty"));
        }
        if self.cfg.ablation.no_reflection {
            return Err(EngineError::state("reflection_disabled", "reflection is disabled in this configuration"));
        }
        let lock = self.lock(id);
        let _guard = lock.lock().unwrap();
        let mut s = self.sessions.load(id)?;
        let search_cfg = self.cfg.effective_search();
        let result = run_reflection(&mut s, text, self.backends.reflector.as_ref(), &self.cfg.caps, search_cfg.max_retries);
        match result {
            Ok(StepOutcome::Updated { iteration, .. }) => {
                let (_, normalized) = self.read_anchor(&s)?;
                self.write_preview(&s, &normalized, iteration)?;
                self.sessions.save(&s)?;
                Ok(SessionView::of(&s))
            }
            Ok(StepOutcome::Approved) => {
                self.sessions.save(&s)?;
                Ok(SessionView::of(&s))
            }
            Err(e) => {
                self.sessions.save(&s)?;
                Err(match e {
                    ReflectionError::Inactive { .. } => EngineError::state("session_inactive", e.to_string()),
                    ReflectionError::Ungraded(_) => EngineError::state("not_graded", e.to_string()),
                    ReflectionError::AlreadyGraded(_) => EngineError::state("already_graded", e.to_string()),
                    ReflectionError::Parse(_) => EngineError::Backend { code: "reflection_failed", message: e.to_string() },
                    ReflectionError::Apply(_) => EngineError::Backend { code: "reflection_failed", message: e.to_string() },
                })
            }
        }
    }

    fn resolve_iteration(s: &GradingSession, iteration: Option<usize>) -> Result<usize, EngineError> {
        let latest = s.iteration();
        if latest < 0 {
            return Err(EngineError::state("not_graded", format!("session {} has no grade yet", s.id)));
        }
        let t = iteration.unwrap_or(latest as usize);
        if t as i64 > latest {
            return Err(EngineError::IterationNotFound { id: s.id.clone(), iteration: t });
        }
        Ok(t)
    }

    /// PNG preview of an iteration (latest by default).
    pub fn preview(&self, id: &str, iteration: Option<usize>) -> Result<Vec<u8>, EngineError> {
        let s = self.sessions.load(id)?;
        let t = Self::resolve_iteration(&s, iteration)?;
        let path = self.preview_path(id, t)?;
        match std::fs::read(&path) {
            Ok(bytes) => Ok(bytes),
            Err(_) => {
                let (_, normalized) = self.read_anchor(&s)?;
                self.write_preview(&s, &normalized, t)
            }
        }
    }

    pub fn tree(&self, id: &str) -> Result<SearchTree, EngineError> {
        let s = self.sessions.load(id)?;
        s.search_tree().cloned().ok_or_else(|| EngineError::state("not_graded", format!("session {id} has no search tree yet")))
    }

    /// The LUT for an iteration, titled with the session id and iteration.
    pub fn lut(&self, s: &GradingSession, iteration: usize) -> Result<Lut3D<f64>, EngineError> {
        let params = s.params_at(iteration).ok_or(EngineError::IterationNotFound { id: s.id.clone(), iteration })?;
        Ok(compile_lut(params, self.cfg.rolloff, self.cfg.search.lut_size)
            .map_err(|e| EngineError::state("invalid_params", e.to_string()))?
            .with_title(format!("lumi {} iteration {iteration}", s.id)))
    }

    pub fn export(&self, id: &str, iteration: Option<usize>) -> Result<Artifacts, EngineError> {
        let s = self.sessions.load(id)?;
        let t = Self::resolve_iteration(&s, iteration)?;
        let cube = to_cube_string(&self.lut(&s, t)?);
        let params = s.params_at(t).expect("resolved");
        let cdl = export_cdl_xml(params, &format!("{id}-it{t}")).map_err(|e| EngineError::state("invalid_params", e.to_string()))?;
        let mut report = serde_json::to_string_pretty(&self.report(&s, t)).expect("report serializes");
        report.push('\n');

        let dir = self.sessions.dir(id)?.join("exports");
        std::fs::create_dir_all(&dir).map_err(|e| EngineError::Io(format!("{}: {e}", dir.display())))?;
        let stem = format!("{id}-it{t}");
        let (cube_path, cdl_path, report_path) =
            (dir.join(format!("{stem}.cube")), dir.join(format!("{stem}.cdl")), dir.join(format!("{stem}.report.json")));
        for (path, text) in [(&cube_path, &cube), (&cdl_path, &cdl), (&report_path, &report)] {
            write_atomic(path, text.as_bytes()).map_err(|e| EngineError::Io(format!("{}: {e}", path.display())))?;
        }
        Ok(Artifacts { iteration: t, cube, cdl, report, cube_path, cdl_path, report_path })
    }

    fn report(&self, s: &GradingSession, t: usize) -> Value {
        let tree = s.search_tree().map(|tree| {
            json!({
                "query": tree.query,
                "retrieved": tree.retrieved.iter().map(|r| json!({"id": r.id, "score": r.score})).collect::<Vec<_>>(),
                "root_seed": tree.root_seed,
                "best_id": tree.best_id,
                "evaluated": tree.evaluated,
                "expansion_failures": tree.expansion_failures,
                "nodes": tree.nodes.iter().map(|n| json!({
                    "id": n.id, "parent_id": n.parent_id, "depth": n.depth, "score": n.score,
                    "critic_failed": n.critic_failed, "rationale": n.rationale,
                })).collect::<Vec<_>>(),
            })
        });
        let view = SessionView::of(s);
        json!({
            "session": s.id,
            "iteration": t,
            "status": s.status,
            "params": s.params_at(t),
            "rolloff": self.cfg.rolloff,
            "lut_size": self.cfg.search.lut_size,
            "source": s.source,
            "directive": s.directive,
            "scene": s.scene,
            "search": tree,
            "history": view.history,
            "failures": s.failures,
        })
    }

    /// Renders a clip through an iteration's LUT.
    pub fn render(&self, id: &str, iteration: Option<usize>, clip_dir: &Path, out_dir: &Path) -> Result<RenderReport, EngineError> {
        let s = self.sessions.load(id)?;
        let t = Self::resolve_iteration(&s, iteration)?;
        let lut = self.lut(&s, t)?;
        let Colorimetry::CameraLog { curve, gamut } = s.source.colorimetry else {
            return Err(EngineError::state("corrupt_session", "session source is not camera log"));
        };
        let renderer = FrameRenderer::new(&lut, curve, gamut).map_err(|e| EngineError::state("invalid_params", e.to_string()))?;
        render::render_clip(&renderer, clip_dir, out_dir).map_err(|e| EngineError::input("unreadable_source", e.to_string()))
    }
}
