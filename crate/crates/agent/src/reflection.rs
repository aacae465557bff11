//! Director feedback turned into small, locked parameter updates.
//!
//! Each note becomes one transition `P_t -> P_t+1` that touches only the
//! fields the note is about. Everything else is carried over bit for bit.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use lumi_core::cdl::{check_params, CdlParams, FieldPath, InvalidParams};
use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::backend::{ModelRequest, Role, TextModel};
use crate::perception::SceneState;
use crate::prompts;
use crate::reasoning::SearchTree;
use crate::structured::{self, Structured, StructuredError};

/// How big a step the note asks for.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MagnitudeClass {
    Slight,
    Moderate,
    Heavy,
}

impl MagnitudeClass {
    pub fn as_str(&self) -> &'static str {
        match self {
            MagnitudeClass::Slight => "slight",
            MagnitudeClass::Moderate => "moderate",
            MagnitudeClass::Heavy => "heavy",
        }
    }
}

impl fmt::Display for MagnitudeClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for MagnitudeClass {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "slight" | "slightly" | "small" => Ok(MagnitudeClass::Slight),
            "moderate" | "moderately" | "medium" => Ok(MagnitudeClass::Moderate),
            "heavy" | "heavily" | "large" | "strong" => Ok(MagnitudeClass::Heavy),
            other => Err(format!("magnitude must be slight, moderate or heavy, got {other:?}")),
        }
    }
}

/// Largest allowed absolute change per field for each magnitude class.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MagnitudeCaps {
    pub slight: f64,
    pub moderate: f64,
    pub heavy: f64,
}

impl Default for MagnitudeCaps {
    fn default() -> Self {
        Self { slight: 0.02, moderate: 0.05, heavy: 0.10 }
    }
}

impl MagnitudeCaps {
    pub fn cap(&self, class: MagnitudeClass) -> f64 {
        match class {
            MagnitudeClass::Slight => self.slight,
            MagnitudeClass::Moderate => self.moderate,
            MagnitudeClass::Heavy => self.heavy,
        }
    }

    pub fn validate(&self) -> Result<(), String> {
        let ok = self.slight > 0.0 && self.slight <= self.moderate && self.moderate <= self.heavy && self.heavy.is_finite();
        if ok {
            Ok(())
        } else {
            Err(format!("magnitude caps must satisfy 0 < slight <= moderate <= heavy, got {self:?}"))
        }
    }
}

/// Absolute new values for the targeted fields; every other field is locked.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeedbackUpdate {
    pub targeted: BTreeMap<FieldPath, f64>,
    pub locked: BTreeSet<FieldPath>,
    pub magnitude_class: MagnitudeClass,
    pub rationale: String,
}

impl FeedbackUpdate {
    /// Locks every field not in `targeted`.
    pub fn new(targeted: BTreeMap<FieldPath, f64>, magnitude_class: MagnitudeClass, rationale: impl Into<String>) -> Self {
        let locked = FieldPath::ALL.iter().copied().filter(|f| !targeted.contains_key(f)).collect();
        Self { targeted, locked, magnitude_class, rationale: rationale.into() }
    }

    /// Signed change per targeted field relative to `current`.
    pub fn deltas(&self, current: &CdlParams<f64>) -> BTreeMap<FieldPath, f64> {
        self.targeted.iter().map(|(&f, &v)| (f, v - current.get(f))).collect()
    }
}

/// What the reflector made of a note.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "action", rename_all = "lowercase")]
pub enum Decision {
    Approve { rationale: String },
    Update(FeedbackUpdate),
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ApplyError {
    #[error("update targets locked field {0}")]
    LockViolation(FieldPath),
    #[error("update leaves field {0} neither targeted nor locked")]
    Unpartitioned(FieldPath),
    #[error(transparent)]
    Invalid(#[from] InvalidParams),
}

/// Writes the targeted values into a copy of `current`. Locked fields are
/// never written, so they stay bit-identical.
pub fn apply_update(current: &CdlParams<f64>, update: &FeedbackUpdate) -> Result<CdlParams<f64>, ApplyError> {
    for f in FieldPath::ALL {
        match (update.targeted.contains_key(&f), update.locked.contains(&f)) {
            (true, true) => return Err(ApplyError::LockViolation(f)),
            (false, false) => return Err(ApplyError::Unpartitioned(f)),
            _ => {}
        }
    }
    let mut next = *current;
    for (&f, &v) in &update.targeted {
        next.set(f, v);
    }
    check_params(&next)?;
    Ok(next)
}

/// Slack for decimal round-off when comparing a step against its cap, so a
/// reply of 0.02 over a current 0.0 is not rejected for 0.020000000000000004.
const CAP_SLACK: f64 = 1e-9;

/// Validates a reflector reply against the current parameters and caps.
pub fn parse_decision(v: &Value, current: &CdlParams<f64>, caps: &MagnitudeCaps) -> Result<Decision, String> {
    let action = structured::string(v.get("action").ok_or("missing action")?, "action")?.to_ascii_lowercase();
    let rationale = v.get("rationale").map(|r| structured::string(r, "rationale")).transpose()?.unwrap_or_default();
    match action.as_str() {
        "approve" | "approved" | "done" | "accept" => return Ok(Decision::Approve { rationale }),
        "update" => {}
        other => return Err(format!("action must be approve or update, got {other:?}")),
    }
    let class: MagnitudeClass = structured::string(v.get("magnitude").ok_or("missing magnitude")?, "magnitude")?.parse()?;
    let cap = caps.cap(class);
    let targets = v.get("targets").and_then(Value::as_object).ok_or("targets must be an object of field: new value")?;
    let mut targeted = BTreeMap::new();
    for (key, val) in targets {
        let field: FieldPath = key.parse().map_err(|e: lumi_core::cdl::UnknownField| e.to_string())?;
        let new = structured::number(val, key)?;
        if !field.range().contains(new) {
            return Err(format!("{field} = {new} is outside {}", field.range()));
        }
        let step = (new - current.get(field)).abs();
        if step > cap + CAP_SLACK {
            return Err(format!("{field} moves by {step:.4} from {}, more than the {class} limit of {cap}", current.get(field)));
        }
        if new != current.get(field) && targeted.insert(field, new).is_some() {
            return Err(format!("{field} is given twice"));
        }
    }
    if targeted.is_empty() {
        return Err("an update must change at least one field; reply with action approve if nothing should change".into());
    }
    Ok(Decision::Update(FeedbackUpdate::new(targeted, class, rationale)))
}

/// Asks the reflector what a note means for `current`.
pub fn parse_feedback(
    text: &str,
    current: &CdlParams<f64>,
    iteration: usize,
    scene: &SceneState,
    reflector: &dyn TextModel,
    caps: &MagnitudeCaps,
    max_retries: u32,
) -> Result<Structured<Decision>, StructuredError> {
    let request = ModelRequest {
        role: Role::Reflector,
        key: format!("step-{}", iteration + 1),
        attempt: 0,
        system: prompts::REFLECTOR.system(),
        prompt: prompts::REFLECTOR.render(&[
            ("scene", &scene.to_document()),
            ("iteration", &iteration.to_string()),
            ("params", current.to_canonical_string().trim_end()),
            ("feedback", text),
            ("slight", &caps.slight.to_string()),
            ("moderate", &caps.moderate.to_string()),
            ("heavy", &caps.heavy.to_string()),
        ]),
        image: None,
    };
    structured::ask(reflector, request, max_retries, |v| parse_decision(v, current, caps))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SessionStatus {
    Active,
    Approved,
    Exhausted,
    Failed,
}

impl SessionStatus {
    pub fn as_str(&self) -> &'static str {
        match self {
            SessionStatus::Active => "active",
            SessionStatus::Approved => "approved",
            SessionStatus::Exhausted => "exhausted",
            SessionStatus::Failed => "failed",
        }
    }
}

impl fmt::Display for SessionStatus {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Where the anchor frame came from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SessionSource {
    /// The file or clip directory the session was created from.
    pub path: String,
    /// The frame perception and previews use.
    pub anchor: String,
    pub is_clip: bool,
    pub colorimetry: lumi_core::frame::Colorimetry,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum AuditEntry {
    /// The automatic search that produced P_0.
    Search { tree: SearchTree },
    /// A note that produced the iteration this entry is filed under.
    Feedback { text: String, update: FeedbackUpdate, deltas: BTreeMap<FieldPath, f64>, retries: u32 },
}

/// Something that went wrong without changing the history.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FailureRecord {
    /// Iteration the session was at when it happened (-1 before grading).
    pub iteration: i64,
    pub stage: String,
    pub message: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Approval {
    pub iteration: usize,
    pub text: String,
    pub rationale: String,
}

/// A grading session: linear parameter history plus everything needed to
/// explain it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GradingSession {
    pub id: String,
    pub source: SessionSource,
    pub directive: Option<String>,
    pub scene: Option<SceneState>,
    /// Index is the iteration; entry 0 is the automatic base grade.
    pub params_history: Vec<CdlParams<f64>>,
    /// One entry per history entry, same index.
    pub audits: Vec<AuditEntry>,
    pub max_iterations: usize,
    pub status: SessionStatus,
    pub failures: Vec<FailureRecord>,
    pub approval: Option<Approval>,
}

pub const DEFAULT_MAX_ITERATIONS: usize = 5;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ReflectionError {
    #[error("session {id} is {status}, not active")]
    Inactive { id: String, status: SessionStatus },
    #[error("session {0} has no base grade yet")]
    Ungraded(String),
    #[error("session {0} is already graded")]
    AlreadyGraded(String),
    #[error("could not interpret the note: {0}")]
    Parse(StructuredError),
    #[error(transparent)]
    Apply(#[from] ApplyError),
}

impl GradingSession {
    pub fn new(id: impl Into<String>, source: SessionSource, directive: Option<String>) -> Self {
        Self {
            id: id.into(),
            source,
            directive: directive.filter(|d| !d.trim().is_empty()),
            scene: None,
            params_history: Vec::new(),
            audits: Vec::new(),
            max_iterations: DEFAULT_MAX_ITERATIONS,
            status: SessionStatus::Active,
            failures: Vec::new(),
            approval: None,
        }
    }

    /// Latest iteration, -1 before the base grade exists.
    pub fn iteration(&self) -> i64 {
        self.params_history.len() as i64 - 1
    }

    pub fn current(&self) -> Option<&CdlParams<f64>> {
        self.params_history.last()
    }

    pub fn params_at(&self, iteration: usize) -> Option<&CdlParams<f64>> {
        self.params_history.get(iteration)
    }

    pub fn search_tree(&self) -> Option<&SearchTree> {
        match self.audits.first() {
            Some(AuditEntry::Search { tree }) => Some(tree),
            _ => None,
        }
    }

    fn require_active(&self) -> Result<(), ReflectionError> {
        if self.status == SessionStatus::Active {
            Ok(())
        } else {
            Err(ReflectionError::Inactive { id: self.id.clone(), status: self.status })
        }
    }

    /// Records the automatic grade as P_0.
    pub fn set_base_grade(&mut self, scene: SceneState, params: CdlParams<f64>, tree: SearchTree) -> Result<(), ReflectionError> {
        self.require_active()?;
        if !self.params_history.is_empty() {
            return Err(ReflectionError::AlreadyGraded(self.id.clone()));
        }
        self.scene = Some(scene);
        self.params_history.push(params);
        self.audits.push(AuditEntry::Search { tree });
        Ok(())
    }

    pub fn record_failure(&mut self, stage: &str, message: impl Into<String>) {
        self.failures.push(FailureRecord { iteration: self.iteration(), stage: stage.into(), message: message.into() });
    }

    pub fn mark_failed(&mut self, stage: &str, message: impl Into<String>) {
        self.record_failure(stage, message);
        self.status = SessionStatus::Failed;
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum StepOutcome {
    Approved,
    /// A new iteration was appended.
    Updated {
        iteration: usize,
        update: FeedbackUpdate,
    },
}

/// One reflection step. A note the reflector cannot turn into a valid
/// update leaves the history alone and is recorded as a failure; the
/// session stays active. Only successful transitions count toward the
/// iteration limit.
pub fn run_reflection(
    session: &mut GradingSession,
    text: &str,
    reflector: &dyn TextModel,
    caps: &MagnitudeCaps,
    max_retries: u32,
) -> Result<StepOutcome, ReflectionError> {
    session.require_active()?;
    let current = *session.current().ok_or_else(|| ReflectionError::Ungraded(session.id.clone()))?;
    let scene = session.scene.clone().ok_or_else(|| ReflectionError::Ungraded(session.id.clone()))?;
    let t = session.iteration() as usize;

    let reply = match parse_feedback(text, &current, t, &scene, reflector, caps, max_retries) {
        Ok(r) => r,
        Err(e) => {
            session.record_failure("reflection", e.to_string());
            return Err(ReflectionError::Parse(e));
        }
    };
    match reply.value {
        Decision::Approve { rationale } => {
            session.approval = Some(Approval { iteration: t, text: text.to_string(), rationale });
            session.status = SessionStatus::Approved;
            Ok(StepOutcome::Approved)
        }
        Decision::Update(update) => {
            let next = match apply_update(&current, &update) {
                Ok(p) => p,
                Err(e) => {
                    session.record_failure("reflection", e.to_string());
                    return Err(e.into());
                }
            };
            session.params_history.push(next);
            session.audits.push(AuditEntry::Feedback {
                text: text.to_string(),
                deltas: update.deltas(&current),
                update: update.clone(),
                retries: reply.retries,
            });
            if session.params_history.len() > session.max_iterations {
                session.status = SessionStatus::Exhausted;
            }
            Ok(StepOutcome::Updated { iteration: t + 1, update })
        }
    }
}
