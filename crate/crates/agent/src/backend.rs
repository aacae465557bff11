//! The seam between the agent and its language/vision models.
//!
//! Every model call goes through [`TextModel::complete`] with a
//! [`ModelRequest`]. Live HTTP clients and the scripted replayer implement
//! the same trait, so the search and reflection code never knows which one
//! it is talking to.

use std::fmt;
use std::sync::Arc;

use lumi_core::frame::{Colorimetry, Frame};
use lumi_core::frame_io::encode_png8;
use serde::{Deserialize, Serialize};

/// Which agent stage is asking.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Role {
    Analyst,
    Expander,
    Critic,
    Reflector,
}

impl Role {
    pub const ALL: [Role; 4] = [Role::Analyst, Role::Expander, Role::Critic, Role::Reflector];

    pub fn as_str(&self) -> &'static str {
        match self {
            Role::Analyst => "analyst",
            Role::Expander => "expander",
            Role::Critic => "critic",
            Role::Reflector => "reflector",
        }
    }
}

impl fmt::Display for Role {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// An image attached to a request, already PNG-encoded.
#[derive(Debug, Clone, PartialEq)]
pub struct ImagePayload {
    pub colorimetry: Colorimetry,
    pub width: usize,
    pub height: usize,
    pub png: Vec<u8>,
}

impl ImagePayload {
    /// Encodes a display-referred frame. Anything else is a caller bug: the
    /// models only ever see normalized pictures.
    pub fn from_display_frame(frame: &Frame<f32>) -> Self {
        assert!(frame.colorimetry().is_display(), "model payloads must be display-referred");
        Self { colorimetry: frame.colorimetry(), width: frame.width(), height: frame.height(), png: encode_png8(frame) }
    }
}

#[derive(Debug, Clone)]
pub struct ModelRequest {
    pub role: Role,
    /// Stable name of the call site, e.g. `node-4` for the critic scoring
    /// node 4. Scripted fixtures can key replies on it.
    pub key: String,
    /// 0 for the first try, then 1, 2 for re-prompts.
    pub attempt: u32,
    pub system: String,
    pub prompt: String,
    pub image: Option<ImagePayload>,
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum BackendError {
    #[error("transport: {0}")]
    Transport(String),
    #[error("HTTP {status}: {body}")]
    Http { status: u16, body: String },
    #[error("unexpected response shape: {0}")]
    Response(String),
    #[error("scripted fixture for {role} has no reply left for key {key:?}")]
    FixtureExhausted { role: Role, key: String },
    #[error("scripted failure: {0}")]
    Scripted(String),
    #[error("backend not configured: {0}")]
    NotConfigured(String),
}

pub trait TextModel: Send + Sync {
    /// Backend kind plus model tag, for audit records.
    fn name(&self) -> String;
    fn complete(&self, request: &ModelRequest) -> Result<String, BackendError>;
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum EmbedError {
    #[error("text has no tokens to embed")]
    DegenerateText,
    #[error("embedding has dimension {found}, expected {expected}")]
    Dimension { expected: usize, found: usize },
    #[error(transparent)]
    Backend(#[from] BackendError),
}

pub trait EmbedBackend: Send + Sync {
    /// Identity recorded next to stored vectors; vectors from different ids
    /// are not comparable.
    fn id(&self) -> String;
    fn dim(&self) -> usize;
    /// Raw vector, not necessarily normalized.
    fn embed_raw(&self, text: &str) -> Result<Vec<f64>, EmbedError>;
}

/// The four model roles plus the embedder a session needs.
#[derive(Clone)]
pub struct Backends {
    pub analyst: Arc<dyn TextModel>,
    pub expander: Arc<dyn TextModel>,
    pub critic: Arc<dyn TextModel>,
    pub reflector: Arc<dyn TextModel>,
    pub embedder: Arc<dyn EmbedBackend>,
}

impl Backends {
    pub fn for_role(&self, role: Role) -> &Arc<dyn TextModel> {
        match role {
            Role::Analyst => &self.analyst,
            Role::Expander => &self.expander,
            Role::Critic => &self.critic,
            Role::Reflector => &self.reflector,
        }
    }
}

/// A model backed by a closure; handy for tests that compute replies from
/// the request (e.g. a critic that looks at the image).
pub struct FnModel<F> {
    name: String,
    f: F,
}

impl<F> FnModel<F>
where
    F: Fn(&ModelRequest) -> Result<String, BackendError> + Send + Sync,
{
    pub fn new(name: impl Into<String>, f: F) -> Self {
        Self { name: name.into(), f }
    }
}

impl<F> TextModel for FnModel<F>
where
    F: Fn(&ModelRequest) -> Result<String, BackendError> + Send + Sync,
{
    fn name(&self) -> String {
        self.name.clone()
    }

    fn complete(&self, request: &ModelRequest) -> Result<String, BackendError> {
        (self.f)(request)
    }
}
