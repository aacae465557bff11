//! The grading agent: scene perception, heuristic retrieval, tree search
//! over grading parameters, and feedback-driven refinement.
//!
//! Model access goes through [`backend::TextModel`] and
//! [`backend::EmbedBackend`]; [`live`] talks to hosted models over HTTP and
//! [`scripted`] replays canned replies for hermetic runs.

pub mod backend;
pub mod knowledge;
pub mod live;
pub mod perception;
pub mod prompts;
pub mod reasoning;
pub mod reflection;
pub mod scripted;
pub mod session;
pub mod structured;

pub use backend::{BackendError, Backends, EmbedBackend, ModelRequest, Role, TextModel};
pub use knowledge::{retrieve_topk, HeuristicStore, OfflineEmbedder, Retrieved};
pub use perception::{analyze_scene, AnchorRef, RetrievalRules, SceneState};
pub use reasoning::{beam_search, SearchConfig, SearchInputs, SearchOutcome, SearchTree};
pub use reflection::{apply_update, run_reflection, FeedbackUpdate, GradingSession, MagnitudeCaps, MagnitudeClass, SessionStatus};
pub use scripted::ScriptedFixture;
pub use session::SessionStore;
