//! Session service, CLI and clip renderer around the lumi grading agent.

pub mod cli;
pub mod config;
pub mod engine;
pub mod http;
pub mod render;

pub use config::{BackendMode, EngineConfig};
pub use engine::{Artifacts, CreateSession, Engine, EngineError, SessionView};
