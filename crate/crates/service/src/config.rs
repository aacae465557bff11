//! Engine configuration: a TOML file for tunables, the environment for
//! backend mode and credentials.

use std::path::{Path, PathBuf};

use lumi_agent::reasoning::SearchConfig;
use lumi_agent::reflection::{MagnitudeCaps, DEFAULT_MAX_ITERATIONS};
use lumi_core::cdl::RolloffConfig;
use serde::{Deserialize, Serialize};

pub const ENV_MODE: &str = "LUMI_MODE";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BackendMode {
    /// Hosted models reached over HTTP.
    Live,
    /// Canned replies from a fixture file; never touches the network.
    Scripted,
}

impl std::str::FromStr for BackendMode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "live" => Ok(BackendMode::Live),
            "scripted" => Ok(BackendMode::Scripted),
            other => Err(format!("backend mode must be live or scripted, got {other:?}")),
        }
    }
}

/// Experiment switches that turn parts of the agent off.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Ablation {
    /// One candidate, one level: the search degenerates to a single proposal.
    pub no_tot: bool,
    pub no_rag: bool,
    pub no_protected_tones: bool,
    /// Feedback is refused; sessions stay at their base grade.
    pub no_reflection: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EngineConfig {
    pub mode: BackendMode,
    /// Scripted-mode fixture file.
    pub fixture: Option<PathBuf>,
    pub sessions_dir: PathBuf,
    /// Heuristic store; the bundled one when unset.
    pub store: Option<PathBuf>,
    /// Retrieval rule table; the bundled one when unset.
    pub rules: Option<PathBuf>,
    pub search: SearchConfig,
    pub rolloff: RolloffConfig,
    pub caps: MagnitudeCaps,
    pub max_iterations: usize,
    /// Long edge of stored iteration previews.
    pub preview_long_edge: usize,
    /// Dimension requested from a live embeddings endpoint.
    pub embed_dim: usize,
    pub ablation: Ablation,
}

impl Default for EngineConfig {
    fn default() -> Self {
        Self {
            mode: BackendMode::Live,
            fixture: None,
            sessions_dir: PathBuf::from("lumi-sessions"),
            store: None,
            rules: None,
            search: SearchConfig::default(),
            rolloff: RolloffConfig::default(),
            caps: MagnitudeCaps::default(),
            max_iterations: DEFAULT_MAX_ITERATIONS,
            preview_long_edge: 768,
            embed_dim: 1536,
            ablation: Ablation::default(),
        }
    }
}

#[derive(Debug, thiserror::Error)]
pub enum ConfigError {
    #[error("{path}: {source}")]
    Io { path: String, source: std::io::Error },
    #[error("{path}: {source}")]
    Toml { path: String, source: toml::de::Error },
    #[error("invalid configuration: {0}")]
    Invalid(String),
}

impl EngineConfig {
    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io { path: path.display().to_string(), source })?;
        let mut cfg: Self = toml::from_str(&text).map_err(|source| ConfigError::Toml { path: path.display().to_string(), source })?;
        // Relative paths in the file are relative to the file.
        let base = path.parent().unwrap_or(Path::new("."));
        for p in [&mut cfg.fixture, &mut cfg.store, &mut cfg.rules].into_iter().flatten() {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        }
        if cfg.sessions_dir.is_relative() {
            cfg.sessions_dir = base.join(&cfg.sessions_dir);
        }
        Ok(cfg)
    }

    /// Applies `LUMI_MODE` when set.
    pub fn with_env(mut self) -> Result<Self, ConfigError> {
        if let Some(mode) = std::env::var(ENV_MODE).ok().filter(|v| !v.trim().is_empty()) {
            self.mode = mode.parse().map_err(ConfigError::Invalid)?;
        }
        Ok(self)
    }

    /// The search settings after ablation switches.
    pub fn effective_search(&self) -> SearchConfig {
        let mut s = self.search;
        if self.ablation.no_tot {
            s.branching = 1;
            s.max_depth = 1;
            s.beam_width = 1;
        }
        s.disable_rag |= self.ablation.no_rag;
        s.disable_protected_tones |= self.ablation.no_protected_tones;
        s
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        if self.mode == BackendMode::Scripted && self.fixture.is_none() {
            return Err(ConfigError::Invalid("scripted mode needs a fixture file".into()));
        }
        self.effective_search().validate().map_err(ConfigError::Invalid)?;
        self.caps.validate().map_err(ConfigError::Invalid)?;
        if !self.rolloff.is_valid() {
            return Err(ConfigError::Invalid("rolloff tau must be in (0, 1)".into()));
        }
        if self.max_iterations == 0 {
            return Err(ConfigError::Invalid("max_iterations must be at least 1".into()));
        }
        if self.preview_long_edge == 0 {
            return Err(ConfigError::Invalid("preview_long_edge must be at least 1".into()));
        }
        Ok(())
    }
}
