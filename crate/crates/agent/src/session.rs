//! On-disk session documents, one directory per session.

use std::io::Write;
use std::path::{Path, PathBuf};

use crate::reflection::GradingSession;

#[derive(Debug, thiserror::Error)]
pub enum StoreError {
    #[error("no session {0}")]
    NotFound(String),
    #[error("invalid session id {0:?}")]
    BadId(String),
    #[error("session {id}: {source}")]
    Io { id: String, source: std::io::Error },
    #[error("session {id} document is corrupt: {source}")]
    Corrupt { id: String, source: serde_json::Error },
}

/// Sessions live at `<root>/<id>/session.json`; previews and exports go
/// next to the document.
#[derive(Debug, Clone)]
pub struct SessionStore {
    root: PathBuf,
}

pub const DOCUMENT_NAME: &str = "session.json";

/// Ids become directory names, so only a conservative alphabet is allowed.
pub fn valid_session_id(id: &str) -> bool {
    !id.is_empty() && id.len() <= 64 && id.bytes().all(|b| b.is_ascii_alphanumeric() || b == b'-' || b == b'_')
}

impl SessionStore {
    pub fn open(root: impl Into<PathBuf>) -> std::io::Result<Self> {
        let root = root.into();
        std::fs::create_dir_all(&root)?;
        Ok(Self { root })
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    pub fn dir(&self, id: &str) -> Result<PathBuf, StoreError> {
        if !valid_session_id(id) {
            return Err(StoreError::BadId(id.to_string()));
        }
        Ok(self.root.join(id))
    }

    pub fn exists(&self, id: &str) -> bool {
        self.dir(id).map(|d| d.join(DOCUMENT_NAME).is_file()).unwrap_or(false)
    }

    /// Writes the document atomically: temp file in the same directory,
    /// fsync, rename over the old one.
    pub fn save(&self, session: &GradingSession) -> Result<(), StoreError> {
        let dir = self.dir(&session.id)?;
        let io = |source| StoreError::Io { id: session.id.clone(), source };
        std::fs::create_dir_all(&dir).map_err(io)?;
        let mut text = serde_json::to_string_pretty(session).expect("session serializes");
        text.push('\n');
        write_atomic(&dir.join(DOCUMENT_NAME), text.as_bytes()).map_err(io)
    }

    pub fn load(&self, id: &str) -> Result<GradingSession, StoreError> {
        let path = self.dir(id)?.join(DOCUMENT_NAME);
        let text = match std::fs::read_to_string(&path) {
            Ok(t) => t,
            Err(e) if e.kind() == std::io::ErrorKind::NotFound => return Err(StoreError::NotFound(id.to_string())),
            Err(source) => return Err(StoreError::Io { id: id.to_string(), source }),
        };
        serde_json::from_str(&text).map_err(|source| StoreError::Corrupt { id: id.to_string(), source })
    }

    /// Ids of every stored session, sorted.
    pub fn list(&self) -> std::io::Result<Vec<String>> {
        let mut ids = Vec::new();
        for entry in std::fs::read_dir(&self.root)? {
            let entry = entry?;
            let name = entry.file_name().to_string_lossy().into_owned();
            if valid_session_id(&name) && entry.path().join(DOCUMENT_NAME).is_file() {
                ids.push(name);
            }
        }
        ids.sort();
        Ok(ids)
    }
}

/// Replaces `path` with `bytes` so readers see either the old or the new
/// content, never a partial write.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> std::io::Result<()> {
    let dir = path.parent().filter(|p| !p.as_os_str().is_empty()).unwrap_or(Path::new("."));
    let mut tmp = tempfile::NamedTempFile::new_in(dir)?;
    tmp.write_all(bytes)?;
    tmp.as_file().sync_all()?;
    tmp.persist(path).map_err(|e| e.error)?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ids_are_path_safe() {
        assert!(valid_session_id("s-0123abcd"));
        for bad in ["", "../x", "a/b", "a b", "."] {
            assert!(!valid_session_id(bad), "{bad}");
        }
    }
}
