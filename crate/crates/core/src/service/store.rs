//! JSON documents on disk, one file per session and per puzzle.

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use std::collections::HashMap;
use std::fs;
use std::io;
use std::path::{Path, PathBuf};
use std::sync::{Arc, Mutex};

use super::{CurationSession, NumberedPuzzle, ServiceError};
use crate::schema::{GenerationConfig, GenerationTrace};

pub const DATA_DIR_VAR: &str = "CRUX_DATA_DIR";

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StoredPuzzle {
    pub puzzle_id: String,
    pub session_id: String,
    pub config: GenerationConfig,
    pub puzzle: NumberedPuzzle,
    pub trace: GenerationTrace,
}

pub struct FileStore {
    root: PathBuf,
    locks: Mutex<HashMap<String, Arc<Mutex<()>>>>,
}

fn valid_id(id: &str) -> bool {
    !id.is_empty() && id.len() <= 64 && id.bytes().all(|b| b.is_ascii_alphanumeric() || b == b'-' || b == b'_')
}

impl FileStore {
    pub fn open(root: impl Into<PathBuf>) -> io::Result<Self> {
        let root = root.into();
        fs::create_dir_all(root.join("sessions"))?;
        fs::create_dir_all(root.join("puzzles"))?;
        Ok(FileStore { root, locks: Mutex::new(HashMap::new()) })
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    fn path(&self, kind: &str, id: &str) -> PathBuf {
        self.root.join(kind).join(format!("{id}.json"))
    }

    fn read<T: DeserializeOwned>(&self, kind: &str, id: &str) -> Result<Option<T>, ServiceError> {
        if !valid_id(id) {
            return Ok(None);
        }
        match fs::read(self.path(kind, id)) {
            Ok(bytes) => {
                serde_json::from_slice(&bytes).map(Some).map_err(|e| ServiceError::Storage(format!("{kind}/{id}: {e}")))
            }
            Err(e) if e.kind() == io::ErrorKind::NotFound => Ok(None),
            Err(e) => Err(ServiceError::Storage(e.to_string())),
        }
    }

    fn write<T: Serialize>(&self, kind: &str, id: &str, value: &T) -> Result<(), ServiceError> {
        let path = self.path(kind, id);
        let tmp = path.with_extension("json.tmp");
        let bytes = serde_json::to_vec_pretty(value).map_err(|e| ServiceError::Storage(e.to_string()))?;
        fs::write(&tmp, bytes).and_then(|_| fs::rename(&tmp, &path)).map_err(|e| ServiceError::Storage(e.to_string()))
    }

    fn session_lock(&self, id: &str) -> Arc<Mutex<()>> {
        self.locks.lock().expect("lock table").entry(id.to_string()).or_default().clone()
    }

    pub fn create_session(&self, session: &CurationSession) -> Result<(), ServiceError> {
        let lock = self.session_lock(&session.session_id);
        let _guard = lock.lock().expect("session lock");
        self.write("sessions", &session.session_id, session)
    }

    pub fn session(&self, id: &str) -> Result<CurationSession, ServiceError> {
        self.read("sessions", id)?.ok_or_else(|| ServiceError::UnknownSession(id.to_string()))
    }

    /// Read-modify-write of one session; writers to the same session are
    /// serialized. Nothing is written when `f` fails.
    pub fn update_session<T>(
        &self,
        id: &str,
        f: impl FnOnce(&mut CurationSession) -> Result<T, ServiceError>,
    ) -> Result<T, ServiceError> {
        let lock = self.session_lock(id);
        let _guard = lock.lock().expect("session lock");
        let mut session = self.session(id)?;
        let out = f(&mut session)?;
        self.write("sessions", id, &session)?;
        Ok(out)
    }

    pub fn save_puzzle(&self, puzzle: &StoredPuzzle) -> Result<(), ServiceError> {
        self.write("puzzles", &puzzle.puzzle_id, puzzle)
    }

    pub fn puzzle(&self, id: &str) -> Result<StoredPuzzle, ServiceError> {
        self.read("puzzles", id)?.ok_or_else(|| ServiceError::UnknownPuzzle(id.to_string()))
    }
}
