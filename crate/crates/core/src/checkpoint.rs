//! Resume files for long scans: completed units keyed by prime.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{de::DeserializeOwned, Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Checkpoint<T> {
    pub kind: String,
    /// Canonical JSON of the parameters that determine the results.
    pub params: String,
    pub completed: BTreeMap<u64, T>,
}

/// A checkpoint bound to a file, or a no-op when no path was given.
#[derive(Debug)]
pub struct CheckpointFile<T> {
    path: Option<PathBuf>,
    state: Checkpoint<T>,
}

impl<T: Serialize + DeserializeOwned + Clone> CheckpointFile<T> {
    /// Loads `path` if it exists. A file written for another scan or other
    /// parameters is rejected rather than silently overwritten.
    pub fn open(path: Option<&Path>, kind: &str, params: &impl Serialize) -> Result<Self> {
        let params = serde_json::to_string(params)?;
        let fresh = Checkpoint { kind: kind.to_string(), params, completed: BTreeMap::new() };
        let Some(path) = path else {
            return Ok(CheckpointFile { path: None, state: fresh });
        };
        let state = if path.exists() {
            let loaded: Checkpoint<T> = serde_json::from_str(&fs::read_to_string(path)?)?;
            if loaded.kind != fresh.kind || loaded.params != fresh.params {
                return Err(Error::CheckpointMismatch(format!(
                    "{} holds {} {}, expected {} {}",
                    path.display(),
                    loaded.kind,
                    loaded.params,
                    fresh.kind,
                    fresh.params
                )));
            }
            loaded
        } else {
            fresh
        };
        Ok(CheckpointFile { path: Some(path.to_path_buf()), state })
    }

    pub fn get(&self, key: u64) -> Option<&T> {
        self.state.completed.get(&key)
    }

    /// Records a finished unit and rewrites the file atomically.
    pub fn complete(&mut self, key: u64, value: T) -> Result<()> {
        self.state.completed.insert(key, value);
        self.flush()
    }

    pub fn complete_many(&mut self, items: impl IntoIterator<Item = (u64, T)>) -> Result<()> {
        self.state.completed.extend(items);
        self.flush()
    }

    fn flush(&self) -> Result<()> {
        let Some(path) = &self.path else { return Ok(()) };
        let tmp = path.with_extension("tmp");
        fs::write(&tmp, serde_json::to_vec(&self.state)?)?;
        fs::rename(&tmp, path)?;
        Ok(())
    }
}
