//! Single-directory JSON store: one file per record, replaced atomically.

use std::fs;
use std::io;
use std::path::{Path, PathBuf};
use std::sync::Mutex;

use serde::de::DeserializeOwned;
use serde::Serialize;

use crate::files::{to_json_bytes, write_atomic};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Collection {
    Scenarios,
    Jobs,
}

impl Collection {
    fn dir(self) -> &'static str {
        match self {
            Collection::Scenarios => "scenarios",
            Collection::Jobs => "jobs",
        }
    }

    fn prefix(self) -> &'static str {
        match self {
            Collection::Scenarios => "s",
            Collection::Jobs => "j",
        }
    }
}

#[derive(Debug)]
pub struct Store {
    root: PathBuf,
    /// Serializes writes and id allocation.
    write: Mutex<()>,
}

/// Ids are restricted to `[A-Za-z0-9_-]` so they are always plain file names.
pub fn valid_id(id: &str) -> bool {
    !id.is_empty() && id.len() <= 64 && id.bytes().all(|b| b.is_ascii_alphanumeric() || b == b'-' || b == b'_')
}

impl Store {
    pub fn open(root: impl Into<PathBuf>) -> io::Result<Self> {
        let root = root.into();
        for c in [Collection::Scenarios, Collection::Jobs] {
            fs::create_dir_all(root.join(c.dir()))?;
        }
        Ok(Self {
            root,
            write: Mutex::new(()),
        })
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    fn path(&self, c: Collection, id: &str) -> PathBuf {
        self.root.join(c.dir()).join(format!("{id}.json"))
    }

    pub fn put<T: Serialize>(&self, c: Collection, id: &str, value: &T) -> io::Result<()> {
        assert!(valid_id(id), "invalid store id {id:?}");
        let bytes = to_json_bytes(value);
        let _guard = self.write.lock().unwrap_or_else(|e| e.into_inner());
        write_atomic(&self.path(c, id), &bytes)
    }

    pub fn get<T: DeserializeOwned>(&self, c: Collection, id: &str) -> io::Result<Option<T>> {
        if !valid_id(id) {
            return Ok(None);
        }
        match fs::read(self.path(c, id)) {
            Ok(bytes) => serde_json::from_slice(&bytes).map(Some).map_err(io::Error::other),
            Err(e) if e.kind() == io::ErrorKind::NotFound => Ok(None),
            Err(e) => Err(e),
        }
    }

    /// Every record of the collection, ordered by id.
    pub fn list<T: DeserializeOwned>(&self, c: Collection) -> io::Result<Vec<(String, T)>> {
        let mut out = Vec::new();
        for id in self.ids(c)? {
            if let Some(v) = self.get(c, &id)? {
                out.push((id, v));
            }
        }
        Ok(out)
    }

    fn ids(&self, c: Collection) -> io::Result<Vec<String>> {
        let mut ids: Vec<String> = fs::read_dir(self.root.join(c.dir()))?
            .filter_map(|e| e.ok())
            .filter_map(|e| e.file_name().to_str().map(str::to_owned))
            .filter_map(|n| n.strip_suffix(".json").map(str::to_owned))
            .filter(|id| valid_id(id))
            .collect();
        ids.sort();
        Ok(ids)
    }

    /// Allocates a fresh id and stores `make(id)` under it.
    pub fn insert<T: Serialize>(&self, c: Collection, make: impl FnOnce(&str) -> T) -> io::Result<(String, T)> {
        let _guard = self.write.lock().unwrap_or_else(|e| e.into_inner());
        let next = self
            .ids(c)?
            .iter()
            .filter_map(|id| id.strip_prefix(c.prefix())?.parse::<u64>().ok())
            .max()
            .map_or(1, |n| n + 1);
        let id = format!("{}{next:06}", c.prefix());
        let value = make(&id);
        write_atomic(&self.path(c, &id), &to_json_bytes(&value))?;
        Ok((id, value))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn records_round_trip_and_ids_increase() {
        let dir = tempfile::tempdir().unwrap();
        let store = Store::open(dir.path()).unwrap();
        let (a, _) = store.insert(Collection::Jobs, |id| id.to_owned()).unwrap();
        let (b, _) = store.insert(Collection::Jobs, |id| id.to_owned()).unwrap();
        assert!(a < b);
        assert_eq!(store.get::<String>(Collection::Jobs, &b).unwrap(), Some(b.clone()));
        store.put(Collection::Scenarios, "preset-a", &vec![1, 2]).unwrap();
        let reopened = Store::open(dir.path()).unwrap();
        assert_eq!(
            reopened.list::<Vec<u8>>(Collection::Scenarios).unwrap(),
            [("preset-a".to_owned(), vec![1, 2])]
        );
        assert_eq!(reopened.list::<String>(Collection::Jobs).unwrap().len(), 2);
    }

    #[test]
    fn path_like_ids_are_never_read() {
        let dir = tempfile::tempdir().unwrap();
        let store = Store::open(dir.path()).unwrap();
        assert!(!valid_id("../x"));
        assert!(!valid_id(""));
        assert_eq!(store.get::<String>(Collection::Jobs, "../jobs/x").unwrap(), None);
    }
}
