use std::collections::BTreeMap;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::sync::Mutex;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::ServiceError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ArtifactKind {
    /// The deployment archive as submitted.
    Original,
    /// The accepted translation.
    Translated,
    /// The submitted test suite, normalized into a test archive.
    Tests,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ArtifactStoreRecord {
    pub job_id: String,
    pub kind: ArtifactKind,
    pub archive: Vec<u8>,
    /// Lowercase hex SHA-256 of `archive`.
    pub content_digest: String,
}

pub fn digest(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

/// Writes `bytes` to `path` through a temporary file in the same directory
/// and a rename, so readers never see a partial file.
pub(crate) fn write_atomic(path: &Path, bytes: &[u8]) -> std::io::Result<()> {
    let dir = path.parent().unwrap_or(Path::new("."));
    fs::create_dir_all(dir)?;
    let mut tmp = tempfile::NamedTempFile::new_in(dir)?;
    tmp.write_all(bytes)?;
    tmp.as_file().sync_all()?;
    tmp.persist(path).map_err(|e| e.error)?;
    Ok(())
}

type Index = BTreeMap<String, BTreeMap<ArtifactKind, String>>;

/// Content-addressed blob directory plus an `index.json` mapping
/// `(job, kind)` to digests.
pub struct ArtifactStore {
    root: PathBuf,
    index: Mutex<Index>,
}

impl ArtifactStore {
    pub fn open(root: &Path) -> Result<Self, ServiceError> {
        fs::create_dir_all(root.join("blobs"))?;
        let index_path = root.join("index.json");
        let index = match fs::read(&index_path) {
            Ok(bytes) => serde_json::from_slice(&bytes)
                .map_err(|e| ServiceError::Store(format!("{}: {e}", index_path.display())))?,
            Err(e) if e.kind() == std::io::ErrorKind::NotFound => Index::new(),
            Err(e) => return Err(e.into()),
        };
        Ok(Self {
            root: root.to_path_buf(),
            index: Mutex::new(index),
        })
    }

    fn blob_path(&self, digest: &str) -> PathBuf {
        self.root.join("blobs").join(&digest[..2]).join(digest)
    }

    fn save_index(&self, index: &Index) -> Result<(), ServiceError> {
        let bytes =
            serde_json::to_vec_pretty(index).map_err(|e| ServiceError::Store(e.to_string()))?;
        write_atomic(&self.root.join("index.json"), &bytes)?;
        Ok(())
    }

    /// Stores `archive` for `job_id`. A job holds at most one record per
    /// kind; storing different bytes under an existing record is an error.
    pub fn put(
        &self,
        job_id: &str,
        kind: ArtifactKind,
        archive: &[u8],
    ) -> Result<String, ServiceError> {
        let d = digest(archive);
        let mut index = self.index.lock().unwrap();
        if let Some(existing) = index.get(job_id).and_then(|k| k.get(&kind)) {
            if *existing == d {
                return Ok(d);
            }
            return Err(ServiceError::Store(format!(
                "job {job_id} already has a {kind:?} artifact"
            )));
        }
        let path = self.blob_path(&d);
        if !path.exists() {
            write_atomic(&path, archive)?;
        }
        index
            .entry(job_id.to_string())
            .or_default()
            .insert(kind, d.clone());
        self.save_index(&index)?;
        Ok(d)
    }

    /// Reads a record back, verifying its digest.
    pub fn get(
        &self,
        job_id: &str,
        kind: ArtifactKind,
    ) -> Result<Option<ArtifactStoreRecord>, ServiceError> {
        let Some(d) = self.digest_of(job_id, kind) else {
            return Ok(None);
        };
        let archive = fs::read(self.blob_path(&d))?;
        if digest(&archive) != d {
            return Err(ServiceError::Store(format!("blob {d} is corrupt")));
        }
        Ok(Some(ArtifactStoreRecord {
            job_id: job_id.to_string(),
            kind,
            archive,
            content_digest: d,
        }))
    }

    pub fn digest_of(&self, job_id: &str, kind: ArtifactKind) -> Option<String> {
        self.index
            .lock()
            .unwrap()
            .get(job_id)
            .and_then(|k| k.get(&kind))
            .cloned()
    }

    /// Drops the index entries of a job. Blobs stay, they may be shared.
    pub fn forget(&self, job_id: &str) -> Result<(), ServiceError> {
        let mut index = self.index.lock().unwrap();
        if index.remove(job_id).is_some() {
            self.save_index(&index)?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn records_survive_reopen() {
        let dir = tempfile::tempdir().unwrap();
        let d = {
            let s = ArtifactStore::open(dir.path()).unwrap();
            s.put("j1", ArtifactKind::Original, b"zip bytes").unwrap()
        };
        let s = ArtifactStore::open(dir.path()).unwrap();
        let r = s.get("j1", ArtifactKind::Original).unwrap().unwrap();
        assert_eq!(r.archive, b"zip bytes");
        assert_eq!(r.content_digest, d);
        assert_eq!(d, digest(b"zip bytes"));
        assert!(s.get("j1", ArtifactKind::Translated).unwrap().is_none());
    }

    #[test]
    fn one_translated_record_per_job() {
        let dir = tempfile::tempdir().unwrap();
        let s = ArtifactStore::open(dir.path()).unwrap();
        s.put("j", ArtifactKind::Translated, b"a").unwrap();
        s.put("j", ArtifactKind::Translated, b"a").unwrap();
        assert!(s.put("j", ArtifactKind::Translated, b"b").is_err());
    }

    #[test]
    fn corruption_is_detected() {
        let dir = tempfile::tempdir().unwrap();
        let s = ArtifactStore::open(dir.path()).unwrap();
        let d = s.put("j", ArtifactKind::Original, b"abc").unwrap();
        fs::write(s.blob_path(&d), b"abd").unwrap();
        assert!(matches!(
            s.get("j", ArtifactKind::Original),
            Err(ServiceError::Store(_))
        ));
    }

    #[test]
    fn identical_archives_share_a_blob() {
        let dir = tempfile::tempdir().unwrap();
        let s = ArtifactStore::open(dir.path()).unwrap();
        s.put("a", ArtifactKind::Original, b"same").unwrap();
        s.put("b", ArtifactKind::Original, b"same").unwrap();
        s.forget("a").unwrap();
        assert!(s.get("a", ArtifactKind::Original).unwrap().is_none());
        assert_eq!(
            s.get("b", ArtifactKind::Original).unwrap().unwrap().archive,
            b"same"
        );
    }
}
