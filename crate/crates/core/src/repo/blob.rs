//! Content-addressed storage for document bytes.

use std::collections::HashMap;
use std::fs;
use std::path::PathBuf;

use parking_lot::RwLock;
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};

use super::model::DocumentPart;

pub fn digest_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

pub trait BlobStore: Send + Sync {
    /// Stores `bytes` and returns the locator to fetch them again.
    fn put(&self, bytes: &[u8]) -> Result<String>;
    fn get(&self, storage_ref: &str) -> Result<Vec<u8>>;
}

#[derive(Default)]
pub struct MemoryBlobs {
    blobs: RwLock<HashMap<String, Vec<u8>>>,
}

impl BlobStore for MemoryBlobs {
    fn put(&self, bytes: &[u8]) -> Result<String> {
        let key = format!("mem:{}", digest_hex(bytes));
        self.blobs.write().entry(key.clone()).or_insert_with(|| bytes.to_vec());
        Ok(key)
    }

    fn get(&self, storage_ref: &str) -> Result<Vec<u8>> {
        self.blobs.read().get(storage_ref).cloned().ok_or_else(|| Error::Storage(format!("missing blob {storage_ref}")))
    }
}

/// One file per distinct content, named by its SHA-256.
pub struct DirBlobs {
    root: PathBuf,
}

impl DirBlobs {
    pub fn open(root: impl Into<PathBuf>) -> Result<Self> {
        let root = root.into();
        fs::create_dir_all(&root)?;
        Ok(DirBlobs { root })
    }
}

impl BlobStore for DirBlobs {
    fn put(&self, bytes: &[u8]) -> Result<String> {
        let digest = digest_hex(bytes);
        let path = self.root.join(&digest);
        if !path.exists() {
            let tmp = self.root.join(format!(".{digest}.tmp"));
            fs::write(&tmp, bytes)?;
            fs::rename(&tmp, &path)?;
        }
        Ok(format!("blob:{digest}"))
    }

    fn get(&self, storage_ref: &str) -> Result<Vec<u8>> {
        let digest = storage_ref
            .strip_prefix("blob:")
            .filter(|d| d.len() == 64 && d.chars().all(|c| c.is_ascii_hexdigit()))
            .ok_or_else(|| Error::Storage(format!("bad storage ref {storage_ref}")))?;
        Ok(fs::read(self.root.join(digest))?)
    }
}

impl DocumentPart {
    /// Stores `bytes` and describes them as a document part.
    pub fn store(
        blobs: &dyn BlobStore,
        label: impl Into<String>,
        media_type: impl Into<String>,
        bytes: &[u8],
    ) -> Result<Self> {
        if bytes.is_empty() {
            return Err(Error::Validation("document part is empty".into()));
        }
        Ok(DocumentPart {
            label: label.into(),
            content_digest: digest_hex(bytes),
            byte_length: bytes.len() as u64,
            media_type: media_type.into(),
            storage_ref: blobs.put(bytes)?,
        })
    }
}
