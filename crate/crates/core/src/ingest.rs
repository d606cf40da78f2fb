//! Batch deposit from a JSON-lines file, one eprint per line:
//!
//! ```json
//! {"title": "...", "creators": ["Gömann, Anissa"], "year": 2009,
//!  "venue": {"kind": "journal_article", "container_title": "Tetrahedron", "volume": "65", "issue": "7", "pages": "1450-1454"},
//!  "access": "closed", "embargo_until": "2010-01-01",
//!  "depositor": {"name": "Gömann, Anissa", "email": "a.gomann@uqam.ca", "active": true},
//!  "documents": ["files/gomann2009.pdf"]}
//! ```
//!
//! Document paths are relative to the ingestion file. Bad lines are reported
//! and skipped; good lines are deposited regardless.

use std::collections::HashMap;
use std::path::{Path, PathBuf};

use chrono::{DateTime, NaiveDate, Utc};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::repo::{AccessState, Depositor, DocumentPart, EprintId, EprintMetadata, VenueRef};
use crate::service::Repository;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum IngestAccess {
    Open,
    Closed,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct IngestDepositor {
    pub name: String,
    pub email: String,
    #[serde(default = "yes")]
    pub active: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub fallback_email: Option<String>,
}

fn yes() -> bool {
    true
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct IngestRecord {
    pub title: String,
    pub creators: Vec<String>,
    pub year: i32,
    pub venue: VenueRef,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub vor_identifier: Option<String>,
    pub access: IngestAccess,
    /// ISO-8601 date; empty or absent means no expiry.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub embargo_until: Option<String>,
    pub depositor: IngestDepositor,
    pub documents: Vec<PathBuf>,
}

impl IngestRecord {
    fn access_state(&self) -> Result<AccessState> {
        let embargo = match self.embargo_until.as_deref().map(str::trim) {
            None | Some("") => None,
            Some(text) => Some(
                NaiveDate::parse_from_str(text, "%Y-%m-%d")
                    .map_err(|e| Error::Validation(format!("embargo_until {text:?}: {e}")))?,
            ),
        };
        match (self.access, embargo) {
            (IngestAccess::Open, None) => Ok(AccessState::Open),
            (IngestAccess::Open, Some(_)) => {
                Err(Error::Validation("an open deposit cannot carry an embargo date".into()))
            }
            (IngestAccess::Closed, embargo_until) => Ok(AccessState::Closed { embargo_until }),
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize)]
pub struct IngestReport {
    pub deposited: Vec<EprintId>,
    /// (1-based line number, message)
    pub errors: Vec<(usize, String)>,
}

impl IngestReport {
    pub fn is_clean(&self) -> bool {
        self.errors.is_empty()
    }
}

pub fn ingest_file(repo: &Repository, path: &Path, now: DateTime<Utc>) -> Result<IngestReport> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::Storage(format!("{}: {e}", path.display())))?;
    let base = path.parent().unwrap_or(Path::new("."));
    Ok(ingest_str(repo, &text, base, now))
}

pub fn ingest_str(repo: &Repository, text: &str, base: &Path, now: DateTime<Utc>) -> IngestReport {
    let mut report = IngestReport::default();
    let mut parts_cache: HashMap<PathBuf, DocumentPart> = HashMap::new();
    for (index, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        match ingest_line(repo, line, base, now, &mut parts_cache) {
            Ok(id) => report.deposited.push(id),
            Err(err) => {
                tracing::warn!(line = index + 1, %err, "ingest line rejected");
                report.errors.push((index + 1, err.to_string()));
            }
        }
    }
    report
}

fn ingest_line(
    repo: &Repository,
    line: &str,
    base: &Path,
    now: DateTime<Utc>,
    cache: &mut HashMap<PathBuf, DocumentPart>,
) -> Result<EprintId> {
    let record: IngestRecord = serde_json::from_str(line).map_err(|e| Error::Validation(e.to_string()))?;
    let access = record.access_state()?;
    let mut parts = Vec::with_capacity(record.documents.len());
    for doc in &record.documents {
        let path = base.join(doc);
        let part = match cache.get(&path) {
            Some(part) => part.clone(),
            None => {
                let bytes = std::fs::read(&path).map_err(|e| Error::Validation(format!("{}: {e}", path.display())))?;
                let label =
                    doc.file_name().map(|n| n.to_string_lossy().into_owned()).unwrap_or_else(|| "document".into());
                let media_type = mime_guess::from_path(&path).first_or_octet_stream().essence_str().to_owned();
                let part = DocumentPart::store(repo.store().blobs(), label, media_type, &bytes)?;
                cache.insert(path, part.clone());
                part
            }
        };
        parts.push(part);
    }
    let metadata = EprintMetadata::new(record.title, record.creators, record.year, record.venue, record.vor_identifier);
    let depositor = Depositor {
        display_name: record.depositor.name,
        contact_address: record.depositor.email,
        active: record.depositor.active,
        fallback_address: record.depositor.fallback_email,
    };
    repo.deposit_eprint(metadata, depositor, parts, access, now)
}
