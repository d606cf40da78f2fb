use std::fmt;

use chrono::{DateTime, NaiveDate, Utc};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

use super::citation;

/// Opaque, URL-safe eprint identifier. Allocated by the store and never reused.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub struct EprintId(String);

impl EprintId {
    pub fn new(value: impl Into<String>) -> Result<Self> {
        let value = value.into();
        let url_safe = |c: char| c.is_ascii_alphanumeric() || matches!(c, '-' | '_' | '.' | '~');
        if value.is_empty() || !value.chars().all(url_safe) {
            return Err(Error::Validation(format!("eprint id {value:?} is not a non-empty URL-safe string")));
        }
        Ok(EprintId(value))
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl TryFrom<String> for EprintId {
    type Error = Error;

    fn try_from(value: String) -> Result<Self> {
        EprintId::new(value)
    }
}

impl From<EprintId> for String {
    fn from(id: EprintId) -> Self {
        id.0
    }
}

/// Shorter ids sort first, so sequential numeric ids keep numeric order.
impl Ord for EprintId {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        (self.0.len(), &self.0).cmp(&(other.0.len(), &other.0))
    }
}

impl PartialOrd for EprintId {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}

impl fmt::Display for EprintId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum VenueKind {
    JournalArticle,
    BookChapter,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct VenueRef {
    pub kind: VenueKind,
    pub container_title: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub volume: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub issue: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub chapter: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub pages: Option<String>,
}

/// Grouping identity used by the fairness monitor and venue filters.
///
/// Journal articles group by (container, volume, issue); book chapters by
/// container alone. Every component is whitespace-collapsed and case-folded.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum SourceKey {
    Issue { container: String, volume: String, issue: String },
    Book { container: String },
}

fn normalize(text: &str) -> String {
    text.split_whitespace().collect::<Vec<_>>().join(" ").to_lowercase()
}

impl SourceKey {
    pub fn issue(container: &str, volume: Option<&str>, issue: Option<&str>) -> Self {
        SourceKey::Issue {
            container: normalize(container),
            volume: normalize(volume.unwrap_or_default()),
            issue: normalize(issue.unwrap_or_default()),
        }
    }

    pub fn book(container: &str) -> Self {
        SourceKey::Book { container: normalize(container) }
    }
}

impl fmt::Display for SourceKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SourceKey::Issue { container, volume, issue } => write!(f, "{container} {volume}({issue})"),
            SourceKey::Book { container } => f.write_str(container),
        }
    }
}

impl VenueRef {
    pub fn journal(
        container_title: impl Into<String>,
        volume: Option<&str>,
        issue: Option<&str>,
        pages: Option<&str>,
    ) -> Self {
        VenueRef {
            kind: VenueKind::JournalArticle,
            container_title: container_title.into(),
            volume: volume.map(str::to_owned),
            issue: issue.map(str::to_owned),
            chapter: None,
            pages: pages.map(str::to_owned),
        }
    }

    pub fn chapter(container_title: impl Into<String>, chapter: Option<&str>, pages: Option<&str>) -> Self {
        VenueRef {
            kind: VenueKind::BookChapter,
            container_title: container_title.into(),
            volume: None,
            issue: None,
            chapter: chapter.map(str::to_owned),
            pages: pages.map(str::to_owned),
        }
    }

    pub fn source_key(&self) -> SourceKey {
        match self.kind {
            VenueKind::JournalArticle => {
                SourceKey::issue(&self.container_title, self.volume.as_deref(), self.issue.as_deref())
            }
            VenueKind::BookChapter => SourceKey::book(&self.container_title),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct EprintMetadata {
    pub title: String,
    pub creators: Vec<String>,
    pub year: i32,
    pub venue: VenueRef,
    /// Canonical citation, always derived from the other fields.
    #[serde(default)]
    pub citation_line: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub vor_identifier: Option<String>,
}

impl EprintMetadata {
    pub fn new(
        title: impl Into<String>,
        creators: Vec<String>,
        year: i32,
        venue: VenueRef,
        vor_identifier: Option<String>,
    ) -> Self {
        let mut metadata =
            EprintMetadata { title: title.into(), creators, year, venue, citation_line: String::new(), vor_identifier };
        metadata.citation_line = citation::render(&metadata);
        metadata
    }

    pub fn validate(&self) -> Result<()> {
        if self.title.trim().is_empty() {
            return Err(Error::Validation("title is empty".into()));
        }
        if self.creators.is_empty() || self.creators.iter().any(|c| c.trim().is_empty()) {
            return Err(Error::Validation("creators must be a non-empty list of names".into()));
        }
        if self.venue.container_title.trim().is_empty() {
            return Err(Error::Validation("venue container title is empty".into()));
        }
        Ok(())
    }
}

/// Access setting of a deposit. `Closed` without a date is permanent.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum AccessState {
    Open,
    Closed {
        #[serde(default)]
        embargo_until: Option<NaiveDate>,
    },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AccessKind {
    Open,
    Closed,
}

impl AccessState {
    pub fn closed() -> Self {
        AccessState::Closed { embargo_until: None }
    }

    pub fn embargoed_until(date: NaiveDate) -> Self {
        AccessState::Closed { embargo_until: Some(date) }
    }

    pub fn kind(&self) -> AccessKind {
        match self {
            AccessState::Open => AccessKind::Open,
            AccessState::Closed { .. } => AccessKind::Closed,
        }
    }

    pub fn is_open(&self) -> bool {
        matches!(self, AccessState::Open)
    }

    pub fn embargo_until(&self) -> Option<NaiveDate> {
        match self {
            AccessState::Closed { embargo_until } => *embargo_until,
            AccessState::Open => None,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Depositor {
    pub display_name: String,
    pub contact_address: String,
    pub active: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub fallback_address: Option<String>,
}

impl Depositor {
    pub fn new(display_name: impl Into<String>, contact_address: impl Into<String>) -> Self {
        Depositor {
            display_name: display_name.into(),
            contact_address: contact_address.into(),
            active: true,
            fallback_address: None,
        }
    }

    /// Where author notifications go: the depositor while active, otherwise
    /// their fallback, otherwise the repository manager.
    pub fn effective_address<'a>(&'a self, manager_address: &'a str) -> &'a str {
        if self.active {
            &self.contact_address
        } else {
            self.fallback_address.as_deref().unwrap_or(manager_address)
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct DocumentPart {
    pub label: String,
    /// Lowercase hex SHA-256 of the content.
    pub content_digest: String,
    pub byte_length: u64,
    pub media_type: String,
    pub storage_ref: String,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct AccessTransition {
    pub from: Option<AccessState>,
    pub to: AccessState,
    pub actor: String,
    pub at: DateTime<Utc>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct EprintRecord {
    pub id: EprintId,
    pub metadata: EprintMetadata,
    pub depositor: Depositor,
    pub access: AccessState,
    pub parts: Vec<DocumentPart>,
    pub deposited_at: DateTime<Utc>,
    pub access_log: Vec<AccessTransition>,
}

impl EprintRecord {
    pub fn source_key(&self) -> SourceKey {
        self.metadata.venue.source_key()
    }

    /// Replays the audit trail; equals `self.access` for every consistent record.
    pub fn replay_access(&self) -> Option<AccessState> {
        self.access_log.last().map(|t| t.to.clone())
    }

    pub fn redacted(&self) -> RedactedEprint {
        RedactedEprint {
            id: self.id.clone(),
            metadata: self.metadata.clone(),
            access: self.access.clone(),
            parts: self
                .parts
                .iter()
                .map(|p| PublicPart {
                    label: p.label.clone(),
                    media_type: p.media_type.clone(),
                    byte_length: p.byte_length,
                })
                .collect(),
            deposited_at: self.deposited_at,
        }
    }
}

/// Requester-facing projection of a record: no depositor, no storage locators.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct RedactedEprint {
    pub id: EprintId,
    pub metadata: EprintMetadata,
    pub access: AccessState,
    pub parts: Vec<PublicPart>,
    pub deposited_at: DateTime<Utc>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct PublicPart {
    pub label: String,
    pub media_type: String,
    pub byte_length: u64,
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct EprintFilter {
    pub access_kind: Option<AccessKind>,
    pub venue: Option<SourceKey>,
}

impl EprintFilter {
    pub fn matches(&self, record: &EprintRecord) -> bool {
        self.access_kind.is_none_or(|k| record.access.kind() == k)
            && self.venue.as_ref().is_none_or(|v| &record.source_key() == v)
    }
}
