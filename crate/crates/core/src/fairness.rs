//! Fair dealing monitor.
//!
//! Looks for the two patterns that could push request-a-copy beyond fair
//! dealing: one reader collecting several articles of a journal issue (or
//! chapters of a book), and one article being supplied many times over in a
//! short period. Findings are advisory. Nothing here can refuse a request or
//! change a decision; the alerts are appended to the author's notification
//! and listed for repository managers.

use std::collections::{BTreeMap, BTreeSet};
use std::time::Duration;

use chrono::{DateTime, Utc};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::par;
use crate::repo::{EprintId, SourceKey};
use crate::workflow::{requester_key, CopyRequest, Decision, RequestId};

const DAY: Duration = Duration::from_secs(86_400);

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum JurisdictionName {
    #[serde(rename = "AU")]
    Au,
    #[serde(rename = "CA")]
    Ca,
    #[serde(rename = "UK")]
    Uk,
    #[serde(rename = "US")]
    Us,
    #[serde(rename = "custom")]
    Custom,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct JurisdictionProfile {
    pub name: JurisdictionName,
    /// Statement the requester assents to on the request form.
    pub attestation_text: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub deemed_fair_same_issue_limit: Option<u32>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub deemed_fair_same_book_limit: Option<u32>,
    #[serde(default = "default_threshold")]
    pub high_volume_threshold: u32,
    #[serde(with = "humantime_serde", default = "default_window")]
    pub high_volume_window: Duration,
    #[serde(with = "humantime_serde", default = "default_window")]
    pub same_source_window: Duration,
}

fn default_threshold() -> u32 {
    10
}

fn default_window() -> Duration {
    30 * DAY
}

/// Same-source limit applied when a profile does not set one: more than one
/// article per issue (or chapter per book) is flagged.
pub const DEFAULT_SAME_SOURCE_LIMIT: u32 = 1;

impl JurisdictionProfile {
    pub fn australia() -> Self {
        JurisdictionProfile {
            name: JurisdictionName::Au,
            attestation_text: "I will use this copy only for research or study, or for criticism, review or news reporting, as permitted by the Copyright Act 1968.".into(),
            deemed_fair_same_issue_limit: Some(1),
            deemed_fair_same_book_limit: Some(1),
            high_volume_threshold: default_threshold(),
            high_volume_window: default_window(),
            same_source_window: default_window(),
        }
    }

    pub fn canada() -> Self {
        JurisdictionProfile {
            name: JurisdictionName::Ca,
            attestation_text: "I will use this copy for the purpose of research, private study, criticism or news reporting, or for another use allowed by the Law.".into(),
            ..JurisdictionProfile::australia_defaults()
        }
    }

    pub fn united_kingdom() -> Self {
        JurisdictionProfile {
            name: JurisdictionName::Uk,
            attestation_text: "I will use this copy only for non-commercial research, private study, criticism, review or news reporting, as permitted by fair dealing.".into(),
            ..JurisdictionProfile::australia_defaults()
        }
    }

    pub fn united_states() -> Self {
        JurisdictionProfile {
            name: JurisdictionName::Us,
            attestation_text: "I will use this copy only for purposes such as criticism, comment, news reporting, teaching, scholarship or research, as permitted by fair use.".into(),
            ..JurisdictionProfile::australia_defaults()
        }
    }

    fn australia_defaults() -> Self {
        JurisdictionProfile {
            deemed_fair_same_issue_limit: None,
            deemed_fair_same_book_limit: None,
            ..JurisdictionProfile::australia()
        }
    }

    pub fn builtin(name: JurisdictionName) -> Option<Self> {
        match name {
            JurisdictionName::Au => Some(Self::australia()),
            JurisdictionName::Ca => Some(Self::canada()),
            JurisdictionName::Uk => Some(Self::united_kingdom()),
            JurisdictionName::Us => Some(Self::united_states()),
            JurisdictionName::Custom => None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let limits = [
            self.deemed_fair_same_issue_limit.unwrap_or(1),
            self.deemed_fair_same_book_limit.unwrap_or(1),
            self.high_volume_threshold,
        ];
        if limits.contains(&0) {
            return Err(Error::Config("fairness thresholds must be at least 1".into()));
        }
        if self.high_volume_window.is_zero() || self.same_source_window.is_zero() {
            return Err(Error::Config("fairness windows must be positive".into()));
        }
        if self.attestation_text.trim().is_empty() {
            return Err(Error::Config("attestation text is empty".into()));
        }
        Ok(())
    }

    fn same_source_limit(&self, key: &SourceKey) -> u32 {
        match key {
            SourceKey::Issue { .. } => self.deemed_fair_same_issue_limit,
            SourceKey::Book { .. } => self.deemed_fair_same_book_limit,
        }
        .unwrap_or(DEFAULT_SAME_SOURCE_LIMIT)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum AlertKind {
    HighVolumeSameArticle,
    SameIssueMultiRequest,
    SameBookMultiRequest,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct FairnessAlert {
    pub kind: AlertKind,
    pub eprint_id: EprintId,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub requester_address: Option<String>,
    pub evidence: Vec<RequestId>,
    #[serde(with = "humantime_serde")]
    pub window: Duration,
    pub message: String,
}

/// What the monitor needs to know about one request.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct HistoryEntry {
    pub request_id: RequestId,
    pub eprint_id: EprintId,
    pub requester_address: String,
    pub source: SourceKey,
    /// Human-readable venue, used in alert messages.
    pub source_label: String,
    pub created_at: DateTime<Utc>,
    pub decision: Decision,
}

impl HistoryEntry {
    pub fn from_request(request: &CopyRequest, source: SourceKey, source_label: impl Into<String>) -> Self {
        HistoryEntry {
            request_id: request.id.clone(),
            eprint_id: request.eprint_id.clone(),
            requester_address: request.requester_address.clone(),
            source,
            source_label: source_label.into(),
            created_at: request.created_at,
            decision: request.decision.clone(),
        }
    }
}

fn within(at: DateTime<Utc>, now: DateTime<Utc>, window: Duration) -> bool {
    let window = chrono::Duration::from_std(window).unwrap_or(chrono::Duration::MAX);
    at <= now && now.signed_duration_since(at) <= window
}

pub fn describe_window(window: Duration) -> String {
    let secs = window.as_secs();
    match secs {
        s if s > 0 && s % 86_400 == 0 && s / 86_400 == 1 => "1 day".into(),
        s if s > 0 && s % 86_400 == 0 => format!("{} days", s / 86_400),
        _ => humantime::format_duration(window).to_string(),
    }
}

/// Same-issue and same-book patterns for a request about to be stored.
///
/// Counts the distinct eprints sharing the candidate's issue (or book)
/// identity among the same requester's requests created within
/// `same_source_window` of `now`, candidate included, in any decision state.
/// More than the profile's deemed-fair limit raises one alert whose evidence
/// is every contributing request.
pub fn evaluate_request(
    candidate: &HistoryEntry,
    history: &[HistoryEntry],
    profile: &JurisdictionProfile,
    now: DateTime<Utc>,
) -> Vec<FairnessAlert> {
    let who = requester_key(&candidate.requester_address);
    let window = profile.same_source_window;

    let mut contributing: Vec<&HistoryEntry> = history
        .iter()
        .filter(|h| h.request_id != candidate.request_id)
        .filter(|h| h.source == candidate.source)
        .filter(|h| within(h.created_at, now, window))
        .filter(|h| requester_key(&h.requester_address) == who)
        .collect();
    contributing.push(candidate);

    let distinct: BTreeSet<&EprintId> = contributing.iter().map(|h| &h.eprint_id).collect();
    let limit = profile.same_source_limit(&candidate.source);
    if distinct.len() as u64 <= u64::from(limit) {
        return Vec::new();
    }

    contributing.sort_by(|a, b| a.created_at.cmp(&b.created_at).then_with(|| a.request_id.cmp(&b.request_id)));
    let (kind, what, container) = match candidate.source {
        SourceKey::Issue { .. } => (AlertKind::SameIssueMultiRequest, "articles", "journal issue"),
        SourceKey::Book { .. } => (AlertKind::SameBookMultiRequest, "chapters", "book"),
    };
    let message = format!(
        "Advisory only: {} has requested {} different {what} from the same {container} ({}) within {}. \
         Supplying more than {limit} of them may exceed fair dealing. The request has not been blocked.",
        candidate.requester_address,
        distinct.len(),
        candidate.source_label,
        describe_window(window),
    );
    vec![FairnessAlert {
        kind,
        eprint_id: candidate.eprint_id.clone(),
        requester_address: Some(candidate.requester_address.clone()),
        evidence: contributing.into_iter().map(|h| h.request_id.clone()).collect(),
        window,
        message,
    }]
}

/// Articles whose approved-request count within `high_volume_window` of
/// `now` reaches the profile threshold, ordered by eprint id.
pub fn scan_accepted_volume(
    history: &[HistoryEntry],
    profile: &JurisdictionProfile,
    now: DateTime<Utc>,
) -> Vec<FairnessAlert> {
    let window = profile.high_volume_window;
    let approved = par::filter_map(history, |h| match h.decision {
        Decision::Approved { at } if within(at, now, window) => Some((h.eprint_id.clone(), at, h.request_id.clone())),
        _ => None,
    });

    let mut by_eprint: BTreeMap<EprintId, Vec<(DateTime<Utc>, RequestId)>> = BTreeMap::new();
    for (eprint, at, request) in approved {
        by_eprint.entry(eprint).or_default().push((at, request));
    }

    by_eprint
        .into_iter()
        .filter(|(_, approvals)| approvals.len() as u64 >= u64::from(profile.high_volume_threshold))
        .map(|(eprint_id, mut approvals)| {
            approvals.sort();
            FairnessAlert {
                kind: AlertKind::HighVolumeSameArticle,
                message: format!(
                    "Advisory only: {} requests for this document were approved within {}. \
                     Accepting a large number of requests for the same document in a short period may exceed fair dealing. \
                     No request has been blocked.",
                    approvals.len(),
                    describe_window(window),
                ),
                eprint_id,
                requester_address: None,
                evidence: approvals.into_iter().map(|(_, id)| id).collect(),
                window,
            }
        })
        .collect()
}
