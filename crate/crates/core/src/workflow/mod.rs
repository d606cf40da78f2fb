//! Request-a-copy state machine.
//!
//! A requester asks for a Closed deposit, the depositor gets a notification
//! carrying a decision token, and the first accept or reject on that token
//! settles the request for good. Ignoring the email is not a state; it is a
//! statistical classification computed by [`classify_response`].

mod ops;
mod token;

use std::fmt;
use std::time::Duration;

use chrono::{DateTime, Utc};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fairness::FairnessAlert;
use crate::repo::EprintId;

pub use ops::{CreatedRequest, DecisionOutcome};
pub use token::{TokenGenerator, TOKEN_ENTROPY_BITS};

#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct RequestId(String);

impl RequestId {
    pub fn from_seq(seq: u64) -> Self {
        RequestId(format!("req-{seq:06}"))
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl From<&str> for RequestId {
    fn from(value: &str) -> Self {
        RequestId(value.to_owned())
    }
}

/// Shorter ids sort first, so sequential numeric ids keep numeric order.
impl Ord for RequestId {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        (self.0.len(), &self.0).cmp(&(other.0.len(), &other.0))
    }
}

impl PartialOrd for RequestId {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}

impl fmt::Display for RequestId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

/// Why the copy is wanted. The four named purposes are the fair dealing ones;
/// anything else must be spelled out.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Purpose {
    Research,
    PrivateStudy,
    Criticism,
    NewsReporting,
    Other(String),
}

impl Purpose {
    pub fn validate(&self) -> Result<()> {
        match self {
            Purpose::Other(text) if text.trim().is_empty() => {
                Err(Error::Validation("purpose \"other\" needs a description".into()))
            }
            _ => Ok(()),
        }
    }

    pub fn describe(&self) -> &str {
        match self {
            Purpose::Research => "research",
            Purpose::PrivateStudy => "private study",
            Purpose::Criticism => "criticism",
            Purpose::NewsReporting => "news reporting",
            Purpose::Other(text) => text,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "state", rename_all = "snake_case")]
pub enum Decision {
    Pending,
    Approved { at: DateTime<Utc> },
    Rejected { at: DateTime<Utc> },
}

impl Decision {
    pub fn label(&self) -> &'static str {
        match self {
            Decision::Pending => "pending",
            Decision::Approved { .. } => "approved",
            Decision::Rejected { .. } => "rejected",
        }
    }

    pub fn is_pending(&self) -> bool {
        matches!(self, Decision::Pending)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Action {
    Accept,
    Reject,
}

impl Action {
    pub fn decision(self, at: DateTime<Utc>) -> Decision {
        match self {
            Action::Accept => Decision::Approved { at },
            Action::Reject => Decision::Rejected { at },
        }
    }

    /// Whether `decision` is what this action would have recorded.
    pub fn matches(self, decision: &Decision) -> bool {
        matches!(
            (self, decision),
            (Action::Accept, Decision::Approved { .. }) | (Action::Reject, Decision::Rejected { .. })
        )
    }
}

impl std::str::FromStr for Action {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "accept" => Ok(Action::Accept),
            "reject" => Ok(Action::Reject),
            other => Err(Error::Validation(format!("unknown action {other:?}"))),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct CopyRequest {
    pub id: RequestId,
    pub eprint_id: EprintId,
    pub requester_address: String,
    pub purpose: Purpose,
    pub attested: bool,
    pub created_at: DateTime<Utc>,
    pub decision: Decision,
    #[serde(default)]
    pub alerts_at_creation: Vec<FairnessAlert>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct DecisionToken {
    pub value: String,
    pub request_id: RequestId,
    pub issued_at: DateTime<Utc>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ResponseClass {
    Approved,
    Rejected,
    Unanswered,
    FreshPending,
}

/// Statistical reading of a request at `now`. A pending request becomes
/// `Unanswered` once it is strictly older than `ignore_window`; it can still
/// be decided afterwards.
pub fn classify_response(request: &CopyRequest, now: DateTime<Utc>, ignore_window: Duration) -> ResponseClass {
    match request.decision {
        Decision::Approved { .. } => ResponseClass::Approved,
        Decision::Rejected { .. } => ResponseClass::Rejected,
        Decision::Pending => {
            let age = now.signed_duration_since(request.created_at);
            let window = chrono::Duration::from_std(ignore_window).unwrap_or(chrono::Duration::MAX);
            if age > window {
                ResponseClass::Unanswered
            } else {
                ResponseClass::FreshPending
            }
        }
    }
}

pub fn validate_address(address: &str) -> Result<()> {
    let plausible = !address.chars().any(char::is_whitespace)
        && address.parse::<email_address::EmailAddress>().is_ok()
        && address.rsplit_once('@').is_some_and(|(_, domain)| !domain.is_empty());
    if plausible {
        Ok(())
    } else {
        Err(Error::InvalidAddress(address.to_owned()))
    }
}

/// Identity used when grouping a requester's history: the address with its
/// domain part case-folded.
pub fn requester_key(address: &str) -> String {
    match address.rsplit_once('@') {
        Some((local, domain)) => format!("{local}@{}", domain.to_lowercase()),
        None => address.to_owned(),
    }
}
