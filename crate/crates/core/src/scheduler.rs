//! Embargo expiry: Closed deposits with an expiry date become Open on that
//! date, with nobody in the loop.

use std::collections::{BTreeSet, HashMap};
use std::fmt;
use std::str::FromStr;

use chrono::{DateTime, FixedOffset, NaiveDate, Utc};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::repo::{AccessState, EprintId, Store, ACTOR_SCHEDULER};

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct EmbargoEntry {
    pub eprint_id: EprintId,
    pub expiry: NaiveDate,
}

/// At most one entry per eprint, ordered by (expiry, id).
#[derive(Debug, Default)]
pub(crate) struct EmbargoIndex {
    by_date: BTreeSet<(NaiveDate, EprintId)>,
    by_id: HashMap<EprintId, NaiveDate>,
}

impl EmbargoIndex {
    pub(crate) fn sync(&mut self, id: &EprintId, access: &AccessState) {
        if let Some(old) = self.by_id.remove(id) {
            self.by_date.remove(&(old, id.clone()));
        }
        if let Some(expiry) = access.embargo_until() {
            self.by_id.insert(id.clone(), expiry);
            self.by_date.insert((expiry, id.clone()));
        }
    }

    pub(crate) fn due(&self, date: NaiveDate) -> Vec<EmbargoEntry> {
        self.by_date
            .iter()
            .take_while(|(expiry, _)| *expiry <= date)
            .map(|(expiry, id)| EmbargoEntry { eprint_id: id.clone(), expiry: *expiry })
            .collect()
    }

    pub(crate) fn entries(&self) -> Vec<EmbargoEntry> {
        self.by_date.iter().map(|(expiry, id)| EmbargoEntry { eprint_id: id.clone(), expiry: *expiry }).collect()
    }
}

/// The repository's civil time zone, as a fixed UTC offset.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct RepoTimeZone(FixedOffset);

impl RepoTimeZone {
    pub fn utc() -> Self {
        RepoTimeZone(FixedOffset::east_opt(0).expect("zero offset"))
    }

    pub fn from_offset(offset: FixedOffset) -> Self {
        RepoTimeZone(offset)
    }

    pub fn local_date(&self, now: DateTime<Utc>) -> NaiveDate {
        now.with_timezone(&self.0).date_naive()
    }
}

impl Default for RepoTimeZone {
    fn default() -> Self {
        RepoTimeZone::utc()
    }
}

impl FromStr for RepoTimeZone {
    type Err = Error;

    /// Accepts `UTC`, `Z`, or an offset such as `+10:00` / `-0330`.
    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        if s.eq_ignore_ascii_case("utc") || s == "Z" {
            return Ok(RepoTimeZone::utc());
        }
        let bad = || Error::Config(format!("bad time zone offset {s:?}"));
        let (sign, rest) = match s.as_bytes().first() {
            Some(b'+') => (1, &s[1..]),
            Some(b'-') => (-1, &s[1..]),
            _ => return Err(bad()),
        };
        let digits: String = rest.chars().filter(|c| *c != ':').collect();
        if digits.len() != 4 || !digits.chars().all(|c| c.is_ascii_digit()) {
            return Err(bad());
        }
        let hours: i32 = digits[..2].parse().map_err(|_| bad())?;
        let minutes: i32 = digits[2..].parse().map_err(|_| bad())?;
        FixedOffset::east_opt(sign * (hours * 3600 + minutes * 60)).map(RepoTimeZone).ok_or_else(bad)
    }
}

impl fmt::Display for RepoTimeZone {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// Opens every Closed deposit whose expiry is on or before the local date of
/// `now`. Returns the flipped ids in (expiry, id) order. Records that changed
/// under us (another tick, an administrator) are skipped, not reported.
pub fn run_due_embargoes(store: &Store, now: DateTime<Utc>, zone: RepoTimeZone) -> Result<Vec<EprintId>> {
    let today = zone.local_date(now);
    let mut flipped = Vec::new();
    for entry in store.due_embargoes(today) {
        let expected = AccessState::embargoed_until(entry.expiry);
        match store.compare_and_set_access(&entry.eprint_id, &expected, AccessState::Open, ACTOR_SCHEDULER, now)? {
            Some(_) => flipped.push(entry.eprint_id),
            None => tracing::debug!(eprint = %entry.eprint_id, "embargo entry changed before flip"),
        }
    }
    if !flipped.is_empty() {
        tracing::info!(count = flipped.len(), %today, "embargoes expired");
    }
    Ok(flipped)
}
