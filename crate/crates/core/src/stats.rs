//! Usage tables: author responses to requests, and the Closed Access share
//! of a repository.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::time::Duration;

use chrono::{DateTime, Utc};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fairness::describe_window;
use crate::par;
use crate::repo::EprintRecord;
use crate::service::Repository;
use crate::workflow::{classify_response, CopyRequest, ResponseClass};

pub const ROW_APPROVED: &str = "Approved";
pub const ROW_UNANSWERED: &str = "Ignored / unanswered";
pub const ROW_REJECTED: &str = "Rejected / denied";

/// Half-open interval `[start, end)` over request creation times.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Period {
    pub start: DateTime<Utc>,
    pub end: DateTime<Utc>,
}

impl Period {
    pub fn new(start: DateTime<Utc>, end: DateTime<Utc>) -> Result<Self> {
        if start > end {
            return Err(Error::InvalidPeriod);
        }
        Ok(Period { start, end })
    }

    pub fn contains(&self, at: DateTime<Utc>) -> bool {
        self.start <= at && at < self.end
    }
}

/// Integer percentage for a table cell.
///
/// Half-up rounding, except that any positive share below one percent is
/// shown as `< 1 %`. Zero denominators render `n/a`.
pub fn share_display(part: u64, whole: u64) -> String {
    if whole == 0 {
        return "n/a".into();
    }
    if part > 0 && part * 100 < whole {
        return "< 1 %".into();
    }
    format!("{} %", rounded_percent(part, whole))
}

fn rounded_percent(part: u64, whole: u64) -> u64 {
    (part * 200 + whole) / (whole * 2)
}

/// Digits grouped in threes with spaces: `7864` -> `7 864`.
pub fn group_thousands(n: u64) -> String {
    let digits = n.to_string();
    let mut out = String::with_capacity(digits.len() + digits.len() / 3);
    for (i, c) in digits.chars().enumerate() {
        if i > 0 && (digits.len() - i).is_multiple_of(3) {
            out.push(' ');
        }
        out.push(c);
    }
    out
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ResponseCounts {
    pub total: u64,
    pub approved: u64,
    pub unanswered: u64,
    pub rejected: u64,
    pub fresh_pending: u64,
}

impl ResponseCounts {
    fn from_slots([approved, unanswered, rejected, fresh_pending]: [u64; 4]) -> Self {
        ResponseCounts {
            total: approved + unanswered + rejected + fresh_pending,
            approved,
            unanswered,
            rejected,
            fresh_pending,
        }
    }
}

fn slots(request: &CopyRequest, period: &Period, window: Duration, now: DateTime<Utc>) -> [u64; 4] {
    if !period.contains(request.created_at) {
        return [0; 4];
    }
    match classify_response(request, now, window) {
        ResponseClass::Approved => [1, 0, 0, 0],
        ResponseClass::Unanswered => [0, 1, 0, 0],
        ResponseClass::Rejected => [0, 0, 1, 0],
        ResponseClass::FreshPending => [0, 0, 0, 1],
    }
}

/// Classifies every request created in `period`, on the rayon pool when the
/// `parallel` feature is on.
pub fn count_responses(
    requests: &[CopyRequest],
    period: &Period,
    window: Duration,
    now: DateTime<Utc>,
) -> ResponseCounts {
    ResponseCounts::from_slots(par::tally(requests, |r| slots(r, period, window, now)))
}

/// Single-threaded reference path for [`count_responses`].
pub fn count_responses_sequential(
    requests: &[CopyRequest],
    period: &Period,
    window: Duration,
    now: DateTime<Utc>,
) -> ResponseCounts {
    let mut acc = [0u64; 4];
    for request in requests {
        for (a, s) in acc.iter_mut().zip(slots(request, period, window, now)) {
            *a += s;
        }
    }
    ResponseCounts::from_slots(acc)
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ResponseStats {
    pub period: Period,
    #[serde(with = "humantime_serde")]
    pub ignore_window: Duration,
    pub total: u64,
    pub approved: u64,
    pub unanswered: u64,
    pub rejected: u64,
    /// Pending but still inside the ignore window; left out of the percentages.
    pub fresh_pending: u64,
    pub rendered_rows: BTreeMap<String, String>,
}

impl ResponseStats {
    pub fn from_counts(period: Period, ignore_window: Duration, counts: ResponseCounts) -> Self {
        let settled = counts.approved + counts.unanswered + counts.rejected;
        let rendered_rows =
            [(ROW_APPROVED, counts.approved), (ROW_UNANSWERED, counts.unanswered), (ROW_REJECTED, counts.rejected)]
                .into_iter()
                .map(|(label, n)| (label.to_owned(), share_display(n, settled)))
                .collect();
        ResponseStats {
            period,
            ignore_window,
            total: counts.total,
            approved: counts.approved,
            unanswered: counts.unanswered,
            rejected: counts.rejected,
            fresh_pending: counts.fresh_pending,
            rendered_rows,
        }
    }

    pub fn row(&self, label: &str) -> &str {
        self.rendered_rows.get(label).map(String::as_str).unwrap_or("n/a")
    }

    pub fn render_table(&self, repo_name: &str) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "{:<22}{}", "Author responses", repo_name);
        let _ = writeln!(
            out,
            "{:<22}{} to {}",
            "Period",
            self.period.start.format("%Y-%m-%d %H:%M:%S UTC"),
            self.period.end.format("%Y-%m-%d %H:%M:%S UTC")
        );
        let _ = writeln!(out, "{:<22}{}", "Unanswered after", describe_window(self.ignore_window));
        let _ = writeln!(
            out,
            "{:<22}{} ({} still within window)",
            "Requests",
            group_thousands(self.total),
            group_thousands(self.fresh_pending)
        );
        for label in [ROW_APPROVED, ROW_UNANSWERED, ROW_REJECTED] {
            let _ = writeln!(out, "{:<22}{}", label, self.row(label));
        }
        out
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct AccessStats {
    pub total: u64,
    pub closed: u64,
    pub closed_share_display: String,
}

impl AccessStats {
    pub fn from_counts(total: u64, closed: u64) -> Self {
        let closed_share_display = if total == 0 {
            "n/a".to_owned()
        } else {
            format!("{} ({} %)", group_thousands(closed), rounded_percent(closed, total))
        };
        AccessStats { total, closed, closed_share_display }
    }

    /// Recounts from the records themselves rather than the store's counters.
    pub fn rescan(records: &[EprintRecord]) -> Self {
        let [total, closed] = par::tally(records, |r| [1, u64::from(!r.access.is_open())]);
        AccessStats::from_counts(total, closed)
    }

    pub fn render_table(&self, repo_name: &str) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "{:<22}{}", "Number of articles", repo_name);
        let _ = writeln!(out, "{:<22}{}", "Total", group_thousands(self.total));
        let _ = writeln!(out, "{:<22}{}", "Closed Access", self.closed_share_display);
        out
    }
}

impl Repository {
    pub fn response_stats(&self, period: Period, ignore_window: Duration, now: DateTime<Utc>) -> Result<ResponseStats> {
        if period.start > period.end {
            return Err(Error::InvalidPeriod);
        }
        let counts = count_responses(&self.store.requests(), &period, ignore_window, now);
        Ok(ResponseStats::from_counts(period, ignore_window, counts))
    }

    pub fn access_stats(&self, _now: DateTime<Utc>) -> AccessStats {
        let (total, closed) = self.store.access_counts();
        AccessStats::from_counts(total, closed)
    }
}
