//! Scripted request traffic on a virtual clock.
//!
//! A scenario lists requests, each with the author's eventual answer (or
//! none) and how long the author takes. The driver goes through the public
//! [`Repository`] operations, so every invariant of the live service holds.
//! Tokens and random eprint selection come from the scenario seed, so the
//! same scenario on the same store yields the same event log byte for byte.

use std::str::FromStr;
use std::time::Duration;

use chrono::{DateTime, Utc};
use rand::seq::IndexedRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::repo::{AccessKind, AccessState, Depositor, DocumentPart, EprintFilter, EprintId, EprintMetadata, VenueRef};
use crate::service::Repository;
use crate::workflow::{Action, Purpose, TokenGenerator};

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub enum EprintSelector {
    /// A uniformly random Closed eprint.
    Random,
    /// The n-th Closed eprint in listing order.
    Index(usize),
    Id(EprintId),
}

impl FromStr for EprintSelector {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        if s == "random" {
            Ok(EprintSelector::Random)
        } else if let Some(n) = s.strip_prefix('#') {
            n.parse().map(EprintSelector::Index).map_err(|_| Error::Validation(format!("bad selector {s:?}")))
        } else {
            EprintId::new(s).map(EprintSelector::Id)
        }
    }
}

impl TryFrom<String> for EprintSelector {
    type Error = Error;

    fn try_from(value: String) -> Result<Self> {
        value.parse()
    }
}

impl From<EprintSelector> for String {
    fn from(selector: EprintSelector) -> Self {
        match selector {
            EprintSelector::Random => "random".into(),
            EprintSelector::Index(n) => format!("#{n}"),
            EprintSelector::Id(id) => id.into(),
        }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ScenarioDecision {
    Accept,
    Reject,
    #[default]
    None,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ScenarioRequest {
    #[serde(default = "random_selector")]
    pub eprint: EprintSelector,
    pub requester: String,
    #[serde(default = "research")]
    pub purpose: Purpose,
    #[serde(default)]
    pub decision: ScenarioDecision,
    #[serde(with = "humantime_serde", default)]
    pub decision_delay: Duration,
}

fn random_selector() -> EprintSelector {
    EprintSelector::Random
}

fn research() -> Purpose {
    Purpose::Research
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    pub seed: u64,
    pub start: DateTime<Utc>,
    /// Gap between consecutive request submissions.
    #[serde(with = "humantime_serde", default = "one_minute")]
    pub spacing: Duration,
    /// Closed eprints to deposit at `start` before any request.
    #[serde(default)]
    pub synthetic_eprints: usize,
    #[serde(default)]
    pub requests: Vec<ScenarioRequest>,
}

fn one_minute() -> Duration {
    Duration::from_secs(60)
}

impl Scenario {
    pub fn load(path: &std::path::Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::Validation(format!("{}: {e}", path.display())))?;
        serde_json::from_str(&text).map_err(|e| Error::Validation(format!("{}: {e}", path.display())))
    }

    /// Virtual time of the last scheduled event.
    pub fn end(&self) -> DateTime<Utc> {
        self.requests
            .iter()
            .enumerate()
            .map(|(i, r)| match r.decision {
                ScenarioDecision::None => self.created_at(i),
                _ => self.created_at(i) + to_chrono(r.decision_delay),
            })
            .max()
            .unwrap_or(self.start)
    }

    fn created_at(&self, index: usize) -> DateTime<Utc> {
        self.start + to_chrono(self.spacing) * index as i32
    }
}

fn to_chrono(d: Duration) -> chrono::Duration {
    chrono::Duration::from_std(d).unwrap_or(chrono::Duration::MAX)
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct SimulationSummary {
    pub deposited: usize,
    pub requests: usize,
    pub approved: usize,
    pub rejected: usize,
    pub undecided: usize,
    pub messages_sent: usize,
    pub finished_at: Option<DateTime<Utc>>,
}

enum Step {
    Create(usize),
    Decide(usize, Action),
}

pub fn synthetic_eprint(repo: &Repository, n: usize, now: DateTime<Utc>) -> Result<EprintId> {
    let metadata = EprintMetadata::new(
        format!("Synthetic article {n}"),
        vec![format!("Author{n}, Test")],
        2009,
        VenueRef::journal("Synthetic Journal", Some("1"), Some(&(n + 1).to_string()), None),
        None,
    );
    let body = format!("synthetic document {n}");
    let part = DocumentPart::store(repo.store().blobs(), format!("synthetic-{n}.txt"), "text/plain", body.as_bytes())?;
    let depositor = Depositor::new(format!("Author{n}, Test"), format!("author{n}@repository.invalid"));
    repo.deposit_eprint(metadata, depositor, vec![part], AccessState::closed(), now)
}

/// Plays `scenario` against `repo`. Replaces the repository's token source
/// with one seeded from the scenario.
pub fn run(repo: &mut Repository, scenario: &Scenario) -> Result<SimulationSummary> {
    repo.tokens = TokenGenerator::seeded(scenario.seed);
    let mut summary = SimulationSummary::default();

    for n in 0..scenario.synthetic_eprints {
        synthetic_eprint(repo, n, scenario.start)?;
        summary.deposited += 1;
    }

    let closed: Vec<EprintId> = repo
        .list_eprints(&EprintFilter { access_kind: Some(AccessKind::Closed), venue: None })
        .into_iter()
        .map(|r| r.id)
        .collect();
    let mut rng = ChaCha8Rng::seed_from_u64(scenario.seed);
    let targets = scenario
        .requests
        .iter()
        .map(|r| match &r.eprint {
            EprintSelector::Random => closed
                .choose(&mut rng)
                .cloned()
                .ok_or_else(|| Error::Validation("scenario needs at least one Closed eprint".into())),
            EprintSelector::Index(n) => {
                closed.get(*n).cloned().ok_or_else(|| Error::Validation(format!("no Closed eprint #{n}")))
            }
            EprintSelector::Id(id) => Ok(id.clone()),
        })
        .collect::<Result<Vec<_>>>()?;

    let mut steps: Vec<(DateTime<Utc>, Step)> = Vec::new();
    for (i, request) in scenario.requests.iter().enumerate() {
        let created = scenario.created_at(i);
        steps.push((created, Step::Create(i)));
        let action = match request.decision {
            ScenarioDecision::Accept => Some(Action::Accept),
            ScenarioDecision::Reject => Some(Action::Reject),
            ScenarioDecision::None => None,
        };
        if let Some(action) = action {
            steps.push((created + to_chrono(request.decision_delay), Step::Decide(i, action)));
        }
    }
    // stable: a create always precedes its own decision at equal times
    steps.sort_by_key(|(at, _)| *at);

    let outbox_before = repo.outbox().map_or(0, |o| o.len());
    let mut tokens: Vec<Option<String>> = vec![None; scenario.requests.len()];
    for (at, step) in steps {
        match step {
            Step::Create(i) => {
                let request = &scenario.requests[i];
                let created =
                    repo.create_request(&targets[i], &request.requester, request.purpose.clone(), true, at)?;
                tokens[i] = Some(created.token);
                summary.requests += 1;
            }
            Step::Decide(i, action) => {
                let token = tokens[i].as_deref().expect("create scheduled before decide");
                repo.decide(token, action, at)?;
                match action {
                    Action::Accept => summary.approved += 1,
                    Action::Reject => summary.rejected += 1,
                }
            }
        }
        summary.finished_at = Some(at);
    }
    summary.undecided = summary.requests - summary.approved - summary.rejected;
    summary.messages_sent = repo.outbox().map_or(0, |o| o.len()) - outbox_before;
    Ok(summary)
}
