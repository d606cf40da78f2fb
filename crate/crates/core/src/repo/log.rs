//! Append-only event log and the state it folds into.
//!
//! `events.jsonl` holds one `{"seq":N,"event":{...}}` object per line.
//! `snapshot.json` holds the fold of every event up to its `seq`; opening a
//! store loads the snapshot and replays the remaining tail.

use std::collections::BTreeMap;
use std::fs::{self, File, OpenOptions};
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use chrono::{DateTime, Utc};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::workflow::{CopyRequest, Decision, DecisionToken, RequestId};

use super::model::{AccessState, AccessTransition, EprintId, EprintRecord};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum Event {
    EprintDeposited { record: EprintRecord },
    AccessChanged { eprint_id: EprintId, from: AccessState, to: AccessState, actor: String, at: DateTime<Utc> },
    RequestCreated { request: CopyRequest, token: DecisionToken },
    RequestDecided { request_id: RequestId, decision: Decision },
    NotificationResent { request_id: RequestId, at: DateTime<Utc> },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StoredEvent {
    pub seq: u64,
    pub event: Event,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StoredRequest {
    pub request: CopyRequest,
    pub token: DecisionToken,
    #[serde(default)]
    pub resends: u32,
}

/// Materialized store contents; the fold of the event log.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct State {
    pub seq: u64,
    pub next_eprint: u64,
    pub next_request: u64,
    pub eprints: BTreeMap<EprintId, EprintRecord>,
    pub requests: BTreeMap<RequestId, StoredRequest>,
}

impl State {
    pub fn replay<'a>(events: impl IntoIterator<Item = &'a StoredEvent>) -> Result<State> {
        let mut state = State::default();
        for event in events {
            state.apply(event)?;
        }
        Ok(state)
    }

    pub fn apply(&mut self, stored: &StoredEvent) -> Result<()> {
        if stored.seq <= self.seq {
            return Ok(());
        }
        self.seq = stored.seq;
        match &stored.event {
            Event::EprintDeposited { record } => {
                if let Ok(n) = record.id.as_str().parse::<u64>() {
                    self.next_eprint = self.next_eprint.max(n);
                }
                self.eprints.insert(record.id.clone(), record.clone());
            }
            Event::AccessChanged { eprint_id, from, to, actor, at } => {
                let record = self
                    .eprints
                    .get_mut(eprint_id)
                    .ok_or_else(|| Error::Storage(format!("event {} names unknown eprint {eprint_id}", stored.seq)))?;
                record.access = to.clone();
                record.access_log.push(AccessTransition {
                    from: Some(from.clone()),
                    to: to.clone(),
                    actor: actor.clone(),
                    at: *at,
                });
            }
            Event::RequestCreated { request, token } => {
                if let Some(n) = request.id.as_str().strip_prefix("req-").and_then(|n| n.parse::<u64>().ok()) {
                    self.next_request = self.next_request.max(n);
                }
                self.requests.insert(
                    request.id.clone(),
                    StoredRequest { request: request.clone(), token: token.clone(), resends: 0 },
                );
            }
            Event::RequestDecided { request_id, decision } => {
                let stored_request = self.requests.get_mut(request_id).ok_or_else(|| {
                    Error::Storage(format!("event {} names unknown request {request_id}", stored.seq))
                })?;
                stored_request.request.decision = decision.clone();
            }
            Event::NotificationResent { request_id, .. } => {
                if let Some(stored_request) = self.requests.get_mut(request_id) {
                    stored_request.resends += 1;
                }
            }
        }
        Ok(())
    }
}

pub(crate) enum Sink {
    Memory(Vec<StoredEvent>),
    File { path: PathBuf, writer: BufWriter<File> },
}

pub(crate) struct EventLog {
    pub(crate) seq: u64,
    sink: Sink,
}

impl EventLog {
    pub(crate) fn memory() -> Self {
        EventLog { seq: 0, sink: Sink::Memory(Vec::new()) }
    }

    pub(crate) fn file(path: &Path, seq: u64) -> Result<Self> {
        let file = OpenOptions::new().create(true).append(true).open(path)?;
        Ok(EventLog { seq, sink: Sink::File { path: path.to_owned(), writer: BufWriter::new(file) } })
    }

    pub(crate) fn append(&mut self, event: Event) -> Result<u64> {
        let stored = StoredEvent { seq: self.seq + 1, event };
        match &mut self.sink {
            Sink::Memory(events) => events.push(stored),
            Sink::File { writer, .. } => {
                let mut line = serde_json::to_vec(&stored)?;
                line.push(b'\n');
                writer.write_all(&line)?;
                writer.flush()?;
            }
        }
        self.seq += 1;
        Ok(self.seq)
    }

    pub(crate) fn events(&self) -> Result<Vec<StoredEvent>> {
        match &self.sink {
            Sink::Memory(events) => Ok(events.clone()),
            Sink::File { path, .. } => read_events(path),
        }
    }
}

pub fn read_events(path: &Path) -> Result<Vec<StoredEvent>> {
    if !path.exists() {
        return Ok(Vec::new());
    }
    let reader = BufReader::new(File::open(path)?);
    let mut events = Vec::new();
    for (n, line) in reader.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let event =
            serde_json::from_str(&line).map_err(|e| Error::Storage(format!("{}:{}: {e}", path.display(), n + 1)))?;
        events.push(event);
    }
    Ok(events)
}

pub fn read_snapshot(path: &Path) -> Result<Option<State>> {
    if !path.exists() {
        return Ok(None);
    }
    let bytes = fs::read(path)?;
    Ok(Some(serde_json::from_slice(&bytes)?))
}

pub fn write_snapshot(path: &Path, state: &State) -> Result<()> {
    let tmp = path.with_extension("json.tmp");
    fs::write(&tmp, serde_json::to_vec(state)?)?;
    fs::rename(&tmp, path)?;
    Ok(())
}
