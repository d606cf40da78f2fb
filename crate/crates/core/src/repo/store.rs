use std::collections::{BTreeMap, HashMap};
use std::path::{Path, PathBuf};
use std::sync::Arc;

use chrono::{DateTime, NaiveDate, Utc};
use parking_lot::{Mutex, RwLock};

use crate::error::{Error, Result};
use crate::par;
use crate::scheduler::{EmbargoEntry, EmbargoIndex};
use crate::workflow::{Action, CopyRequest, Decision, DecisionToken, RequestId};

use super::blob::{BlobStore, DirBlobs, MemoryBlobs};
use super::log::{self, Event, EventLog, State, StoredEvent, StoredRequest};
use super::model::{
    AccessKind, AccessState, AccessTransition, Depositor, DocumentPart, EprintFilter, EprintId, EprintMetadata,
    EprintRecord,
};

pub const ACTOR_ADMIN: &str = "admin";
pub const ACTOR_SCHEDULER: &str = "scheduler";
pub const ACTOR_DEPOSITOR: &str = "depositor";

const EVENTS_FILE: &str = "events.jsonl";
const SNAPSHOT_FILE: &str = "snapshot.json";
const BLOBS_DIR: &str = "blobs";

/// Result of a compare-and-set on a request's decision.
#[derive(Clone, Debug, PartialEq)]
pub enum DecisionCommit {
    /// This call moved the request out of Pending.
    Applied(CopyRequest),
    /// The request already carried the same decision.
    Unchanged(CopyRequest),
}

#[derive(Default)]
struct Counters {
    next_eprint: u64,
    next_request: u64,
    total: u64,
    closed: u64,
}

struct Persistence {
    dir: PathBuf,
    snapshot_every: u64,
    snapshot_lock: Mutex<()>,
}

/// Eprints, requests and tokens behind one append-only event log.
///
/// Every mutation takes the affected record's lock, appends its event, and
/// updates the in-memory index before releasing, so the log order per record
/// is the order callers observe. Distinct records never contend on a lock
/// other than the log writer itself.
pub struct Store {
    eprints: RwLock<BTreeMap<EprintId, Arc<RwLock<EprintRecord>>>>,
    requests: RwLock<HashMap<RequestId, Arc<Mutex<StoredRequest>>>>,
    tokens: RwLock<HashMap<String, RequestId>>,
    embargoes: Mutex<EmbargoIndex>,
    counters: Mutex<Counters>,
    log: Mutex<EventLog>,
    blobs: Arc<dyn BlobStore>,
    persistence: Option<Persistence>,
}

impl Store {
    pub fn in_memory() -> Self {
        Store::from_state(State::default(), EventLog::memory(), Arc::new(MemoryBlobs::default()), None)
    }

    /// Opens (or creates) a file-backed store in `dir`, snapshotting every
    /// `snapshot_every` events (0 disables periodic snapshots).
    pub fn open(dir: impl AsRef<Path>, snapshot_every: u64) -> Result<Self> {
        let dir = dir.as_ref().to_owned();
        std::fs::create_dir_all(&dir)?;
        let events_path = dir.join(EVENTS_FILE);
        let mut state = log::read_snapshot(&dir.join(SNAPSHOT_FILE))?.unwrap_or_default();
        for event in log::read_events(&events_path)? {
            state.apply(&event)?;
        }
        let log = EventLog::file(&events_path, state.seq)?;
        let blobs = Arc::new(DirBlobs::open(dir.join(BLOBS_DIR))?);
        let persistence = Persistence { dir, snapshot_every, snapshot_lock: Mutex::new(()) };
        Ok(Store::from_state(state, log, blobs, Some(persistence)))
    }

    fn from_state(state: State, log: EventLog, blobs: Arc<dyn BlobStore>, persistence: Option<Persistence>) -> Self {
        let mut embargoes = EmbargoIndex::default();
        let mut counters =
            Counters { next_eprint: state.next_eprint, next_request: state.next_request, ..Counters::default() };
        let mut tokens = HashMap::new();
        for record in state.eprints.values() {
            embargoes.sync(&record.id, &record.access);
            counters.total += 1;
            if !record.access.is_open() {
                counters.closed += 1;
            }
        }
        for stored in state.requests.values() {
            tokens.insert(stored.token.value.clone(), stored.request.id.clone());
        }
        Store {
            eprints: RwLock::new(state.eprints.into_iter().map(|(id, r)| (id, Arc::new(RwLock::new(r)))).collect()),
            requests: RwLock::new(state.requests.into_iter().map(|(id, r)| (id, Arc::new(Mutex::new(r)))).collect()),
            tokens: RwLock::new(tokens),
            embargoes: Mutex::new(embargoes),
            counters: Mutex::new(counters),
            log: Mutex::new(log),
            blobs,
            persistence,
        }
    }

    pub fn blobs(&self) -> &dyn BlobStore {
        self.blobs.as_ref()
    }

    pub fn path(&self) -> Option<&Path> {
        self.persistence.as_ref().map(|p| p.dir.as_path())
    }

    fn append(&self, event: Event) -> Result<u64> {
        self.log.lock().append(event)
    }

    fn after_append(&self, seq: u64) {
        if let Some(p) = &self.persistence {
            if p.snapshot_every > 0 && seq.is_multiple_of(p.snapshot_every) {
                if let Err(err) = self.snapshot() {
                    tracing::warn!(%err, "periodic snapshot failed");
                }
            }
        }
    }

    /// Folds the previous snapshot and the log tail into a fresh snapshot.
    pub fn snapshot(&self) -> Result<()> {
        let Some(p) = &self.persistence else { return Ok(()) };
        let Some(_guard) = p.snapshot_lock.try_lock() else { return Ok(()) };
        let snapshot_path = p.dir.join(SNAPSHOT_FILE);
        let mut state = log::read_snapshot(&snapshot_path)?.unwrap_or_default();
        for event in log::read_events(&p.dir.join(EVENTS_FILE))? {
            state.apply(&event)?;
        }
        log::write_snapshot(&snapshot_path, &state)
    }

    pub fn events(&self) -> Result<Vec<StoredEvent>> {
        self.log.lock().events()
    }

    /// Rebuilds the full state by replaying the event log from the start.
    pub fn replay_state(&self) -> Result<State> {
        State::replay(&self.events()?)
    }

    // ---- eprints -------------------------------------------------------

    pub fn deposit(
        &self,
        mut metadata: EprintMetadata,
        depositor: Depositor,
        parts: Vec<DocumentPart>,
        access: AccessState,
        now: DateTime<Utc>,
    ) -> Result<EprintId> {
        metadata.validate()?;
        if parts.is_empty() {
            return Err(Error::Validation("an eprint needs at least one document part".into()));
        }
        if let Some(part) = parts.iter().find(|p| p.byte_length == 0) {
            return Err(Error::Validation(format!("document part {:?} is empty", part.label)));
        }
        metadata.citation_line = super::citation::render(&metadata);

        let id = {
            let mut counters = self.counters.lock();
            counters.next_eprint += 1;
            EprintId::new(counters.next_eprint.to_string())?
        };
        let record = EprintRecord {
            id: id.clone(),
            metadata,
            depositor,
            access: access.clone(),
            parts,
            deposited_at: now,
            access_log: vec![AccessTransition {
                from: None,
                to: access.clone(),
                actor: ACTOR_DEPOSITOR.into(),
                at: now,
            }],
        };

        let seq = self.append(Event::EprintDeposited { record: record.clone() })?;
        self.eprints.write().insert(id.clone(), Arc::new(RwLock::new(record)));
        self.embargoes.lock().sync(&id, &access);
        {
            let mut counters = self.counters.lock();
            counters.total += 1;
            if !access.is_open() {
                counters.closed += 1;
            }
        }
        self.after_append(seq);
        Ok(id)
    }

    fn eprint_cell(&self, id: &EprintId) -> Result<Arc<RwLock<EprintRecord>>> {
        self.eprints.read().get(id).cloned().ok_or_else(|| Error::NotFound(format!("eprint {id}")))
    }

    pub fn get(&self, id: &EprintId) -> Result<EprintRecord> {
        Ok(self.eprint_cell(id)?.read().clone())
    }

    pub fn contains(&self, id: &EprintId) -> bool {
        self.eprints.read().contains_key(id)
    }

    /// Replaces the access state and returns the previous one.
    ///
    /// Only `admin` may close an Open deposit, and `scheduler` may only open a
    /// Closed one.
    pub fn set_access(
        &self,
        id: &EprintId,
        new_state: AccessState,
        actor: &str,
        now: DateTime<Utc>,
    ) -> Result<AccessState> {
        self.transition(id, None, new_state, actor, now)?
            .ok_or_else(|| Error::Storage("unconditional transition reported a lost race".into()))
    }

    /// Like [`Store::set_access`] but only applies when the current state equals
    /// `expected`; returns `Ok(None)` otherwise.
    pub fn compare_and_set_access(
        &self,
        id: &EprintId,
        expected: &AccessState,
        new_state: AccessState,
        actor: &str,
        now: DateTime<Utc>,
    ) -> Result<Option<AccessState>> {
        self.transition(id, Some(expected), new_state, actor, now)
    }

    fn transition(
        &self,
        id: &EprintId,
        expected: Option<&AccessState>,
        new_state: AccessState,
        actor: &str,
        now: DateTime<Utc>,
    ) -> Result<Option<AccessState>> {
        let cell = self.eprint_cell(id)?;
        let mut record = cell.write();
        if expected.is_some_and(|e| *e != record.access) {
            return Ok(None);
        }
        let from = record.access.clone();
        check_transition(actor, &from, &new_state)?;

        let seq = self.append(Event::AccessChanged {
            eprint_id: id.clone(),
            from: from.clone(),
            to: new_state.clone(),
            actor: actor.to_owned(),
            at: now,
        })?;
        record.access = new_state.clone();
        record.access_log.push(AccessTransition {
            from: Some(from.clone()),
            to: new_state.clone(),
            actor: actor.to_owned(),
            at: now,
        });
        self.embargoes.lock().sync(id, &new_state);
        match (from.kind(), new_state.kind()) {
            (AccessKind::Closed, AccessKind::Open) => self.counters.lock().closed -= 1,
            (AccessKind::Open, AccessKind::Closed) => self.counters.lock().closed += 1,
            _ => {}
        }
        drop(record);
        self.after_append(seq);
        Ok(Some(from))
    }

    /// Records matching `filter`, ordered by deposit time then id.
    pub fn list(&self, filter: &EprintFilter) -> Vec<EprintRecord> {
        let cells: Vec<_> = self.eprints.read().values().cloned().collect();
        let mut records = par::filter_map(&cells, |cell| {
            let record = cell.read();
            filter.matches(&record).then(|| record.clone())
        });
        records.sort_by(|a, b| a.deposited_at.cmp(&b.deposited_at).then_with(|| a.id.cmp(&b.id)));
        records
    }

    /// (total, closed), maintained incrementally on every transition.
    pub fn access_counts(&self) -> (u64, u64) {
        let counters = self.counters.lock();
        (counters.total, counters.closed)
    }

    pub fn embargo_entries(&self) -> Vec<EmbargoEntry> {
        self.embargoes.lock().entries()
    }

    pub fn due_embargoes(&self, date: NaiveDate) -> Vec<EmbargoEntry> {
        self.embargoes.lock().due(date)
    }

    // ---- requests ------------------------------------------------------

    pub(crate) fn next_request_id(&self) -> RequestId {
        let mut counters = self.counters.lock();
        counters.next_request += 1;
        RequestId::from_seq(counters.next_request)
    }

    pub fn insert_request(&self, request: CopyRequest, token: DecisionToken) -> Result<()> {
        if !request.attested {
            return Err(Error::AttestationRequired);
        }
        if token.request_id != request.id {
            return Err(Error::Storage("token bound to a different request".into()));
        }
        let mut tokens = self.tokens.write();
        if tokens.contains_key(&token.value) {
            return Err(Error::Storage("token value collision".into()));
        }
        let seq = self.append(Event::RequestCreated { request: request.clone(), token: token.clone() })?;
        tokens.insert(token.value.clone(), request.id.clone());
        self.requests
            .write()
            .insert(request.id.clone(), Arc::new(Mutex::new(StoredRequest { request, token, resends: 0 })));
        drop(tokens);
        self.after_append(seq);
        Ok(())
    }

    fn request_cell(&self, id: &RequestId) -> Result<Arc<Mutex<StoredRequest>>> {
        self.requests.read().get(id).cloned().ok_or_else(|| Error::NotFound(format!("request {id}")))
    }

    pub fn get_request(&self, id: &RequestId) -> Result<StoredRequest> {
        Ok(self.request_cell(id)?.lock().clone())
    }

    pub fn request_for_token(&self, token_value: &str) -> Result<RequestId> {
        self.tokens.read().get(token_value).cloned().ok_or(Error::UnknownToken)
    }

    /// Write-once decision: Pending moves to the action's decision; a repeat of
    /// the recorded action is `Unchanged`; the opposite action is a conflict.
    pub fn decide(&self, id: &RequestId, action: Action, now: DateTime<Utc>) -> Result<DecisionCommit> {
        let cell = self.request_cell(id)?;
        let mut stored = cell.lock();
        match &stored.request.decision {
            Decision::Pending => {
                let decision = action.decision(now);
                let seq = self.append(Event::RequestDecided { request_id: id.clone(), decision: decision.clone() })?;
                stored.request.decision = decision;
                let request = stored.request.clone();
                drop(stored);
                self.after_append(seq);
                Ok(DecisionCommit::Applied(request))
            }
            recorded if action.matches(recorded) => Ok(DecisionCommit::Unchanged(stored.request.clone())),
            recorded => Err(Error::DecisionConflict { request_id: id.to_string(), recorded: recorded.label() }),
        }
    }

    pub(crate) fn record_resend(&self, id: &RequestId, now: DateTime<Utc>) -> Result<StoredRequest> {
        let cell = self.request_cell(id)?;
        let mut stored = cell.lock();
        let seq = self.append(Event::NotificationResent { request_id: id.clone(), at: now })?;
        stored.resends += 1;
        let snapshot = stored.clone();
        drop(stored);
        self.after_append(seq);
        Ok(snapshot)
    }

    /// All requests ordered by creation time then id.
    pub fn requests(&self) -> Vec<CopyRequest> {
        let cells: Vec<_> = self.requests.read().values().cloned().collect();
        let mut requests: Vec<CopyRequest> = cells.iter().map(|c| c.lock().request.clone()).collect();
        requests.sort_by(|a, b| a.created_at.cmp(&b.created_at).then_with(|| a.id.cmp(&b.id)));
        requests
    }
}

fn check_transition(actor: &str, from: &AccessState, to: &AccessState) -> Result<()> {
    let allowed = match (from.kind(), to.kind()) {
        (AccessKind::Open, AccessKind::Closed) => actor == ACTOR_ADMIN,
        (AccessKind::Closed, AccessKind::Open) => true,
        _ => actor != ACTOR_SCHEDULER,
    };
    if allowed {
        Ok(())
    } else {
        Err(Error::ForbiddenTransition { actor: actor.to_owned(), from: from.clone(), to: to.clone() })
    }
}
