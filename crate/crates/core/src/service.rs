use std::collections::HashMap;
use std::path::Path;
use std::sync::Arc;
use std::time::Duration;

use chrono::{DateTime, Utc};

use crate::config::Config;
use crate::error::Result;
use crate::fairness::{self, FairnessAlert, HistoryEntry, JurisdictionProfile};
use crate::mail::{MailContext, Outbox, Templates, Transport};
use crate::repo::{
    AccessState, Depositor, DocumentPart, EprintFilter, EprintId, EprintMetadata, EprintRecord, SourceKey, Store,
    VenueKind,
};
use crate::scheduler::{self, RepoTimeZone};
use crate::workflow::TokenGenerator;

pub const OUTBOX_FILE: &str = "outbox.jsonl";

/// Runtime settings derived from [`Config`].
#[derive(Clone, Debug)]
pub struct Settings {
    pub mail: MailContext,
    pub manager_address: String,
    pub zone: RepoTimeZone,
    pub ignore_window: Duration,
    pub profile: JurisdictionProfile,
    pub monitor_enabled: bool,
}

impl Settings {
    pub fn from_config(config: &Config) -> Result<Self> {
        config.validate()?;
        Ok(Settings {
            mail: config.mail_context(),
            manager_address: config.manager_address.clone(),
            zone: config.zone()?,
            ignore_window: config.ignore_window,
            profile: config.profile()?,
            monitor_enabled: config.monitor_enabled,
        })
    }
}

impl Default for Settings {
    fn default() -> Self {
        Settings::from_config(&Config::default()).expect("default config is valid")
    }
}

/// The repository service: every workflow operation goes through here.
pub struct Repository {
    pub(crate) store: Store,
    pub(crate) transport: Arc<dyn Transport>,
    pub(crate) outbox: Option<Arc<Outbox>>,
    pub(crate) templates: Templates,
    pub(crate) tokens: TokenGenerator,
    pub(crate) settings: Settings,
}

impl Repository {
    pub fn new(store: Store, transport: Arc<dyn Transport>, settings: Settings) -> Self {
        Repository {
            store,
            transport,
            outbox: None,
            templates: Templates::builtin(),
            tokens: TokenGenerator::from_entropy(),
            settings,
        }
    }

    /// In-memory store and outbox, for tests and demos.
    pub fn in_memory(settings: Settings) -> Self {
        let outbox = Arc::new(Outbox::in_memory());
        let mut repo = Repository::new(Store::in_memory(), outbox.clone(), settings);
        repo.outbox = Some(outbox);
        repo
    }

    /// File-backed store under `dir` with the outbox file beside the event log.
    pub fn open(dir: &Path, config: &Config) -> Result<Self> {
        let store = Store::open(dir, config.snapshot_every)?;
        let outbox = Arc::new(Outbox::open(dir.join(OUTBOX_FILE))?);
        let mut repo = Repository::new(store, outbox.clone(), Settings::from_config(config)?);
        repo.outbox = Some(outbox);
        repo.templates = Templates::load(config.templates_dir.as_deref())?;
        Ok(repo)
    }

    pub fn with_tokens(mut self, tokens: TokenGenerator) -> Self {
        self.tokens = tokens;
        self
    }

    pub fn with_templates(mut self, templates: Templates) -> Self {
        self.templates = templates;
        self
    }

    pub fn store(&self) -> &Store {
        &self.store
    }

    pub fn settings(&self) -> &Settings {
        &self.settings
    }

    pub fn settings_mut(&mut self) -> &mut Settings {
        &mut self.settings
    }

    /// The outbox, when this repository owns one.
    pub fn outbox(&self) -> Option<&Outbox> {
        self.outbox.as_deref()
    }

    pub fn deposit_eprint(
        &self,
        metadata: EprintMetadata,
        depositor: Depositor,
        parts: Vec<DocumentPart>,
        access: AccessState,
        now: DateTime<Utc>,
    ) -> Result<EprintId> {
        self.store.deposit(metadata, depositor, parts, access, now)
    }

    pub fn get_eprint(&self, id: &EprintId) -> Result<EprintRecord> {
        self.store.get(id)
    }

    pub fn set_access_state(
        &self,
        id: &EprintId,
        new_state: AccessState,
        actor: &str,
        now: DateTime<Utc>,
    ) -> Result<AccessState> {
        self.store.set_access(id, new_state, actor, now)
    }

    pub fn list_eprints(&self, filter: &EprintFilter) -> Vec<EprintRecord> {
        self.store.list(filter)
    }

    pub fn run_due_embargoes(&self, now: DateTime<Utc>) -> Result<Vec<EprintId>> {
        scheduler::run_due_embargoes(&self.store, now, self.settings.zone)
    }

    /// Every stored request joined with its eprint's grouping identity.
    pub fn history(&self) -> Vec<HistoryEntry> {
        let mut sources: HashMap<EprintId, (SourceKey, String)> = HashMap::new();
        self.store
            .requests()
            .iter()
            .filter_map(|request| {
                if !sources.contains_key(&request.eprint_id) {
                    let record = self.store.get(&request.eprint_id).ok()?;
                    sources.insert(request.eprint_id.clone(), source_of(&record));
                }
                let (key, label) = &sources[&request.eprint_id];
                Some(HistoryEntry::from_request(request, key.clone(), label.clone()))
            })
            .collect()
    }

    /// Alerts stored on requests at creation, followed by the current
    /// high-volume scan.
    pub fn alerts(&self, now: DateTime<Utc>) -> Vec<FairnessAlert> {
        let mut alerts: Vec<FairnessAlert> =
            self.store.requests().into_iter().flat_map(|r| r.alerts_at_creation).collect();
        alerts.extend(fairness::scan_accepted_volume(&self.history(), &self.settings.profile, now));
        alerts
    }
}

pub(crate) fn source_of(record: &EprintRecord) -> (SourceKey, String) {
    let venue = &record.metadata.venue;
    let label = match venue.kind {
        VenueKind::JournalArticle => {
            let mut label = venue.container_title.trim().to_owned();
            if let Some(volume) = venue.volume.as_deref().filter(|v| !v.trim().is_empty()) {
                label.push_str(&format!(" {}", volume.trim()));
            }
            if let Some(issue) = venue.issue.as_deref().filter(|i| !i.trim().is_empty()) {
                label.push_str(&format!("({})", issue.trim()));
            }
            label
        }
        VenueKind::BookChapter => venue.container_title.trim().to_owned(),
    };
    (record.source_key(), label)
}
