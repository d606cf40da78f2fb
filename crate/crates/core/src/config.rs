use std::path::{Path, PathBuf};
use std::time::Duration;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fairness::{JurisdictionName, JurisdictionProfile};
use crate::mail::MailContext;
use crate::scheduler::RepoTimeZone;

const DAY: Duration = Duration::from_secs(86_400);

/// Repository configuration, normally read from a TOML file.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Config {
    pub repo_name: String,
    pub base_url: String,
    /// Sender of every message.
    pub admin_address: String,
    /// Receives author notifications when a depositor has left and has no fallback.
    pub manager_address: String,
    /// Shared secret for the admin HTTP endpoints; admin routes are disabled without it.
    pub admin_secret: Option<String>,
    pub time_zone: String,
    #[serde(with = "humantime_serde")]
    pub ignore_window: Duration,
    #[serde(with = "humantime_serde")]
    pub tick_interval: Duration,
    pub snapshot_every: u64,
    pub templates_dir: Option<PathBuf>,
    pub ui_dir: Option<PathBuf>,
    pub jurisdiction: JurisdictionName,
    /// Overrides or additions to the built-in jurisdiction profiles.
    pub profiles: Vec<JurisdictionProfile>,
    pub monitor_enabled: bool,
}

impl Default for Config {
    fn default() -> Self {
        Config {
            repo_name: "Repository".into(),
            base_url: "http://localhost:8080".into(),
            admin_address: "repository-admin@localhost".into(),
            manager_address: "repository-manager@localhost".into(),
            admin_secret: None,
            time_zone: "UTC".into(),
            ignore_window: 30 * DAY,
            tick_interval: Duration::from_secs(3600),
            snapshot_every: 1000,
            templates_dir: None,
            ui_dir: None,
            jurisdiction: JurisdictionName::Ca,
            profiles: Vec::new(),
            monitor_enabled: true,
        }
    }
}

impl Config {
    /// Reads a TOML file; relative directories resolve against the file's location.
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        let mut config: Config =
            toml::from_str(&text).map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        let base = path.parent().unwrap_or(Path::new("."));
        for dir in [&mut config.templates_dir, &mut config.ui_dir].into_iter().flatten() {
            if dir.is_relative() {
                *dir = base.join(&*dir);
            }
        }
        config.validate()?;
        Ok(config)
    }

    pub fn validate(&self) -> Result<()> {
        for (field, address) in [("admin_address", &self.admin_address), ("manager_address", &self.manager_address)] {
            if !address.contains('@') {
                return Err(Error::Config(format!("{field} {address:?} is not an email address")));
            }
        }
        if self.ignore_window.is_zero() {
            return Err(Error::Config("ignore_window must be positive".into()));
        }
        self.zone()?;
        self.profile()?.validate()
    }

    pub fn zone(&self) -> Result<RepoTimeZone> {
        self.time_zone.parse()
    }

    pub fn profile(&self) -> Result<JurisdictionProfile> {
        self.profiles
            .iter()
            .find(|p| p.name == self.jurisdiction)
            .cloned()
            .or_else(|| JurisdictionProfile::builtin(self.jurisdiction))
            .ok_or_else(|| Error::Config(format!("no profile configured for jurisdiction {:?}", self.jurisdiction)))
    }

    pub fn mail_context(&self) -> MailContext {
        MailContext {
            repo_name: self.repo_name.clone(),
            base_url: self.base_url.clone(),
            admin_address: self.admin_address.clone(),
        }
    }
}
