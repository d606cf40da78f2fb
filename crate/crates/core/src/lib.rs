//! Core of the fair-dealing request service: the eprint store, embargo
//! scheduling, the request workflow, outgoing mail, fairness alerts and
//! usage statistics.

pub mod config;
pub mod error;
pub mod fairness;
pub mod ingest;
pub mod mail;
pub mod par;
pub mod repo;
pub mod scheduler;
pub mod service;
pub mod simulate;
pub mod stats;
pub mod workflow;

pub use config::Config;
pub use error::{Error, Result};
pub use service::{Repository, Settings};
