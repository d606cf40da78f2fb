use std::collections::HashMap;
use std::fs::{File, OpenOptions};
use std::io::{BufRead, BufReader, Write};
use std::path::{Path, PathBuf};

use chrono::{DateTime, Utc};
use parking_lot::Mutex;
use serde::{Deserialize, Serialize};

use crate::repo::digest_hex;
use crate::workflow::RequestId;

use super::{MailKind, MailMessage, TransportError};

pub trait Transport: Send + Sync {
    /// Hands `message` over for delivery. Sending the same `message_id`
    /// again must not deliver twice.
    fn send(&self, message: &MailMessage, at: DateTime<Utc>) -> Result<DeliveryReceipt, TransportError>;
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct DeliveryReceipt {
    pub message_id: String,
    pub accepted_at: DateTime<Utc>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct OutboxAttachment {
    pub filename: String,
    pub media_type: String,
    pub digest: String,
    pub length: u64,
}

/// One line of the outbox file.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct OutboxRecord {
    pub message_id: String,
    pub kind: MailKind,
    pub from: String,
    pub to: String,
    pub subject: String,
    pub body: String,
    pub attachments: Vec<OutboxAttachment>,
    pub timestamp: DateTime<Utc>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub request_id: Option<RequestId>,
}

impl OutboxRecord {
    fn from_message(message: &MailMessage, at: DateTime<Utc>) -> Self {
        OutboxRecord {
            message_id: message.message_id.clone(),
            kind: message.kind,
            from: message.from_address.clone(),
            to: message.to_address.clone(),
            subject: message.subject.clone(),
            body: message.body.clone(),
            attachments: message
                .attachments
                .iter()
                .map(|a| OutboxAttachment {
                    filename: a.filename.clone(),
                    media_type: a.media_type.clone(),
                    digest: digest_hex(&a.bytes),
                    length: a.bytes.len() as u64,
                })
                .collect(),
            timestamp: at,
            request_id: message.request_id.clone(),
        }
    }
}

struct Inner {
    records: Vec<OutboxRecord>,
    seen: HashMap<String, DeliveryReceipt>,
    file: Option<(PathBuf, File)>,
}

/// Persistent, inspectable outbox: newline-delimited JSON, one message per
/// line in send order, deduplicated on `message_id`.
pub struct Outbox {
    inner: Mutex<Inner>,
}

impl Outbox {
    pub fn in_memory() -> Self {
        Outbox { inner: Mutex::new(Inner { records: Vec::new(), seen: HashMap::new(), file: None }) }
    }

    pub fn open(path: impl AsRef<Path>) -> std::io::Result<Self> {
        let path = path.as_ref().to_owned();
        let records = read_outbox(&path)?;
        let seen = records
            .iter()
            .map(|r| {
                (r.message_id.clone(), DeliveryReceipt { message_id: r.message_id.clone(), accepted_at: r.timestamp })
            })
            .collect();
        let file = OpenOptions::new().create(true).append(true).open(&path)?;
        Ok(Outbox { inner: Mutex::new(Inner { records, seen, file: Some((path, file)) }) })
    }

    pub fn records(&self) -> Vec<OutboxRecord> {
        self.inner.lock().records.clone()
    }

    pub fn len(&self) -> usize {
        self.inner.lock().records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn path(&self) -> Option<PathBuf> {
        self.inner.lock().file.as_ref().map(|(p, _)| p.clone())
    }
}

impl Transport for Outbox {
    fn send(&self, message: &MailMessage, at: DateTime<Utc>) -> Result<DeliveryReceipt, TransportError> {
        message.check()?;
        let mut inner = self.inner.lock();
        if let Some(receipt) = inner.seen.get(&message.message_id) {
            return Ok(receipt.clone());
        }
        let record = OutboxRecord::from_message(message, at);
        if let Some((path, file)) = inner.file.as_mut() {
            let mut line = serde_json::to_vec(&record).map_err(|e| TransportError(e.to_string()))?;
            line.push(b'\n');
            file.write_all(&line)
                .and_then(|_| file.flush())
                .map_err(|e| TransportError(format!("{}: {e}", path.display())))?;
        }
        let receipt = DeliveryReceipt { message_id: message.message_id.clone(), accepted_at: at };
        inner.seen.insert(message.message_id.clone(), receipt.clone());
        inner.records.push(record);
        Ok(receipt)
    }
}

pub fn read_outbox(path: &Path) -> std::io::Result<Vec<OutboxRecord>> {
    if !path.exists() {
        return Ok(Vec::new());
    }
    let mut records = Vec::new();
    for line in BufReader::new(File::open(path)?).lines() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        records.push(serde_json::from_str(&line).map_err(|e| std::io::Error::new(std::io::ErrorKind::InvalidData, e))?);
    }
    Ok(records)
}
