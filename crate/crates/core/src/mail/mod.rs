//! Outbound mail: the three message kinds, their templates, and transports.

mod outbox;
mod render;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::workflow::RequestId;

pub use outbox::{read_outbox, DeliveryReceipt, Outbox, OutboxAttachment, OutboxRecord, Transport};
pub use render::{MailContext, Templates};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum MailKind {
    AuthorNotification,
    Delivery,
    DeclineNotice,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Attachment {
    pub filename: String,
    pub media_type: String,
    pub bytes: Vec<u8>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct MailMessage {
    /// Stable per logical message; transports deduplicate on it.
    pub message_id: String,
    pub request_id: Option<RequestId>,
    pub kind: MailKind,
    pub from_address: String,
    pub to_address: String,
    pub subject: String,
    pub body: String,
    pub attachments: Vec<Attachment>,
}

impl MailMessage {
    /// Notifications and declines carry nothing; deliveries carry the document.
    pub fn check(&self) -> Result<(), TransportError> {
        let ok = match self.kind {
            MailKind::AuthorNotification | MailKind::DeclineNotice => self.attachments.is_empty(),
            MailKind::Delivery => !self.attachments.is_empty(),
        };
        if ok {
            Ok(())
        } else {
            Err(TransportError(format!("{:?} message {} has the wrong attachments", self.kind, self.message_id)))
        }
    }
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
#[error("mail transport failed: {0}")]
pub struct TransportError(pub String);
