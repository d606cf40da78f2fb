use std::path::Path;

use minijinja::{context, Environment};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fairness::FairnessAlert;
use crate::repo::{BlobStore, EprintId, EprintRecord};
use crate::workflow::{CopyRequest, Decision};

use super::{Attachment, MailKind, MailMessage};

const TEMPLATE_NAMES: [(&str, &str); 6] = [
    ("author_notification.subject.txt", include_str!("../../templates/author_notification.subject.txt")),
    ("author_notification.body.txt", include_str!("../../templates/author_notification.body.txt")),
    ("delivery.subject.txt", include_str!("../../templates/delivery.subject.txt")),
    ("delivery.body.txt", include_str!("../../templates/delivery.body.txt")),
    ("decline.subject.txt", include_str!("../../templates/decline.subject.txt")),
    ("decline.body.txt", include_str!("../../templates/decline.body.txt")),
];

/// Repository identity used in every message.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct MailContext {
    pub repo_name: String,
    pub base_url: String,
    pub admin_address: String,
}

impl MailContext {
    fn base(&self) -> &str {
        self.base_url.trim_end_matches('/')
    }

    pub fn eprint_url(&self, id: &EprintId) -> String {
        format!("{}/{}/", self.base(), id)
    }

    pub fn respond_url(&self, token: &str, action: &str) -> String {
        format!("{}/respond?token={token}&action={action}", self.base())
    }
}

/// The six message templates (subject and body per kind), with named
/// `{{ placeholder }}` slots. Built-in defaults can be replaced file by file
/// from a directory.
pub struct Templates {
    env: Environment<'static>,
}

impl Templates {
    pub fn builtin() -> Self {
        Templates::load(None).expect("built-in templates compile")
    }

    pub fn load(dir: Option<&Path>) -> Result<Self> {
        let mut env = Environment::new();
        env.set_trim_blocks(true);
        env.set_lstrip_blocks(true);
        env.set_keep_trailing_newline(true);
        env.set_undefined_behavior(minijinja::UndefinedBehavior::Strict);
        for (name, default) in TEMPLATE_NAMES {
            let source = match dir.map(|d| d.join(name)).filter(|p| p.exists()) {
                Some(path) => {
                    std::fs::read_to_string(&path).map_err(|e| Error::Config(format!("{}: {e}", path.display())))?
                }
                None => default.to_owned(),
            };
            env.add_template_owned(name.to_owned(), source)?;
        }
        Ok(Templates { env })
    }

    fn render(&self, name: &str, ctx: minijinja::Value) -> Result<String> {
        Ok(self.env.get_template(name)?.render(ctx)?)
    }

    fn subject(&self, name: &str, ctx: minijinja::Value) -> Result<String> {
        Ok(self.render(name, ctx)?.trim().to_owned())
    }

    #[allow(clippy::too_many_arguments)]
    pub fn author_notification(
        &self,
        request: &CopyRequest,
        eprint: &EprintRecord,
        alerts: &[FairnessAlert],
        token: &str,
        mail: &MailContext,
        to_address: &str,
        message_id: String,
    ) -> Result<MailMessage> {
        if !request.decision.is_pending() {
            return Err(Error::Validation(format!("request {} is already {}", request.id, request.decision.label())));
        }
        let alert_lines: Vec<&str> = alerts.iter().map(|a| a.message.as_str()).collect();
        let ctx = context! {
            repo_name => &mail.repo_name,
            base_url => mail.base(),
            admin_address => &mail.admin_address,
            title => eprint.metadata.title.trim(),
            citation => &eprint.metadata.citation_line,
            eprint_url => mail.eprint_url(&eprint.id),
            requester => &request.requester_address,
            purpose => request.purpose.describe(),
            alert_lines => alert_lines,
            accept_url => mail.respond_url(token, "accept"),
            reject_url => mail.respond_url(token, "reject"),
        };
        Ok(MailMessage {
            message_id,
            request_id: Some(request.id.clone()),
            kind: MailKind::AuthorNotification,
            from_address: mail.admin_address.clone(),
            to_address: to_address.to_owned(),
            subject: self.subject("author_notification.subject.txt", ctx.clone())?,
            body: self.render("author_notification.body.txt", ctx)?,
            attachments: Vec::new(),
        })
    }

    /// Every document part goes out in one message.
    pub fn delivery(
        &self,
        request: &CopyRequest,
        eprint: &EprintRecord,
        blobs: &dyn BlobStore,
        mail: &MailContext,
    ) -> Result<MailMessage> {
        if !matches!(request.decision, Decision::Approved { .. }) {
            return Err(Error::Validation(format!("request {} is not approved", request.id)));
        }
        let attachments = eprint
            .parts
            .iter()
            .map(|part| {
                Ok(Attachment {
                    filename: part.label.clone(),
                    media_type: part.media_type.clone(),
                    bytes: blobs.get(&part.storage_ref)?,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        let ctx = context! {
            repo_name => &mail.repo_name,
            base_url => mail.base(),
            admin_address => &mail.admin_address,
            title => eprint.metadata.title.trim(),
            citation => &eprint.metadata.citation_line,
            eprint_url => mail.eprint_url(&eprint.id),
            part_count => attachments.len(),
        };
        Ok(MailMessage {
            message_id: format!("{}.delivery", request.id),
            request_id: Some(request.id.clone()),
            kind: MailKind::Delivery,
            from_address: mail.admin_address.clone(),
            to_address: request.requester_address.clone(),
            subject: self.subject("delivery.subject.txt", ctx.clone())?,
            body: self.render("delivery.body.txt", ctx)?,
            attachments,
        })
    }

    pub fn decline(&self, request: &CopyRequest, eprint: &EprintRecord, mail: &MailContext) -> Result<MailMessage> {
        if !matches!(request.decision, Decision::Rejected { .. }) {
            return Err(Error::Validation(format!("request {} is not rejected", request.id)));
        }
        let ctx = context! {
            repo_name => &mail.repo_name,
            base_url => mail.base(),
            admin_address => &mail.admin_address,
            title => eprint.metadata.title.trim(),
            citation => &eprint.metadata.citation_line,
            eprint_url => mail.eprint_url(&eprint.id),
        };
        Ok(MailMessage {
            message_id: format!("{}.decline", request.id),
            request_id: Some(request.id.clone()),
            kind: MailKind::DeclineNotice,
            from_address: mail.admin_address.clone(),
            to_address: request.requester_address.clone(),
            subject: self.subject("decline.subject.txt", ctx.clone())?,
            body: self.render("decline.body.txt", ctx)?,
            attachments: Vec::new(),
        })
    }
}

impl Default for Templates {
    fn default() -> Self {
        Templates::builtin()
    }
}
