use chrono::{DateTime, Utc};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fairness::{self, FairnessAlert, HistoryEntry};
use crate::mail::{DeliveryReceipt, MailMessage};
use crate::repo::{DecisionCommit, EprintId, EprintRecord};
use crate::service::{source_of, Repository};

use super::{validate_address, Action, CopyRequest, Decision, DecisionToken, Purpose, RequestId};

/// Returned to the service layer only; the token goes into the author's
/// email and never back to the requester.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CreatedRequest {
    pub request_id: RequestId,
    pub token: String,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct DecisionOutcome {
    pub request_id: RequestId,
    pub eprint_id: EprintId,
    pub state_after: Decision,
    /// True only for the call that approved the request.
    pub delivered: bool,
}

impl Repository {
    /// Files a request for a Closed eprint and notifies its depositor.
    ///
    /// The request is stored before the notification is sent; if the
    /// transport fails the error is returned and the notification can be
    /// re-sent with [`Repository::resend_notification`].
    pub fn create_request(
        &self,
        eprint_id: &EprintId,
        requester_address: &str,
        purpose: Purpose,
        attested: bool,
        now: DateTime<Utc>,
    ) -> Result<CreatedRequest> {
        let eprint = self.store.get(eprint_id)?;
        if eprint.access.is_open() {
            return Err(Error::NotRequestable(eprint_id.to_string()));
        }
        if !attested {
            return Err(Error::AttestationRequired);
        }
        let requester_address = requester_address.trim();
        validate_address(requester_address)?;
        purpose.validate()?;

        let mut request = CopyRequest {
            id: self.store.next_request_id(),
            eprint_id: eprint_id.clone(),
            requester_address: requester_address.to_owned(),
            purpose,
            attested,
            created_at: now,
            decision: Decision::Pending,
            alerts_at_creation: Vec::new(),
        };
        if self.settings.monitor_enabled {
            request.alerts_at_creation = self.alerts_for_candidate(&request, &eprint, now);
        }
        let token = DecisionToken { value: self.tokens.issue(), request_id: request.id.clone(), issued_at: now };
        self.store.insert_request(request.clone(), token.clone())?;

        let message = self.notification(&request, &eprint, &token.value, format!("{}.notification", request.id))?;
        self.transport.send(&message, now)?;
        Ok(CreatedRequest { request_id: request.id, token: token.value })
    }

    fn alerts_for_candidate(
        &self,
        request: &CopyRequest,
        eprint: &EprintRecord,
        now: DateTime<Utc>,
    ) -> Vec<FairnessAlert> {
        let history = self.history();
        let (source, label) = source_of(eprint);
        let candidate = HistoryEntry::from_request(request, source, label);
        let profile = &self.settings.profile;
        let mut alerts = fairness::evaluate_request(&candidate, &history, profile, now);
        alerts.extend(
            fairness::scan_accepted_volume(&history, profile, now)
                .into_iter()
                .filter(|alert| alert.eprint_id == request.eprint_id),
        );
        alerts
    }

    fn notification(
        &self,
        request: &CopyRequest,
        eprint: &EprintRecord,
        token: &str,
        message_id: String,
    ) -> Result<MailMessage> {
        let to = eprint.depositor.effective_address(&self.settings.manager_address);
        self.templates.author_notification(
            request,
            eprint,
            &request.alerts_at_creation,
            token,
            &self.settings.mail,
            to,
            message_id,
        )
    }

    /// Applies the author's one-click answer.
    ///
    /// The first decision wins and is permanent. Repeating it is a success
    /// that sends nothing new (the message is re-offered to the transport,
    /// which drops the duplicate, so a delivery that failed earlier still
    /// goes out exactly once). The opposite action is a conflict.
    pub fn decide(&self, token_value: &str, action: Action, now: DateTime<Utc>) -> Result<DecisionOutcome> {
        let request_id = self.store.request_for_token(token_value)?;
        let (request, fresh) = match self.store.decide(&request_id, action, now)? {
            DecisionCommit::Applied(request) => (request, true),
            DecisionCommit::Unchanged(request) => (request, false),
        };
        let eprint = self.store.get(&request.eprint_id)?;
        let message = match action {
            Action::Accept => self.templates.delivery(&request, &eprint, self.store.blobs(), &self.settings.mail)?,
            Action::Reject => self.templates.decline(&request, &eprint, &self.settings.mail)?,
        };
        self.transport.send(&message, now)?;
        Ok(DecisionOutcome {
            request_id: request.id,
            eprint_id: request.eprint_id,
            state_after: request.decision,
            delivered: fresh && action == Action::Accept,
        })
    }

    /// Sends the author notification again, with the same decision links.
    pub fn resend_notification(&self, request_id: &RequestId, now: DateTime<Utc>) -> Result<DeliveryReceipt> {
        let current = self.store.get_request(request_id)?;
        if !current.request.decision.is_pending() {
            return Err(Error::Validation(format!(
                "request {request_id} is already {}",
                current.request.decision.label()
            )));
        }
        let stored = self.store.record_resend(request_id, now)?;
        let eprint = self.store.get(&stored.request.eprint_id)?;
        let message = self.notification(
            &stored.request,
            &eprint,
            &stored.token.value,
            format!("{request_id}.notification.resend-{}", stored.resends),
        )?;
        Ok(self.transport.send(&message, now)?)
    }
}
