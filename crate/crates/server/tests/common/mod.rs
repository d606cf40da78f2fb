#![allow(dead_code)]

use std::sync::Arc;

use axum::body::Body;
use axum::http::{Method, Request, StatusCode};
use axum::Router;
use chrono::{DateTime, TimeZone, Utc};
use fairdeal::clock::FixedClock;
use fairdeal::http::{router, AppState, ADMIN_SECRET_HEADER};
use fairdeal_core::repo::{AccessState, Depositor, DocumentPart, EprintId, EprintMetadata, VenueRef};
use fairdeal_core::{Repository, Settings};
use http_body_util::BodyExt;
use serde_json::Value;
use tower::ServiceExt;

pub const SECRET: &str = "s3cret";

pub fn t0() -> DateTime<Utc> {
    Utc.with_ymd_and_hms(2009, 3, 1, 9, 0, 0).unwrap()
}

pub struct TestApp {
    pub repo: Arc<Repository>,
    pub clock: Arc<FixedClock>,
    pub router: Router,
}

impl TestApp {
    pub fn new(settings: Settings) -> Self {
        TestApp::with_repo(Repository::in_memory(settings))
    }

    pub fn with_repo(repo: Repository) -> Self {
        let repo = Arc::new(repo);
        let clock = Arc::new(FixedClock::new(t0()));
        let state =
            AppState { repo: repo.clone(), clock: clock.clone(), admin_secret: Some(SECRET.into()), ui_dir: None };
        TestApp { repo, clock, router: router(state) }
    }

    pub async fn call(&self, method: Method, uri: &str, body: Option<Value>, admin: bool) -> (StatusCode, Vec<u8>) {
        let mut builder = Request::builder().method(method).uri(uri);
        if admin {
            builder = builder.header(ADMIN_SECRET_HEADER, SECRET);
        }
        let request = match body {
            Some(json) => {
                builder.header("content-type", "application/json").body(Body::from(json.to_string())).unwrap()
            }
            None => builder.body(Body::empty()).unwrap(),
        };
        let response = self.router.clone().oneshot(request).await.unwrap();
        let status = response.status();
        let bytes = response.into_body().collect().await.unwrap().to_bytes().to_vec();
        (status, bytes)
    }

    pub async fn json(&self, method: Method, uri: &str, body: Option<Value>, admin: bool) -> (StatusCode, Value) {
        let (status, bytes) = self.call(method, uri, body, admin).await;
        (status, serde_json::from_slice(&bytes).unwrap_or(Value::Null))
    }

    pub fn deposit(&self, n: usize, venue: VenueRef, access: AccessState, depositor_address: &str) -> EprintId {
        let blobs = self.repo.store().blobs();
        let parts = vec![
            DocumentPart::store(
                blobs,
                format!("paper{n}.pdf"),
                "application/pdf",
                format!("%PDF paper {n}").as_bytes(),
            )
            .unwrap(),
            DocumentPart::store(blobs, format!("data{n}.csv"), "text/csv", format!("a,b\n{n},1\n").as_bytes()).unwrap(),
        ];
        let metadata = EprintMetadata::new(format!("Article {n}"), vec![format!("Writer {n}")], 2009, venue, None);
        self.repo
            .deposit_eprint(metadata, Depositor::new(format!("Writer {n}"), depositor_address), parts, access, t0())
            .unwrap()
    }

    /// The decision token the author received for `request_id`.
    pub fn token_for(&self, request_id: &str) -> String {
        self.repo.store().get_request(&request_id.into()).unwrap().token.value
    }
}

pub fn request_body(email: &str, attested: bool) -> Value {
    serde_json::json!({ "email": email, "purpose": "research", "attested": attested })
}
