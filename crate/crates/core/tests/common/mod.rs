#![allow(dead_code)]

use chrono::{DateTime, TimeZone, Utc};
use fairdeal_core::mail::MailContext;
use fairdeal_core::repo::{AccessState, Depositor, DocumentPart, EprintId, EprintMetadata, VenueRef};
use fairdeal_core::{Repository, Settings};

pub const GOMANN_TITLE: &str = "Palladium-mediated organic synthesis using porous polymer monolith formed in situ as a continuous catalyst support structure for application in microfluidic devices";
pub const DEPOSITOR_ADDRESS: &str = "a.gomann@uqam.example";

pub fn t0() -> DateTime<Utc> {
    Utc.with_ymd_and_hms(2009, 3, 1, 9, 0, 0).unwrap()
}

pub fn settings() -> Settings {
    Settings {
        mail: MailContext {
            repo_name: "Archipel".into(),
            base_url: "https://archipel.example.ca/".into(),
            admin_address: "archipel@example.ca".into(),
        },
        ..Settings::default()
    }
}

pub fn gomann_metadata() -> EprintMetadata {
    EprintMetadata::new(
        GOMANN_TITLE,
        vec!["Gömann, Anissa".into(), "Deverell, Jeremy A.".into()],
        2009,
        VenueRef::journal("Tetrahedron", Some("65"), Some("7"), Some("1450-1454")),
        None,
    )
}

/// Deposits the two-part Gömann record and returns its id.
pub fn deposit_gomann(repo: &Repository, access: AccessState) -> EprintId {
    let blobs = repo.store().blobs();
    let parts = vec![
        DocumentPart::store(blobs, "gomann2009.pdf", "application/pdf", b"%PDF-1.4 manuscript").unwrap(),
        DocumentPart::store(blobs, "supplementary.pdf", "application/pdf", b"%PDF-1.4 supplement").unwrap(),
    ];
    repo.deposit_eprint(gomann_metadata(), Depositor::new("Gömann, Anissa", DEPOSITOR_ADDRESS), parts, access, t0())
        .unwrap()
}

pub fn simple_eprint(repo: &Repository, n: usize, venue: VenueRef, access: AccessState) -> EprintId {
    let part = DocumentPart::store(
        repo.store().blobs(),
        format!("p{n}.pdf"),
        "application/pdf",
        format!("doc {n}").as_bytes(),
    )
    .unwrap();
    let metadata = EprintMetadata::new(format!("Title {n}"), vec![format!("Author {n}")], 2009, venue, None);
    repo.deposit_eprint(
        metadata,
        Depositor::new(format!("Author {n}"), format!("author{n}@dept.example")),
        vec![part],
        access,
        t0(),
    )
    .unwrap()
}
