//! Acceptance checks. Prints one PASS/FAIL line per criterion and exits
//! non-zero if any criterion fails.

mod common;

use std::collections::{BTreeMap, HashMap, HashSet};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::sync::{Arc, Barrier};
use std::time::{Duration as StdDuration, Instant};

use axum::http::{Method, StatusCode};
use base64::Engine;
use chrono::{DateTime, Duration, FixedOffset, NaiveDate, TimeZone, Utc};
use common::{t0, TestApp};
use fairdeal_core::fairness::{AlertKind, JurisdictionProfile};
use fairdeal_core::ingest::ingest_file;
use fairdeal_core::mail::{read_outbox, MailContext, MailKind};
use fairdeal_core::repo::{AccessState, Depositor, DocumentPart, EprintId, EprintMetadata, Event, Store, VenueRef};
use fairdeal_core::scheduler::{run_due_embargoes, RepoTimeZone};
use fairdeal_core::simulate::{self, EprintSelector, Scenario, ScenarioDecision, ScenarioRequest};
use fairdeal_core::stats::{Period, ROW_APPROVED, ROW_REJECTED, ROW_UNANSWERED};
use fairdeal_core::workflow::{Action, Decision, Purpose, TokenGenerator, TOKEN_ENTROPY_BITS};
use fairdeal_core::{Config, Repository, Settings};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde_json::json;

type Check = fn() -> Result<String, String>;

fn main() {
    let criteria: [(&str, Check); 8] = [
        ("response table arithmetic", response_table_arithmetic),
        ("closed access share arithmetic", closed_access_share),
        ("workflow end-to-end", workflow_end_to_end),
        ("exactly-once under concurrency", exactly_once),
        ("embargo property suite", embargo_properties),
        ("fairness monitor", fairness_monitor),
        ("privacy suite", privacy_suite),
        ("token security", token_security),
    ];
    let filter: Vec<String> = std::env::args().skip(1).filter(|a| !a.starts_with('-')).collect();
    let mut failed = 0;
    for (name, check) in criteria {
        if !filter.is_empty() && !filter.iter().any(|f| name.contains(f.as_str())) {
            continue;
        }
        let started = Instant::now();
        let outcome = catch_unwind(AssertUnwindSafe(check)).unwrap_or_else(|panic| {
            let text = panic
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| panic.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_default();
            Err(format!("panicked: {text}"))
        });
        let secs = started.elapsed().as_secs_f64();
        match outcome {
            Ok(detail) => println!("PASS  {name}: {detail} [{secs:.2}s]"),
            Err(detail) => {
                failed += 1;
                println!("FAIL  {name}: {detail} [{secs:.2}s]");
            }
        }
    }
    if failed > 0 {
        println!("{failed} acceptance criteria failed");
        std::process::exit(1);
    }
}

fn ensure(ok: bool, message: impl FnOnce() -> String) -> Result<(), String> {
    if ok {
        Ok(())
    } else {
        Err(message())
    }
}

fn scenario(accepts: usize, rejects: usize, undecided: usize, seed: u64) -> Scenario {
    let mut decisions: Vec<ScenarioDecision> = std::iter::repeat_n(ScenarioDecision::Accept, accepts)
        .chain(std::iter::repeat_n(ScenarioDecision::Reject, rejects))
        .chain(std::iter::repeat_n(ScenarioDecision::None, undecided))
        .collect();
    decisions.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    Scenario {
        seed,
        start: Utc.with_ymd_and_hms(2009, 1, 5, 8, 0, 0).unwrap(),
        spacing: StdDuration::from_secs(600),
        synthetic_eprints: 25,
        requests: decisions
            .into_iter()
            .enumerate()
            .map(|(i, decision)| ScenarioRequest {
                eprint: EprintSelector::Random,
                requester: format!("reader{i}@reader.example"),
                purpose: Purpose::Research,
                decision,
                decision_delay: StdDuration::from_secs(3600 * (1 + (i as u64 % 72))),
            })
            .collect(),
    }
}

/// Rows for a simulated scenario once every request is past the window.
fn simulated_rows(s: &Scenario) -> Result<(BTreeMap<String, String>, [u64; 3]), String> {
    let mut repo = Repository::in_memory(Settings::default());
    simulate::run(&mut repo, s).map_err(|e| e.to_string())?;
    let now = s.end() + Duration::days(31);
    let stats = repo
        .response_stats(Period::new(s.start, now).unwrap(), StdDuration::from_secs(30 * 86_400), now)
        .map_err(|e| e.to_string())?;

    // independent count from the event log
    let events = repo.store().events().map_err(|e| e.to_string())?;
    let mut decided: HashMap<_, &Decision> = HashMap::new();
    let mut created = 0u64;
    for e in &events {
        match &e.event {
            Event::RequestCreated { .. } => created += 1,
            Event::RequestDecided { request_id, decision } => {
                decided.insert(request_id.clone(), decision);
            }
            _ => {}
        }
    }
    let approved = decided.values().filter(|d| matches!(d, Decision::Approved { .. })).count() as u64;
    let rejected = decided.values().filter(|d| matches!(d, Decision::Rejected { .. })).count() as u64;
    let counted = [approved, created - approved - rejected, rejected];
    let reported = [stats.approved, stats.unanswered, stats.rejected];
    ensure(counted == reported, || format!("stats {reported:?} but event log says {counted:?}"))?;
    ensure(stats.fresh_pending == 0, || "requests still inside the window".into())?;
    Ok((stats.rendered_rows, counted))
}

fn response_table_arithmetic() -> Result<String, String> {
    let started = Instant::now();
    let (rows, _) = simulated_rows(&scenario(27, 1, 72, 4))?;
    let want = [(ROW_APPROVED, "27 %"), (ROW_UNANSWERED, "72 %"), (ROW_REJECTED, "1 %")];
    for (label, expected) in want {
        ensure(rows[label] == expected, || format!("100-request {label}: {:?} != {expected:?}", rows[label]))?;
    }
    let (rows, counts) = simulated_rows(&scenario(157, 2, 141, 5))?;
    ensure(counts == [157, 141, 2], || format!("300-request counts {counts:?}"))?;
    ensure(rows[ROW_REJECTED] == "< 1 %", || format!("300-request rejected row {:?}", rows[ROW_REJECTED]))?;
    ensure(rows[ROW_APPROVED] == "52 %" && rows[ROW_UNANSWERED] == "47 %", || format!("300-request rows {rows:?}"))?;
    let elapsed = started.elapsed();
    ensure(elapsed < StdDuration::from_secs(5), || format!("took {elapsed:?}, limit 5 s"))?;
    Ok(format!("27 % / 72 % / 1 % and \"< 1 %\" for 2/300 in {:.2}s", elapsed.as_secs_f64()))
}

fn ingest_store(total: usize, closed: usize, seed: u64) -> Result<String, String> {
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    std::fs::write(dir.path().join("paper.pdf"), b"%PDF-1.4 shared manuscript").unwrap();
    let mut access: Vec<bool> = (0..total).map(|i| i < closed).collect();
    access.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    let mut lines = String::new();
    for (i, is_closed) in access.iter().enumerate() {
        let line = json!({
            "title": format!("Article {i}"),
            "creators": [format!("Author {}, A.", i % 300)],
            "year": 2000 + (i % 10) as i32,
            "venue": {"kind": "journal_article", "container_title": format!("Journal {}", i % 40), "volume": "1", "issue": (i % 12).to_string()},
            "access": if *is_closed { "closed" } else { "open" },
            "depositor": {"name": "Author", "email": format!("author{}@staff.example", i % 300)},
            "documents": ["paper.pdf"],
        });
        lines.push_str(&line.to_string());
        lines.push('\n');
    }
    let file = dir.path().join("store.jsonl");
    std::fs::write(&file, lines).unwrap();

    let repo = Repository::open(&dir.path().join("store"), &Config::default()).map_err(|e| e.to_string())?;
    let report = ingest_file(&repo, &file, t0()).map_err(|e| e.to_string())?;
    ensure(report.is_clean() && report.deposited.len() == total, || {
        format!("ingest report {:?}", report.errors.first())
    })?;
    let stats = repo.access_stats(t0());
    ensure(stats.total == total as u64 && stats.closed == closed as u64, || {
        format!("counted {}/{}", stats.closed, stats.total)
    })?;
    Ok(stats.closed_share_display)
}

fn closed_access_share() -> Result<String, String> {
    let started = Instant::now();
    let a = ingest_store(7864, 551, 1)?;
    ensure(a == "551 (7 %)", || format!("7 864/551 rendered {a:?}"))?;
    let b = ingest_store(7515, 353, 2)?;
    ensure(b == "353 (5 %)", || format!("7 515/353 rendered {b:?}"))?;
    let elapsed = started.elapsed();
    ensure(elapsed < StdDuration::from_secs(30), || format!("took {elapsed:?}, limit 30 s"))?;
    Ok(format!("{a:?} and {b:?} including ingestion in {:.2}s", elapsed.as_secs_f64()))
}

fn gomann(repo: &Repository) -> EprintId {
    let blobs = repo.store().blobs();
    let parts = vec![
        DocumentPart::store(blobs, "gomann2009.pdf", "application/pdf", b"%PDF-1.4 manuscript").unwrap(),
        DocumentPart::store(blobs, "supplementary.pdf", "application/pdf", b"%PDF-1.4 supplement").unwrap(),
    ];
    let metadata = EprintMetadata::new(
        "Palladium-mediated organic synthesis using porous polymer monolith formed in situ as a continuous catalyst support structure for application in microfluidic devices",
        vec!["Gömann, Anissa".into(), "Deverell, Jeremy A.".into()],
        2009,
        VenueRef::journal("Tetrahedron", Some("65"), Some("7"), Some("1450-1454")),
        None,
    );
    repo.deposit_eprint(
        metadata,
        Depositor::new("Gömann, Anissa", "a.gomann@uqam.example"),
        parts,
        AccessState::closed(),
        t0(),
    )
    .unwrap()
}

fn golden(name: &str, token: &str) -> String {
    let path = format!("{}/../core/tests/golden/{name}", env!("CARGO_MANIFEST_DIR"));
    std::fs::read_to_string(path).unwrap().replace("TOKEN", token)
}

fn workflow_end_to_end() -> Result<String, String> {
    let dir = tempfile::tempdir().unwrap();
    let config = Config {
        repo_name: "Archipel".into(),
        base_url: "https://archipel.example.ca".into(),
        admin_address: "archipel@example.ca".into(),
        ..Config::default()
    };
    let repo = Repository::open(dir.path(), &config).map_err(|e| e.to_string())?;
    let id = gomann(&repo);
    let accepted = repo.create_request(&id, "reader@example.org", Purpose::Research, true, t0()).unwrap();
    repo.decide(&accepted.token, Action::Accept, t0()).unwrap();
    let rejected = repo.create_request(&id, "reader@example.org", Purpose::Research, true, t0()).unwrap();
    repo.decide(&rejected.token, Action::Reject, t0()).unwrap();

    let outbox = read_outbox(&dir.path().join("outbox.jsonl")).map_err(|e| e.to_string())?;
    let per_request = |rid: &str| -> Vec<_> {
        outbox.iter().filter(|r| r.request_id.as_ref().map(|x| x.as_str()) == Some(rid)).collect()
    };
    let acc = per_request(accepted.request_id.as_str());
    let kinds: Vec<_> = acc.iter().map(|r| r.kind).collect();
    ensure(kinds == [MailKind::AuthorNotification, MailKind::Delivery], || format!("accept produced {kinds:?}"))?;
    let parts = repo.get_eprint(&id).unwrap().parts;
    let attached: Vec<_> = acc[1].attachments.iter().map(|a| a.digest.clone()).collect();
    let stored: Vec<_> = parts.iter().map(|p| p.content_digest.clone()).collect();
    ensure(attached == stored, || format!("attachments {attached:?} != parts {stored:?}"))?;
    ensure(acc[0].body == golden("author_notification.txt", &accepted.token), || {
        "notification body differs from golden".into()
    })?;
    ensure(acc[1].body == golden("delivery.txt", &accepted.token), || "delivery body differs from golden".into())?;

    let rej = per_request(rejected.request_id.as_str());
    let kinds: Vec<_> = rej.iter().map(|r| r.kind).collect();
    ensure(kinds == [MailKind::AuthorNotification, MailKind::DeclineNotice], || format!("reject produced {kinds:?}"))?;
    ensure(rej[0].body == golden("author_notification.txt", &rejected.token), || "second notification differs".into())?;
    ensure(rej[1].body == golden("decline.txt", &rejected.token), || "decline body differs from golden".into())?;
    Ok(format!(
        "[AuthorNotification, Delivery] with {} parts; [AuthorNotification, DeclineNotice]; bodies match golden files",
        parts.len()
    ))
}

fn exactly_once() -> Result<String, String> {
    const TRIALS: usize = 1000;
    let repo = Arc::new(Repository::in_memory(Settings::default()));
    let id = gomann(&repo);
    let mut violations = Vec::new();
    for trial in 0..TRIALS {
        let created =
            repo.create_request(&id, &format!("r{trial}@reader.example"), Purpose::Research, true, t0()).unwrap();
        let second = if trial % 2 == 0 { Action::Accept } else { Action::Reject };
        let barrier = Arc::new(Barrier::new(2));
        let handles: Vec<_> = [Action::Accept, second]
            .into_iter()
            .map(|action| {
                let (repo, token, barrier) = (repo.clone(), created.token.clone(), barrier.clone());
                std::thread::spawn(move || {
                    barrier.wait();
                    repo.decide(&token, action, t0())
                })
            })
            .collect();
        let results: Vec<_> = handles.into_iter().map(|h| h.join().unwrap()).collect();
        let delivered = results.iter().filter(|r| r.as_ref().is_ok_and(|o| o.delivered)).count();
        if results.iter().all(|r| r.is_err()) || delivered > 1 {
            violations.push(format!("trial {trial}: results {results:?}"));
        }
    }
    let events = repo.store().events().map_err(|e| e.to_string())?;
    let mut decisions: HashMap<String, usize> = HashMap::new();
    for e in &events {
        if let Event::RequestDecided { request_id, .. } = &e.event {
            *decisions.entry(request_id.to_string()).or_default() += 1;
        }
    }
    let records = repo.outbox().unwrap().records();
    let mut deliveries: HashMap<String, usize> = HashMap::new();
    let mut answers: HashMap<String, usize> = HashMap::new();
    for r in &records {
        let rid = r.request_id.as_ref().unwrap().to_string();
        match r.kind {
            MailKind::Delivery => *deliveries.entry(rid.clone()).or_default() += 1,
            MailKind::DeclineNotice => {}
            MailKind::AuthorNotification => continue,
        }
        *answers.entry(rid).or_default() += 1;
    }
    for request in repo.store().requests() {
        let rid = request.id.to_string();
        let d = decisions.get(&rid).copied().unwrap_or(0);
        if d != 1 {
            violations.push(format!("{rid}: {d} terminal decisions"));
        }
        if deliveries.get(&rid).copied().unwrap_or(0) > 1 || answers.get(&rid).copied().unwrap_or(0) != 1 {
            violations.push(format!("{rid}: {:?} deliveries, {:?} answers", deliveries.get(&rid), answers.get(&rid)));
        }
    }
    ensure(violations.is_empty(), || format!("{} violations, first: {}", violations.len(), violations[0]))?;
    Ok(format!("{TRIALS} racing trials, 0 violations"))
}

#[derive(Clone, Copy, Debug)]
enum Initial {
    Open,
    Permanent,
    Until(NaiveDate),
}

fn embargo_case(seed: u64) -> Result<(), String> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let day0 = NaiveDate::from_ymd_opt(2010, 1, 1).unwrap();
    let base: DateTime<Utc> = Utc.with_ymd_and_hms(2010, 1, 1, 0, 0, 0).unwrap();
    let offset = FixedOffset::east_opt(rng.random_range(-12 * 3600..=14 * 3600) / 900 * 900).unwrap();
    let zone = RepoTimeZone::from_offset(offset);
    let store = Store::in_memory();
    let n = rng.random_range(0..=20);
    let initial: Vec<Initial> = (0..n)
        .map(|_| match rng.random_range(0..4) {
            0 => Initial::Open,
            1 => Initial::Permanent,
            _ => Initial::Until(day0 + Duration::days(rng.random_range(-3..40))),
        })
        .collect();
    let ids: Vec<EprintId> = initial
        .iter()
        .enumerate()
        .map(|(i, init)| {
            let access = match init {
                Initial::Open => AccessState::Open,
                Initial::Permanent => AccessState::closed(),
                Initial::Until(d) => AccessState::embargoed_until(*d),
            };
            let part = DocumentPart::store(store.blobs(), "a.pdf", "application/pdf", &[i as u8 + 1]).unwrap();
            let metadata = EprintMetadata::new(
                format!("t{i}"),
                vec!["A".into()],
                2009,
                VenueRef::journal("J", None, None, None),
                None,
            );
            store.deposit(metadata, Depositor::new("A", "a@staff.example"), vec![part], access, base).unwrap()
        })
        .collect();
    let mut ticks: Vec<DateTime<Utc>> = (0..rng.random_range(1..6))
        .map(|_| base + Duration::minutes(rng.random_range(-24 * 60..50 * 24 * 60)))
        .collect();
    ticks.sort();

    for &at in &ticks {
        let before: Vec<_> = ids.iter().map(|id| store.get(id).unwrap().access).collect();
        run_due_embargoes(&store, at, zone).map_err(|e| e.to_string())?;
        let after: Vec<_> = ids.iter().map(|id| store.get(id).unwrap()).collect();
        for (b, a) in before.iter().zip(&after) {
            ensure(!(b.is_open() && !a.access.is_open()), || format!("seed {seed}: scheduler closed {}", a.id))?;
        }
        let repeat = run_due_embargoes(&store, at, zone).map_err(|e| e.to_string())?;
        let again: Vec<_> = ids.iter().map(|id| store.get(id).unwrap()).collect();
        ensure(repeat.is_empty() && again == after, || format!("seed {seed}: second tick at {at} changed state"))?;

        // brute-force oracle after every tick
        let local = at.with_timezone(&offset).date_naive();
        for (record, init) in after.iter().zip(&initial) {
            let opened_by_now = ticks.iter().take_while(|t| **t <= at).any(|t| match init {
                Initial::Until(d) => t.with_timezone(&offset).date_naive() >= *d,
                _ => false,
            });
            let expect_open = matches!(init, Initial::Open) || opened_by_now;
            ensure(record.access.is_open() == expect_open, || {
                format!("seed {seed}: {} {init:?} at local {local}: open={}", record.id, record.access.is_open())
            })?;
        }
    }
    Ok(())
}

fn embargo_properties() -> Result<String, String> {
    const CASES: u64 = 10_000;
    let failures: Vec<String> = (0..CASES).into_par_iter().filter_map(|seed| embargo_case(seed).err()).collect();
    ensure(failures.is_empty(), || format!("{} of {CASES} cases failed, first: {}", failures.len(), failures[0]))?;
    Ok(format!("{CASES} randomized cases match the date oracle, 0 violations"))
}

fn au_repo(monitor: bool) -> Repository {
    Repository::in_memory(Settings {
        profile: JurisdictionProfile::australia(),
        monitor_enabled: monitor,
        ..Settings::default()
    })
}

fn simple(repo: &Repository, n: usize, venue: VenueRef) -> EprintId {
    let part =
        DocumentPart::store(repo.store().blobs(), "p.pdf", "application/pdf", format!("doc {n}").as_bytes()).unwrap();
    let metadata = EprintMetadata::new(format!("Title {n}"), vec!["A".into()], 2009, venue, None);
    repo.deposit_eprint(
        metadata,
        Depositor::new("A", format!("a{n}@staff.example")),
        vec![part],
        AccessState::closed(),
        t0(),
    )
    .unwrap()
}

fn fairness_monitor() -> Result<String, String> {
    let mut rng = ChaCha8Rng::seed_from_u64(77);
    let window_secs = 30 * 86_400;
    for round in 0..200 {
        let repo = au_repo(true);
        // one article from each of several issues: never an alert
        let issues = rng.random_range(1..6);
        let ids: Vec<_> = (0..issues)
            .map(|i| simple(&repo, i, VenueRef::journal("Physics Letters", Some("3"), Some(&i.to_string()), None)))
            .collect();
        let mut at = t0();
        for id in &ids {
            let c = repo.create_request(id, "r@reader.example", Purpose::Research, true, at).unwrap();
            let alerts = repo.store().get_request(&c.request_id).unwrap().request.alerts_at_creation;
            ensure(alerts.is_empty(), || format!("round {round}: one-per-issue request alerted: {alerts:?}"))?;
            at += Duration::seconds(rng.random_range(0..window_secs));
        }
        // a second article from one of those issues within the window: always an alert
        let target = rng.random_range(0..issues);
        let sibling =
            simple(&repo, 100, VenueRef::journal("physics  letters", Some("3"), Some(&target.to_string()), None));
        let first_request_time =
            repo.store().requests().into_iter().find(|r| r.eprint_id == ids[target]).unwrap().created_at;
        let when = first_request_time + Duration::seconds(rng.random_range(0..=window_secs));
        let c = repo.create_request(&sibling, "r@READER.example", Purpose::Research, true, when).unwrap();
        let alerts = repo.store().get_request(&c.request_id).unwrap().request.alerts_at_creation;
        ensure(alerts.iter().any(|a| a.kind == AlertKind::SameIssueMultiRequest), || {
            format!("round {round}: second article in issue {target} did not alert")
        })?;
    }

    for (approvals, expect) in [(9usize, false), (10, true)] {
        let repo = au_repo(true);
        let id = simple(&repo, 0, VenueRef::journal("J", Some("1"), Some("1"), None));
        for i in 0..approvals {
            let at = t0() + Duration::hours(i as i64 * 70);
            let c = repo.create_request(&id, &format!("r{i}@reader.example"), Purpose::Research, true, at).unwrap();
            repo.decide(&c.token, Action::Accept, at).unwrap();
        }
        let high =
            repo.alerts(t0() + Duration::days(30)).into_iter().any(|a| a.kind == AlertKind::HighVolumeSameArticle);
        ensure(high == expect, || format!("{approvals} approvals: high-volume alert = {high}"))?;
    }

    // the same traffic with the monitor on and off
    let play = |monitor: bool| {
        let repo = au_repo(monitor).with_tokens(TokenGenerator::seeded(5));
        let ids: Vec<_> = (0..6)
            .map(|n| simple(&repo, n, VenueRef::journal("J", Some("1"), Some(&(n % 2).to_string()), None)))
            .collect();
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        let mut outcomes = Vec::new();
        for i in 0..120 {
            let at = t0() + Duration::hours(i);
            let who = format!("r{}@reader.example", rng.random_range(0..3));
            let c =
                repo.create_request(&ids[rng.random_range(0..ids.len())], &who, Purpose::Research, true, at).unwrap();
            if rng.random_bool(0.8) {
                let action = if rng.random_bool(0.7) { Action::Accept } else { Action::Reject };
                outcomes.push(repo.decide(&c.token, action, at).map_err(|e| e.to_string()));
            }
        }
        let alerted = repo.store().requests().iter().filter(|r| !r.alerts_at_creation.is_empty()).count();
        let requests: Vec<_> = repo
            .store()
            .requests()
            .into_iter()
            .map(|mut r| {
                r.alerts_at_creation.clear();
                r
            })
            .collect();
        let mail: Vec<_> = repo
            .outbox()
            .unwrap()
            .records()
            .into_iter()
            .map(|r| {
                let body = if r.kind == MailKind::AuthorNotification { String::new() } else { r.body };
                (r.message_id, r.kind, r.to, body, r.attachments)
            })
            .collect();
        (outcomes, requests, mail, alerted)
    };
    let on = play(true);
    let off = play(false);
    ensure(on.0 == off.0 && on.1 == off.1, || "monitor changed a request outcome".into())?;
    ensure(on.2 == off.2, || "monitor changed a message other than notification text".into())?;
    ensure(on.3 > 0 && off.3 == 0, || format!("alerts stored: on={} off={}", on.3, off.3))?;
    Ok(format!(
        "200 randomized same-issue rounds; 9 approvals silent, 10 alert; monitor on/off differ only in advice ({} alerted requests)",
        on.3
    ))
}

fn random_address(rng: &mut ChaCha8Rng, domain: &str) -> String {
    let len = rng.random_range(3..10);
    let local: String = (0..len).map(|_| rng.random_range(b'a'..=b'z') as char).collect();
    format!("{local}{}@{domain}", rng.random_range(0..1000))
}

fn privacy_suite() -> Result<String, String> {
    const BATCHES: usize = 100;
    const PER_BATCH: usize = 10;
    let runtime = tokio::runtime::Runtime::new().unwrap();
    let mut violations: Vec<String> = Vec::new();
    let mut responses = 0usize;
    let mut requester_mail = 0usize;

    for batch in 0..BATCHES {
        let mut rng = ChaCha8Rng::seed_from_u64(1000 + batch as u64);
        let settings = Settings {
            mail: MailContext {
                repo_name: "Repo".into(),
                base_url: "https://repo.example".into(),
                admin_address: "admin@repo.example".into(),
            },
            monitor_enabled: rng.random_bool(0.5),
            ..Settings::default()
        };
        let app = TestApp::new(settings);

        let mut depositors: Vec<String> = Vec::new();
        let mut ids = Vec::new();
        for n in 0..rng.random_range(2..6) {
            let address = random_address(&mut rng, "staff.example");
            let access = if rng.random_bool(0.7) { AccessState::closed() } else { AccessState::Open };
            let venue = VenueRef::journal("J", Some("1"), Some(&rng.random_range(0..2).to_string()), None);
            let id = if rng.random_bool(0.2) {
                // a depositor who has left, with or without a forwarding address
                let mut depositor = Depositor::new("Former, A.", address.clone());
                depositor.active = false;
                if rng.random_bool(0.5) {
                    let fallback = random_address(&mut rng, "staff.example");
                    depositor.fallback_address = Some(fallback.clone());
                    depositors.push(fallback);
                }
                let part = DocumentPart::store(app.repo.store().blobs(), "p.pdf", "application/pdf", b"%PDF").unwrap();
                let metadata =
                    EprintMetadata::new(format!("Article {n}"), vec!["Former, A.".into()], 2009, venue, None);
                app.repo.deposit_eprint(metadata, depositor, vec![part], access, t0()).unwrap()
            } else {
                app.deposit(n, venue, access, &address)
            };
            depositors.push(address);
            ids.push(id);
        }

        let mut tokens: Vec<String> = Vec::new();
        let mut requesters: HashSet<String> = HashSet::new();
        let scan =
            |label: &str, body: &[u8], supplied: Option<&str>, tokens: &[String], violations: &mut Vec<String>| {
                let text = String::from_utf8_lossy(body);
                for d in &depositors {
                    if text.contains(d.as_str()) {
                        violations.push(format!("batch {batch} {label}: depositor address {d}"));
                    }
                }
                for t in tokens {
                    if Some(t.as_str()) != supplied && text.contains(t.as_str()) {
                        violations.push(format!("batch {batch} {label}: foreign token"));
                    }
                }
            };

        for _ in 0..PER_BATCH {
            let id = &ids[rng.random_range(0..ids.len())];
            let requester = random_address(&mut rng, "reader.example");
            requesters.insert(requester.clone());
            runtime.block_on(async {
                let (_, body) = app.call(Method::GET, &format!("/eprints/{id}"), None, false).await;
                scan("view", &body, None, &tokens, &mut violations);
                let (_, body) = app.call(Method::GET, "/eprints", None, false).await;
                scan("list", &body, None, &tokens, &mut violations);
                let (_, body) = app.call(Method::GET, &format!("/eprints/{id}/documents/0"), None, false).await;
                scan("download", &body, None, &tokens, &mut violations);
                responses += 3;

                let purpose = match rng.random_range(0..5) {
                    0 => json!("research"),
                    1 => json!("private_study"),
                    2 => json!("criticism"),
                    3 => json!("news_reporting"),
                    _ => json!({"other": "teaching a seminar"}),
                };
                let email = if rng.random_bool(0.1) { "not-an-address".to_owned() } else { requester.clone() };
                let body = json!({"email": email, "purpose": purpose, "attested": rng.random_bool(0.9)});
                let (status, bytes) =
                    app.call(Method::POST, &format!("/eprints/{id}/request"), Some(body), false).await;
                scan("request", &bytes, None, &tokens, &mut violations);
                responses += 1;
                if status != StatusCode::CREATED {
                    return;
                }
                let created: serde_json::Value = serde_json::from_slice(&bytes).unwrap();
                let token = app.token_for(created["request_id"].as_str().unwrap());
                tokens.push(token.clone());

                for _ in 0..rng.random_range(0..4) {
                    let action = if rng.random_bool(0.6) { "accept" } else { "reject" };
                    let action = if rng.random_bool(0.05) { "maybe" } else { action };
                    let uri = format!("/respond?token={token}&action={action}");
                    let (_, body) = app.call(Method::GET, &uri, None, false).await;
                    scan("respond", &body, Some(&token), &tokens, &mut violations);
                    let (_, body) =
                        app.call(Method::GET, &format!("/respond?token={token}x&action=accept"), None, false).await;
                    scan("respond-bad-token", &body, None, &tokens, &mut violations);
                    responses += 2;
                }
            });
        }

        for record in app.repo.outbox().unwrap().records() {
            if !requesters.contains(&record.to) {
                continue;
            }
            requester_mail += 1;
            let mut text = format!("{}\n{}\n{}\n{}", record.from, record.to, record.subject, record.body);
            for a in &record.attachments {
                text.push_str(&a.filename);
            }
            scan("requester mail", text.as_bytes(), None, &tokens, &mut violations);
        }
    }
    let workflows = BATCHES * PER_BATCH;
    ensure(requester_mail > 0, || "no requester-addressed mail was produced".into())?;
    ensure(violations.is_empty(), || format!("{} violations, first: {}", violations.len(), violations[0]))?;
    Ok(format!(
        "{workflows} fuzzed workflows, {responses} public responses, {requester_mail} requester messages, 0 violations"
    ))
}

fn token_security() -> Result<String, String> {
    const ISSUES: usize = 1_000_000;
    ensure(TOKEN_ENTROPY_BITS >= 128, || format!("{TOKEN_ENTROPY_BITS} bits"))?;
    let generator = TokenGenerator::from_entropy();
    let engine = base64::engine::general_purpose::URL_SAFE_NO_PAD;
    let mut seen: HashSet<[u8; 32]> = HashSet::with_capacity(ISSUES);
    for _ in 0..ISSUES {
        let token = generator.issue();
        let raw = engine.decode(&token).map_err(|e| format!("{token}: {e}"))?;
        let raw: [u8; 32] = raw.try_into().map_err(|r: Vec<u8>| format!("token decodes to {} bytes", r.len()))?;
        ensure(seen.insert(raw), || format!("duplicate token {token}"))?;
    }
    // bit balance over the whole sample: a stuck or biased generator shows up here
    let ones: u64 = seen.iter().map(|t| t.iter().map(|b| b.count_ones() as u64).sum::<u64>()).sum();
    let share = ones as f64 / (ISSUES as f64 * 256.0);
    ensure((share - 0.5).abs() < 0.001, || format!("bit balance {share}"))?;

    let repo = Repository::in_memory(Settings::default());
    let id = gomann(&repo);
    let created: Vec<_> = (0..200)
        .map(|i| repo.create_request(&id, &format!("r{i}@reader.example"), Purpose::Research, true, t0()).unwrap())
        .collect();
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    for c in &created {
        let before = repo.store().requests();
        let action = if rng.random_bool(0.5) { Action::Accept } else { Action::Reject };
        let outcome = repo.decide(&c.token, action, t0()).map_err(|e| e.to_string())?;
        ensure(outcome.request_id == c.request_id, || "decision applied to another request".into())?;
        let after = repo.store().requests();
        let changed: Vec<_> = before.iter().zip(&after).filter(|(b, a)| b != a).map(|(b, _)| b.id.clone()).collect();
        ensure(changed == [c.request_id.clone()], || format!("token for {} changed {changed:?}", c.request_id))?;
        let mut forged = c.token.clone().into_bytes();
        let i = rng.random_range(0..forged.len());
        forged[i] = if forged[i] == b'a' { b'b' } else { b'a' };
        let forged = String::from_utf8(forged).unwrap();
        ensure(repo.decide(&forged, Action::Accept, t0()).is_err(), || "forged token accepted".into())?;
    }
    Ok(format!("{TOKEN_ENTROPY_BITS}-bit tokens, {ISSUES} issued with no duplicates, 200 decisions each touched only their own request"))
}
