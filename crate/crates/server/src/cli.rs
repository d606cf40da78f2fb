use std::net::SocketAddr;
use std::path::PathBuf;
use std::process::ExitCode;
use std::sync::Arc;

use anyhow::{anyhow, Context};
use chrono::{DateTime, Utc};
use clap::{Parser, Subcommand};
use fairdeal_core::simulate::{self, Scenario};
use fairdeal_core::workflow::RequestId;
use fairdeal_core::{ingest, Config, Repository};

use crate::clock::{parse_instant, Clock, FixedClock, SystemClock};
use crate::http::{self, parse_window, period_from, AppState};

#[derive(Debug, Parser)]
#[command(name = "fairdeal", version, about = "Request-a-copy repository: operator tool and HTTP service")]
pub struct Cli {
    /// Directory holding the event log, snapshot, blobs and outbox.
    #[arg(long, global = true, env = "FAIRDEAL_STORE", default_value = "fairdeal-store")]
    pub store_path: PathBuf,

    /// TOML configuration file.
    #[arg(long, global = true, env = "FAIRDEAL_CONFIG")]
    pub config: Option<PathBuf>,

    /// Pretend the current time is this instant (RFC 3339 or YYYY-MM-DD).
    #[arg(long, global = true, value_parser = parse_instant)]
    pub now: Option<DateTime<Utc>>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Deposit every record of a JSON-lines file.
    Ingest { file: PathBuf },
    /// Play a scenario file through the request workflow.
    Simulate { scenario: PathBuf },
    /// Author response table for requests created in [from, to).
    Stats {
        #[arg(long)]
        from: Option<String>,
        #[arg(long)]
        to: Option<String>,
        /// Age after which an unanswered request counts as ignored (e.g. "30days").
        #[arg(long)]
        window: Option<String>,
    },
    /// Total and Closed Access article counts.
    AccessStats,
    /// Open every embargoed eprint whose date has arrived.
    Tick,
    /// Send a request's author notification again.
    Resend { request_id: String },
    /// Current fairness advisories.
    Alerts,
    /// Run the HTTP service.
    Serve {
        #[arg(long, env = "FAIRDEAL_PORT", default_value_t = 8080)]
        port: u16,
        #[arg(long, env = "FAIRDEAL_BIND", default_value = "127.0.0.1")]
        bind: std::net::IpAddr,
    },
}

impl Cli {
    fn config(&self) -> anyhow::Result<Config> {
        match &self.config {
            Some(path) => Ok(Config::load(path)?),
            None => Ok(Config::default()),
        }
    }

    fn clock(&self) -> Arc<dyn Clock> {
        match self.now {
            Some(at) => Arc::new(FixedClock::new(at)),
            None => Arc::new(SystemClock),
        }
    }
}

pub fn main() -> ExitCode {
    tracing_subscriber::fmt()
        .with_env_filter(tracing_subscriber::EnvFilter::try_from_default_env().unwrap_or_else(|_| "warn".into()))
        .with_writer(std::io::stderr)
        .init();
    match run(Cli::parse()) {
        Ok(code) => code,
        Err(err) => {
            eprintln!("error: {err:#}");
            ExitCode::FAILURE
        }
    }
}

pub fn run(cli: Cli) -> anyhow::Result<ExitCode> {
    let config = cli.config()?;
    let clock = cli.clock();
    let mut repo = Repository::open(&cli.store_path, &config)
        .with_context(|| format!("opening store {}", cli.store_path.display()))?;
    let now = clock.now();

    match &cli.command {
        Command::Ingest { file } => {
            let report = ingest::ingest_file(&repo, file, now)?;
            for (line, message) in &report.errors {
                eprintln!("{}:{line}: {message}", file.display());
            }
            println!("deposited {}", report.deposited.len());
            if !report.is_clean() {
                eprintln!("{} line(s) rejected", report.errors.len());
                return Ok(ExitCode::FAILURE);
            }
        }
        Command::Simulate { scenario } => {
            let scenario = Scenario::load(scenario)?;
            let summary = simulate::run(&mut repo, &scenario)?;
            println!("deposited      {}", summary.deposited);
            println!("requests       {}", summary.requests);
            println!("approved       {}", summary.approved);
            println!("rejected       {}", summary.rejected);
            println!("undecided      {}", summary.undecided);
            println!("messages sent  {}", summary.messages_sent);
            if let Some(at) = summary.finished_at {
                println!("finished at    {}", at.to_rfc3339());
            }
        }
        Command::Stats { from, to, window } => {
            let period = period_from(from.as_deref(), to.as_deref(), now).map_err(|e| anyhow!(e))?;
            let window = match window {
                Some(w) => parse_window(w).map_err(|e| anyhow!(e))?,
                None => repo.settings().ignore_window,
            };
            let stats = repo.response_stats(period, window, now)?;
            print!("{}", stats.render_table(&repo.settings().mail.repo_name));
        }
        Command::AccessStats => {
            print!("{}", repo.access_stats(now).render_table(&repo.settings().mail.repo_name));
        }
        Command::Tick => {
            let flipped = repo.run_due_embargoes(now)?;
            if flipped.is_empty() {
                eprintln!("no embargoes due");
            }
            for id in flipped {
                println!("{id}");
            }
        }
        Command::Resend { request_id } => {
            let receipt = repo.resend_notification(&RequestId::from(request_id.as_str()), now)?;
            println!("{} {}", receipt.message_id, receipt.accepted_at.to_rfc3339());
        }
        Command::Alerts => {
            for alert in repo.alerts(now) {
                println!("{}", serde_json::to_string(&alert)?);
            }
        }
        Command::Serve { port, bind } => {
            let state = AppState {
                repo: Arc::new(repo),
                clock,
                admin_secret: config.admin_secret.clone(),
                ui_dir: config.ui_dir.clone(),
            };
            serve(state, SocketAddr::new(*bind, *port), config.tick_interval)?;
        }
    }
    Ok(ExitCode::SUCCESS)
}

fn serve(state: AppState, addr: SocketAddr, tick_interval: std::time::Duration) -> anyhow::Result<()> {
    let runtime = tokio::runtime::Runtime::new()?;
    runtime.block_on(async move {
        let ticker = {
            let (repo, clock) = (state.repo.clone(), state.clock.clone());
            tokio::spawn(async move {
                let mut interval = tokio::time::interval(tick_interval);
                loop {
                    interval.tick().await;
                    match repo.run_due_embargoes(clock.now()) {
                        Ok(flipped) if !flipped.is_empty() => tracing::info!(count = flipped.len(), "embargoes lifted"),
                        Ok(_) => {}
                        Err(err) => tracing::error!(%err, "scheduler tick failed"),
                    }
                }
            })
        };
        let listener = tokio::net::TcpListener::bind(addr).await.with_context(|| format!("binding {addr}"))?;
        eprintln!("listening on http://{}", listener.local_addr()?);
        axum::serve(listener, http::router(state))
            .with_graceful_shutdown(async {
                let _ = tokio::signal::ctrl_c().await;
            })
            .await?;
        ticker.abort();
        Ok(())
    })
}
