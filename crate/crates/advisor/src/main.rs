use std::io::Write as _;
use std::net::SocketAddr;
use std::path::PathBuf;
use std::process::ExitCode;
use std::sync::Arc;

use advisor::resources::{log_dir, Resources};
use advisor::script::{simulate, Script};
use advisor::server::{self, AppState, DEFAULT_IDLE_TIMEOUT_MS};
use advisor::store::SessionStore;
use advisor_core::analysis::DEFAULT_RESTATEMENT_THRESHOLD;
use advisor_core::{start_session, EngineInput};
use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use tokio::io::{AsyncBufReadExt, BufReader};

#[derive(Parser)]
#[command(name = "advisor", version, about = "Travel consultation dialogue service")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct DataArgs {
    #[arg(long)]
    catalog: PathBuf,
    #[arg(long)]
    lexicon: PathBuf,
    /// Attribute schema; the built-in 16-attribute schema when omitted.
    #[arg(long)]
    schema: Option<PathBuf>,
}

impl DataArgs {
    fn load(&self) -> Result<Resources> {
        Resources::load(&self.catalog, &self.lexicon, self.schema.as_deref())
    }
}

#[derive(Subcommand)]
enum Command {
    /// Run the HTTP API.
    Serve {
        #[command(flatten)]
        data: DataArgs,
        #[arg(long, default_value_t = 8080)]
        port: u16,
        #[arg(long, default_value = "127.0.0.1")]
        host: std::net::IpAddr,
        /// Idle time after which a greeting or Q&A prompt advances on its own.
        #[arg(long, default_value_t = DEFAULT_IDLE_TIMEOUT_MS)]
        idle_timeout_ms: u64,
        /// Honor the x-advisor-now-ms request header (testing only).
        #[arg(long)]
        allow_test_clock: bool,
    },
    /// Consult interactively in the terminal. An empty line is a timeout.
    Chat {
        #[command(flatten)]
        data: DataArgs,
        /// Two catalog spot ids, comma separated.
        #[arg(long, value_delimiter = ',', num_args = 2)]
        spots: Vec<String>,
        #[arg(long, value_parser = clap::value_parser!(u8).range(0..=1))]
        agency: u8,
    },
    /// Run a scripted session and write its transcript.
    Simulate {
        #[command(flatten)]
        data: DataArgs,
        #[arg(long)]
        script: PathBuf,
        /// Transcript path; defaults to <log dir>/<session_id>.jsonl.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Tally response causes and correlate session features with satisfaction.
    Analyze {
        #[arg(long)]
        transcripts: PathBuf,
        #[arg(long)]
        annotations: PathBuf,
        #[arg(long)]
        questionnaires: PathBuf,
        /// TSV report path.
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = DEFAULT_RESTATEMENT_THRESHOLD)]
        restatement_threshold: f64,
    },
}

#[tokio::main]
async fn main() -> ExitCode {
    tracing_subscriber::fmt()
        .with_env_filter(
            tracing_subscriber::EnvFilter::try_from_default_env()
                .unwrap_or_else(|_| tracing_subscriber::EnvFilter::new("info")),
        )
        .with_writer(std::io::stderr)
        .init();
    match run(Cli::parse().command).await {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}

async fn run(command: Command) -> Result<ExitCode> {
    match command {
        Command::Serve { data, port, host, idle_timeout_ms, allow_test_clock } => {
            let resources = Arc::new(data.load()?);
            let store = Arc::new(SessionStore::open(log_dir(), resources)?);
            let sweep = tokio::spawn(server::run_idle_sweep(Arc::clone(&store), idle_timeout_ms));
            let app = server::router(AppState { store, allow_test_clock });
            let addr = SocketAddr::new(host, port);
            let listener = tokio::net::TcpListener::bind(addr)
                .await
                .with_context(|| format!("binding {addr}"))?;
            tracing::info!(%addr, "listening");
            axum::serve(listener, app)
                .with_graceful_shutdown(async {
                    let _ = tokio::signal::ctrl_c().await;
                })
                .await?;
            sweep.abort();
            Ok(ExitCode::SUCCESS)
        }
        Command::Chat { data, spots, agency } => chat(data.load()?, &spots, agency).await,
        Command::Simulate { data, script, out } => {
            let resources = data.load()?;
            let text = std::fs::read_to_string(&script)
                .with_context(|| format!("reading {}", script.display()))?;
            let script = Script::from_json(&text)?;
            let sim = simulate(&resources, &script)?;
            let out = out.unwrap_or_else(|| log_dir().join(format!("{}.jsonl", script.session_id)));
            if let Some(parent) = out.parent().filter(|p| !p.as_os_str().is_empty()) {
                std::fs::create_dir_all(parent)?;
            }
            std::fs::write(&out, sim.session.transcript().to_jsonl())
                .with_context(|| format!("writing {}", out.display()))?;
            if sim.unused_turns > 0 {
                eprintln!("session ended with {} script turns unused", sim.unused_turns);
            }
            if sim.session.is_ended() {
                println!("{}", out.display());
                Ok(ExitCode::SUCCESS)
            } else {
                eprintln!("script ran out in stage {}", sim.session.stage());
                Ok(ExitCode::from(2))
            }
        }
        Command::Analyze { transcripts, annotations, questionnaires, out, restatement_threshold } => {
            let report = advisor::analyze::build_report(
                &transcripts,
                &annotations,
                &questionnaires,
                restatement_threshold,
            )?;
            std::fs::write(&out, report.to_tsv()).with_context(|| format!("writing {}", out.display()))?;
            print!("{}", report.render_text());
            Ok(ExitCode::SUCCESS)
        }
    }
}

async fn chat(resources: Resources, spots: &[String], agency: u8) -> Result<ExitCode> {
    let [a, b] = spots else { bail!("--spots takes exactly two ids") };
    let spot = |id: &str| resources.catalog.get(id).cloned().with_context(|| format!("unknown spot `{id}`"));
    let id = uuid::Uuid::new_v4().simple().to_string();
    let (mut session, greeting) =
        start_session(id.clone(), spot(a)?, spot(b)?, agency, &resources.schema, server::wall_clock_ms())?;
    println!("{greeting}");
    let mut lines = BufReader::new(tokio::io::stdin()).lines();
    while !session.is_ended() {
        print!("> ");
        std::io::stdout().flush()?;
        let Some(line) = lines.next_line().await? else { break };
        let input = match EngineInput::utterance(line.trim()) {
            Ok(input) => input,
            Err(_) => EngineInput::Timeout,
        };
        println!("{}", session.step(input, server::wall_clock_ms(), &resources.lexicon)?);
    }
    let dir = log_dir();
    std::fs::create_dir_all(&dir)?;
    let path = dir.join(format!("{id}.jsonl"));
    std::fs::write(&path, session.transcript().to_jsonl())?;
    eprintln!("transcript written to {}", path.display());
    Ok(ExitCode::SUCCESS)
}
