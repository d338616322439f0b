use std::net::SocketAddr;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use serde::Deserialize;

use mediator::audit::AuditStore;
use mediator::engine::{replay, EngineOptions, InputLog};
use mediator::model::{validate_config, CandidateAction, ConfigError, PostContent, UserConfig};
use mediator::net::SystemNetwork;
use mediator::service::{self, AppState};
use mediator::sim::{sim_config, simulate, Profile, SimOptions};
use mediator::{select_action, Engine};

const EXIT_USAGE: u8 = 1;
const EXIT_VALIDATION: u8 = 2;
const EXIT_DIVERGENCE: u8 = 3;

#[derive(Parser)]
#[command(name = "mediator", version, about = "User-owned feed mediation engine")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Score one post (JSON) for factual conflicts, AI-likeness and slant.
    Assess {
        file: PathBuf,
        #[arg(long)]
        config: Option<PathBuf>,
    },
    /// Pick an intervention from a candidate set (a JSON array, or an object
    /// with a `candidates` array).
    Decide {
        file: PathBuf,
        #[arg(long)]
        config: Option<PathBuf>,
    },
    /// Run a seeded session simulation.
    Simulate {
        #[arg(long)]
        profile: Profile,
        #[arg(long, default_value_t = 42)]
        seed: u64,
        #[arg(long, default_value_t = 30)]
        minutes: u32,
        /// Directory for audit.jsonl, inputs.jsonl, report.csv and summary.txt.
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        config: Option<PathBuf>,
    },
    /// Re-execute an input log and compare with the stored audit log.
    Replay {
        audit: PathBuf,
        /// Input log; defaults to inputs.jsonl next to the audit file.
        #[arg(long)]
        inputs: Option<PathBuf>,
        /// Replay under this config instead of the one recorded in the log.
        #[arg(long)]
        config: Option<PathBuf>,
    },
    /// Configuration utilities.
    Config {
        #[command(subcommand)]
        command: ConfigCommand,
    },
    /// Serve the local HTTP API.
    Serve {
        #[arg(long, default_value = "127.0.0.1:8787")]
        addr: SocketAddr,
        /// Bearer token required on every request. Mandatory off loopback.
        #[arg(long, env = "MEDIATOR_TOKEN")]
        token: Option<String>,
        /// Directory for audit.jsonl and inputs.jsonl. In memory when absent.
        #[arg(long)]
        data_dir: Option<PathBuf>,
        #[arg(long)]
        config: Option<PathBuf>,
    },
}

#[derive(Subcommand)]
enum ConfigCommand {
    /// Check a config file and print the normalized form.
    Validate { file: PathBuf },
}

#[derive(Debug)]
struct Failure {
    code: u8,
    message: String,
}

impl Failure {
    fn usage(message: impl Into<String>) -> Self {
        Self { code: EXIT_USAGE, message: message.into() }
    }
}

impl From<ConfigError> for Failure {
    fn from(e: ConfigError) -> Self {
        Self { code: EXIT_VALIDATION, message: e.to_string() }
    }
}

fn read(path: &Path) -> Result<String, Failure> {
    std::fs::read_to_string(path).map_err(|e| Failure::usage(format!("cannot read {}: {e}", path.display())))
}

fn load_config(path: Option<&Path>) -> Result<UserConfig, Failure> {
    match path {
        Some(p) => Ok(validate_config(UserConfig::from_json(&read(p)?)?)?),
        None => Ok(UserConfig::default()),
    }
}

fn print_json<T: serde::Serialize>(value: &T) {
    println!("{}", serde_json::to_string_pretty(value).expect("output serializes"));
}

#[derive(Deserialize)]
#[serde(untagged)]
enum CandidateFile {
    Bare(Vec<CandidateAction>),
    Wrapped { candidates: Vec<CandidateAction> },
}

fn run(cli: Cli) -> Result<(), Failure> {
    match cli.command {
        Command::Assess { file, config } => {
            let config = load_config(config.as_deref())?;
            let post: PostContent = serde_json::from_str(&read(&file)?)
                .map_err(|e| Failure::usage(format!("{} is not a post: {e}", file.display())))?;
            let engine = Engine::new(config).map_err(|e| Failure::usage(e.to_string()))?;
            print_json(&engine.assess(&post));
        }
        Command::Decide { file, config } => {
            let config = load_config(config.as_deref())?;
            let candidates = match serde_json::from_str(&read(&file)?)
                .map_err(|e| Failure::usage(format!("{} is not a candidate set: {e}", file.display())))?
            {
                CandidateFile::Bare(c) | CandidateFile::Wrapped { candidates: c } => c,
            };
            let decision = select_action(&candidates, &config)
                .map_err(|e| Failure { code: EXIT_VALIDATION, message: e.to_string() })?;
            print_json(&decision);
        }
        Command::Simulate { profile, seed, minutes, out, config } => {
            let config = match config {
                Some(p) => load_config(Some(&p))?,
                None => sim_config(),
            };
            let opts = SimOptions { config, ..SimOptions::new(profile, seed, minutes) };
            let run = simulate(&opts, out.as_deref()).map_err(|e| Failure::usage(e.to_string()))?;
            print!("{}", run.report.summary());
            println!();
            print!("{}", run.report.to_csv());
            if let Some(dir) = out {
                eprintln!("wrote {}", dir.display());
            }
        }
        Command::Replay { audit, inputs, config } => {
            let inputs = inputs.unwrap_or_else(|| audit.with_file_name("inputs.jsonl"));
            let stored = AuditStore::load(&audit).map_err(|e| Failure::usage(e.to_string()))?;
            let (header, log) = InputLog::read(&inputs)
                .map_err(|e| Failure::usage(format!("cannot read input log {}: {e}", inputs.display())))?;
            let config = config.map(|p| load_config(Some(&p))).transpose()?;
            match replay(&header, &log, &stored, config.as_ref()) {
                Ok(records) => println!("replay ok: {} records match", records.len()),
                Err(e) => {
                    return Err(Failure { code: EXIT_DIVERGENCE, message: e.to_string() });
                }
            }
        }
        Command::Config { command: ConfigCommand::Validate { file } } => {
            let config = load_config(Some(&file))?;
            println!("{}", config.to_json_pretty());
        }
        Command::Serve { addr, token, data_dir, config } => {
            let config = load_config(config.as_deref())?;
            let mut opts = EngineOptions::default();
            if let Some(dir) = &data_dir {
                std::fs::create_dir_all(dir).map_err(|e| Failure::usage(format!("cannot create {}: {e}", dir.display())))?;
                let audit_path = dir.join("audit.jsonl");
                let store = AuditStore::open(&audit_path).map_err(|e| Failure::usage(e.to_string()))?;
                if !store.is_empty() {
                    return Err(Failure::usage(format!(
                        "{} already holds a session; pick an empty data directory",
                        dir.display()
                    )));
                }
                opts.audit = store;
                opts.input_log = Some(dir.join("inputs.jsonl"));
            }
            let engine = Engine::with_options(config, opts).map_err(|e| Failure::usage(e.to_string()))?;
            let runtime = tokio::runtime::Runtime::new().map_err(|e| Failure::usage(e.to_string()))?;
            runtime.block_on(async {
                let listener = service::bind(addr, token.as_deref(), &SystemNetwork).map_err(|e| Failure::usage(e.to_string()))?;
                eprintln!("listening on http://{addr}");
                let state = AppState::new(engine, service::system_clock(), token);
                service::serve(listener, state).await.map_err(|e| Failure::usage(e.to_string()))
            })?;
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    tracing_subscriber::fmt()
        .with_env_filter(tracing_subscriber::EnvFilter::try_from_default_env().unwrap_or_else(|_| "warn".into()))
        .with_writer(std::io::stderr)
        .init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(EXIT_USAGE) } else { ExitCode::SUCCESS };
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}
