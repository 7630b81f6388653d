//! Verifier service.

use std::path::PathBuf;
use std::time::Duration;

use clap::{Parser, Subcommand};
use rand::rngs::OsRng;
use vaxpass_agent::Identity;
use vaxpass_services::config::ServiceConfig;
use vaxpass_services::verifier::VerifierService;
use vaxpass_services::{ledger_client, parse_genesis_hash, serve, write_atomic, Result, ServiceError};

#[derive(Parser)]
#[command(name = "verifier", about = "Presentation verifier")]
struct Cli {
    #[arg(long, env = "VAXPASS_CONFIG")]
    config: Option<PathBuf>,
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Generate the verifier's DID; prints it.
    Init,
    Serve,
}

#[tokio::main]
async fn main() {
    vaxpass_services::init_logging();
    if let Err(e) = run(Cli::parse()).await {
        eprintln!("error: {}: {e}", e.code());
        std::process::exit(1);
    }
}

async fn run(cli: Cli) -> Result<()> {
    let cfg = ServiceConfig::load(cli.config.as_deref())?;
    match cli.cmd {
        Cmd::Init => {
            if cfg.state.exists() {
                return Err(ServiceError::Config(format!("{} already exists", cfg.state.display())));
            }
            let endpoint = format!("{}/didcomm", cfg.public_url.trim_end_matches('/'));
            let identity = Identity::generate(&endpoint, &mut OsRng);
            write_atomic(&cfg.state, &serde_json::to_vec_pretty(&identity).expect("serializes"))?;
            println!("{}", identity.did());
            Ok(())
        }
        Cmd::Serve => {
            let bytes = std::fs::read(&cfg.state)?;
            let identity: Identity = serde_json::from_slice(&bytes)
                .map_err(|e| ServiceError::Config(format!("{}: {e}", cfg.state.display())))?;
            let svc = VerifierService::new(
                identity,
                ledger_client(&cfg.ledger)?,
                parse_genesis_hash(&cfg.genesis_hash)?,
                Duration::from_secs(cfg.trust_freshness_secs),
            );
            serve(&cfg.listen, svc.router()).await
        }
    }
}
