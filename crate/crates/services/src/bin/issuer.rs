//! Issuer (vaccinator) service.

use std::path::PathBuf;

use clap::{Parser, Subcommand};
use vaxpass_services::config::ServiceConfig;
use vaxpass_services::issuer::{IssuerService, IssuerState};
use vaxpass_services::{ledger_client, parse_genesis_hash, serve, write_atomic, Result, ServiceError};

#[derive(Parser)]
#[command(name = "issuer", about = "Vaccination credential issuer")]
struct Cli {
    #[arg(long, env = "VAXPASS_CONFIG")]
    config: Option<PathBuf>,
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Generate the issuer DID, keys and registry; prints the DID.
    Init,
    /// Publish to the ledger if needed and serve HTTP.
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
            let state = IssuerState::generate(cfg.profile, &endpoint)?;
            write_atomic(&cfg.state, &serde_json::to_vec_pretty(&state).expect("serializes"))?;
            println!("{}", state.identity.did());
            Ok(())
        }
        Cmd::Serve => {
            let state = IssuerState::load(&cfg.state)?;
            let ledger = ledger_client(&cfg.ledger)?;
            let genesis = parse_genesis_hash(&cfg.genesis_hash)?;
            let svc = IssuerService::new(state, ledger, genesis, Some(cfg.state.clone()));
            match svc.publish().await {
                Ok(()) => tracing::info!("issuer {} published", svc.did().await),
                Err(e) => tracing::warn!("publishing deferred: {}: {e}", e.code()),
            }
            serve(&cfg.listen, svc.router()).await
        }
    }
}
