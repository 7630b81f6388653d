//! Ledger node: runs the replica set from a genesis file and serves the
//! node API.

use std::path::PathBuf;

use clap::Parser;
use vaxpass_ledger::{router, Cluster, Genesis, LocalLedger};
use vaxpass_services::{serve, Result, ServiceError};

#[derive(Parser)]
#[command(name = "ledger-node", about = "Serve the permissioned ledger")]
struct Cli {
    #[arg(long, env = "VAXPASS_GENESIS", default_value = "genesis.json")]
    genesis: PathBuf,
    /// Directory for the replica block files.
    #[arg(long, env = "VAXPASS_DATA", default_value = "ledger-data")]
    data: PathBuf,
    #[arg(long, env = "VAXPASS_LISTEN", default_value = "127.0.0.1:7000")]
    listen: String,
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
    let bytes = std::fs::read(&cli.genesis)?;
    let genesis = Genesis::from_bytes(&bytes)
        .ok_or_else(|| ServiceError::Config(format!("{} is not a genesis file", cli.genesis.display())))?;
    println!("genesis {}", hex::encode(genesis.hash()));
    std::fs::create_dir_all(&cli.data)?;
    let cluster = Cluster::open(genesis, &cli.data)?;
    tracing::info!("replayed {} blocks", cluster.blocks().len());
    serve(&cli.listen, router(LocalLedger::new(cluster))).await
}
