//! Trust authority: creates the genesis block and maintains the trust list.

use std::path::PathBuf;

use clap::{Parser, Subcommand};
use rand::rngs::OsRng;
use serde::{Deserialize, Serialize};
use vaxpass_agent::{Did, Identity};
use vaxpass_ledger::{Genesis, Transaction, TrustEntry, TxKind};
use vaxpass_services::{ledger_client, next_sequence, write_atomic, Result, ServiceError};

#[derive(Parser)]
#[command(name = "authority", about = "Genesis and trust-list administration")]
struct Cli {
    /// Authority key file.
    #[arg(long, env = "VAXPASS_AUTHORITY_KEY", default_value = "authority.json")]
    key: PathBuf,
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Create a key and a genesis file; prints the genesis hash.
    Init {
        #[arg(long, default_value_t = 4)]
        nodes: usize,
        /// Node URLs, comma separated.
        #[arg(long, value_delimiter = ',')]
        endpoints: Vec<String>,
        #[arg(long, default_value = "genesis.json")]
        out: PathBuf,
    },
    /// Add a registered DID to the trust list.
    Trust(TrustArgs),
    /// Remove a DID from the trust list.
    Untrust(TrustArgs),
}

#[derive(clap::Args)]
struct TrustArgs {
    did: String,
    #[arg(long, env = "VAXPASS_LEDGER", value_delimiter = ',')]
    ledger: Vec<String>,
}

#[derive(Serialize, Deserialize)]
struct KeyFile {
    identity: Identity,
    sequence: u64,
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
    match cli.cmd {
        Cmd::Init { nodes, endpoints, out } => {
            if cli.key.exists() {
                return Err(ServiceError::Config(format!("{} already exists", cli.key.display())));
            }
            let identity = Identity::generate("authority:offline", &mut OsRng);
            let ts = chrono::Utc::now().timestamp_millis();
            let genesis = Genesis::new(&identity, nodes, endpoints, ts);
            let key = KeyFile { identity, sequence: 0 };
            write_atomic(&cli.key, &serde_json::to_vec_pretty(&key).expect("serializes"))?;
            write_atomic(&out, &genesis.to_bytes())?;
            println!("authority {}", key.identity.did());
            println!("genesis {}", hex::encode(genesis.hash()));
            Ok(())
        }
        Cmd::Trust(a) => set_trust(&cli.key, a, true).await,
        Cmd::Untrust(a) => set_trust(&cli.key, a, false).await,
    }
}

async fn set_trust(path: &PathBuf, a: TrustArgs, trusted: bool) -> Result<()> {
    let bytes = std::fs::read(path)?;
    let mut key: KeyFile =
        serde_json::from_slice(&bytes).map_err(|e| ServiceError::Config(format!("{}: {e}", path.display())))?;
    let did = Did::parse(&a.did)?;
    let ledger = ledger_client(&a.ledger)?;
    let seq = next_sequence(&mut key.sequence);
    write_atomic(path, &serde_json::to_vec_pretty(&key).expect("serializes"))?;
    let tx = Transaction::sign(TxKind::TrustList, &TrustEntry { did, trusted }, &key.identity, seq);
    let receipt = ledger.submit(tx).await?;
    println!("committed at height {}", receipt.height);
    Ok(())
}

