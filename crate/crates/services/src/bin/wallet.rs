//! Holder wallet CLI.

use std::io::{BufRead, Write};
use std::path::{Path, PathBuf};
use std::sync::Arc;

use clap::{Parser, Subcommand, ValueEnum};
use serde::Serialize;
use vaxpass_agent::Invitation;
use vaxpass_services::peer::Http;
use vaxpass_services::wallet::bridge::Bridge;
use vaxpass_services::wallet::store::KdfParams;
use vaxpass_services::wallet::{Decision, Event, Wallet};
use vaxpass_services::{ledger_client, parse_genesis_hash, serve, Result, ServiceError};

#[derive(Parser)]
#[command(name = "wallet", about = "Vaccination credential wallet")]
struct Cli {
    #[arg(long, env = "VAXPASS_WALLET", default_value = "wallet.vxp")]
    wallet: PathBuf,
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Create an empty wallet.
    Init {
        #[arg(long, env = "VAXPASS_GENESIS_HASH")]
        genesis_hash: String,
        #[arg(long, env = "VAXPASS_LEDGER", value_delimiter = ',')]
        ledger: Vec<String>,
    },
    /// Open the wallet and check every credential.
    Unlock,
    /// Answer an invitation (payload text, or a file holding it).
    Connect {
        payload: String,
        #[arg(long, conflicts_with = "no")]
        yes: bool,
        #[arg(long)]
        no: bool,
    },
    Connections,
    /// Stored credentials.
    List,
    /// Offers and proof requests waiting for a decision.
    Pending,
    Respond {
        item: u64,
        decision: DecisionArg,
    },
    /// Update revocation witnesses from the ledger.
    Sync,
    /// Print credentials as JSON.
    Export,
    /// Serve the localhost bridge for the browser view.
    Bridge {
        #[arg(long, default_value = "127.0.0.1:7070")]
        listen: String,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum DecisionArg {
    Accept,
    Decline,
}

#[tokio::main]
async fn main() {
    vaxpass_services::init_logging();
    if let Err(e) = run(Cli::parse()).await {
        eprintln!("error: {}: {e}", e.code());
        std::process::exit(1);
    }
}

fn passphrase(confirm: bool) -> Result<String> {
    if let Ok(p) = std::env::var("VAXPASS_PASSPHRASE") {
        return Ok(p);
    }
    let first = prompt("passphrase: ")?;
    if confirm && prompt("repeat passphrase: ")? != first {
        return Err(ServiceError::Config("passphrases differ".into()));
    }
    Ok(first)
}

fn prompt(text: &str) -> Result<String> {
    eprint!("{text}");
    std::io::stderr().flush()?;
    let mut line = String::new();
    std::io::stdin().lock().read_line(&mut line)?;
    Ok(line.trim_end_matches(['\r', '\n']).to_string())
}

fn print<T: Serialize>(v: &T) {
    println!("{}", serde_json::to_string_pretty(v).expect("serializes"));
}

fn print_events(events: &[Event]) {
    for e in events {
        match e {
            Event::Offer { item } => println!("credential offer waiting as item {item}"),
            Event::ProofRequest { item } => println!("proof request waiting as item {item}"),
            Event::Stored { credential } => println!("credential {credential} stored"),
            Event::Presented { item } => println!("presentation sent for item {item}"),
            Event::Verified { item, .. } => println!("item {item}: verified"),
            Event::Declined { item, code } => println!("item {item}: declined ({code})"),
            Event::Failed { item, code } => println!("item {item}: failed ({code})"),
        }
    }
}

fn read_payload(arg: &str) -> Result<String> {
    let p = Path::new(arg);
    if p.is_file() {
        return Ok(std::fs::read_to_string(p)?);
    }
    Ok(arg.to_string())
}

async fn run(cli: Cli) -> Result<()> {
    if let Cmd::Init { genesis_hash, ledger } = &cli.cmd {
        let genesis = parse_genesis_hash(genesis_hash)?;
        let w = Wallet::create(&cli.wallet, &passphrase(true)?, genesis, ledger.clone(), KdfParams::default())?;
        println!("{}", w.did());
        return Ok(());
    }
    let mut w = Wallet::open(&cli.wallet, &passphrase(false)?)?;
    let ledger = || ledger_client(&w.data.ledger);
    match cli.cmd {
        Cmd::Init { .. } => unreachable!(),
        Cmd::Unlock => {
            println!("{}", w.did());
            println!(
                "{} credentials, {} connections, {} pending",
                w.data.credentials.len(),
                w.data.connections.len(),
                w.data.pending.len()
            );
        }
        Cmd::Connect { payload, yes, no } => {
            let payload = read_payload(&payload)?;
            let inv = Invitation::from_qr(payload.trim())?;
            inv.verify()?;
            let consent = if yes || no {
                yes
            } else {
                let answer = prompt(&format!("connect to {} at {}? [y/n] ", inv.inviter.id, inv.endpoint))?;
                matches!(answer.trim(), "y" | "Y" | "yes")
            };
            let c = w.connect(&payload, consent, &Http::new()).await?;
            println!("connected {} ({})", c.connection.connection_id, c.connection.peer);
            print_events(&c.events);
        }
        Cmd::Connections => print(&w.connections()),
        Cmd::List => print(&w.list()),
        Cmd::Pending => print(&w.pending()),
        Cmd::Respond { item, decision } => {
            let d = match decision {
                DecisionArg::Accept => Decision::Accept,
                DecisionArg::Decline => Decision::Decline,
            };
            let l = ledger()?;
            let events = w.respond(item, d, &Http::new(), l.as_ref()).await?;
            print_events(&events);
        }
        Cmd::Sync => {
            let l = ledger()?;
            print(&w.sync(l.as_ref()).await?);
        }
        Cmd::Export => print(&w.export()),
        Cmd::Bridge { listen } => {
            let l = ledger()?;
            let bridge = Bridge::new(w, Arc::new(Http::new()), l);
            serve(&listen, bridge.router()).await?;
        }
    }
    Ok(())
}
