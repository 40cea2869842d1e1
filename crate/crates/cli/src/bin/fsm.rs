use std::net::IpAddr;
use std::path::PathBuf;

use clap::{Parser, Subcommand};
use fsm_api::{serve, ServiceConfig};

#[derive(Parser)]
#[command(name = "fsm", version, about = "Smart-facility failure management service")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the REST service until interrupted.
    Serve {
        /// TOML config file; environment variables override it.
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        host: Option<IpAddr>,
        #[arg(long)]
        port: Option<u16>,
        #[arg(long)]
        data_dir: Option<PathBuf>,
    },
}

#[tokio::main]
async fn main() -> anyhow::Result<()> {
    fsm_cli::init_logging("info");
    match Cli::parse().command {
        Command::Serve { config, host, port, data_dir } => {
            let mut cfg = ServiceConfig::load(config.as_deref())?;
            if let Some(host) = host {
                cfg.host = host;
            }
            if let Some(port) = port {
                cfg.port = port;
            }
            if let Some(dir) = data_dir {
                cfg.data_dir = dir;
            }
            let handle = serve(&cfg).await?;
            println!("listening on http://{}", handle.addr());
            tokio::signal::ctrl_c().await?;
            tracing::info!("shutting down");
            handle.shutdown().await?;
        }
    }
    Ok(())
}
