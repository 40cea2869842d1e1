use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context};
use clap::{Parser, Subcommand};
use fsm_core::simgen::{
    generate_log_corpus, query_set_jsonl, run_scenario, scenario, write_fleet, SCENARIO_BASE, SCENARIO_IDS,
};
use fsm_core::time::parse_iso;

#[derive(Parser)]
#[command(name = "simgen", version, about = "Deterministic fixtures for the library scenario")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Registry manifest and product manuals.
    Fleet {
        #[arg(long)]
        out: PathBuf,
    },
    /// A scripted fault scenario: logs, status table, vision sidecars, expected.json.
    Scenario {
        #[arg(long)]
        id: String,
        #[arg(long, default_value_t = 42)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
    /// The labeled operator query set as JSON lines.
    Queries {
        #[arg(long)]
        out: PathBuf,
    },
    /// Well-formed background log lines.
    Corpus {
        #[arg(long, default_value_t = 42)]
        seed: u64,
        #[arg(long, default_value_t = 1000)]
        lines: usize,
        /// ISO-8601 UTC timestamp of the first line.
        #[arg(long)]
        start: Option<String>,
        #[arg(long)]
        out: PathBuf,
    },
}

fn report(paths: &[PathBuf]) {
    for p in paths {
        println!("{}", p.display());
    }
}

fn write_file(path: &Path, text: &str) -> anyhow::Result<()> {
    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        fs::create_dir_all(parent)?;
    }
    fs::write(path, text).with_context(|| format!("writing {}", path.display()))?;
    println!("{}", path.display());
    Ok(())
}

fn main() -> anyhow::Result<()> {
    fsm_cli::init_logging("warn");
    match Cli::parse().command {
        Command::Fleet { out } => report(&write_fleet(&out)?),
        Command::Scenario { id, seed, out } => {
            let Some(script) = scenario(&id, seed) else {
                bail!("unknown scenario {id}; known: {}", SCENARIO_IDS.join(", "));
            };
            report(&run_scenario(&script, &out)?);
        }
        Command::Queries { out } => write_file(&out, &query_set_jsonl())?,
        Command::Corpus { seed, lines, start, out } => {
            let start = match start {
                Some(s) => parse_iso(&s).with_context(|| format!("bad --start {s}"))?,
                None => parse_iso(SCENARIO_BASE).expect("base timestamp parses"),
            };
            let mut text = generate_log_corpus(seed, lines, start).join("\n");
            text.push('\n');
            write_file(&out, &text)?;
        }
    }
    Ok(())
}
