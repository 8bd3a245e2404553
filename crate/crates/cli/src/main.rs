//! `rittlab`: runs one experiment from an INI config and writes CSV
//! artifacts under `--out`.

mod commands;
mod config;
mod error;
mod setup;
mod sweep;

use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::Parser;

use rittlab::output::Table;

use commands::Command;
use config::Config;
use error::{CliError, CliResult};

#[derive(Parser)]
#[command(name = "rittlab", version, about = "Ritt-operator experiments on l1(Z) and L1(Z_N)")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// INI config; defaults apply to anything it leaves out
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory
    #[arg(long, global = true, default_value = "out")]
    out: PathBuf,
    /// Worker threads (default: all cores)
    #[arg(long, global = true)]
    jobs: Option<usize>,
    /// Overrides `[signal] seed`
    #[arg(long, global = true)]
    seed: Option<u64>,
}

fn load(cli: &Cli) -> CliResult<Config> {
    let mut cfg = match &cli.config {
        Some(path) => {
            let text = std::fs::read_to_string(path)
                .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
            Config::parse(&text)?
        }
        None => Config::default(),
    };
    if let Some(seed) = cli.seed {
        cfg.set("signal", "seed", &seed.to_string())?;
    }
    Ok(cfg)
}

fn header(command: Command, cfg: &Config) -> String {
    let mut h = String::new();
    let _ = writeln!(h, "# rittlab {}", env!("CARGO_PKG_VERSION"));
    let _ = writeln!(h, "# command {}", command.name());
    let _ = writeln!(h, "# config_sha256 {}", cfg.hash());
    h
}

/// Space-separated companion for gnuplot-style tools.
fn dat(table: &Table) -> String {
    let mut out = format!("# {}\n", table.columns.join(" "));
    for row in &table.rows {
        out.push_str(&row.join(" "));
        out.push('\n');
    }
    out
}

fn write(dir: &Path, stem: &str, head: &str, table: &Table, plot: bool) -> CliResult<PathBuf> {
    let path = dir.join(format!("{stem}.csv"));
    std::fs::write(&path, format!("{head}{}", table.to_csv()))?;
    if plot {
        std::fs::write(dir.join(format!("{stem}.dat")), format!("{head}{}", dat(table)))?;
    }
    Ok(path)
}

fn execute(cli: &Cli) -> CliResult<()> {
    let cfg = load(cli)?;
    let plot = cfg.parse_or("output", "plot", false)?;
    let head = header(cli.command, &cfg);
    let mut tables: Vec<(&str, Table)> = Vec::new();
    if cli.command == Command::Sweep {
        tables.push(("sweep", sweep::run(&cfg)?));
    } else {
        let outcome = commands::run(cli.command, &cfg)?;
        for (k, v) in &outcome.summary {
            println!("{k} = {v}");
        }
        tables.push(("summary", outcome.summary_table()));
        tables.extend(outcome.artifacts.into_iter().map(|a| (a.name, a.table)));
    }
    std::fs::create_dir_all(&cli.out)?;
    for (stem, table) in &tables {
        let path = write(&cli.out, stem, &head, table, plot)?;
        eprintln!("wrote {}", path.display());
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(cli.jobs.unwrap_or(0))
        .build()
        .expect("thread pool");
    match pool.install(|| execute(&cli)) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
