//! Command-line driver for the `platform_menus` engine.
//!
//! ```text
//! pmenu solve --regime baseline --config run.cfg --out results/
//! pmenu sweep --lambda 0,0.25,0.5 --J 2,5 --probe 0.6
//! pmenu figure fig-qmr --out figures/
//! pmenu oracle --n 1000000 --seed 42
//! ```

pub mod commands;
pub mod config;
pub mod error;
pub mod table;

use clap::{Args, Parser, Subcommand, ValueEnum};
use commands::{Output, Regime};
use config::Settings;
pub use error::{CliError, Result};
use std::path::PathBuf;

#[derive(Debug, Parser)]
#[command(name = "pmenu", version, about = "Equilibrium menus, budgets and surplus on a data-rich platform")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    /// Directory for CSV and report files; stdout when absent.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    #[arg(long, global = true, value_enum, default_value_t = Format::Text)]
    pub format: Format,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Csv,
    Text,
}

/// Market keys; each overrides the same key of `--config`.
#[derive(Debug, Clone, Default, Args)]
pub struct MarketArgs {
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long = "F")]
    pub f: Option<String>,
    #[arg(long = "G")]
    pub g: Option<String>,
    #[arg(long)]
    pub grid: Option<usize>,
    #[arg(long)]
    pub alpha: Option<f64>,
    /// Any other `key=value`, repeatable.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    pub set: Vec<String>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Solve one regime.
    Solve {
        #[arg(long)]
        regime: Option<String>,
        #[arg(long)]
        lambda: Option<f64>,
        #[arg(long = "J")]
        j: Option<u32>,
        #[command(flatten)]
        market: MarketArgs,
    },
    /// Solve a grid of (lambda, J) cells.
    Sweep {
        #[arg(long)]
        regime: Option<String>,
        #[arg(long, value_delimiter = ',')]
        lambda: Vec<f64>,
        #[arg(long = "J", value_delimiter = ',')]
        j: Vec<u32>,
        /// Values of theta at which quality is tracked.
        #[arg(long, value_delimiter = ',')]
        probe: Vec<f64>,
        #[command(flatten)]
        market: MarketArgs,
    },
    /// Emit the data behind one figure.
    Figure { name: String },
    /// Monte Carlo market against quadrature.
    Oracle {
        #[arg(long, default_value_t = 1_000_000)]
        n: usize,
        #[arg(long, default_value_t = 42)]
        seed: u64,
        /// interim | reveal:RHO | garble:EPS
        #[arg(long, default_value = "interim")]
        info: String,
        #[arg(long)]
        lambda: Option<f64>,
        #[arg(long = "J")]
        j: Option<u32>,
        #[command(flatten)]
        market: MarketArgs,
    },
}

fn settings(m: &MarketArgs, lambda: Option<f64>, j: Option<u32>) -> Result<Settings> {
    let mut s = match &m.config {
        Some(p) => Settings::load(p)?,
        None => Settings::default(),
    };
    if let Some(v) = lambda {
        s.set("lambda", &v.to_string())?;
    }
    if let Some(v) = j {
        s.set("j", &v.to_string())?;
    }
    if let Some(v) = &m.f {
        s.set("f", v)?;
    }
    if let Some(v) = &m.g {
        s.set("g", v)?;
    }
    if let Some(v) = m.grid {
        s.set("grid", &v.to_string())?;
    }
    if let Some(v) = m.alpha {
        s.set("alpha", &v.to_string())?;
    }
    for kv in &m.set {
        let (k, v) = kv.split_once('=').ok_or_else(|| CliError::Usage(format!("--set expects KEY=VALUE, got `{kv}`")))?;
        s.set(k.trim(), v.trim())?;
    }
    Ok(s)
}

fn regime(arg: &Option<String>, s: &Settings) -> Result<Regime> {
    match arg.as_deref().or(s.get("regime")) {
        Some(r) => r.parse(),
        None => Ok(Regime::Baseline),
    }
}

/// Runs a parsed command line and returns what goes to stdout.
pub fn run(cli: &Cli) -> Result<String> {
    let out = match &cli.command {
        Command::Solve { regime: r, lambda, j, market } => {
            let s = settings(market, *lambda, *j)?;
            commands::solve(regime(r, &s)?, &s)?
        }
        Command::Sweep { regime: r, lambda, j, probe, market } => {
            let s = settings(market, None, None)?;
            let reg = regime(r, &s)?;
            let base = s.market(&reg.default_market())?;
            let lambdas = if lambda.is_empty() { s.list("lambda")?.unwrap_or(vec![base.lambda]) } else { lambda.clone() };
            let js = if j.is_empty() { vec![base.j] } else { j.clone() };
            let probes = if probe.is_empty() {
                s.list("probe")?.unwrap_or(commands::DEFAULT_PROBES.to_vec())
            } else {
                probe.clone()
            };
            let mut s = s;
            // the lists replace the scalar keys
            s.set("lambda", &lambdas[0].to_string())?;
            commands::sweep(reg, &s, &lambdas, &js, &probes)?
        }
        Command::Figure { name } => commands::figure(name)?,
        Command::Oracle { n, seed, info, lambda, j, market } => {
            let s = settings(market, *lambda, *j)?;
            commands::oracle(&s, *n, *seed, commands::parse_info(info)?)?
        }
    };
    emit(&out, cli.out.as_deref(), cli.format)
}

/// Writes tables and `report.txt` under `dir`, or renders to a string.
pub fn emit(out: &Output, dir: Option<&std::path::Path>, format: Format) -> Result<String> {
    match dir {
        Some(d) => {
            std::fs::create_dir_all(d)?;
            let mut listing = String::new();
            for (name, t) in &out.tables {
                let p = d.join(name);
                t.write_csv(std::fs::File::create(&p)?)?;
                listing.push_str(&format!("wrote {}\n", p.display()));
            }
            let p = d.join(out.report_name.as_deref().unwrap_or("report.txt"));
            std::fs::write(&p, out.report.render())?;
            listing.push_str(&format!("wrote {}\n", p.display()));
            Ok(listing)
        }
        None => match (format, out.tables.first()) {
            (Format::Csv, Some((_, t))) => t.to_csv_string(),
            _ => Ok(out.report.render()),
        },
    }
}
