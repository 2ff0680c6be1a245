//! Command-line front end for the relay network simulator.
//!
//! Every subcommand returns a process exit status: 0 on success, 1 when
//! `validate` finds a failing check, 2 for bad input and 3 for failures
//! during a run.

pub mod config;
pub mod error;
pub mod output;
pub mod validate;

use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use serde::Serialize;

use dstc_core::harness::run_ber;
use dstc_core::powalloc::{
    allocation_table, db_to_linear, fit_quadratic, FitCoefficients, GridSpec,
};
use dstc_core::protocols::{PowerAllocation, Protocol};
use dstc_core::snr::snr_closed_form;

pub use error::CliError;

#[derive(Debug, Parser)]
#[command(
    name = "dstc-sim",
    version,
    about = "Two-layer relay network DSTC simulator"
)]
pub struct Cli {
    /// Worker threads; defaults to one per core.
    #[arg(long, global = true, env = "DSTC_SIM_THREADS")]
    pub threads: Option<usize>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Bit-error-rate sweep described by a JSON config.
    Ber(BerArgs),
    /// Optimum power allocation over a range of total powers.
    Powalloc(PowallocArgs),
    /// Closed-form SNR over the whole allocation grid at one total power.
    Snrmap(SnrmapArgs),
    /// Fast self-check suite.
    Validate(ValidateArgs),
}

#[derive(Debug, Args)]
pub struct BerArgs {
    #[arg(long)]
    pub config: PathBuf,
    /// Output directory; receives `ber.csv` and `manifest.json`.
    #[arg(long)]
    pub out: PathBuf,
    /// Replaces the `seed` key of the config.
    #[arg(long)]
    pub seed_override: Option<u64>,
    /// Replaces the `grid` key of the config.
    #[arg(long)]
    pub grid: Option<f64>,
}

#[derive(Debug, Args)]
pub struct PowallocArgs {
    #[arg(long)]
    pub protocol: Protocol,
    #[arg(long)]
    pub sigma2sq: f64,
    /// First total power in dB.
    #[arg(long, default_value_t = 0.0)]
    pub from: f64,
    /// Last total power in dB, inclusive.
    #[arg(long, default_value_t = 24.0)]
    pub to: f64,
    #[arg(long, default_value_t = 2.0)]
    pub step: f64,
    #[arg(long, default_value_t = 5)]
    pub relays: usize,
    #[arg(long, default_value_t = 0.001)]
    pub grid: f64,
    /// Also fit each optimum fraction as a quadratic in P_dB.
    #[arg(long)]
    pub fit: bool,
    /// Output directory; receives `powalloc.csv` and, with `--fit`, `fit.json`.
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct SnrmapArgs {
    #[arg(long)]
    pub protocol: Protocol,
    #[arg(long)]
    pub sigma2sq: f64,
    #[arg(long = "p-db")]
    pub p_db: f64,
    #[arg(long, default_value_t = 5)]
    pub relays: usize,
    #[arg(long, default_value_t = 0.01)]
    pub grid: f64,
    /// Output directory; receives `snrmap.csv`.
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct ValidateArgs {
    /// Corrupts covariance symmetry so that the suite must fail.
    #[arg(long)]
    pub inject_fault: bool,
}

/// Executes `cli` and returns the process exit status.
pub fn run(cli: Cli) -> i32 {
    let result = thread_pool(cli.threads).and_then(|pool| {
        pool.install(|| match cli.command {
            Command::Ber(args) => cmd_ber(&args),
            Command::Powalloc(args) => cmd_powalloc(&args),
            Command::Snrmap(args) => cmd_snrmap(&args),
            Command::Validate(args) => Ok(cmd_validate(&args)),
        })
    });
    match result {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

fn thread_pool(threads: Option<usize>) -> Result<rayon::ThreadPool, CliError> {
    if threads == Some(0) {
        return Err(usage("--threads", "must be at least 1"));
    }
    rayon::ThreadPoolBuilder::new()
        .num_threads(threads.unwrap_or(0))
        .build()
        .map_err(|e| usage("--threads", e.to_string()))
}

fn usage(flag: &'static str, message: impl Into<String>) -> CliError {
    CliError::Usage {
        flag,
        message: message.into(),
    }
}

fn prepare_out(dir: &Path) -> Result<(), CliError> {
    std::fs::create_dir_all(dir).map_err(|e| CliError::Io {
        path: dir.to_path_buf(),
        source: e,
    })
}

pub fn cmd_ber(args: &BerArgs) -> Result<i32, CliError> {
    let text = std::fs::read_to_string(&args.config).map_err(|e| CliError::Io {
        path: args.config.clone(),
        source: e,
    })?;
    let mut config = config::parse_config(&args.config, &text)?;
    if let Some(seed) = args.seed_override {
        config.seed = seed;
    }
    if let Some(grid) = args.grid {
        config.grid = grid;
        config
            .validate()
            .map_err(|e| usage("--grid", e.to_string()))?;
    }
    prepare_out(&args.out)?;
    let points = run_ber(&config)?;
    let hash = output::config_hash(&config);
    output::write_ber_csv(&args.out.join("ber.csv"), &points, &hash)?;
    output::write_manifest(&args.out.join("manifest.json"), &config, &hash, &points)?;
    Ok(0)
}

/// `from, from + step, ...` up to and including `to`.
pub fn db_range(from: f64, to: f64, step: f64) -> Result<Vec<f64>, CliError> {
    if !from.is_finite() || !to.is_finite() || to < from {
        return Err(usage(
            "--from/--to",
            format!("empty or non-finite range {from}..{to}"),
        ));
    }
    if !(step > 0.0) || !step.is_finite() {
        return Err(usage("--step", format!("must be positive, got {step}")));
    }
    let count = ((to - from) / step + 1e-9).floor() as usize + 1;
    Ok((0..count).map(|k| from + k as f64 * step).collect())
}

#[derive(Serialize)]
struct PowallocRow<'a> {
    protocol: &'a str,
    sigma2sq: f64,
    #[serde(rename = "P_dB")]
    p_db: f64,
    p1_frac: f64,
    p2_frac: f64,
    p3_frac: f64,
    snr: f64,
    config_hash: &'a str,
}

#[derive(Serialize)]
struct PowallocSettings {
    protocol: Protocol,
    sigma2sq: f64,
    #[serde(rename = "P_dB")]
    p_db: Vec<f64>,
    relays: usize,
    grid: f64,
}

#[derive(Serialize)]
struct FitReport<'a> {
    config_hash: &'a str,
    x: &'static str,
    p1_frac: FitCoefficients,
    p2_frac: FitCoefficients,
    p3_frac: FitCoefficients,
}

pub fn cmd_powalloc(args: &PowallocArgs) -> Result<i32, CliError> {
    let p_db = db_range(args.from, args.to, args.step)?;
    if !(0.0..=1.0).contains(&args.sigma2sq) {
        return Err(usage(
            "--sigma2sq",
            format!("must lie in [0, 1], got {}", args.sigma2sq),
        ));
    }
    if args.relays == 0 {
        return Err(usage("--relays", "must be at least 1"));
    }
    let grid = GridSpec::uniform(args.grid).map_err(|e| usage("--grid", e.to_string()))?;
    let settings = PowallocSettings {
        protocol: args.protocol,
        sigma2sq: args.sigma2sq,
        p_db: p_db.clone(),
        relays: args.relays,
        grid: args.grid,
    };
    let hash = output::config_hash(&settings);
    let rows = allocation_table(args.protocol, args.sigma2sq, args.relays, &p_db, &grid)?;

    prepare_out(&args.out)?;
    output::write_csv(
        &args.out.join("powalloc.csv"),
        rows.iter().map(|r| PowallocRow {
            protocol: args.protocol.name(),
            sigma2sq: args.sigma2sq,
            p_db: r.p_db,
            p1_frac: r.p1_frac,
            p2_frac: r.p2_frac,
            p3_frac: r.p3_frac,
            snr: r.snr,
            config_hash: &hash,
        }),
    )?;
    if args.fit {
        let fit = |pick: fn(&dstc_core::powalloc::AllocationRow) -> f64| {
            let pts: Vec<(f64, f64)> = rows.iter().map(|r| (r.p_db, pick(r))).collect();
            fit_quadratic(&pts)
        };
        let report = FitReport {
            config_hash: &hash,
            x: "P_dB",
            p1_frac: fit(|r| r.p1_frac)?,
            p2_frac: fit(|r| r.p2_frac)?,
            p3_frac: fit(|r| r.p3_frac)?,
        };
        output::write_json(&args.out.join("fit.json"), &report)?;
    }
    Ok(0)
}

#[derive(Serialize)]
struct SnrmapRow<'a> {
    p1_frac: f64,
    p2_frac: f64,
    p3_frac: f64,
    snr: f64,
    config_hash: &'a str,
}

pub fn cmd_snrmap(args: &SnrmapArgs) -> Result<i32, CliError> {
    if !(0.0..=1.0).contains(&args.sigma2sq) {
        return Err(usage(
            "--sigma2sq",
            format!("must lie in [0, 1], got {}", args.sigma2sq),
        ));
    }
    if !args.p_db.is_finite() {
        return Err(usage("--p-db", "must be finite"));
    }
    if args.relays == 0 {
        return Err(usage("--relays", "must be at least 1"));
    }
    let grid = GridSpec::uniform(args.grid).map_err(|e| usage("--grid", e.to_string()))?;
    let hash = output::config_hash(&(
        args.protocol,
        args.sigma2sq,
        args.p_db,
        args.relays,
        args.grid,
    ));
    let total = db_to_linear(args.p_db);
    let steps = (1.0 / grid.delta + 1e-9).floor() as usize;
    let mut rows = Vec::new();
    for n in 0..=steps {
        for m in 0..=(steps - n) {
            let (f1, f2) = (n as f64 * grid.delta, m as f64 * grid.epsilon);
            let f3 = 1.0 - f1 - f2;
            let f3 = if f3 < 1e-9 { 0.0 } else { f3 };
            let snr = PowerAllocation::new(f1 * total, f2 * total, f3 * total, args.sigma2sq)
                .map(|a| snr_closed_form(args.protocol, &a, args.relays))?;
            rows.push(SnrmapRow {
                p1_frac: f1,
                p2_frac: f2,
                p3_frac: f3,
                snr,
                config_hash: &hash,
            });
        }
    }
    prepare_out(&args.out)?;
    output::write_csv(&args.out.join("snrmap.csv"), rows)?;
    Ok(0)
}

pub fn cmd_validate(args: &ValidateArgs) -> i32 {
    let options = validate::ValidateOptions {
        inject_fault: args.inject_fault,
    };
    let outcomes = validate::run_checks(&options);
    print!("{}", validate::render_table(&outcomes));
    match validate::relay_power_table() {
        Ok(table) => print!("\nrelay power (informational)\n{table}"),
        Err(e) => println!("\nrelay power table unavailable: {e}"),
    }
    let failed = outcomes.iter().filter(|o| !o.passed).count();
    if failed == 0 {
        println!("\nall {} checks passed", outcomes.len());
        0
    } else {
        println!("\n{failed} of {} checks failed", outcomes.len());
        1
    }
}
