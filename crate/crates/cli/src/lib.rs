//! Experiment driver behind the `satstream` binary.
//!
//! Settings resolve in this order, later wins: built-in defaults, the
//! `--config` JSON file, then command-line flags. `SATSTREAM_OUT_DIR` only
//! supplies the output directory when neither the file nor `--out` does.
//!
//! Exit codes: 0 success, 1 configuration or I/O error, 2 some cells failed.

pub mod compare;
pub mod config;
pub mod report;
pub mod run;

use std::ffi::OsString;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

use config::{ControllerSpec, ExperimentConfig, Overrides, OUT_DIR_ENV};
use satstream::PredictorKind;

pub const EXIT_OK: i32 = 0;
pub const EXIT_CONFIG: i32 = 1;
pub const EXIT_PARTIAL: i32 = 2;

#[derive(Parser, Debug)]
#[command(name = "satstream", version, about = "LEO satellite video streaming experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Write one trace CSV (plus metadata) per repetition seed.
    GenTraces(Common),
    /// Run every (users x controller x trace) cell.
    Run {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        jobs: Option<usize>,
        /// May be repeated; replaces the config's list.
        #[arg(long = "controller", value_name = "NAME")]
        controllers: Vec<ControllerSpec>,
        #[arg(long)]
        predictor: Option<PredictorKind>,
        /// May be repeated; replaces the config's list.
        #[arg(long = "users", value_name = "N")]
        users: Vec<usize>,
        /// Record every joint-MPC candidate evaluation in the cell files.
        #[arg(long)]
        dump_candidates: bool,
    },
    /// Summarize two or more results.csv files over their shared cells.
    Compare {
        #[arg(required = true, num_args = 2..)]
        files: Vec<PathBuf>,
        /// Also write comparison.csv here.
        #[arg(long, env = OUT_DIR_ENV)]
        out: Option<PathBuf>,
    },
    /// QoE breakdown of a results.csv (default: <out>/results.csv).
    Report {
        results: Option<PathBuf>,
        #[arg(long, env = OUT_DIR_ENV)]
        out: Option<PathBuf>,
    },
}

#[derive(Args, Debug)]
struct Common {
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    out: Option<PathBuf>,
    /// Seed base; repetition r uses seed + r.
    #[arg(long)]
    seed: Option<u64>,
}

fn resolve(common: &Common, extra: Overrides) -> anyhow::Result<ExperimentConfig> {
    let file = match &common.config {
        Some(p) => ExperimentConfig::load(p)?,
        None => ExperimentConfig::default(),
    };
    let o = Overrides {
        out: common.out.clone(),
        seed: common.seed,
        ..extra
    };
    let env_out = std::env::var_os(OUT_DIR_ENV).map(PathBuf::from);
    let cfg = file.apply(&o, env_out);
    cfg.validate()?;
    Ok(cfg)
}

fn execute(cmd: Command) -> anyhow::Result<i32> {
    match cmd {
        Command::GenTraces(common) => {
            let cfg = resolve(&common, Overrides::default())?;
            let dir = cfg.out_dir().join("traces");
            for p in run::gen_traces(&cfg, &dir)? {
                println!("{}", p.display());
            }
            Ok(EXIT_OK)
        }
        Command::Run {
            common,
            jobs,
            controllers,
            predictor,
            users,
            dump_candidates,
        } => {
            let cfg = resolve(
                &common,
                Overrides {
                    controllers,
                    predictor,
                    users,
                    dump_candidates,
                    ..Default::default()
                },
            )?;
            let summary = run::run(&cfg, jobs)?;
            let out = cfg.out_dir();
            println!("{} cells -> {}", summary.rows.len(), out.join("results.csv").display());
            for r in summary.rows.iter().filter(|r| r.is_failure()) {
                eprintln!(
                    "cell {} / {} users / {} / seed {} failed: {}",
                    r.controller,
                    r.n_users,
                    r.trace_id,
                    r.seed,
                    if r.error.is_empty() {
                        format!("{} user(s) could not finish", r.failed_users)
                    } else {
                        r.error.clone()
                    }
                );
            }
            print!("{}", report::render(&report::breakdown(&summary.rows)));
            Ok(if summary.failures > 0 { EXIT_PARTIAL } else { EXIT_OK })
        }
        Command::Compare { files, out } => {
            let rows = compare::compare_files(&files)?;
            if let Some(dir) = out {
                std::fs::create_dir_all(&dir)?;
                run::write_csv(&dir.join("comparison.csv"), &rows)?;
            }
            let mut w = csv::Writer::from_writer(std::io::stdout());
            for r in &rows {
                w.serialize(r)?;
            }
            w.flush()?;
            Ok(EXIT_OK)
        }
        Command::Report { results, out } => {
            let out = out.unwrap_or_else(|| PathBuf::from(config::DEFAULT_OUT_DIR));
            let path = results.unwrap_or_else(|| out.join("results.csv"));
            let rows = report::breakdown(&run::read_results(&path)?);
            let dest = path.with_file_name("breakdown.csv");
            run::write_csv(&dest, &rows)?;
            print!("{}", report::render(&rows));
            Ok(EXIT_OK)
        }
    }
}

/// Parses `args` (program name first) and runs the command, returning the
/// process exit code.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_CONFIG } else { EXIT_OK };
            let _ = e.print();
            return code;
        }
    };
    match execute(cli.command) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            EXIT_CONFIG
        }
    }
}
