//! The `listdec` command-line harness.

pub mod bench;
pub mod commands;
pub mod config;
pub mod selftest;

use std::path::PathBuf;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;

use clap::{Parser, Subcommand};
use serde_json::json;

use crate::error::Error;
use crate::sweeps::Suite;

pub use bench::{cmd_bench, BenchRow};
pub use commands::{cmd_estimate, cmd_evaluate, cmd_generate, CsvRow, ResultsFile, CSV_COLUMNS};
pub use config::ExperimentConfig;
pub use selftest::{cmd_selftest, SelftestReport};

pub const EXIT_OK: i32 = 0;
pub const EXIT_VALIDATION: i32 = 2;
pub const EXIT_RUNTIME: i32 = 3;
pub const EXIT_SELFTEST: i32 = 4;

/// Environment variable capping worker threads.
pub const THREADS_ENV: &str = "LISTDEC_THREADS";

#[derive(Debug, Parser)]
#[command(name = "listdec", version, about = "List-decodable covariance estimation experiments")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Write one dataset triplet per trial.
    Generate {
        #[arg(long)]
        config: PathBuf,
        /// Directory overriding `output_dir`.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run the estimator on one dataset.
    Estimate {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        dataset: PathBuf,
        /// Results path; defaults to `<output_dir>/<stem>.results.json`.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Overrides the estimator seed from the config.
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Score a results file against the dataset's labels.
    Evaluate {
        #[arg(long)]
        results: PathBuf,
        #[arg(long)]
        dataset: PathBuf,
        /// Metric report path; defaults to `<stem>.metrics.json` next to the results.
        #[arg(long)]
        out: Option<PathBuf>,
        /// CSV to append to; defaults to `metrics.csv` next to the results.
        #[arg(long)]
        csv: Option<PathBuf>,
    },
    /// Run the property sweeps.
    Selftest {
        #[arg(long, value_enum, default_value = "fast")]
        suite: SuiteArg,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Only run sweeps whose name contains this string.
        #[arg(long)]
        filter: Option<String>,
        /// JSON report path.
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long, hide = true)]
        inject_failure: bool,
    },
    /// Time one estimator loop over a (d, m) grid.
    Bench {
        #[arg(long = "d", value_delimiter = ',', default_values_t = [4usize, 16])]
        d_list: Vec<usize>,
        #[arg(long = "m", value_delimiter = ',', default_values_t = [1000usize, 4000])]
        m_list: Vec<usize>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 7)]
        reps: usize,
        /// Power iterations per timed loop.
        #[arg(long, default_value_t = 100)]
        steps: usize,
        /// CSV path; the table is printed to stdout either way.
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Clone, Copy, Debug, clap::ValueEnum)]
pub enum SuiteArg {
    Fast,
    Full,
}

impl From<SuiteArg> for Suite {
    fn from(s: SuiteArg) -> Self {
        match s {
            SuiteArg::Fast => Suite::Fast,
            SuiteArg::Full => Suite::Full,
        }
    }
}

/// Exit code for a failed command.
pub fn exit_code(e: &Error) -> i32 {
    if e.is_validation() {
        EXIT_VALIDATION
    } else {
        EXIT_RUNTIME
    }
}

fn report_error(e: &Error) -> i32 {
    eprintln!("{}", json!({ "error": { "kind": e.kind(), "message": e.to_string() } }));
    exit_code(e)
}

/// Parses `args` (including the program name) and runs the command.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_VALIDATION } else { EXIT_OK };
            let _ = e.print();
            return code;
        }
    };
    match execute(cli.command) {
        Ok(code) => code,
        Err(e) => report_error(&e),
    }
}

fn execute(command: Command) -> crate::Result<i32> {
    match command {
        Command::Generate { config, out } => {
            let cfg = ExperimentConfig::load(&config)?;
            for p in cmd_generate(&cfg, out.as_deref())? {
                println!("{}", p.display());
            }
        }
        Command::Estimate { config, dataset, out, seed } => {
            let cfg = ExperimentConfig::load(&config)?;
            let out = out.unwrap_or_else(|| commands::default_results_path(&cfg, &dataset));
            let r = cmd_estimate(&cfg, &dataset, &out, seed)?;
            println!("{}", json!({ "results": out.display().to_string(), "list_size": r.list_size }));
        }
        Command::Evaluate { results, dataset, out, csv } => {
            let ev = cmd_evaluate(&results, &dataset, out.as_deref(), csv.as_deref())?;
            println!("{}", serde_json::to_string(&ev.row)?);
        }
        Command::Selftest { suite, seed, filter, out, inject_failure } => {
            let report = cmd_selftest(suite.into(), seed, filter.as_deref(), inject_failure, |line| println!("{line}"));
            if let Some(path) = out {
                let mut bytes = serde_json::to_vec_pretty(&report)?;
                bytes.push(b'\n');
                crate::datagen::io::write_atomic(&path, &bytes)?;
            }
            return Ok(if report.all_passed() { EXIT_OK } else { EXIT_SELFTEST });
        }
        Command::Bench { d_list, m_list, seed, reps, steps, out } => {
            let rows = cmd_bench(&d_list, &m_list, seed, reps, steps)?;
            let text = bench::to_csv(&rows)?;
            print!("{text}");
            if let Some(path) = out {
                crate::datagen::io::write_atomic(&path, text.as_bytes())?;
            }
        }
    }
    Ok(EXIT_OK)
}

/// Worker count: `LISTDEC_THREADS` if set to a positive integer, otherwise
/// the machine's available parallelism.
pub fn thread_cap() -> usize {
    std::env::var(THREADS_ENV)
        .ok()
        .and_then(|v| v.trim().parse::<usize>().ok())
        .filter(|&n| n > 0)
        .unwrap_or_else(|| std::thread::available_parallelism().map_or(1, |n| n.get()))
}

/// Maps `f` over `items` on up to `thread_cap()` threads, keeping input order.
pub fn parallel_map<T, R, F>(items: &[T], f: F) -> Vec<R>
where
    T: Sync,
    R: Send,
    F: Fn(&T) -> R + Sync,
{
    let workers = thread_cap().min(items.len());
    if workers <= 1 {
        return items.iter().map(f).collect();
    }
    let next = AtomicUsize::new(0);
    let slots: Mutex<Vec<Option<R>>> = Mutex::new((0..items.len()).map(|_| None).collect());
    std::thread::scope(|s| {
        for _ in 0..workers {
            s.spawn(|| loop {
                let i = next.fetch_add(1, Ordering::Relaxed);
                if i >= items.len() {
                    break;
                }
                let r = f(&items[i]);
                slots.lock().unwrap()[i] = Some(r);
            });
        }
    });
    slots.into_inner().unwrap().into_iter().map(|r| r.expect("every slot is filled")).collect()
}
