use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;
use widomlab_cli::config::ExperimentKind;
use widomlab_cli::{run, Cache, ExperimentConfig};

/// Runs one widomlab experiment and writes `<experiment>.csv` and
/// `<experiment>.json`.
///
/// Exit status: 0 when every target passes, 2 when a target misses its
/// tolerance, 1 on any error.
#[derive(Debug, Parser)]
#[command(name = "widomlab", version)]
struct Args {
    /// trace2, traceF, gamma-decay, entropy-lattice, entropy-continuum,
    /// roccaforte, lemma51 or fit
    experiment: String,
    /// Experiment config file
    #[arg(long)]
    config: PathBuf,
    /// Overrides experiment.seed
    #[arg(long)]
    seed: Option<u64>,
    /// Compute everything afresh and leave the cache untouched
    #[arg(long)]
    no_cache: bool,
    /// Output directory; the cache lives in <out-dir>/cache unless
    /// WIDOMLAB_CACHE_DIR is set
    #[arg(long, default_value = ".")]
    out_dir: PathBuf,
    /// Worker threads (default: all cores)
    #[arg(long)]
    jobs: Option<usize>,
}

fn execute(args: Args) -> Result<bool, Box<dyn std::error::Error>> {
    let kind: ExperimentKind = args.experiment.parse()?;
    let text = std::fs::read_to_string(&args.config)
        .map_err(|e| format!("cannot read {}: {e}", args.config.display()))?;
    let mut cfg = ExperimentConfig::parse_as(&text, Some(kind))?;
    if let Some(seed) = args.seed {
        cfg.seed = seed;
    }
    let cache = if args.no_cache {
        None
    } else {
        let dir = Cache::resolve_dir(&args.out_dir.join("cache"));
        match Cache::open(&dir) {
            Ok(c) => Some(c),
            Err(e) => {
                log::warn!(
                    "cache at {} unavailable ({e}); running without it",
                    dir.display()
                );
                None
            }
        }
    };
    let mut pool = rayon::ThreadPoolBuilder::new();
    if let Some(jobs) = args.jobs {
        if jobs == 0 {
            return Err("--jobs must be at least 1".into());
        }
        pool = pool.num_threads(jobs);
    }
    let pool = pool.build()?;
    let report = pool.install(|| run(&cfg, cache.as_ref()))?;
    let (csv, json) = report.write_files(&args.out_dir)?;
    for line in report.summary() {
        println!("{line}");
    }
    println!("wrote {} and {}", csv.display(), json.display());
    Ok(report.pass)
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let args = match Args::try_parse() {
        Ok(a) => a,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match execute(args) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(2),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
    }
}
