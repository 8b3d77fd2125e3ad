use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::PathBuf;
use std::time::{Instant, SystemTime, UNIX_EPOCH};

use clap::Parser;
use doublestable_core::Result;
use dslab::config::{self, Command, ExperimentConfig, Format, Pairs};
use dslab::output::{self, Metadata};

/// Monte Carlo lab for doubly stochastic stable processes driven by
/// intersecting heavy-tailed renewal sets.
///
/// Settings come from --config (a key=value file or an earlier output file)
/// and are overridden by flags.
#[derive(Parser, Debug)]
#[command(name = "dslab", version)]
struct Cli {
    /// Command to run; may instead come from the config file.
    #[arg(value_enum)]
    command: Option<Command>,
    /// key=value file, or a result file to replay.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    alpha: Option<String>,
    #[arg(long)]
    beta: Option<String>,
    #[arg(long)]
    n: Option<String>,
    /// Repeatable or comma separated.
    #[arg(long, value_delimiter = ',')]
    rho: Vec<String>,
    /// Threshold multipliers of b_n; repeatable or comma separated.
    #[arg(long, value_delimiter = ',')]
    y: Vec<String>,
    /// Running-maximum grid for macro.
    #[arg(long, value_delimiter = ',')]
    x: Vec<String>,
    /// Path lengths of the macro flatness trend.
    #[arg(long = "trend-n", value_delimiter = ',')]
    trend_n: Vec<String>,
    #[arg(long)]
    reps: Option<String>,
    /// Truncation: geometric, core, pos:<p> or an integer.
    #[arg(long)]
    m: Option<String>,
    #[arg(long = "table-horizon")]
    table_horizon: Option<String>,
    /// Tail-process horizon target, relative to qF2.
    #[arg(long)]
    residual: Option<String>,
    #[arg(long)]
    seed: Option<String>,
    /// Worker threads, 0 for all cores.
    #[arg(long)]
    parallelism: Option<String>,
    /// Result file; stdout when absent. Plot data and metadata go next to it.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_enum)]
    format: Option<Format>,
    /// Directory for cached renewal tables.
    #[arg(long = "cache-dir")]
    cache_dir: Option<PathBuf>,
    /// More logging (-v, -vv).
    #[arg(short, long, action = clap::ArgAction::Count)]
    verbose: u8,
}

impl Cli {
    fn pairs(&self) -> Result<Pairs> {
        let mut p: Pairs = match &self.config {
            Some(path) => config::read_file(path)?,
            None => Vec::new(),
        };
        let mut set = |k: &str, v: String| p.push((k.to_string(), v));
        if let Some(c) = self.command {
            set("command", c.name().to_string());
        }
        for (k, v) in [
            ("alpha", &self.alpha),
            ("beta", &self.beta),
            ("n", &self.n),
            ("reps", &self.reps),
            ("m", &self.m),
            ("table_horizon", &self.table_horizon),
            ("residual", &self.residual),
            ("seed", &self.seed),
            ("parallelism", &self.parallelism),
        ] {
            if let Some(v) = v {
                set(k, v.clone());
            }
        }
        for (k, v) in [("rho", &self.rho), ("y", &self.y), ("x", &self.x), ("trend_n", &self.trend_n)] {
            if !v.is_empty() {
                set(k, v.join(","));
            }
        }
        if let Some(f) = self.format {
            set("format", f.name().to_string());
        }
        // the output path of a replayed file is never taken from the file
        p.retain(|(k, _)| k != "out");
        if let Some(o) = &self.out {
            p.push(("out".into(), o.display().to_string()));
        }
        if let Some(d) = &self.cache_dir {
            p.push(("cache_dir".into(), d.display().to_string()));
        }
        Ok(p)
    }
}

fn execute(cli: &Cli) -> Result<()> {
    let cfg = ExperimentConfig::from_pairs(&cli.pairs()?)?;
    log::info!("{} digest {}", cfg.command.name(), cfg.digest());
    let started = SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_secs_f64()).unwrap_or(0.0);
    let clock = Instant::now();
    let outcome = dslab::commands::run(&cfg)?;
    let wall = clock.elapsed().as_secs_f64();
    match &cfg.out {
        None => {
            let stdout = std::io::stdout();
            let mut lock = stdout.lock();
            output::write_rows(&cfg, &outcome.rows, &mut lock)?;
            lock.flush()?;
        }
        Some(path) => {
            output::write_rows(&cfg, &outcome.rows, BufWriter::new(File::create(path)?))?;
            let (plot, meta) = output::sidecars(path);
            output::write_plot(&outcome.plot, BufWriter::new(File::create(plot)?))?;
            let threads = if cfg.parallelism == 0 {
                std::thread::available_parallelism().map(|n| n.get()).unwrap_or(1)
            } else {
                cfg.parallelism
            };
            let m = Metadata {
                command: cfg.command.name().to_string(),
                config_digest: cfg.digest(),
                version: env!("CARGO_PKG_VERSION"),
                threads,
                started_unix: started,
                wall_seconds: wall,
                stages: outcome.stages.clone(),
                rows: outcome.rows.len(),
            };
            output::write_metadata(&m, BufWriter::new(File::create(meta)?))?;
        }
    }
    for (stage, secs) in &outcome.stages {
        log::info!("{stage}: {secs:.2}s");
    }
    Ok(())
}

fn main() {
    let cli = Cli::parse();
    let level = match cli.verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).init();
    if let Err(e) = execute(&cli) {
        eprintln!("dslab: {e}");
        std::process::exit(dslab::exit_code(&e));
    }
}
