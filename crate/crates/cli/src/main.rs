use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;

use clap::{Parser, Subcommand};

mod config;
mod output;
mod plot;
mod report;
mod run;

use run::{Failure, Log};

#[derive(Parser, Debug)]
#[command(name = "steepfront", version, about = "Front-forming nonlinear diffusion runs")]
struct Cli {
    /// Suppress progress and summary output.
    #[arg(long, global = true)]
    quiet: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Execute a config and write CSV, SVG and a manifest.
    Run {
        #[arg(long, value_name = "PATH")]
        config: PathBuf,
        /// Output directory; overrides `output.dir`.
        #[arg(long, value_name = "DIR", env = "STEEPFRONT_OUT")]
        out: Option<PathBuf>,
    },
    /// Parse and check a config without running it.
    Validate {
        #[arg(long, value_name = "PATH")]
        config: PathBuf,
    },
    /// Summarise a run directory and draw the combined plot.
    Report {
        #[arg(value_name = "RUN_DIR")]
        dir: PathBuf,
        /// Skip report.svg.
        #[arg(long)]
        no_plot: bool,
    },
    /// Run several configs in parallel, each into `<out>/<config name>`.
    Sweep {
        /// Config files, or directories whose `*.cfg` files are used.
        #[arg(long = "config", value_name = "PATH", required = true)]
        configs: Vec<PathBuf>,
        #[arg(long, value_name = "DIR", env = "STEEPFRONT_OUT", default_value = "sweep-out")]
        out: PathBuf,
    },
}

const DEFAULT_OUT: &str = "steepfront-out";

fn run_one(config: &Path, out: Option<PathBuf>, log: Log) -> Result<(PathBuf, run::Summary), Failure> {
    let cfg = config::parse_file(config).map_err(|e| Failure::Validation(e.to_string()))?;
    let dir = out
        .or_else(|| cfg.out_dir.clone())
        .unwrap_or_else(|| PathBuf::from(DEFAULT_OUT));
    let summary = run::execute(&cfg, &dir, log)?;
    Ok((dir, summary))
}

fn print_summary(dir: &Path, s: &run::Summary) {
    println!("output: {}", dir.display());
    for l in &s.lines {
        println!("  {l}");
    }
    for w in &s.warnings {
        println!("  warning: {w}");
    }
}

fn expand_configs(paths: &[PathBuf]) -> std::io::Result<Vec<PathBuf>> {
    let mut out = Vec::new();
    for p in paths {
        if p.is_dir() {
            let mut found: Vec<PathBuf> = std::fs::read_dir(p)?
                .filter_map(|e| e.ok().map(|e| e.path()))
                .filter(|p| p.extension().is_some_and(|x| x == "cfg"))
                .collect();
            found.sort();
            out.extend(found);
        } else {
            out.push(p.clone());
        }
    }
    Ok(out)
}

fn sweep(configs: &[PathBuf], root: &Path, log: Log) -> u8 {
    let files = match expand_configs(configs) {
        Ok(f) if !f.is_empty() => f,
        Ok(_) => {
            eprintln!("sweep: no config files found");
            return 2;
        }
        Err(e) => {
            eprintln!("sweep: {e}");
            return 2;
        }
    };
    let mut names: Vec<String> = files
        .iter()
        .map(|f| f.file_stem().unwrap_or_default().to_string_lossy().into_owned())
        .collect();
    names.sort();
    if names.windows(2).any(|w| w[0] == w[1]) {
        eprintln!("sweep: config names must be distinct, each gets its own directory");
        return 2;
    }
    let next = AtomicUsize::new(0);
    let results = Mutex::new(vec![0u8; files.len()]);
    let workers = std::thread::available_parallelism()
        .map(|n| n.get())
        .unwrap_or(1)
        .min(files.len());
    std::thread::scope(|s| {
        for _ in 0..workers {
            s.spawn(|| loop {
                let i = next.fetch_add(1, Ordering::SeqCst);
                let Some(file) = files.get(i) else { break };
                let stem = file.file_stem().unwrap_or_default();
                let code = match run_one(file, Some(root.join(stem)), Log { quiet: true }) {
                    Ok((dir, _)) => {
                        log.say(format!("{}: ok -> {}", file.display(), dir.display()));
                        0
                    }
                    Err(f) => {
                        eprintln!("{}: {f}", file.display());
                        f.exit_code()
                    }
                };
                results.lock().expect("no worker panics while holding the lock")[i] = code;
            });
        }
    });
    let codes = results.into_inner().expect("workers have finished");
    codes.into_iter().max().unwrap_or(0)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let log = Log { quiet: cli.quiet };
    let code = match cli.command {
        Command::Run { config, out } => match run_one(&config, out, log) {
            Ok((dir, summary)) => {
                if !cli.quiet {
                    print_summary(&dir, &summary);
                }
                0
            }
            Err(f) => {
                eprintln!("error: {f}");
                f.exit_code()
            }
        },
        Command::Validate { config } => match config::parse_file(&config) {
            Ok(_) => {
                println!("ok");
                0
            }
            Err(e) => {
                eprintln!("{e}");
                2
            }
        },
        Command::Report { dir, no_plot } => {
            if !dir.is_dir() {
                eprintln!("error: {} is not a directory", dir.display());
                2
            } else {
                let rep = report::report(&dir, !no_plot);
                for l in &rep.lines {
                    println!("{l}");
                }
                for w in &rep.warnings {
                    eprintln!("warning: {w}");
                }
                0
            }
        }
        Command::Sweep { configs, out } => sweep(&configs, &out, log),
    };
    ExitCode::from(code)
}
