//! Benchmark harness CLI: batch experiments, offline estimation on recorded
//! PLY sequences, and plot-data export.
//!
//! Exit codes: 0 success, 2 configuration error, 3 input parse error,
//! 1 anything else.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use artaxis::bench::{
    export_plot_data, parse_results_csv, render_offline_csv, run_experiment, run_offline,
    write_results_csv, write_run_log, BenchError,
};
use artaxis::config::{ConfigError, ExperimentConfig, TaskKind};
use artaxis::geom::JointKind;
use artaxis::policy::PolicyMode;

/// Default output directory env var, overridden by `--out-dir`.
const OUT_DIR_ENV: &str = "ARTAXIS_OUT_DIR";

#[derive(Parser)]
#[command(name = "artaxis", version, about = "Closed-loop joint-axis estimation benchmark")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct OutDirArg {
    /// Output directory (default: $ARTAXIS_OUT_DIR or the working directory).
    #[arg(long)]
    out_dir: Option<PathBuf>,
}

impl OutDirArg {
    fn resolve(&self) -> PathBuf {
        self.out_dir
            .clone()
            .or_else(|| std::env::var_os(OUT_DIR_ENV).map(PathBuf::from))
            .unwrap_or_else(|| PathBuf::from("."))
    }
}

#[derive(Subcommand)]
enum Command {
    /// Run a batch experiment and write results.csv.
    Bench {
        /// TOML experiment configuration; defaults apply when omitted.
        #[arg(long)]
        config: Option<PathBuf>,
        /// Task to benchmark when no config file is given (or to override it).
        #[arg(long)]
        task: Option<TaskKind>,
        /// Override the config's seed base.
        #[arg(long)]
        seed: Option<u64>,
        /// Parallel trial workers.
        #[arg(long, default_value_t = default_jobs())]
        jobs: usize,
        /// Also write per-mode plot CSVs next to results.csv.
        #[arg(long, default_value_t = false)]
        plot: bool,
        #[command(flatten)]
        out: OutDirArg,
    },
    /// Estimate the axis over a directory of pre-segmented PLY frames.
    Offline {
        /// Directory of per-frame PLY files; lexicographic order is temporal
        /// order.
        frames_dir: PathBuf,
        /// Joint kind of the recorded object.
        #[arg(long, value_parser = parse_kind)]
        kind: JointKind,
        /// Optional TOML config supplying pipeline parameters.
        #[arg(long)]
        config: Option<PathBuf>,
        /// Filter radius override, meters (sparse real clouds need a large
        /// radius).
        #[arg(long)]
        radius: Option<f64>,
        /// Filter neighbor-count override.
        #[arg(long)]
        min_neighbors: Option<usize>,
        #[command(flatten)]
        out: OutDirArg,
    },
    /// Re-emit success-vs-target series from a results.csv.
    Plotdata {
        /// Path to a results.csv produced by `bench`.
        results: PathBuf,
        /// Restrict to these modes (comma separated: closed_loop, open_loop,
        /// ground_truth).
        #[arg(long, value_delimiter = ',')]
        modes: Option<Vec<String>>,
        #[command(flatten)]
        out: OutDirArg,
    },
}

fn default_jobs() -> usize {
    std::thread::available_parallelism().map(|n| n.get()).unwrap_or(1)
}

fn parse_kind(s: &str) -> Result<JointKind, String> {
    match s {
        "prismatic" => Ok(JointKind::Prismatic),
        "revolute" => Ok(JointKind::Revolute),
        other => Err(format!("unknown joint kind '{other}' (prismatic|revolute)")),
    }
}

fn parse_mode(s: &str) -> Result<PolicyMode, String> {
    match s {
        "closed_loop" => Ok(PolicyMode::ClosedLoop),
        "open_loop" => Ok(PolicyMode::OpenLoop),
        "ground_truth" => Ok(PolicyMode::GroundTruth),
        other => Err(format!("unknown mode '{other}'")),
    }
}

fn load_config(
    path: Option<&Path>,
    task: Option<TaskKind>,
    seed: Option<u64>,
) -> Result<ExperimentConfig, ConfigError> {
    let mut cfg = match path {
        Some(p) => ExperimentConfig::load(p)?,
        None => {
            let task = task.ok_or_else(|| {
                ConfigError::Invalid("either --config or --task is required".to_string())
            })?;
            ExperimentConfig::for_task(task)
        }
    };
    if path.is_some() {
        if let Some(task) = task {
            if task != cfg.task {
                return Err(ConfigError::Invalid(
                    "--task conflicts with the task in --config".to_string(),
                ));
            }
        }
    }
    if let Some(seed) = seed {
        cfg.seed_base = seed;
    }
    cfg.validate()?;
    Ok(cfg)
}

fn run(cli: Cli) -> Result<(), BenchError> {
    match cli.command {
        Command::Bench { config, task, seed, jobs, plot, out } => {
            let cfg = load_config(config.as_deref(), task, seed)?;
            let out_dir = out.resolve();
            std::fs::create_dir_all(&out_dir)?;
            eprintln!(
                "running {} x {} targets x {} modes ({} trials each, {jobs} workers)",
                cfg.task.as_str(),
                cfg.targets.len(),
                cfg.modes.len(),
                cfg.trials_per_target
            );
            let table = run_experiment(&cfg, jobs)?;
            let results = out_dir.join("results.csv");
            write_results_csv(&table, &results)?;
            eprintln!("wrote {}", results.display());
            if plot {
                for path in export_plot_data(&table, &out_dir, None)? {
                    eprintln!("wrote {}", path.display());
                }
            }
            Ok(())
        }
        Command::Offline { frames_dir, kind, config, radius, min_neighbors, out } => {
            let mut params = match config.as_deref() {
                Some(p) => ExperimentConfig::load(p)?.pipeline,
                None => Default::default(),
            };
            if let Some(r) = radius {
                params.filter.radius = r;
                // Clustering reuses the filter radius.
                params.window.cluster_radius = params.window.cluster_radius.map(|_| r);
                params.extraction.refilter.radius = r;
            }
            if let Some(eps) = min_neighbors {
                params.filter.min_neighbors = eps;
                params.extraction.refilter.min_neighbors = eps.min(params.extraction.refilter.min_neighbors);
            }
            let out_dir = out.resolve();
            std::fs::create_dir_all(&out_dir)?;
            let report = run_offline(&frames_dir, kind, &params)?;
            let csv_path = out_dir.join("axis_estimates.csv");
            std::fs::write(&csv_path, render_offline_csv(&report))?;
            write_run_log(&out_dir.join("run.log"), "-", &report.records)?;
            let last = report.estimates.last().expect("nonempty estimates");
            eprintln!(
                "wrote {} ({} frames, {} estimates; final pivot ({:.4}, {:.4}, {:.4}), direction ({:.3}, {:.3}, {:.3}))",
                csv_path.display(),
                report.records.len(),
                report.estimates.len(),
                last.axis.pivot.x,
                last.axis.pivot.y,
                last.axis.pivot.z,
                last.axis.direction.x,
                last.axis.direction.y,
                last.axis.direction.z,
            );
            Ok(())
        }
        Command::Plotdata { results, modes, out } => {
            let text = std::fs::read_to_string(&results)?;
            let table = parse_results_csv(&text)?;
            let mode_filter = match modes {
                None => None,
                Some(names) => {
                    let mut parsed = Vec::new();
                    for name in names {
                        parsed.push(parse_mode(name.trim()).map_err(ConfigError::Invalid)?);
                    }
                    Some(parsed)
                }
            };
            let out_dir = out.resolve();
            std::fs::create_dir_all(&out_dir)?;
            let written = export_plot_data(&table, &out_dir, mode_filter.as_deref())?;
            if written.is_empty() {
                eprintln!("warning: no (task, mode) series matched; nothing written");
            }
            for path in written {
                eprintln!("wrote {}", path.display());
            }
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(BenchError::Config(e)) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
        Err(BenchError::Parse(e)) => {
            eprintln!("error: {e}");
            ExitCode::from(3)
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
    }
}
