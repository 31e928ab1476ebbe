//! Batch experiment execution, metric aggregation, CSV reporting, and
//! offline estimation on recorded point-cloud sequences.

use std::io::Write;
use std::path::{Path, PathBuf};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use thiserror::Error;

use crate::axis::AxisEstimate;
use crate::config::{ConfigError, ExperimentConfig, TaskKind};
use crate::geom::JointKind;
use crate::pipeline::{AxisTracker, FrameStatus, PipelineParams};
use crate::policy::{run_trial, PolicyConfig, PolicyMode, TrialReport};
use crate::ply::{read_ply, PlyError};
use crate::sim::{random_door, random_drawer};

#[derive(Debug, Error)]
pub enum BenchError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Parse(#[from] PlyError),
    #[error("{0}")]
    Io(#[from] std::io::Error),
    #[error("no frame pair passed the estimation gates")]
    NoValidWindow,
}

/// One aggregated row of the results table.
#[derive(Debug, Clone)]
pub struct ResultRow {
    pub task: TaskKind,
    /// Task units: degrees for doors, meters for drawers.
    pub target: f64,
    pub mode: PolicyMode,
    /// Percent in [0, 100].
    pub success_rate: f64,
    /// Median over trials of the final estimate's direction error; `None`
    /// when no trial produced an estimate.
    pub median_direction_error_deg: Option<f64>,
    pub median_pivot_error_m: Option<f64>,
    pub mean_steps: f64,
}

/// Aggregated experiment results plus provenance metadata.
#[derive(Debug, Clone)]
pub struct ResultsTable {
    pub rows: Vec<ResultRow>,
    pub config_hash: String,
    pub version: String,
}

/// splitmix64; decorrelates derived seeds.
fn mix_seed(seed: u64, salt: u64) -> u64 {
    let mut z = seed ^ salt.wrapping_mul(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Per-trial base seed. Deliberately independent of target and mode: every
/// (target, mode) cell faces the same scene set, which makes the comparison
/// paired and the per-seed success monotone in the target. Changing the
/// trial count for one target cannot affect any other cell.
pub fn trial_seed(seed_base: u64, trial_index: usize) -> u64 {
    mix_seed(seed_base, 0xa11ce ^ (trial_index as u64).wrapping_mul(0x51_7cc1_b727_220b))
}

fn median(values: &mut Vec<f64>) -> Option<f64> {
    if values.is_empty() {
        return None;
    }
    values.sort_by(|a, b| a.total_cmp(b));
    let n = values.len();
    Some(if n % 2 == 1 {
        values[n / 2]
    } else {
        0.5 * (values[n / 2 - 1] + values[n / 2])
    })
}

/// Final-belief errors of a trial: the last step record that carried an
/// estimate.
fn final_errors(report: &TrialReport) -> (Option<f64>, Option<f64>) {
    for rec in report.per_step.iter().rev() {
        if rec.direction_error_deg.is_some() {
            return (rec.direction_error_deg, rec.pivot_error_m);
        }
    }
    (None, None)
}

fn aggregate(task: TaskKind, target: f64, mode: PolicyMode, reports: &[TrialReport]) -> ResultRow {
    let n = reports.len().max(1) as f64;
    let successes = reports.iter().filter(|r| r.success).count() as f64;
    let mut dir_errs: Vec<f64> = Vec::new();
    let mut pivot_errs: Vec<f64> = Vec::new();
    for r in reports {
        let (d, p) = final_errors(r);
        if let Some(d) = d {
            dir_errs.push(d);
        }
        if let Some(p) = p {
            pivot_errs.push(p);
        }
    }
    let mean_steps = reports.iter().map(|r| r.steps_used as f64).sum::<f64>() / n;
    ResultRow {
        task,
        target,
        mode,
        success_rate: 100.0 * successes / n,
        median_direction_error_deg: median(&mut dir_errs),
        median_pivot_error_m: median(&mut pivot_errs),
        mean_steps,
    }
}

/// Run one (target, mode) cell of trials and return the raw reports.
pub fn run_cell(cfg: &ExperimentConfig, target: f64, mode: PolicyMode) -> Vec<TrialReport> {
    let policy = PolicyConfig {
        mode,
        step_size: cfg.budget.step_size,
        init_steps: cfg.budget.init_steps,
        max_steps: cfg.budget.max_steps,
        target: cfg.target_to_joint_units(target),
    };
    (0..cfg.trials_per_target)
        .into_par_iter()
        .map(|i| {
            let base = trial_seed(cfg.seed_base, i);
            let mut scene_rng = ChaCha8Rng::seed_from_u64(mix_seed(base, 1));
            let scene = match cfg.task {
                TaskKind::OpenDoor => random_door(&mut scene_rng, &cfg.scene),
                TaskKind::OpenDrawer => random_drawer(&mut scene_rng, &cfg.scene),
            };
            run_trial(
                scene,
                &cfg.sensor,
                &policy,
                &cfg.pipeline,
                cfg.slip_tolerance,
                mix_seed(base, 2),
            )
        })
        .collect()
}

/// Run the full experiment grid. Deterministic for a fixed config,
/// regardless of the worker count.
pub fn run_experiment(cfg: &ExperimentConfig, jobs: usize) -> Result<ResultsTable, BenchError> {
    cfg.validate()?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs.max(1))
        .build()
        .map_err(|e| ConfigError::Invalid(format!("worker pool: {e}")))?;
    let rows = pool.install(|| {
        let mut rows = Vec::new();
        for &target in &cfg.targets {
            for &mode in &cfg.modes {
                let reports = run_cell(cfg, target, mode);
                rows.push(aggregate(cfg.task, target, mode, &reports));
            }
        }
        rows
    });
    Ok(ResultsTable {
        rows,
        config_hash: cfg.hash(),
        version: env!("CARGO_PKG_VERSION").to_string(),
    })
}

/// Fixed results schema; golden-file tested.
pub const RESULTS_CSV_HEADER: &str =
    "task,target,mode,success_rate,median_direction_error_deg,median_pivot_error_m,mean_steps";

fn fmt_opt(v: Option<f64>) -> String {
    v.map(|x| format!("{x:.6}")).unwrap_or_default()
}

pub fn render_results_csv(table: &ResultsTable) -> String {
    let mut out = String::new();
    out.push_str("# artaxis results v1\n");
    out.push_str(&format!("# config_hash={}\n", table.config_hash));
    out.push_str(&format!("# version={}\n", table.version));
    out.push_str(RESULTS_CSV_HEADER);
    out.push('\n');
    for r in &table.rows {
        out.push_str(&format!(
            "{},{},{},{:.1},{},{},{:.2}\n",
            r.task.as_str(),
            r.target,
            r.mode.as_str(),
            r.success_rate,
            fmt_opt(r.median_direction_error_deg),
            fmt_opt(r.median_pivot_error_m),
            r.mean_steps,
        ));
    }
    out
}

pub fn write_results_csv(table: &ResultsTable, path: &Path) -> std::io::Result<()> {
    std::fs::write(path, render_results_csv(table))
}

/// Write one success-vs-target series file per (task, mode) pair present in
/// the table, optionally restricted to `modes`. Returns the written paths;
/// an empty mode selection writes nothing.
pub fn export_plot_data(
    table: &ResultsTable,
    out_dir: &Path,
    modes: Option<&[PolicyMode]>,
) -> std::io::Result<Vec<PathBuf>> {
    let mut written = Vec::new();
    let mut pairs: Vec<(TaskKind, PolicyMode)> = Vec::new();
    for r in &table.rows {
        if let Some(filter) = modes {
            if !filter.contains(&r.mode) {
                continue;
            }
        }
        if !pairs.contains(&(r.task, r.mode)) {
            pairs.push((r.task, r.mode));
        }
    }
    for (task, mode) in pairs {
        let path = out_dir.join(format!("plot_{}_{}.csv", task.as_str(), mode.as_str()));
        let mut body = String::from("target,success_rate\n");
        for r in table.rows.iter().filter(|r| r.task == task && r.mode == mode) {
            body.push_str(&format!("{},{:.1}\n", r.target, r.success_rate));
        }
        std::fs::write(&path, body)?;
        written.push(path);
    }
    Ok(written)
}

/// Parse a results CSV produced by [`write_results_csv`] back into a table
/// (used by the plot-data subcommand).
pub fn parse_results_csv(text: &str) -> Result<ResultsTable, ConfigError> {
    let mut rows = Vec::new();
    let mut config_hash = String::new();
    let mut version = String::new();
    let bad = |m: String| ConfigError::Parse(m);
    for (i, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        if let Some(rest) = line.strip_prefix('#') {
            let rest = rest.trim();
            if let Some(h) = rest.strip_prefix("config_hash=") {
                config_hash = h.to_string();
            } else if let Some(v) = rest.strip_prefix("version=") {
                version = v.to_string();
            }
            continue;
        }
        if line == RESULTS_CSV_HEADER {
            continue;
        }
        let f: Vec<&str> = line.split(',').collect();
        if f.len() != 7 {
            return Err(bad(format!("line {}: expected 7 fields", i + 1)));
        }
        let task = match f[0] {
            "open_door" => TaskKind::OpenDoor,
            "open_drawer" => TaskKind::OpenDrawer,
            other => return Err(bad(format!("line {}: unknown task '{other}'", i + 1))),
        };
        let mode = match f[2] {
            "closed_loop" => PolicyMode::ClosedLoop,
            "open_loop" => PolicyMode::OpenLoop,
            "ground_truth" => PolicyMode::GroundTruth,
            other => return Err(bad(format!("line {}: unknown mode '{other}'", i + 1))),
        };
        let num = |s: &str| -> Result<f64, ConfigError> {
            s.parse().map_err(|_| bad(format!("line {}: bad number '{s}'", i + 1)))
        };
        let opt = |s: &str| -> Result<Option<f64>, ConfigError> {
            if s.is_empty() { Ok(None) } else { num(s).map(Some) }
        };
        rows.push(ResultRow {
            task,
            target: num(f[1])?,
            mode,
            success_rate: num(f[3])?,
            median_direction_error_deg: opt(f[4])?,
            median_pivot_error_m: opt(f[5])?,
            mean_steps: num(f[6])?,
        });
    }
    if rows.is_empty() {
        return Err(bad("no result rows found".to_string()));
    }
    Ok(ResultsTable { rows, config_hash, version })
}

/// Outcome of one offline frame.
#[derive(Debug, Clone)]
pub struct OfflineFrameRecord {
    pub index: usize,
    pub file: String,
    pub status: FrameStatus,
    /// The estimate produced at this frame, if any.
    pub estimate: Option<AxisEstimate>,
}

#[derive(Debug)]
pub struct OfflineReport {
    pub records: Vec<OfflineFrameRecord>,
    /// All estimates in production order; the last is the final belief.
    pub estimates: Vec<AxisEstimate>,
}

/// Run the estimation pipeline over a directory of per-frame pre-segmented
/// PLY files (lexicographic file order = temporal order). Frames that yield
/// no usable motion part are skipped and recorded.
pub fn run_offline(
    frames_dir: &Path,
    kind: JointKind,
    params: &PipelineParams,
) -> Result<OfflineReport, BenchError> {
    let mut files: Vec<PathBuf> = std::fs::read_dir(frames_dir)?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| {
            p.extension()
                .map(|e| e.eq_ignore_ascii_case("ply"))
                .unwrap_or(false)
        })
        .collect();
    files.sort();
    if files.len() < 2 {
        return Err(ConfigError::Invalid(format!(
            "need at least 2 PLY frames in {}, found {}",
            frames_dir.display(),
            files.len()
        ))
        .into());
    }

    let mut tracker = AxisTracker::new(kind, *params);
    let mut records = Vec::new();
    for (index, file) in files.iter().enumerate() {
        let cloud = read_ply(file)?;
        let status = tracker
            .push_frame(&cloud)
            .map_err(|e| ConfigError::Invalid(format!("{}: {e}", file.display())))?;
        let estimate = match status {
            FrameStatus::Tracked { estimated: true } => tracker.latest().copied(),
            _ => None,
        };
        records.push(OfflineFrameRecord {
            index,
            file: file
                .file_name()
                .map(|n| n.to_string_lossy().into_owned())
                .unwrap_or_default(),
            status,
            estimate,
        });
    }
    let estimates = tracker.estimates().to_vec();
    if estimates.is_empty() {
        return Err(BenchError::NoValidWindow);
    }
    Ok(OfflineReport { records, estimates })
}

pub const OFFLINE_CSV_HEADER: &str =
    "frame,file,window_start,window_end,pivot_x,pivot_y,pivot_z,dir_x,dir_y,dir_z,low_confidence";

/// Per-frame estimate table. Frames that produced no estimate emit empty
/// estimate columns; coordinates are printed with shortest round-trip
/// precision.
pub fn render_offline_csv(report: &OfflineReport) -> String {
    let mut out = String::from(OFFLINE_CSV_HEADER);
    out.push('\n');
    for rec in &report.records {
        match &rec.estimate {
            Some(e) => {
                let p = e.axis.pivot;
                let d = e.axis.direction;
                out.push_str(&format!(
                    "{},{},{},{},{},{},{},{},{},{},{}\n",
                    rec.index,
                    rec.file,
                    e.window.start,
                    e.window.end,
                    p.x,
                    p.y,
                    p.z,
                    d.x,
                    d.y,
                    d.z,
                    if e.low_confidence { 1 } else { 0 },
                ));
            }
            None => {
                out.push_str(&format!("{},{},,,,,,,,,\n", rec.index, rec.file));
            }
        }
    }
    out
}

/// Human-readable run log with per-frame diagnostics.
pub fn write_run_log(
    path: &Path,
    config_hash: &str,
    records: &[OfflineFrameRecord],
) -> std::io::Result<()> {
    let mut f = std::io::BufWriter::new(std::fs::File::create(path)?);
    writeln!(f, "artaxis offline run (config_hash={config_hash})")?;
    for rec in records {
        writeln!(f, "frame {:>4} ({}): {}", rec.index, rec.file, rec.status.describe())?;
    }
    f.flush()
}
