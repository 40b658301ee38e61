//! `slipnav`: run trials, batches of trials, and render map frames.
//!
//! Exit status is 0 whenever a run completes with any recorded outcome,
//! 2 for configuration problems and 3 for filesystem problems.

use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use log::{info, warn};
use serde::{Deserialize, Serialize};

use slipnav::bitmap;
use slipnav::presets;
use slipnav::render::{compose, Overlay};
use slipnav::report;
use slipnav::sim::{expand_trials, run_batch};
use slipnav::{run_trial, Error, Point, ScenarioConfig, StrategyKind, TrialMetrics, TrialReport};

#[derive(Parser)]
#[command(name = "slipnav", version, about = "Slip-aware safe navigation and exploration simulator")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one trial from a scenario file (or a built-in preset name).
    Run {
        scenario: String,
        #[arg(short, long)]
        output: PathBuf,
        /// `key=value`, dotted keys reach nested tables. Repeatable.
        #[arg(long = "override", value_name = "KEY=VALUE")]
        overrides: Vec<String>,
        /// Save maps every N epochs (0 keeps only the final epoch).
        #[arg(long)]
        snapshot_interval: Option<u64>,
        /// Overwrite a completed run in the output directory.
        #[arg(long)]
        force: bool,
    },
    /// Run every scenario of a manifest over its seeds and strategies.
    Batch {
        manifest: PathBuf,
        #[arg(short, long)]
        output: PathBuf,
        /// Worker threads; defaults to the available cores.
        #[arg(short = 'j', long)]
        workers: Option<usize>,
        #[arg(long)]
        force: bool,
    },
    /// Draw one composite frame per saved snapshot of a run directory.
    Render {
        run_dir: PathBuf,
        /// Pixels per grid cell.
        #[arg(long, default_value_t = 8)]
        scale: usize,
    },
}

#[derive(Debug)]
enum CliError {
    Config(String),
    Io(String),
}

impl CliError {
    fn code(&self) -> u8 {
        match self {
            CliError::Config(_) => 2,
            CliError::Io(_) => 3,
        }
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Config(m) | CliError::Io(m) => f.write_str(m),
        }
    }
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        match e {
            Error::Io(_) => CliError::Io(e.to_string()),
            _ => CliError::Config(e.to_string()),
        }
    }
}

type CliResult<T> = std::result::Result<T, CliError>;

fn io_err(path: &Path, e: impl std::fmt::Display) -> CliError {
    CliError::Io(format!("{}: {e}", path.display()))
}

fn read_text(path: &Path) -> CliResult<String> {
    fs::read_to_string(path).map_err(|e| io_err(path, e))
}

fn create(path: &Path) -> CliResult<BufWriter<File>> {
    File::create(path).map(BufWriter::new).map_err(|e| io_err(path, e))
}

fn write_file(path: &Path, bytes: &[u8]) -> CliResult<()> {
    fs::write(path, bytes).map_err(|e| io_err(path, e))
}

fn make_dir(path: &Path) -> CliResult<()> {
    fs::create_dir_all(path).map_err(|e| io_err(path, e))
}

/// Scenario text from a file, or from a preset when no such file exists.
fn scenario_text(source: &str, base: &Path) -> CliResult<String> {
    let path = base.join(source);
    if path.is_file() {
        return read_text(&path);
    }
    match presets::by_name(source) {
        Some(cfg) => Ok(cfg.to_toml_string()?),
        None => Err(CliError::Io(format!(
            "{}: no such scenario file or preset (presets: {})",
            path.display(),
            presets::NAMES.join(", ")
        ))),
    }
}

#[derive(Serialize)]
struct Summary<'a> {
    name: &'a str,
    seed: u64,
    strategy: StrategyKind,
    lipschitz: f64,
    metrics: &'a TrialMetrics,
}

const SUMMARY: &str = "summary.json";
const CONFIG: &str = "effective_config.toml";

/// Write every artifact of a finished trial into `dir`.
fn write_trial(dir: &Path, report: &TrialReport) -> CliResult<()> {
    make_dir(dir)?;
    let spec = &report.config.workspace;
    write_file(&dir.join(CONFIG), report.config.to_toml_string()?.as_bytes())?;

    let snapshot_epochs: Vec<usize> = report.snapshots.iter().map(|s| s.epoch).collect();
    let mut w = create(&dir.join("events.csv"))?;
    report::write_events(&mut w, &report.epochs, &snapshot_epochs)?;
    finish(w, dir)?;
    let mut w = create(&dir.join("trajectory.csv"))?;
    report::write_trajectory(&mut w, &report.trajectory)?;
    finish(w, dir)?;
    let mut w = create(&dir.join("candidates.csv"))?;
    report::write_candidates(&mut w, &report.candidates)?;
    finish(w, dir)?;

    let mut w = create(&dir.join("field.pgm"))?;
    bitmap::write_field(&mut w, &report.field)?;
    finish(w, dir)?;
    let mut w = create(&dir.join("truth_safe.pgm"))?;
    bitmap::write_mask(&mut w, spec, &report.truth_safe)?;
    finish(w, dir)?;

    let snaps = dir.join("snapshots");
    make_dir(&snaps)?;
    for s in &report.snapshots {
        let e = s.epoch;
        for (kind, grid) in [("mean", &s.mean), ("std", &s.std), ("lower", &s.lower), ("upper", &s.upper)] {
            let mut w = create(&snaps.join(format!("{kind}_{e:05}.pgm")))?;
            bitmap::write_scalar(&mut w, spec, grid)?;
            finish(w, dir)?;
        }
        let mut w = create(&snaps.join(format!("safe_{e:05}.pgm")))?;
        bitmap::write_mask(&mut w, spec, &s.safe)?;
        finish(w, dir)?;
        if let Some(blocked) = &s.blocked {
            let mut w = create(&snaps.join(format!("blocked_{e:05}.pgm")))?;
            bitmap::write_mask(&mut w, spec, blocked)?;
            finish(w, dir)?;
        }
    }

    // Written last: its presence marks the run as complete.
    let summary = Summary {
        name: &report.config.name,
        seed: report.config.seed,
        strategy: report.config.strategy,
        lipschitz: report.metrics.lipschitz,
        metrics: &report.metrics,
    };
    let json = serde_json::to_string_pretty(&summary).map_err(|e| CliError::Io(e.to_string()))?;
    write_file(&dir.join(SUMMARY), format!("{json}\n").as_bytes())
}

fn finish(mut w: BufWriter<File>, dir: &Path) -> CliResult<()> {
    w.flush().map_err(|e| io_err(dir, e))
}

fn guard_output(dir: &Path, marker: &str, force: bool) -> CliResult<()> {
    if dir.join(marker).exists() && !force {
        return Err(CliError::Io(format!(
            "{} already holds a completed run; pass --force to overwrite",
            dir.display()
        )));
    }
    make_dir(dir)
}

fn cmd_run(
    scenario: &str,
    output: &Path,
    overrides: &[String],
    snapshot_interval: Option<u64>,
    force: bool,
) -> CliResult<()> {
    let text = scenario_text(scenario, Path::new("."))?;
    let mut overrides = overrides.to_vec();
    if let Some(n) = snapshot_interval {
        overrides.push(format!("snapshot_interval={n}"));
    }
    let config = ScenarioConfig::from_toml_with_overrides(&text, &overrides)?;
    guard_output(output, SUMMARY, force)?;
    info!("running {} seed {} with {}", config.name, config.seed, config.strategy);
    let report = run_trial(&config)?;
    write_trial(output, &report)?;
    let m = &report.metrics;
    println!(
        "{} {} seed {}: {} after {:.1} s, path {:.2} m, coverage {:.3}, violations {}",
        report.config.name,
        report.config.strategy,
        report.config.seed,
        m.outcome.name(),
        m.completion_time,
        m.path_length,
        m.final_coverage,
        m.safety_violations
    );
    Ok(())
}

/// A batch manifest. Scenario entries are file paths relative to the
/// manifest, or preset names.
#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct BatchManifest {
    scenarios: Vec<String>,
    seeds: Vec<u64>,
    strategies: Vec<StrategyKind>,
    #[serde(default)]
    overrides: Vec<String>,
}

impl BatchManifest {
    fn validate(&self) -> CliResult<()> {
        let bad = |field: &str, reason: &str| Err(CliError::Config(format!("invalid manifest: `{field}` {reason}")));
        if self.scenarios.is_empty() {
            return bad("scenarios", "must not be empty");
        }
        if self.seeds.is_empty() {
            return bad("seeds", "must not be empty");
        }
        if self.strategies.is_empty() {
            return bad("strategies", "must not be empty");
        }
        Ok(())
    }
}

fn cmd_batch(manifest: &Path, output: &Path, workers: Option<usize>, force: bool) -> CliResult<()> {
    let text = read_text(manifest)?;
    let m: BatchManifest =
        toml::from_str(&text).map_err(|e| CliError::Config(format!("invalid manifest {}: {e}", manifest.display())))?;
    m.validate()?;
    let base = manifest.parent().unwrap_or(Path::new("."));
    let mut configs = Vec::new();
    let mut names: Vec<String> = Vec::new();
    for source in &m.scenarios {
        let cfg = ScenarioConfig::from_toml_with_overrides(&scenario_text(source, base)?, &m.overrides)?;
        if names.contains(&cfg.name) {
            return Err(CliError::Config(format!(
                "invalid manifest: `scenarios` has two entries named `{}`",
                cfg.name
            )));
        }
        names.push(cfg.name.clone());
        configs.extend(expand_trials(&cfg, &m.seeds, &m.strategies));
    }
    // NGH without a goal is rejected here rather than as a trial failure.
    for c in &configs {
        c.validate()?;
    }
    guard_output(output, "aggregate.csv", force)?;

    info!("running {} trials", configs.len());
    let batch = run_batch(&configs, workers);
    let trials = output.join("trials");
    make_dir(&trials)?;
    let mut failures = String::from("trial,error\n");
    for (cfg, result) in configs.iter().zip(&batch.reports) {
        let id = format!("{}_{}_seed{}", cfg.name, cfg.strategy, cfg.seed);
        match result {
            Ok(report) => write_trial(&trials.join(&id), report)?,
            Err(e) => {
                warn!("trial {id} failed: {e}");
                failures.push_str(&format!("{id},\"{}\"\n", e.to_string().replace('"', "'")));
            }
        }
    }
    write_file(&output.join("failures.csv"), failures.as_bytes())?;
    let table = report::aggregate_table(&batch.aggregate);
    write_file(&output.join("table.txt"), table.as_bytes())?;
    write_file(&output.join("aggregate.csv"), report::aggregate_csv(&batch.aggregate)?.as_bytes())?;
    print!("{table}");
    let failed = batch.reports.iter().filter(|r| r.is_err()).count();
    if failed > 0 {
        println!("{failed} of {} trials failed; see failures.csv", configs.len());
    }
    Ok(())
}

fn cmd_render(run_dir: &Path, scale: usize) -> CliResult<()> {
    let open = |name: &str| {
        let p = run_dir.join(name);
        File::open(&p).map_err(|e| io_err(&p, e))
    };
    let config = ScenarioConfig::from_toml_str(&read_text(&run_dir.join(CONFIG))?)?;
    let field = bitmap::read_field(&mut open("field.pgm")?)?;
    let events = report::read_event_index(open("events.csv")?)?;
    let trajectory = report::read_trajectory(open("trajectory.csv")?)?;

    let out = run_dir.join("render");
    make_dir(&out)?;
    let mut frames = 0;
    for &(epoch, t, _) in events.iter().filter(|e| e.2) {
        let snap = run_dir.join("snapshots").join(format!("safe_{epoch:05}.pgm"));
        let safe = match File::open(&snap).map_err(Error::from).and_then(|mut f| bitmap::read_mask(&mut f)) {
            Ok((_, mask)) if mask.rows() == field.grid.rows() && mask.cols() == field.grid.cols() => mask,
            Ok(_) => {
                warn!("epoch {epoch}: {} does not match the field size, skipped", snap.display());
                continue;
            }
            Err(e) => {
                warn!("epoch {epoch}: cannot load {}: {e}, skipped", snap.display());
                continue;
            }
        };
        let path: Vec<Point> = trajectory
            .iter()
            .take_while(|(time, _)| *time <= t + 1e-9)
            .map(|&(_, p)| p)
            .collect();
        let overlay = Overlay {
            safe: Some(&safe),
            trajectory: &path,
            start: Some(config.start),
            goal: config.goal,
        };
        let img = compose(&field.spec, &field.grid, &overlay, scale);
        let target = out.join(format!("frame_{epoch:05}.ppm"));
        let mut w = create(&target)?;
        img.write_ppm(&mut w)?;
        finish(w, &out)?;
        frames += 1;
    }
    println!("wrote {frames} frame(s) to {}", out.display());
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Run {
            scenario,
            output,
            overrides,
            snapshot_interval,
            force,
        } => cmd_run(&scenario, &output, &overrides, snapshot_interval, force),
        Command::Batch {
            manifest,
            output,
            workers,
            force,
        } => cmd_batch(&manifest, &output, workers, force),
        Command::Render { run_dir, scale } => cmd_render(&run_dir, scale),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.code())
        }
    }
}
