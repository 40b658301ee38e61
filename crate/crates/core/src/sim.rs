//! The outer planning loop, trial metrics and batch execution.
//!
//! Each epoch refits the GP, tightens the confidence intervals, expands the
//! safe set, picks a subgoal for the configured strategy and drives toward
//! it while measuring slip along the way. An epoch ends when the subgoal is
//! reached, the leg exceeds `epoch_max_travel`, or planning fails.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::config::{derive_seed, ScenarioConfig};
use crate::error::{Error, Result};
use crate::frontier::{
    extract_frontiers, reachable_frontiers, score_candidates, FrontierCandidate, ScoringParams, Selection,
    SelectionStrategy, StrategyKind,
};
use crate::gp::GpModel;
use crate::grid::{Mask, Point, ScalarGrid, WorkspaceSpec};
use crate::nav::{
    build_obstacle_map, navigate_to, plan_path, LegLimits, LegObserver, LegOutcome, ObstacleMap, PlannedPath,
    RobotState, StepReport,
};
use crate::safecert::{bootstrap_locations, coverage_ratio, init_safe_set, ConfidenceState, SafeSet};
use crate::terrain::{generate_field, interpolate, sample_truth, true_safe_mask, NoisySample, SlipField};

/// Seed stream of the terrain generator.
pub const TERRAIN_STREAM: u64 = 1;
/// Seed stream of the measurement noise.
pub const NOISE_STREAM: u64 = 2;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Outcome {
    GoalReached,
    Immobilized,
    NoFrontier,
    TimeBudgetExhausted,
}

impl Outcome {
    pub fn name(&self) -> &'static str {
        match self {
            Outcome::GoalReached => "GoalReached",
            Outcome::Immobilized => "Immobilized",
            Outcome::NoFrontier => "NoFrontier",
            Outcome::TimeBudgetExhausted => "TimeBudgetExhausted",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialMetrics {
    pub outcome: Outcome,
    pub success: bool,
    pub completion_time: f64,
    pub path_length: f64,
    /// Entries into cells whose true slip exceeds `h`.
    pub safety_violations: usize,
    /// Control steps spent outside the certified set (safe strategies only).
    pub certified_breaches: usize,
    /// `(time, coverage ratio)` after every safe-set update.
    pub coverage: Vec<(f64, f64)>,
    pub final_coverage: f64,
    /// Certified cells whose true slip exceeds `h`, at the end of the trial.
    pub unsound_cells: usize,
    pub final_safe_cells: usize,
    pub epochs: usize,
    pub samples: usize,
    pub measurement_firings: usize,
    pub empty_intersections: usize,
    /// Epochs whose safe set did not contain the previous one.
    pub safe_set_shrinks: usize,
    /// Cells whose interval widened, excluding collapsed cells.
    pub interval_widenings: usize,
    /// Epochs with decreasing coverage.
    pub coverage_decreases: usize,
    /// Resolved Lipschitz constant.
    pub lipschitz: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpochRecord {
    pub epoch: usize,
    pub time: f64,
    pub robot: Point,
    pub heading: f64,
    pub subgoal: Option<Point>,
    pub safe_cells: usize,
    pub reachable_frontiers: usize,
    pub chosen: Option<FrontierCandidate>,
    pub collapsed: usize,
    pub samples: usize,
    pub event: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrajectoryRow {
    pub time: f64,
    pub position: Point,
    pub slip: f64,
    pub in_safe_set: bool,
    pub event: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CandidateRow {
    pub epoch: usize,
    pub candidate: FrontierCandidate,
    pub chosen: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Snapshot {
    pub epoch: usize,
    pub mean: ScalarGrid,
    pub std: ScalarGrid,
    pub lower: ScalarGrid,
    pub upper: ScalarGrid,
    pub safe: Mask,
    pub blocked: Option<Mask>,
}

#[derive(Debug, Clone)]
pub struct TrialReport {
    /// Configuration with every default and derived constant resolved.
    pub config: ScenarioConfig,
    pub metrics: TrialMetrics,
    pub epochs: Vec<EpochRecord>,
    pub trajectory: Vec<TrajectoryRow>,
    pub candidates: Vec<CandidateRow>,
    pub snapshots: Vec<Snapshot>,
    pub samples: Vec<NoisySample>,
    pub field: SlipField,
    pub truth_safe: Mask,
}

/// Generate the terrain a configuration runs on.
pub fn scenario_field(config: &ScenarioConfig) -> Result<SlipField> {
    generate_field(
        &config.workspace,
        config.environment.kind,
        &config.environment.params,
        derive_seed(config.seed, TERRAIN_STREAM),
    )
}

/// Lipschitz constant a configuration resolves to on a given field.
pub fn resolve_lipschitz(config: &ScenarioConfig, field: &SlipField) -> f64 {
    config
        .lipschitz
        .unwrap_or_else(|| config.lipschitz_factor * field.lipschitz_bound.max(1e-3))
}

struct LegLog<'a> {
    spec: &'a WorkspaceSpec,
    field: &'a SlipField,
    safe: &'a Mask,
    h: f64,
    check_certified: bool,
    noise: f64,
    rng: &'a mut ChaCha8Rng,
    samples: &'a mut Vec<NoisySample>,
    trajectory: &'a mut Vec<TrajectoryRow>,
    last_cell: Option<usize>,
    violations: usize,
    breaches: usize,
    firings: usize,
}

impl LegObserver for LegLog<'_> {
    fn on_step(&mut self, state: &RobotState, report: &StepReport) {
        let cell = self.spec.index_of(state.position);
        let in_safe = cell.is_some_and(|c| self.safe[c]);
        let mut event = String::new();
        if cell != self.last_cell {
            if let Some(c) = cell {
                if self.field.grid[c] > self.h {
                    self.violations += 1;
                    event = "unsafe_entry".into();
                }
            }
            self.last_cell = cell;
        }
        if self.check_certified && !in_safe {
            self.breaches += 1;
            event = "certified_breach".into();
        }
        if report.stuck && event.is_empty() {
            event = "stuck".into();
        }
        self.trajectory.push(TrajectoryRow {
            time: state.time,
            position: state.position,
            slip: interpolate(self.field, state.position).unwrap_or(f64::NAN),
            in_safe_set: in_safe,
            event,
        });
    }

    fn on_measure(&mut self, state: &RobotState) -> Result<()> {
        let s = sample_truth(self.field, state.position, self.noise, self.rng)?;
        self.samples.push(s);
        self.firings += 1;
        if let Some(row) = self.trajectory.last_mut() {
            if row.event.is_empty() {
                row.event = "measure".into();
            }
        }
        Ok(())
    }
}

/// Obstacle maps from the configured margin down to zero in steps of one
/// cell, keeping only those in which the robot's own cell is free.
fn margin_ladder(safe: &Mask, margin: f64, resolution: f64, robot_cell: usize) -> Vec<ObstacleMap> {
    let mut out = Vec::new();
    let mut m = margin;
    loop {
        if let Ok(o) = build_obstacle_map(safe, m, resolution) {
            if !o.blocked[robot_cell] {
                out.push(o);
            }
        }
        if m <= 0.0 {
            return out;
        }
        m = (m - resolution).max(0.0);
    }
}

/// Plan on the widest margin that yields an acceptable path. A path that is
/// plannable but not acceptable is kept as a fallback when `keep_fallback`.
fn plan_on_ladder(
    ladder: &[ObstacleMap],
    spec: &WorkspaceSpec,
    from: Point,
    to: Point,
    accept: impl Fn(&PlannedPath) -> bool,
    keep_fallback: bool,
) -> Result<PlannedPath> {
    let mut fallback = None;
    for obstacles in ladder {
        match plan_path(obstacles, spec, from, to) {
            Ok(p) if accept(&p) => return Ok(p),
            Ok(p) => {
                if keep_fallback && fallback.is_none() {
                    fallback = Some(p);
                }
            }
            Err(Error::NoSafePath) => {}
            Err(e) => return Err(e),
        }
    }
    fallback.ok_or(Error::NoSafePath)
}

enum Plan {
    Leg { path: Vec<Point>, subgoal: Point, tolerance: f64 },
    NoFrontier,
}

/// Run one trial to completion.
pub fn run_trial(config: &ScenarioConfig) -> Result<TrialReport> {
    config.validate()?;
    let spec = config.workspace;
    let field = scenario_field(config)?;
    let start_slip = interpolate(&field, config.start)?;
    if start_slip > config.h {
        return Err(Error::config(
            "start",
            format!("true slip {start_slip:.3} at the start exceeds h = {}", config.h),
        ));
    }
    let lipschitz = resolve_lipschitz(config, &field);
    let mut effective = config.clone();
    effective.lipschitz = Some(lipschitz);

    let truth_safe = true_safe_mask(&field, config.h);
    let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(config.seed, NOISE_STREAM));
    let mut safe = init_safe_set(&spec, config.start, config.r0, config.h, lipschitz)?;
    let mut conf = ConfidenceState::new(spec.rows(), spec.cols(), config.beta)?;
    let mut samples: Vec<NoisySample> = Vec::new();
    for p in bootstrap_locations(&spec, config.start, config.r0) {
        samples.push(sample_truth(&field, p, config.measurement_noise, &mut rng)?);
    }
    let heading = config
        .goal
        .map_or(0.0, |g| (g.y - config.start.y).atan2(g.x - config.start.x));
    let mut robot = RobotState::new(config.start, heading);
    let mut strategy = SelectionStrategy {
        schedule: config.pgh_schedule.clone(),
        ..SelectionStrategy::new(config.strategy)
    };
    let scoring = ScoringParams {
        k_e: config.k_e,
        k_g: config.k_g,
        h: config.h,
        lipschitz,
    };
    let kernel = config.gp.kernel();
    let safe_strategy = config.strategy.is_safe();

    let mut metrics = TrialMetrics {
        outcome: Outcome::TimeBudgetExhausted,
        success: false,
        completion_time: 0.0,
        path_length: 0.0,
        safety_violations: 0,
        certified_breaches: 0,
        coverage: Vec::new(),
        final_coverage: 0.0,
        unsound_cells: 0,
        final_safe_cells: 0,
        epochs: 0,
        samples: 0,
        measurement_firings: 0,
        empty_intersections: 0,
        safe_set_shrinks: 0,
        interval_widenings: 0,
        coverage_decreases: 0,
        lipschitz,
    };
    let mut epochs = Vec::new();
    let mut trajectory = vec![TrajectoryRow {
        time: 0.0,
        position: config.start,
        slip: start_slip,
        in_safe_set: true,
        event: "start".into(),
    }];
    let mut candidate_rows = Vec::new();
    let mut snapshots = Vec::new();
    let mut last_cell = spec.index_of(config.start);

    let mut cached: Option<(usize, ScalarGrid, ScalarGrid)> = None;
    let mut epoch = 0usize;
    let outcome = loop {
        epoch += 1;
        if cached.as_ref().is_none_or(|(n, _, _)| *n != samples.len()) {
            let gp = GpModel::fit(&samples, kernel, config.gp.prior_mean)?;
            let (mean, std) = gp.predict_grid(&spec);
            cached = Some((samples.len(), mean, std));
        }
        let (_, mean, std) = cached.as_ref().expect("fitted");
        let prev_lower = conf.lower.clone();
        let prev_upper = conf.upper.clone();
        let update = conf.update(mean, std)?;
        let collapsed = update.collapsed.len();
        let mut collapsed_mask = vec![false; spec.len()];
        for &i in &update.collapsed {
            collapsed_mask[i] = true;
        }
        metrics.interval_widenings += (0..spec.len())
            .filter(|&i| !collapsed_mask[i] && (conf.lower[i] < prev_lower[i] || conf.upper[i] > prev_upper[i]))
            .count();
        let next = safe.expand(&conf.upper)?;
        if !safe.mask.is_subset_of(&next.mask) {
            metrics.safe_set_shrinks += 1;
        }
        safe = next;
        let cov = coverage_ratio(&safe.mask, &truth_safe).unwrap_or(f64::NAN);
        if let Some(&(_, prev)) = metrics.coverage.last() {
            if cov < prev {
                metrics.coverage_decreases += 1;
            }
        }
        metrics.coverage.push((robot.time, cov));

        let mut record = EpochRecord {
            epoch,
            time: robot.time,
            robot: robot.position,
            heading: robot.heading,
            subgoal: None,
            safe_cells: safe.len(),
            reachable_frontiers: 0,
            chosen: None,
            collapsed,
            samples: samples.len(),
            event: String::new(),
        };

        let snapshot_due = config.snapshot_interval > 0 && (epoch as u64 - 1) % config.snapshot_interval == 0;
        let take_snapshot = |blocked: Option<Mask>, conf: &ConfidenceState, safe: &SafeSet| Snapshot {
            epoch,
            mean: mean.clone(),
            std: std.clone(),
            lower: conf.lower.clone(),
            upper: conf.upper.clone(),
            safe: safe.mask.clone(),
            blocked,
        };

        if let Some(goal) = config.goal {
            if robot.position.dist(&goal) <= config.arrival_tolerance {
                record.event = "goal_reached".into();
                epochs.push(record);
                snapshots.push(take_snapshot(None, &conf, &safe));
                break Outcome::GoalReached;
            }
        }
        if robot.time >= config.time_budget - 1e-9 {
            record.event = "time_budget".into();
            epochs.push(record);
            snapshots.push(take_snapshot(None, &conf, &safe));
            break Outcome::TimeBudgetExhausted;
        }

        let robot_cell = spec.index_of(robot.position).expect("robot inside workspace");
        let mut blocked_for_snapshot = None;
        let phase_before = strategy.phase;
        let plan = if !safe_strategy {
            let goal = config.goal.expect("validated");
            Plan::Leg { path: vec![goal], subgoal: goal, tolerance: config.arrival_tolerance }
        } else {
            plan_safe_leg(
                config,
                &spec,
                &safe,
                &conf,
                robot_cell,
                &robot,
                &mut strategy,
                &scoring,
                &mut record,
                &mut candidate_rows,
                &mut blocked_for_snapshot,
            )?
        };
        if snapshot_due {
            snapshots.push(take_snapshot(blocked_for_snapshot.clone(), &conf, &safe));
        }
        let (path, subgoal, tolerance) = match plan {
            Plan::NoFrontier => {
                record.event = "no_frontier".into();
                epochs.push(record);
                if !snapshot_due {
                    snapshots.push(take_snapshot(blocked_for_snapshot, &conf, &safe));
                }
                break Outcome::NoFrontier;
            }
            Plan::Leg { path, subgoal, tolerance } => (path, subgoal, tolerance),
        };
        record.subgoal = Some(subgoal);

        let limits = LegLimits {
            arrival_tolerance: tolerance,
            max_travel: config.epoch_max_travel,
            deadline: config.time_budget,
            sample_spacing: config.sample_spacing,
        };
        let time_before = robot.time;
        let mut log = LegLog {
            spec: &spec,
            field: &field,
            safe: &safe.mask,
            h: config.h,
            check_certified: safe_strategy,
            noise: config.measurement_noise,
            rng: &mut rng,
            samples: &mut samples,
            trajectory: &mut trajectory,
            last_cell,
            violations: 0,
            breaches: 0,
            firings: 0,
        };
        let leg = navigate_to(&mut robot, &path, &field, &config.motion, &limits, &mut log)?;
        last_cell = log.last_cell;
        if leg == LegOutcome::TravelLimit {
            // A leg cut short keeps its objective; the rotation advances per subgoal.
            strategy.phase = phase_before;
        }
        metrics.safety_violations += log.violations;
        metrics.certified_breaches += log.breaches;
        metrics.measurement_firings += log.firings;
        if robot.time == time_before {
            // Idle epochs are charged, but never past the budget.
            robot.time += config.planning_period.min(config.time_budget - robot.time).max(0.0);
            if record.event.is_empty() {
                record.event = "idle".into();
            }
        }
        if record.event.is_empty() {
            record.event = match leg {
                LegOutcome::Arrived => "arrived",
                LegOutcome::TravelLimit => "travel_limit",
                LegOutcome::Deadline => "deadline",
                LegOutcome::Immobilized => "immobilized",
            }
            .into();
        }
        epochs.push(record);
        if leg == LegOutcome::Immobilized {
            if snapshots.last().is_some_and(|s: &Snapshot| s.epoch == epoch) {
                break Outcome::Immobilized;
            }
            let (_, mean, std) = cached.as_ref().expect("fitted");
            snapshots.push(Snapshot {
                epoch,
                mean: mean.clone(),
                std: std.clone(),
                lower: conf.lower.clone(),
                upper: conf.upper.clone(),
                safe: safe.mask.clone(),
                blocked: None,
            });
            break Outcome::Immobilized;
        }
    };

    if let Some(last) = trajectory.last_mut() {
        last.event = outcome.name().to_string();
    }
    metrics.outcome = outcome;
    metrics.success = outcome == Outcome::GoalReached && metrics.safety_violations == 0;
    metrics.completion_time = robot.time;
    metrics.path_length = robot.distance_traveled;
    metrics.epochs = epoch;
    metrics.samples = samples.len();
    metrics.empty_intersections = conf.empty_intersections;
    metrics.final_coverage = metrics.coverage.last().map_or(0.0, |c| c.1);
    metrics.final_safe_cells = safe.len();
    metrics.unsound_cells = safe
        .mask
        .set_indices()
        .filter(|&i| field.grid[i] > config.h)
        .count();

    Ok(TrialReport {
        config: effective,
        metrics,
        epochs,
        trajectory,
        candidates: candidate_rows,
        snapshots,
        samples,
        field,
        truth_safe,
    })
}

#[allow(clippy::too_many_arguments)]
fn plan_safe_leg(
    config: &ScenarioConfig,
    spec: &WorkspaceSpec,
    safe: &SafeSet,
    conf: &ConfidenceState,
    robot_cell: usize,
    robot: &RobotState,
    strategy: &mut SelectionStrategy,
    scoring: &ScoringParams,
    record: &mut EpochRecord,
    candidate_rows: &mut Vec<CandidateRow>,
    blocked_out: &mut Option<Mask>,
) -> Result<Plan> {
    if !safe.contains(robot_cell) {
        record.event = "certified_breach".into();
        return Ok(Plan::NoFrontier);
    }
    let ladder = margin_ladder(&safe.mask, config.margin, spec.resolution, robot_cell);
    let Some(primary) = ladder.first() else {
        return Ok(Plan::NoFrontier);
    };
    *blocked_out = Some(primary.blocked.clone());

    // Head for the goal as soon as it is certified and reachable.
    if let Some(goal) = config.goal {
        if let Some(goal_cell) = spec.index_of(goal) {
            if safe.contains(goal_cell) {
                let close_enough =
                    |p: &PlannedPath| spec.center_of(p.target).dist(&goal) <= config.arrival_tolerance;
                if let Ok(path) = plan_on_ladder(&ladder, spec, robot.position, goal, close_enough, false) {
                    return Ok(Plan::Leg {
                        path: path.waypoints,
                        subgoal: goal,
                        tolerance: 0.0,
                    });
                }
            }
        }
    }

    let frontiers = extract_frontiers(&safe.mask);
    let (reachable, component) = reachable_frontiers(&frontiers.cells, &safe.mask, robot_cell)?;
    record.reachable_frontiers = reachable.len();
    let candidates = score_candidates(
        spec,
        &reachable,
        component,
        &conf.lower,
        &safe.mask,
        robot.position,
        config.goal,
        scoring,
    );
    let mut pool: Vec<usize> = (0..candidates.len()).collect();
    let phase = strategy.phase;
    let chosen = loop {
        if pool.is_empty() {
            break None;
        }
        strategy.phase = phase;
        let subset: Vec<FrontierCandidate> = pool.iter().map(|&i| candidates[i]).collect();
        let pick = match strategy.select(&subset, config.goal) {
            Ok(Selection::Frontier(k)) => k,
            Ok(Selection::Goal(_)) => unreachable!("safe strategies select frontiers"),
            Err(Error::NoFrontier) => break None,
            Err(e) => return Err(e),
        };
        let idx = pool[pick];
        // A subgoal whose snapped target is the robot's own cell would
        // leave the robot in place; approach closer on a narrower margin.
        let moves = |p: &PlannedPath| p.target != robot_cell;
        match plan_on_ladder(&ladder, spec, robot.position, candidates[idx].location, moves, true) {
            Ok(path) => break Some((idx, path)),
            Err(Error::NoSafePath) => {
                pool.remove(pick);
            }
            Err(e) => return Err(e),
        }
    };
    let epoch = record.epoch;
    let chosen_idx = chosen.as_ref().map(|(i, _)| *i);
    candidate_rows.extend(candidates.iter().enumerate().map(|(i, c)| CandidateRow {
        epoch,
        candidate: *c,
        chosen: Some(i) == chosen_idx,
    }));
    match chosen {
        None => {
            strategy.phase = phase;
            Ok(Plan::NoFrontier)
        }
        Some((idx, path)) => {
            record.chosen = Some(candidates[idx]);
            Ok(Plan::Leg {
                path: path.waypoints,
                subgoal: candidates[idx].location,
                tolerance: 0.0,
            })
        }
    }
}

// ---------------------------------------------------------------------------
// Batches
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AggregateRow {
    pub environment: String,
    pub strategy: StrategyKind,
    pub trials: usize,
    pub success_mean: f64,
    pub success_std: f64,
    pub time_mean: f64,
    pub time_std: f64,
    pub length_mean: f64,
    pub length_std: f64,
    pub coverage_mean: f64,
    pub coverage_std: f64,
    pub safety_violations: usize,
}

#[derive(Debug, Clone)]
pub struct BatchResult {
    pub reports: Vec<Result<TrialReport>>,
    pub aggregate: Vec<AggregateRow>,
}

fn mean_std(xs: &[f64]) -> (f64, f64) {
    if xs.is_empty() {
        return (f64::NAN, f64::NAN);
    }
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / n;
    (mean, var.sqrt())
}

/// Mean and population standard deviation per `(environment, strategy)`,
/// in order of first appearance. Failed trials are skipped.
pub fn aggregate(reports: &[Result<TrialReport>]) -> Vec<AggregateRow> {
    let mut keys: Vec<(String, StrategyKind)> = Vec::new();
    for r in reports.iter().flatten() {
        let key = (r.config.name.clone(), r.config.strategy);
        if !keys.contains(&key) {
            keys.push(key);
        }
    }
    keys.into_iter()
        .map(|(env, strategy)| {
            let group: Vec<&TrialMetrics> = reports
                .iter()
                .flatten()
                .filter(|r| r.config.name == env && r.config.strategy == strategy)
                .map(|r| &r.metrics)
                .collect();
            let col = |f: &dyn Fn(&TrialMetrics) -> f64| mean_std(&group.iter().map(|m| f(m)).collect::<Vec<_>>());
            let (success_mean, success_std) = col(&|m| if m.success { 1.0 } else { 0.0 });
            let (time_mean, time_std) = col(&|m| m.completion_time);
            let (length_mean, length_std) = col(&|m| m.path_length);
            let (coverage_mean, coverage_std) = col(&|m| m.final_coverage);
            AggregateRow {
                environment: env,
                strategy,
                trials: group.len(),
                success_mean,
                success_std,
                time_mean,
                time_std,
                length_mean,
                length_std,
                coverage_mean,
                coverage_std,
                safety_violations: group.iter().map(|m| m.safety_violations).sum(),
            }
        })
        .collect()
}

/// Run independent trials, optionally on a dedicated pool of `workers`
/// threads. Results keep the input order.
pub fn run_batch(configs: &[ScenarioConfig], workers: Option<usize>) -> BatchResult {
    let run = || configs.par_iter().map(run_trial).collect::<Vec<_>>();
    let reports = match workers {
        Some(n) => match rayon::ThreadPoolBuilder::new().num_threads(n.max(1)).build() {
            Ok(pool) => pool.install(run),
            Err(_) => configs.iter().map(run_trial).collect(),
        },
        None => run(),
    };
    let aggregate = aggregate(&reports);
    BatchResult { reports, aggregate }
}

/// `base` expanded over `seeds x strategies`, strategies varying fastest.
pub fn expand_trials(base: &ScenarioConfig, seeds: &[u64], strategies: &[StrategyKind]) -> Vec<ScenarioConfig> {
    let mut out = Vec::with_capacity(seeds.len() * strategies.len());
    for &seed in seeds {
        for &strategy in strategies {
            out.push(ScenarioConfig {
                seed,
                strategy,
                ..base.clone()
            });
        }
    }
    out
}

/// `count` trial seeds derived from a base seed.
pub fn derived_seeds(base_seed: u64, count: usize) -> Vec<u64> {
    (0..count as u64).map(|i| derive_seed(base_seed, i)).collect()
}
