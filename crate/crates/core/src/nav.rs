//! Margin-buffered obstacle maps, grid path planning and a slip-affected
//! kinematic robot.
//!
//! Paths are planned on the eroded safe set with A* and followed exactly:
//! the robot turns in place until aligned with the next waypoint, then
//! translates along the segment. Diagonal moves are only allowed when both
//! side cells are free, so every point of an executed path lies in a free
//! cell.

use std::cmp::Ordering;
use std::collections::{BinaryHeap, VecDeque};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{disk_offsets, Mask, Point, WorkspaceSpec, NEIGHBORS8};
use crate::terrain::{interpolate, SlipField};

#[derive(Debug, Clone, PartialEq)]
pub struct ObstacleMap {
    pub blocked: Mask,
    pub margin_m: f64,
    pub margin_cells: usize,
}

impl ObstacleMap {
    pub fn is_free(&self, index: usize) -> bool {
        !self.blocked[index]
    }
}

/// Erode the safe set by a disk of `ceil(margin / resolution)` cells and
/// block the complement. Cells beyond the workspace edge do not erode.
pub fn build_obstacle_map(safe: &Mask, margin_m: f64, resolution: f64) -> Result<ObstacleMap> {
    if !(margin_m.is_finite() && margin_m >= 0.0) {
        return Err(Error::config("margin", format!("must be non-negative, got {margin_m}")));
    }
    let margin_cells = (margin_m / resolution - 1e-9).ceil().max(0.0) as usize;
    let offsets = disk_offsets(margin_cells as f64);
    let rows = safe.rows() as isize;
    let cols = safe.cols() as isize;
    let blocked = Mask::from_fn(safe.rows(), safe.cols(), |cell| {
        if !*safe.at(cell) {
            return true;
        }
        let (r0, c0) = (cell.row as isize, cell.col as isize);
        offsets.iter().any(|&(dr, dc)| {
            let (r, c) = (r0 + dr, c0 + dc);
            r >= 0 && c >= 0 && r < rows && c < cols && !safe[(r * cols + c) as usize]
        })
    });
    if blocked.iter().all(|&b| b) {
        return Err(Error::RobotBoxedIn);
    }
    Ok(ObstacleMap {
        blocked,
        margin_m,
        margin_cells,
    })
}

/// Nearest free cell to `target` within `max_dist` meters, lowest index on ties.
pub fn snap_to_free(obstacles: &ObstacleMap, spec: &WorkspaceSpec, target: Point, max_dist: f64) -> Option<usize> {
    let limit = max_dist * (1.0 + 1e-9) + 1e-12;
    let mut best: Option<(f64, usize)> = None;
    for i in 0..obstacles.blocked.len() {
        if obstacles.blocked[i] {
            continue;
        }
        let d = spec.center_of(i).dist(&target);
        if d <= limit && best.is_none_or(|(bd, _)| d < bd) {
            best = Some((d, i));
        }
    }
    best.map(|(_, i)| i)
}

#[derive(Debug, Clone, Copy, PartialEq)]
struct QueueEntry {
    f: f64,
    index: usize,
}

impl Eq for QueueEntry {}

impl Ord for QueueEntry {
    fn cmp(&self, other: &Self) -> Ordering {
        // BinaryHeap is a max-heap: smallest f first, then smallest index.
        other.f.total_cmp(&self.f).then(other.index.cmp(&self.index))
    }
}

impl PartialOrd for QueueEntry {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// Neighbors reachable in one move: 8-connected without cutting blocked corners.
pub(crate) fn moves(blocked: &Mask, index: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
    let cell = blocked.cell_at(index);
    let cols = blocked.cols() as isize;
    let (r0, c0) = (cell.row as isize, cell.col as isize);
    let free = move |r: isize, c: isize| blocked.get(r, c) == Some(&false);
    NEIGHBORS8.iter().filter_map(move |&(dr, dc)| {
        let (r, c) = (r0 + dr, c0 + dc);
        if !free(r, c) {
            return None;
        }
        if dr != 0 && dc != 0 {
            if !free(r0 + dr, c0) || !free(r0, c0 + dc) {
                return None;
            }
            Some(((r * cols + c) as usize, std::f64::consts::SQRT_2))
        } else {
            Some(((r * cols + c) as usize, 1.0))
        }
    })
}

/// Shortest free path between two cells, as cell indices including both ends.
/// Step costs are 1 and sqrt(2) cells; the heuristic is Euclidean distance.
pub fn astar(blocked: &Mask, from: usize, to: usize) -> Result<(Vec<usize>, f64)> {
    if blocked[from] || blocked[to] {
        return Err(Error::NoSafePath);
    }
    let cols = blocked.cols();
    let h = |i: usize| {
        let (r, c) = ((i / cols) as f64, (i % cols) as f64);
        let (tr, tc) = ((to / cols) as f64, (to % cols) as f64);
        (r - tr).hypot(c - tc)
    };
    let n = blocked.len();
    let mut g = vec![f64::INFINITY; n];
    let mut parent = vec![usize::MAX; n];
    let mut closed = vec![false; n];
    let mut open = BinaryHeap::new();
    g[from] = 0.0;
    open.push(QueueEntry { f: h(from), index: from });
    while let Some(QueueEntry { index, .. }) = open.pop() {
        if closed[index] {
            continue;
        }
        if index == to {
            let mut path = vec![to];
            let mut cur = to;
            while cur != from {
                cur = parent[cur];
                path.push(cur);
            }
            path.reverse();
            return Ok((path, g[to]));
        }
        closed[index] = true;
        for (next, step) in moves(blocked, index) {
            if closed[next] {
                continue;
            }
            let cand = g[index] + step;
            if cand < g[next] {
                g[next] = cand;
                parent[next] = index;
                open.push(QueueEntry { f: cand + h(next), index: next });
            }
        }
    }
    Err(Error::NoSafePath)
}

#[derive(Debug, Clone, PartialEq)]
pub struct PlannedPath {
    /// Cell-center waypoints, starting with the cell the robot is in.
    pub waypoints: Vec<Point>,
    pub cells: Vec<usize>,
    /// Target cell after snapping.
    pub target: usize,
    /// Path length in meters between cell centers.
    pub length_m: f64,
}

/// Plan from `from` to `to`, snapping `to` onto the nearest free cell within
/// twice the margin.
pub fn plan_path(obstacles: &ObstacleMap, spec: &WorkspaceSpec, from: Point, to: Point) -> Result<PlannedPath> {
    let start = spec
        .index_of(from)
        .ok_or_else(|| Error::Domain("path start outside workspace".into()))?;
    if obstacles.blocked[start] {
        return Err(Error::NoSafePath);
    }
    let snap = (2.0 * obstacles.margin_cells as f64 * spec.resolution).max(0.0);
    let target = snap_to_free(obstacles, spec, to, snap).ok_or(Error::NoSafePath)?;
    let (cells, cost) = astar(&obstacles.blocked, start, target)?;
    Ok(PlannedPath {
        waypoints: cells.iter().map(|&i| spec.center_of(i)).collect(),
        cells,
        target,
        length_m: cost * spec.resolution,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MotionParams {
    /// Commanded forward speed, m/s.
    pub speed: f64,
    /// Maximum turn rate, rad/s.
    pub turn_rate: f64,
    /// Control period, s.
    pub dt: f64,
    /// Slip at or above which the robot cannot advance.
    pub s_stuck: f64,
    /// Accumulated stuck time after which the trial fails, s.
    pub t_stuck: f64,
}

impl Default for MotionParams {
    fn default() -> Self {
        MotionParams {
            speed: 0.4,
            turn_rate: 1.5,
            dt: 0.1,
            s_stuck: 0.95,
            t_stuck: 20.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RobotState {
    pub position: Point,
    pub heading: f64,
    pub time: f64,
    pub distance_traveled: f64,
    pub immobilized_time: f64,
    pub path_log: Vec<(f64, Point)>,
}

impl RobotState {
    pub fn new(position: Point, heading: f64) -> Self {
        RobotState {
            position,
            heading,
            time: 0.0,
            distance_traveled: 0.0,
            immobilized_time: 0.0,
            path_log: vec![(0.0, position)],
        }
    }

    pub fn is_immobilized(&self, motion: &MotionParams) -> bool {
        self.immobilized_time > motion.t_stuck
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepReport {
    pub displacement: f64,
    pub slip: f64,
    pub stuck: bool,
}

fn wrap_angle(a: f64) -> f64 {
    let two_pi = std::f64::consts::TAU;
    let mut a = a % two_pi;
    if a > std::f64::consts::PI {
        a -= two_pi;
    } else if a < -std::f64::consts::PI {
        a += two_pi;
    }
    a
}

/// Advance the robot by one control period toward the front waypoint.
/// Reached waypoints are popped.
pub fn step_robot(
    state: &mut RobotState,
    waypoints: &mut VecDeque<Point>,
    truth: &SlipField,
    motion: &MotionParams,
) -> Result<StepReport> {
    if !(motion.dt > 0.0) {
        return Err(Error::config("dt", "must be positive"));
    }
    let slip = interpolate(truth, state.position)?;
    state.time += motion.dt;
    let mut report = StepReport {
        displacement: 0.0,
        slip,
        stuck: false,
    };
    while let Some(&wp) = waypoints.front() {
        if wp.dist(&state.position) < 1e-9 {
            waypoints.pop_front();
        } else {
            break;
        }
    }
    let Some(&wp) = waypoints.front() else {
        return Ok(report);
    };
    if slip >= motion.s_stuck {
        state.immobilized_time += motion.dt;
        report.stuck = true;
        return Ok(report);
    }
    let desired = (wp.y - state.position.y).atan2(wp.x - state.position.x);
    let err = wrap_angle(desired - state.heading);
    let max_turn = motion.turn_rate * motion.dt;
    if err.abs() > max_turn {
        state.heading = wrap_angle(state.heading + max_turn.copysign(err));
        return Ok(report);
    }
    state.heading = desired;
    let reach = motion.speed * (1.0 - slip) * motion.dt;
    let remaining = wp.dist(&state.position);
    if reach >= remaining {
        state.position = wp;
        waypoints.pop_front();
        report.displacement = remaining;
    } else {
        let t = reach / remaining;
        state.position = Point::new(
            state.position.x + (wp.x - state.position.x) * t,
            state.position.y + (wp.y - state.position.y) * t,
        );
        report.displacement = reach;
    }
    state.distance_traveled += report.displacement;
    state.path_log.push((state.time, state.position));
    Ok(report)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LegLimits {
    /// Arrival tolerance around the final waypoint, m.
    pub arrival_tolerance: f64,
    /// Travel after which the leg is cut so the map can refresh, m.
    pub max_travel: f64,
    /// Simulation time at which the leg stops regardless, s.
    pub deadline: f64,
    /// Distance between measurements, m.
    pub sample_spacing: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LegOutcome {
    Arrived,
    TravelLimit,
    Deadline,
    Immobilized,
}

/// Per-step observer; receives the robot state after each control step.
pub trait LegObserver {
    fn on_step(&mut self, state: &RobotState, report: &StepReport);
    fn on_measure(&mut self, state: &RobotState) -> Result<()>;
}

/// Follow `waypoints` until arrival, the travel limit, the deadline or
/// immobilization. Fires a measurement every `sample_spacing` meters.
pub fn navigate_to(
    state: &mut RobotState,
    waypoints: &[Point],
    truth: &SlipField,
    motion: &MotionParams,
    limits: &LegLimits,
    observer: &mut impl LegObserver,
) -> Result<LegOutcome> {
    let Some(&target) = waypoints.last() else {
        return Ok(LegOutcome::Arrived);
    };
    let mut queue: VecDeque<Point> = waypoints.iter().copied().collect();
    let start_distance = state.distance_traveled;
    let mut since_sample = 0.0;
    loop {
        if queue.is_empty() || state.position.dist(&target) <= limits.arrival_tolerance {
            return Ok(LegOutcome::Arrived);
        }
        if state.is_immobilized(motion) {
            return Ok(LegOutcome::Immobilized);
        }
        if state.distance_traveled - start_distance >= limits.max_travel - 1e-9 {
            return Ok(LegOutcome::TravelLimit);
        }
        if state.time >= limits.deadline - 1e-9 {
            return Ok(LegOutcome::Deadline);
        }
        let report = step_robot(state, &mut queue, truth, motion)?;
        observer.on_step(state, &report);
        since_sample += report.displacement;
        while since_sample >= limits.sample_spacing - 1e-9 {
            observer.on_measure(state)?;
            since_sample -= limits.sample_spacing;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::Cell;
    use crate::terrain::{generate_field, FieldKind, FieldParams};

    fn square(n: usize, lo: usize, hi: usize) -> Mask {
        Mask::from_fn(n, n, |c| (lo..hi).contains(&c.row) && (lo..hi).contains(&c.col))
    }

    #[test]
    fn zero_margin_is_complement() {
        let m = square(10, 2, 7);
        let o = build_obstacle_map(&m, 0.0, 0.5).unwrap();
        assert_eq!(o.blocked, m.not());
    }

    #[test]
    fn one_cell_margin_erodes_square() {
        let m = square(9, 2, 7);
        let o = build_obstacle_map(&m, 0.5, 0.5).unwrap();
        assert_eq!(o.margin_cells, 1);
        assert_eq!(o.blocked.not(), square(9, 3, 6));
        assert!(matches!(build_obstacle_map(&m, 1.5, 0.5), Err(Error::RobotBoxedIn)));
    }

    #[test]
    fn straight_and_diagonal_costs() {
        let spec = WorkspaceSpec::new(5.0, 5.0, 0.5).unwrap();
        let free = Mask::filled(10, 10, false);
        let o = ObstacleMap { blocked: free, margin_m: 0.0, margin_cells: 0 };
        let a = spec.center(Cell::new(3, 1));
        let b = spec.center(Cell::new(3, 6));
        let p = plan_path(&o, &spec, a, b).unwrap();
        assert!((p.length_m - 2.5).abs() < 1e-12);
        let p = plan_path(&o, &spec, spec.center(Cell::new(0, 0)), spec.center(Cell::new(9, 9))).unwrap();
        assert!((p.length_m - 9.0 * 2f64.sqrt() * 0.5).abs() < 1e-12);
    }

    #[test]
    fn enclosed_target_has_no_path() {
        let spec = WorkspaceSpec::new(5.0, 5.0, 0.5).unwrap();
        let mut blocked = Mask::filled(10, 10, false);
        for r in 4..7 {
            for c in 4..7 {
                blocked[r * 10 + c] = !(r == 5 && c == 5);
            }
        }
        let o = ObstacleMap { blocked, margin_m: 0.0, margin_cells: 0 };
        let r = plan_path(&o, &spec, spec.center(Cell::new(0, 0)), spec.center(Cell::new(5, 5)));
        assert_eq!(r, Err(Error::NoSafePath));
    }

    #[test]
    fn no_corner_cutting() {
        let blocked = Mask::from_vec(2, 2, vec![false, true, true, false]).unwrap();
        assert_eq!(astar(&blocked, 0, 3), Err(Error::NoSafePath));
    }

    fn flat(value: f64) -> SlipField {
        let spec = WorkspaceSpec::new(10.0, 10.0, 0.5).unwrap();
        let params = FieldParams { base: value, amplitude: 0.0, ..FieldParams::default() };
        generate_field(&spec, FieldKind::Smooth, &params, 0).unwrap()
    }

    #[test]
    fn step_displacement_scales_with_slip() {
        let motion = MotionParams { speed: 0.4, dt: 0.1, ..MotionParams::default() };
        for (slip, expected) in [(0.0, 0.04), (0.5, 0.02)] {
            let field = flat(slip);
            let mut st = RobotState::new(Point::new(1.0, 1.0), 0.0);
            let mut wps = VecDeque::from([Point::new(5.0, 1.0)]);
            let r = step_robot(&mut st, &mut wps, &field, &motion).unwrap();
            assert!((r.displacement - expected).abs() < 1e-12);
            assert!((st.position.x - 1.0 - expected).abs() < 1e-12);
        }
        let field = flat(1.0);
        let mut st = RobotState::new(Point::new(1.0, 1.0), 0.0);
        let mut wps = VecDeque::from([Point::new(5.0, 1.0)]);
        let r = step_robot(&mut st, &mut wps, &field, &motion).unwrap();
        assert_eq!(r.displacement, 0.0);
        assert!((st.immobilized_time - 0.1).abs() < 1e-12);
    }

    #[test]
    fn turns_in_place_before_moving() {
        let field = flat(0.0);
        let motion = MotionParams::default();
        let mut st = RobotState::new(Point::new(1.0, 1.0), 0.0);
        let mut wps = VecDeque::from([Point::new(1.0, 5.0)]);
        let r = step_robot(&mut st, &mut wps, &field, &motion).unwrap();
        assert_eq!(r.displacement, 0.0);
        assert!((st.heading - 0.15).abs() < 1e-12);
        let mut steps = 0;
        while st.position == Point::new(1.0, 1.0) {
            step_robot(&mut st, &mut wps, &field, &motion).unwrap();
            steps += 1;
        }
        assert!(steps >= 9);
        assert_eq!(st.position.x, 1.0);
    }

    #[derive(Default)]
    struct Counter {
        samples: Vec<Point>,
        steps: usize,
    }

    impl LegObserver for Counter {
        fn on_step(&mut self, _: &RobotState, _: &StepReport) {
            self.steps += 1;
        }
        fn on_measure(&mut self, state: &RobotState) -> Result<()> {
            self.samples.push(state.position);
            Ok(())
        }
    }

    fn limits() -> LegLimits {
        LegLimits { arrival_tolerance: 0.5, max_travel: 2.0, deadline: 1e9, sample_spacing: 0.25 }
    }

    #[test]
    fn one_meter_leg_takes_four_samples() {
        let field = flat(0.0);
        let mut st = RobotState::new(Point::new(1.0, 1.0), 0.0);
        let mut obs = Counter::default();
        let out = navigate_to(&mut st, &[Point::new(2.0, 1.0)], &field, &MotionParams::default(), &LegLimits { arrival_tolerance: 0.0, ..limits() }, &mut obs).unwrap();
        assert_eq!(out, LegOutcome::Arrived);
        assert_eq!(obs.samples.len(), 4);
        assert!((st.distance_traveled - 1.0).abs() < 1e-9);
    }

    #[test]
    fn arrival_at_current_position() {
        let field = flat(0.0);
        let mut st = RobotState::new(Point::new(1.0, 1.0), 0.0);
        let mut obs = Counter::default();
        let out = navigate_to(&mut st, &[Point::new(1.0, 1.0)], &field, &MotionParams::default(), &limits(), &mut obs).unwrap();
        assert_eq!(out, LegOutcome::Arrived);
        assert!(obs.samples.is_empty());
        assert_eq!(obs.steps, 0);
    }

    #[test]
    fn stuck_in_full_slip() {
        let field = flat(1.0);
        let mut st = RobotState::new(Point::new(1.0, 1.0), 0.0);
        let mut obs = Counter::default();
        let out = navigate_to(&mut st, &[Point::new(8.0, 1.0)], &field, &MotionParams::default(), &limits(), &mut obs).unwrap();
        assert_eq!(out, LegOutcome::Immobilized);
        assert_eq!(st.distance_traveled, 0.0);
    }

    #[test]
    fn travel_limit_cuts_leg() {
        let field = flat(0.0);
        let mut st = RobotState::new(Point::new(1.0, 1.0), 0.0);
        let mut obs = Counter::default();
        let out = navigate_to(&mut st, &[Point::new(8.0, 1.0)], &field, &MotionParams::default(), &limits(), &mut obs).unwrap();
        assert_eq!(out, LegOutcome::TravelLimit);
        assert_eq!(obs.samples.len(), 8);
    }
}
