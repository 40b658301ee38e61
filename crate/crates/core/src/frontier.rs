//! Frontier extraction, reachability filtering, scoring and subgoal selection.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{Grid, Mask, Point, ScalarGrid, WorkspaceSpec, NEIGHBORS4, NEIGHBORS8};

// ---------------------------------------------------------------------------
// Border following
// ---------------------------------------------------------------------------

/// Neighbor directions in counterclockwise order starting east, with north
/// being the previous row.
const DIRS: [(isize, isize); 8] = [
    (0, 1),
    (-1, 1),
    (-1, 0),
    (-1, -1),
    (0, -1),
    (1, -1),
    (1, 0),
    (1, 1),
];

fn dir_index(dr: isize, dc: isize) -> usize {
    DIRS.iter().position(|&d| d == (dr, dc)).expect("8-neighbor offset")
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Contour {
    /// True for a border between a safe component and a hole inside it.
    pub hole: bool,
    /// Row-major cell indices in tracing order, without repeats.
    pub cells: Vec<usize>,
}

/// Topological border following over the 8-connected components of `mask`.
/// Cells outside the grid count as background.
pub fn trace_borders(mask: &Mask) -> Vec<Contour> {
    let rows = mask.rows();
    let cols = mask.cols();
    let pr = rows + 2;
    let pc = cols + 2;
    let mut f = vec![0i32; pr * pc];
    for r in 0..rows {
        for c in 0..cols {
            if mask[r * cols + c] {
                f[(r + 1) * pc + c + 1] = 1;
            }
        }
    }
    let at = |r: isize, c: isize| (r as usize) * pc + c as usize;
    let unpad = |r: isize, c: isize| (r as usize - 1) * cols + (c as usize - 1);

    let mut contours = Vec::new();
    let mut nbd: i32 = 1;
    for i in 1..=rows as isize {
        for j in 1..=cols as isize {
            let v = f[at(i, j)];
            let (hole, start_dir) = if v == 1 && f[at(i, j - 1)] == 0 {
                (false, 4usize)
            } else if v >= 1 && f[at(i, j + 1)] == 0 {
                (true, 0usize)
            } else {
                continue;
            };
            nbd += 1;

            let mut seen = Vec::new();
            let push = |cell: usize, seen: &mut Vec<usize>| {
                if !seen.contains(&cell) {
                    seen.push(cell);
                }
            };

            // Clockwise search around (i, j) from the background pixel.
            let mut first = None;
            for k in 0..8 {
                let d = (start_dir + 8 - k) % 8;
                let (dr, dc) = DIRS[d];
                if f[at(i + dr, j + dc)] != 0 {
                    first = Some((i + dr, j + dc));
                    break;
                }
            }
            let Some((i1, j1)) = first else {
                f[at(i, j)] = -nbd;
                push(unpad(i, j), &mut seen);
                contours.push(Contour { hole, cells: seen });
                continue;
            };

            let (mut i2, mut j2) = (i1, j1);
            let (mut i3, mut j3) = (i, j);
            loop {
                push(unpad(i3, j3), &mut seen);
                // Counterclockwise search around (i3, j3) starting after (i2, j2).
                let d0 = dir_index(i2 - i3, j2 - j3);
                let mut east_background = false;
                let mut next = (i3, j3);
                for k in 1..=8 {
                    let d = (d0 + k) % 8;
                    let (dr, dc) = DIRS[d];
                    if f[at(i3 + dr, j3 + dc)] != 0 {
                        next = (i3 + dr, j3 + dc);
                        break;
                    }
                    if d == 0 {
                        east_background = true;
                    }
                }
                if east_background {
                    f[at(i3, j3)] = -nbd;
                } else if f[at(i3, j3)] == 1 {
                    f[at(i3, j3)] = nbd;
                }
                let (i4, j4) = next;
                if (i4, j4) == (i, j) && (i3, j3) == (i1, j1) {
                    break;
                }
                (i2, j2) = (i3, j3);
                (i3, j3) = (i4, j4);
            }
            contours.push(Contour { hole, cells: seen });
        }
    }
    contours
}

/// Safe cells bordering certified-unsafe terrain, grouped by contour.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Frontiers {
    /// Sorted, unique row-major indices.
    pub cells: Vec<usize>,
    pub contours: Vec<Contour>,
}

fn has_unsafe_neighbor(mask: &Mask, index: usize) -> bool {
    let cell = mask.cell_at(index);
    NEIGHBORS4.iter().any(|&(dr, dc)| {
        mask.get(cell.row as isize + dr, cell.col as isize + dc)
            .is_some_and(|&safe| !safe)
    })
}

/// Frontier cells: safe cells 4-adjacent to at least one in-bounds unsafe
/// cell. Cells touching only the workspace edge are not frontiers.
pub fn extract_frontiers(mask: &Mask) -> Frontiers {
    let mut cells = Vec::new();
    let mut contours = Vec::new();
    for contour in trace_borders(mask) {
        let kept: Vec<usize> = contour
            .cells
            .into_iter()
            .filter(|&i| has_unsafe_neighbor(mask, i))
            .collect();
        if !kept.is_empty() {
            cells.extend_from_slice(&kept);
            contours.push(Contour {
                hole: contour.hole,
                cells: kept,
            });
        }
    }
    cells.sort_unstable();
    cells.dedup();
    Frontiers { cells, contours }
}

// ---------------------------------------------------------------------------
// Reachability
// ---------------------------------------------------------------------------

/// 8-connected component labels; 0 marks unsafe cells, components are
/// numbered from 1 in row-major order of their first cell.
pub fn label_components(mask: &Mask) -> Grid<u32> {
    let mut labels = Grid::filled(mask.rows(), mask.cols(), 0u32);
    let mut next = 0u32;
    let mut stack = Vec::new();
    for start in 0..mask.len() {
        if !mask[start] || labels[start] != 0 {
            continue;
        }
        next += 1;
        labels[start] = next;
        stack.push(start);
        while let Some(i) = stack.pop() {
            let c = mask.cell_at(i);
            for &(dr, dc) in &NEIGHBORS8 {
                let (r, cc) = (c.row as isize + dr, c.col as isize + dc);
                if mask.get(r, cc) == Some(&true) {
                    let j = r as usize * mask.cols() + cc as usize;
                    if labels[j] == 0 {
                        labels[j] = next;
                        stack.push(j);
                    }
                }
            }
        }
    }
    labels
}

/// Frontier cells in the robot's safe component, with that component's label.
pub fn reachable_frontiers(frontiers: &[usize], mask: &Mask, robot_cell: usize) -> Result<(Vec<usize>, u32)> {
    if robot_cell >= mask.len() || !mask[robot_cell] {
        return Err(Error::SafetyBreach(format!("robot cell {robot_cell} is not in the safe set")));
    }
    let labels = label_components(mask);
    let comp = labels[robot_cell];
    Ok((
        frontiers.iter().copied().filter(|&i| labels[i] == comp).collect(),
        comp,
    ))
}

// ---------------------------------------------------------------------------
// Scoring
// ---------------------------------------------------------------------------

/// Number of uncertified cells `x'` with `lower(x) + L |x - x'| <= h`.
/// Only cells inside the certified radius around `x` are visited.
pub fn expansion_count(
    spec: &WorkspaceSpec,
    cell: usize,
    lower: &ScalarGrid,
    safe: &Mask,
    lipschitz: f64,
    h: f64,
) -> usize {
    let slack = h - lower[cell];
    if !(slack >= 0.0) {
        return 0;
    }
    let diag = spec.width_m.hypot(spec.height_m) + spec.resolution;
    let radius_m = (slack / lipschitz).min(diag);
    let reach = (radius_m / spec.resolution).floor() as isize;
    let center = safe.cell_at(cell);
    let (r0, c0) = (center.row as isize, center.col as isize);
    let rows = safe.rows() as isize;
    let cols = safe.cols() as isize;
    let mut count = 0;
    for r in (r0 - reach).max(0)..=(r0 + reach).min(rows - 1) {
        for c in (c0 - reach).max(0)..=(c0 + reach).min(cols - 1) {
            let j = (r * cols + c) as usize;
            if safe[j] {
                continue;
            }
            let dr = (r - r0) as f64;
            let dc = (c - c0) as f64;
            let dist = (dr * dr + dc * dc).sqrt() * spec.resolution;
            if certifies(lower[cell], lipschitz, dist, h) {
                count += 1;
            }
        }
    }
    count
}

/// The propagation predicate with the same relative slack used for disks.
pub(crate) fn certifies(bound: f64, lipschitz: f64, dist: f64, h: f64) -> bool {
    let slack = h - bound;
    slack >= 0.0 && (lipschitz * dist) <= slack * (1.0 + 1e-9) + 1e-12
}

pub fn expansion_probability(g_count: usize, k_e: f64) -> f64 {
    1.0 - (-k_e * g_count as f64).exp()
}

/// Goal heuristic; pure exploration when `goal` is `None`.
pub fn goal_value(candidate: Point, goal: Option<Point>, robot: Point, k_g: f64) -> f64 {
    let d = candidate.dist(&robot) + goal.map_or(0.0, |g| candidate.dist(&g));
    (-k_g * d).exp()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FrontierCandidate {
    pub cell: usize,
    pub location: Point,
    pub g_count: usize,
    pub expansion_prob: f64,
    pub goal_value: f64,
    pub overall: f64,
    pub component: u32,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScoringParams {
    pub k_e: f64,
    pub k_g: f64,
    pub h: f64,
    pub lipschitz: f64,
}

/// Score every cell of `reachable` (assumed sorted by index).
pub fn score_candidates(
    spec: &WorkspaceSpec,
    reachable: &[usize],
    component: u32,
    lower: &ScalarGrid,
    safe: &Mask,
    robot: Point,
    goal: Option<Point>,
    params: &ScoringParams,
) -> Vec<FrontierCandidate> {
    reachable
        .iter()
        .map(|&cell| {
            let location = spec.center_of(cell);
            let g_count = expansion_count(spec, cell, lower, safe, params.lipschitz, params.h);
            let expansion_prob = expansion_probability(g_count, params.k_e);
            let goal_value = goal_value(location, goal, robot, params.k_g);
            FrontierCandidate {
                cell,
                location,
                g_count,
                expansion_prob,
                goal_value,
                overall: goal_value * expansion_prob,
                component,
            }
        })
        .collect()
}

// ---------------------------------------------------------------------------
// Pareto front and selection
// ---------------------------------------------------------------------------

/// Indices of the points not strictly dominated by any other, in input order.
/// Both objectives are maximized.
pub fn pareto_indices(points: &[(f64, f64)]) -> Vec<usize> {
    let mut order: Vec<usize> = (0..points.len()).collect();
    order.sort_by(|&a, &b| {
        points[b]
            .0
            .total_cmp(&points[a].0)
            .then(points[b].1.total_cmp(&points[a].1))
    });
    let mut keep = Vec::new();
    let mut best_prev = f64::NEG_INFINITY;
    let mut k = 0;
    while k < order.len() {
        // Group with equal first objective.
        let first = points[order[k]].0;
        let mut end = k;
        while end < order.len() && points[order[end]].0 == first {
            end += 1;
        }
        let top = points[order[k]].1;
        if top > best_prev {
            keep.extend(order[k..end].iter().copied().filter(|&i| points[i].1 == top));
        }
        best_prev = best_prev.max(top);
        k = end;
    }
    keep.sort_unstable();
    keep
}

/// Pareto front over `(expansion_prob, goal_value)`, as indices into
/// `candidates` ordered by cell index.
pub fn pareto_front(candidates: &[FrontierCandidate]) -> Result<Vec<usize>> {
    if candidates.is_empty() {
        return Err(Error::Domain("pareto front of an empty candidate set".into()));
    }
    let pts: Vec<(f64, f64)> = candidates.iter().map(|c| (c.expansion_prob, c.goal_value)).collect();
    let mut idx = pareto_indices(&pts);
    idx.sort_by_key(|&i| candidates[i].cell);
    Ok(idx)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum StrategyKind {
    /// Straight to the goal, ignoring safety.
    #[serde(rename = "NGH")]
    Ngh,
    /// Goal heuristic over reachable frontiers.
    #[serde(rename = "SGH")]
    Sgh,
    /// Pareto front with a rotating objective priority.
    #[serde(rename = "PGH")]
    Pgh,
    /// Pareto front with the scalarized product score.
    #[serde(rename = "PSANE")]
    Psane,
}

impl StrategyKind {
    pub const ALL: [StrategyKind; 4] = [StrategyKind::Ngh, StrategyKind::Sgh, StrategyKind::Pgh, StrategyKind::Psane];

    pub fn name(&self) -> &'static str {
        match self {
            StrategyKind::Ngh => "NGH",
            StrategyKind::Sgh => "SGH",
            StrategyKind::Pgh => "PGH",
            StrategyKind::Psane => "PSANE",
        }
    }

    /// Whether the strategy navigates inside the certified safe set.
    pub fn is_safe(&self) -> bool {
        !matches!(self, StrategyKind::Ngh)
    }
}

impl std::fmt::Display for StrategyKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

impl std::str::FromStr for StrategyKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        StrategyKind::ALL
            .into_iter()
            .find(|k| k.name().eq_ignore_ascii_case(s))
            .ok_or_else(|| Error::config("strategy", format!("unknown strategy `{s}`")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Objective {
    Goal,
    Expansion,
}

pub fn default_schedule() -> Vec<Objective> {
    vec![Objective::Goal, Objective::Goal, Objective::Expansion]
}

#[derive(Debug, Clone, PartialEq)]
pub struct SelectionStrategy {
    pub kind: StrategyKind,
    pub schedule: Vec<Objective>,
    pub phase: usize,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Selection {
    /// Head for the mission goal directly.
    Goal(Point),
    /// Index into the candidate slice.
    Frontier(usize),
}

impl SelectionStrategy {
    pub fn new(kind: StrategyKind) -> Self {
        SelectionStrategy {
            kind,
            schedule: default_schedule(),
            phase: 0,
        }
    }

    /// Objective the next PGH decision prioritizes.
    pub fn current_objective(&self) -> Objective {
        self.schedule[self.phase % self.schedule.len()]
    }

    pub fn select(&mut self, candidates: &[FrontierCandidate], goal: Option<Point>) -> Result<Selection> {
        if self.kind == StrategyKind::Ngh {
            return goal
                .map(Selection::Goal)
                .ok_or_else(|| Error::config("strategy", "NGH requires a goal"));
        }
        if candidates.is_empty() {
            return Err(Error::NoFrontier);
        }
        let pick = match self.kind {
            StrategyKind::Ngh => unreachable!(),
            StrategyKind::Sgh => argmax_by(candidates, 0..candidates.len(), |c| (c.goal_value, 0.0)),
            StrategyKind::Pgh => {
                let front = pareto_front(candidates)?;
                let objective = self.current_objective();
                self.phase = (self.phase + 1) % self.schedule.len();
                match objective {
                    Objective::Goal => argmax_by(candidates, front, |c| (c.goal_value, c.expansion_prob)),
                    Objective::Expansion => argmax_by(candidates, front, |c| (c.expansion_prob, c.goal_value)),
                }
            }
            StrategyKind::Psane => {
                let front = pareto_front(candidates)?;
                let best = argmax_by(candidates, front.iter().copied(), |c| (c.overall, 0.0));
                if candidates[best].overall > 0.0 {
                    best
                } else {
                    argmax_by(candidates, front, |c| (c.goal_value, 0.0))
                }
            }
        };
        Ok(Selection::Frontier(pick))
    }
}

/// Lexicographic argmax of `key`, ties broken by the lowest cell index.
fn argmax_by(
    candidates: &[FrontierCandidate],
    among: impl IntoIterator<Item = usize>,
    key: impl Fn(&FrontierCandidate) -> (f64, f64),
) -> usize {
    let mut best: Option<usize> = None;
    for i in among {
        best = match best {
            None => Some(i),
            Some(b) => {
                let (kb, ki) = (key(&candidates[b]), key(&candidates[i]));
                let ord = ki.0.total_cmp(&kb.0).then(ki.1.total_cmp(&kb.1));
                if ord.is_gt() || (ord.is_eq() && candidates[i].cell < candidates[b].cell) {
                    Some(i)
                } else {
                    Some(b)
                }
            }
        };
    }
    best.expect("non-empty selection set")
}
