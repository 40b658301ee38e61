//! Confidence intervals and Lipschitz safe-set certification.
//!
//! Each cell carries an interval `[lower, upper]` that starts unbounded and is
//! intersected with `mean +- sqrt(beta) * std` after every GP refit. Cells are
//! certified by propagating from already-safe cells whose upper bound leaves
//! room under the threshold `h`: a cell `x'` is added if
//! `upper(x) + L * |x - x'| <= h` for some `x` in the previous safe set.

use crate::error::{Error, Result};
use crate::grid::{disk_offsets, Mask, Point, ScalarGrid, WorkspaceSpec};

/// Stand-in for an infinite bound.
pub const UNBOUNDED: f64 = 1e12;

#[derive(Debug, Clone, PartialEq)]
pub struct ConfidenceState {
    pub lower: ScalarGrid,
    pub upper: ScalarGrid,
    pub beta: f64,
    /// Cells whose intersection came out empty, summed over all updates.
    pub empty_intersections: usize,
}

/// Result of one confidence update.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ConfidenceUpdate {
    /// Cells collapsed to a singleton by this update.
    pub collapsed: Vec<usize>,
}

impl ConfidenceState {
    pub fn new(rows: usize, cols: usize, beta: f64) -> Result<Self> {
        if !(beta.is_finite() && beta > 0.0) {
            return Err(Error::config("beta", format!("must be positive, got {beta}")));
        }
        Ok(ConfidenceState {
            lower: ScalarGrid::filled(rows, cols, -UNBOUNDED),
            upper: ScalarGrid::filled(rows, cols, UNBOUNDED),
            beta,
            empty_intersections: 0,
        })
    }

    /// Intersect the stored intervals with the new GP confidence band.
    ///
    /// An empty intersection collapses the cell to the midpoint of the gap
    /// between the two intervals and is counted.
    pub fn update(&mut self, mean: &ScalarGrid, std: &ScalarGrid) -> Result<ConfidenceUpdate> {
        if !mean.same_shape(&self.lower) || !std.same_shape(&self.lower) {
            return Err(Error::config(
                "grid",
                format!(
                    "prediction grids {}x{} do not match confidence state {}x{}",
                    mean.rows(),
                    mean.cols(),
                    self.lower.rows(),
                    self.lower.cols()
                ),
            ));
        }
        let scale = self.beta.sqrt();
        let mut out = ConfidenceUpdate::default();
        for i in 0..mean.len() {
            let lo_new = mean[i] - scale * std[i];
            let hi_new = mean[i] + scale * std[i];
            let lo_old = self.lower[i];
            let hi_old = self.upper[i];
            let lo = lo_old.max(lo_new);
            let hi = hi_old.min(hi_new);
            if lo <= hi {
                self.lower[i] = lo;
                self.upper[i] = hi;
            } else {
                // The gap between the two disjoint intervals is (hi, lo).
                let mid = 0.5 * (lo + hi);
                self.lower[i] = mid;
                self.upper[i] = mid;
                self.empty_intersections += 1;
                out.collapsed.push(i);
            }
        }
        Ok(out)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SafeSet {
    pub mask: Mask,
    pub threshold: f64,
    pub lipschitz: f64,
    pub resolution: f64,
    pub epoch: u64,
}

impl SafeSet {
    pub fn len(&self) -> usize {
        self.mask.count()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn contains(&self, index: usize) -> bool {
        self.mask[index]
    }

    /// Certified radius in meters around a cell with upper bound `u`.
    pub fn radius(&self, u: f64) -> Option<f64> {
        if u >= UNBOUNDED || !u.is_finite() || u > self.threshold {
            return None;
        }
        Some((self.threshold - u) / self.lipschitz)
    }

    /// One expansion step. The result always contains `self`.
    pub fn expand(&self, upper: &ScalarGrid) -> Result<SafeSet> {
        self.expand_ordered(upper, false)
    }

    /// Same as [`SafeSet::expand`] with the certifying cells visited in
    /// reverse order. Used to check order independence.
    pub fn expand_reversed(&self, upper: &ScalarGrid) -> Result<SafeSet> {
        self.expand_ordered(upper, true)
    }

    fn expand_ordered(&self, upper: &ScalarGrid, reverse: bool) -> Result<SafeSet> {
        if !upper.same_shape(&self.mask) {
            return Err(Error::config("grid", "upper bound grid does not match safe set"));
        }
        let mut next = self.mask.clone();
        let rows = self.mask.rows() as isize;
        let cols = self.mask.cols() as isize;
        let mut certifying: Vec<usize> = self.mask.set_indices().collect();
        if reverse {
            certifying.reverse();
        }
        let mut cached: Option<(f64, Vec<(isize, isize)>)> = None;
        for idx in certifying {
            let Some(radius_m) = self.radius(upper[idx]) else {
                continue;
            };
            let radius_cells = radius_m / self.resolution;
            if radius_cells < 1.0 {
                continue;
            }
            let offsets = match &cached {
                Some((r, offs)) if *r == radius_cells => offs,
                _ => {
                    cached = Some((radius_cells, disk_offsets(radius_cells)));
                    &cached.as_ref().unwrap().1
                }
            };
            let cell = self.mask.cell_at(idx);
            let (r0, c0) = (cell.row as isize, cell.col as isize);
            for &(dr, dc) in offsets {
                let (r, c) = (r0 + dr, c0 + dc);
                if r >= 0 && c >= 0 && r < rows && c < cols {
                    next[(r * cols + c) as usize] = true;
                }
            }
        }
        Ok(SafeSet {
            mask: next,
            threshold: self.threshold,
            lipschitz: self.lipschitz,
            resolution: self.resolution,
            epoch: self.epoch + 1,
        })
    }
}

/// Initial safe set: all cells whose centers lie within `r0` of `start`,
/// plus the cell containing `start`.
pub fn init_safe_set(spec: &WorkspaceSpec, start: Point, r0: f64, h: f64, lipschitz: f64) -> Result<SafeSet> {
    if !(r0.is_finite() && r0 > 0.0) {
        return Err(Error::config("r0", format!("must be positive, got {r0}")));
    }
    if !(h > 0.0 && h < 1.0) {
        return Err(Error::config("h", format!("must lie in (0, 1), got {h}")));
    }
    if !(lipschitz.is_finite() && lipschitz > 0.0) {
        return Err(Error::config("lipschitz", format!("must be positive, got {lipschitz}")));
    }
    let start_cell = spec
        .cell_of(start)
        .ok_or_else(|| Error::config("start", "lies outside the workspace"))?;
    let r2 = r0 * r0 * (1.0 + 1e-9);
    let mut mask = Mask::from_fn(spec.rows(), spec.cols(), |c| spec.center(c).dist2(&start) <= r2);
    *mask.at_mut(start_cell) = true;
    Ok(SafeSet {
        mask,
        threshold: h,
        lipschitz,
        resolution: spec.resolution,
        epoch: 0,
    })
}

/// Bootstrap measurement locations: the start and two points half-way to the
/// edge of the initial disk, turned toward the workspace interior.
pub fn bootstrap_locations(spec: &WorkspaceSpec, start: Point, r0: f64) -> [Point; 3] {
    let (lo, hi) = spec.bounds();
    let center = Point::new((lo.x + hi.x) / 2.0, (lo.y + hi.y) / 2.0);
    let base = (center.y - start.y).atan2(center.x - start.x);
    let base = if start.dist(&center) < 1e-9 { 0.0 } else { base };
    let step = 0.5 * r0;
    let at = |theta: f64| spec.clamp(Point::new(start.x + step * theta.cos(), start.y + step * theta.sin()));
    [
        start,
        at(base + std::f64::consts::FRAC_PI_4),
        at(base - std::f64::consts::FRAC_PI_4),
    ]
}

/// Certified area over true safe area. Values above one mean the certified
/// set is larger than the truth, which only an unsound certificate produces.
pub fn coverage_ratio(safe: &Mask, truth: &Mask) -> Result<f64> {
    let denom = truth.count();
    if denom == 0 {
        return Err(Error::Domain("ground truth has no safe cells".into()));
    }
    Ok(safe.count() as f64 / denom as f64)
}
