//! Workspace discretization and dense row-major grids.
//!
//! Cell `(row, col)` has its center at `origin + (col, row) * resolution`.
//! Rows grow with `y`, columns with `x`. Every grid in the crate uses the
//! same row-major linear index `row * cols + col`, which is also the
//! tie-breaking order wherever a deterministic choice between cells is needed.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Minimum number of cells along each axis.
pub const MIN_CELLS_PER_AXIS: usize = 8;

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Point {
    pub x: f64,
    pub y: f64,
}

impl Point {
    pub const fn new(x: f64, y: f64) -> Self {
        Point { x, y }
    }

    pub fn dist(&self, other: &Point) -> f64 {
        (self.x - other.x).hypot(self.y - other.y)
    }

    pub fn dist2(&self, other: &Point) -> f64 {
        let dx = self.x - other.x;
        let dy = self.y - other.y;
        dx * dx + dy * dy
    }

    pub fn is_finite(&self) -> bool {
        self.x.is_finite() && self.y.is_finite()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Cell {
    pub row: usize,
    pub col: usize,
}

impl Cell {
    pub const fn new(row: usize, col: usize) -> Self {
        Cell { row, col }
    }
}

/// A bounded planar workspace and its discretization.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WorkspaceSpec {
    pub width_m: f64,
    pub height_m: f64,
    /// Meters per cell.
    pub resolution: f64,
    /// World coordinates of the center of cell (0, 0).
    pub origin: Point,
}

impl WorkspaceSpec {
    /// Workspace spanning `[0, width] x [0, height]` with cell (0,0) centered
    /// half a cell in from the corner.
    pub fn new(width_m: f64, height_m: f64, resolution: f64) -> Result<Self> {
        let spec = WorkspaceSpec {
            width_m,
            height_m,
            resolution,
            origin: Point::new(resolution / 2.0, resolution / 2.0),
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("workspace.width_m", self.width_m),
            ("workspace.height_m", self.height_m),
            ("workspace.resolution", self.resolution),
        ] {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::config(name, format!("must be positive, got {v}")));
            }
        }
        if !self.origin.is_finite() {
            return Err(Error::config("workspace.origin", "must be finite"));
        }
        if self.cols() < MIN_CELLS_PER_AXIS {
            return Err(Error::config(
                "workspace.width_m",
                format!("yields {} cells, need at least {MIN_CELLS_PER_AXIS}", self.cols()),
            ));
        }
        if self.rows() < MIN_CELLS_PER_AXIS {
            return Err(Error::config(
                "workspace.height_m",
                format!("yields {} cells, need at least {MIN_CELLS_PER_AXIS}", self.rows()),
            ));
        }
        Ok(())
    }

    pub fn cols(&self) -> usize {
        (self.width_m / self.resolution).round() as usize
    }

    pub fn rows(&self) -> usize {
        (self.height_m / self.resolution).round() as usize
    }

    pub fn len(&self) -> usize {
        self.rows() * self.cols()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn index(&self, cell: Cell) -> usize {
        cell.row * self.cols() + cell.col
    }

    pub fn cell_at(&self, index: usize) -> Cell {
        Cell::new(index / self.cols(), index % self.cols())
    }

    pub fn center(&self, cell: Cell) -> Point {
        Point::new(
            self.origin.x + cell.col as f64 * self.resolution,
            self.origin.y + cell.row as f64 * self.resolution,
        )
    }

    pub fn center_of(&self, index: usize) -> Point {
        self.center(self.cell_at(index))
    }

    /// Continuous cell coordinates `(col, row)` of a world point.
    pub fn to_cell_coords(&self, p: Point) -> (f64, f64) {
        (
            (p.x - self.origin.x) / self.resolution,
            (p.y - self.origin.y) / self.resolution,
        )
    }

    /// World extent covered by cells, including the half-cell border.
    pub fn bounds(&self) -> (Point, Point) {
        let half = self.resolution / 2.0;
        let lo = Point::new(self.origin.x - half, self.origin.y - half);
        let hi = Point::new(
            self.origin.x + (self.cols() as f64 - 0.5) * self.resolution,
            self.origin.y + (self.rows() as f64 - 0.5) * self.resolution,
        );
        (lo, hi)
    }

    pub fn contains(&self, p: Point) -> bool {
        let (lo, hi) = self.bounds();
        p.is_finite() && p.x >= lo.x && p.x <= hi.x && p.y >= lo.y && p.y <= hi.y
    }

    /// Cell whose center is nearest to `p`, or `None` outside the workspace.
    pub fn cell_of(&self, p: Point) -> Option<Cell> {
        if !self.contains(p) {
            return None;
        }
        let (c, r) = self.to_cell_coords(p);
        let col = (c.round().max(0.0) as usize).min(self.cols() - 1);
        let row = (r.round().max(0.0) as usize).min(self.rows() - 1);
        Some(Cell::new(row, col))
    }

    pub fn index_of(&self, p: Point) -> Option<usize> {
        self.cell_of(p).map(|c| self.index(c))
    }

    /// Clamp a point into the workspace bounds.
    pub fn clamp(&self, p: Point) -> Point {
        let (lo, hi) = self.bounds();
        Point::new(p.x.clamp(lo.x, hi.x), p.y.clamp(lo.y, hi.y))
    }
}

/// Dense row-major grid.
#[derive(Debug, Clone, PartialEq)]
pub struct Grid<T> {
    rows: usize,
    cols: usize,
    data: Vec<T>,
}

pub type ScalarGrid = Grid<f64>;
pub type Mask = Grid<bool>;

impl<T: Clone> Grid<T> {
    pub fn filled(rows: usize, cols: usize, value: T) -> Self {
        Grid {
            rows,
            cols,
            data: vec![value; rows * cols],
        }
    }

    pub fn map<U>(&self, f: impl Fn(&T) -> U) -> Grid<U> {
        Grid {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(f).collect(),
        }
    }
}

impl<T> Grid<T> {
    pub fn from_vec(rows: usize, cols: usize, data: Vec<T>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(Error::Data(format!(
                "grid data length {} does not match {rows}x{cols}",
                data.len()
            )));
        }
        Ok(Grid { rows, cols, data })
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(Cell) -> T) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for row in 0..rows {
            for col in 0..cols {
                data.push(f(Cell::new(row, col)));
            }
        }
        Grid { rows, cols, data }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn same_shape<U>(&self, other: &Grid<U>) -> bool {
        self.rows == other.rows && self.cols == other.cols
    }

    pub fn in_bounds(&self, row: isize, col: isize) -> bool {
        row >= 0 && col >= 0 && (row as usize) < self.rows && (col as usize) < self.cols
    }

    pub fn get(&self, row: isize, col: isize) -> Option<&T> {
        if self.in_bounds(row, col) {
            Some(&self.data[row as usize * self.cols + col as usize])
        } else {
            None
        }
    }

    pub fn at(&self, cell: Cell) -> &T {
        &self.data[cell.row * self.cols + cell.col]
    }

    pub fn at_mut(&mut self, cell: Cell) -> &mut T {
        &mut self.data[cell.row * self.cols + cell.col]
    }

    pub fn cell_at(&self, index: usize) -> Cell {
        Cell::new(index / self.cols, index % self.cols)
    }

    pub fn as_slice(&self) -> &[T] {
        &self.data
    }

    pub fn as_mut_slice(&mut self) -> &mut [T] {
        &mut self.data
    }

    pub fn into_vec(self) -> Vec<T> {
        self.data
    }

    pub fn iter(&self) -> std::slice::Iter<'_, T> {
        self.data.iter()
    }
}

impl<T> std::ops::Index<usize> for Grid<T> {
    type Output = T;

    fn index(&self, i: usize) -> &T {
        &self.data[i]
    }
}

impl<T> std::ops::IndexMut<usize> for Grid<T> {
    fn index_mut(&mut self, i: usize) -> &mut T {
        &mut self.data[i]
    }
}

impl Mask {
    pub fn count(&self) -> usize {
        self.data.iter().filter(|&&b| b).count()
    }

    /// True if every set cell of `self` is also set in `other`.
    pub fn is_subset_of(&self, other: &Mask) -> bool {
        self.same_shape(other) && self.data.iter().zip(&other.data).all(|(&a, &b)| !a || b)
    }

    pub fn not(&self) -> Mask {
        self.map(|&b| !b)
    }

    pub fn set_indices(&self) -> impl Iterator<Item = usize> + '_ {
        self.data
            .iter()
            .enumerate()
            .filter_map(|(i, &b)| b.then_some(i))
    }
}

/// Offsets `(drow, dcol)` of cells whose centers lie within `radius_cells`
/// of the origin cell center, row-major order.
///
/// A relative slack of 1e-9 absorbs round-off in radii computed from
/// ratios such as `(h - u) / L`.
pub fn disk_offsets(radius_cells: f64) -> Vec<(isize, isize)> {
    if !(radius_cells >= 0.0) {
        return Vec::new();
    }
    let r2 = radius_cells * radius_cells * (1.0 + 1e-9) + 1e-12;
    let reach = radius_cells.floor() as isize + 1;
    let mut out = Vec::new();
    for dr in -reach..=reach {
        for dc in -reach..=reach {
            if ((dr * dr + dc * dc) as f64) <= r2 {
                out.push((dr, dc));
            }
        }
    }
    out
}

pub(crate) const NEIGHBORS4: [(isize, isize); 4] = [(-1, 0), (0, -1), (0, 1), (1, 0)];

pub(crate) const NEIGHBORS8: [(isize, isize); 8] = [
    (-1, -1),
    (-1, 0),
    (-1, 1),
    (0, -1),
    (0, 1),
    (1, -1),
    (1, 0),
    (1, 1),
];

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_bad_dimensions() {
        assert!(WorkspaceSpec::new(0.0, 5.0, 0.5).is_err());
        assert!(WorkspaceSpec::new(5.0, 5.0, -1.0).is_err());
        // 3 cells wide
        let err = WorkspaceSpec::new(1.5, 10.0, 0.5).unwrap_err();
        assert!(matches!(err, Error::Config { ref field, .. } if field == "workspace.width_m"));
        assert!(WorkspaceSpec::new(4.0, 4.0, 0.5).is_ok());
    }

    #[test]
    fn world_cell_round_trip() {
        let spec = WorkspaceSpec::new(12.0, 8.0, 0.5).unwrap();
        assert_eq!(spec.cols(), 24);
        assert_eq!(spec.rows(), 16);
        for i in 0..spec.len() {
            let p = spec.center_of(i);
            assert_eq!(spec.index_of(p), Some(i));
        }
        let p = Point::new(3.1, 2.2);
        let c = spec.center(spec.cell_of(p).unwrap());
        assert!(c.dist(&p) < spec.resolution * std::f64::consts::FRAC_1_SQRT_2 + 1e-12);
        assert!((c.x - p.x).abs() <= 0.25 && (c.y - p.y).abs() <= 0.25);
        assert_eq!(spec.cell_of(Point::new(-0.1, 1.0)), None);
        assert_eq!(spec.cell_of(Point::new(12.0, 8.0)), Some(Cell::new(15, 23)));
    }

    #[test]
    fn disk_offsets_counts() {
        assert_eq!(disk_offsets(0.0), vec![(0, 0)]);
        assert_eq!(disk_offsets(1.0).len(), 5);
        assert_eq!(disk_offsets(2.0).len(), 13);
        // radius computed as (0.8 - 0.5) / 0.1 / 0.5, slightly below 6.0 in floating point
        assert_eq!(disk_offsets((0.8 - 0.5) / 0.1 / 0.5).len(), 113);
        assert!(disk_offsets(-1.0).is_empty());
    }

    #[test]
    fn mask_subset() {
        let mut a = Mask::filled(3, 3, false);
        let mut b = Mask::filled(3, 3, false);
        a[4] = true;
        assert!(!a.is_subset_of(&b));
        b[4] = true;
        b[0] = true;
        assert!(a.is_subset_of(&b));
        assert_eq!(b.set_indices().collect::<Vec<_>>(), vec![0, 4]);
    }
}
