//! Composite map images: terrain colormap, certified-set outline,
//! trajectory and markers, written as binary PPM. North is up.

use std::io::Write;

use crate::error::Result;
use crate::frontier::trace_borders;
use crate::grid::{Mask, Point, ScalarGrid, WorkspaceSpec, NEIGHBORS4};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RgbImage {
    pub width: usize,
    pub height: usize,
    pub data: Vec<u8>,
}

impl RgbImage {
    pub fn new(width: usize, height: usize) -> Self {
        RgbImage {
            width,
            height,
            data: vec![0; width * height * 3],
        }
    }

    pub fn put(&mut self, x: i64, y: i64, rgb: [u8; 3]) {
        if x < 0 || y < 0 || x as usize >= self.width || y as usize >= self.height {
            return;
        }
        let i = (y as usize * self.width + x as usize) * 3;
        self.data[i..i + 3].copy_from_slice(&rgb);
    }

    pub fn pixel(&self, x: usize, y: usize) -> [u8; 3] {
        let i = (y * self.width + x) * 3;
        [self.data[i], self.data[i + 1], self.data[i + 2]]
    }

    pub fn write_ppm(&self, out: &mut impl Write) -> Result<()> {
        write!(out, "P6\n{} {}\n255\n", self.width, self.height)?;
        out.write_all(&self.data)?;
        Ok(())
    }
}

pub const OUTLINE: [u8; 3] = [0, 0, 0];
pub const PATH: [u8; 3] = [20, 60, 230];
pub const START: [u8; 3] = [0, 200, 0];
pub const GOAL: [u8; 3] = [230, 0, 0];

/// Green at zero slip through yellow to red at one.
pub fn slip_color(v: f64) -> [u8; 3] {
    let v = if v.is_finite() { v.clamp(0.0, 1.0) } else { 0.0 };
    let (r, g) = if v < 0.5 { (2.0 * v, 1.0) } else { (1.0, 2.0 * (1.0 - v)) };
    [(r * 235.0) as u8 + 20, (g * 200.0) as u8 + 30, 60]
}

pub struct Overlay<'a> {
    pub safe: Option<&'a Mask>,
    pub trajectory: &'a [Point],
    pub start: Option<Point>,
    pub goal: Option<Point>,
}

/// Render `field` with `scale` pixels per cell and draw `overlay` on top.
/// Cells outside the certified set are darkened.
pub fn compose(spec: &WorkspaceSpec, field: &ScalarGrid, overlay: &Overlay, scale: usize) -> RgbImage {
    let scale = scale.max(1);
    let (rows, cols) = (field.rows(), field.cols());
    let mut img = RgbImage::new(cols * scale, rows * scale);
    let flip = |py: i64| (rows * scale) as i64 - 1 - py;
    for r in 0..rows {
        for c in 0..cols {
            let i = r * cols + c;
            let mut rgb = slip_color(field[i]);
            if overlay.safe.is_some_and(|m| !m[i]) {
                rgb = rgb.map(|ch| (ch as f64 * 0.55) as u8);
            }
            for dy in 0..scale {
                for dx in 0..scale {
                    img.put((c * scale + dx) as i64, flip((r * scale + dy) as i64), rgb);
                }
            }
        }
    }
    if let Some(safe) = overlay.safe {
        draw_outline(&mut img, safe, scale, &flip);
    }
    let to_px = |p: Point| {
        let (fc, fr) = spec.to_cell_coords(p);
        let x = ((fc + 0.5) * scale as f64).floor() as i64;
        let y = ((fr + 0.5) * scale as f64).floor() as i64;
        (x, flip(y))
    };
    for w in overlay.trajectory.windows(2) {
        let (a, b) = (to_px(w[0]), to_px(w[1]));
        line(&mut img, a, b, PATH);
    }
    let marker = (scale as i64 / 2).max(2);
    if let Some(s) = overlay.start {
        square(&mut img, to_px(s), marker, START);
    }
    if let Some(g) = overlay.goal {
        square(&mut img, to_px(g), marker, GOAL);
    }
    img
}

/// Outline every border cell of the certified set on the sides that face
/// uncertified cells or the workspace edge.
fn draw_outline(img: &mut RgbImage, safe: &Mask, scale: usize, flip: &impl Fn(i64) -> i64) {
    let s = scale as i64;
    for contour in trace_borders(safe) {
        for &i in &contour.cells {
            let cell = safe.cell_at(i);
            let (r, c) = (cell.row as i64, cell.col as i64);
            for (dr, dc) in NEIGHBORS4 {
                if safe.get((r + dr as i64) as isize, (c + dc as i64) as isize) == Some(&true) {
                    continue;
                }
                for k in 0..s {
                    let (x, y) = match (dr, dc) {
                        (1, 0) => (c * s + k, r * s + s - 1),
                        (-1, 0) => (c * s + k, r * s),
                        (0, 1) => (c * s + s - 1, r * s + k),
                        _ => (c * s, r * s + k),
                    };
                    img.put(x, flip(y), OUTLINE);
                }
            }
        }
    }
}

fn line(img: &mut RgbImage, (mut x0, mut y0): (i64, i64), (x1, y1): (i64, i64), rgb: [u8; 3]) {
    let dx = (x1 - x0).abs();
    let dy = -(y1 - y0).abs();
    let sx = if x0 < x1 { 1 } else { -1 };
    let sy = if y0 < y1 { 1 } else { -1 };
    let mut err = dx + dy;
    loop {
        img.put(x0, y0, rgb);
        if x0 == x1 && y0 == y1 {
            return;
        }
        let e2 = 2 * err;
        if e2 >= dy {
            err += dy;
            x0 += sx;
        }
        if e2 <= dx {
            err += dx;
            y0 += sy;
        }
    }
}

fn square(img: &mut RgbImage, (x, y): (i64, i64), half: i64, rgb: [u8; 3]) {
    for dy in -half..=half {
        for dx in -half..=half {
            img.put(x + dx, y + dy, rgb);
        }
    }
}
