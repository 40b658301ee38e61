//! Grayscale portable bitmaps (binary PGM) carrying the workspace geometry.
//!
//! One byte per cell, `round(value * 255)` after clamping to `[0, 1]`,
//! grid row 0 first. Comment lines in the header record the workspace and,
//! for terrain fields, the Lipschitz bound:
//!
//! ```text
//! P5
//! # workspace 12 12 0.5 0.25 0.25
//! # lipschitz_bound 0.503
//! 24 24
//! 255
//! ```

use std::io::{Read, Write};

use crate::error::{Error, Result};
use crate::grid::{Mask, Point, ScalarGrid, WorkspaceSpec};
use crate::terrain::SlipField;

/// A decoded bitmap with whatever metadata its header carried.
#[derive(Debug, Clone, PartialEq)]
pub struct Bitmap {
    pub spec: Option<WorkspaceSpec>,
    pub lipschitz_bound: Option<f64>,
    pub grid: ScalarGrid,
}

fn to_byte(v: f64) -> u8 {
    if v.is_nan() {
        return 0;
    }
    (v.clamp(0.0, 1.0) * 255.0).round() as u8
}

fn header(spec: &WorkspaceSpec, lipschitz: Option<f64>, rows: usize, cols: usize) -> String {
    let mut h = format!(
        "P5\n# workspace {} {} {} {} {}\n",
        spec.width_m, spec.height_m, spec.resolution, spec.origin.x, spec.origin.y
    );
    if let Some(l) = lipschitz {
        h.push_str(&format!("# lipschitz_bound {l}\n"));
    }
    h.push_str(&format!("{cols} {rows}\n255\n"));
    h
}

fn write_bytes(out: &mut impl Write, head: &str, bytes: &[u8]) -> Result<()> {
    out.write_all(head.as_bytes())?;
    out.write_all(bytes)?;
    Ok(())
}

/// Write a scalar grid; values are clamped to `[0, 1]`.
pub fn write_scalar(out: &mut impl Write, spec: &WorkspaceSpec, grid: &ScalarGrid) -> Result<()> {
    let bytes: Vec<u8> = grid.iter().map(|&v| to_byte(v)).collect();
    write_bytes(out, &header(spec, None, grid.rows(), grid.cols()), &bytes)
}

/// Write a mask as 0 / 255.
pub fn write_mask(out: &mut impl Write, spec: &WorkspaceSpec, mask: &Mask) -> Result<()> {
    let bytes: Vec<u8> = mask.iter().map(|&b| if b { 255 } else { 0 }).collect();
    write_bytes(out, &header(spec, None, mask.rows(), mask.cols()), &bytes)
}

pub fn write_field(out: &mut impl Write, field: &SlipField) -> Result<()> {
    let bytes: Vec<u8> = field.grid.iter().map(|&v| to_byte(v)).collect();
    let head = header(&field.spec, Some(field.lipschitz_bound), field.grid.rows(), field.grid.cols());
    write_bytes(out, &head, &bytes)
}

struct Cursor<'a> {
    data: &'a [u8],
    pos: usize,
    comments: Vec<String>,
}

impl Cursor<'_> {
    fn skip_space_and_comments(&mut self) {
        while self.pos < self.data.len() {
            let c = self.data[self.pos];
            if c == b'#' {
                let end = self.data[self.pos..]
                    .iter()
                    .position(|&b| b == b'\n')
                    .map_or(self.data.len(), |p| self.pos + p);
                self.comments
                    .push(String::from_utf8_lossy(&self.data[self.pos + 1..end]).trim().to_string());
                self.pos = end;
            } else if c.is_ascii_whitespace() {
                self.pos += 1;
            } else {
                break;
            }
        }
    }

    fn token(&mut self) -> Result<&str> {
        self.skip_space_and_comments();
        let start = self.pos;
        while self.pos < self.data.len() && !self.data[self.pos].is_ascii_whitespace() {
            self.pos += 1;
        }
        if start == self.pos {
            return Err(Error::Data("truncated bitmap header".into()));
        }
        std::str::from_utf8(&self.data[start..self.pos]).map_err(|_| Error::Data("non-ASCII bitmap header".into()))
    }

    fn number(&mut self, what: &str) -> Result<usize> {
        let t = self.token()?;
        t.parse().map_err(|_| Error::Data(format!("bad {what} in bitmap header: {t:?}")))
    }
}

fn parse_metadata(comments: &[String]) -> Result<(Option<WorkspaceSpec>, Option<f64>)> {
    let mut spec = None;
    let mut lipschitz = None;
    for c in comments {
        let mut parts = c.split_whitespace();
        match parts.next() {
            Some("workspace") => {
                let v: Vec<f64> = parts
                    .map(str::parse)
                    .collect::<std::result::Result<_, _>>()
                    .map_err(|_| Error::Data(format!("bad workspace comment {c:?}")))?;
                if v.len() != 5 {
                    return Err(Error::Data(format!("bad workspace comment {c:?}")));
                }
                spec = Some(WorkspaceSpec {
                    width_m: v[0],
                    height_m: v[1],
                    resolution: v[2],
                    origin: Point::new(v[3], v[4]),
                });
            }
            Some("lipschitz_bound") => {
                lipschitz = parts.next().and_then(|s| s.parse().ok());
                if lipschitz.is_none() {
                    return Err(Error::Data(format!("bad lipschitz comment {c:?}")));
                }
            }
            _ => {}
        }
    }
    Ok((spec, lipschitz))
}

/// Decode a binary PGM with an 8-bit maxval.
pub fn read(input: &mut impl Read) -> Result<Bitmap> {
    let mut data = Vec::new();
    input.read_to_end(&mut data)?;
    let mut cur = Cursor {
        data: &data,
        pos: 0,
        comments: Vec::new(),
    };
    if cur.token()? != "P5" {
        return Err(Error::Data("not a binary PGM (P5)".into()));
    }
    let cols = cur.number("width")?;
    let rows = cur.number("height")?;
    let maxval = cur.number("maxval")?;
    if maxval != 255 {
        return Err(Error::Data(format!("unsupported maxval {maxval}")));
    }
    // Exactly one whitespace byte separates the header from the raster.
    let start = cur.pos + 1;
    let raster = data
        .get(start..start + rows * cols)
        .ok_or_else(|| Error::Data("bitmap raster is truncated".into()))?;
    let grid = ScalarGrid::from_vec(rows, cols, raster.iter().map(|&b| b as f64 / 255.0).collect())?;
    let (spec, lipschitz_bound) = parse_metadata(&cur.comments)?;
    if let Some(s) = &spec {
        if s.rows() != rows || s.cols() != cols {
            return Err(Error::Data(format!(
                "header workspace is {}x{} cells but the raster is {rows}x{cols}",
                s.rows(),
                s.cols()
            )));
        }
    }
    Ok(Bitmap {
        spec,
        lipschitz_bound,
        grid,
    })
}

/// Load a terrain field. Both the workspace and the Lipschitz bound must be present.
pub fn read_field(input: &mut impl Read) -> Result<SlipField> {
    let b = read(input)?;
    let spec = b.spec.ok_or_else(|| Error::Data("bitmap has no workspace header".into()))?;
    let lipschitz_bound = b
        .lipschitz_bound
        .ok_or_else(|| Error::Data("bitmap has no lipschitz_bound header".into()))?;
    Ok(SlipField {
        spec,
        grid: b.grid,
        descriptor: None,
        lipschitz_bound,
    })
}

pub fn read_mask(input: &mut impl Read) -> Result<(Option<WorkspaceSpec>, Mask)> {
    let b = read(input)?;
    Ok((b.spec, b.grid.map(|&v| v >= 0.5)))
}
