//! Independent reference implementations used by the integration tests.
//! Each one is written the slow, obvious way.

#![allow(dead_code)]

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use slipnav::frontier::{expansion_probability, FrontierCandidate};
use slipnav::gp::KernelParams;
use slipnav::{Mask, Point, ScalarGrid, WorkspaceSpec};

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Gauss-Jordan inverse with partial pivoting.
pub fn dense_inverse(a: &[f64], n: usize) -> Vec<f64> {
    let w = 2 * n;
    let mut m = vec![0.0; n * w];
    for i in 0..n {
        m[i * w..i * w + n].copy_from_slice(&a[i * n..(i + 1) * n]);
        m[i * w + n + i] = 1.0;
    }
    for col in 0..n {
        let pivot = (col..n)
            .max_by(|&x, &y| m[x * w + col].abs().total_cmp(&m[y * w + col].abs()))
            .unwrap();
        if pivot != col {
            for k in 0..w {
                m.swap(pivot * w + k, col * w + k);
            }
        }
        let p = m[col * w + col];
        for k in 0..w {
            m[col * w + k] /= p;
        }
        for r in 0..n {
            if r != col {
                let f = m[r * w + col];
                if f != 0.0 {
                    for k in 0..w {
                        m[r * w + k] -= f * m[col * w + k];
                    }
                }
            }
        }
    }
    let mut inv = vec![0.0; n * n];
    for i in 0..n {
        inv[i * n..(i + 1) * n].copy_from_slice(&m[i * w + n..(i + 1) * w]);
    }
    inv
}

fn rbf(a: Point, b: Point, p: &KernelParams) -> f64 {
    let d2 = (a.x - b.x).powi(2) + (a.y - b.y).powi(2);
    p.signal_std.powi(2) * (-d2 / (2.0 * p.length_scale.powi(2))).exp()
}

/// Posterior mean and std from the explicit inverse of
/// `K + (noise^2 + jitter) I`.
pub fn dense_gp_predict(
    xs: &[Point],
    ys: &[f64],
    params: &KernelParams,
    prior_mean: f64,
    jitter: f64,
    queries: &[Point],
) -> (Vec<f64>, Vec<f64>) {
    let n = xs.len();
    let mut k = vec![0.0; n * n];
    for i in 0..n {
        for j in 0..n {
            k[i * n + j] = rbf(xs[i], xs[j], params);
        }
        k[i * n + i] += params.noise_std.powi(2) + jitter;
    }
    let inv = dense_inverse(&k, n);
    let mut means = Vec::new();
    let mut stds = Vec::new();
    for &q in queries {
        let ks: Vec<f64> = xs.iter().map(|&x| rbf(x, q, params)).collect();
        let mut mean = prior_mean;
        let mut explained = 0.0;
        for i in 0..n {
            for j in 0..n {
                mean += ks[i] * inv[i * n + j] * (ys[j] - prior_mean);
                explained += ks[i] * inv[i * n + j] * ks[j];
            }
        }
        means.push(mean);
        stds.push((params.signal_std.powi(2) - explained).max(0.0).sqrt());
    }
    (means, stds)
}

/// Safe cells with at least one in-bounds 4-neighbor that is unsafe.
pub fn frontier_scan(mask: &Mask) -> Vec<usize> {
    let (rows, cols) = (mask.rows() as isize, mask.cols() as isize);
    let mut out = Vec::new();
    for r in 0..rows {
        for c in 0..cols {
            if !mask[(r * cols + c) as usize] {
                continue;
            }
            let touches = [(-1, 0), (1, 0), (0, -1), (0, 1)].iter().any(|&(dr, dc)| {
                let (rr, cc) = (r + dr, c + dc);
                rr >= 0 && cc >= 0 && rr < rows && cc < cols && !mask[(rr * cols + cc) as usize]
            });
            if touches {
                out.push((r * cols + c) as usize);
            }
        }
    }
    out
}

/// Indices not strictly dominated by any other point (both maximized).
pub fn pareto_brute(points: &[(f64, f64)]) -> Vec<usize> {
    (0..points.len())
        .filter(|&i| {
            !points.iter().any(|q| {
                let p = points[i];
                q.0 >= p.0 && q.1 >= p.1 && (q.0 > p.0 || q.1 > p.1)
            })
        })
        .collect()
}

/// Uniform-cost search with the same move set as the planner:
/// 8-connected, diagonal moves need both side cells free.
pub fn dijkstra_cost(blocked: &Mask, from: usize, to: usize) -> Option<f64> {
    let (rows, cols) = (blocked.rows() as isize, blocked.cols() as isize);
    let n = blocked.len();
    let mut dist = vec![f64::INFINITY; n];
    let mut done = vec![false; n];
    dist[from] = 0.0;
    loop {
        let mut best: Option<usize> = None;
        for i in 0..n {
            if !done[i] && dist[i].is_finite() && best.is_none_or(|b| dist[i] < dist[b]) {
                best = Some(i);
            }
        }
        let u = best?;
        if u == to {
            return Some(dist[u]);
        }
        done[u] = true;
        let (r, c) = ((u as isize) / cols, (u as isize) % cols);
        let free = |r: isize, c: isize| r >= 0 && c >= 0 && r < rows && c < cols && !blocked[(r * cols + c) as usize];
        for dr in -1..=1 {
            for dc in -1..=1 {
                if (dr, dc) == (0, 0) || !free(r + dr, c + dc) {
                    continue;
                }
                if dr != 0 && dc != 0 && (!free(r + dr, c) || !free(r, c + dc)) {
                    continue;
                }
                let v = ((r + dr) * cols + c + dc) as usize;
                let step = if dr != 0 && dc != 0 { 2f64.sqrt() } else { 1.0 };
                if dist[u] + step < dist[v] {
                    dist[v] = dist[u] + step;
                }
            }
        }
    }
}

/// Blocked iff unsafe or an in-bounds unsafe cell lies within `radius`
/// cells (center distance).
pub fn erosion_brute(safe: &Mask, radius: usize) -> Mask {
    let (rows, cols) = (safe.rows() as isize, safe.cols() as isize);
    let r2 = (radius * radius) as isize;
    Mask::from_fn(safe.rows(), safe.cols(), |cell| {
        let (r0, c0) = (cell.row as isize, cell.col as isize);
        if !safe[(r0 * cols + c0) as usize] {
            return true;
        }
        (0..rows).any(|r| {
            (0..cols).any(|c| !safe[(r * cols + c) as usize] && (r - r0).pow(2) + (c - c0).pow(2) <= r2)
        })
    })
}

/// Uncertified cells `j` with `L * |x_i - x_j| <= h - lower(x_i)`, over the
/// whole grid.
pub fn expansion_scan(spec: &WorkspaceSpec, cell: usize, lower: &ScalarGrid, safe: &Mask, l: f64, h: f64) -> usize {
    let slack = h - lower[cell];
    if slack < 0.0 {
        return 0;
    }
    let x = spec.center_of(cell);
    (0..spec.len())
        .filter(|&j| !safe[j] && l * x.dist(&spec.center_of(j)) <= slack * (1.0 + 1e-9) + 1e-12)
        .count()
}

/// Random mask of the given density.
pub fn random_mask(rng: &mut impl Rng, rows: usize, cols: usize, density: f64) -> Mask {
    Mask::from_fn(rows, cols, |_| rng.random_bool(density))
}

/// A square annulus placed away from the border: one outer and one hole contour.
pub fn ring_mask(rows: usize, cols: usize, top: usize, left: usize, size: usize, thickness: usize) -> Mask {
    Mask::from_fn(rows, cols, |c| {
        let (r, k) = (c.row as isize - top as isize, c.col as isize - left as isize);
        let s = size as isize;
        let t = thickness as isize;
        let inside = r >= 0 && k >= 0 && r < s && k < s;
        let hole = r >= t && k >= t && r < s - t && k < s - t;
        inside && !hole
    })
}

/// Candidate set with random expansion counts and goal values.
pub fn random_candidates(rng: &mut impl Rng, n: usize, ties: bool) -> Vec<FrontierCandidate> {
    let mut cells: Vec<usize> = (0..n * 4).collect();
    for i in (1..cells.len()).rev() {
        cells.swap(i, rng.random_range(0..=i));
    }
    (0..n)
        .map(|i| {
            let g_count = if ties { rng.random_range(0..4) } else { rng.random_range(0..60) };
            let expansion_prob = expansion_probability(g_count, 0.1);
            let goal_value = if ties {
                [0.25, 0.5, 0.75][rng.random_range(0..3)]
            } else {
                rng.random_range(1e-3..1.0)
            };
            FrontierCandidate {
                cell: cells[i],
                location: Point::new(i as f64, 0.0),
                g_count,
                expansion_prob,
                goal_value,
                overall: expansion_prob * goal_value,
                component: 1,
            }
        })
        .collect()
}

/// Distance from `p` to the polyline through `pts`.
pub fn dist_to_polyline(p: Point, pts: &[Point]) -> f64 {
    if pts.len() == 1 {
        return p.dist(&pts[0]);
    }
    pts.windows(2)
        .map(|w| {
            let (a, b) = (w[0], w[1]);
            let (dx, dy) = (b.x - a.x, b.y - a.y);
            let len2 = dx * dx + dy * dy;
            let t = if len2 == 0.0 {
                0.0
            } else {
                (((p.x - a.x) * dx + (p.y - a.y) * dy) / len2).clamp(0.0, 1.0)
            };
            p.dist(&Point::new(a.x + t * dx, a.y + t * dy))
        })
        .fold(f64::INFINITY, f64::min)
}
