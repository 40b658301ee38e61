//! Synthetic ground-truth slip fields and noisy point measurements.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gp::cholesky_in_place;
use crate::grid::{Mask, Point, ScalarGrid, WorkspaceSpec, NEIGHBORS8};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FieldKind {
    /// Baseline plus a few low-frequency Gaussian bumps.
    Smooth,
    /// Smooth baseline plus steep sigmoid-edged patches.
    Heterogeneous,
    /// Exact draw from the RBF-kernel GP prior on the grid.
    GpPrior,
}

/// A hand-placed terrain feature, added on top of the random ones.
///
/// Centers may be randomly displaced per seed by up to `jitter` meters in
/// each axis and rotated by up to `angle_jitter_deg`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum Feature {
    /// Anisotropic Gaussian bump.
    Bump {
        center: Point,
        sigma_major: f64,
        sigma_minor: f64,
        #[serde(default)]
        angle_deg: f64,
        amplitude: f64,
        #[serde(default)]
        jitter: [f64; 2],
        #[serde(default)]
        angle_jitter_deg: f64,
    },
    /// Elliptical patch with a sigmoid edge.
    Patch {
        center: Point,
        semi_major: f64,
        semi_minor: f64,
        #[serde(default)]
        angle_deg: f64,
        level: f64,
        steepness: f64,
        #[serde(default)]
        jitter: [f64; 2],
        #[serde(default)]
        angle_jitter_deg: f64,
    },
}

/// Generator controls. Unused fields are ignored by kinds that do not need them.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct FieldParams {
    /// Baseline slip; also the prior mean of `gp_prior` draws.
    pub base: f64,
    /// Maximum absolute amplitude of random bumps.
    pub amplitude: f64,
    pub num_bumps: usize,
    /// Standard deviation (m) of random bumps.
    pub bump_length_scale: f64,
    pub num_patches: usize,
    /// Semi-axis scale (m) of random patches.
    pub patch_radius: f64,
    /// Slip added at the core of a random patch.
    pub patch_level: f64,
    /// Sigmoid steepness (1/m) of patch edges.
    pub steepness: f64,
    /// `gp_prior` signal standard deviation.
    pub signal_std: f64,
    /// `gp_prior` kernel length scale (m).
    pub length_scale: f64,
    pub features: Vec<Feature>,
}

impl Default for FieldParams {
    fn default() -> Self {
        FieldParams {
            base: 0.2,
            amplitude: 0.2,
            num_bumps: 3,
            bump_length_scale: 2.0,
            num_patches: 0,
            patch_radius: 1.5,
            patch_level: 0.6,
            steepness: 3.0,
            signal_std: 0.25,
            length_scale: 1.5,
            features: Vec::new(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FieldDescriptor {
    pub kind: FieldKind,
    pub params: FieldParams,
    pub seed: u64,
}

/// Ground-truth slip ratio over the workspace.
#[derive(Debug, Clone, PartialEq)]
pub struct SlipField {
    pub spec: WorkspaceSpec,
    pub grid: ScalarGrid,
    /// `None` for fields loaded from a bitmap.
    pub descriptor: Option<FieldDescriptor>,
    /// Upper bound on the slope of the field, slip per meter.
    pub lipschitz_bound: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NoisySample {
    pub location: Point,
    pub value: f64,
    pub noise_std: f64,
}

/// Concrete feature after per-seed jitter has been applied.
#[derive(Debug, Clone, Copy)]
enum Shape {
    Bump {
        center: Point,
        cos: f64,
        sin: f64,
        s_major: f64,
        s_minor: f64,
        amplitude: f64,
    },
    Patch {
        center: Point,
        cos: f64,
        sin: f64,
        a: f64,
        b: f64,
        level: f64,
        steepness: f64,
    },
}

impl Shape {
    fn eval(&self, p: Point) -> f64 {
        match *self {
            Shape::Bump {
                center,
                cos,
                sin,
                s_major,
                s_minor,
                amplitude,
            } => {
                let (u, v) = rotate(p, center, cos, sin);
                let q = (u / s_major).powi(2) + (v / s_minor).powi(2);
                amplitude * (-0.5 * q).exp()
            }
            Shape::Patch {
                center,
                cos,
                sin,
                a,
                b,
                level,
                steepness,
            } => {
                let (u, v) = rotate(p, center, cos, sin);
                let d = ((u / a).powi(2) + (v / b).powi(2)).sqrt();
                let arg = steepness * a.min(b) * (1.0 - d);
                level / (1.0 + (-arg).exp())
            }
        }
    }
}

fn rotate(p: Point, c: Point, cos: f64, sin: f64) -> (f64, f64) {
    let dx = p.x - c.x;
    let dy = p.y - c.y;
    (cos * dx + sin * dy, -sin * dx + cos * dy)
}

fn realize(feature: &Feature, rng: &mut ChaCha8Rng) -> Shape {
    let mut jittered = |center: Point, jitter: [f64; 2], angle: f64, angle_jitter: f64| {
        let jx = if jitter[0] > 0.0 { rng.random_range(-jitter[0]..=jitter[0]) } else { 0.0 };
        let jy = if jitter[1] > 0.0 { rng.random_range(-jitter[1]..=jitter[1]) } else { 0.0 };
        let ja = if angle_jitter > 0.0 {
            rng.random_range(-angle_jitter..=angle_jitter)
        } else {
            0.0
        };
        let theta = (angle + ja).to_radians();
        (Point::new(center.x + jx, center.y + jy), theta.cos(), theta.sin())
    };
    match *feature {
        Feature::Bump {
            center,
            sigma_major,
            sigma_minor,
            angle_deg,
            amplitude,
            jitter,
            angle_jitter_deg,
        } => {
            let (center, cos, sin) = jittered(center, jitter, angle_deg, angle_jitter_deg);
            Shape::Bump {
                center,
                cos,
                sin,
                s_major: sigma_major,
                s_minor: sigma_minor,
                amplitude,
            }
        }
        Feature::Patch {
            center,
            semi_major,
            semi_minor,
            angle_deg,
            level,
            steepness,
            jitter,
            angle_jitter_deg,
        } => {
            let (center, cos, sin) = jittered(center, jitter, angle_deg, angle_jitter_deg);
            Shape::Patch {
                center,
                cos,
                sin,
                a: semi_major,
                b: semi_minor,
                level,
                steepness,
            }
        }
    }
}

fn validate_params(kind: FieldKind, p: &FieldParams) -> Result<()> {
    let positive = |name: &str, v: f64| -> Result<()> {
        if v.is_finite() && v > 0.0 {
            Ok(())
        } else {
            Err(Error::config(format!("environment.params.{name}"), format!("must be positive, got {v}")))
        }
    };
    if !p.base.is_finite() {
        return Err(Error::config("environment.params.base", "must be finite"));
    }
    match kind {
        FieldKind::Smooth | FieldKind::Heterogeneous => {
            if p.num_bumps > 0 {
                positive("bump_length_scale", p.bump_length_scale)?;
            }
            if kind == FieldKind::Heterogeneous && p.num_patches > 0 {
                positive("patch_radius", p.patch_radius)?;
                positive("steepness", p.steepness)?;
            }
            for f in &p.features {
                match *f {
                    Feature::Bump { sigma_major, sigma_minor, .. } => {
                        positive("features.sigma_major", sigma_major)?;
                        positive("features.sigma_minor", sigma_minor)?;
                    }
                    Feature::Patch { semi_major, semi_minor, steepness, .. } => {
                        positive("features.semi_major", semi_major)?;
                        positive("features.semi_minor", semi_minor)?;
                        positive("features.steepness", steepness)?;
                    }
                }
            }
        }
        FieldKind::GpPrior => {
            positive("signal_std", p.signal_std)?;
            positive("length_scale", p.length_scale)?;
        }
    }
    Ok(())
}

/// Generate a ground-truth slip field. Deterministic in `(kind, params, seed)`.
pub fn generate_field(
    spec: &WorkspaceSpec,
    kind: FieldKind,
    params: &FieldParams,
    seed: u64,
) -> Result<SlipField> {
    spec.validate()?;
    validate_params(kind, params)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (grid, lipschitz_bound) = match kind {
        FieldKind::Smooth | FieldKind::Heterogeneous => {
            let shapes = random_shapes(spec, kind, params, &mut rng);
            let f = |p: Point| -> f64 {
                (params.base + shapes.iter().map(|s| s.eval(p)).sum::<f64>()).clamp(0.0, 1.0)
            };
            let grid = ScalarGrid::from_fn(spec.rows(), spec.cols(), |c| f(spec.center(c)));
            let bound = neighbor_slope_max(&grid, spec.resolution).max(fine_slope_max(spec, &f));
            (grid, bound)
        }
        FieldKind::GpPrior => {
            let grid = gp_prior_draw(spec, params, &mut rng)?;
            let bound = neighbor_slope_max(&grid, spec.resolution);
            (grid, bound)
        }
    };
    Ok(SlipField {
        spec: *spec,
        grid,
        descriptor: Some(FieldDescriptor {
            kind,
            params: params.clone(),
            seed,
        }),
        lipschitz_bound,
    })
}

fn random_shapes(
    spec: &WorkspaceSpec,
    kind: FieldKind,
    params: &FieldParams,
    rng: &mut ChaCha8Rng,
) -> Vec<Shape> {
    let (lo, hi) = spec.bounds();
    let mut shapes = Vec::new();
    for _ in 0..params.num_bumps {
        let center = Point::new(rng.random_range(lo.x..hi.x), rng.random_range(lo.y..hi.y));
        let amplitude = if params.amplitude > 0.0 {
            rng.random_range(-params.amplitude..=params.amplitude)
        } else {
            0.0
        };
        let stretch: f64 = rng.random_range(1.0..1.5);
        let theta: f64 = rng.random_range(0.0..std::f64::consts::PI);
        shapes.push(Shape::Bump {
            center,
            cos: theta.cos(),
            sin: theta.sin(),
            s_major: params.bump_length_scale * stretch,
            s_minor: params.bump_length_scale,
            amplitude,
        });
    }
    if kind == FieldKind::Heterogeneous {
        for _ in 0..params.num_patches {
            let center = Point::new(rng.random_range(lo.x..hi.x), rng.random_range(lo.y..hi.y));
            let a = params.patch_radius * rng.random_range(0.8..1.6);
            let b = params.patch_radius * rng.random_range(0.5..1.0);
            let theta: f64 = rng.random_range(0.0..std::f64::consts::PI);
            shapes.push(Shape::Patch {
                center,
                cos: theta.cos(),
                sin: theta.sin(),
                a,
                b,
                level: params.patch_level,
                steepness: params.steepness,
            });
        }
    }
    for f in &params.features {
        shapes.push(realize(f, rng));
    }
    shapes
}

/// Largest `|df| / distance` over all 8-neighbor cell pairs.
pub fn neighbor_slope_max(grid: &ScalarGrid, resolution: f64) -> f64 {
    let mut best = 0.0f64;
    for r in 0..grid.rows() as isize {
        for c in 0..grid.cols() as isize {
            let v = grid.get(r, c).copied().unwrap_or(0.0);
            for &(dr, dc) in &NEIGHBORS8 {
                if let Some(&w) = grid.get(r + dr, c + dc) {
                    let d = resolution * ((dr * dr + dc * dc) as f64).sqrt();
                    best = best.max((v - w).abs() / d);
                }
            }
        }
    }
    best
}

/// Slope estimate of an analytic field on a lattice eight times finer than the grid.
fn fine_slope_max(spec: &WorkspaceSpec, f: &impl Fn(Point) -> f64) -> f64 {
    const REFINE: usize = 8;
    let step = spec.resolution / REFINE as f64;
    let (lo, _) = spec.bounds();
    let nx = spec.cols() * REFINE + 1;
    let ny = spec.rows() * REFINE + 1;
    let mut prev: Vec<f64> = Vec::with_capacity(nx);
    let mut cur: Vec<f64> = Vec::with_capacity(nx);
    let mut best = 0.0f64;
    let diag = step * std::f64::consts::SQRT_2;
    for j in 0..ny {
        cur.clear();
        let y = lo.y + j as f64 * step;
        cur.extend((0..nx).map(|i| f(Point::new(lo.x + i as f64 * step, y))));
        for i in 0..nx {
            if i > 0 {
                best = best.max((cur[i] - cur[i - 1]).abs() / step);
            }
            if j > 0 {
                best = best.max((cur[i] - prev[i]).abs() / step);
                if i > 0 {
                    best = best.max((cur[i] - prev[i - 1]).abs() / diag);
                }
                if i + 1 < nx {
                    best = best.max((cur[i] - prev[i + 1]).abs() / diag);
                }
            }
        }
        std::mem::swap(&mut prev, &mut cur);
    }
    best
}

/// Exact prior draw using the separability of the RBF kernel on a lattice:
/// `K = sigma_f^2 (K_rows (x) K_cols)`, so `F = sigma_f L_rows Z L_cols^T`.
fn gp_prior_draw(spec: &WorkspaceSpec, params: &FieldParams, rng: &mut ChaCha8Rng) -> Result<ScalarGrid> {
    let rows = spec.rows();
    let cols = spec.cols();
    let l_rows = axis_factor(rows, spec.resolution, params.length_scale)?;
    let l_cols = axis_factor(cols, spec.resolution, params.length_scale)?;
    let z: Vec<f64> = (0..rows * cols).map(|_| StandardNormal.sample(rng)).collect();
    // tmp = L_rows Z
    let mut tmp = vec![0.0; rows * cols];
    for i in 0..rows {
        for k in 0..=i {
            let l = l_rows[i * rows + k];
            for j in 0..cols {
                tmp[i * cols + j] += l * z[k * cols + j];
            }
        }
    }
    // F = tmp L_cols^T
    let mut out = vec![0.0; rows * cols];
    for i in 0..rows {
        for j in 0..cols {
            let mut acc = 0.0;
            for k in 0..=j {
                acc += tmp[i * cols + k] * l_cols[j * cols + k];
            }
            out[i * cols + j] = (params.base + params.signal_std * acc).clamp(0.0, 1.0);
        }
    }
    ScalarGrid::from_vec(rows, cols, out)
}

fn axis_factor(n: usize, resolution: f64, length_scale: f64) -> Result<Vec<f64>> {
    let mut k = vec![0.0; n * n];
    for i in 0..n {
        for j in 0..n {
            let d = (i as f64 - j as f64) * resolution;
            k[i * n + j] = (-d * d / (2.0 * length_scale * length_scale)).exp();
        }
    }
    let mut jitter = 1e-10;
    loop {
        let mut m = k.clone();
        for i in 0..n {
            m[i * n + i] += jitter;
        }
        if cholesky_in_place(&mut m, n) {
            return Ok(m);
        }
        jitter *= 10.0;
        if jitter > 1e-4 {
            return Err(Error::Numeric("prior covariance factorization failed".into()));
        }
    }
}

/// Bilinear interpolation of the field at `p`. Points in the half-cell border
/// take the value of the nearest row/column of centers.
pub fn interpolate(field: &SlipField, p: Point) -> Result<f64> {
    if !field.spec.contains(p) {
        return Err(Error::Domain(format!("location ({}, {}) outside workspace", p.x, p.y)));
    }
    let grid = &field.grid;
    let (cx, cy) = field.spec.to_cell_coords(p);
    let cx = cx.clamp(0.0, (grid.cols() - 1) as f64);
    let cy = cy.clamp(0.0, (grid.rows() - 1) as f64);
    let c0 = (cx.floor() as usize).min(grid.cols().saturating_sub(2));
    let r0 = (cy.floor() as usize).min(grid.rows().saturating_sub(2));
    let tx = cx - c0 as f64;
    let ty = cy - r0 as f64;
    let v = |r: usize, c: usize| grid[r * grid.cols() + c];
    let top = v(r0, c0) * (1.0 - tx) + v(r0, c0 + 1) * tx;
    let bottom = v(r0 + 1, c0) * (1.0 - tx) + v(r0 + 1, c0 + 1) * tx;
    Ok((top * (1.0 - ty) + bottom * ty).clamp(0.0, 1.0))
}

/// A noisy slip measurement at `location`.
pub fn sample_truth<R: Rng + ?Sized>(
    field: &SlipField,
    location: Point,
    noise_std: f64,
    rng: &mut R,
) -> Result<NoisySample> {
    if !(noise_std >= 0.0 && noise_std.is_finite()) {
        return Err(Error::Domain(format!("noise_std must be >= 0, got {noise_std}")));
    }
    let truth = interpolate(field, location)?;
    let noise = if noise_std > 0.0 {
        Normal::new(0.0, noise_std)
            .map_err(|e| Error::Domain(e.to_string()))?
            .sample(rng)
    } else {
        0.0
    };
    Ok(NoisySample {
        location,
        value: truth + noise,
        noise_std,
    })
}

/// Cells whose stored slip is at most `h`.
pub fn true_safe_mask(field: &SlipField, h: f64) -> Mask {
    field.grid.map(|&s| s <= h)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn spec() -> WorkspaceSpec {
        WorkspaceSpec::new(8.0, 8.0, 0.5).unwrap()
    }

    #[test]
    fn zero_amplitude_smooth_is_constant() {
        let params = FieldParams {
            base: 0.3,
            amplitude: 0.0,
            ..FieldParams::default()
        };
        let f = generate_field(&spec(), FieldKind::Smooth, &params, 11).unwrap();
        assert!(f.grid.iter().all(|&v| v == 0.3));
        assert_eq!(f.lipschitz_bound, 0.0);
    }

    #[test]
    fn deterministic_generation() {
        let params = FieldParams {
            num_patches: 3,
            ..FieldParams::default()
        };
        for kind in [FieldKind::Smooth, FieldKind::Heterogeneous, FieldKind::GpPrior] {
            let a = generate_field(&spec(), kind, &params, 5).unwrap();
            let b = generate_field(&spec(), kind, &params, 5).unwrap();
            let bits = |f: &SlipField| f.grid.iter().map(|v| v.to_bits()).collect::<Vec<_>>();
            assert_eq!(bits(&a), bits(&b));
            let c = generate_field(&spec(), kind, &params, 6).unwrap();
            assert_ne!(bits(&a), bits(&c));
        }
    }

    #[test]
    fn values_clamped_and_bound_covers_neighbors() {
        let params = FieldParams {
            base: 0.5,
            amplitude: 0.9,
            num_bumps: 6,
            bump_length_scale: 1.0,
            num_patches: 4,
            patch_level: 0.9,
            ..FieldParams::default()
        };
        for seed in 0..5 {
            for kind in [FieldKind::Smooth, FieldKind::Heterogeneous, FieldKind::GpPrior] {
                let f = generate_field(&spec(), kind, &params, seed).unwrap();
                assert!(f.grid.iter().all(|&v| (0.0..=1.0).contains(&v)));
                assert!(f.lipschitz_bound + 1e-12 >= neighbor_slope_max(&f.grid, 0.5));
            }
        }
    }

    #[test]
    fn invalid_spec_is_config_error() {
        let bad = WorkspaceSpec {
            width_m: -1.0,
            ..spec()
        };
        assert!(matches!(
            generate_field(&bad, FieldKind::Smooth, &FieldParams::default(), 0),
            Err(Error::Config { .. })
        ));
    }

    #[test]
    fn noiseless_sampling_interpolates() {
        let mut f = generate_field(&spec(), FieldKind::Smooth, &FieldParams::default(), 1).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let idx = f.spec.index(crate::grid::Cell::new(3, 4));
        let s = sample_truth(&f, f.spec.center_of(idx), 0.0, &mut rng).unwrap();
        assert_eq!(s.value, f.grid[idx]);

        f.grid[idx] = 0.2;
        f.grid[idx + 1] = 0.6;
        let mid = Point::new(
            (f.spec.center_of(idx).x + f.spec.center_of(idx + 1).x) / 2.0,
            f.spec.center_of(idx).y,
        );
        let s = sample_truth(&f, mid, 0.0, &mut rng).unwrap();
        assert!((s.value - 0.4).abs() < 1e-12);
    }

    #[test]
    fn out_of_bounds_sample_is_domain_error() {
        let f = generate_field(&spec(), FieldKind::Smooth, &FieldParams::default(), 1).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let r = sample_truth(&f, Point::new(-1.0, 2.0), 0.0, &mut rng);
        assert!(matches!(r, Err(Error::Domain(_))));
    }

    #[test]
    fn noise_std_matches_monte_carlo() {
        let f = generate_field(&spec(), FieldKind::Smooth, &FieldParams::default(), 2).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(99);
        let p = Point::new(3.3, 4.1);
        let xs: Vec<f64> = (0..10_000)
            .map(|_| sample_truth(&f, p, 0.05, &mut rng).unwrap().value)
            .collect();
        let mean = xs.iter().sum::<f64>() / xs.len() as f64;
        let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (xs.len() - 1) as f64;
        let sd = var.sqrt();
        assert!((0.045..=0.055).contains(&sd), "sample std {sd}");
    }

    #[test]
    fn sample_streams_are_deterministic() {
        let f = generate_field(&spec(), FieldKind::Smooth, &FieldParams::default(), 2).unwrap();
        let draw = || {
            let mut rng = ChaCha8Rng::seed_from_u64(4);
            (0..20)
                .map(|i| sample_truth(&f, Point::new(1.0 + 0.1 * i as f64, 2.0), 0.02, &mut rng).unwrap().value)
                .collect::<Vec<_>>()
        };
        assert_eq!(draw(), draw());
    }

    #[test]
    fn safe_mask_thresholds() {
        let params = FieldParams {
            base: 0.5,
            amplitude: 0.0,
            ..FieldParams::default()
        };
        let f = generate_field(&spec(), FieldKind::Smooth, &params, 0).unwrap();
        assert_eq!(true_safe_mask(&f, 0.8).count(), f.grid.len());
        assert_eq!(true_safe_mask(&f, 0.0).count(), 0);
        let g = generate_field(&spec(), FieldKind::Heterogeneous, &FieldParams { num_patches: 3, ..FieldParams::default() }, 3).unwrap();
        assert_eq!(true_safe_mask(&g, 1.0).count(), g.grid.len());
    }

    #[test]
    fn gp_prior_variance_matches_signal() {
        // Pooled squared deviation from the known prior mean is an unbiased
        // estimate of sigma_f^2 = 0.04.
        let spec = WorkspaceSpec::new(16.0, 16.0, 0.5).unwrap();
        let params = FieldParams {
            base: 0.5,
            signal_std: 0.2,
            length_scale: 2.0,
            ..FieldParams::default()
        };
        let mut acc = 0.0;
        let mut n = 0usize;
        for k in 0..12u64 {
            let f = generate_field(&spec, FieldKind::GpPrior, &params, 7 + k).unwrap();
            acc += f.grid.iter().map(|v| (v - 0.5).powi(2)).sum::<f64>();
            n += f.grid.len();
        }
        let var = acc / n as f64;
        assert!((0.02..=0.06).contains(&var), "empirical variance {var}");
    }
}
