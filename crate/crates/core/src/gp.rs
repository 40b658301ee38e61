//! Exact Gaussian-process regression with an RBF kernel over 2-D locations.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{Point, ScalarGrid, WorkspaceSpec};
use crate::terrain::NoisySample;

/// Diagonal jitter ladder tried in order until the factorization succeeds.
pub const JITTER_LADDER: [f64; 5] = [1e-10, 1e-9, 1e-8, 1e-7, 1e-6];

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KernelParams {
    pub signal_std: f64,
    pub length_scale: f64,
    pub noise_std: f64,
}

impl Default for KernelParams {
    fn default() -> Self {
        KernelParams {
            signal_std: 0.25,
            length_scale: 1.5,
            noise_std: 0.02,
        }
    }
}

impl KernelParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.signal_std.is_finite() && self.signal_std > 0.0) {
            return Err(Error::config("gp.signal_std", "must be positive"));
        }
        if !(self.length_scale.is_finite() && self.length_scale > 0.0) {
            return Err(Error::config("gp.length_scale", "must be positive"));
        }
        if !(self.noise_std.is_finite() && self.noise_std >= 0.0) {
            return Err(Error::config("gp.noise_std", "must be non-negative"));
        }
        Ok(())
    }
}

/// `sigma_f^2 exp(-|a-b|^2 / (2 l^2))`
pub fn kernel(a: Point, b: Point, params: &KernelParams) -> f64 {
    let s2 = params.signal_std * params.signal_std;
    s2 * (-a.dist2(&b) / (2.0 * params.length_scale * params.length_scale)).exp()
}

/// In-place Cholesky of a dense row-major `n x n` matrix. On success the
/// lower triangle holds `L` and the strict upper triangle is zeroed.
pub(crate) fn cholesky_in_place(m: &mut [f64], n: usize) -> bool {
    for j in 0..n {
        let mut d = m[j * n + j];
        for k in 0..j {
            d -= m[j * n + k] * m[j * n + k];
        }
        if !(d > 0.0) || !d.is_finite() {
            return false;
        }
        let d = d.sqrt();
        m[j * n + j] = d;
        for i in j + 1..n {
            let mut s = m[i * n + j];
            for k in 0..j {
                s -= m[i * n + k] * m[j * n + k];
            }
            m[i * n + j] = s / d;
        }
        for k in j + 1..n {
            m[j * n + k] = 0.0;
        }
    }
    true
}

/// GP posterior conditioned on a fixed sample set.
#[derive(Debug, Clone)]
pub struct GpModel {
    params: KernelParams,
    prior_mean: f64,
    locations: Vec<Point>,
    values: Vec<f64>,
    /// Row-major lower factor of `K + (sigma_n^2 + jitter) I`.
    chol: Vec<f64>,
    /// `(K + sigma_n^2 I)^-1 (y - prior_mean)`
    alpha: Vec<f64>,
    jitter: f64,
}

impl GpModel {
    /// Fit from scratch.
    pub fn fit(samples: &[NoisySample], params: KernelParams, prior_mean: f64) -> Result<Self> {
        params.validate()?;
        if !prior_mean.is_finite() {
            return Err(Error::Data("prior mean must be finite".into()));
        }
        for (i, s) in samples.iter().enumerate() {
            if !s.value.is_finite() || !s.location.is_finite() {
                return Err(Error::Data(format!("sample {i} is not finite")));
            }
        }
        let n = samples.len();
        let locations: Vec<Point> = samples.iter().map(|s| s.location).collect();
        let values: Vec<f64> = samples.iter().map(|s| s.value).collect();

        let mut k = vec![0.0; n * n];
        for i in 0..n {
            for j in 0..=i {
                let v = kernel(locations[i], locations[j], &params);
                k[i * n + j] = v;
                k[j * n + i] = v;
            }
        }
        let noise_var = params.noise_std * params.noise_std;

        let mut factored = None;
        for (step, &jitter) in JITTER_LADDER.iter().enumerate() {
            let mut m = k.clone();
            for i in 0..n {
                m[i * n + i] += noise_var + jitter;
            }
            if cholesky_in_place(&mut m, n) {
                if step > 0 {
                    log::debug!("gp factorization needed jitter {jitter:e} for {n} samples");
                }
                factored = Some((m, jitter));
                break;
            }
        }
        let (chol, jitter) = factored.ok_or_else(|| {
            Error::Numeric(format!("kernel matrix of {n} samples not positive definite at max jitter"))
        })?;

        let resid: Vec<f64> = values.iter().map(|y| y - prior_mean).collect();
        let z = forward_solve(&chol, n, &resid);
        let alpha = backward_solve(&chol, n, &z);

        Ok(GpModel {
            params,
            prior_mean,
            locations,
            values,
            chol,
            alpha,
            jitter,
        })
    }

    pub fn params(&self) -> &KernelParams {
        &self.params
    }

    pub fn prior_mean(&self) -> f64 {
        self.prior_mean
    }

    /// Diagonal jitter that was added on top of the noise variance.
    pub fn jitter(&self) -> f64 {
        self.jitter
    }

    pub fn len(&self) -> usize {
        self.locations.len()
    }

    pub fn is_empty(&self) -> bool {
        self.locations.is_empty()
    }

    pub fn locations(&self) -> &[Point] {
        &self.locations
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// Posterior mean and standard deviation at each query.
    pub fn predict(&self, queries: &[Point]) -> (Vec<f64>, Vec<f64>) {
        let n = self.len();
        let m = queries.len();
        let prior_var = self.params.signal_std * self.params.signal_std;
        if n == 0 {
            return (vec![self.prior_mean; m], vec![self.params.signal_std; m]);
        }
        // v = L^-1 K(X, Q), stored n x m row-major so the inner loops run over queries.
        let mut v = vec![0.0; n * m];
        for i in 0..n {
            let xi = self.locations[i];
            let row = &mut v[i * m..(i + 1) * m];
            for (slot, q) in row.iter_mut().zip(queries) {
                *slot = kernel(xi, *q, &self.params);
            }
        }
        let mut mean = vec![self.prior_mean; m];
        for i in 0..n {
            let a = self.alpha[i];
            let row = &v[i * m..(i + 1) * m];
            for (mu, k) in mean.iter_mut().zip(row) {
                *mu += k * a;
            }
        }
        for i in 0..n {
            let (done, rest) = v.split_at_mut(i * m);
            let row = &mut rest[..m];
            for j in 0..i {
                let l = self.chol[i * n + j];
                if l != 0.0 {
                    let prev = &done[j * m..(j + 1) * m];
                    for (r, p) in row.iter_mut().zip(prev) {
                        *r -= l * p;
                    }
                }
            }
            let d = self.chol[i * n + i];
            for r in row.iter_mut() {
                *r /= d;
            }
        }
        let mut explained = vec![0.0; m];
        for i in 0..n {
            for (e, x) in explained.iter_mut().zip(&v[i * m..(i + 1) * m]) {
                *e += x * x;
            }
        }
        let std = explained
            .iter()
            .map(|e| (prior_var - e).max(0.0).sqrt())
            .collect();
        (mean, std)
    }

    pub fn predict_point(&self, q: Point) -> (f64, f64) {
        let (m, s) = self.predict(&[q]);
        (m[0], s[0])
    }

    /// Predict at every cell center of the workspace.
    pub fn predict_grid(&self, spec: &WorkspaceSpec) -> (ScalarGrid, ScalarGrid) {
        let queries: Vec<Point> = (0..spec.len()).map(|i| spec.center_of(i)).collect();
        let (mean, std) = self.predict(&queries);
        (
            ScalarGrid::from_vec(spec.rows(), spec.cols(), mean).expect("shape"),
            ScalarGrid::from_vec(spec.rows(), spec.cols(), std).expect("shape"),
        )
    }
}

fn forward_solve(l: &[f64], n: usize, b: &[f64]) -> Vec<f64> {
    let mut x = vec![0.0; n];
    for i in 0..n {
        let mut s = b[i];
        for j in 0..i {
            s -= l[i * n + j] * x[j];
        }
        x[i] = s / l[i * n + i];
    }
    x
}

fn backward_solve(l: &[f64], n: usize, b: &[f64]) -> Vec<f64> {
    let mut x = vec![0.0; n];
    for i in (0..n).rev() {
        let mut s = b[i];
        for j in i + 1..n {
            s -= l[j * n + i] * x[j];
        }
        x[i] = s / l[i * n + i];
    }
    x
}
