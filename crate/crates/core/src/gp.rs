//! Zero-mean Gaussian-process regression on the unit square with an
//! isotropic Matérn 5/2 kernel.
//!
//! Hyperparameters are chosen by maximising the log marginal likelihood over
//! a log-spaced grid followed by coordinate refinement, which keeps fitting
//! fully deterministic.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

const SQRT5: f64 = 2.236_067_977_499_79;
const LN_2PI: f64 = 1.837_877_066_409_345_5;

/// Point of the normalised search space `[power, layer] ∈ [0,1]²`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NormalizedInput {
    pub p: f64,
    pub l: f64,
}

impl NormalizedInput {
    pub fn new(p: f64, l: f64) -> Self {
        Self { p, l }
    }

    pub fn distance(&self, other: &Self) -> f64 {
        (self.p - other.p).hypot(self.l - other.l)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GpHyperparams {
    pub lengthscale: f64,
    pub signal_var: f64,
    pub jitter: f64,
}

impl Default for GpHyperparams {
    fn default() -> Self {
        Self {
            lengthscale: 0.3,
            signal_var: 1.0,
            jitter: DEFAULT_JITTER,
        }
    }
}

pub const DEFAULT_JITTER: f64 = 1e-8;
pub const MAX_JITTER: f64 = 1e-4;

/// Box and resolution of the marginal-likelihood search.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct HyperSearch {
    pub lengthscale_range: (f64, f64),
    pub signal_var_range: (f64, f64),
    pub grid_size: usize,
    pub jitter: f64,
}

impl Default for HyperSearch {
    fn default() -> Self {
        Self {
            lengthscale_range: (0.05, 2.0),
            signal_var_range: (0.01, 4.0),
            grid_size: 20,
            jitter: DEFAULT_JITTER,
        }
    }
}

impl HyperSearch {
    fn log_grid(range: (f64, f64), n: usize) -> Vec<f64> {
        let (lo, hi) = (range.0.ln(), range.1.ln());
        if n <= 1 {
            return vec![((lo + hi) / 2.0).exp()];
        }
        (0..n)
            .map(|i| (lo + (hi - lo) * i as f64 / (n - 1) as f64).exp())
            .collect()
    }

    fn midpoint(&self) -> GpHyperparams {
        let mid = |r: (f64, f64)| (r.0 * r.1).sqrt();
        GpHyperparams {
            lengthscale: mid(self.lengthscale_range),
            signal_var: mid(self.signal_var_range),
            jitter: self.jitter,
        }
    }
}

pub fn matern52(x: &NormalizedInput, y: &NormalizedInput, hyper: &GpHyperparams) -> f64 {
    let s = SQRT5 * x.distance(y) / hyper.lengthscale;
    hyper.signal_var * (1.0 + s + s * s / 3.0) * (-s).exp()
}

/// Gradient of `k(x, y)` with respect to `x`. Vanishes at `x = y`.
fn matern52_grad(x: &NormalizedInput, y: &NormalizedInput, hyper: &GpHyperparams) -> [f64; 2] {
    let ell = hyper.lengthscale;
    let s = SQRT5 * x.distance(y) / ell;
    // dk/dr * (x - y)/r  =  -σ² (5 / 3ℓ²) (1 + s) e^{-s} (x - y)
    let factor = -hyper.signal_var * 5.0 / (3.0 * ell * ell) * (1.0 + s) * (-s).exp();
    [factor * (x.p - y.p), factor * (x.l - y.l)]
}

/// In-place lower Cholesky factor of a row-major `n × n` SPD matrix.
fn cholesky(a: &mut [f64], n: usize) -> bool {
    for j in 0..n {
        let mut d = a[j * n + j];
        for k in 0..j {
            d -= a[j * n + k] * a[j * n + k];
        }
        if d.is_nan() || d <= 0.0 || d.is_infinite() {
            return false;
        }
        let d = d.sqrt();
        a[j * n + j] = d;
        for i in (j + 1)..n {
            let mut s = a[i * n + j];
            for k in 0..j {
                s -= a[i * n + k] * a[j * n + k];
            }
            a[i * n + j] = s / d;
        }
        for k in (j + 1)..n {
            a[j * n + k] = 0.0;
        }
    }
    true
}

fn solve_lower(l: &[f64], n: usize, b: &mut [f64]) {
    for i in 0..n {
        let mut s = b[i];
        for k in 0..i {
            s -= l[i * n + k] * b[k];
        }
        b[i] = s / l[i * n + i];
    }
}

fn solve_upper_t(l: &[f64], n: usize, b: &mut [f64]) {
    for i in (0..n).rev() {
        let mut s = b[i];
        for k in (i + 1)..n {
            s -= l[k * n + i] * b[k];
        }
        b[i] = s / l[i * n + i];
    }
}

/// Fitted surrogate: training data, hyperparameters and the Cholesky factor
/// of `K + jitter·I`.
#[derive(Debug, Clone, PartialEq)]
pub struct GpModel {
    inputs: Vec<NormalizedInput>,
    targets: Vec<f64>,
    hyper: GpHyperparams,
    factor: Vec<f64>,
    alpha: Vec<f64>,
}

/// Drops earlier copies of repeated inputs, keeping the latest target.
pub fn dedup_latest(inputs: &[NormalizedInput], targets: &[f64]) -> (Vec<NormalizedInput>, Vec<f64>) {
    let mut xs: Vec<NormalizedInput> = Vec::with_capacity(inputs.len());
    let mut ys: Vec<f64> = Vec::with_capacity(targets.len());
    for (x, y) in inputs.iter().zip(targets) {
        if let Some(i) = xs.iter().position(|seen| seen == x) {
            ys[i] = *y;
        } else {
            xs.push(*x);
            ys.push(*y);
        }
    }
    (xs, ys)
}

impl GpModel {
    /// Conditions the GP on data at fixed hyperparameters, escalating the
    /// jitter tenfold up to [`MAX_JITTER`] until the Gram matrix factorises.
    pub fn with_hyper(inputs: Vec<NormalizedInput>, targets: Vec<f64>, hyper: GpHyperparams) -> Result<Self> {
        if inputs.is_empty() || inputs.len() != targets.len() {
            return Err(Error::InvalidConfig(format!(
                "GP needs matching nonempty data, got {} inputs and {} targets",
                inputs.len(),
                targets.len()
            )));
        }
        if targets.iter().any(|t| !t.is_finite()) {
            return Err(Error::InvalidConfig("GP targets must be finite".into()));
        }
        let n = inputs.len();
        let mut gram = vec![0.0; n * n];
        for i in 0..n {
            for j in 0..=i {
                let k = matern52(&inputs[i], &inputs[j], &hyper);
                gram[i * n + j] = k;
                gram[j * n + i] = k;
            }
        }
        let mut jitter = hyper.jitter.max(f64::MIN_POSITIVE);
        loop {
            let mut factor = gram.clone();
            for i in 0..n {
                factor[i * n + i] += jitter;
            }
            if cholesky(&mut factor, n) {
                let mut alpha = targets.clone();
                solve_lower(&factor, n, &mut alpha);
                solve_upper_t(&factor, n, &mut alpha);
                return Ok(Self {
                    inputs,
                    targets,
                    hyper: GpHyperparams { jitter, ..hyper },
                    factor,
                    alpha,
                });
            }
            if jitter >= MAX_JITTER {
                return Err(Error::SingularGram { jitter });
            }
            jitter = (jitter * 10.0).clamp(DEFAULT_JITTER, MAX_JITTER);
        }
    }

    pub fn inputs(&self) -> &[NormalizedInput] {
        &self.inputs
    }

    pub fn targets(&self) -> &[f64] {
        &self.targets
    }

    pub fn hyper(&self) -> &GpHyperparams {
        &self.hyper
    }

    pub fn len(&self) -> usize {
        self.inputs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.inputs.is_empty()
    }

    /// `-½ yᵀ(K+jI)⁻¹y − ½ log|K+jI| − (n/2) log 2π`
    pub fn log_marginal_likelihood(&self) -> f64 {
        let n = self.len();
        let fit: f64 = self.targets.iter().zip(&self.alpha).map(|(y, a)| y * a).sum();
        let log_det: f64 = (0..n).map(|i| self.factor[i * n + i].ln()).sum();
        -0.5 * fit - log_det - 0.5 * n as f64 * LN_2PI
    }

    fn cross_cov(&self, x: &NormalizedInput) -> Vec<f64> {
        self.inputs.iter().map(|xi| matern52(x, xi, &self.hyper)).collect()
    }

    /// Posterior `(mean, variance)` at `x`; the variance is clamped at zero.
    pub fn posterior(&self, x: &NormalizedInput) -> (f64, f64) {
        let mut k = self.cross_cov(x);
        let mean = k.iter().zip(&self.alpha).map(|(a, b)| a * b).sum();
        solve_lower(&self.factor, self.len(), &mut k);
        let explained: f64 = k.iter().map(|v| v * v).sum();
        let var = (self.hyper.signal_var - explained).max(0.0);
        (mean, var)
    }

    /// Analytic gradient of the posterior mean.
    pub fn posterior_mean_grad(&self, x: &NormalizedInput) -> [f64; 2] {
        let mut g = [0.0; 2];
        for (xi, a) in self.inputs.iter().zip(&self.alpha) {
            let dk = matern52_grad(x, xi, &self.hyper);
            g[0] += a * dk[0];
            g[1] += a * dk[1];
        }
        g
    }
}

/// Fits the GP by log-marginal-likelihood maximisation. Exact duplicate
/// inputs are merged first, keeping the latest target.
pub fn fit(inputs: &[NormalizedInput], targets: &[f64], search: &HyperSearch) -> Result<GpModel> {
    let (xs, ys) = dedup_latest(inputs, targets);
    if xs.is_empty() {
        return Err(Error::InvalidConfig("cannot fit a GP to an empty dataset".into()));
    }
    if xs.len() == 1 {
        return GpModel::with_hyper(xs, ys, search.midpoint());
    }

    let lml_at = |log_ell: f64, log_var: f64| -> Option<(f64, GpModel)> {
        let hyper = GpHyperparams {
            lengthscale: log_ell.exp(),
            signal_var: log_var.exp(),
            jitter: search.jitter,
        };
        let model = GpModel::with_hyper(xs.clone(), ys.clone(), hyper).ok()?;
        let lml = model.log_marginal_likelihood();
        lml.is_finite().then_some((lml, model))
    };

    let ells = HyperSearch::log_grid(search.lengthscale_range, search.grid_size);
    let vars = HyperSearch::log_grid(search.signal_var_range, search.grid_size);
    let mut best: Option<(f64, f64, f64, GpModel)> = None;
    for &ell in &ells {
        for &var in &vars {
            if let Some((lml, model)) = lml_at(ell.ln(), var.ln()) {
                if best.as_ref().is_none_or(|b| lml > b.0) {
                    best = Some((lml, ell.ln(), var.ln(), model));
                }
            }
        }
    }
    let Some((mut best_lml, mut log_ell, mut log_var, mut best_model)) = best else {
        return Err(Error::SingularGram { jitter: MAX_JITTER });
    };

    // Coordinate refinement in log space, starting from half a grid cell.
    let bounds = [
        (search.lengthscale_range.0.ln(), search.lengthscale_range.1.ln()),
        (search.signal_var_range.0.ln(), search.signal_var_range.1.ln()),
    ];
    let cells = search.grid_size.saturating_sub(1).max(1) as f64;
    let mut steps = [
        (bounds[0].1 - bounds[0].0) / cells / 2.0,
        (bounds[1].1 - bounds[1].0) / cells / 2.0,
    ];
    for _ in 0..64 {
        let mut moved = false;
        for axis in 0..2 {
            for dir in [1.0, -1.0] {
                let (mut e, mut v) = (log_ell, log_var);
                if axis == 0 {
                    e = (e + dir * steps[0]).clamp(bounds[0].0, bounds[0].1);
                } else {
                    v = (v + dir * steps[1]).clamp(bounds[1].0, bounds[1].1);
                }
                if (e, v) == (log_ell, log_var) {
                    continue;
                }
                if let Some((lml, model)) = lml_at(e, v) {
                    if lml > best_lml {
                        best_lml = lml;
                        log_ell = e;
                        log_var = v;
                        best_model = model;
                        moved = true;
                        break;
                    }
                }
            }
        }
        if !moved {
            steps[0] /= 2.0;
            steps[1] /= 2.0;
            if steps[0] < 1e-3 && steps[1] < 1e-3 {
                break;
            }
        }
    }
    Ok(best_model)
}
