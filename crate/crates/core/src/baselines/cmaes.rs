//! (μ/μ_w, λ) CMA-ES with box clamping.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use super::ZeroInfeasible;
use crate::channel::ChannelMode;
use crate::error::Result;
use crate::problem::Problem;
use crate::record::RunRecord;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct CmaParams {
    /// Offspring per generation, λ.
    pub pop: usize,
    pub max_evals: usize,
    /// Stop after this many evaluations without improving the best value.
    pub stall: usize,
    /// Initial step size relative to the box width.
    pub sigma0: f64,
}

impl Default for CmaParams {
    fn default() -> Self {
        Self {
            pop: 10,
            max_evals: 300,
            stall: 20,
            sigma0: 0.3,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CmaOutcome {
    pub best_x: Vec<f64>,
    pub best_f: f64,
    pub evals: usize,
    /// Distribution mean after each completed generation.
    pub means: Vec<Vec<f64>>,
}

/// Minimises `f` over the box `[lower, upper]` starting from `x0`. Samples are
/// clamped into the box before evaluation and the clamped points drive the
/// update, so the mean never leaves the box.
pub fn cma_es_minimize<F>(
    x0: &[f64],
    lower: &[f64],
    upper: &[f64],
    params: &CmaParams,
    seed: u64,
    mut f: F,
) -> Result<CmaOutcome>
where
    F: FnMut(&[f64]) -> Result<f64>,
{
    let n = x0.len();
    assert!(n >= 1 && lower.len() == n && upper.len() == n, "dimension mismatch");
    assert!(params.pop >= 2, "population must be at least 2");
    let nf = n as f64;
    let lambda = params.pop;
    let mu = lambda / 2;
    let raw: Vec<f64> = (0..mu)
        .map(|i| (mu as f64 + 0.5).ln() - ((i + 1) as f64).ln())
        .collect();
    let total: f64 = raw.iter().sum();
    let weights: Vec<f64> = raw.iter().map(|w| w / total).collect();
    let mu_eff = 1.0 / weights.iter().map(|w| w * w).sum::<f64>();

    let c_sigma = (mu_eff + 2.0) / (nf + mu_eff + 5.0);
    let d_sigma = 1.0 + 2.0 * (((mu_eff - 1.0) / (nf + 1.0)).sqrt() - 1.0).max(0.0) + c_sigma;
    let c_c = (4.0 + mu_eff / nf) / (nf + 4.0 + 2.0 * mu_eff / nf);
    let c_1 = 2.0 / ((nf + 1.3).powi(2) + mu_eff);
    let c_mu = (1.0 - c_1).min(2.0 * (mu_eff - 2.0 + 1.0 / mu_eff) / ((nf + 2.0).powi(2) + mu_eff));
    let chi_n = nf.sqrt() * (1.0 - 1.0 / (4.0 * nf) + 1.0 / (21.0 * nf * nf));

    let lo = DVector::from_column_slice(lower);
    let hi = DVector::from_column_slice(upper);
    let width = (&hi - &lo).max();
    let clamp = |x: &DVector<f64>| x.zip_zip_map(&lo, &hi, |v, a, b| v.clamp(a, b));

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut mean = clamp(&DVector::from_column_slice(x0));
    let mut sigma = params.sigma0 * width;
    let mut cov = DMatrix::<f64>::identity(n, n);
    let mut p_sigma = DVector::<f64>::zeros(n);
    let mut p_c = DVector::<f64>::zeros(n);

    let mut out = CmaOutcome {
        best_x: mean.as_slice().to_vec(),
        best_f: f64::INFINITY,
        evals: 0,
        means: Vec::new(),
    };
    let mut since_improvement = 0usize;
    let done = |out: &CmaOutcome, since: usize| out.evals >= params.max_evals || since >= params.stall;

    let mut generation = 0i32;
    while !done(&out, since_improvement) {
        let eig = SymmetricEigen::new(cov.clone());
        let b = eig.eigenvectors;
        let d = eig.eigenvalues.map(|v| v.max(1e-20).sqrt());
        let bd = &b * DMatrix::from_diagonal(&d);
        let inv_sqrt = &b * DMatrix::from_diagonal(&d.map(|v| 1.0 / v)) * b.transpose();

        let mut offspring: Vec<(f64, DVector<f64>)> = Vec::with_capacity(lambda);
        for _ in 0..lambda {
            if done(&out, since_improvement) {
                return Ok(out);
            }
            let z = DVector::from_fn(n, |_, _| StandardNormal.sample(&mut rng));
            let x = clamp(&(&mean + sigma * (&bd * z)));
            let v = f(x.as_slice())?;
            out.evals += 1;
            if v < out.best_f {
                out.best_f = v;
                out.best_x = x.as_slice().to_vec();
                since_improvement = 0;
            } else {
                since_improvement += 1;
            }
            offspring.push((v, x));
        }
        offspring.sort_by(|a, b| a.0.total_cmp(&b.0));

        let old_mean = mean.clone();
        // Clamping again only absorbs rounding in the convex combination.
        mean = clamp(
            &offspring[..mu]
                .iter()
                .zip(&weights)
                .fold(DVector::zeros(n), |acc, ((_, x), w)| acc + x * *w),
        );
        let y_w = (&mean - &old_mean) / sigma;

        p_sigma = (1.0 - c_sigma) * &p_sigma + (c_sigma * (2.0 - c_sigma) * mu_eff).sqrt() * (&inv_sqrt * &y_w);
        generation += 1;
        let norm_ps = p_sigma.norm();
        let h_sigma = norm_ps / (1.0 - (1.0 - c_sigma).powi(2 * generation)).sqrt() < (1.4 + 2.0 / (nf + 1.0)) * chi_n;
        let h = if h_sigma { 1.0 } else { 0.0 };
        p_c = (1.0 - c_c) * &p_c + h * (c_c * (2.0 - c_c) * mu_eff).sqrt() * &y_w;

        let mut rank_mu = DMatrix::<f64>::zeros(n, n);
        for ((_, x), w) in offspring[..mu].iter().zip(&weights) {
            let y = (x - &old_mean) / sigma;
            rank_mu += *w * &y * y.transpose();
        }
        cov = (1.0 - c_1 - c_mu) * &cov
            + c_1 * (&p_c * p_c.transpose() + (1.0 - h) * c_c * (2.0 - c_c) * &cov)
            + c_mu * rank_mu;
        cov = 0.5 * (&cov + cov.transpose());
        sigma *= ((c_sigma / d_sigma) * (norm_ps / chi_n - 1.0)).exp();
        out.means.push(mean.as_slice().to_vec());
    }
    Ok(out)
}

/// CMA-ES on the unit square `[power, layer]` from its centre, maximising
/// utility with infeasible configurations scored as zero.
pub fn cma_es(problem: &Problem, params: &CmaParams, mode: ChannelMode, seed: u64) -> Result<RunRecord> {
    let mut obj = ZeroInfeasible::new("cma-es", problem, mode, seed, params.max_evals);
    cma_es_minimize(&[0.5, 0.5], &[0.0, 0.0], &[1.0, 1.0], params, seed, |x| {
        obj.score(x).map(|u| -u)
    })?;
    Ok(obj.finish())
}
