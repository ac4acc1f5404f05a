//! Hybrid acquisition: expected improvement plus upper confidence bound,
//! minus a posterior-mean gradient term and a soft constraint penalty.
//!
//! ```text
//! α(a) = λ_base(t)·EI(a) + λ_base(t)·UCB(a) − λ_g(t)·‖∇μ(a)‖ − λ_p·penalty(a)
//! ```
//!
//! `λ_base` and `λ_g` decay exponentially from their start to their end value
//! as the normalised iteration index `t` goes from 0 to 1; `λ_p` is constant.

use std::cmp::Ordering;
use std::f64::consts::{FRAC_1_SQRT_2, PI};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use statrs::function::erf::erfc;

use crate::gp::{GpModel, NormalizedInput};
use crate::system::{Budget, CostBreakdown};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct AcquisitionWeights {
    pub base_start: f64,
    pub base_end: f64,
    pub grad_start: f64,
    pub grad_end: f64,
    pub penalty: f64,
    pub ucb_beta: f64,
}

impl Default for AcquisitionWeights {
    fn default() -> Self {
        Self {
            base_start: 1.0,
            base_end: 0.1,
            grad_start: 0.25,
            grad_end: 0.025,
            penalty: 10.0,
            ucb_beta: 2.0,
        }
    }
}

impl AcquisitionWeights {
    /// Constraint-blind EI + UCB with unit weight throughout.
    pub fn unconstrained(ucb_beta: f64) -> Self {
        Self {
            base_start: 1.0,
            base_end: 1.0,
            grad_start: 0.0,
            grad_end: 0.0,
            penalty: 0.0,
            ucb_beta,
        }
    }

    pub fn validate(&self) -> crate::Result<()> {
        let all = [
            self.base_start,
            self.base_end,
            self.grad_start,
            self.grad_end,
            self.penalty,
            self.ucb_beta,
        ];
        if all.iter().any(|w| !(w.is_finite() && *w >= 0.0)) {
            return Err(crate::Error::InvalidConfig(
                "acquisition weights must be finite and >= 0".into(),
            ));
        }
        if self.base_end > self.base_start || self.grad_end > self.grad_start {
            return Err(crate::Error::InvalidConfig(
                "acquisition weights may only decay (end <= start)".into(),
            ));
        }
        Ok(())
    }
}

/// Which quantity the EI term measures.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EiForm {
    /// Expectation of the improvement over the Gaussian posterior.
    #[default]
    Standard,
    /// `max(0, μ − U*)`, ignoring posterior spread.
    MeanHinge,
}

fn std_normal_pdf(z: f64) -> f64 {
    (-0.5 * z * z).exp() / (2.0 * PI).sqrt()
}

fn std_normal_cdf(z: f64) -> f64 {
    0.5 * erfc(-z * FRAC_1_SQRT_2)
}

pub fn expected_improvement(mean: f64, std: f64, best: f64) -> f64 {
    let gap = mean - best;
    if std <= 0.0 {
        return gap.max(0.0);
    }
    let z = gap / std;
    (gap * std_normal_cdf(z) + std * std_normal_pdf(z)).max(0.0)
}

pub fn upper_confidence_bound(mean: f64, std: f64, beta: f64) -> f64 {
    mean + beta * std
}

/// Sum of the energy and delay budget overshoots.
pub fn constraint_penalty(cost: &CostBreakdown, budget: &Budget) -> f64 {
    (cost.total_energy() - budget.e_max_j).max(0.0) + (cost.total_delay() - budget.tau_max_s).max(0.0)
}

/// `t = (n − N0)/(T − 1)`, clamped to `[0, 1]`.
pub fn normalized_index(iteration: usize, total: usize, n_init: usize) -> f64 {
    if total <= 1 {
        return 1.0;
    }
    let t = iteration.saturating_sub(n_init) as f64 / (total - 1) as f64;
    t.clamp(0.0, 1.0)
}

fn decay(start: f64, end: f64, t: f64) -> f64 {
    if start == 0.0 {
        return 0.0;
    }
    start * (end / start).powf(t)
}

/// `(λ_base(t), λ_g(t))` at iteration `n` of a run with budget `T` and `N0`
/// initial samples.
pub fn schedule_weights(weights: &AcquisitionWeights, iteration: usize, total: usize, n_init: usize) -> (f64, f64) {
    weights_at(weights, normalized_index(iteration, total, n_init))
}

pub fn weights_at(weights: &AcquisitionWeights, t: f64) -> (f64, f64) {
    (
        decay(weights.base_start, weights.base_end, t),
        decay(weights.grad_start, weights.grad_end, t),
    )
}

/// Individual terms of one acquisition evaluation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScoreTerms {
    pub ei: f64,
    pub ucb: f64,
    pub grad_norm: f64,
    pub penalty: f64,
    pub score: f64,
}

/// Everything the acquisition needs besides the candidate point.
#[derive(Debug, Clone, Copy)]
pub struct AcquisitionContext<'a> {
    pub model: &'a GpModel,
    pub weights: &'a AcquisitionWeights,
    pub t: f64,
    /// Best feasible observed utility (or best overall if none is feasible).
    pub incumbent: f64,
    pub budget: &'a Budget,
    pub ei_form: EiForm,
}

impl AcquisitionContext<'_> {
    pub fn terms(&self, x: &NormalizedInput, cost: &CostBreakdown) -> ScoreTerms {
        let (lambda_base, lambda_grad) = weights_at(self.weights, self.t);
        let (mean, var) = self.model.posterior(x);
        let std = var.sqrt();
        let ei = match self.ei_form {
            EiForm::Standard => expected_improvement(mean, std, self.incumbent),
            EiForm::MeanHinge => (mean - self.incumbent).max(0.0),
        };
        let ucb = upper_confidence_bound(mean, std, self.weights.ucb_beta);
        let grad_norm = if lambda_grad > 0.0 {
            let g = self.model.posterior_mean_grad(x);
            g[0].hypot(g[1])
        } else {
            0.0
        };
        let penalty = constraint_penalty(cost, self.budget);
        let mut score = lambda_base * ei + lambda_base * ucb - lambda_grad * grad_norm;
        if self.weights.penalty > 0.0 {
            score -= self.weights.penalty * penalty;
        }
        ScoreTerms {
            ei,
            ucb,
            grad_norm,
            penalty,
            score,
        }
    }
}

pub fn hybrid_score(ctx: &AcquisitionContext<'_>, x: &NormalizedInput, cost: &CostBreakdown) -> f64 {
    ctx.terms(x, cost).score
}

/// Candidate set for [`maximize`]: one column per integer layer and a grid of
/// power levels, optionally refined between neighbouring levels.
#[derive(Debug, Clone, PartialEq)]
pub struct CandidateGrid {
    pub powers: Vec<f64>,
    pub layers: Vec<f64>,
    pub refine_power: bool,
}

impl CandidateGrid {
    pub fn new(num_layers: usize, power_points: usize, refine_power: bool) -> Self {
        let spaced = |n: usize| -> Vec<f64> {
            match n {
                0 => Vec::new(),
                1 => vec![0.0],
                n => (0..n).map(|i| i as f64 / (n - 1) as f64).collect(),
            }
        };
        Self {
            powers: if power_points == 1 {
                vec![1.0]
            } else {
                spaced(power_points)
            },
            layers: spaced(num_layers),
            refine_power,
        }
    }

    pub fn points(&self) -> impl Iterator<Item = (usize, usize, NormalizedInput)> + '_ {
        self.layers.iter().enumerate().flat_map(move |(li, &l)| {
            self.powers
                .iter()
                .enumerate()
                .map(move |(pi, &p)| (li, pi, NormalizedInput::new(p, l)))
        })
    }
}

/// Chosen point together with its terms.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Selection {
    pub x: NormalizedInput,
    pub terms: ScoreTerms,
}

/// Deterministic order: higher score, then lower penalty, lower layer, lower power.
fn better(a: &Selection, b: &Selection) -> bool {
    match a.terms.score.partial_cmp(&b.terms.score) {
        Some(Ordering::Greater) => return true,
        Some(Ordering::Less) => return false,
        _ => {}
    }
    if a.terms.score.is_nan() != b.terms.score.is_nan() {
        return !a.terms.score.is_nan();
    }
    (a.terms.penalty, a.x.l, a.x.p) < (b.terms.penalty, b.x.l, b.x.p)
}

/// Best point of the candidate grid, without refinement.
pub fn maximize_on_grid<F>(ctx: &AcquisitionContext<'_>, grid: &CandidateGrid, cost_at: F) -> Option<(usize, Selection)>
where
    F: Fn(&NormalizedInput) -> CostBreakdown + Sync,
{
    let scored: Vec<(usize, Selection)> = grid
        .points()
        .collect::<Vec<_>>()
        .into_par_iter()
        .map(|(_, pi, x)| {
            let terms = ctx.terms(&x, &cost_at(&x));
            (pi, Selection { x, terms })
        })
        .collect();
    let mut best: Option<(usize, Selection)> = None;
    for (pi, sel) in scored {
        if best.as_ref().is_none_or(|(_, b)| better(&sel, b)) {
            best = Some((pi, sel));
        }
    }
    best
}

/// Argmax of the acquisition over the candidate grid, followed by a
/// golden-section search in the power coordinate between the neighbours of
/// the winning grid point. The layer coordinate is never refined.
pub fn maximize<F>(ctx: &AcquisitionContext<'_>, grid: &CandidateGrid, cost_at: F) -> Option<Selection>
where
    F: Fn(&NormalizedInput) -> CostBreakdown + Sync,
{
    let (pi, best) = maximize_on_grid(ctx, grid, &cost_at)?;
    if !grid.refine_power || grid.powers.len() < 2 {
        return Some(best);
    }
    let lo = grid.powers[pi.saturating_sub(1)];
    let hi = grid.powers[(pi + 1).min(grid.powers.len() - 1)];
    let eval = |p: f64| {
        let x = NormalizedInput::new(p, best.x.l);
        Selection {
            x,
            terms: ctx.terms(&x, &cost_at(&x)),
        }
    };
    let refined = golden_section(lo, hi, 40, eval);
    Some(if better(&refined, &best) { refined } else { best })
}

fn golden_section<F: Fn(f64) -> Selection>(mut a: f64, mut b: f64, iters: usize, f: F) -> Selection {
    let inv_phi = (5f64.sqrt() - 1.0) / 2.0;
    let mut c = b - inv_phi * (b - a);
    let mut d = a + inv_phi * (b - a);
    let mut fc = f(c);
    let mut fd = f(d);
    for _ in 0..iters {
        if better(&fc, &fd) {
            b = d;
            d = c;
            fd = fc;
            c = b - inv_phi * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + inv_phi * (b - a);
            fd = f(d);
        }
    }
    if better(&fc, &fd) {
        fc
    } else {
        fd
    }
}
