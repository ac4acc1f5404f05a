//! Regret curves and the fitted decay exponent of the mean regret `R_T / T`.

use serde::{Deserialize, Serialize};

use crate::record::RunRecord;

#[derive(Debug, Clone, PartialEq)]
pub struct RegretCurve {
    /// `optimum - U(x_t)` per oracle call.
    pub instant: Vec<f64>,
    /// `optimum - best feasible so far`; the full optimum before any feasible call.
    pub simple: Vec<f64>,
    /// Running sum of `instant`, `R_T`.
    pub cumulative: Vec<f64>,
}

impl RegretCurve {
    pub fn from_instant(instant: Vec<f64>, simple: Vec<f64>) -> Self {
        let cumulative = instant
            .iter()
            .scan(0.0, |acc, r| {
                *acc += r;
                Some(*acc)
            })
            .collect();
        Self {
            instant,
            simple,
            cumulative,
        }
    }

    pub fn len(&self) -> usize {
        self.instant.len()
    }

    pub fn is_empty(&self) -> bool {
        self.instant.is_empty()
    }

    /// `R_T / T` for `T = 1..=len`.
    pub fn mean(&self) -> Vec<f64> {
        self.cumulative
            .iter()
            .enumerate()
            .map(|(i, r)| r / (i + 1) as f64)
            .collect()
    }

    /// Extends a run that stopped early to `horizon` calls, as if it kept
    /// re-evaluating its incumbent.
    pub fn padded(&self, horizon: usize) -> Self {
        let mut instant = self.instant.clone();
        let mut simple = self.simple.clone();
        let last = simple.last().copied().unwrap_or(0.0);
        while instant.len() < horizon {
            instant.push(last);
            simple.push(last);
        }
        Self::from_instant(instant, simple)
    }

    pub fn rows(&self) -> Vec<RegretRow> {
        let mean = self.mean();
        (0..self.len())
            .map(|i| RegretRow {
                iter: i + 1,
                instant: self.instant[i],
                simple: self.simple[i],
                cumulative: self.cumulative[i],
                mean: mean[i],
            })
            .collect()
    }
}

/// One line of a per-run regret CSV.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RegretRow {
    pub iter: usize,
    pub instant: f64,
    pub simple: f64,
    pub cumulative: f64,
    pub mean: f64,
}

/// Regret of every call in `record` against `optimum`, which must be at
/// least every utility the run observed.
pub fn compute_regret(record: &RunRecord, optimum: f64) -> RegretCurve {
    let instant = record.iterations.iter().map(|it| optimum - it.utility).collect();
    let simple = record
        .iterations
        .iter()
        .map(|it| optimum - it.best_so_far.unwrap_or(0.0))
        .collect();
    RegretCurve::from_instant(instant, simple)
}

/// Slope of `ln(mean regret)` against `ln T` by least squares over
/// `T > skip`, ignoring non-positive values. `None` with fewer than two
/// usable points.
pub fn decay_exponent(mean_regret: &[f64], skip: usize) -> Option<f64> {
    let pts: Vec<(f64, f64)> = mean_regret
        .iter()
        .enumerate()
        .skip(skip)
        .filter(|(_, r)| **r > 0.0 && r.is_finite())
        .map(|(i, r)| (((i + 1) as f64).ln(), r.ln()))
        .collect();
    if pts.len() < 2 {
        return None;
    }
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    (sxx > 0.0).then(|| sxy / sxx)
}

/// Seed-averaged mean regret of several runs, each padded to `horizon` or
/// to the longest run if that is longer.
pub fn average_mean_regret(curves: &[RegretCurve], horizon: usize) -> Vec<f64> {
    let horizon = curves.iter().map(RegretCurve::len).max().unwrap_or(0).max(horizon);
    let mut sum = vec![0.0; horizon];
    for c in curves {
        for (s, m) in sum.iter_mut().zip(c.padded(horizon).mean()) {
            *s += m;
        }
    }
    sum.iter().map(|s| s / curves.len() as f64).collect()
}
