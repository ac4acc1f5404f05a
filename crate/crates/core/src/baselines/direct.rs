//! DIRECT (dividing rectangles) over the unit hypercube.

use serde::{Deserialize, Serialize};

use super::ZeroInfeasible;
use crate::channel::ChannelMode;
use crate::error::Result;
use crate::problem::Problem;
use crate::record::RunRecord;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct DirectParams {
    pub max_evals: usize,
    /// Stop after this many evaluations without improving the best value.
    pub stall: usize,
    /// Minimum relative improvement a potentially optimal rectangle must promise.
    pub epsilon: f64,
}

impl Default for DirectParams {
    fn default() -> Self {
        Self {
            max_evals: 100,
            stall: 20,
            epsilon: 1e-4,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DirectOutcome {
    pub best_x: Vec<f64>,
    pub best_f: f64,
    pub evals: usize,
}

/// Hyperrectangle stored by centre and per-dimension trisection depth: the
/// side along dimension `i` is `3^-levels[i]`.
struct Rect {
    center: Vec<f64>,
    levels: Vec<u32>,
    f: f64,
}

impl Rect {
    /// Half the diagonal.
    fn size(&self) -> f64 {
        0.5 * self.levels.iter().map(|&k| 9f64.powi(-(k as i32))).sum::<f64>().sqrt()
    }
}

struct Counter<F> {
    f: F,
    evals: usize,
    max_evals: usize,
    stall: usize,
    since_improvement: usize,
    best_x: Vec<f64>,
    best_f: f64,
}

impl<F: FnMut(&[f64]) -> Result<f64>> Counter<F> {
    fn done(&self) -> bool {
        self.evals >= self.max_evals || self.since_improvement >= self.stall
    }

    fn eval(&mut self, x: &[f64]) -> Result<f64> {
        let v = (self.f)(x)?;
        self.evals += 1;
        if v < self.best_f {
            self.best_f = v;
            self.best_x = x.to_vec();
            self.since_improvement = 0;
        } else {
            self.since_improvement += 1;
        }
        Ok(v)
    }
}

/// Minimises `f` over `[0,1]^dim`. The first evaluation is the centre.
/// Never calls `f` more than `params.max_evals` times.
pub fn direct_minimize<F>(dim: usize, params: &DirectParams, f: F) -> Result<DirectOutcome>
where
    F: FnMut(&[f64]) -> Result<f64>,
{
    assert!(dim >= 1, "DIRECT needs at least one dimension");
    let mut c = Counter {
        f,
        evals: 0,
        max_evals: params.max_evals,
        stall: params.stall,
        since_improvement: 0,
        best_x: vec![0.5; dim],
        best_f: f64::INFINITY,
    };
    let mut rects = Vec::new();
    if params.max_evals > 0 {
        let center = vec![0.5; dim];
        let f0 = c.eval(&center)?;
        rects.push(Rect {
            center,
            levels: vec![0; dim],
            f: f0,
        });
    }
    'outer: while !c.done() {
        for j in potentially_optimal(&rects, params.epsilon) {
            if !divide(&mut rects, j, &mut c)? {
                break 'outer;
            }
        }
    }
    Ok(DirectOutcome {
        best_x: c.best_x,
        best_f: c.best_f,
        evals: c.evals,
    })
}

/// Indices of the potentially optimal rectangles: for some rate constant
/// `K > 0` they attain the lowest `f - K·size` and promise an
/// `epsilon`-relative improvement on the current minimum.
fn potentially_optimal(rects: &[Rect], epsilon: f64) -> Vec<usize> {
    let f_min = rects.iter().map(|r| r.f).fold(f64::INFINITY, f64::min);
    // Lowest value per distinct size; earlier rectangles win ties.
    let mut by_size: Vec<(f64, f64, usize)> = rects.iter().enumerate().map(|(i, r)| (r.size(), r.f, i)).collect();
    by_size.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.total_cmp(&b.1)).then(a.2.cmp(&b.2)));
    by_size.dedup_by(|later, first| later.0 == first.0);

    let mut chosen = Vec::new();
    for (j, &(d_j, f_j, idx)) in by_size.iter().enumerate() {
        let lower = by_size[..j]
            .iter()
            .map(|&(d, f, _)| (f_j - f) / (d_j - d))
            .fold(0.0, f64::max);
        let upper = by_size[j + 1..]
            .iter()
            .map(|&(d, f, _)| (f - f_j) / (d - d_j))
            .fold(f64::INFINITY, f64::min);
        if upper <= 0.0 || lower > upper {
            continue;
        }
        if upper.is_finite() && f_j - upper * d_j > f_min - epsilon * f_min.abs() {
            continue;
        }
        chosen.push(idx);
    }
    chosen.sort_unstable();
    chosen
}

/// Trisects rectangle `j` along its longest sides, best-sampled side first.
/// Returns `false` when the evaluation budget or stall window ran out.
fn divide<F>(rects: &mut Vec<Rect>, j: usize, c: &mut Counter<F>) -> Result<bool>
where
    F: FnMut(&[f64]) -> Result<f64>,
{
    let min_level = *rects[j].levels.iter().min().expect("nonempty");
    let dims: Vec<usize> = (0..rects[j].levels.len())
        .filter(|&i| rects[j].levels[i] == min_level)
        .collect();
    let delta = 3f64.powi(-(min_level as i32 + 1));

    let mut samples = Vec::with_capacity(dims.len());
    for &i in &dims {
        let mut pair = Vec::with_capacity(2);
        for sign in [1.0, -1.0] {
            if c.done() {
                return Ok(false);
            }
            let mut x = rects[j].center.clone();
            x[i] += sign * delta;
            let v = c.eval(&x)?;
            pair.push((x, v));
        }
        let w = pair[0].1.min(pair[1].1);
        samples.push((w, i, pair));
    }
    samples.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
    for (_, i, pair) in samples {
        rects[j].levels[i] += 1;
        let levels = rects[j].levels.clone();
        for (center, f) in pair {
            rects.push(Rect {
                center,
                levels: levels.clone(),
                f,
            });
        }
    }
    Ok(true)
}

/// DIRECT on the unit square `[power, layer]`, maximising utility with
/// infeasible configurations scored as zero.
pub fn direct_search(problem: &Problem, params: &DirectParams, mode: ChannelMode, seed: u64) -> Result<RunRecord> {
    let mut obj = ZeroInfeasible::new("direct", problem, mode, seed, params.max_evals);
    direct_minimize(2, params, |x| obj.score(x).map(|u| -u))?;
    Ok(obj.finish())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn first_evaluation_is_the_centre() {
        let mut seen = Vec::new();
        direct_minimize(
            2,
            &DirectParams {
                max_evals: 5,
                ..DirectParams::default()
            },
            |x| {
                seen.push(x.to_vec());
                Ok(x[0] + x[1])
            },
        )
        .unwrap();
        assert_eq!(seen[0], vec![0.5, 0.5]);
        assert_eq!(seen.len(), 5);
        // First division samples both axes at centre ± 1/3.
        assert!(seen[1..]
            .iter()
            .all(|x| (x[0] - 0.5).abs() + (x[1] - 0.5).abs() - 1.0 / 3.0 < 1e-12));
    }

    #[test]
    fn respects_cap_exactly() {
        for cap in [1, 2, 3, 4, 7, 50] {
            let mut n = 0;
            let out = direct_minimize(
                3,
                &DirectParams {
                    max_evals: cap,
                    stall: usize::MAX,
                    epsilon: 1e-4,
                },
                |x| {
                    n += 1;
                    Ok(x.iter().map(|v| (v - 0.3).powi(2)).sum())
                },
            )
            .unwrap();
            assert_eq!(n, cap);
            assert_eq!(out.evals, cap);
        }
    }

    #[test]
    fn one_dimensional_quadratic() {
        let out = direct_minimize(1, &DirectParams::default(), |x| Ok((x[0] - 5.0 / 6.0).powi(2))).unwrap();
        assert!((out.best_x[0] - 5.0 / 6.0).abs() < 1e-12, "{out:?}");
    }

    #[test]
    fn stall_window_stops_early() {
        let out = direct_minimize(
            2,
            &DirectParams {
                max_evals: 1000,
                stall: 10,
                epsilon: 1e-4,
            },
            |_| Ok(1.0),
        )
        .unwrap();
        assert_eq!(out.evals, 11);
    }
}
