//! Constrained Bayesian optimisation loop over (split layer, transmit power).
//!
//! Each step refits the GP on every observation so far, maximises the hybrid
//! acquisition over the candidate grid, denormalises the winner and spends
//! one oracle call on it. The run ends when the budget `T` is spent or the
//! same configuration has been selected `N_max` more times in a row. The
//! returned incumbent is always the best feasible observation.

use serde::{Deserialize, Serialize};

use crate::acquisition::{self, AcquisitionContext, AcquisitionWeights, CandidateGrid, EiForm};
use crate::channel::ChannelMode;
use crate::error::{Error, Result};
use crate::gp::{self, HyperSearch, NormalizedInput};
use crate::problem::Problem;
use crate::record::RunRecord;
use crate::system::SplitConfig;
use crate::utility::{Evaluation, Oracle};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RunConfig {
    /// Initial design size `N0`.
    pub n_init: usize,
    /// Total oracle calls `T`, including the initial design.
    pub budget: usize,
    /// Consecutive repeats of the same selection before stopping, `N_max`.
    pub early_stop: usize,
    pub weights: AcquisitionWeights,
    pub channel_mode: ChannelMode,
    pub seed: u64,
    pub ei_form: EiForm,
    /// Power levels in the acquisition candidate grid.
    pub power_points: usize,
    /// Golden-section refinement of the winning power level.
    pub refine_power: bool,
    pub hyper_search: HyperSearch,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            n_init: 5,
            budget: 30,
            early_stop: 3,
            weights: AcquisitionWeights::default(),
            channel_mode: ChannelMode::Frozen,
            seed: 0,
            ei_form: EiForm::Standard,
            power_points: 64,
            refine_power: true,
            hyper_search: HyperSearch::default(),
        }
    }
}

impl RunConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n_init < 1 {
            return Err(Error::InvalidConfig("n_init must be at least 1".into()));
        }
        if self.budget < self.n_init {
            return Err(Error::InvalidConfig(format!(
                "budget {} is smaller than the initial design {}",
                self.budget, self.n_init
            )));
        }
        if self.early_stop < 1 {
            return Err(Error::InvalidConfig("early_stop must be at least 1".into()));
        }
        if self.power_points < 1 {
            return Err(Error::InvalidConfig("power_points must be at least 1".into()));
        }
        self.weights.validate()
    }

    /// Same loop without gradient term or constraint penalty, unit weights.
    pub fn basic_bo(&self) -> Self {
        Self {
            weights: AcquisitionWeights::unconstrained(self.weights.ucb_beta),
            ..*self
        }
    }
}

/// Normalised points of the initial design: `N0` points of a near-square grid
/// over the unit square, `ceil(√N0)` layer levels per row, rows over power,
/// taken in row-major order.
pub fn initial_design(n_init: usize) -> Vec<NormalizedInput> {
    let cols = (n_init as f64).sqrt().ceil() as usize;
    let rows = n_init.div_ceil(cols);
    let level = |i: usize, n: usize| if n == 1 { 0.5 } else { i as f64 / (n - 1) as f64 };
    (0..rows)
        .flat_map(|r| (0..cols).map(move |c| NormalizedInput::new(level(r, rows), level(c, cols))))
        .take(n_init)
        .collect()
}

/// Observations fed to the GP, in normalised coordinates of the evaluated
/// (rounded) configuration.
struct Dataset {
    inputs: Vec<NormalizedInput>,
    targets: Vec<f64>,
}

impl Dataset {
    fn push(&mut self, problem: &Problem, eval: &Evaluation) {
        let (p, l) = problem.system.normalize(&eval.config);
        self.inputs.push(NormalizedInput::new(p, l));
        self.targets.push(eval.utility);
    }
}

/// Evaluates the initial design, recording every call.
pub fn initialize(
    config: &RunConfig,
    problem: &Problem,
    oracle: &mut Oracle<'_>,
    record: &mut RunRecord,
) -> Result<Vec<Evaluation>> {
    let mut evals = Vec::with_capacity(config.n_init);
    for x in initial_design(config.n_init) {
        let eval = oracle.evaluate(problem.system.denormalize(x.p, x.l))?;
        record.push(&eval);
        evals.push(eval);
    }
    Ok(evals)
}

/// Bayes-Split-Edge with `config.weights`.
pub fn run(config: &RunConfig, problem: &Problem) -> Result<RunRecord> {
    run_named("bayes", config, problem)
}

/// Constraint-blind baseline: EI + UCB only.
pub fn run_basic_bo(config: &RunConfig, problem: &Problem) -> Result<RunRecord> {
    run_named("basic-bo", &config.basic_bo(), problem)
}

pub fn run_named(name: &str, config: &RunConfig, problem: &Problem) -> Result<RunRecord> {
    config.validate()?;
    let mut oracle = problem.oracle(config.channel_mode, config.seed, config.budget);
    let mut record = RunRecord::new(name, config.seed);
    let mut data = Dataset {
        inputs: Vec::new(),
        targets: Vec::new(),
    };
    for eval in initialize(config, problem, &mut oracle, &mut record)? {
        data.push(problem, &eval);
    }

    let grid = CandidateGrid::new(problem.num_layers(), config.power_points, config.refine_power);
    let (p_lo, p_hi) = problem.system.power_range();
    let half_step = (p_hi - p_lo) / (2 * config.power_points.max(2) - 2) as f64;
    let mut stop = RepeatStop::new(config.early_stop, half_step, record.best.map(|b| b.config));
    for n in (config.n_init + 1)..=config.budget {
        let model = gp::fit(&data.inputs, &data.targets, &config.hyper_search)?;
        let incumbent = record
            .best_utility()
            .unwrap_or_else(|| data.targets.iter().copied().fold(f64::NEG_INFINITY, f64::max));
        let ctx = AcquisitionContext {
            model: &model,
            weights: &config.weights,
            t: acquisition::normalized_index(n, config.budget, config.n_init),
            incumbent,
            budget: &problem.system.budget,
            ei_form: config.ei_form,
        };
        let selection = acquisition::maximize(&ctx, &grid, |x| oracle.cost(&to_config(problem, x)))
            .expect("candidate grid is nonempty");
        let eval = oracle.evaluate(to_config(problem, &selection.x))?;
        record.push(&eval);
        data.push(problem, &eval);

        if stop.observe(eval.config) {
            break;
        }
    }
    record.ledger_count = oracle.ledger().count();
    Ok(record)
}

/// Early-stop counter: counts consecutive steps that select the anchor
/// configuration and fires after `limit` repeats. The anchor starts as the
/// best feasible initial point; any other selection becomes the new anchor
/// and resets the count. Two selections are the same when they share
/// the layer and their powers differ by at most `power_tol` watts, which
/// absorbs the last-digit drift of the continuous power refinement.
#[derive(Debug, Clone)]
pub struct RepeatStop {
    limit: usize,
    power_tol: f64,
    last: Option<SplitConfig>,
    repeats: usize,
}

impl RepeatStop {
    pub fn new(limit: usize, power_tol: f64, anchor: Option<SplitConfig>) -> Self {
        Self {
            limit,
            power_tol,
            last: anchor,
            repeats: 0,
        }
    }

    pub fn repeats(&self) -> usize {
        self.repeats
    }

    /// Registers a selection; returns `true` when the run should stop.
    pub fn observe(&mut self, selected: SplitConfig) -> bool {
        let same = self
            .last
            .is_some_and(|l| l.layer == selected.layer && (l.power_w - selected.power_w).abs() <= self.power_tol);
        if same {
            self.repeats += 1;
        } else {
            self.last = Some(selected);
            self.repeats = 0;
        }
        self.repeats >= self.limit
    }
}

fn to_config(problem: &Problem, x: &NormalizedInput) -> SplitConfig {
    problem.system.denormalize(x.p, x.l)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn design_of_four_is_the_corners() {
        let d = initial_design(4);
        let pts: Vec<_> = d.iter().map(|x| (x.p, x.l)).collect();
        assert_eq!(pts, vec![(0.0, 0.0), (0.0, 1.0), (1.0, 0.0), (1.0, 1.0)]);
    }

    #[test]
    fn design_of_six_is_three_by_two() {
        let d = initial_design(6);
        assert_eq!(d.len(), 6);
        let layers: Vec<_> = d.iter().map(|x| x.l).collect();
        assert_eq!(layers, vec![0.0, 0.5, 1.0, 0.0, 0.5, 1.0]);
        let powers: Vec<_> = d.iter().map(|x| x.p).collect();
        assert_eq!(powers, vec![0.0, 0.0, 0.0, 1.0, 1.0, 1.0]);
    }

    #[test]
    fn design_of_five_truncates_the_near_square_grid() {
        let d = initial_design(5);
        assert_eq!(d.len(), 5);
        assert_eq!(d[4], NormalizedInput::new(1.0, 0.5));
        assert_eq!(initial_design(1), vec![NormalizedInput::new(0.5, 0.5)]);
    }

    #[test]
    fn config_validation() {
        assert!(RunConfig::default().validate().is_ok());
        assert!(RunConfig {
            n_init: 0,
            ..RunConfig::default()
        }
        .validate()
        .is_err());
        assert!(RunConfig {
            budget: 3,
            ..RunConfig::default()
        }
        .validate()
        .is_err());
    }

    #[test]
    fn repeat_stop_counts_consecutive_repeats() {
        let a = SplitConfig::new(7, 0.3);
        let b = SplitConfig::new(8, 0.3);
        let mut stop = RepeatStop::new(3, 1e-3, None);
        assert!(!stop.observe(a));
        assert!(!stop.observe(a));
        assert!(!stop.observe(SplitConfig::new(7, 0.3005)));
        assert_eq!(stop.repeats(), 2);
        assert!(!stop.observe(b));
        assert_eq!(stop.repeats(), 0);
        // A constant selection stream stops after the first pick plus N_max repeats.
        let fired = (1..=10).find(|_| stop.observe(a)).unwrap();
        assert_eq!(fired, 4);

        // Selecting the initial anchor counts from the first adaptive step.
        let mut anchored = RepeatStop::new(2, 1e-3, Some(a));
        assert!(!anchored.observe(a));
        assert!(anchored.observe(a));
    }
}
