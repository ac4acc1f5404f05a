//! Reference optimisers that share the oracle, cost model and ledger with the
//! Bayesian loop, so their evaluation counts are directly comparable.

mod cmaes;
mod direct;
mod exhaustive;
mod greedy;
mod random;

use serde::{Deserialize, Serialize};

pub use cmaes::{cma_es, cma_es_minimize, CmaOutcome, CmaParams};
pub use direct::{direct_minimize, direct_search, DirectOutcome, DirectParams};
pub use exhaustive::exhaustive;
pub use greedy::{compute_first, transmit_first};
pub use random::{random_search, RandomParams};

use crate::channel::ChannelMode;
use crate::error::Result;
use crate::problem::Problem;
use crate::record::RunRecord;
use crate::utility::Oracle;

/// Power grid density of the exhaustive and greedy searches.
pub const DEFAULT_POWER_LEVELS: usize = 91;

/// Parameters of every baseline, with their usual defaults.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct BaselineParams {
    pub power_levels: usize,
    pub direct: DirectParams,
    pub cma_es: CmaParams,
    pub random: RandomParams,
}

impl Default for BaselineParams {
    fn default() -> Self {
        Self {
            power_levels: DEFAULT_POWER_LEVELS,
            direct: DirectParams::default(),
            cma_es: CmaParams::default(),
            random: RandomParams::default(),
        }
    }
}

impl BaselineParams {
    pub fn validate(&self) -> Result<()> {
        use crate::error::Error::InvalidConfig;
        if self.power_levels < 1 {
            return Err(InvalidConfig("power_levels must be at least 1".into()));
        }
        if self.direct.max_evals < 1 || self.cma_es.max_evals < 1 || self.random.n < 1 {
            return Err(InvalidConfig("baseline evaluation caps must be positive".into()));
        }
        if self.cma_es.pop < 2 {
            return Err(InvalidConfig("CMA-ES population must be at least 2".into()));
        }
        if self.cma_es.sigma0.is_nan() || self.cma_es.sigma0 <= 0.0 {
            return Err(InvalidConfig("CMA-ES sigma0 must be positive".into()));
        }
        Ok(())
    }
}

/// Oracle wrapper for the constraint-blind baselines. Every call is recorded;
/// infeasible configurations score zero.
struct ZeroInfeasible<'a> {
    problem: &'a Problem,
    oracle: Oracle<'a>,
    record: RunRecord,
}

impl<'a> ZeroInfeasible<'a> {
    fn new(name: &str, problem: &'a Problem, mode: ChannelMode, seed: u64, cap: usize) -> Self {
        Self {
            problem,
            oracle: problem.oracle(mode, seed, cap),
            record: RunRecord::new(name, seed),
        }
    }

    /// Score of the unit-square point `x = [power, layer]`.
    fn score(&mut self, x: &[f64]) -> Result<f64> {
        let eval = self.oracle.evaluate(self.problem.system.denormalize(x[0], x[1]))?;
        self.record.push(&eval);
        Ok(if eval.cost.feasible { eval.utility } else { 0.0 })
    }

    fn finish(mut self) -> RunRecord {
        self.record.ledger_count = self.oracle.ledger().count();
        self.record
    }
}
