use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::ZeroInfeasible;
use crate::channel::ChannelMode;
use crate::error::Result;
use crate::problem::Problem;
use crate::record::RunRecord;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RandomParams {
    /// Number of uniform samples.
    pub n: usize,
}

impl Default for RandomParams {
    fn default() -> Self {
        Self { n: 300 }
    }
}

/// `n` uniform points of the unit square, denormalised and evaluated.
pub fn random_search(problem: &Problem, params: &RandomParams, mode: ChannelMode, seed: u64) -> Result<RunRecord> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut obj = ZeroInfeasible::new("random", problem, mode, seed, params.n);
    for _ in 0..params.n {
        let x: [f64; 2] = [rng.random(), rng.random()];
        obj.score(&x)?;
    }
    Ok(obj.finish())
}
