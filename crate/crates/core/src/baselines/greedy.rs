//! Single-resource greedy heuristics. Both walk the analytic cost model, which
//! is free, and spend one oracle call on the configuration they settle on.

use crate::channel::ChannelMode;
use crate::error::Result;
use crate::problem::Problem;
use crate::record::RunRecord;
use crate::system::SplitConfig;

/// Maximum power first: the deepest feasible layer at `P_max`, lowering the
/// power one grid step at a time while no layer is feasible.
pub fn transmit_first(problem: &Problem, power_levels: usize, mode: ChannelMode, seed: u64) -> Result<RunRecord> {
    let powers = problem.system.power_levels(power_levels);
    let layers = problem.num_layers();
    let order = powers
        .iter()
        .rev()
        .flat_map(|&p| (1..=layers).rev().map(move |l| SplitConfig::new(l, p)));
    settle("transmit-first", problem, order, mode, seed)
}

/// Deepest layer first: the highest feasible power on layer `L`, backing off
/// one layer at a time while no power level is feasible.
pub fn compute_first(problem: &Problem, power_levels: usize, mode: ChannelMode, seed: u64) -> Result<RunRecord> {
    let powers = problem.system.power_levels(power_levels);
    let order = (1..=problem.num_layers())
        .rev()
        .flat_map(|l| powers.iter().rev().map(move |&p| SplitConfig::new(l, p)));
    settle("compute-first", problem, order, mode, seed)
}

/// Evaluates the first analytically feasible configuration of `order`. An
/// exhausted scan leaves the record empty, which reads as no feasible point.
fn settle(
    name: &str,
    problem: &Problem,
    mut order: impl Iterator<Item = SplitConfig>,
    mode: ChannelMode,
    seed: u64,
) -> Result<RunRecord> {
    let mut oracle = problem.oracle(mode, seed, 1);
    let mut record = RunRecord::new(name, seed);
    if let Some(config) = order.find(|c| oracle.cost(c).feasible) {
        record.push(&oracle.evaluate(config)?);
    }
    record.ledger_count = oracle.ledger().count();
    Ok(record)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::error::Error;
    use crate::system::Budget;

    fn with_budget(e_max_j: f64, tau_max_s: f64) -> Problem {
        let mut p = Problem::bundled();
        p.system.budget = Budget { e_max_j, tau_max_s };
        p
    }

    #[test]
    fn everything_feasible_picks_deepest_layer_at_max_power() {
        let p = with_budget(1e9, 1e9);
        for f in [transmit_first, compute_first] {
            let r = f(&p, 11, ChannelMode::Frozen, 0).unwrap();
            assert_eq!(r.ledger_count, 1);
            assert_eq!(r.incumbent().unwrap().config, SplitConfig::new(37, 0.5));
        }
    }

    #[test]
    fn nothing_feasible_is_no_feasible_point() {
        let p = with_budget(1e-9, 1e-9);
        for f in [transmit_first, compute_first] {
            let r = f(&p, 11, ChannelMode::Frozen, 0).unwrap();
            assert_eq!(r.ledger_count, 0);
            assert!(matches!(r.incumbent(), Err(Error::NoFeasiblePoint)));
        }
    }
}
