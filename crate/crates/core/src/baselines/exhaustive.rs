use crate::channel::ChannelMode;
use crate::error::Result;
use crate::problem::Problem;
use crate::record::RunRecord;
use crate::system::SplitConfig;

/// Evaluates every (layer, power level) pair once, layer-major.
pub fn exhaustive(problem: &Problem, power_levels: usize, mode: ChannelMode, seed: u64) -> Result<RunRecord> {
    let powers = problem.system.power_levels(power_levels);
    let mut oracle = problem.oracle(mode, seed, problem.num_layers() * powers.len());
    let mut record = RunRecord::new("exhaustive", seed);
    for layer in 1..=problem.num_layers() {
        for &p in &powers {
            record.push(&oracle.evaluate(SplitConfig::new(layer, p))?);
        }
    }
    record.ledger_count = oracle.ledger().count();
    Ok(record)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channel::{ChannelTrace, TraceSource};
    use crate::problem::HardwareConfig;
    use crate::system::{Budget, DeviceSpec, LayerProfile, RadioSpec, ServerSpec};
    use crate::utility::UtilitySurface;

    /// Two layers, unit radio, two power levels; feasibility worked out by hand.
    fn toy() -> Problem {
        let profile = LayerProfile::new(vec![1.0, 1.0], vec![3.0, 1.0], 8.0).unwrap();
        let hardware = HardwareConfig {
            device: DeviceSpec {
                freq_hz: 1.0,
                kappa: 0.25,
                eta: 1.0,
                p_min_w: 1.0,
                p_max_w: 3.0,
            },
            server: ServerSpec { freq_hz: 1.0, eta: 1.0 },
            radio: RadioSpec {
                bandwidth_hz: 1.0,
                noise_psd_dbm_hz: 30.0,
            },
            budget: Budget {
                e_max_j: 3.5,
                tau_max_s: 4.0,
            },
        };
        let surface = UtilitySurface::new(vec![0.6, 0.9], 0.1, 0.0).unwrap();
        let trace = ChannelTrace::from_gains_db(vec![0.0], TraceSource::Synthetic, None).unwrap();
        Problem::from_parts(profile, hardware, surface, trace).unwrap()
    }

    #[test]
    fn toy_two_by_two_matches_hand_enumeration() {
        // rate(P=1) = 1, rate(P=3) = 2 bit/s; compute energy 0.25 J per layer.
        // l=1, P=1: delay 1 + 3 + 1 = 5 > 4, overrun.   l=1, P=3: 1 + 1.5 + 1 = 3.5, energy 4.75 > 3.5.
        // l=2, P=1: delay 2 + 1 = 3, energy 1.5.          l=2, P=3: 2 + 0.5 = 2.5, energy 2.
        let p = toy();
        let r = exhaustive(&p, 2, ChannelMode::Frozen, 0).unwrap();
        assert_eq!(r.ledger_count, 4);
        let feasible: Vec<bool> = r.iterations.iter().map(|i| i.feasible).collect();
        assert_eq!(feasible, vec![false, false, true, true]);
        // First config overruns by 1 s of 5 s: ceil(0.2 * 2) = 1 layer skipped.
        assert!((r.iterations[0].utility - 0.5).abs() < 1e-12);
        assert_eq!(r.iterations[1].utility, 0.0);
        let best = r.incumbent().unwrap();
        assert_eq!(best.config, SplitConfig::new(2, 1.0));
        assert_eq!(best.utility, 0.9);
    }

    #[test]
    fn counts_layers_times_levels() {
        let p = toy();
        for levels in 1..6 {
            let r = exhaustive(&p, levels, ChannelMode::Advance, 3).unwrap();
            assert_eq!(r.ledger_count, 2 * levels);
            assert_eq!(r.len(), 2 * levels);
        }
    }
}
