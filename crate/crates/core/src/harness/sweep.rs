//! Per-layer delay and energy statistics over every trace frame at a fixed
//! transmit power.

use serde::{Deserialize, Serialize};

use crate::problem::Problem;
use crate::system::SplitConfig;

/// Mean, minimum and maximum of one quantity over the trace.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Stat {
    pub mean: f64,
    pub min: f64,
    pub max: f64,
}

impl Stat {
    fn of(values: &[f64]) -> Self {
        Self {
            mean: values.iter().sum::<f64>() / values.len() as f64,
            min: values.iter().copied().fold(f64::INFINITY, f64::min),
            max: values.iter().copied().fold(f64::NEG_INFINITY, f64::max),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LayerStats {
    pub layer: usize,
    pub tau_transmit: Stat,
    pub tau_device: Stat,
    pub tau_server: Stat,
    pub e_compute: Stat,
    pub e_transmit: Stat,
}

pub fn profile_sweep(problem: &Problem, power_w: f64) -> Vec<LayerStats> {
    let gains: Vec<f64> = (0..problem.trace.len()).map(|f| problem.trace.gain_at(f)).collect();
    (1..=problem.num_layers())
        .map(|layer| {
            let costs: Vec<_> = gains
                .iter()
                .map(|&g| problem.system.cost(&SplitConfig::new(layer, power_w), g))
                .collect();
            let stat = |f: fn(&crate::system::CostBreakdown) -> f64| Stat::of(&costs.iter().map(f).collect::<Vec<_>>());
            LayerStats {
                layer,
                tau_transmit: stat(|c| c.tau_transmit_s),
                tau_device: stat(|c| c.tau_device_s),
                tau_server: stat(|c| c.tau_server_s),
                e_compute: stat(|c| c.e_compute_j),
                e_transmit: stat(|c| c.e_transmit_j),
            }
        })
        .collect()
}

/// Flat CSV line of [`LayerStats`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub layer: usize,
    pub tau_transmit_mean: f64,
    pub tau_transmit_min: f64,
    pub tau_transmit_max: f64,
    pub tau_device_mean: f64,
    pub tau_device_min: f64,
    pub tau_device_max: f64,
    pub tau_server_mean: f64,
    pub tau_server_min: f64,
    pub tau_server_max: f64,
    pub e_compute_mean: f64,
    pub e_compute_min: f64,
    pub e_compute_max: f64,
    pub e_transmit_mean: f64,
    pub e_transmit_min: f64,
    pub e_transmit_max: f64,
}

impl From<&LayerStats> for SweepRow {
    fn from(s: &LayerStats) -> Self {
        Self {
            layer: s.layer,
            tau_transmit_mean: s.tau_transmit.mean,
            tau_transmit_min: s.tau_transmit.min,
            tau_transmit_max: s.tau_transmit.max,
            tau_device_mean: s.tau_device.mean,
            tau_device_min: s.tau_device.min,
            tau_device_max: s.tau_device.max,
            tau_server_mean: s.tau_server.mean,
            tau_server_min: s.tau_server.min,
            tau_server_max: s.tau_server.max,
            e_compute_mean: s.e_compute.mean,
            e_compute_min: s.e_compute.min,
            e_compute_max: s.e_compute.max,
            e_transmit_mean: s.e_transmit.mean,
            e_transmit_min: s.e_transmit.min,
            e_transmit_max: s.e_transmit.max,
        }
    }
}

pub fn sweep_csv(stats: &[LayerStats]) -> String {
    crate::record::rows_to_csv(&stats.iter().map(SweepRow::from).collect::<Vec<_>>())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channel::{ChannelTrace, TraceSource};

    #[test]
    fn constant_trace_collapses_statistics() {
        let mut p = Problem::bundled();
        p.trace = ChannelTrace::from_gains_db(vec![-100.0; 6], TraceSource::Synthetic, None).unwrap();
        for s in profile_sweep(&p, 0.3) {
            for st in [s.tau_transmit, s.tau_device, s.tau_server, s.e_compute, s.e_transmit] {
                assert_eq!(st.min, st.max);
                assert!((st.mean - st.min).abs() <= 1e-12 * st.min.abs());
            }
        }
    }

    #[test]
    fn smallest_payload_transmits_fastest() {
        let p = Problem::bundled();
        let stats = profile_sweep(&p, 0.4);
        let fastest = stats
            .iter()
            .min_by(|a, b| a.tau_transmit.mean.total_cmp(&b.tau_transmit.mean))
            .unwrap();
        assert_eq!(fastest.layer, p.num_layers());
        assert!(stats
            .iter()
            .all(|s| s.tau_transmit.min <= s.tau_transmit.mean && s.tau_transmit.mean <= s.tau_transmit.max));
        let text = sweep_csv(&stats);
        assert_eq!(text.lines().count(), 38);
    }
}
