//! Black-box utility oracle with deadline truncation and call accounting.
//!
//! The oracle is the single place where evaluations are counted, so every
//! optimiser in the crate is charged the same way.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::channel::{ChannelMode, ChannelTrace};
use crate::error::{Error, Result};
use crate::system::{csv_error, Budget, CostBreakdown, SplitConfig, SystemModel};

/// Accuracy attainable per split layer, plus the truncation rule applied when
/// the deadline is missed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UtilitySurface {
    /// Accuracy when all layers complete, index 0 is split layer 1.
    pub base_accuracy: Vec<f64>,
    pub truncation_penalty_per_layer: f64,
    pub floor: f64,
}

#[derive(Debug, Deserialize)]
struct SurfaceRow {
    layer_index: usize,
    base_accuracy: f64,
}

const PENALTY_KEY: &str = "truncation_penalty_per_layer";
const FLOOR_KEY: &str = "floor";

impl UtilitySurface {
    pub fn new(base_accuracy: Vec<f64>, truncation_penalty_per_layer: f64, floor: f64) -> Result<Self> {
        if base_accuracy.is_empty() {
            return Err(Error::InvalidConfig("utility surface has no layers".into()));
        }
        let unit = |v: f64| (0.0..=1.0).contains(&v);
        if !base_accuracy.iter().all(|a| unit(*a)) || !unit(floor) {
            return Err(Error::InvalidConfig("accuracies must lie in [0, 1]".into()));
        }
        if base_accuracy.iter().any(|a| *a < floor) {
            return Err(Error::InvalidConfig("floor exceeds a base accuracy".into()));
        }
        if !(truncation_penalty_per_layer >= 0.0 && truncation_penalty_per_layer.is_finite()) {
            return Err(Error::InvalidConfig("truncation penalty must be nonnegative".into()));
        }
        Ok(Self {
            base_accuracy,
            truncation_penalty_per_layer,
            floor,
        })
    }

    pub fn num_layers(&self) -> usize {
        self.base_accuracy.len()
    }

    pub fn base(&self, layer: usize) -> f64 {
        self.base_accuracy[layer - 1]
    }

    /// Number of tail layers dropped when the pipeline overruns the deadline:
    /// the unfinished share of the end-to-end delay, in whole layers, rounded up.
    pub fn skipped_layers(&self, total_delay_s: f64, tau_max_s: f64) -> usize {
        let l = self.num_layers();
        if total_delay_s <= tau_max_s {
            return 0;
        }
        if !total_delay_s.is_finite() {
            return l;
        }
        let fraction = (total_delay_s - tau_max_s) / total_delay_s;
        ((fraction * l as f64).ceil() as usize).min(l)
    }

    /// Accuracy of `config` given its cost, without touching any ledger.
    pub fn accuracy(&self, config: &SplitConfig, cost: &CostBreakdown, budget: &Budget) -> f64 {
        let base = self.base(config.layer);
        if cost.total_energy() > budget.e_max_j {
            return self.floor;
        }
        let skipped = self.skipped_layers(cost.total_delay(), budget.tau_max_s);
        if skipped == 0 {
            return base;
        }
        (base - self.truncation_penalty_per_layer * skipped as f64).max(self.floor)
    }

    pub fn from_csv_str(text: &str, source_name: &str) -> Result<Self> {
        let mut penalty = None;
        let mut floor = None;
        for (i, line) in text.lines().enumerate() {
            let Some(meta) = line.trim().strip_prefix('#') else {
                continue;
            };
            let Some((key, value)) = meta.trim().split_once('=') else {
                continue;
            };
            let parsed = value
                .trim()
                .parse::<f64>()
                .map_err(|e| Error::parse(source_name, i + 1, format!("bad {}: {e}", key.trim())));
            match key.trim() {
                PENALTY_KEY => penalty = Some(parsed?),
                FLOOR_KEY => floor = Some(parsed?),
                _ => {}
            }
        }
        let mut reader = csv::ReaderBuilder::new()
            .comment(Some(b'#'))
            .trim(csv::Trim::All)
            .from_reader(text.as_bytes());
        let mut base = Vec::new();
        for (i, row) in reader.deserialize::<SurfaceRow>().enumerate() {
            let row = row.map_err(|e| csv_error(source_name, &e))?;
            if row.layer_index != i + 1 {
                return Err(Error::parse(
                    source_name,
                    i + 2,
                    format!("expected layer_index {}, found {}", i + 1, row.layer_index),
                ));
            }
            base.push(row.base_accuracy);
        }
        Self::new(base, penalty.unwrap_or(0.0), floor.unwrap_or(0.0))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_csv_str(&text, &path.display().to_string())
    }

    pub fn to_csv_string(&self) -> String {
        let mut out = format!(
            "# {PENALTY_KEY}={}\n# {FLOOR_KEY}={}\nlayer_index,base_accuracy\n",
            self.truncation_penalty_per_layer, self.floor
        );
        for (i, a) in self.base_accuracy.iter().enumerate() {
            out.push_str(&format!("{},{a}\n", i + 1));
        }
        out
    }
}

/// Oracle-call counter with a hard cap.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct EvalLedger {
    count: usize,
    cap: usize,
}

impl EvalLedger {
    pub fn new(cap: usize) -> Self {
        Self { count: 0, cap }
    }

    pub fn count(&self) -> usize {
        self.count
    }

    pub fn cap(&self) -> usize {
        self.cap
    }

    pub fn remaining(&self) -> usize {
        self.cap - self.count
    }

    pub fn is_exhausted(&self) -> bool {
        self.count >= self.cap
    }

    fn charge(&mut self) -> Result<()> {
        if self.is_exhausted() {
            return Err(Error::BudgetExhausted { cap: self.cap });
        }
        self.count += 1;
        Ok(())
    }
}

/// One charged oracle call: accuracy of `config` under the given cost.
pub fn utility(
    config: &SplitConfig,
    cost: &CostBreakdown,
    surface: &UtilitySurface,
    budget: &Budget,
    ledger: &mut EvalLedger,
) -> Result<f64> {
    ledger.charge()?;
    Ok(surface.accuracy(config, cost, budget))
}

/// Result of one oracle call.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Evaluation {
    pub config: SplitConfig,
    pub cost: CostBreakdown,
    pub utility: f64,
}

/// Everything an optimiser may query: the analytic cost model for free and
/// the utility only through [`Oracle::evaluate`], which is charged.
#[derive(Debug)]
pub struct Oracle<'a> {
    pub system: &'a SystemModel,
    pub surface: &'a UtilitySurface,
    trace: &'a ChannelTrace,
    mode: ChannelMode,
    frame_offset: usize,
    ledger: EvalLedger,
}

impl<'a> Oracle<'a> {
    pub fn new(
        system: &'a SystemModel,
        surface: &'a UtilitySurface,
        trace: &'a ChannelTrace,
        mode: ChannelMode,
        frame_offset: usize,
        cap: usize,
    ) -> Self {
        Self {
            system,
            surface,
            trace,
            mode,
            frame_offset,
            ledger: EvalLedger::new(cap),
        }
    }

    pub fn ledger(&self) -> &EvalLedger {
        &self.ledger
    }

    pub fn num_layers(&self) -> usize {
        self.system.num_layers()
    }

    /// Channel gain the next oracle call will see.
    pub fn current_gain(&self) -> f64 {
        let frame = match self.mode {
            ChannelMode::Frozen => self.frame_offset,
            ChannelMode::Advance => self.frame_offset + self.ledger.count(),
        };
        self.trace.gain_at(frame)
    }

    /// Analytic cost under the current channel; never charged.
    pub fn cost(&self, config: &SplitConfig) -> CostBreakdown {
        self.system.cost(config, self.current_gain())
    }

    pub fn evaluate(&mut self, config: SplitConfig) -> Result<Evaluation> {
        self.system.check(&config)?;
        let cost = self.cost(&config);
        let utility = utility(&config, &cost, self.surface, &self.system.budget, &mut self.ledger)?;
        Ok(Evaluation { config, cost, utility })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cost(energy: f64, delay: f64, budget: &Budget) -> CostBreakdown {
        let mut c = CostBreakdown {
            e_compute_j: energy,
            e_transmit_j: 0.0,
            tau_device_s: delay,
            tau_transmit_s: 0.0,
            tau_server_s: 0.0,
            feasible: false,
        };
        c.feasible = c.meets(budget);
        c
    }

    fn surface() -> UtilitySurface {
        let mut base = vec![0.84375; 37];
        base[5] = 0.859375;
        base[6] = 0.875;
        base[7] = 0.859375;
        UtilitySurface::new(base, 0.02, 0.0).unwrap()
    }

    #[test]
    fn feasible_returns_base() {
        let b = Budget::default();
        let mut ledger = EvalLedger::new(3);
        let u = utility(
            &SplitConfig::new(7, 0.38),
            &cost(1.0, 4.9, &b),
            &surface(),
            &b,
            &mut ledger,
        )
        .unwrap();
        assert_eq!(u, 0.875);
        assert_eq!(ledger.count(), 1);
    }

    #[test]
    fn mid_overrun_by_hand() {
        // delay 6.0 s against 5.0 s: unfinished share 1/6, 37/6 = 6.1667 -> 7 layers,
        // 0.875 - 7 * 0.02 = 0.735
        let b = Budget::default();
        let s = surface();
        assert_eq!(s.skipped_layers(6.0, 5.0), 7);
        let u = s.accuracy(&SplitConfig::new(7, 0.38), &cost(1.0, 6.0, &b), &b);
        assert!((u - 0.735).abs() < 1e-12, "{u}");
    }

    #[test]
    fn huge_overrun_hits_floor() {
        let b = Budget::default();
        // 37 skipped layers at 0.05 each exceed any base accuracy.
        let s = UtilitySurface::new(vec![0.84375; 37], 0.05, 0.0).unwrap();
        let u = s.accuracy(&SplitConfig::new(3, 0.2), &cost(1.0, 1e6, &b), &b);
        assert_eq!(u, 0.0);
        let u = s.accuracy(&SplitConfig::new(3, 0.2), &cost(1.0, f64::INFINITY, &b), &b);
        assert_eq!(u, 0.0);
    }

    #[test]
    fn energy_overrun_is_floor() {
        let b = Budget::default();
        let s = UtilitySurface::new(vec![0.9; 4], 0.01, 0.1).unwrap();
        assert_eq!(s.accuracy(&SplitConfig::new(2, 0.2), &cost(5.01, 1.0, &b), &b), 0.1);
    }

    #[test]
    fn ledger_caps_calls() {
        let b = Budget::default();
        let s = surface();
        let mut ledger = EvalLedger::new(2);
        let c = cost(1.0, 1.0, &b);
        for expected in 1..=2 {
            utility(&SplitConfig::new(1, 0.2), &c, &s, &b, &mut ledger).unwrap();
            assert_eq!(ledger.count(), expected);
        }
        let err = utility(&SplitConfig::new(1, 0.2), &c, &s, &b, &mut ledger).unwrap_err();
        assert!(matches!(err, Error::BudgetExhausted { cap: 2 }));
        assert_eq!(ledger.count(), 2);
    }

    #[test]
    fn surface_validation() {
        assert!(UtilitySurface::new(vec![], 0.0, 0.0).is_err());
        assert!(UtilitySurface::new(vec![1.2], 0.0, 0.0).is_err());
        assert!(UtilitySurface::new(vec![0.5], 0.0, 0.6).is_err());
        assert!(UtilitySurface::new(vec![0.5], -1.0, 0.0).is_err());
    }

    #[test]
    fn surface_csv_round_trip() {
        let s = surface();
        assert_eq!(UtilitySurface::from_csv_str(&s.to_csv_string(), "mem").unwrap(), s);
    }
}
