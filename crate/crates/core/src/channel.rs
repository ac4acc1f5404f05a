//! Per-task channel power gains, replayed from a CSV trace or synthesised.
//!
//! Synthetic traces use ChaCha8 (`rand_chacha::ChaCha8Rng`) seeded through
//! `SeedableRng::seed_from_u64`, with standard-normal draws from
//! `rand_distr::StandardNormal`. Both are platform independent, so a seed
//! names the same trace everywhere.

use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::system::csv_error;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TraceSource {
    File,
    Synthetic,
}

/// How trace frames are consumed during an optimisation run.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ChannelMode {
    /// One frame for the whole run.
    #[default]
    Frozen,
    /// Next frame for every oracle call.
    Advance,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChannelTrace {
    pub gains_db: Vec<f64>,
    pub source: TraceSource,
    pub seed: Option<u64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SynthParams {
    pub n_frames: usize,
    pub mean_gain_db: f64,
    pub fading_scale_db: f64,
    pub blockage_prob: f64,
    pub blockage_extra_db: f64,
    pub seed: u64,
}

impl Default for SynthParams {
    /// Outdoor link around -100.5 dB with light fading and occasional blockage.
    fn default() -> Self {
        Self {
            n_frames: 45,
            mean_gain_db: -100.5,
            fading_scale_db: 0.5,
            blockage_prob: 0.15,
            blockage_extra_db: 1.0,
            seed: 2025,
        }
    }
}

#[derive(Debug, Deserialize)]
struct TraceRow {
    frame: usize,
    gain_db: f64,
}

pub fn db_to_linear(db: f64) -> f64 {
    10f64.powf(db / 10.0)
}

pub fn linear_to_db(linear: f64) -> f64 {
    10.0 * linear.log10()
}

impl ChannelTrace {
    pub fn from_gains_db(gains_db: Vec<f64>, source: TraceSource, seed: Option<u64>) -> Result<Self> {
        if gains_db.is_empty() {
            return Err(Error::EmptyTrace);
        }
        if let Some(i) = gains_db.iter().position(|g| !g.is_finite()) {
            return Err(Error::InvalidConfig(format!("trace frame {i} is not finite")));
        }
        Ok(Self { gains_db, source, seed })
    }

    pub fn len(&self) -> usize {
        self.gains_db.len()
    }

    pub fn is_empty(&self) -> bool {
        self.gains_db.is_empty()
    }

    /// Linear gain of task `task_index`; indices wrap around the trace.
    pub fn gain_at(&self, task_index: usize) -> f64 {
        db_to_linear(self.gains_db[task_index % self.gains_db.len()])
    }

    pub fn from_csv_str(text: &str, source_name: &str) -> Result<Self> {
        let mut reader = csv::ReaderBuilder::new()
            .trim(csv::Trim::All)
            .from_reader(text.as_bytes());
        let mut gains = Vec::new();
        for (i, row) in reader.deserialize::<TraceRow>().enumerate() {
            let row = row.map_err(|e| csv_error(source_name, &e))?;
            if row.frame != i {
                return Err(Error::parse(
                    source_name,
                    i + 2,
                    format!("expected frame {i}, found {}", row.frame),
                ));
            }
            if !row.gain_db.is_finite() {
                return Err(Error::parse(source_name, i + 2, "gain_db is not finite"));
            }
            gains.push(row.gain_db);
        }
        Self::from_gains_db(gains, TraceSource::File, None)
    }

    pub fn to_csv_string(&self) -> String {
        let mut out = String::from("frame,gain_db\n");
        for (i, g) in self.gains_db.iter().enumerate() {
            out.push_str(&format!("{i},{g}\n"));
        }
        out
    }
}

pub fn load_trace(path: impl AsRef<Path>) -> Result<ChannelTrace> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    ChannelTrace::from_csv_str(&text, &path.display().to_string())
}

/// Log-normal shadowing around `mean_gain_db` with occasional blockage drops.
pub fn synth_trace(params: &SynthParams) -> Result<ChannelTrace> {
    if params.n_frames == 0 {
        return Err(Error::EmptyTrace);
    }
    if !(0.0..=1.0).contains(&params.blockage_prob) {
        return Err(Error::InvalidConfig(format!(
            "blockage probability {} outside [0, 1]",
            params.blockage_prob
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(params.seed);
    let gains = (0..params.n_frames)
        .map(|_| {
            let z: f64 = rng.sample(StandardNormal);
            let blocked = rng.random::<f64>() < params.blockage_prob;
            let mut g = params.mean_gain_db + params.fading_scale_db * z;
            if blocked {
                g -= params.blockage_extra_db;
            }
            g
        })
        .collect();
    ChannelTrace::from_gains_db(gains, TraceSource::Synthetic, Some(params.seed))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn params() -> SynthParams {
        SynthParams {
            n_frames: 64,
            mean_gain_db: -100.0,
            fading_scale_db: 2.0,
            blockage_prob: 0.2,
            blockage_extra_db: 6.0,
            seed: 11,
        }
    }

    #[test]
    fn load_two_rows() {
        let t = ChannelTrace::from_csv_str("frame,gain_db\n0,-100.0\n1,-95.5\n", "mem").unwrap();
        assert_eq!(t.len(), 2);
        assert_eq!(t.gains_db, vec![-100.0, -95.5]);
        assert_eq!(t.source, TraceSource::File);
        assert!((t.gain_at(0) / 1e-10 - 1.0).abs() < 1e-12);
    }

    #[test]
    fn empty_and_malformed_files() {
        assert!(matches!(ChannelTrace::from_csv_str("", "mem"), Err(Error::EmptyTrace)));
        assert!(matches!(
            ChannelTrace::from_csv_str("frame,gain_db\n", "mem"),
            Err(Error::EmptyTrace)
        ));
        assert!(matches!(
            ChannelTrace::from_csv_str("frame,gain_db\n0,abc\n", "mem"),
            Err(Error::Parse { .. })
        ));
        assert!(matches!(
            ChannelTrace::from_csv_str("frame,gain_db\n0,-1\n2,-3\n", "mem"),
            Err(Error::Parse { .. })
        ));
    }

    #[test]
    fn gain_wraps() {
        let t = ChannelTrace::from_gains_db(vec![0.0], TraceSource::File, None).unwrap();
        for i in 0..5 {
            assert_eq!(t.gain_at(i), 1.0);
        }
        let t = ChannelTrace::from_gains_db(vec![-30.0, -10.0, -20.0], TraceSource::File, None).unwrap();
        assert_eq!(t.gain_at(3), t.gain_at(0));
        assert!((t.gain_at(0) - 1e-3).abs() < 1e-18);
    }

    #[test]
    fn synth_constant_without_fading() {
        let p = SynthParams {
            fading_scale_db: 0.0,
            blockage_prob: 0.0,
            ..params()
        };
        let t = synth_trace(&p).unwrap();
        assert!(t.gains_db.iter().all(|g| *g == -100.0));
        assert_eq!(t.source, TraceSource::Synthetic);
    }

    #[test]
    fn synth_is_deterministic() {
        assert_eq!(synth_trace(&params()).unwrap(), synth_trace(&params()).unwrap());
        let other = synth_trace(&SynthParams { seed: 12, ..params() }).unwrap();
        assert_ne!(other, synth_trace(&params()).unwrap());
    }

    #[test]
    fn synth_full_blockage() {
        let p = SynthParams {
            fading_scale_db: 0.0,
            blockage_prob: 1.0,
            ..params()
        };
        assert!(synth_trace(&p).unwrap().gains_db.iter().all(|g| *g == -106.0));
    }

    #[test]
    fn synth_rejects_bad_params() {
        assert!(synth_trace(&SynthParams {
            n_frames: 0,
            ..params()
        })
        .is_err());
        assert!(synth_trace(&SynthParams {
            blockage_prob: 1.5,
            ..params()
        })
        .is_err());
    }

    #[test]
    fn csv_round_trip() {
        let t = synth_trace(&params()).unwrap();
        let back = ChannelTrace::from_csv_str(&t.to_csv_string(), "mem").unwrap();
        assert_eq!(back.gains_db, t.gains_db);
    }
}
