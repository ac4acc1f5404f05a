//! Per-iteration log of an optimisation run and its CSV form.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::system::{csv_error, CostBreakdown, SplitConfig};
use crate::utility::Evaluation;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IterationRecord {
    /// 1-based oracle call index within the run.
    pub iteration: usize,
    pub config: SplitConfig,
    pub utility: f64,
    pub feasible: bool,
    pub cost: CostBreakdown,
    /// Best feasible utility observed up to and including this call.
    pub best_so_far: Option<f64>,
}

/// Best feasible configuration of a run.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Incumbent {
    pub config: SplitConfig,
    pub utility: f64,
    pub iteration: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunRecord {
    pub algorithm: String,
    pub seed: u64,
    pub iterations: Vec<IterationRecord>,
    pub best: Option<Incumbent>,
    /// Oracle calls charged to the run's ledger.
    pub ledger_count: usize,
}

impl RunRecord {
    pub fn new(algorithm: impl Into<String>, seed: u64) -> Self {
        Self {
            algorithm: algorithm.into(),
            seed,
            iterations: Vec::new(),
            best: None,
            ledger_count: 0,
        }
    }

    /// Appends an evaluation; returns `true` when it became the new incumbent.
    pub fn push(&mut self, eval: &Evaluation) -> bool {
        let iteration = self.iterations.len() + 1;
        let improved = eval.cost.feasible && self.best.is_none_or(|b| eval.utility > b.utility);
        if improved {
            self.best = Some(Incumbent {
                config: eval.config,
                utility: eval.utility,
                iteration,
            });
        }
        self.iterations.push(IterationRecord {
            iteration,
            config: eval.config,
            utility: eval.utility,
            feasible: eval.cost.feasible,
            cost: eval.cost,
            best_so_far: self.best.map(|b| b.utility),
        });
        improved
    }

    pub fn len(&self) -> usize {
        self.iterations.len()
    }

    pub fn is_empty(&self) -> bool {
        self.iterations.is_empty()
    }

    pub fn incumbent(&self) -> Result<&Incumbent> {
        self.best.as_ref().ok_or(Error::NoFeasiblePoint)
    }

    pub fn best_utility(&self) -> Option<f64> {
        self.best.map(|b| b.utility)
    }

    /// First oracle call (1-based) at which a feasible utility of at least
    /// `target` was observed.
    pub fn first_reaching(&self, target: f64) -> Option<usize> {
        self.iterations
            .iter()
            .find(|it| it.feasible && it.utility >= target)
            .map(|it| it.iteration)
    }

    pub fn csv_rows(&self) -> Vec<RecordRow> {
        self.iterations.iter().map(RecordRow::from).collect()
    }

    pub fn to_csv_string(&self) -> String {
        rows_to_csv(&self.csv_rows())
    }

    pub fn write_csv(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        std::fs::write(path, self.to_csv_string()).map_err(|e| Error::io(path, e))
    }
}

/// One line of the run CSV:
/// `iter,power_w,layer,utility,feasible,energy_j,delay_s,best_so_far`.
/// `best_so_far` is empty until the first feasible observation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RecordRow {
    pub iter: usize,
    pub power_w: f64,
    pub layer: usize,
    pub utility: f64,
    pub feasible: bool,
    pub energy_j: f64,
    pub delay_s: f64,
    pub best_so_far: Option<f64>,
}

impl From<&IterationRecord> for RecordRow {
    fn from(it: &IterationRecord) -> Self {
        Self {
            iter: it.iteration,
            power_w: it.config.power_w,
            layer: it.config.layer,
            utility: it.utility,
            feasible: it.feasible,
            energy_j: it.cost.total_energy(),
            delay_s: it.cost.total_delay(),
            best_so_far: it.best_so_far,
        }
    }
}

pub fn rows_to_csv<T: Serialize>(rows: &[T]) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    for r in rows {
        w.serialize(r).expect("in-memory CSV write");
    }
    String::from_utf8(w.into_inner().expect("in-memory CSV flush")).expect("CSV is UTF-8")
}

pub fn rows_from_csv<T: for<'de> Deserialize<'de>>(text: &str, source_name: &str) -> Result<Vec<T>> {
    let mut r = csv::Reader::from_reader(text.as_bytes());
    r.deserialize()
        .map(|row| row.map_err(|e| csv_error(source_name, &e)))
        .collect()
}

pub fn read_record_rows(path: impl AsRef<Path>) -> Result<Vec<RecordRow>> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    rows_from_csv(&text, &path.display().to_string())
}
