//! Seed sweeps over several algorithms with per-run, summary and regret CSVs.

use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::regret::{average_mean_regret, compute_regret, decay_exponent, RegretCurve};
use crate::baselines::{self, BaselineParams};
use crate::channel::{load_trace, synth_trace, ChannelMode, SynthParams};
use crate::error::{Error, Result};
use crate::optimizer::{self, RunConfig};
use crate::problem::{HardwareConfig, Problem, BUNDLED_PROFILE_CSV, BUNDLED_SURFACE_CSV, BUNDLED_TRACE_CSV};
use crate::record::{rows_to_csv, RunRecord};
use crate::system::LayerProfile;
use crate::utility::UtilitySurface;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum AlgoKind {
    Bayes,
    BasicBo,
    Exhaustive,
    Direct,
    CmaEs,
    Random,
    TransmitFirst,
    ComputeFirst,
}

impl AlgoKind {
    pub const ALL: [AlgoKind; 8] = [
        AlgoKind::Bayes,
        AlgoKind::BasicBo,
        AlgoKind::Exhaustive,
        AlgoKind::Direct,
        AlgoKind::CmaEs,
        AlgoKind::Random,
        AlgoKind::TransmitFirst,
        AlgoKind::ComputeFirst,
    ];

    pub fn name(self) -> &'static str {
        match self {
            AlgoKind::Bayes => "bayes",
            AlgoKind::BasicBo => "basic-bo",
            AlgoKind::Exhaustive => "exhaustive",
            AlgoKind::Direct => "direct",
            AlgoKind::CmaEs => "cma-es",
            AlgoKind::Random => "random",
            AlgoKind::TransmitFirst => "transmit-first",
            AlgoKind::ComputeFirst => "compute-first",
        }
    }

    /// GP-based methods, for which regret curves are written.
    pub fn is_bo(self) -> bool {
        matches!(self, AlgoKind::Bayes | AlgoKind::BasicBo)
    }
}

impl fmt::Display for AlgoKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for AlgoKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        AlgoKind::ALL
            .into_iter()
            .find(|a| a.name() == s)
            .ok_or_else(|| Error::InvalidConfig(format!("unknown algorithm `{s}`")))
    }
}

/// Runs one algorithm on `problem` with the given seed.
pub fn run_algorithm(
    algo: AlgoKind,
    problem: &Problem,
    bayes: &RunConfig,
    params: &BaselineParams,
    mode: ChannelMode,
    seed: u64,
) -> Result<RunRecord> {
    let cfg = RunConfig {
        seed,
        channel_mode: mode,
        ..*bayes
    };
    match algo {
        AlgoKind::Bayes => optimizer::run(&cfg, problem),
        AlgoKind::BasicBo => optimizer::run_basic_bo(&cfg, problem),
        AlgoKind::Exhaustive => baselines::exhaustive(problem, params.power_levels, mode, seed),
        AlgoKind::Direct => baselines::direct_search(problem, &params.direct, mode, seed),
        AlgoKind::CmaEs => baselines::cma_es(problem, &params.cma_es, mode, seed),
        AlgoKind::Random => baselines::random_search(problem, &params.random, mode, seed),
        AlgoKind::TransmitFirst => baselines::transmit_first(problem, params.power_levels, mode, seed),
        AlgoKind::ComputeFirst => baselines::compute_first(problem, params.power_levels, mode, seed),
    }
}

/// Everything a comparison run needs; every field has a default, so a JSON
/// config only lists what it changes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ExperimentSpec {
    /// Layer profile CSV; the bundled profile when absent.
    pub profile: Option<PathBuf>,
    /// Utility surface CSV; the bundled surface when absent.
    pub surface: Option<PathBuf>,
    /// Channel trace CSV; the bundled trace when absent and no synthetic
    /// parameters are given.
    pub trace: Option<PathBuf>,
    /// Generate the trace instead of reading one.
    pub synth_channel: Option<SynthParams>,
    pub hardware: HardwareConfig,
    pub algorithms: Vec<AlgoKind>,
    pub seeds: Vec<u64>,
    pub out: PathBuf,
    pub channel_mode: ChannelMode,
    pub bayes: RunConfig,
    pub baselines: BaselineParams,
}

impl Default for ExperimentSpec {
    fn default() -> Self {
        Self {
            profile: None,
            surface: None,
            trace: None,
            synth_channel: None,
            hardware: HardwareConfig::default(),
            algorithms: AlgoKind::ALL.to_vec(),
            seeds: (0..10).collect(),
            out: PathBuf::from("results"),
            channel_mode: ChannelMode::Frozen,
            bayes: RunConfig::default(),
            baselines: BaselineParams::default(),
        }
    }
}

impl ExperimentSpec {
    pub fn from_json_str(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_json_str(&text)
    }

    pub fn validate(&self) -> Result<()> {
        if self.algorithms.is_empty() {
            return Err(Error::InvalidConfig("no algorithms selected".into()));
        }
        if self.seeds.is_empty() {
            return Err(Error::InvalidConfig("no seeds selected".into()));
        }
        if self.trace.is_some() && self.synth_channel.is_some() {
            return Err(Error::InvalidConfig(
                "give either a trace file or synthetic channel parameters".into(),
            ));
        }
        self.bayes.validate()?;
        self.baselines.validate()
    }

    /// Loads the data files, falling back to the bundled ones.
    pub fn problem(&self) -> Result<Problem> {
        let profile = match &self.profile {
            Some(p) => LayerProfile::load(p)?,
            None => LayerProfile::from_csv_str(BUNDLED_PROFILE_CSV, "bundled profile")?,
        };
        let surface = match &self.surface {
            Some(p) => UtilitySurface::load(p)?,
            None => UtilitySurface::from_csv_str(BUNDLED_SURFACE_CSV, "bundled surface")?,
        };
        let trace = match (&self.trace, &self.synth_channel) {
            (Some(p), _) => load_trace(p)?,
            (None, Some(params)) => synth_trace(params)?,
            (None, None) => crate::channel::ChannelTrace::from_csv_str(BUNDLED_TRACE_CSV, "bundled trace")?,
        };
        Problem::from_parts(profile, self.hardware, surface, trace)
    }
}

/// One row of `summary.csv`, in the column order of the comparison table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SummaryRow {
    pub algorithm: String,
    /// Oracle calls charged to the run.
    pub max_iterations: usize,
    pub split_layer: Option<usize>,
    pub power_w: Option<f64>,
    pub utility: Option<f64>,
    pub energy_j: Option<f64>,
    pub delay_s: Option<f64>,
    pub seed: u64,
}

impl SummaryRow {
    pub fn of(record: &RunRecord) -> Self {
        let best = record.best.map(|b| (b, record.iterations[b.iteration - 1].cost));
        Self {
            algorithm: record.algorithm.clone(),
            max_iterations: record.ledger_count,
            split_layer: best.map(|(b, _)| b.config.layer),
            power_w: best.map(|(b, _)| b.config.power_w),
            utility: best.map(|(b, _)| b.utility),
            energy_j: best.map(|(_, c)| c.total_energy()),
            delay_s: best.map(|(_, c)| c.total_delay()),
            seed: record.seed,
        }
    }
}

/// Seed-averaged regret of one BO variant.
#[derive(Debug, Clone, PartialEq)]
pub struct RegretSummary {
    pub algo: AlgoKind,
    pub curves: Vec<(u64, RegretCurve)>,
    pub mean_regret: Vec<f64>,
    /// Fitted slope of the seed-averaged mean regret over the adaptive steps.
    pub exponent: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentOutcome {
    /// Records ordered by algorithm, then seed, as listed in the experiment.
    pub records: Vec<(AlgoKind, RunRecord)>,
    pub regrets: Vec<RegretSummary>,
}

impl ExperimentOutcome {
    pub fn summary(&self) -> Vec<SummaryRow> {
        self.records.iter().map(|(_, r)| SummaryRow::of(r)).collect()
    }

    pub fn summary_csv(&self) -> String {
        rows_to_csv(&self.summary())
    }

    pub fn records_of(&self, algo: AlgoKind) -> impl Iterator<Item = &RunRecord> {
        self.records.iter().filter(move |(a, _)| *a == algo).map(|(_, r)| r)
    }

    pub fn any_without_feasible(&self) -> bool {
        self.records.iter().any(|(_, r)| r.best.is_none())
    }

    /// Writes every CSV under `dir`: `runs/<algo>_seed<k>.csv`, `summary.csv`,
    /// and for BO variants `regret/<algo>_seed<k>.csv`, `regret/<algo>_mean.csv`
    /// and `regret/exponents.csv`.
    pub fn write(&self, dir: &Path) -> Result<()> {
        let runs = dir.join("runs");
        create_dir(&runs)?;
        for (algo, r) in &self.records {
            r.write_csv(runs.join(format!("{algo}_seed{}.csv", r.seed)))?;
        }
        write_file(&dir.join("summary.csv"), &self.summary_csv())?;
        if self.regrets.is_empty() {
            return Ok(());
        }
        let regret_dir = dir.join("regret");
        create_dir(&regret_dir)?;
        let mut exponents = Vec::new();
        for s in &self.regrets {
            for (seed, c) in &s.curves {
                write_file(
                    &regret_dir.join(format!("{}_seed{seed}.csv", s.algo)),
                    &rows_to_csv(&c.rows()),
                )?;
            }
            let mean: Vec<MeanRegretRow> = s
                .mean_regret
                .iter()
                .enumerate()
                .map(|(i, m)| MeanRegretRow {
                    iter: i + 1,
                    mean_regret: *m,
                })
                .collect();
            write_file(&regret_dir.join(format!("{}_mean.csv", s.algo)), &rows_to_csv(&mean))?;
            exponents.push(ExponentRow {
                algorithm: s.algo.name().to_string(),
                exponent: s.exponent,
            });
        }
        write_file(&regret_dir.join("exponents.csv"), &rows_to_csv(&exponents))
    }
}

#[derive(Debug, Serialize)]
struct MeanRegretRow {
    iter: usize,
    mean_regret: f64,
}

#[derive(Debug, Serialize)]
struct ExponentRow {
    algorithm: String,
    exponent: Option<f64>,
}

fn create_dir(dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))
}

fn write_file(path: &Path, text: &str) -> Result<()> {
    std::fs::write(path, text).map_err(|e| Error::io(path, e))
}

/// Worker count from `SPLITEDGE_THREADS`, or rayon's default when unset.
pub fn thread_count() -> Result<Option<usize>> {
    match std::env::var("SPLITEDGE_THREADS") {
        Ok(v) => v
            .trim()
            .parse::<usize>()
            .ok()
            .filter(|n| *n > 0)
            .map(Some)
            .ok_or_else(|| Error::InvalidConfig(format!("SPLITEDGE_THREADS must be a positive integer, got `{v}`"))),
        Err(_) => Ok(None),
    }
}

/// Runs every (algorithm, seed) job on a bounded pool and computes regret for
/// the BO variants. The result does not depend on the pool size.
pub fn run_experiment_on(spec: &ExperimentSpec, problem: &Problem) -> Result<ExperimentOutcome> {
    spec.validate()?;
    let jobs: Vec<(AlgoKind, u64)> = spec
        .algorithms
        .iter()
        .flat_map(|&a| spec.seeds.iter().map(move |&s| (a, s)))
        .collect();
    let needs_regret = spec.algorithms.iter().any(|a| a.is_bo());

    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(n) = thread_count()? {
        builder = builder.num_threads(n);
    }
    let pool = builder
        .build()
        .map_err(|e| Error::InvalidConfig(format!("cannot start worker pool: {e}")))?;
    let (records, optima) = pool.install(|| -> Result<_> {
        let records = jobs
            .par_iter()
            .map(|&(a, s)| {
                run_algorithm(a, problem, &spec.bayes, &spec.baselines, spec.channel_mode, s).map(|r| (a, r))
            })
            .collect::<Result<Vec<_>>>()?;
        // Regret reference: the exhaustive optimum on the seed's starting frame.
        let optima = if needs_regret {
            spec.seeds
                .par_iter()
                .map(|&s| {
                    baselines::exhaustive(problem, spec.baselines.power_levels, ChannelMode::Frozen, s)
                        .map(|r| (s, r.best_utility().unwrap_or(0.0)))
                })
                .collect::<Result<Vec<_>>>()?
        } else {
            Vec::new()
        };
        Ok((records, optima))
    })?;

    let mut regrets = Vec::new();
    for algo in spec.algorithms.iter().copied().filter(|a| a.is_bo()) {
        let curves: Vec<(u64, RegretCurve)> = records
            .iter()
            .filter(|(a, _)| *a == algo)
            .map(|(_, r)| {
                let grid_opt = optima.iter().find(|(s, _)| *s == r.seed).map_or(0.0, |o| o.1);
                // Continuous-power runs may land on a feasible point between grid levels.
                let optimum = grid_opt.max(r.best_utility().unwrap_or(0.0));
                (r.seed, compute_regret(r, optimum))
            })
            .collect();
        let plain: Vec<RegretCurve> = curves.iter().map(|(_, c)| c.clone()).collect();
        let mean_regret = average_mean_regret(&plain, spec.bayes.budget);
        let exponent = decay_exponent(&mean_regret, spec.bayes.n_init);
        regrets.push(RegretSummary {
            algo,
            curves,
            mean_regret,
            exponent,
        });
    }
    Ok(ExperimentOutcome { records, regrets })
}

/// Loads the problem, runs the experiment and writes its CSVs to `spec.out`.
pub fn run_experiment(spec: &ExperimentSpec) -> Result<ExperimentOutcome> {
    let problem = spec.problem()?;
    let outcome = run_experiment_on(spec, &problem)?;
    outcome.write(&spec.out)?;
    Ok(outcome)
}
