use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use splitedge::channel::SynthParams;
use splitedge::harness::{profile_sweep, run_experiment, sweep_csv, AlgoKind, ExperimentOutcome, ExperimentSpec};
use splitedge::{Error, Result};

/// Constrained Bayesian optimisation of split layer and transmit power.
#[derive(Debug, Parser)]
#[command(name = "splitedge", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Run selected algorithms and print their summary rows.
    Run(Common),
    /// Run the full comparison suite and write every CSV.
    Compare(Common),
    /// Fit regret curves of the BO variants.
    Regret(Common),
    /// Per-layer delay and energy statistics over the trace.
    Profile {
        #[command(flatten)]
        common: Common,
        /// Fixed transmit power in watts; P_max when omitted.
        #[arg(long)]
        power: Option<f64>,
    },
}

#[derive(Debug, Args)]
struct Common {
    /// JSON experiment config; missing fields take their defaults.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Channel trace CSV (`frame,gain_db`).
    #[arg(long, conflicts_with = "synth_channel")]
    trace: Option<PathBuf>,
    /// Generate the channel trace from the config's synthetic parameters.
    #[arg(long)]
    synth_channel: bool,
    /// Layer profile CSV.
    #[arg(long)]
    profile: Option<PathBuf>,
    /// Utility surface CSV.
    #[arg(long)]
    surface: Option<PathBuf>,
    /// Seed range `a..b` (end exclusive) or a single seed.
    #[arg(long)]
    seeds: Option<String>,
    /// Output directory (a file for `profile`).
    #[arg(long)]
    out: Option<PathBuf>,
    /// Comma-separated algorithms, e.g. `bayes,basic-bo,exhaustive`.
    #[arg(long, value_delimiter = ',')]
    algo: Vec<String>,
}

impl Common {
    fn spec(&self, default_algos: &[AlgoKind]) -> Result<ExperimentSpec> {
        let mut spec = match &self.config {
            Some(path) => ExperimentSpec::load(path)?,
            None => ExperimentSpec {
                algorithms: default_algos.to_vec(),
                ..ExperimentSpec::default()
            },
        };
        if let Some(p) = &self.trace {
            spec.trace = Some(p.clone());
            spec.synth_channel = None;
        }
        if self.synth_channel {
            spec.trace = None;
            spec.synth_channel.get_or_insert_with(SynthParams::default);
        }
        if let Some(p) = &self.profile {
            spec.profile = Some(p.clone());
        }
        if let Some(p) = &self.surface {
            spec.surface = Some(p.clone());
        }
        if let Some(s) = &self.seeds {
            spec.seeds = parse_seeds(s)?;
        }
        if let Some(o) = &self.out {
            spec.out = o.clone();
        }
        if !self.algo.is_empty() {
            spec.algorithms = self.algo.iter().map(|a| a.trim().parse()).collect::<Result<_>>()?;
        }
        Ok(spec)
    }
}

fn parse_seeds(s: &str) -> Result<Vec<u64>> {
    let bad = || Error::InvalidConfig(format!("seeds must look like `a..b` or `n`, got `{s}`"));
    match s.split_once("..") {
        Some((a, b)) => {
            let a: u64 = a.trim().parse().map_err(|_| bad())?;
            let b: u64 = b.trim().parse().map_err(|_| bad())?;
            if b <= a {
                return Err(bad());
            }
            Ok((a..b).collect())
        }
        None => Ok(vec![s.trim().parse().map_err(|_| bad())?]),
    }
}

fn print_summary(outcome: &ExperimentOutcome) -> Result<()> {
    let mut out = std::io::stdout().lock();
    out.write_all(outcome.summary_csv().as_bytes())
        .map_err(|e| Error::io("stdout", e))
}

fn execute(cli: Cli) -> Result<bool> {
    match cli.command {
        Command::Run(common) => {
            let mut spec = common.spec(&[AlgoKind::Bayes])?;
            if common.config.is_none() && common.seeds.is_none() {
                spec.seeds = vec![0];
            }
            let outcome = if common.out.is_some() {
                run_experiment(&spec)?
            } else {
                splitedge::harness::run_experiment_on(&spec, &spec.problem()?)?
            };
            print_summary(&outcome)?;
            Ok(!outcome.any_without_feasible())
        }
        Command::Compare(common) => {
            let spec = common.spec(&AlgoKind::ALL)?;
            let outcome = run_experiment(&spec)?;
            print_summary(&outcome)?;
            eprintln!("wrote {}", spec.out.display());
            Ok(!outcome.any_without_feasible())
        }
        Command::Regret(common) => {
            let mut spec = common.spec(&[AlgoKind::Bayes, AlgoKind::BasicBo])?;
            spec.algorithms.retain(|a| a.is_bo());
            let outcome = run_experiment(&spec)?;
            for r in &outcome.regrets {
                match r.exponent {
                    Some(k) => println!("{}: mean-regret exponent {k:.4}", r.algo),
                    None => println!("{}: mean-regret exponent undefined", r.algo),
                }
            }
            eprintln!("wrote {}", spec.out.join("regret").display());
            Ok(true)
        }
        Command::Profile { common, power } => {
            let spec = common.spec(&[])?;
            let problem = spec.problem()?;
            let power = power.unwrap_or(problem.system.power_range().1);
            let text = sweep_csv(&profile_sweep(&problem, power));
            match &common.out {
                Some(path) => std::fs::write(path, text).map_err(|e| Error::io(path, e))?,
                None => print!("{text}"),
            }
            Ok(true)
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match execute(cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => {
            eprintln!("error: {}", Error::NoFeasiblePoint);
            ExitCode::from(2)
        }
        Err(Error::NoFeasiblePoint) => {
            eprintln!("error: {}", Error::NoFeasiblePoint);
            ExitCode::from(2)
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
    }
}
