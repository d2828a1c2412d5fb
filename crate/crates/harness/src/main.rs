use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Parser, Subcommand, ValueEnum};
use dynmatch::estimator::{DynamicEstimator, EstimatorConfig, Mode};
use dynmatch::graph::UpdateStream;
use dynmatch_harness::adversary::{self, Adversary};
use dynmatch_harness::report::{summarize, Criteria, Report};
use dynmatch_harness::run::run;
use dynmatch_harness::workload::{generate, Generator, Workload};

#[derive(Parser)]
#[command(
    name = "dynmatch",
    about = "Dynamic matching-size estimation: workloads, replay, reports"
)]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Clone, Copy, ValueEnum)]
enum ModeArg {
    Bipartite,
    General,
    Tradeoff,
}

impl From<ModeArg> for Mode {
    fn from(m: ModeArg) -> Self {
        match m {
            ModeArg::Bipartite => Mode::Bipartite,
            ModeArg::General => Mode::General,
            ModeArg::Tradeoff => Mode::Tradeoff,
        }
    }
}

#[derive(Subcommand)]
enum Cmd {
    /// Generate an update stream.
    Gen {
        #[arg(long)]
        workload: Generator,
        #[arg(long)]
        n: usize,
        #[arg(long, env = "DYNMATCH_SEED", default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
        /// Number of update events (default 10n).
        #[arg(long)]
        horizon: Option<usize>,
        /// Target edge density (default: about two edges per vertex).
        #[arg(long, default_value_t = 0.0)]
        density: f64,
        /// Window length for sliding-window (default n).
        #[arg(long)]
        window: Option<usize>,
        /// Emit a query marker every K updates.
        #[arg(long, default_value_t = 0)]
        query_every: usize,
        /// Precision of the estimator the adaptive adversary plays against.
        #[arg(long, default_value_t = 0.2)]
        eps: f64,
        /// Repetitions of that estimator.
        #[arg(long, default_value_t = 1)]
        reps: u32,
    },
    /// Replay a stream through the estimator and write a report.
    Run {
        #[arg(long)]
        stream: PathBuf,
        #[arg(long, value_enum)]
        mode: ModeArg,
        #[arg(long)]
        eps: f64,
        #[arg(long, env = "DYNMATCH_SEED", default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 1)]
        reps: u32,
        #[arg(long, default_value_t = 0)]
        oracle_every: u64,
        /// JSON-lines report; a CSV projection is written next to it.
        #[arg(long)]
        report: PathBuf,
        /// α of the tradeoff mode's matching provider.
        #[arg(long, default_value_t = 2.0)]
        alpha: f64,
    },
    /// Aggregate a report; the exit code is 0 on pass, 1 on fail.
    Summarize {
        #[arg(long)]
        report: PathBuf,
        #[arg(long)]
        criteria: Option<PathBuf>,
    },
}

fn main() -> ExitCode {
    match real_main() {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}

fn real_main() -> Result<ExitCode> {
    match Cli::parse().cmd {
        Cmd::Gen {
            workload,
            n,
            seed,
            out,
            horizon,
            density,
            window,
            query_every,
            eps,
            reps,
        } => {
            let horizon = horizon.unwrap_or(10 * n);
            let stream = if workload == Generator::AdaptiveAdversary {
                let mut cfg = EstimatorConfig::new(Mode::Bipartite, eps, seed);
                cfg.reps = reps;
                let mut adv = Adversary::new(n, density, seed);
                cfg.left = Some(adv.left());
                let mut est = DynamicEstimator::new(n, cfg)?;
                adversary::play(&mut est, &mut adv, horizon, |_| Ok(()))?.0
            } else {
                let w = Workload {
                    generator: workload,
                    n,
                    density,
                    horizon,
                    window: window.unwrap_or(n),
                    query_every,
                    seed,
                };
                generate(&w)?
            };
            fs::write(&out, stream.render())
                .with_context(|| format!("writing {}", out.display()))?;
            Ok(ExitCode::SUCCESS)
        }
        Cmd::Run {
            stream,
            mode,
            eps,
            seed,
            reps,
            oracle_every,
            report,
            alpha,
        } => {
            let text = fs::read_to_string(&stream)
                .with_context(|| format!("reading {}", stream.display()))?;
            let parsed = UpdateStream::parse(&text)?;
            let mut cfg = EstimatorConfig::new(mode.into(), eps, seed);
            cfg.reps = reps;
            cfg.alpha = alpha;
            let rep = run(&parsed, cfg, oracle_every)?;
            fs::write(&report, rep.to_jsonl())?;
            fs::write(report.with_extension("csv"), rep.to_csv()?)?;
            Ok(ExitCode::SUCCESS)
        }
        Cmd::Summarize { report, criteria } => {
            let text = fs::read_to_string(&report)
                .with_context(|| format!("reading {}", report.display()))?;
            let rep = Report::from_jsonl(&text)?;
            let crit = match criteria {
                Some(p) => serde_json::from_str(&fs::read_to_string(&p)?)?,
                None => Criteria::from_meta(&rep.meta),
            };
            let s = summarize(&rep, &crit);
            println!("{}", serde_json::to_string_pretty(&s)?);
            Ok(if s.pass {
                ExitCode::SUCCESS
            } else {
                ExitCode::from(1)
            })
        }
    }
}
