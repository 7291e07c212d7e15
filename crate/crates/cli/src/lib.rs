//! `coinsert` subcommands. Every command takes an optional TOML config and a
//! seed; reports go to stdout as text and to `--out` as JSON.

pub mod server;

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand};
use coinsert::harness::episode::admittance_controller;
use coinsert::harness::{
    collect_demos, eval_seeds, evaluate, mann_whitney_u, train, write_curve, Alternative, DemoDataset, EpisodeOptions,
    EpisodeSummary, EvalReport, MannWhitney, PolicyController,
};
use coinsert::pgppo::Checkpoint;
use coinsert::{Config, GuidanceMode, Result};
use serde::{Deserialize, Serialize};

#[derive(Debug, Parser)]
#[command(name = "coinsert", version, about = "Human-robot board insertion: simulate, train, evaluate, serve")]
pub struct Cli {
    /// TOML configuration; missing sections keep their defaults.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Seed for demos and training, or the evaluation seed offset.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Collect successful admittance-control demonstrations.
    DemoCollect {
        /// Successful episodes to keep (default: train.demo_episodes).
        #[arg(long)]
        n: Option<usize>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Train a policy and write a checkpoint plus learning-curve records.
    Train {
        /// none, guide_policy, demos or both (default: guidance.mode).
        #[arg(long)]
        mode: Option<String>,
        #[arg(long)]
        iterations: Option<usize>,
        /// Demonstrations from `demo-collect`; collected on the fly if absent.
        #[arg(long)]
        demos: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
        /// One JSON record per iteration.
        #[arg(long)]
        curve: Option<PathBuf>,
        #[arg(long)]
        quiet: bool,
    },
    /// Evaluate a checkpoint, or the admittance controller without one.
    Eval {
        #[arg(long)]
        checkpoint: Option<PathBuf>,
        #[arg(long)]
        trials: Option<usize>,
        #[arg(long)]
        out: Option<PathBuf>,
        /// One JSON summary per episode.
        #[arg(long)]
        episodes: Option<PathBuf>,
    },
    /// Evaluate a checkpoint and the admittance controller on the same seeds
    /// and test inserting-phase force/torque with Mann-Whitney U.
    Compare {
        #[arg(long)]
        checkpoint: PathBuf,
        #[arg(long)]
        trials: Option<usize>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Print the effective configuration as TOML.
    ShowConfig,
    /// Serve live sessions over a websocket at /ws.
    Serve {
        /// Address to bind (default: collab.bind).
        #[arg(long)]
        bind: Option<String>,
        /// Policy offered to `policy` sessions.
        #[arg(long)]
        checkpoint: Option<PathBuf>,
    },
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct CompareReport {
    pub seeds: Vec<u64>,
    pub policy: EvalReport,
    pub admittance: EvalReport,
    /// One-sided, alternative: policy readings are smaller. Absent when
    /// either controller never touched the frame.
    pub force_test: Option<MannWhitney>,
    pub torque_test: Option<MannWhitney>,
}

pub fn load_config(path: Option<&Path>) -> Result<Config> {
    match path {
        Some(p) => Config::load(p),
        None => Ok(Config::default()),
    }
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    serde_json::to_writer_pretty(&mut w, value)?;
    w.write_all(b"\n")?;
    Ok(())
}

fn write_lines<T: Serialize>(path: &Path, items: &[T]) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    for it in items {
        serde_json::to_writer(&mut w, it)?;
        w.write_all(b"\n")?;
    }
    Ok(())
}

pub fn run(cli: Cli) -> Result<()> {
    let mut cfg = load_config(cli.config.as_deref())?;
    if let Some(s) = cli.seed {
        cfg.train.seed = s;
    }
    match cli.command {
        Command::DemoCollect { n, out } => {
            let n = n.unwrap_or(cfg.train.demo_episodes);
            let d = collect_demos(&cfg, n, cfg.train.seed)?;
            d.save(&out)?;
            println!(
                "{} successful episodes in {} attempts, {} pairs -> {}",
                n,
                d.attempts,
                d.pairs.len(),
                out.display()
            );
        }
        Command::Train { mode, iterations, demos, out, curve, quiet } => {
            if let Some(m) = mode {
                cfg.guidance.mode = m.parse::<GuidanceMode>()?;
            }
            if let Some(k) = iterations {
                cfg.train.iterations = k;
            }
            cfg.validate()?;
            let demos = match (cfg.guidance.mode.uses_demos(), demos) {
                (false, _) => None,
                (true, Some(p)) => Some(DemoDataset::load(p)?),
                (true, None) => Some(collect_demos(&cfg, cfg.train.demo_episodes, cfg.train.seed)?),
            };
            let (ck, records) = train(&cfg, demos.as_ref(), |r| {
                if !quiet {
                    println!(
                        "iter {:3}  return {:8.2}  success {:.2}  delta {:.4}  {:.0}s",
                        r.iteration, r.mean_return, r.success_fraction, r.delta, r.wall_time
                    );
                }
            })?;
            ck.save(&out)?;
            if let Some(c) = curve {
                write_curve(c, &records)?;
            }
            println!("checkpoint -> {}", out.display());
        }
        Command::Eval { checkpoint, trials, out, episodes } => {
            let seeds = eval_seeds(trials.unwrap_or(cfg.train.eval_trials), cfg.train.seed);
            let (report, eps) = match &checkpoint {
                Some(p) => eval_checkpoint(&cfg, &Checkpoint::load(p)?, &seeds)?,
                None => evaluate(&cfg, &mut admittance_controller(&cfg), &seeds, EpisodeOptions::default())?,
            };
            let name = if checkpoint.is_some() { "policy" } else { "admittance" };
            println!("{name}: {}", report.headline());
            if let Some(p) = out {
                write_json(&p, &report)?;
            }
            if let Some(p) = episodes {
                write_lines(&p, &eps)?;
            }
        }
        Command::Compare { checkpoint, trials, out } => {
            let seeds = eval_seeds(trials.unwrap_or(cfg.train.eval_trials), cfg.train.seed);
            let report = compare(&cfg, &Checkpoint::load(&checkpoint)?, &seeds)?;
            print!("{}", render_compare(&report));
            if let Some(p) = out {
                write_json(&p, &report)?;
            }
        }
        Command::ShowConfig => print!("{}", cfg.to_toml_string()?),
        Command::Serve { bind, checkpoint } => {
            let bind = bind.unwrap_or_else(|| cfg.collab.bind.clone());
            server::serve(cfg, &bind, checkpoint)?;
        }
    }
    Ok(())
}

pub fn eval_checkpoint(cfg: &Config, ck: &Checkpoint, seeds: &[u64]) -> Result<(EvalReport, Vec<EpisodeSummary>)> {
    evaluate(cfg, &mut PolicyController::from_checkpoint(ck), seeds, EpisodeOptions::default())
}

pub fn compare(cfg: &Config, ck: &Checkpoint, seeds: &[u64]) -> Result<CompareReport> {
    let (policy, _) = eval_checkpoint(cfg, ck, seeds)?;
    let (admittance, _) = evaluate(cfg, &mut admittance_controller(cfg), seeds, EpisodeOptions::default())?;
    let test = |a: &[f64], b: &[f64]| -> Result<Option<MannWhitney>> {
        if a.is_empty() || b.is_empty() {
            return Ok(None);
        }
        mann_whitney_u(a, b, Alternative::ALess).map(Some)
    };
    Ok(CompareReport {
        seeds: seeds.to_vec(),
        force_test: test(&policy.insert_force_norms, &admittance.insert_force_norms)?,
        torque_test: test(&policy.insert_torque_norms, &admittance.insert_torque_norms)?,
        policy,
        admittance,
    })
}

/// Table of both controllers followed by the two p-values.
pub fn render_compare(r: &CompareReport) -> String {
    let mut s = String::new();
    s.push_str("method       S.R.     Time (s)        fail F  fail T  timeout  approach (s)  insert (s)\n");
    for (name, e) in [("admittance", &r.admittance), ("pgppo", &r.policy)] {
        s.push_str(&format!(
            "{:<12} {:>5.1}%  {:>6.2} ± {:<5.2}  {:>5.0}%  {:>5.0}%  {:>6.0}%  {:>12.2}  {:>10.2}\n",
            name,
            100.0 * e.success_rate,
            e.completion_time.mean,
            e.completion_time.std,
            e.failure_causes.force_pct,
            e.failure_causes.torque_pct,
            e.failure_causes.timeout_pct,
            e.approach_duration.mean,
            e.insert_duration.mean,
        ));
    }
    let p = |t: &Option<MannWhitney>| t.map_or("n/a".to_string(), |m| format!("{:.3e}", m.p));
    s.push_str(&format!(
        "Mann-Whitney U, inserting phase, pgppo < admittance: force p = {}, torque p = {}\n",
        p(&r.force_test),
        p(&r.torque_test)
    ));
    s
}
