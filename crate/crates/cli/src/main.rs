use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde_json::json;

use k4flab_core::harness::{
    self, Experiment, ExperimentConfig, GreedyParams, RamseyParams, SeedRange, StagedParams,
};
use k4flab_core::ramsey::{self, F3Mode};
use k4flab_core::rng::DEFAULT_MASTER_SEED;
use k4flab_core::staged::{Profile, StepMode};
use k4flab_core::survival::{self, TreeSpec};
use k4flab_core::trajectory::{self, binom};
use k4flab_core::{Error, Graph, Result};

#[derive(Parser)]
#[command(
    name = "k4flab",
    version,
    about = "K4-free process simulator and verification harness"
)]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Run the random greedy K4-free process over a seed range.
    Simulate(SimulateArgs),
    /// Run the staged bite process and record per-round observables.
    Staged(StagedArgs),
    /// Tabulate Φ and φ, or print predicted counts for given n and m.
    Trajectory(TrajectoryArgs),
    /// Survival probabilities on alternating trees.
    #[command(subcommand)]
    Survival(SurvivalCmd),
    /// Triangle-free subsets and triangle coverage.
    #[command(subcommand)]
    Ramsey(RamseyCmd),
    /// Run an experiment described by a JSON config file.
    Run {
        #[arg(long)]
        config: PathBuf,
    },
    /// Summarize result trees into CSVs.
    Report {
        /// Result directories (each holding a manifest.json).
        #[arg(required = true, num_args = 1..)]
        results: Vec<PathBuf>,
        #[arg(long)]
        out: PathBuf,
    },
}

#[derive(Args)]
struct Common {
    /// Seed range a..b (half-open) or a single seed.
    #[arg(long)]
    seeds: SeedRange,
    #[arg(long, default_value_t = DEFAULT_MASTER_SEED)]
    master_seed: u64,
    /// Worker threads; 0 uses every available core.
    #[arg(long, default_value_t = 0)]
    threads: usize,
}

#[derive(Args)]
struct SimulateArgs {
    #[arg(long)]
    n: usize,
    #[command(flatten)]
    common: Common,
    /// Comma-separated checkpoints: t=<step>, m=<edges>, r=<m / n^1.6>.
    #[arg(long, default_value = "")]
    checkpoints: String,
    /// exhaustion, m=<edges> or r=<m / n^1.6>.
    #[arg(long, default_value = "exhaustion")]
    stop: String,
    #[arg(long, default_value_t = k4flab_core::greedy::DEFAULT_SAMPLE_SIZE)]
    sample_size: usize,
    /// Also write each final graph as an edge list.
    #[arg(long)]
    save_graphs: bool,
    /// Record wall-clock time at checkpoints (outputs stop being byte-stable).
    #[arg(long)]
    timings: bool,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct StagedArgs {
    #[arg(long)]
    n: usize,
    #[arg(long, default_value = "desk")]
    profile: Profile,
    /// Number of rounds, or `auto` for ⌊n^(ε1+ε1²)⌋.
    #[arg(long, default_value = "auto")]
    rounds: String,
    #[arg(long, default_value = "staged", value_parser = parse_mode)]
    mode: StepMode,
    #[arg(long, default_value_t = k4flab_core::greedy::DEFAULT_SAMPLE_SIZE)]
    sample_size: usize,
    #[command(flatten)]
    common: Common,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
#[command(args_conflicts_with_subcommands = true)]
struct TrajectoryArgs {
    #[command(subcommand)]
    predict: Option<TrajectorySub>,
    #[arg(long)]
    xmax: Option<f64>,
    #[arg(long, default_value_t = trajectory::DEFAULT_STEP)]
    step: f64,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Subcommand)]
enum TrajectorySub {
    /// Print the predicted open-pair and completion counts at m edges as JSON.
    Predict {
        #[arg(long)]
        n: u64,
        #[arg(long)]
        m: u64,
    },
}

#[derive(Subcommand)]
enum SurvivalCmd {
    /// Survival curve of a tree by quadrature.
    Dp {
        #[arg(long)]
        tree: PathBuf,
        #[arg(long, default_value_t = survival::DEFAULT_GRID_STEP)]
        step: f64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Monte Carlo estimate of the root survival probability at birthtime t.
    Mc {
        #[arg(long)]
        tree: PathBuf,
        #[arg(long)]
        t: f64,
        #[arg(long, default_value_t = 100_000)]
        trials: u64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Fixed point of the infinite (k, 5) tree in rescaled units, with Φ.
    T4 {
        #[arg(long)]
        k: f64,
        #[arg(long, default_value_t = 3.0)]
        xmax: f64,
        #[arg(long, default_value_t = 1e-4)]
        step: f64,
        #[arg(long)]
        out: PathBuf,
    },
}

#[derive(Subcommand)]
enum RamseyCmd {
    /// Largest triangle-free vertex subset of a graph.
    F3 {
        #[arg(long)]
        graph: PathBuf,
        #[arg(long, default_value = "heuristic")]
        mode: F3Mode,
        /// Search nodes (exact) or local-search iterations (heuristic).
        #[arg(long)]
        budget: Option<u64>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Triangle coverage of s-subsets in final process graphs.
    Cover {
        #[arg(long)]
        n: usize,
        #[command(flatten)]
        common: Common,
        /// Constant C in s = ⌈C n^(3/5) (ln n)^(1/5)⌉.
        #[arg(long = "C")]
        c: f64,
        #[arg(long, default_value_t = 10_000)]
        samples: u64,
        #[arg(long, default_value_t = ramsey::DEFAULT_HEURISTIC_BUDGET)]
        budget: u64,
        #[arg(long, default_value = "ramsey-cover")]
        out: PathBuf,
    },
}

fn parse_mode(s: &str) -> std::result::Result<StepMode, String> {
    match s {
        "staged" => Ok(StepMode::Staged),
        "oneshot" => Ok(StepMode::OneShot),
        _ => Err(format!("unknown mode `{s}` (staged|oneshot)")),
    }
}

fn print_json(v: &serde_json::Value) -> Result<()> {
    let mut out = io::stdout().lock();
    serde_json::to_writer_pretty(&mut out, v)?;
    writeln!(out)?;
    Ok(())
}

fn run_and_summarize(cfg: ExperimentConfig) -> Result<()> {
    let out = harness::run_experiment(&cfg)?;
    print_json(&json!({
        "kind": out.manifest.kind,
        "out": cfg.out_dir,
        "cells": out.manifest.cells.len(),
        "computed": out.computed,
        "resumed": out.resumed,
        "config_hash": out.manifest.config_hash,
        "master_seed": out.manifest.master_seed,
    }))
}

fn experiment(exp: Experiment, n: usize, common: &Common, out: &Path) -> ExperimentConfig {
    let mut cfg = ExperimentConfig::new(exp, vec![n], common.seeds, out);
    cfg.master_seed = common.master_seed;
    cfg.threads = common.threads;
    cfg
}

fn create_parent(path: &Path) -> Result<()> {
    if let Some(p) = path.parent() {
        if !p.as_os_str().is_empty() {
            fs::create_dir_all(p)?;
        }
    }
    Ok(())
}

fn write_file(path: &Path, f: impl FnOnce(&mut Vec<u8>) -> Result<()>) -> Result<()> {
    create_parent(path)?;
    let mut buf = Vec::new();
    f(&mut buf)?;
    harness::write_atomic(path, &buf)
}

fn run(cli: Cli) -> Result<()> {
    match cli.cmd {
        Cmd::Simulate(a) => {
            let exp = Experiment::Greedy(GreedyParams {
                checkpoints: a
                    .checkpoints
                    .split(',')
                    .filter(|s| !s.trim().is_empty())
                    .map(str::to_string)
                    .collect(),
                stop: a.stop,
                sample_size: a.sample_size,
                save_graphs: a.save_graphs,
                timings: a.timings,
            });
            run_and_summarize(experiment(exp, a.n, &a.common, &a.out))
        }
        Cmd::Staged(a) => {
            let rounds = match a.rounds.as_str() {
                "auto" => None,
                r => Some(r.parse().map_err(|_| {
                    Error::Config(format!("rounds must be an integer or auto, got `{r}`"))
                })?),
            };
            let exp = Experiment::Staged(StagedParams {
                profile: a.profile,
                rounds,
                mode: a.mode,
                sample_size: a.sample_size,
            });
            run_and_summarize(experiment(exp, a.n, &a.common, &a.out))
        }
        Cmd::Trajectory(a) => match a.predict {
            Some(TrajectorySub::Predict { n, m }) => {
                if n < 2 {
                    return Err(Error::Config(format!("n = {n} must be at least 2")));
                }
                let mf = m as f64;
                let r = mf * (n as f64).powf(-1.6);
                let x: Vec<f64> = (0..=5).map(|j| trajectory::bohman_x(n, mf, j)).collect();
                print_json(&json!({
                    "n": n,
                    "m": m,
                    "scaled_m": r,
                    "open": trajectory::bohman_open(n, mf),
                    "pairs": binom(n, 2),
                    "x": x,
                }))
            }
            None => {
                let (Some(xmax), Some(out)) = (a.xmax, a.out) else {
                    return Err(Error::Config(
                        "trajectory needs --xmax and --out (or the predict subcommand)".into(),
                    ));
                };
                let table = trajectory::solve_ode(xmax, a.step)?;
                write_file(&out, |b| table.write_csv(b))?;
                print_json(
                    &json!({ "out": out, "rows": table.len(), "phi_upper_at_xmax": table.big_phi_at(table.len() - 1) }),
                )
            }
        },
        Cmd::Survival(s) => match s {
            SurvivalCmd::Dp { tree, step, out } => {
                let tree = TreeSpec::load(&tree)?;
                let curve = survival::survival_dp(&tree, step)?;
                write_file(&out, |b| curve.write_csv(b))?;
                print_json(
                    &json!({ "out": out, "nodes": tree.len(), "P_at_1": curve.big_p.last() }),
                )
            }
            SurvivalCmd::Mc {
                tree,
                t,
                trials,
                seed,
            } => {
                let tree = TreeSpec::load(&tree)?;
                let est = survival::survival_mc(&tree, t, trials, seed)?;
                print_json(&json!({ "t": t, "mean": est.mean, "se": est.se, "trials": est.trials }))
            }
            SurvivalCmd::T4 { k, xmax, step, out } => {
                let curve = survival::t4_fixed_point(k, xmax, step)?;
                write_file(&out, |b| curve.write_csv(b))?;
                print_json(&json!({ "out": out, "k": k, "sup_error": curve.sup_error(xmax) }))
            }
        },
        Cmd::Ramsey(r) => match r {
            RamseyCmd::F3 {
                graph,
                mode,
                budget,
                seed,
            } => {
                let g = Graph::load(&graph)?;
                let budget = budget.unwrap_or(match mode {
                    F3Mode::Exact => ramsey::DEFAULT_EXACT_BUDGET,
                    F3Mode::Heuristic => ramsey::DEFAULT_HEURISTIC_BUDGET,
                });
                let res = ramsey::max_triangle_free_subset(&g, mode, budget, seed)?;
                print_json(&json!({
                    "n": g.n(),
                    "m": g.m(),
                    "mode": mode,
                    "f3": res.size(),
                    "exact": res.exact,
                    "nodes": res.nodes,
                    "vertices": res.vertices,
                }))
            }
            RamseyCmd::Cover {
                n,
                common,
                c,
                samples,
                budget,
                out,
            } => {
                let exp = Experiment::Ramsey(RamseyParams {
                    c,
                    samples,
                    heuristic_budget: budget,
                });
                run_and_summarize(experiment(exp, n, &common, &out))
            }
        },
        Cmd::Run { config } => run_and_summarize(ExperimentConfig::load(&config)?),
        Cmd::Report { results, out } => {
            let rep = harness::report(&results, &out)?;
            for note in &rep.notes {
                eprintln!("note: {note}");
            }
            print_json(&json!({ "written": rep.written }))
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
