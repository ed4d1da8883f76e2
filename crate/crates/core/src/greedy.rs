//! The K4-free random greedy process.
//!
//! All pairs are traversed in a uniformly random order and each one is
//! accepted unless it would close a K4. Checkpoints snapshot the observables
//! tracked against the closed-form trajectory: edge count, number of open
//! pairs, and sampled near-completion counts.

use std::io::Write;
use std::str::FromStr;
use std::time::Instant;

use rand::seq::{index, SliceRandom};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::{self, check_vertex_count, pair_count, Graph};
use crate::rng;

const PERMUTATION_STREAM: u64 = 1;
const SAMPLE_STREAM: u64 = 2;

/// Default number of open pairs sampled per checkpoint.
pub const DEFAULT_SAMPLE_SIZE: usize = 200;

/// When to take a snapshot. Resolved against `n` before a run.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub enum Checkpoint {
    /// After the given number of traversed pairs.
    Step(u64),
    /// After the step at which the edge count reaches the target.
    Edges(u64),
    /// Edge target given as a multiple of `n^{8/5}`.
    ScaledEdges(f64),
}

impl Checkpoint {
    /// Replace scaled targets by absolute edge counts for `n`.
    pub fn resolve(self, n: usize) -> Checkpoint {
        match self {
            Checkpoint::ScaledEdges(r) => {
                Checkpoint::Edges((r * (n as f64).powf(1.6)).round() as u64)
            }
            c => c,
        }
    }

    fn reached(self, step: u64, m: u64) -> bool {
        match self {
            Checkpoint::Step(t) => step >= t,
            Checkpoint::Edges(e) => m >= e,
            Checkpoint::ScaledEdges(_) => unreachable!("checkpoints are resolved before a run"),
        }
    }
}

impl FromStr for Checkpoint {
    type Err = Error;

    /// `t=<int>` (traversals), `m=<int>` (edges) or `r=<real>` (edges as a
    /// multiple of `n^{8/5}`).
    fn from_str(s: &str) -> Result<Checkpoint> {
        let bad = || {
            Error::Config(format!(
                "bad checkpoint `{s}`; expected t=<int>, m=<int> or r=<real>"
            ))
        };
        let (k, v) = s.trim().split_once('=').ok_or_else(bad)?;
        match k.trim() {
            "t" => v.trim().parse().map(Checkpoint::Step).map_err(|_| bad()),
            "m" => v.trim().parse().map(Checkpoint::Edges).map_err(|_| bad()),
            "r" => match v.trim().parse::<f64>() {
                Ok(r) if r >= 0.0 && r.is_finite() => Ok(Checkpoint::ScaledEdges(r)),
                _ => Err(bad()),
            },
            _ => Err(bad()),
        }
    }
}

/// Parse a comma-separated checkpoint list; empty input gives no checkpoints.
pub fn parse_checkpoints(s: &str) -> Result<Vec<Checkpoint>> {
    s.split(',')
        .filter(|p| !p.trim().is_empty())
        .map(str::parse)
        .collect()
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub enum StopRule {
    /// Traverse every pair; the result is a maximal K4-free graph.
    #[default]
    Exhaustion,
    /// Stop after the step at which the edge count reaches the target.
    Edges(u64),
    /// As `Edges`, with the target a multiple of `n^{8/5}`.
    ScaledEdges(f64),
}

impl StopRule {
    fn target(self, n: usize) -> Option<u64> {
        match self {
            StopRule::Exhaustion => None,
            StopRule::Edges(e) => Some(e),
            StopRule::ScaledEdges(r) => Some((r * (n as f64).powf(1.6)).round() as u64),
        }
    }
}

impl FromStr for StopRule {
    type Err = Error;

    /// `exhaust`, `m=<int>` or `r=<real>`.
    fn from_str(s: &str) -> Result<StopRule> {
        match s.trim() {
            "exhaust" | "exhaustion" => Ok(StopRule::Exhaustion),
            other => match other.parse::<Checkpoint>()? {
                Checkpoint::Edges(e) => Ok(StopRule::Edges(e)),
                Checkpoint::ScaledEdges(r) => Ok(StopRule::ScaledEdges(r)),
                Checkpoint::Step(_) => Err(Error::Config(
                    "stop rule must be `exhaust`, m=<int> or r=<real>".into(),
                )),
            },
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct GreedyConfig {
    pub n: usize,
    pub seed: u64,
    #[serde(default)]
    pub checkpoints: Vec<Checkpoint>,
    #[serde(default)]
    pub stop: StopRule,
    #[serde(default = "default_sample_size")]
    pub sample_size: usize,
    /// Fill `wall_ms`; off by default so outputs are reproducible byte for byte.
    #[serde(default)]
    pub record_timing: bool,
    #[serde(default = "default_cap")]
    pub vertex_cap: usize,
}

fn default_sample_size() -> usize {
    DEFAULT_SAMPLE_SIZE
}

fn default_cap() -> usize {
    graph::DEFAULT_VERTEX_CAP
}

impl GreedyConfig {
    pub fn new(n: usize, seed: u64) -> Self {
        GreedyConfig {
            n,
            seed,
            checkpoints: Vec::new(),
            stop: StopRule::Exhaustion,
            sample_size: DEFAULT_SAMPLE_SIZE,
            record_timing: false,
            vertex_cap: graph::DEFAULT_VERTEX_CAP,
        }
    }

    pub fn with_checkpoints(mut self, cps: Vec<Checkpoint>) -> Self {
        self.checkpoints = cps;
        self
    }

    pub fn with_stop(mut self, stop: StopRule) -> Self {
        self.stop = stop;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.n < 4 {
            return Err(Error::Config(format!(
                "n = {} < 4: the process is degenerate",
                self.n
            )));
        }
        check_vertex_count(self.n, self.vertex_cap)
    }
}

/// Observables at one checkpoint.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    /// Traversed pairs so far.
    pub step: u64,
    /// Edges accepted so far.
    pub m: u64,
    /// Untraversed pairs that are still addable.
    pub open: u64,
    /// Sample means of the near-completion counts for `j = 1..=5`.
    pub xbar: [f64; 5],
    /// Sample standard deviations for `j = 1..=5`.
    pub xsd: [f64; 5],
    /// Number of sampled open pairs.
    pub sampled: usize,
    pub wall_ms: f64,
}

pub const RECORD_HEADER: [&str; 14] = [
    "step", "m", "open", "xbar1", "xbar2", "xbar3", "xbar4", "xbar5", "xsd1", "xsd2", "xsd3",
    "xsd4", "xsd5", "wall_ms",
];

/// Write records as CSV with the [`RECORD_HEADER`] columns.
pub fn write_records<W: Write>(records: &[RunRecord], w: W) -> Result<()> {
    let mut wr = csv::Writer::from_writer(w);
    wr.write_record(RECORD_HEADER)?;
    for r in records {
        let mut row = vec![r.step.to_string(), r.m.to_string(), r.open.to_string()];
        row.extend(r.xbar.iter().map(|v| format!("{v}")));
        row.extend(r.xsd.iter().map(|v| format!("{v}")));
        row.push(format!("{:.3}", r.wall_ms));
        wr.write_record(&row)?;
    }
    wr.flush()?;
    Ok(())
}

/// Read records written by [`write_records`].
pub fn read_records<R: std::io::Read>(r: R) -> Result<Vec<RunRecord>> {
    let mut rd = csv::Reader::from_reader(r);
    let headers = rd.headers()?.clone();
    if headers.iter().collect::<Vec<_>>() != RECORD_HEADER {
        return Err(Error::Config(format!(
            "unexpected run-record header {headers:?}"
        )));
    }
    let mut out = Vec::new();
    for row in rd.records() {
        let row = row?;
        let f = |i: usize| -> Result<f64> {
            row[i]
                .parse()
                .map_err(|_| Error::Config(format!("bad number `{}`", &row[i])))
        };
        let u = |i: usize| -> Result<u64> {
            row[i]
                .parse()
                .map_err(|_| Error::Config(format!("bad integer `{}`", &row[i])))
        };
        let mut xbar = [0.0; 5];
        let mut xsd = [0.0; 5];
        for j in 0..5 {
            xbar[j] = f(3 + j)?;
            xsd[j] = f(8 + j)?;
        }
        out.push(RunRecord {
            step: u(0)?,
            m: u(1)?,
            open: u(2)?,
            xbar,
            xsd,
            sampled: 0,
            wall_ms: f(13)?,
        });
    }
    Ok(out)
}

/// Result of one seeded run.
#[derive(Clone, Debug)]
pub struct GreedyRun {
    pub n: usize,
    pub seed: u64,
    pub checkpoints: Vec<Checkpoint>,
    /// Final graph `M`.
    pub graph: Graph,
    /// Pairs traversed before stopping.
    pub steps: u64,
    pub exhausted: bool,
    pub records: Vec<RunRecord>,
    /// Checkpoints never reached before the run stopped.
    pub unreached: Vec<Checkpoint>,
}

/// Traversal order of the run `(n, seed)`, pairs packed as `u << 16 | v`.
pub fn traversal_order(n: usize, seed: u64) -> Vec<u32> {
    let mut order: Vec<u32> = Vec::with_capacity(pair_count(n) as usize);
    for u in 0..n as u32 {
        for v in u + 1..n as u32 {
            order.push(u << 16 | v);
        }
    }
    let mut perm_rng = rng::stream(seed, &[PERMUTATION_STREAM]);
    order.shuffle(&mut perm_rng);
    order
}

/// `(M, Trav)` after the first `steps` traversals of the run `(n, seed)`.
pub fn partial_state(n: usize, seed: u64, steps: u64) -> Result<(Graph, Graph)> {
    GreedyConfig::new(n, seed).validate()?;
    let mut m = Graph::new(n);
    let mut trav = Graph::new(n);
    for &packed in traversal_order(n, seed).iter().take(steps as usize) {
        let (u, v) = ((packed >> 16) as usize, (packed & 0xFFFF) as usize);
        trav.add_edge(u, v);
        if !m.closes_k4(u, v) {
            m.add_edge(u, v);
        }
    }
    Ok((m, trav))
}

/// Run the process for `(n, seed)`.
///
/// The traversal order is a Fisher–Yates shuffle of the pair space driven by
/// the seeded ChaCha stream, so the run is a deterministic function of the
/// configuration.
pub fn run_greedy(cfg: &GreedyConfig) -> Result<GreedyRun> {
    cfg.validate()?;
    let n = cfg.n;
    let start = Instant::now();
    let total = pair_count(n);
    let order = traversal_order(n, cfg.seed);

    let mut pending: Vec<Checkpoint> = cfg.checkpoints.iter().map(|c| c.resolve(n)).collect();
    let track_trav = !pending.is_empty();
    let stop_at = cfg.stop.target(n);
    let mut m = Graph::new(n);
    let mut trav = Graph::new(if track_trav { n } else { 0 });
    let mut records = Vec::new();
    let mut steps = 0u64;
    let mut sample_rng = rng::stream(cfg.seed, &[SAMPLE_STREAM]);

    for &packed in &order {
        let (u, v) = ((packed >> 16) as usize, (packed & 0xFFFF) as usize);
        steps += 1;
        if track_trav {
            trav.add_edge(u, v);
        }
        if !m.closes_k4(u, v) {
            m.add_edge(u, v);
        }
        if pending.iter().any(|c| c.reached(steps, m.m() as u64)) {
            let fired = pending
                .iter()
                .filter(|c| c.reached(steps, m.m() as u64))
                .count();
            pending.retain(|c| !c.reached(steps, m.m() as u64));
            let wall_ms = if cfg.record_timing {
                start.elapsed().as_secs_f64() * 1e3
            } else {
                0.0
            };
            let rec = snapshot(&m, &trav, steps, cfg.sample_size, &mut sample_rng, wall_ms);
            for _ in 0..fired {
                records.push(rec.clone());
            }
        }
        if stop_at.is_some_and(|t| m.m() as u64 >= t) {
            break;
        }
    }
    Ok(GreedyRun {
        n,
        seed: cfg.seed,
        checkpoints: cfg.checkpoints.clone(),
        graph: m,
        steps,
        exhausted: steps == total,
        records,
        unreached: pending,
    })
}

/// Checkpoint observables for the state `(M, Trav)` after `steps` traversals.
pub fn snapshot<R: rand::Rng>(
    m: &Graph,
    trav: &Graph,
    steps: u64,
    sample_size: usize,
    rng: &mut R,
    wall_ms: f64,
) -> RunRecord {
    let open = graph::open_pairs(m, trav);
    let open_list: Vec<(usize, usize)> = open.edges().collect();
    let k = sample_size.min(open_list.len());
    let picks = index::sample(rng, open_list.len(), k);
    let mut sums = [0.0f64; 5];
    let mut sq = [0.0f64; 5];
    for idx in picks.iter() {
        let (u, v) = open_list[idx];
        let c = graph::completion_counts(m, &open, u, v);
        for j in 1..=5 {
            let x = c[j] as f64;
            sums[j - 1] += x;
            sq[j - 1] += x * x;
        }
    }
    let mut xbar = [0.0; 5];
    let mut xsd = [0.0; 5];
    if k > 0 {
        for j in 0..5 {
            let mean = sums[j] / k as f64;
            xbar[j] = mean;
            if k > 1 {
                let var = (sq[j] - k as f64 * mean * mean) / (k as f64 - 1.0);
                xsd[j] = var.max(0.0).sqrt();
            }
        }
    }
    RunRecord {
        step: steps,
        m: m.m() as u64,
        open: open.m() as u64,
        xbar,
        xsd,
        sampled: k,
        wall_ms,
    }
}

/// Whether no four vertices are mutually adjacent.
pub fn verify_k4_free(m: &Graph) -> bool {
    m.is_k4_free()
}

/// Final edge count of an exhaustive run.
pub fn final_edge_count(n: usize, seed: u64) -> Result<u64> {
    Ok(run_greedy(&GreedyConfig::new(n, seed))?.graph.m() as u64)
}
