//! The staged "bite" process.
//!
//! Each round thins the untraversed pairs three times (an outer sample, an
//! inner sample of it, and the bite), gives the bite uniform birthtimes, and
//! traverses it in birthtime order, accepting each pair unless it closes a
//! K4. The one-shot variant samples the bite directly with the product
//! probability.
//!
//! Every coin flip is a pure function of `(seed, round, pair, stage)`.

use std::io::Write;
use std::str::FromStr;

use rand::seq::index;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::{self, check_vertex_count, pair_count, EdgeId, Graph};
use crate::rng::{self, accept, bernoulli_threshold, RoundKey};
use crate::trajectory::{binom, TrajectoryQuantities, TrajectoryTable};

const TAG_OUTER: u64 = 1;
const TAG_INNER: u64 = 2;
const TAG_BITE: u64 = 3;
const TAG_ONESHOT: u64 = 4;
const TAG_BIRTH: u64 = 5;
const STREAM_EVENT_A: u64 = 6;

/// Smallest admissible value of the bite denominator `1 − i n^{−ε1−ε2}`.
pub const DEFAULT_DENOMINATOR_FLOOR: f64 = 0.1;

/// Default constant in `s = ⌈C n^{3/5} (ln n)^{1/5}⌉`.
pub const DEFAULT_S_CONSTANT: f64 = 1.0;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Profile {
    /// `ε1 = 0.3, ε2 = 0.15, ε3 = 0.2`: several meaningful rounds at desk `n`.
    Desk,
    /// `ε3 = 0.005, ε2 = 10⁴ ε3³, ε1 = 0.01`: the asymptotic regime, where
    /// reachable `n` give a single round.
    Paper,
    Custom,
}

impl FromStr for Profile {
    type Err = Error;

    fn from_str(s: &str) -> Result<Profile> {
        match s {
            "desk" => Ok(Profile::Desk),
            "paper" => Ok(Profile::Paper),
            "custom" => Ok(Profile::Custom),
            _ => Err(Error::Config(format!(
                "unknown profile `{s}` (desk|paper|custom)"
            ))),
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ProcessParams {
    pub n: usize,
    pub eps1: f64,
    pub eps2: f64,
    pub eps3: f64,
    /// Number of rounds `I`.
    pub rounds: u64,
    /// Target set size for the triangle-coverage checks.
    pub s: usize,
    pub s_constant: f64,
    pub seed: u64,
    pub profile: Profile,
    pub denominator_floor: f64,
    pub vertex_cap: usize,
}

/// `⌊n^{ε1 + ε1²}⌋`.
pub fn default_rounds(n: usize, eps1: f64) -> u64 {
    (n as f64).powf(eps1 + eps1 * eps1).floor() as u64
}

/// `⌈C n^{3/5} (ln n)^{1/5}⌉`.
pub fn default_s(n: usize, c: f64) -> usize {
    let nf = n as f64;
    (c * nf.powf(0.6) * nf.ln().powf(0.2)).ceil() as usize
}

impl ProcessParams {
    pub fn with_eps(n: usize, eps1: f64, eps2: f64, eps3: f64, seed: u64) -> Self {
        ProcessParams {
            n,
            eps1,
            eps2,
            eps3,
            rounds: default_rounds(n, eps1),
            s: default_s(n, DEFAULT_S_CONSTANT),
            s_constant: DEFAULT_S_CONSTANT,
            seed,
            profile: Profile::Custom,
            denominator_floor: DEFAULT_DENOMINATOR_FLOOR,
            vertex_cap: graph::DEFAULT_VERTEX_CAP,
        }
    }

    pub fn desk(n: usize, seed: u64) -> Self {
        ProcessParams {
            profile: Profile::Desk,
            ..Self::with_eps(n, 0.3, 0.15, 0.2, seed)
        }
    }

    pub fn paper(n: usize, seed: u64) -> Self {
        let eps3 = 0.005;
        ProcessParams {
            profile: Profile::Paper,
            ..Self::with_eps(n, 0.01, 1e4 * eps3 * eps3 * eps3, eps3, seed)
        }
    }

    pub fn for_profile(profile: Profile, n: usize, seed: u64) -> Result<Self> {
        match profile {
            Profile::Desk => Ok(Self::desk(n, seed)),
            Profile::Paper => Ok(Self::paper(n, seed)),
            Profile::Custom => Err(Error::Config(
                "the custom profile needs explicit epsilons".into(),
            )),
        }
    }

    pub fn with_s_constant(mut self, c: f64) -> Self {
        self.s_constant = c;
        self.s = default_s(self.n, c);
        self
    }

    fn nf(&self) -> f64 {
        self.n as f64
    }

    /// `n^{ε3 − 2/5}`.
    pub fn outer_prob(&self) -> f64 {
        self.nf().powf(self.eps3 - 0.4)
    }

    /// `n^{ε2 − ε3}`.
    pub fn inner_prob(&self) -> f64 {
        self.nf().powf(self.eps2 - self.eps3)
    }

    /// `1 − i n^{−ε1−ε2}`.
    pub fn bite_denominator(&self, i: u64) -> f64 {
        1.0 - i as f64 * self.nf().powf(-self.eps1 - self.eps2)
    }

    /// `n^{−ε1−ε2} / (1 − i n^{−ε1−ε2})`.
    pub fn bite_prob(&self, i: u64) -> f64 {
        self.nf().powf(-self.eps1 - self.eps2) / self.bite_denominator(i)
    }

    /// `n^{−ε1−2/5} / (1 − i n^{−ε1−ε2})`, the one-shot bite probability.
    pub fn oneshot_prob(&self, i: u64) -> f64 {
        self.nf().powf(-self.eps1 - 0.4) / self.bite_denominator(i)
    }

    /// Check every admissibility constraint and report all violations.
    pub fn validate(&self) -> Result<()> {
        let mut errs = Vec::new();
        if self.n < 4 {
            errs.push(format!("n = {} < 4", self.n));
        }
        if let Err(e) = check_vertex_count(self.n, self.vertex_cap) {
            errs.push(e.to_string());
        }
        if !(self.eps1 > 0.0) {
            errs.push(format!("eps1 = {} must be positive", self.eps1));
        }
        if !(self.eps2 > 0.0) {
            errs.push(format!("eps2 = {} must be positive", self.eps2));
        }
        if !(self.eps3 < 0.4) {
            errs.push(format!("eps3 = {} must be < 2/5", self.eps3));
        }
        if !(self.eps2 <= self.eps3) {
            errs.push(format!(
                "eps2 = {} must not exceed eps3 = {} (inner sampling probability n^(eps2-eps3) <= 1)",
                self.eps2, self.eps3
            ));
        }
        if !(self.denominator_floor > 0.0 && self.denominator_floor < 1.0) {
            errs.push(format!(
                "denominator floor {} must be in (0, 1)",
                self.denominator_floor
            ));
        }
        if self.rounds > 0 && self.n >= 2 {
            let last = self.rounds - 1;
            let d = self.bite_denominator(last);
            if !(d >= self.denominator_floor) {
                errs.push(format!(
                    "bite denominator 1 - i n^(-eps1-eps2) = {d:.4} at round {last} is below the floor {}",
                    self.denominator_floor
                ));
            } else if !(self.bite_prob(last) <= 1.0) {
                errs.push(format!(
                    "bite probability {} > 1 at round {last}",
                    self.bite_prob(last)
                ));
            }
        }
        if errs.is_empty() {
            Ok(())
        } else {
            Err(Error::InvalidConfig(errs))
        }
    }
}

/// State after `round` rounds.
#[derive(Clone, Debug)]
pub struct StageState {
    pub round: u64,
    pub m: Graph,
    pub trav: Graph,
    /// Outer sample of the last round, ascending.
    pub outer: Vec<EdgeId>,
    /// Inner sample of the last round, ascending.
    pub inner: Vec<EdgeId>,
    /// Bite of the last round in traversal (birthtime) order.
    pub bite: Vec<EdgeId>,
    /// Birthtimes aligned with `bite`, increasing.
    pub birthtimes: Vec<f64>,
}

impl StageState {
    pub fn initial(n: usize) -> Self {
        StageState {
            round: 0,
            m: Graph::new(n),
            trav: Graph::new(n),
            outer: Vec::new(),
            inner: Vec::new(),
            bite: Vec::new(),
            birthtimes: Vec::new(),
        }
    }

    pub fn bite_sorted(&self) -> Vec<EdgeId> {
        let mut b = self.bite.clone();
        b.sort_unstable();
        b
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum StepMode {
    /// Three nested thinnings.
    Staged,
    /// Bite sampled directly from the untraversed pairs.
    OneShot,
}

/// Visit the untraversed pairs `(u, v, id)` in canonical order.
fn for_each_untraversed(trav: &Graph, mut f: impl FnMut(usize, usize, u64)) {
    let n = trav.n();
    let mut base = 0u64;
    for u in 0..n {
        let row = trav.row(u);
        for (k, &w) in row.iter().enumerate().skip(u / 64) {
            let mut free = !w;
            if k == u / 64 {
                free &= if u % 64 == 63 {
                    0
                } else {
                    !0u64 << (u % 64 + 1)
                };
            }
            if k == row.len() - 1 && !n.is_multiple_of(64) {
                free &= (1u64 << (n % 64)) - 1;
            }
            while free != 0 {
                let v = k * 64 + free.trailing_zeros() as usize;
                free &= free - 1;
                f(u, v, base + (v - u - 1) as u64);
            }
        }
        base += (n - u - 1) as u64;
    }
}

fn check_round(state: &StageState, params: &ProcessParams) -> Result<()> {
    if state.m.n() != params.n {
        return Err(Error::Precondition(format!(
            "state has {} vertices, parameters {}",
            state.m.n(),
            params.n
        )));
    }
    if state.round >= params.rounds {
        return Err(Error::Precondition(format!(
            "round {} is not below the round count {}",
            state.round, params.rounds
        )));
    }
    let d = params.bite_denominator(state.round);
    if !(d >= params.denominator_floor) {
        return Err(Error::Config(format!(
            "bite denominator {d:.4} at round {} is below the floor {}",
            state.round, params.denominator_floor
        )));
    }
    let p = params.bite_prob(state.round);
    if !(p <= 1.0) {
        return Err(Error::Config(format!(
            "bite probability {p} > 1 at round {}",
            state.round
        )));
    }
    Ok(())
}

fn traverse_bite(
    mut state: StageState,
    mut born: Vec<(f64, EdgeId)>,
    outer: Vec<EdgeId>,
    inner: Vec<EdgeId>,
) -> StageState {
    let n = state.m.n();
    born.sort_unstable_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
    for &(_, id) in &born {
        let (u, v) = id.decode(n);
        state.trav.add_edge(u, v);
        if !state.m.closes_k4(u, v) {
            state.m.add_edge(u, v);
        }
    }
    state.round += 1;
    state.outer = outer;
    state.inner = inner;
    state.bite = born.iter().map(|b| b.1).collect();
    state.birthtimes = born.iter().map(|b| b.0).collect();
    state
}

/// One round of the three-stage thinning.
pub fn step(state: StageState, params: &ProcessParams) -> Result<StageState> {
    staged_round(state, params, true)
}

fn staged_round(state: StageState, params: &ProcessParams, record: bool) -> Result<StageState> {
    check_round(&state, params)?;
    let i = state.round;
    let key = RoundKey::new(params.seed, i);
    let t_outer = bernoulli_threshold(params.outer_prob());
    let t_inner = bernoulli_threshold(params.inner_prob());
    let t_bite = bernoulli_threshold(params.bite_prob(i));
    let mut outer = Vec::new();
    let mut inner = Vec::new();
    let mut born = Vec::new();
    for_each_untraversed(&state.trav, |_, _, id| {
        if !accept(key.draw(id, TAG_OUTER), t_outer) {
            return;
        }
        let e = EdgeId(id as u32);
        if record {
            outer.push(e);
        }
        if !accept(key.draw(id, TAG_INNER), t_inner) {
            return;
        }
        if record {
            inner.push(e);
        }
        if accept(key.draw(id, TAG_BITE), t_bite) {
            born.push((key.uniform(id, TAG_BIRTH), e));
        }
    });
    Ok(traverse_bite(state, born, outer, inner))
}

/// One round with the bite sampled directly; the intermediate samples are
/// left empty.
pub fn step_oneshot(state: StageState, params: &ProcessParams) -> Result<StageState> {
    check_round(&state, params)?;
    let i = state.round;
    let key = RoundKey::new(params.seed, i);
    let t = bernoulli_threshold(params.oneshot_prob(i));
    let mut born = Vec::new();
    for_each_untraversed(&state.trav, |_, _, id| {
        if accept(key.draw(id, TAG_ONESHOT), t) {
            born.push((key.uniform(id, TAG_BIRTH), EdgeId(id as u32)));
        }
    });
    Ok(traverse_bite(state, born, Vec::new(), Vec::new()))
}

pub fn step_with(mode: StepMode, state: StageState, params: &ProcessParams) -> Result<StageState> {
    match mode {
        StepMode::Staged => step(state, params),
        StepMode::OneShot => step_oneshot(state, params),
    }
}

/// Run all rounds and return the final state.
pub fn run_rounds(params: &ProcessParams, mode: StepMode) -> Result<StageState> {
    params.validate()?;
    let mut state = StageState::initial(params.n);
    for _ in 0..params.rounds {
        state = step_with(mode, state, params)?;
    }
    Ok(state)
}

/// `|M_I|` after all rounds, without keeping the intermediate samples.
pub fn final_edge_count(params: &ProcessParams, mode: StepMode) -> Result<u64> {
    params.validate()?;
    let mut state = StageState::initial(params.n);
    for _ in 0..params.rounds {
        state = match mode {
            StepMode::Staged => staged_round(state, params, false)?,
            StepMode::OneShot => step_oneshot(state, params)?,
        };
    }
    Ok(state.m.m() as u64)
}

/// Empirical value, predicted centre, relative deviation and the relative
/// envelope half-width for one tracked quantity.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Deviation {
    pub empirical: f64,
    pub predicted: f64,
    pub relative: f64,
    pub envelope: f64,
}

impl Deviation {
    fn new(empirical: f64, predicted: f64, envelope: f64) -> Self {
        let relative = if predicted == 0.0 {
            if empirical == 0.0 {
                0.0
            } else {
                f64::INFINITY
            }
        } else {
            empirical / predicted - 1.0
        };
        Deviation {
            empirical,
            predicted,
            relative,
            envelope,
        }
    }

    pub fn within_envelope(&self) -> bool {
        self.relative.abs() <= self.envelope
    }
}

/// Event-A observables for one state. Reported only: the envelopes are not
/// small at reachable `n`.
#[derive(Clone, Debug, Serialize)]
pub struct EventAReport {
    pub round: u64,
    pub x: f64,
    pub big_gamma: f64,
    /// `|M_i|` against `0.5 n^{8/5} Φ`.
    pub a1: Deviation,
    /// `|O_i|` against `0.5 n² φ`.
    pub a2: Deviation,
    /// `C(n,2) / (0.5 n²)`: the factor between the exact pair count and the
    /// `0.5 n²` proxy in the A2 centre.
    pub pair_correction: f64,
    /// Mean `|X_{i,j}(f)|` over sampled open `f` against `x_{i,j}`, `j = 1..=5`.
    pub a3: [Deviation; 5],
    pub sampled: usize,
}

/// Measure the tracked quantities of the state against the trajectory.
pub fn measure_event_a(
    state: &StageState,
    params: &ProcessParams,
    table: &TrajectoryTable,
    sample_size: usize,
) -> Result<EventAReport> {
    let n = params.n as u64;
    let nf = n as f64;
    let q = TrajectoryQuantities::new(n, params.eps1, params.eps2, table);
    let i = state.round;
    let (big_phi, phi) = q.values(i)?;
    let big_gamma = q.big_gamma(i)?;

    let open = graph::open_pairs(&state.m, &state.trav);
    let open_list: Vec<(usize, usize)> = open.edges().collect();
    let mut rng = rng::stream(params.seed, &[STREAM_EVENT_A, i]);
    let k = sample_size.min(open_list.len());
    let mut sums = [0.0f64; 5];
    for idx in index::sample(&mut rng, open_list.len(), k).iter() {
        let (u, v) = open_list[idx];
        let c = graph::completion_counts(&state.m, &open, u, v);
        for j in 1..=5 {
            sums[j - 1] += c[j] as f64;
        }
    }
    let mut a3 = [Deviation::new(0.0, 0.0, 0.0); 5];
    for j in 1..=5u32 {
        let emp = if k > 0 {
            sums[j as usize - 1] / k as f64
        } else {
            0.0
        };
        a3[j as usize - 1] = Deviation::new(emp, q.x_ij(i, j)?, 1000.0 * big_gamma);
    }
    Ok(EventAReport {
        round: i,
        x: q.time(i),
        big_gamma,
        a1: Deviation::new(
            state.m.m() as f64,
            0.5 * nf.powf(1.6) * big_phi,
            100.0 * big_gamma,
        ),
        a2: Deviation::new(open.m() as f64, 0.5 * nf * nf * phi, 100.0 * big_gamma),
        pair_correction: binom(n, 2) / (0.5 * nf * nf),
        a3,
        sampled: k,
    })
}

/// One row of the per-round CSV.
#[derive(Clone, Debug, Serialize)]
pub struct RoundRow {
    pub i: u64,
    pub bigbite: usize,
    pub bigbite2: usize,
    pub bite: usize,
    pub m: usize,
    pub open: u64,
    pub dev_a1: f64,
    pub dev_a2: f64,
    pub dev_a3: [f64; 5],
}

pub const ROUND_HEADER: [&str; 13] = [
    "i", "bigbite", "bigbite2", "bite", "m", "open", "devA1", "devA2", "devA3_j1", "devA3_j2",
    "devA3_j3", "devA3_j4", "devA3_j5",
];

/// Run every round, measuring event A after each, and return the rows
/// `i = 0..=I` together with the final state.
pub fn run_with_report(
    params: &ProcessParams,
    mode: StepMode,
    table: &TrajectoryTable,
    sample_size: usize,
) -> Result<(StageState, Vec<RoundRow>)> {
    params.validate()?;
    let mut state = StageState::initial(params.n);
    let mut rows = Vec::with_capacity(params.rounds as usize + 1);
    loop {
        let rep = measure_event_a(&state, params, table, sample_size)?;
        rows.push(RoundRow {
            i: state.round,
            bigbite: state.outer.len(),
            bigbite2: state.inner.len(),
            bite: state.bite.len(),
            m: state.m.m(),
            open: rep.a2.empirical as u64,
            dev_a1: rep.a1.relative,
            dev_a2: rep.a2.relative,
            dev_a3: rep.a3.map(|d| d.relative),
        });
        if state.round >= params.rounds {
            break;
        }
        state = step_with(mode, state, params)?;
    }
    Ok((state, rows))
}

pub fn write_round_rows<W: Write>(rows: &[RoundRow], w: W) -> Result<()> {
    let mut wr = csv::Writer::from_writer(w);
    wr.write_record(ROUND_HEADER)?;
    for r in rows {
        let mut rec = vec![
            r.i.to_string(),
            r.bigbite.to_string(),
            r.bigbite2.to_string(),
            r.bite.to_string(),
            r.m.to_string(),
            r.open.to_string(),
            format!("{}", r.dev_a1),
            format!("{}", r.dev_a2),
        ];
        rec.extend(r.dev_a3.iter().map(|d| format!("{d}")));
        wr.write_record(&rec)?;
    }
    wr.flush()?;
    Ok(())
}

/// Probability that a fixed pair lands in the first-round bite under the
/// three-stage thinning.
pub fn first_round_marginal(params: &ProcessParams) -> f64 {
    params.outer_prob() * params.inner_prob() * params.bite_prob(0)
}

/// Total number of pairs, for sanity checks on traversal counts.
pub fn total_pairs(params: &ProcessParams) -> u64 {
    pair_count(params.n)
}
