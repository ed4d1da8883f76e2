//! Triangle coverage and triangle-free subsets of K4-free graphs.
//!
//! `f₃(G)` is the largest vertex subset of `G` spanning no triangle. The
//! exact search is a branch and bound over `u64` masks; larger graphs use a
//! randomized greedy plus iterated local search.

use rand::seq::{index, IndexedRandom, SliceRandom};
use rand::Rng;
use serde::Serialize;

use crate::bits::VertexSet;
use crate::error::{Error, Result};
use crate::graph::{classify, EdgeClass, Graph};
use crate::rng;

/// Largest graph the exact search accepts by default.
pub const DEFAULT_EXACT_CAP: usize = 45;

/// Default node budget of the exact search.
pub const DEFAULT_EXACT_BUDGET: u64 = 50_000_000;

/// Default number of local-search iterations of the heuristic.
pub const DEFAULT_HEURISTIC_BUDGET: u64 = 20_000;

/// Balanced random tripartitions drawn per subset.
pub const DEFAULT_PARTITIONS_PER_SET: usize = 5;

/// Lower bound on `|R| / s` when sampling `(R, T)` pairs.
pub const DEFAULT_R_FRACTION: f64 = 0.9;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum F3Mode {
    Exact,
    Heuristic,
}

impl std::str::FromStr for F3Mode {
    type Err = Error;

    fn from_str(s: &str) -> Result<F3Mode> {
        match s {
            "exact" => Ok(F3Mode::Exact),
            "heuristic" => Ok(F3Mode::Heuristic),
            _ => Err(Error::Config(format!(
                "unknown mode `{s}` (exact|heuristic)"
            ))),
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct F3Result {
    /// Best triangle-free subset found, ascending.
    pub vertices: Vec<usize>,
    /// True iff the exact search ran to completion.
    pub exact: bool,
    /// Search nodes (exact) or local-search iterations (heuristic).
    pub nodes: u64,
}

impl F3Result {
    pub fn size(&self) -> usize {
        self.vertices.len()
    }
}

/// Largest triangle-free vertex subset.
///
/// `budget` caps search nodes in exact mode (the result is then flagged
/// inexact if hit) and local-search iterations in heuristic mode.
pub fn max_triangle_free_subset(
    m: &Graph,
    mode: F3Mode,
    budget: u64,
    seed: u64,
) -> Result<F3Result> {
    let res = match mode {
        F3Mode::Exact => exact_f3(m, DEFAULT_EXACT_CAP, budget)?,
        F3Mode::Heuristic => heuristic_f3(m, budget, seed),
    };
    if m.spans_triangle(&res.vertices) {
        return Err(Error::Numeric(
            "search returned a subset spanning a triangle".into(),
        ));
    }
    Ok(res)
}

struct Bnb {
    adj: Vec<u64>,
    best: u64,
    best_size: u32,
    nodes: u64,
    budget: u64,
}

impl Bnb {
    fn search(&mut self, chosen: u64, mut cand: u64) {
        self.nodes += 1;
        let size = chosen.count_ones();
        if size > self.best_size {
            self.best_size = size;
            self.best = chosen;
        }
        while cand != 0 {
            if size + cand.count_ones() <= self.best_size || self.nodes >= self.budget {
                return;
            }
            let v = cand.trailing_zeros() as usize;
            cand &= cand - 1;
            // vertices that would close a triangle with v and a chosen neighbour
            let mut blocked = 0u64;
            let mut nb = self.adj[v] & chosen;
            while nb != 0 {
                let u = nb.trailing_zeros() as usize;
                nb &= nb - 1;
                blocked |= self.adj[u] & self.adj[v];
            }
            self.search(chosen | 1 << v, cand & !blocked);
        }
    }
}

/// Exact branch and bound for graphs with at most `cap ≤ 64` vertices.
pub fn exact_f3(m: &Graph, cap: usize, budget: u64) -> Result<F3Result> {
    let n = m.n();
    if n > cap.min(64) {
        return Err(Error::Config(format!(
            "exact f3 search supports n <= {}; use heuristic mode for n = {n}",
            cap.min(64)
        )));
    }
    let adj: Vec<u64> = (0..n)
        .map(|u| m.neighbors(u).fold(0u64, |a, v| a | 1 << v))
        .collect();
    let all = if n == 64 { !0 } else { (1u64 << n) - 1 };
    let mut bnb = Bnb {
        adj,
        best: 0,
        best_size: 0,
        nodes: 0,
        budget: budget.max(1),
    };
    bnb.search(0, all);
    let vertices = (0..n).filter(|&v| bnb.best >> v & 1 == 1).collect();
    Ok(F3Result {
        vertices,
        exact: bnb.nodes < bnb.budget,
        nodes: bnb.nodes,
    })
}

/// Incremental triangle-conflict bookkeeping for a vertex subset `S`:
/// `conflicts[v]` counts edges of `S` inside `N(v)`.
struct Conflicts<'a> {
    g: &'a Graph,
    set: VertexSet,
    conflicts: Vec<u32>,
}

impl<'a> Conflicts<'a> {
    fn new(g: &'a Graph) -> Self {
        Conflicts {
            g,
            set: VertexSet::new(g.n()),
            conflicts: vec![0; g.n()],
        }
    }

    fn common_in_set(&self, a: usize, b: usize) -> u32 {
        let (ra, rb, s) = (self.g.row(a), self.g.row(b), self.set.words());
        ra.iter()
            .zip(rb)
            .zip(s)
            .map(|((x, y), z)| (x & y & z).count_ones())
            .sum()
    }

    fn addable(&self, v: usize) -> bool {
        !self.set.contains(v) && self.conflicts[v] == 0
    }

    fn insert(&mut self, x: usize) {
        debug_assert!(self.addable(x));
        let nbrs: Vec<usize> = self.g.neighbors(x).collect();
        for v in nbrs {
            let c = self.common_in_set(v, x);
            self.conflicts[v] += c;
        }
        self.set.insert(x);
    }

    fn remove(&mut self, x: usize) {
        self.set.remove(x);
        let nbrs: Vec<usize> = self.g.neighbors(x).collect();
        for v in nbrs {
            let c = self.common_in_set(v, x);
            self.conflicts[v] -= c;
        }
    }

    /// Add addable vertices in the given order until none is left.
    fn saturate(&mut self, order: &[usize]) {
        for &v in order {
            if self.addable(v) {
                self.insert(v);
            }
        }
    }
}

impl Conflicts<'_> {
    /// Some edge of `S` inside `N(v)`, if any.
    fn conflict_edge(&self, v: usize) -> Option<(usize, usize)> {
        let words = self.set.words();
        let rv = self.g.row(v);
        let inside: Vec<u64> = rv.iter().zip(words).map(|(a, b)| a & b).collect();
        for a in crate::bits::Ones::new(&inside) {
            let ra = self.g.row(a);
            if let Some((k, w)) = ra
                .iter()
                .zip(&inside)
                .map(|(x, y)| x & y)
                .enumerate()
                .find(|(_, w)| *w != 0)
            {
                return Some((a, k * 64 + w.trailing_zeros() as usize));
            }
        }
        None
    }
}

/// Best of [`ils_f3`] and [`tabu_f3`], each given half the budget.
pub fn heuristic_f3(m: &Graph, budget: u64, seed: u64) -> F3Result {
    let a = ils_f3(m, budget / 2, seed);
    let b = tabu_f3(m, budget - budget / 2, seed);
    let nodes = a.nodes + b.nodes;
    let mut best = if b.size() > a.size() { b } else { a };
    best.nodes = nodes;
    best
}

/// Randomized greedy construction followed by iterated local search: each
/// iteration drops one or two random members, refills greedily in a random
/// order, and keeps the result unless it got smaller.
pub fn ils_f3(m: &Graph, budget: u64, seed: u64) -> F3Result {
    let n = m.n();
    let mut rng = rng::stream(seed, &[0x15]);
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(&mut rng);
    order.sort_by_key(|&v| m.degree(v));
    let mut st = Conflicts::new(m);
    st.saturate(&order);
    let mut best: Vec<usize> = st.set.iter().collect();
    let mut iters = 0;
    while iters < budget && n > 0 {
        iters += 1;
        let members: Vec<usize> = st.set.iter().collect();
        if members.is_empty() {
            break;
        }
        let drops = rng.random_range(1..=2usize).min(members.len());
        let removed: Vec<usize> = members.choose_multiple(&mut rng, drops).copied().collect();
        for &x in &removed {
            st.remove(x);
        }
        order.shuffle(&mut rng);
        // refill, preferring vertices other than the ones just removed
        let refill: Vec<usize> = order
            .iter()
            .copied()
            .filter(|v| !removed.contains(v))
            .collect();
        st.saturate(&refill);
        st.saturate(&removed);
        let size = st.set.len();
        if size >= members.len() {
            if size > best.len() {
                best = st.set.iter().collect();
            }
        } else {
            let now: Vec<usize> = st.set.iter().collect();
            for x in now {
                if !members.contains(&x) {
                    st.remove(x);
                }
            }
            for &x in &members {
                if !st.set.contains(x) {
                    st.insert(x);
                }
            }
        }
    }
    F3Result {
        vertices: best,
        exact: false,
        nodes: iters,
    }
}

/// Tabu walk with forced insertions.
///
/// Starting from a greedy set, each iteration inserts a non-member with few
/// conflicts (best of a few random non-tabu candidates), evicts one endpoint
/// of every triangle this creates, marks the evicted vertices tabu for a
/// few iterations, and greedily re-adds freed vertices. The walk always
/// moves; the largest set seen is returned.
pub fn tabu_f3(m: &Graph, budget: u64, seed: u64) -> F3Result {
    const CANDIDATES: usize = 8;
    const TENURE: u64 = 7;
    let n = m.n();
    let mut rng = rng::stream(seed, &[0xF3]);
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(&mut rng);
    // low-degree vertices first tends to give larger sets
    order.sort_by_key(|&v| m.degree(v));
    let mut st = Conflicts::new(m);
    st.saturate(&order);
    let mut best: Vec<usize> = st.set.iter().collect();
    let mut tabu = vec![0u64; n];
    let mut iters = 0;
    while iters < budget && st.set.len() < n {
        iters += 1;
        let mut pick = None;
        for _ in 0..CANDIDATES {
            let v = rng.random_range(0..n);
            if st.set.contains(v) || tabu[v] > iters {
                continue;
            }
            if pick.is_none_or(|p: usize| st.conflicts[v] < st.conflicts[p]) {
                pick = Some(v);
            }
        }
        let Some(v) = pick else { continue };
        let mut evicted = Vec::new();
        while let Some((a, b)) = st.conflict_edge(v) {
            let r = if rng.random::<bool>() { a } else { b };
            st.remove(r);
            tabu[r] = iters + TENURE;
            evicted.push(r);
        }
        st.insert(v);
        let mut freed: Vec<usize> = evicted.iter().flat_map(|&r| m.neighbors(r)).collect();
        freed.shuffle(&mut rng);
        for u in freed {
            if tabu[u] <= iters && st.addable(u) {
                st.insert(u);
            }
        }
        if st.set.len() > best.len() {
            best = st.set.iter().collect();
        }
    }
    F3Result {
        vertices: best,
        exact: false,
        nodes: iters,
    }
}

/// `f₃` by scanning all `2ⁿ` subsets; for small oracle checks.
pub fn brute_force_f3(m: &Graph) -> usize {
    let n = m.n();
    assert!(n <= 24, "subset scan is limited to n <= 24");
    let adj: Vec<u64> = (0..n)
        .map(|u| m.neighbors(u).fold(0u64, |a, v| a | 1 << v))
        .collect();
    let mut best = 0;
    for mask in 0u64..1 << n {
        let size = mask.count_ones() as usize;
        if size <= best {
            continue;
        }
        let triangle_free = (0..n).filter(|&u| mask >> u & 1 == 1).all(|u| {
            let mut nb = adj[u] & mask & !((2u64 << u) - 1);
            while nb != 0 {
                let v = nb.trailing_zeros() as usize;
                nb &= nb - 1;
                if adj[u] & adj[v] & mask != 0 {
                    return false;
                }
            }
            true
        });
        if triangle_free {
            best = size;
        }
    }
    best
}

#[derive(Clone, Debug, Serialize)]
pub struct CoverageReport {
    pub n: usize,
    pub s: usize,
    pub samples: u64,
    /// Sampled `s`-subsets spanning no triangle.
    pub violations: u64,
    /// Size of the largest triangle-free subset the heuristic found.
    pub adversarial_best: usize,
}

impl CoverageReport {
    pub fn covered(&self) -> bool {
        self.violations == 0 && self.adversarial_best < self.s
    }
}

/// Sample uniform `s`-subsets and count those spanning no triangle, then
/// probe adversarially with the heuristic `f₃` search.
pub fn check_s_subsets(
    m: &Graph,
    s: usize,
    samples: u64,
    seed: u64,
    heuristic_budget: u64,
) -> Result<CoverageReport> {
    let n = m.n();
    if s < 3 || s > n {
        return Err(Error::Config(format!(
            "s must satisfy 3 <= s <= n = {n}, got {s}"
        )));
    }
    let mut rng = rng::stream(seed, &[0xC0]);
    let mut violations = 0;
    for _ in 0..samples {
        let pick = index::sample(&mut rng, n, s);
        let mut set = VertexSet::new(n);
        for v in pick.iter() {
            set.insert(v);
        }
        if !m.spans_triangle_in(&set) {
            violations += 1;
        }
    }
    let adversarial = heuristic_f3(m, heuristic_budget, rng::derive_seed(seed, &[0xAD]));
    Ok(CoverageReport {
        n,
        s,
        samples,
        violations,
        adversarial_best: adversarial.size(),
    })
}

/// A vertex set `R` split into three parts whose sizes differ by at most one.
#[derive(Clone, Debug, Serialize)]
pub struct Tripartition {
    pub parts: [Vec<usize>; 3],
}

impl Tripartition {
    /// Shuffle `r` and deal it into three balanced parts.
    pub fn balanced_random<R: Rng + ?Sized>(r: &[usize], rng: &mut R) -> Tripartition {
        let mut v = r.to_vec();
        v.shuffle(rng);
        let mut parts: [Vec<usize>; 3] = Default::default();
        for (i, x) in v.into_iter().enumerate() {
            parts[i % 3].push(x);
        }
        for p in &mut parts {
            p.sort_unstable();
        }
        Tripartition { parts }
    }

    pub fn from_parts(parts: [Vec<usize>; 3]) -> Result<Tripartition> {
        let tp = Tripartition { parts };
        tp.validate()?;
        Ok(tp)
    }

    pub fn validate(&self) -> Result<()> {
        let mut all: Vec<usize> = self.parts.iter().flatten().copied().collect();
        let total = all.len();
        all.sort_unstable();
        all.dedup();
        if all.len() != total {
            return Err(Error::Structure("tripartition parts overlap".into()));
        }
        let lo = self.parts.iter().map(Vec::len).min().unwrap();
        let hi = self.parts.iter().map(Vec::len).max().unwrap();
        if hi - lo > 1 {
            return Err(Error::Structure(format!(
                "part sizes {lo}..{hi} are not balanced"
            )));
        }
        Ok(())
    }

    /// The vertex set `R`, ascending.
    pub fn vertices(&self) -> Vec<usize> {
        let mut all: Vec<usize> = self.parts.iter().flatten().copied().collect();
        all.sort_unstable();
        all
    }

    /// `|T|`, the number of cross triangles.
    pub fn triangle_count(&self) -> u64 {
        self.parts.iter().map(|p| p.len() as u64).product()
    }

    pub fn triangles(&self) -> impl Iterator<Item = [usize; 3]> + '_ {
        let [a, b, c] = &self.parts;
        a.iter().flat_map(move |&x| {
            b.iter()
                .flat_map(move |&y| c.iter().map(move |&z| [x, y, z]))
        })
    }
}

/// Draw `(R, T)` pairs for a set `S`: `R ⊆ S` uniform of size between
/// `⌈frac·|S|⌉` and `|S|`, then a balanced random tripartition of `R`.
pub fn sample_pairs<R: Rng + ?Sized>(
    s_set: &[usize],
    count: usize,
    frac: f64,
    rng: &mut R,
) -> Vec<Tripartition> {
    let lo = ((frac * s_set.len() as f64).ceil() as usize).min(s_set.len());
    (0..count)
        .map(|_| {
            let size = rng.random_range(lo..=s_set.len());
            let r: Vec<usize> = s_set.choose_multiple(rng, size).copied().collect();
            Tripartition::balanced_random(&r, rng)
        })
        .collect()
}

fn triangle_edges(t: [usize; 3]) -> [(usize, usize); 3] {
    [(t[0], t[1]), (t[0], t[2]), (t[1], t[2])]
}

/// Cross triangles `G` with `|M ∩ G| = 3 − j`, `|NotTrav ∩ G| = j` and
/// `M ∪ G` K4-free, indexed by `j = 0..=3`.
pub fn count_y_all(m: &Graph, trav: &Graph, tp: &Tripartition) -> [u64; 4] {
    let mut scratch = m.clone();
    let mut out = [0u64; 4];
    for t in tp.triangles() {
        let mut fresh = Vec::with_capacity(3);
        let mut ok = true;
        for (u, v) in triangle_edges(t) {
            match classify(m, trav, u, v) {
                EdgeClass::InM => {}
                EdgeClass::NotTraversed => fresh.push((u, v)),
                EdgeClass::Rejected => {
                    ok = false;
                    break;
                }
            }
        }
        if !ok {
            continue;
        }
        // add the missing edges one by one; M is K4-free, so the union is
        // K4-free iff no single addition closes a K4
        let mut added = 0;
        for &(u, v) in &fresh {
            if scratch.closes_k4(u, v) {
                ok = false;
                break;
            }
            scratch.add_edge(u, v);
            added += 1;
        }
        for &(u, v) in &fresh[..added] {
            scratch.remove_edge(u, v);
        }
        if ok {
            out[fresh.len()] += 1;
        }
    }
    out
}

/// `|Y_{i,j}(T)|` for one `j ∈ 0..=3`.
pub fn count_y(m: &Graph, trav: &Graph, tp: &Tripartition, j: usize) -> Result<u64> {
    if j > 3 {
        return Err(Error::Domain(format!("j = {j} outside 0..=3")));
    }
    Ok(count_y_all(m, trav, tp)[j])
}

/// Cross triangles with two edges in `M` and one untraversed edge `g`, such
/// that some K4-minus-`g` inside `M` (a member of `X_{i,0}(g)`) has at least
/// `min_shared` of its four vertices in `R`.
pub fn count_z(m: &Graph, trav: &Graph, tp: &Tripartition, min_shared: usize) -> u64 {
    let n = m.n();
    let r = VertexSet::from_slice(n, &tp.vertices());
    let mut count = 0;
    for t in tp.triangles() {
        let mut in_m = 0;
        let mut g = None;
        for (u, v) in triangle_edges(t) {
            match classify(m, trav, u, v) {
                EdgeClass::InM => in_m += 1,
                EdgeClass::NotTraversed => g = Some((u, v)),
                EdgeClass::Rejected => {}
            }
        }
        let Some((u, v)) = g else { continue };
        if in_m != 2 {
            continue;
        }
        if has_shared_completion(m, &r, u, v, min_shared) {
            count += 1;
        }
    }
    count
}

/// Whether some `w, x` with `uw, ux, vw, vx, wx ∈ M` has
/// `|{u, v, w, x} ∩ R| ≥ min_shared`.
fn has_shared_completion(m: &Graph, r: &VertexSet, u: usize, v: usize, min_shared: usize) -> bool {
    let base = r.contains(u) as usize + r.contains(v) as usize;
    let common: Vec<usize> = {
        let (ru, rv) = (m.row(u), m.row(v));
        crate::bits::Ones::new(&ru.iter().zip(rv).map(|(a, b)| a & b).collect::<Vec<_>>()).collect()
    };
    for (i, &w) in common.iter().enumerate() {
        for &x in &common[i + 1..] {
            if m.has_edge(w, x)
                && base + r.contains(w) as usize + r.contains(x) as usize >= min_shared
            {
                return true;
            }
        }
    }
    false
}

/// Vertices of `s_set` whose degree in `h ∩ (s_set choose 2)` is at most
/// `max_degree`.
pub fn degree_filter(h: &Graph, s_set: &[usize], max_degree: usize) -> Vec<usize> {
    let set = VertexSet::from_slice(h.n(), s_set);
    s_set
        .iter()
        .copied()
        .filter(|&v| {
            let d: u32 = h
                .row(v)
                .iter()
                .zip(set.words())
                .map(|(a, b)| (a & b).count_ones())
                .sum();
            d as usize <= max_degree
        })
        .collect()
}

/// `s = ⌈C n^{3/5} (ln n)^{1/5}⌉`.
pub fn target_size(n: usize, c: f64) -> usize {
    crate::staged::default_s(n, c)
}
