//! Dense bitset graphs and the K4-completion kernels.
//!
//! The process keeps two graphs over the same vertex set: `M`, the evolving
//! K4-free graph, and `Trav`, every pair traversed so far (accepted or not).
//! Together they split the pair space into three classes, see [`EdgeClass`].

use std::fmt;
use std::io::{BufRead, Write};
use std::path::Path;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::bits::{words_for, Ones, VertexSet};
use crate::error::{Error, Result};

/// Largest vertex count representable by [`EdgeId`].
pub const MAX_VERTICES: usize = 65_536;

/// Default configured vertex cap; larger instances are refused at startup.
pub const DEFAULT_VERTEX_CAP: usize = MAX_VERTICES;

/// Number of unordered pairs on `n` vertices.
#[inline]
pub const fn pair_count(n: usize) -> u64 {
    (n as u64) * (n as u64).saturating_sub(1) / 2
}

/// Fail with a configuration error when `n` exceeds `cap` (or the hard limit).
pub fn check_vertex_count(n: usize, cap: usize) -> Result<()> {
    if n > cap.min(MAX_VERTICES) {
        return Err(Error::Config(format!(
            "vertex count {n} exceeds the configured cap {}",
            cap.min(MAX_VERTICES)
        )));
    }
    Ok(())
}

/// Index of an unordered pair `{u, v}` in the `C(n, 2)` pair space.
///
/// Pairs are numbered in lexicographic order of `(min, max)`, so the
/// encoding is strictly increasing in that order.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct EdgeId(pub u32);

#[inline]
fn row_offset(n: u64, a: u64) -> u64 {
    a * (2 * n - a - 1) / 2
}

impl EdgeId {
    /// Encode `{u, v}`; the order of the arguments does not matter.
    #[inline]
    pub fn encode(n: usize, u: usize, v: usize) -> EdgeId {
        debug_assert!(u != v && u < n && v < n);
        let (a, b) = if u < v {
            (u as u64, v as u64)
        } else {
            (v as u64, u as u64)
        };
        EdgeId((row_offset(n as u64, a) + (b - a - 1)) as u32)
    }

    /// Recover `(u, v)` with `u < v`.
    pub fn decode(self, n: usize) -> (usize, usize) {
        let n64 = n as u64;
        let idx = self.0 as u64;
        debug_assert!(idx < pair_count(n));
        let b = (2 * n64 - 1) as f64;
        let mut a = ((b - (b * b - 8.0 * idx as f64).max(0.0).sqrt()) / 2.0).floor() as u64;
        a = a.min(n64.saturating_sub(2));
        while a > 0 && row_offset(n64, a) > idx {
            a -= 1;
        }
        while a + 1 < n64 && row_offset(n64, a + 1) <= idx {
            a += 1;
        }
        let v = a + 1 + (idx - row_offset(n64, a));
        (a as usize, v as usize)
    }

    #[inline]
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

/// Class of a vertex pair relative to `(M, Trav)`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum EdgeClass {
    /// Accepted into `M`.
    InM,
    /// Traversed but refused (it would have closed a K4).
    Rejected,
    /// Not traversed yet.
    NotTraversed,
}

impl EdgeClass {
    pub fn as_str(self) -> &'static str {
        match self {
            EdgeClass::InM => "in_m",
            EdgeClass::Rejected => "rejected",
            EdgeClass::NotTraversed => "not_traversed",
        }
    }
}

impl fmt::Display for EdgeClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Dense symmetric adjacency over `n` vertices, one bitset row per vertex.
#[derive(Clone, PartialEq, Eq)]
pub struct Graph {
    n: usize,
    words: usize,
    rows: Vec<u64>,
    m: usize,
}

impl fmt::Debug for Graph {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Graph")
            .field("n", &self.n)
            .field("m", &self.m)
            .finish()
    }
}

impl Graph {
    /// Empty graph on `n` vertices.
    ///
    /// Panics if `n` exceeds [`MAX_VERTICES`]; use [`Graph::try_new`] for
    /// configured caps.
    pub fn new(n: usize) -> Graph {
        assert!(
            n <= MAX_VERTICES,
            "graph with {n} vertices exceeds {MAX_VERTICES}"
        );
        let words = words_for(n);
        Graph {
            n,
            words,
            rows: vec![0; n * words],
            m: 0,
        }
    }

    pub fn try_new(n: usize, cap: usize) -> Result<Graph> {
        check_vertex_count(n, cap)?;
        Ok(Graph::new(n))
    }

    pub fn from_edges<I>(n: usize, edges: I) -> Graph
    where
        I: IntoIterator<Item = (usize, usize)>,
    {
        let mut g = Graph::new(n);
        for (u, v) in edges {
            g.add_edge(u, v);
        }
        g
    }

    /// Complete graph minus the listed pairs.
    pub fn complete_minus(n: usize, missing: &[(usize, usize)]) -> Graph {
        let mut g = Graph::new(n);
        for u in 0..n {
            for v in u + 1..n {
                g.add_edge(u, v);
            }
        }
        for &(u, v) in missing {
            g.remove_edge(u, v);
        }
        g
    }

    /// Binomial random graph G(n, p).
    pub fn gnp<R: Rng + ?Sized>(n: usize, p: f64, rng: &mut R) -> Graph {
        let mut g = Graph::new(n);
        for u in 0..n {
            for v in u + 1..n {
                if rng.random::<f64>() < p {
                    g.add_edge(u, v);
                }
            }
        }
        g
    }

    #[inline]
    pub fn n(&self) -> usize {
        self.n
    }

    /// Edge count.
    #[inline]
    pub fn m(&self) -> usize {
        self.m
    }

    /// Words per row.
    #[inline]
    pub fn row_words(&self) -> usize {
        self.words
    }

    #[inline]
    pub fn row(&self, u: usize) -> &[u64] {
        &self.rows[u * self.words..(u + 1) * self.words]
    }

    #[inline]
    pub fn has_edge(&self, u: usize, v: usize) -> bool {
        self.rows[u * self.words + v / 64] >> (v % 64) & 1 == 1
    }

    #[inline]
    pub fn has_pair(&self, f: EdgeId) -> bool {
        let (u, v) = f.decode(self.n);
        self.has_edge(u, v)
    }

    /// Insert `{u, v}`; returns `false` if it was already present.
    #[inline]
    pub fn add_edge(&mut self, u: usize, v: usize) -> bool {
        debug_assert!(u != v, "self-loop {u}");
        if self.has_edge(u, v) {
            return false;
        }
        self.rows[u * self.words + v / 64] |= 1 << (v % 64);
        self.rows[v * self.words + u / 64] |= 1 << (u % 64);
        self.m += 1;
        true
    }

    pub fn remove_edge(&mut self, u: usize, v: usize) -> bool {
        if !self.has_edge(u, v) {
            return false;
        }
        self.rows[u * self.words + v / 64] &= !(1 << (v % 64));
        self.rows[v * self.words + u / 64] &= !(1 << (u % 64));
        self.m -= 1;
        true
    }

    pub fn degree(&self, u: usize) -> usize {
        self.row(u).iter().map(|w| w.count_ones() as usize).sum()
    }

    pub fn neighbors(&self, u: usize) -> Ones<'_> {
        Ones::new(self.row(u))
    }

    /// Edges `(u, v)` with `u < v` in canonical order.
    pub fn edges(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        (0..self.n).flat_map(move |u| {
            self.neighbors(u)
                .filter(move |&v| v > u)
                .map(move |v| (u, v))
        })
    }

    /// Whether some edge of the graph lies inside `N(u) ∩ N(v)`, i.e. whether
    /// `{u, v}` together with the graph spans a K4 through `u` and `v`.
    ///
    /// Works whether or not `{u, v}` is itself an edge.
    #[inline]
    pub fn closes_k4(&self, u: usize, v: usize) -> bool {
        let ru = self.row(u);
        let rv = self.row(v);
        for k in 0..self.words {
            let mut c = ru[k] & rv[k];
            while c != 0 {
                let w = k * 64 + c.trailing_zeros() as usize;
                c &= c - 1;
                let rw = self.row(w);
                // common neighbours above w: remaining bits of this word, then later words
                if rw[k] & c != 0 {
                    return true;
                }
                for k2 in k + 1..self.words {
                    if rw[k2] & ru[k2] & rv[k2] != 0 {
                        return true;
                    }
                }
            }
        }
        false
    }

    /// Whether adding `{u, v}` would create a copy of K4.
    ///
    /// Errors if `u == v` or the edge is already present.
    pub fn creates_k4(&self, u: usize, v: usize) -> Result<bool> {
        if u == v {
            return Err(Error::Precondition(format!("self pair {{{u}, {u}}}")));
        }
        if u >= self.n || v >= self.n {
            return Err(Error::Precondition(format!(
                "vertex out of range in {{{u}, {v}}} for n = {}",
                self.n
            )));
        }
        if self.has_edge(u, v) {
            return Err(Error::Precondition(format!(
                "edge {{{u}, {v}}} already present"
            )));
        }
        Ok(self.closes_k4(u, v))
    }

    /// Exact K4-freeness check by probing the common neighbourhood of every
    /// edge.
    pub fn is_k4_free(&self) -> bool {
        for u in 0..self.n {
            for v in self.neighbors(u) {
                if v > u && self.closes_k4(u, v) {
                    return false;
                }
            }
        }
        true
    }

    /// Whether some triangle of the graph has all three vertices in `s`.
    pub fn spans_triangle(&self, s: &[usize]) -> bool {
        if s.len() < 3 {
            return false;
        }
        let mask = VertexSet::from_slice(self.n, s);
        self.spans_triangle_in(&mask)
    }

    pub fn spans_triangle_in(&self, mask: &VertexSet) -> bool {
        let mw = mask.words();
        let mut nu = vec![0u64; self.words];
        for u in mask.iter() {
            let ru = self.row(u);
            for k in 0..self.words {
                nu[k] = ru[k] & mw[k];
            }
            for v in Ones::new(&nu) {
                if v <= u {
                    continue;
                }
                let rv = self.row(v);
                if (0..self.words).any(|k| rv[k] & nu[k] != 0) {
                    return true;
                }
            }
        }
        false
    }

    /// Canonical edge list: a `n <count>` header followed by `u v` lines.
    pub fn write_edge_list<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "n {}", self.n)?;
        for (u, v) in self.edges() {
            writeln!(w, "{u} {v}")?;
        }
        Ok(())
    }

    pub fn read_edge_list<R: BufRead>(r: R, path: &Path) -> Result<Graph> {
        let perr = |line: usize, msg: String| Error::Parse {
            path: path.to_path_buf(),
            line,
            msg,
        };
        let mut g: Option<Graph> = None;
        for (i, line) in r.lines().enumerate() {
            let line = line?;
            let t = line.trim();
            if t.is_empty() || t.starts_with('#') {
                continue;
            }
            let mut it = t.split_whitespace();
            let a = it.next().unwrap_or_default();
            let b = it
                .next()
                .ok_or_else(|| perr(i + 1, "expected two fields".into()))?;
            if it.next().is_some() {
                return Err(perr(i + 1, "trailing fields".into()));
            }
            if a == "n" {
                if g.is_some() {
                    return Err(perr(i + 1, "duplicate header".into()));
                }
                let n: usize = b.parse().map_err(|e| perr(i + 1, format!("bad n: {e}")))?;
                check_vertex_count(n, DEFAULT_VERTEX_CAP)?;
                g = Some(Graph::new(n));
                continue;
            }
            let g = g
                .as_mut()
                .ok_or_else(|| perr(i + 1, "edge before `n` header".into()))?;
            let u: usize = a
                .parse()
                .map_err(|e| perr(i + 1, format!("bad vertex: {e}")))?;
            let v: usize = b
                .parse()
                .map_err(|e| perr(i + 1, format!("bad vertex: {e}")))?;
            if u >= g.n || v >= g.n || u == v {
                return Err(perr(i + 1, format!("invalid pair {u} {v}")));
            }
            g.add_edge(u, v);
        }
        g.ok_or_else(|| perr(0, "missing `n` header".into()))
    }

    pub fn load(path: &Path) -> Result<Graph> {
        let f = std::fs::File::open(path)?;
        Graph::read_edge_list(std::io::BufReader::new(f), path)
    }
}

/// Class of `{u, v}` given `M ⊆ Trav`.
#[inline]
pub fn classify(m: &Graph, trav: &Graph, u: usize, v: usize) -> EdgeClass {
    debug_assert!(
        !m.has_edge(u, v) || trav.has_edge(u, v),
        "M must be a subgraph of Trav"
    );
    if m.has_edge(u, v) {
        EdgeClass::InM
    } else if trav.has_edge(u, v) {
        EdgeClass::Rejected
    } else {
        EdgeClass::NotTraversed
    }
}

/// Whether `f` is open: untraversed and addable to `M` without a K4.
///
/// Errors if `f` has been traversed; open pairs are a subset of the
/// untraversed ones.
pub fn is_open(m: &Graph, trav: &Graph, f: EdgeId) -> Result<bool> {
    let (u, v) = f.decode(m.n());
    if trav.has_edge(u, v) {
        return Err(Error::Domain(format!(
            "pair {{{u}, {v}}} was already traversed"
        )));
    }
    Ok(!m.closes_k4(u, v))
}

/// All open pairs as a graph. Full scan over the untraversed pairs.
pub fn open_pairs(m: &Graph, trav: &Graph) -> Graph {
    let n = m.n();
    let mut open = Graph::new(n);
    for u in 0..n {
        let tr = trav.row(u);
        for k in u / 64..tr.len() {
            let mut free = !tr[k];
            if k == u / 64 {
                // strictly above u
                free &= if u % 64 == 63 {
                    0
                } else {
                    !0u64 << (u % 64 + 1)
                };
            }
            if k == tr.len() - 1 && !n.is_multiple_of(64) {
                free &= (1u64 << (n % 64)) - 1;
            }
            while free != 0 {
                let v = k * 64 + free.trailing_zeros() as usize;
                free &= free - 1;
                if !m.closes_k4(u, v) {
                    open.add_edge(u, v);
                }
            }
        }
    }
    open
}

/// A five-edge near-completion of a K4 through some pair `f = {u, v}`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CompletionRecord {
    /// `[u, v, w, x]` with `u < v` the endpoints of `f` and `w < x`.
    pub vertices: [usize; 4],
    /// Classes of `uw, ux, vw, vx, wx`, in that order.
    pub classes: [EdgeClass; 5],
    /// Number of untraversed edges among the five.
    pub j: u8,
}

impl CompletionRecord {
    pub fn edges(&self) -> [(usize, usize); 5] {
        let [u, v, w, x] = self.vertices;
        [(u, w), (u, x), (v, w), (v, x), (w, x)]
    }
}

/// Enumerate the near-completions of `f`: every pair `{w, x}` outside `f`
/// whose five K4 edges avoid the rejected class and whose untraversed edges
/// are all open.
///
/// Cost is quadratic in `n` times a K4 probe per untraversed edge; for
/// counting at larger `n` use [`completion_counts`].
pub fn enumerate_completions(m: &Graph, trav: &Graph, f: EdgeId) -> Result<Vec<CompletionRecord>> {
    let n = m.n();
    let (u, v) = f.decode(n);
    if trav.has_edge(u, v) {
        return Err(Error::Domain(format!(
            "pair {{{u}, {v}}} was already traversed"
        )));
    }
    let mut out = Vec::new();
    // memoized openness per pair index; 0 unknown, 1 open, 2 closed
    let mut open_memo = vec![0u8; pair_count(n) as usize];
    let mut edge_ok = |a: usize, b: usize| -> Option<EdgeClass> {
        match classify(m, trav, a, b) {
            EdgeClass::Rejected => None,
            EdgeClass::InM => Some(EdgeClass::InM),
            EdgeClass::NotTraversed => {
                let id = EdgeId::encode(n, a, b).index();
                if open_memo[id] == 0 {
                    open_memo[id] = if m.closes_k4(a, b) { 2 } else { 1 };
                }
                (open_memo[id] == 1).then_some(EdgeClass::NotTraversed)
            }
        }
    };
    for w in 0..n {
        if w == u || w == v {
            continue;
        }
        let Some(cuw) = edge_ok(u, w) else { continue };
        let Some(cvw) = edge_ok(v, w) else { continue };
        for x in w + 1..n {
            if x == u || x == v {
                continue;
            }
            let Some(cux) = edge_ok(u, x) else { continue };
            let Some(cvx) = edge_ok(v, x) else { continue };
            let Some(cwx) = edge_ok(w, x) else { continue };
            let classes = [cuw, cux, cvw, cvx, cwx];
            let j = classes
                .iter()
                .filter(|&&c| c == EdgeClass::NotTraversed)
                .count() as u8;
            out.push(CompletionRecord {
                vertices: [u, v, w, x],
                classes,
                j,
            });
        }
    }
    Ok(out)
}

/// Per-`j` counts of the near-completions of `f = {u, v}`, index `j` in
/// `0..=5`, given the precomputed open-pair graph (see [`open_pairs`]).
///
/// Word-parallel: for each `w` the candidates `x` are split by the classes of
/// `ux`, `vx` and `wx`, and each class is counted with one popcount per word.
pub fn completion_counts(m: &Graph, open: &Graph, u: usize, v: usize) -> [u64; 6] {
    let words = m.row_words();
    let (mu, mv) = (m.row(u), m.row(v));
    let (ou, ov) = (open.row(u), open.row(v));
    // classes[a + 2b]: candidates x with [ux open] = a, [vx open] = b
    let mut classes = vec![[0u64; 4]; words];
    let mut cand = vec![0u64; words];
    for k in 0..words {
        let mut c = (mu[k] | ou[k]) & (mv[k] | ov[k]);
        if k == u / 64 {
            c &= !(1 << (u % 64));
        }
        if k == v / 64 {
            c &= !(1 << (v % 64));
        }
        cand[k] = c;
        for (a, wa) in [(0usize, mu[k]), (1, ou[k])] {
            for (b, wb) in [(0usize, mv[k]), (1, ov[k])] {
                classes[k][a + 2 * b] = c & wa & wb;
            }
        }
    }
    let mut counts = [0u64; 6];
    for w in Ones::new(&cand) {
        let jw = open.has_edge(u, w) as usize + open.has_edge(v, w) as usize;
        let (mw, ow) = (m.row(w), open.row(w));
        let kw = w / 64;
        for k in kw..words {
            let above = if k == kw {
                if w % 64 == 63 {
                    0
                } else {
                    !0u64 << (w % 64 + 1)
                }
            } else {
                !0u64
            };
            let (mk, ok) = (mw[k] & above, ow[k] & above);
            if mk | ok == 0 {
                continue;
            }
            for (ab, &cls) in classes[k].iter().enumerate() {
                if cls == 0 {
                    continue;
                }
                let base = jw + (ab & 1) + (ab >> 1);
                counts[base] += (cls & mk).count_ones() as u64;
                counts[base + 1] += (cls & ok).count_ones() as u64;
            }
        }
    }
    counts
}

/// Dump every pair in canonical order as `u v class`.
pub fn write_class_dump<W: Write>(m: &Graph, trav: &Graph, mut w: W) -> Result<()> {
    let n = m.n();
    for u in 0..n {
        for v in u + 1..n {
            writeln!(w, "{u} {v} {}", classify(m, trav, u, v))?;
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn k4_through_bruteforce(g: &Graph, u: usize, v: usize) -> bool {
        let n = g.n();
        for w in 0..n {
            for x in w + 1..n {
                if [u, v].contains(&w) || [u, v].contains(&x) {
                    continue;
                }
                if g.has_edge(u, w)
                    && g.has_edge(u, x)
                    && g.has_edge(v, w)
                    && g.has_edge(v, x)
                    && g.has_edge(w, x)
                {
                    return true;
                }
            }
        }
        false
    }

    fn has_k4_bruteforce(g: &Graph) -> bool {
        let n = g.n();
        for a in 0..n {
            for b in a + 1..n {
                for c in b + 1..n {
                    for d in c + 1..n {
                        let p = [a, b, c, d];
                        if (0..4).all(|i| (i + 1..4).all(|j| g.has_edge(p[i], p[j]))) {
                            return true;
                        }
                    }
                }
            }
        }
        false
    }

    #[test]
    fn edge_id_roundtrip_small() {
        for n in 2..40 {
            let mut expect = 0u32;
            for u in 0..n {
                for v in u + 1..n {
                    let id = EdgeId::encode(n, u, v);
                    assert_eq!(id.0, expect);
                    assert_eq!(EdgeId::encode(n, v, u), id);
                    assert_eq!(id.decode(n), (u, v));
                    expect += 1;
                }
            }
        }
    }

    #[test]
    fn edge_id_extremes() {
        let n = MAX_VERTICES;
        let last = EdgeId((pair_count(n) - 1) as u32);
        assert_eq!(last.decode(n), (n - 2, n - 1));
        assert_eq!(EdgeId(0).decode(n), (0, 1));
        assert_eq!(EdgeId::encode(n, 1, 2).decode(n), (1, 2));
    }

    proptest! {
        #[test]
        fn edge_id_monotone_and_inverse(n in 2usize..5000, a in any::<u64>(), b in any::<u64>()) {
            let u = (a % n as u64) as usize;
            let mut v = (b % n as u64) as usize;
            if u == v { v = (v + 1) % n; }
            let id = EdgeId::encode(n, u, v);
            prop_assert_eq!(id.decode(n), (u.min(v), u.max(v)));
            let (lo, hi) = (u.min(v), u.max(v));
            if hi + 1 < n {
                prop_assert!(EdgeId::encode(n, lo, hi + 1) > id);
            }
            if lo + 1 < hi {
                prop_assert!(EdgeId::encode(n, lo + 1, hi) > id);
            }
        }
    }

    #[test]
    fn creates_k4_trivial_cases() {
        let g = Graph::complete_minus(4, &[(0, 1)]);
        assert_eq!(g.m(), 5);
        assert!(g.creates_k4(0, 1).unwrap());

        // triangle plus pendant edges
        let g = Graph::from_edges(7, [(0, 1), (1, 2), (0, 2), (0, 3), (1, 4), (2, 5), (5, 6)]);
        for u in 0..7 {
            for v in u + 1..7 {
                if !g.has_edge(u, v) {
                    assert!(!g.creates_k4(u, v).unwrap(), "{u} {v}");
                }
            }
        }
    }

    #[test]
    fn creates_k4_preconditions() {
        let g = Graph::from_edges(5, [(0, 1)]);
        assert!(matches!(g.creates_k4(2, 2), Err(Error::Precondition(_))));
        assert!(matches!(g.creates_k4(0, 1), Err(Error::Precondition(_))));
        assert!(matches!(g.creates_k4(0, 9), Err(Error::Precondition(_))));
    }

    #[test]
    fn creates_k4_matches_quadruple_scan() {
        // n <= 10, 200 seeds, plus G(8, 0.5) and a word-boundary size.
        for seed in 0..200u64 {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let n = 4 + (seed as usize % 7);
            let g = Graph::gnp(n, 0.6, &mut rng);
            for u in 0..n {
                for v in u + 1..n {
                    if !g.has_edge(u, v) {
                        assert_eq!(g.creates_k4(u, v).unwrap(), k4_through_bruteforce(&g, u, v));
                    }
                }
            }
        }
        let mut rng = ChaCha8Rng::seed_from_u64(99);
        let g = Graph::gnp(70, 0.45, &mut rng);
        for u in 0..70 {
            for v in u + 1..70 {
                assert_eq!(g.closes_k4(u, v), k4_through_bruteforce(&g, u, v));
            }
        }
    }

    #[test]
    fn k4_free_check() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for _ in 0..50 {
            let g = Graph::gnp(12, 0.45, &mut rng);
            assert_eq!(g.is_k4_free(), !has_k4_bruteforce(&g));
        }
        let mut g = Graph::gnp(30, 0.05, &mut rng);
        for (a, b) in [(3, 7), (3, 11), (3, 20), (7, 11), (7, 20), (11, 20)] {
            g.add_edge(a, b);
        }
        assert!(!g.is_k4_free());
    }

    #[test]
    fn open_edges() {
        let empty = Graph::new(6);
        for u in 0..6 {
            for v in u + 1..6 {
                assert!(is_open(&empty, &empty, EdgeId::encode(6, u, v)).unwrap());
            }
        }
        let m = Graph::complete_minus(4, &[(2, 3)]);
        let trav = m.clone();
        assert!(!is_open(&m, &trav, EdgeId::encode(4, 2, 3)).unwrap());
        assert!(matches!(
            is_open(&m, &trav, EdgeId::encode(4, 0, 1)),
            Err(Error::Domain(_))
        ));
        assert_eq!(open_pairs(&m, &trav).m(), 0);
        assert_eq!(open_pairs(&empty, &empty).m(), 15);
    }

    #[test]
    fn completions_trivial() {
        let m = Graph::complete_minus(4, &[(0, 1)]);
        let recs = enumerate_completions(&m, &m, EdgeId::encode(4, 0, 1)).unwrap();
        assert_eq!(recs.len(), 1);
        assert_eq!(recs[0].j, 0);
        assert_eq!(recs[0].vertices, [0, 1, 2, 3]);

        let n = 11;
        let e = Graph::new(n);
        let recs = enumerate_completions(&e, &e, EdgeId::encode(n, 3, 8)).unwrap();
        assert_eq!(recs.len(), (n - 2) * (n - 3) / 2);
        assert!(recs.iter().all(|r| r.j == 5));
        let open = open_pairs(&e, &e);
        let c = completion_counts(&e, &open, 3, 8);
        assert_eq!(c, [0, 0, 0, 0, 0, 36]);
    }

    #[test]
    fn spans_triangle_cases() {
        let g = Graph::from_edges(5, [(0, 1), (1, 2), (0, 2)]);
        assert!(g.spans_triangle(&[0, 1, 2, 3, 4]));
        assert!(!g.spans_triangle(&[0, 1]));
        assert!(!g.spans_triangle(&[0, 1, 3]));
    }

    #[test]
    fn edge_list_roundtrip() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let g = Graph::gnp(75, 0.1, &mut rng);
        let mut buf = Vec::new();
        g.write_edge_list(&mut buf).unwrap();
        let h = Graph::read_edge_list(&buf[..], Path::new("mem")).unwrap();
        assert_eq!(g, h);
        let bad = b"1 2\n";
        assert!(Graph::read_edge_list(&bad[..], Path::new("mem")).is_err());
    }

    #[test]
    fn class_dump_format() {
        let m = Graph::from_edges(3, [(0, 1)]);
        let trav = Graph::from_edges(3, [(0, 1), (1, 2)]);
        let mut buf = Vec::new();
        write_class_dump(&m, &trav, &mut buf).unwrap();
        assert_eq!(
            String::from_utf8(buf).unwrap(),
            "0 1 in_m\n0 2 not_traversed\n1 2 rejected\n"
        );
    }

    #[test]
    fn vertex_cap() {
        assert!(Graph::try_new(100, 50).is_err());
        assert!(Graph::try_new(50, 50).is_ok());
        assert!(check_vertex_count(MAX_VERTICES + 1, usize::MAX).is_err());
    }
}
