//! Brute-force oracles shared by the oracle tests and the acceptance suite.
//! Each check returns how many instances it ran and how many disagreed.

#![allow(dead_code)]

use k4flab_core::graph::{classify, completion_counts, enumerate_completions, open_pairs};
use k4flab_core::greedy::partial_state;
use k4flab_core::ramsey::{self, Tripartition};
use k4flab_core::{EdgeClass, EdgeId, Graph};
use rand::rngs::StdRng;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};

#[derive(Clone, Copy, Debug, Default)]
pub struct Tally {
    pub instances: usize,
    pub mismatches: usize,
}

impl Tally {
    fn record(&mut self, ok: bool) {
        self.instances += 1;
        self.mismatches += !ok as usize;
    }
}

pub fn k4_through(g: &Graph, u: usize, v: usize) -> bool {
    let n = g.n();
    (0..n).any(|w| {
        w != u
            && w != v
            && g.has_edge(u, w)
            && g.has_edge(v, w)
            && (w + 1..n).any(|x| {
                x != u && x != v && g.has_edge(u, x) && g.has_edge(v, x) && g.has_edge(w, x)
            })
    })
}

pub fn has_k4(g: &Graph) -> bool {
    g.edges().any(|(u, v)| k4_through(g, u, v))
}

pub fn brute_open(m: &Graph, trav: &Graph, u: usize, v: usize) -> bool {
    !trav.has_edge(u, v) && !k4_through(m, u, v)
}

/// Random `(M, Trav)` states with `n ≤ max_n`, mixing partial greedy runs
/// with arbitrary K4-free `M` inside a random traversed superset.
pub fn states(count: usize, max_n: usize, seed: u64) -> Vec<(Graph, Graph)> {
    let mut rng = StdRng::seed_from_u64(seed);
    (0..count)
        .map(|i| {
            let n = rng.random_range(6..=max_n);
            if i % 2 == 0 {
                let pairs = (n * (n - 1) / 2) as u64;
                partial_state(n, rng.random(), rng.random_range(0..=pairs)).unwrap()
            } else {
                let p = rng.random_range(0.1..0.6);
                let mut m = Graph::new(n);
                let mut trav = Graph::new(n);
                for u in 0..n {
                    for v in u + 1..n {
                        if rng.random_bool(p) {
                            trav.add_edge(u, v);
                            if !m.closes_k4(u, v) && rng.random_bool(0.7) {
                                m.add_edge(u, v);
                            }
                        }
                    }
                }
                (m, trav)
            }
        })
        .collect()
}

/// `creates_k4` on every non-edge and `is_k4_free` of random graphs.
pub fn creates_k4_tally(instances: usize, seed: u64) -> Tally {
    let mut rng = StdRng::seed_from_u64(seed);
    let mut tally = Tally::default();
    for _ in 0..instances {
        let n = rng.random_range(4..=30);
        let g = Graph::gnp(n, rng.random_range(0.2..0.8), &mut rng);
        let mut ok = g.is_k4_free() == !has_k4(&g);
        for u in 0..n {
            for v in u + 1..n {
                if !g.has_edge(u, v) {
                    ok &= g.creates_k4(u, v).ok() == Some(k4_through(&g, u, v));
                }
            }
        }
        tally.record(ok);
    }
    tally
}

/// Open pairs, `enumerate_completions` and `completion_counts` for every
/// pair of each state.
pub fn completions_tally(instances: usize, seed: u64) -> Tally {
    let mut tally = Tally::default();
    for (m, trav) in states(instances, 30, seed) {
        let n = m.n();
        let open = open_pairs(&m, &trav);
        let mut ok = true;
        for u in 0..n {
            for v in u + 1..n {
                ok &= open.has_edge(u, v) == brute_open(&m, &trav, u, v);
                let f = EdgeId::encode(n, u, v);
                if trav.has_edge(u, v) {
                    ok &= enumerate_completions(&m, &trav, f).is_err();
                    continue;
                }
                let mut want = Vec::new();
                let mut hist = [0u64; 6];
                for w in 0..n {
                    for x in w + 1..n {
                        if [w, x].iter().any(|&y| y == u || y == v) {
                            continue;
                        }
                        let edges = [(u, w), (u, x), (v, w), (v, x), (w, x)];
                        let fits = edges.iter().all(|&(a, b)| {
                            m.has_edge(a, b) || brute_open(&m, &trav, a.min(b), a.max(b))
                        });
                        if fits {
                            let j = edges.iter().filter(|&&(a, b)| !m.has_edge(a, b)).count();
                            hist[j] += 1;
                            want.push(([u, v, w, x], j as u8));
                        }
                    }
                }
                let Ok(records) = enumerate_completions(&m, &trav, f) else {
                    ok = false;
                    continue;
                };
                for r in &records {
                    for ((a, b), c) in r.edges().into_iter().zip(r.classes) {
                        ok &= c == classify(&m, &trav, a.min(b), a.max(b))
                            && c != EdgeClass::Rejected;
                    }
                }
                let got: Vec<_> = records.into_iter().map(|r| (r.vertices, r.j)).collect();
                ok &= got == want;
                ok &= completion_counts(&m, &open, u, v) == hist;
            }
        }
        tally.record(ok);
    }
    tally
}

pub fn cross_triangles(tp: &Tripartition) -> Vec<[usize; 3]> {
    let [a, b, c] = &tp.parts;
    let mut out = Vec::new();
    for &x in a {
        for &y in b {
            for &z in c {
                let mut t = [x, y, z];
                t.sort_unstable();
                out.push(t);
            }
        }
    }
    out
}

pub fn random_tripartition(n: usize, rng: &mut StdRng) -> Tripartition {
    let size = rng.random_range(3..=n);
    let mut vs: Vec<usize> = (0..n).collect();
    vs.shuffle(rng);
    Tripartition::balanced_random(&vs[..size], rng)
}

pub fn y_tally(instances: usize, seed: u64) -> Tally {
    let mut rng = StdRng::seed_from_u64(seed);
    let mut tally = Tally::default();
    for (m, trav) in states(instances, 30, seed ^ 1) {
        let tp = random_tripartition(m.n(), &mut rng);
        let mut want = [0u64; 4];
        for t in cross_triangles(&tp) {
            let edges = [(t[0], t[1]), (t[0], t[2]), (t[1], t[2])];
            if edges
                .iter()
                .any(|&(a, b)| classify(&m, &trav, a, b) == EdgeClass::Rejected)
            {
                continue;
            }
            let mut union = m.clone();
            let mut j = 0;
            for &(a, b) in &edges {
                j += union.add_edge(a, b) as usize;
            }
            if !has_k4(&union) {
                want[j] += 1;
            }
        }
        let mut ok = ramsey::count_y_all(&m, &trav, &tp) == want;
        for (j, &w) in want.iter().enumerate() {
            ok &= ramsey::count_y(&m, &trav, &tp, j).ok() == Some(w);
        }
        tally.record(ok);
    }
    tally
}

pub fn z_tally(instances: usize, seed: u64) -> Tally {
    let mut rng = StdRng::seed_from_u64(seed);
    let mut tally = Tally::default();
    for (m, trav) in states(instances, 30, seed ^ 1) {
        let n = m.n();
        let tp = random_tripartition(n, &mut rng);
        let r = tp.vertices();
        let min_shared = rng.random_range(2..=4);
        let mut want = 0;
        for t in cross_triangles(&tp) {
            let edges = [(t[0], t[1]), (t[0], t[2]), (t[1], t[2])];
            let classes: Vec<_> = edges
                .iter()
                .map(|&(a, b)| classify(&m, &trav, a, b))
                .collect();
            let in_m = classes.iter().filter(|&&c| c == EdgeClass::InM).count();
            let Some(pos) = classes.iter().position(|&c| c == EdgeClass::NotTraversed) else {
                continue;
            };
            if in_m != 2 {
                continue;
            }
            let (u, v) = edges[pos];
            let hit = (0..n).any(|w| {
                (w + 1..n).any(|x| {
                    let quad = [u, v, w, x];
                    ![u, v].contains(&w)
                        && ![u, v].contains(&x)
                        && [(u, w), (u, x), (v, w), (v, x), (w, x)]
                            .iter()
                            .all(|&(a, b)| m.has_edge(a, b))
                        && quad.iter().filter(|q| r.contains(q)).count() >= min_shared
                })
            });
            want += hit as u64;
        }
        tally.record(ramsey::count_z(&m, &trav, &tp, min_shared) == want);
    }
    tally
}

/// Exact f₃ against a scan of all vertex subsets, `n ≤ 20`.
pub fn f3_tally(instances: usize, seed: u64) -> Tally {
    let mut rng = StdRng::seed_from_u64(seed);
    let mut tally = Tally::default();
    for i in 0..instances {
        let n = rng.random_range(3..=20);
        let g = if i % 3 == 0 {
            partial_state(n, rng.random(), u64::MAX).unwrap().0
        } else {
            Graph::gnp(n, rng.random_range(0.2..0.9), &mut rng)
        };
        let want = ramsey::brute_force_f3(&g);
        let ok = match ramsey::exact_f3(&g, ramsey::DEFAULT_EXACT_CAP, ramsey::DEFAULT_EXACT_BUDGET)
        {
            Ok(r) => r.exact && r.size() == want && !g.spans_triangle(&r.vertices),
            Err(_) => false,
        };
        tally.record(ok);
    }
    tally
}
