//! Survival probabilities on alternating trees.
//!
//! Even-depth nodes carry birthtimes in `[0, 1]`; odd-depth nodes group the
//! even grandchildren. An even node born at `t` survives unless one of its
//! odd children has every grandchild born before `t` and surviving. With
//! `P_g(t) = ∫₀ᵗ p_g` this gives
//!
//! ```text
//! p_ν(t) = ∏_{odd children o} (1 − ∏_{grandchildren g of o} P_g(t)).
//! ```
//!
//! For the infinite tree whose even nodes have `k` odd children of arity 5,
//! the root integral solves `P' = (1 − P⁵)^k`; rescaled by `(2k)^{1/5}` it
//! tends to Φ.

use std::collections::HashMap;
use std::io::{BufRead, Write};
use std::path::Path;

use rand::Rng;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::ode;
use crate::rng;
use crate::trajectory::solve_ode;

/// Default quadrature step on the birthtime axis.
pub const DEFAULT_GRID_STEP: f64 = 1e-3;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum NodeKind {
    Even,
    Odd,
}

#[derive(Clone, Debug)]
struct Node {
    id: u64,
    parent: Option<usize>,
    kind: NodeKind,
    arity: usize,
    children: Vec<usize>,
}

/// A validated alternating tree. Nodes are stored in topological order, so
/// the root is index 0 and every parent precedes its children.
#[derive(Clone, Debug)]
pub struct TreeSpec {
    nodes: Vec<Node>,
}

impl TreeSpec {
    /// Build from `(id, parent id, kind, arity)` rows in topological order.
    /// The arity of an even node is ignored.
    pub fn from_rows(rows: &[(u64, Option<u64>, NodeKind, usize)]) -> Result<TreeSpec> {
        let mut index: HashMap<u64, usize> = HashMap::with_capacity(rows.len());
        let mut nodes: Vec<Node> = Vec::with_capacity(rows.len());
        for &(id, parent, kind, arity) in rows {
            if index.contains_key(&id) {
                return Err(Error::Structure(format!("duplicate node id {id}")));
            }
            let parent = match parent {
                None => {
                    if !nodes.is_empty() {
                        return Err(Error::Structure(format!("node {id} is a second root")));
                    }
                    if kind != NodeKind::Even {
                        return Err(Error::Structure("the root must be even".into()));
                    }
                    None
                }
                Some(p) => {
                    let &pi = index.get(&p).ok_or_else(|| {
                        Error::Structure(format!("node {id} refers to unknown or later parent {p}"))
                    })?;
                    if nodes[pi].kind == kind {
                        return Err(Error::Structure(format!(
                            "node {id} has the same parity as its parent {p}"
                        )));
                    }
                    Some(pi)
                }
            };
            if nodes.is_empty() && parent.is_some() {
                return Err(Error::Structure("the first node must be the root".into()));
            }
            if kind == NodeKind::Odd && arity == 0 {
                return Err(Error::Structure(format!("odd node {id} has arity 0")));
            }
            let i = nodes.len();
            index.insert(id, i);
            nodes.push(Node {
                id,
                parent,
                kind,
                arity: if kind == NodeKind::Odd { arity } else { 0 },
                children: Vec::new(),
            });
            if let Some(pi) = parent {
                nodes[pi].children.push(i);
            }
        }
        if nodes.is_empty() {
            return Err(Error::Structure("empty tree".into()));
        }
        for nd in &nodes {
            if nd.kind == NodeKind::Odd && nd.children.len() != nd.arity {
                return Err(Error::Structure(format!(
                    "odd node {} declares arity {} but has {} children",
                    nd.id,
                    nd.arity,
                    nd.children.len()
                )));
            }
        }
        Ok(TreeSpec { nodes })
    }

    /// A single even node.
    pub fn leaf() -> TreeSpec {
        TreeSpec::from_rows(&[(0, None, NodeKind::Even, 0)]).unwrap()
    }

    /// Root with `k` odd children, each with one leaf grandchild.
    pub fn star(k: usize) -> TreeSpec {
        let mut rows = vec![(0, None, NodeKind::Even, 0)];
        for c in 0..k as u64 {
            rows.push((1 + 2 * c, Some(0), NodeKind::Odd, 1));
            rows.push((2 + 2 * c, Some(1 + 2 * c), NodeKind::Even, 0));
        }
        TreeSpec::from_rows(&rows).unwrap()
    }

    /// Complete tree: every even node above depth `2c` has `k` odd children
    /// of the given arity.
    pub fn regular(k: usize, arity: usize, c: usize) -> Result<TreeSpec> {
        if arity == 0 {
            return Err(Error::Structure("arity must be at least 1".into()));
        }
        let mut rows = vec![(0u64, None, NodeKind::Even, 0)];
        let mut frontier = vec![0u64];
        let mut next = 1u64;
        for _ in 0..c {
            let mut grand = Vec::new();
            for &e in &frontier {
                for _ in 0..k {
                    let o = next;
                    next += 1;
                    rows.push((o, Some(e), NodeKind::Odd, arity));
                    for _ in 0..arity {
                        rows.push((next, Some(o), NodeKind::Even, 0));
                        grand.push(next);
                        next += 1;
                    }
                }
            }
            frontier = grand;
        }
        TreeSpec::from_rows(&rows)
    }

    /// Random alternating tree with at most `max_nodes` nodes and depth at
    /// most `max_depth`, with odd-node arities jittered in `1..=max_arity`.
    pub fn random<R: Rng + ?Sized>(
        rng: &mut R,
        max_nodes: usize,
        max_depth: usize,
        max_arity: usize,
    ) -> TreeSpec {
        let max_arity = max_arity.max(1);
        let mut rows = vec![(0u64, None, NodeKind::Even, 0)];
        let mut queue = std::collections::VecDeque::from([(0u64, 0usize)]);
        let mut next = 1u64;
        while let Some((e, depth)) = queue.pop_front() {
            if depth + 2 > max_depth {
                continue;
            }
            let kids = rng.random_range(0..=3usize);
            for _ in 0..kids {
                let arity = rng.random_range(1..=max_arity);
                if rows.len() + 1 + arity > max_nodes {
                    break;
                }
                let o = next;
                next += 1;
                rows.push((o, Some(e), NodeKind::Odd, arity));
                for _ in 0..arity {
                    rows.push((next, Some(o), NodeKind::Even, 0));
                    queue.push_back((next, depth + 2));
                    next += 1;
                }
            }
        }
        TreeSpec::from_rows(&rows).unwrap()
    }

    /// Parse the line format `node <id> parent <id|root> kind even|odd arity <j>`.
    /// Blank lines and lines starting with `#` are skipped.
    pub fn parse<R: BufRead>(r: R, path: &Path) -> Result<TreeSpec> {
        let perr = |line: usize, msg: String| Error::Parse {
            path: path.to_path_buf(),
            line,
            msg,
        };
        let mut rows = Vec::new();
        for (ln, line) in r.lines().enumerate() {
            let line = line?;
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let tok: Vec<&str> = line.split_whitespace().collect();
            if tok.len() != 8
                || tok[0] != "node"
                || tok[2] != "parent"
                || tok[4] != "kind"
                || tok[6] != "arity"
            {
                return Err(perr(
                    ln + 1,
                    "expected `node <id> parent <id|root> kind even|odd arity <j>`".into(),
                ));
            }
            let id: u64 = tok[1]
                .parse()
                .map_err(|_| perr(ln + 1, format!("bad node id `{}`", tok[1])))?;
            let parent = match tok[3] {
                "root" => None,
                p => Some(
                    p.parse::<u64>()
                        .map_err(|_| perr(ln + 1, format!("bad parent `{p}`")))?,
                ),
            };
            let kind = match tok[5] {
                "even" => NodeKind::Even,
                "odd" => NodeKind::Odd,
                k => return Err(perr(ln + 1, format!("bad kind `{k}`"))),
            };
            let arity: usize = tok[7]
                .parse()
                .map_err(|_| perr(ln + 1, format!("bad arity `{}`", tok[7])))?;
            rows.push((id, parent, kind, arity));
        }
        TreeSpec::from_rows(&rows)
    }

    pub fn load(path: &Path) -> Result<TreeSpec> {
        let f = std::fs::File::open(path)?;
        TreeSpec::parse(std::io::BufReader::new(f), path)
    }

    pub fn write<W: Write>(&self, mut w: W) -> Result<()> {
        for nd in &self.nodes {
            let parent = match nd.parent {
                None => "root".to_string(),
                Some(p) => self.nodes[p].id.to_string(),
            };
            let kind = match nd.kind {
                NodeKind::Even => "even",
                NodeKind::Odd => "odd",
            };
            writeln!(
                w,
                "node {} parent {} kind {} arity {}",
                nd.id, parent, kind, nd.arity
            )?;
        }
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// Depth of the deepest node.
    pub fn depth(&self) -> usize {
        let mut d = vec![0usize; self.nodes.len()];
        for i in 1..self.nodes.len() {
            d[i] = d[self.nodes[i].parent.unwrap()] + 1;
        }
        d.into_iter().max().unwrap_or(0)
    }

    /// Reject trees deeper than `2c`.
    pub fn check_depth(&self, c: usize) -> Result<()> {
        let d = self.depth();
        if d > 2 * c {
            return Err(Error::Structure(format!(
                "depth {d} exceeds the cap {}",
                2 * c
            )));
        }
        Ok(())
    }
}

/// Uniform grid `t_k = k/N` on `[0, 1]` with `N = round(1/h)`.
fn grid(h: f64) -> Result<Vec<f64>> {
    if !(h > 0.0 && h <= 0.5) {
        return Err(Error::Domain(format!(
            "grid step must be in (0, 0.5], got {h}"
        )));
    }
    let n = (1.0 / h).round() as usize;
    Ok((0..=n).map(|k| k as f64 / n as f64).collect())
}

/// Cumulative trapezoid of `p` on a uniform grid of step `h`.
fn cumtrapz(p: &[f64], h: f64) -> Vec<f64> {
    let mut out = Vec::with_capacity(p.len());
    let mut acc = 0.0;
    out.push(0.0);
    for w in p.windows(2) {
        acc += 0.5 * h * (w[0] + w[1]);
        out.push(acc);
    }
    out
}

/// `p(t)` and `P(t) = ∫₀ᵗ p` on a uniform grid over `[0, 1]`.
#[derive(Clone, Debug)]
pub struct SurvivalCurve {
    pub t: Vec<f64>,
    pub p: Vec<f64>,
    pub big_p: Vec<f64>,
}

impl SurvivalCurve {
    pub fn step(&self) -> f64 {
        1.0 / (self.t.len() - 1) as f64
    }

    /// Linear interpolation of `(p, P)` at `t ∈ [0, 1]`.
    pub fn eval(&self, t: f64) -> Result<(f64, f64)> {
        if !(0.0..=1.0).contains(&t) {
            return Err(Error::Domain(format!("t = {t} outside [0, 1]")));
        }
        let last = self.t.len() - 1;
        let s = t * last as f64;
        let k = (s.floor() as usize).min(last - 1);
        let f = s - k as f64;
        let lerp = |v: &[f64]| v[k] + f * (v[k + 1] - v[k]);
        Ok((lerp(&self.p), lerp(&self.big_p)))
    }

    /// Structural properties every survival curve has, up to `tol`.
    pub fn check_invariants(&self, tol: f64) -> Result<()> {
        let fail = |m: String| Err(Error::Numeric(m));
        if (self.p[0] - 1.0).abs() > tol {
            return fail(format!("p(0) = {}", self.p[0]));
        }
        for k in 0..self.t.len() {
            if !(self.p[k] >= -tol && self.p[k] <= 1.0 + tol) {
                return fail(format!("p({}) = {} outside [0, 1]", self.t[k], self.p[k]));
            }
            if self.big_p[k] > self.t[k] + tol {
                return fail(format!("P({}) = {} exceeds t", self.t[k], self.big_p[k]));
            }
            if k > 0 {
                if self.p[k] > self.p[k - 1] + tol {
                    return fail(format!("p increases at t = {}", self.t[k]));
                }
                let d = self.big_p[k] - self.big_p[k - 1];
                if d < -tol || d > self.t[k] - self.t[k - 1] + tol {
                    return fail(format!(
                        "P not 1-Lipschitz and nondecreasing at t = {}",
                        self.t[k]
                    ));
                }
            }
        }
        Ok(())
    }

    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut wr = csv::Writer::from_writer(w);
        wr.write_record(["t", "p", "P"])?;
        for k in 0..self.t.len() {
            wr.write_record([
                self.t[k].to_string(),
                self.p[k].to_string(),
                self.big_p[k].to_string(),
            ])?;
        }
        wr.flush()?;
        Ok(())
    }
}

/// Root survival curve by a bottom-up pass with trapezoidal quadrature.
pub fn survival_dp(tree: &TreeSpec, grid_step: f64) -> Result<SurvivalCurve> {
    let t = grid(grid_step)?;
    let h = 1.0 / (t.len() - 1) as f64;
    let nodes = &tree.nodes;
    // Integrated curves of the even nodes, filled leaves-first.
    let mut big: Vec<Option<Vec<f64>>> = vec![None; nodes.len()];
    let mut root_p = None;
    for i in (0..nodes.len()).rev() {
        if nodes[i].kind != NodeKind::Even {
            continue;
        }
        let mut p = vec![1.0; t.len()];
        for &o in &nodes[i].children {
            let mut all = vec![1.0; t.len()];
            for &g in &nodes[o].children {
                let pg = big[g].take().expect("children are processed first");
                for (a, b) in all.iter_mut().zip(&pg) {
                    *a *= b;
                }
            }
            // the cumulative quadrature can overshoot 1 by an ulp
            for (a, b) in p.iter_mut().zip(&all) {
                *a *= (1.0 - b).max(0.0);
            }
        }
        if i == 0 {
            root_p = Some(p);
        } else {
            big[i] = Some(cumtrapz(&p, h));
        }
    }
    let p = root_p.expect("root is even");
    let big_p = cumtrapz(&p, h);
    Ok(SurvivalCurve { t, p, big_p })
}

#[derive(Clone, Copy, Debug, Serialize)]
pub struct McEstimate {
    pub mean: f64,
    pub se: f64,
    pub trials: u64,
}

/// Monte Carlo estimate of the root survival probability at birthtime `t`.
pub fn survival_mc(tree: &TreeSpec, t: f64, trials: u64, seed: u64) -> Result<McEstimate> {
    if trials == 0 {
        return Err(Error::Config("trials must be positive".into()));
    }
    if !(0.0..=1.0).contains(&t) {
        return Err(Error::Domain(format!("t = {t} outside [0, 1]")));
    }
    let nodes = &tree.nodes;
    let mut rng = rng::stream(seed, &[]);
    let mut birth = vec![0.0f64; nodes.len()];
    let mut alive = vec![false; nodes.len()];
    let mut hits = 0u64;
    for _ in 0..trials {
        birth[0] = t;
        for i in 1..nodes.len() {
            if nodes[i].kind == NodeKind::Even {
                birth[i] = rng.random::<f64>();
            }
        }
        for i in (0..nodes.len()).rev() {
            if nodes[i].kind != NodeKind::Even {
                continue;
            }
            let b = birth[i];
            alive[i] = !nodes[i]
                .children
                .iter()
                .any(|&o| nodes[o].children.iter().all(|&g| birth[g] < b && alive[g]));
        }
        hits += alive[0] as u64;
    }
    let mean = hits as f64 / trials as f64;
    Ok(McEstimate {
        mean,
        se: (mean * (1.0 - mean) / trials as f64).sqrt(),
        trials,
    })
}

/// `(1 − y/(2k))^k`, evaluated in log space.
#[inline]
fn thinned_power(y: f64, k: f64) -> f64 {
    (k * (-y / (2.0 * k)).ln_1p()).exp()
}

/// Fixed point of the infinite `(k, 5)` tree in rescaled units
/// `x = t (2k)^{1/5}`, `P̂(x) = (2k)^{1/5} P(t)`, alongside Φ and φ on the
/// same grid. Grid points past `t = 1` continue the ODE formally.
#[derive(Clone, Debug)]
pub struct T4Curve {
    pub k: f64,
    pub step: f64,
    pub x: Vec<f64>,
    pub p_hat: Vec<f64>,
    pub big_p_hat: Vec<f64>,
    pub phi: Vec<f64>,
    pub big_phi: Vec<f64>,
}

pub fn t4_fixed_point(k: f64, x_max: f64, h: f64) -> Result<T4Curve> {
    if !(k >= 1.0 && k.is_finite()) {
        return Err(Error::Domain(format!("k must be at least 1, got {k}")));
    }
    let table = solve_ode(x_max, h)?;
    let steps = table.len() - 1;
    let ys = ode::rk4(
        |_, y: &[f64; 1]| [thinned_power(y[0].powi(5), k)],
        [0.0],
        h,
        steps,
    )?;
    let big_p_hat: Vec<f64> = ys.iter().map(|y| y[0]).collect();
    let p_hat = big_p_hat
        .iter()
        .map(|&v| thinned_power(v.powi(5), k))
        .collect();
    let mut x = Vec::with_capacity(table.len());
    let mut phi = Vec::with_capacity(table.len());
    let mut big_phi = Vec::with_capacity(table.len());
    for (xi, bp, p) in table.rows() {
        x.push(xi);
        big_phi.push(bp);
        phi.push(p);
    }
    Ok(T4Curve {
        k,
        step: h,
        x,
        p_hat,
        big_p_hat,
        phi,
        big_phi,
    })
}

impl T4Curve {
    /// `sup |P̂ − Φ|` over grid points with `x ≤ x_max`.
    pub fn sup_error(&self, x_max: f64) -> f64 {
        self.x
            .iter()
            .zip(self.big_p_hat.iter().zip(&self.big_phi))
            .filter(|(x, _)| **x <= x_max + 1e-12)
            .map(|(_, (a, b))| (a - b).abs())
            .fold(0.0, f64::max)
    }

    /// `P̂` by linear interpolation.
    pub fn big_p_hat_at(&self, x: f64) -> Result<f64> {
        let last = self.x.len() - 1;
        if !(x >= 0.0 && x <= self.x[last] + 1e-12) {
            return Err(Error::Domain(format!(
                "x = {x} outside [0, {}]",
                self.x[last]
            )));
        }
        let s = x / self.step;
        let i = (s.floor() as usize).min(last - 1);
        let f = s - i as f64;
        Ok(self.big_p_hat[i] + f * (self.big_p_hat[i + 1] - self.big_p_hat[i]))
    }

    pub fn p_hat_at(&self, x: f64) -> Result<f64> {
        Ok(thinned_power(self.big_p_hat_at(x)?.powi(5), self.k))
    }

    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut wr = csv::Writer::from_writer(w);
        wr.write_record(["x", "p_hat", "P_hat", "phi", "Phi"])?;
        for i in 0..self.x.len() {
            wr.write_record([
                self.x[i].to_string(),
                self.p_hat[i].to_string(),
                self.big_p_hat[i].to_string(),
                self.phi[i].to_string(),
                self.big_phi[i].to_string(),
            ])?;
        }
        wr.flush()?;
        Ok(())
    }
}

/// Root curves of the depth-`2c` truncation of the regular `(k, arity)`
/// tree. All nodes on a level share one curve, so this costs `O(c / h)`
/// regardless of the tree size.
pub fn regular_truncation_dp(
    k: f64,
    arity: i32,
    c: usize,
    grid_step: f64,
) -> Result<SurvivalCurve> {
    let t = grid(grid_step)?;
    let h = 1.0 / (t.len() - 1) as f64;
    let mut big_p = t.clone();
    let mut p = vec![1.0; t.len()];
    for _ in 0..c {
        p = big_p
            .iter()
            .map(|&v| (k * (-v.powi(arity)).ln_1p()).exp())
            .collect();
        big_p = cumtrapz(&p, h);
    }
    Ok(SurvivalCurve { t, p, big_p })
}

#[derive(Clone, Copy, Debug, Serialize)]
pub struct TruncationRow {
    pub c: usize,
    pub x: f64,
    pub p_truncated: f64,
    pub p_limit: f64,
    pub error: f64,
}

/// Compare depth-`2c` truncations of the `(k, 5)` tree against the fixed
/// point at rescaled points `xs`.
pub fn truncation_study(
    k: f64,
    depths: &[usize],
    xs: &[f64],
    grid_step: f64,
) -> Result<Vec<TruncationRow>> {
    let scale = (2.0 * k).powf(0.2);
    let x_hi = xs.iter().copied().fold(0.0, f64::max);
    if x_hi / scale > 1.0 {
        return Err(Error::Domain(format!(
            "x = {x_hi} maps past t = 1 for k = {k}; need (2k)^(1/5) >= x"
        )));
    }
    let limit = t4_fixed_point(k, x_hi.max(grid_step), grid_step / 10.0)?;
    let mut rows = Vec::new();
    for &c in depths {
        let curve = regular_truncation_dp(k, 5, c, grid_step)?;
        for &x in xs {
            let (p, _) = curve.eval(x / scale)?;
            let lim = limit.p_hat_at(x)?;
            rows.push(TruncationRow {
                c,
                x,
                p_truncated: p,
                p_limit: lim,
                error: (p - lim).abs(),
            });
        }
    }
    Ok(rows)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn leaf_survives() {
        let c = survival_dp(&TreeSpec::leaf(), 1e-3).unwrap();
        assert!(c.p.iter().all(|&p| p == 1.0));
        assert_abs_diff_eq!(*c.big_p.last().unwrap(), 1.0, epsilon = 1e-12);
        let mc = survival_mc(&TreeSpec::leaf(), 0.3, 100, 1).unwrap();
        assert_eq!(mc.mean, 1.0);
        assert_eq!(mc.se, 0.0);
    }

    #[test]
    fn star_closed_form() {
        for k in [1usize, 3, 7] {
            let c = survival_dp(&TreeSpec::star(k), 1e-3).unwrap();
            for (t, p) in c.t.iter().zip(&c.p) {
                assert_abs_diff_eq!(*p, (1.0 - t).powi(k as i32), epsilon = 1e-12);
            }
            c.check_invariants(1e-5).unwrap();
        }
        let mc = survival_mc(&TreeSpec::star(3), 0.5, 200_000, 5).unwrap();
        assert!((mc.mean - 0.125).abs() <= 3.0 * mc.se, "{mc:?}");
    }

    #[test]
    fn trials_zero_rejected() {
        assert!(survival_mc(&TreeSpec::leaf(), 0.5, 0, 0).is_err());
        assert!(survival_mc(&TreeSpec::leaf(), 1.5, 10, 0).is_err());
    }

    #[test]
    fn depth_two_closed_form() {
        // root - odd - even - odd - leaf: the middle node has p = 1 - t,
        // P = t - t²/2, so the root has p(t) = 1 - P(t)
        let tree = TreeSpec::regular(1, 1, 2).unwrap();
        let c = survival_dp(&tree, 1e-3).unwrap();
        for (t, p) in c.t.iter().zip(&c.p) {
            assert_abs_diff_eq!(*p, 1.0 - (t - t * t / 2.0), epsilon = 1e-6);
        }
    }

    #[test]
    fn regular_tree_matches_level_dp() {
        let tree = TreeSpec::regular(2, 3, 2).unwrap();
        let a = survival_dp(&tree, 1e-3).unwrap();
        let b = regular_truncation_dp(2.0, 3, 2, 1e-3).unwrap();
        for (x, y) in a.p.iter().zip(&b.p) {
            assert_abs_diff_eq!(*x, *y, epsilon = 1e-12);
        }
    }

    #[test]
    fn malformed_trees_rejected() {
        use NodeKind::*;
        assert!(TreeSpec::from_rows(&[]).is_err());
        assert!(TreeSpec::from_rows(&[(0, None, Odd, 1)]).is_err());
        // leaf at odd depth
        assert!(TreeSpec::from_rows(&[(0, None, Even, 0), (1, Some(0), Odd, 1)]).is_err());
        // parity clash
        assert!(TreeSpec::from_rows(&[(0, None, Even, 0), (1, Some(0), Even, 0)]).is_err());
        // forward parent reference
        assert!(TreeSpec::from_rows(&[
            (0, None, Even, 0),
            (2, Some(1), Even, 0),
            (1, Some(0), Odd, 1)
        ])
        .is_err());
        assert!(TreeSpec::from_rows(&[(0, None, Even, 0), (0, Some(0), Odd, 1)]).is_err());
        assert!(TreeSpec::from_rows(&[(0, None, Even, 0), (1, None, Even, 0)]).is_err());
    }

    #[test]
    fn file_round_trip() {
        let mut rng = rng::stream(3, &[]);
        let tree = TreeSpec::random(&mut rng, 40, 6, 3);
        let mut buf = Vec::new();
        tree.write(&mut buf).unwrap();
        let back = TreeSpec::parse(&buf[..], Path::new("mem")).unwrap();
        assert_eq!(back.len(), tree.len());
        let a = survival_dp(&tree, 1e-2).unwrap();
        let b = survival_dp(&back, 1e-2).unwrap();
        assert_eq!(a.p, b.p);
        let bad = "node 0 parent root kind even arity 0\nnode 1 parent 0 kind weird arity 1\n";
        match TreeSpec::parse(bad.as_bytes(), Path::new("t.txt")) {
            Err(Error::Parse { line, .. }) => assert_eq!(line, 2),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn random_trees_respect_caps() {
        let mut rng = rng::stream(11, &[]);
        for _ in 0..50 {
            let t = TreeSpec::random(&mut rng, 40, 6, 3);
            assert!(t.len() <= 40);
            t.check_depth(3).unwrap();
            survival_dp(&t, 1e-2)
                .unwrap()
                .check_invariants(1e-3)
                .unwrap();
        }
    }

    #[test]
    fn t4_approaches_phi() {
        let e2 = t4_fixed_point(1e2, 3.0, 1e-3).unwrap().sup_error(3.0);
        let e4 = t4_fixed_point(1e4, 3.0, 1e-3).unwrap().sup_error(3.0);
        assert!(e4 < e2 && e4 < 1e-3, "{e2} {e4}");
    }

    #[test]
    fn truncation_brackets_limit() {
        let rows = truncation_study(1e3, &[1, 2, 3, 4, 5, 6], &[1.0], 1e-3).unwrap();
        let errs: Vec<f64> = rows.iter().map(|r| r.error).collect();
        assert!(errs.windows(2).all(|w| w[1] <= w[0] + 1e-9), "{errs:?}");
        // odd c under-estimates survival, even c over-estimates
        let d: Vec<f64> = rows.iter().map(|r| r.p_truncated - r.p_limit).collect();
        assert!(d[0] < 0.0 && d[1] > 0.0, "{d:?}");
    }
}
