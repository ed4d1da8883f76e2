//! Trajectory functions Φ, φ and the closed-form quantities built on them.
//!
//! Φ solves `Φ' = φ = exp(-Φ⁵/2)` with `Φ(0) = 0`. The predicted edge count
//! after scaled time `x` is `0.5 n^{8/5} Φ(x)` and the predicted number of
//! open pairs is `0.5 n² φ(x)`.

use std::io::Write;
use std::path::Path;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::ode;

/// Default integration step.
pub const DEFAULT_STEP: f64 = 1e-3;

/// Binomial coefficient as a float; exact for the small arguments used here.
pub fn binom(n: u64, k: u64) -> f64 {
    if k > n {
        return 0.0;
    }
    let k = k.min(n - k);
    (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
}

#[inline]
fn rhs(_: f64, y: &[f64; 2]) -> [f64; 2] {
    let p4 = y[0].powi(4);
    [y[1], -2.5 * p4 * y[1] * y[1]]
}

/// Φ and φ sampled on a uniform grid over `[0, x_max]`.
///
/// Both functions are integrated as a coupled system, so the identity
/// `φ = exp(-Φ⁵/2)` holds only up to integration error and can be checked.
#[derive(Clone, Debug)]
pub struct TrajectoryTable {
    step: f64,
    big_phi: Vec<f64>,
    phi: Vec<f64>,
}

/// Integrate Φ and φ with fixed-step RK4 on `[0, x_max]`.
///
/// The last grid point is `ceil(x_max / h) * h` when `h` does not divide
/// `x_max`.
pub fn solve_ode(x_max: f64, h: f64) -> Result<TrajectoryTable> {
    if !(x_max > 0.0 && x_max.is_finite()) {
        return Err(Error::Domain(format!(
            "x_max must be positive and finite, got {x_max}"
        )));
    }
    if !(h > 0.0 && h.is_finite()) || h > x_max {
        return Err(Error::Domain(format!(
            "step must be in (0, x_max], got {h}"
        )));
    }
    let ratio = x_max / h;
    let steps = if (ratio - ratio.round()).abs() < 1e-9 * ratio.max(1.0) {
        ratio.round() as usize
    } else {
        ratio.ceil() as usize
    };
    let ys = ode::rk4(rhs, [0.0, 1.0], h, steps)?;
    let (big_phi, phi) = ys.into_iter().map(|y| (y[0], y[1])).unzip();
    Ok(TrajectoryTable {
        step: h,
        big_phi,
        phi,
    })
}

impl TrajectoryTable {
    pub fn step(&self) -> f64 {
        self.step
    }

    pub fn x_max(&self) -> f64 {
        (self.len() - 1) as f64 * self.step
    }

    pub fn len(&self) -> usize {
        self.big_phi.len()
    }

    pub fn is_empty(&self) -> bool {
        self.big_phi.is_empty()
    }

    pub fn x(&self, k: usize) -> f64 {
        k as f64 * self.step
    }

    /// Φ at grid point `k`.
    pub fn big_phi_at(&self, k: usize) -> f64 {
        self.big_phi[k]
    }

    /// φ at grid point `k`.
    pub fn phi_at(&self, k: usize) -> f64 {
        self.phi[k]
    }

    /// Grid rows `(x, Φ, φ)`.
    pub fn rows(&self) -> impl Iterator<Item = (f64, f64, f64)> + '_ {
        (0..self.len()).map(move |k| (self.x(k), self.big_phi[k], self.phi[k]))
    }

    /// `(Φ(x), φ(x))` by cubic Hermite interpolation between grid points,
    /// using the ODE for the derivatives. No extrapolation.
    pub fn eval(&self, x: f64) -> Result<(f64, f64)> {
        let xm = self.x_max();
        if !(x >= 0.0 && x <= xm * (1.0 + 1e-12)) {
            return Err(Error::Domain(format!(
                "x = {x} outside the table domain [0, {xm}]"
            )));
        }
        let s = x / self.step;
        let k = (s.floor() as usize).min(self.len() - 1);
        let frac = s - k as f64;
        if frac == 0.0 || k + 1 == self.len() {
            return Ok((self.big_phi[k], self.phi[k]));
        }
        let (y0, y1) = (
            [self.big_phi[k], self.phi[k]],
            [self.big_phi[k + 1], self.phi[k + 1]],
        );
        let (d0, d1) = (rhs(0.0, &y0), rhs(0.0, &y1));
        let h = self.step;
        let t = frac;
        let h00 = 2.0 * t * t * t - 3.0 * t * t + 1.0;
        let h10 = t * t * t - 2.0 * t * t + t;
        let h01 = -2.0 * t * t * t + 3.0 * t * t;
        let h11 = t * t * t - t * t;
        let interp = |i: usize| h00 * y0[i] + h10 * h * d0[i] + h01 * y1[i] + h11 * h * d1[i];
        Ok((interp(0), interp(1)))
    }

    pub fn big_phi(&self, x: f64) -> Result<f64> {
        self.eval(x).map(|v| v.0)
    }

    pub fn phi(&self, x: f64) -> Result<f64> {
        self.eval(x).map(|v| v.1)
    }

    /// CSV with columns `x,phi_upper,phi_lower` (Φ then φ).
    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut wr = csv::Writer::from_writer(w);
        wr.write_record(["x", "phi_upper", "phi_lower"])?;
        for (x, bp, p) in self.rows() {
            wr.write_record([format!("{x}"), format!("{bp:.17e}"), format!("{p:.17e}")])?;
        }
        wr.flush()?;
        Ok(())
    }

    pub fn save_csv(&self, path: &Path) -> Result<()> {
        let f = std::fs::File::create(path)?;
        self.write_csv(std::io::BufWriter::new(f))
    }
}

/// `C(n,2) C(5,j) (Φ / n^{2/5})^{5-j} φ^j`.
pub fn x_from_values(n: u64, j: u32, big_phi: f64, phi: f64) -> f64 {
    let nf = n as f64;
    binom(n, 2)
        * binom(5, j as u64)
        * (big_phi / nf.powf(0.4)).powi(5 - j as i32)
        * phi.powi(j as i32)
}

/// `t C(3,j) (Φ / n^{2/5})^{3-j} φ^j`.
pub fn y_from_values(n: u64, j: u32, t: f64, big_phi: f64, phi: f64) -> f64 {
    let nf = n as f64;
    t * binom(3, j as u64) * (big_phi / nf.powf(0.4)).powi(3 - j as i32) * phi.powi(j as i32)
}

/// Predicted number of open pairs once `m` edges have been accepted:
/// `0.5 n² exp(-16 (m n^{-8/5})⁵)`.
pub fn bohman_open(n: u64, m: f64) -> f64 {
    let nf = n as f64;
    let r = m * nf.powf(-1.6);
    0.5 * nf * nf * (-16.0 * r.powi(5)).exp()
}

/// Predicted near-completion count with `j` untraversed edges once `m` edges
/// have been accepted:
/// `n^{2j/5} 2^{4-j} C(5,j) (m n^{-8/5})^{5-j} exp(-16 j (m n^{-8/5})⁵)`.
pub fn bohman_x(n: u64, m: f64, j: u32) -> f64 {
    let nf = n as f64;
    let r = m * nf.powf(-1.6);
    nf.powf(0.4 * j as f64)
        * 2f64.powi(4 - j as i32)
        * binom(5, j as u64)
        * r.powi(5 - j as i32)
        * (-16.0 * j as f64 * r.powi(5)).exp()
}

/// Round-indexed quantities for a fixed `(n, ε1, ε2)`: the scaled time of
/// round `i` is `i n^{-ε1}`.
#[derive(Clone, Copy, Debug)]
pub struct TrajectoryQuantities<'a> {
    pub n: u64,
    pub eps1: f64,
    pub eps2: f64,
    pub table: &'a TrajectoryTable,
}

/// Snapshot of every quantity for one round, for reports.
#[derive(Clone, Debug, Serialize)]
pub struct RoundQuantities {
    pub i: u64,
    pub x: f64,
    pub big_phi: f64,
    pub phi: f64,
    pub x_ij: [f64; 6],
    pub z_ij: [f64; 6],
    pub gamma: f64,
    pub big_gamma: f64,
}

impl<'a> TrajectoryQuantities<'a> {
    pub fn new(n: u64, eps1: f64, eps2: f64, table: &'a TrajectoryTable) -> Self {
        TrajectoryQuantities {
            n,
            eps1,
            eps2,
            table,
        }
    }

    fn nf(&self) -> f64 {
        self.n as f64
    }

    /// Scaled time `i n^{-ε1}`.
    pub fn time(&self, i: u64) -> f64 {
        i as f64 * self.nf().powf(-self.eps1)
    }

    pub fn values(&self, i: u64) -> Result<(f64, f64)> {
        self.table.eval(self.time(i))
    }

    pub fn x_ij(&self, i: u64, j: u32) -> Result<f64> {
        if j > 5 {
            return Err(Error::Domain(format!("j = {j} outside 0..=5")));
        }
        let (bp, p) = self.values(i)?;
        Ok(x_from_values(self.n, j, bp, p))
    }

    pub fn y_ijt(&self, i: u64, j: u32, t: f64) -> Result<f64> {
        if j > 3 {
            return Err(Error::Domain(format!("j = {j} outside 0..=3")));
        }
        let (bp, p) = self.values(i)?;
        Ok(y_from_values(self.n, j, t, bp, p))
    }

    /// `n^{(ε2 - 2/5) j} x_{i,j}`.
    pub fn z_ij(&self, i: u64, j: u32) -> Result<f64> {
        Ok(self.nf().powf((self.eps2 - 0.4) * j as f64) * self.x_ij(i, j)?)
    }

    /// Exponent `S` with `1 + γ_i = 2 e^S − 1`:
    /// `S = −6000 Σ_j z_{i,j} ln(1 − 2 n^{−(ε1+ε2) j})`.
    pub fn gamma_exponent(&self, i: u64) -> Result<f64> {
        let base = 2.0 * self.nf().powf(-(self.eps1 + self.eps2));
        if !(base < 1.0) {
            return Err(Error::Domain(format!(
                "2 n^(-eps1-eps2) = {base} >= 1; gamma is undefined"
            )));
        }
        let mut s = 0.0;
        for j in 1..=5u32 {
            let d = 2.0 * self.nf().powf(-(self.eps1 + self.eps2) * j as f64);
            s += -6000.0 * self.z_ij(i, j)? * (-d).ln_1p();
        }
        Ok(s)
    }

    /// `γ_i = 2 ∏_j (1 − 2 n^{−ε1 j − ε2 j})^{−6000 z_{i,j}} − 2`; may be
    /// `+inf` when the product overflows.
    pub fn gamma(&self, i: u64) -> Result<f64> {
        Ok(2.0 * self.gamma_exponent(i)?.exp_m1())
    }

    /// `ln(1 + γ_i)`, finite even when `γ_i` overflows.
    pub fn ln_one_plus_gamma(&self, i: u64) -> Result<f64> {
        let s = self.gamma_exponent(i)?;
        Ok(s + (2.0 - (-s).exp()).ln())
    }

    /// `ln Γ_i` with `Γ_0 = n^{−ε1}` and `Γ_i = Γ_{i−1} (1 + γ_{i−1})`.
    pub fn ln_big_gamma(&self, i: u64) -> Result<f64> {
        let mut acc = -self.eps1 * self.nf().ln();
        for k in 0..i {
            acc += self.ln_one_plus_gamma(k)?;
        }
        Ok(acc)
    }

    pub fn big_gamma(&self, i: u64) -> Result<f64> {
        Ok(self.ln_big_gamma(i)?.exp())
    }

    /// `Γ_0, …, Γ_last` in one pass.
    pub fn big_gammas(&self, last: u64) -> Result<Vec<f64>> {
        let mut out = Vec::with_capacity(last as usize + 1);
        let mut acc = -self.eps1 * self.nf().ln();
        for i in 0..=last {
            out.push(acc.exp());
            if i < last {
                acc += self.ln_one_plus_gamma(i)?;
            }
        }
        Ok(out)
    }

    pub fn round(&self, i: u64) -> Result<RoundQuantities> {
        let (bp, p) = self.values(i)?;
        let mut x_ij = [0.0; 6];
        let mut z_ij = [0.0; 6];
        for j in 0..=5u32 {
            x_ij[j as usize] = x_from_values(self.n, j, bp, p);
            z_ij[j as usize] = self.z_ij(i, j)?;
        }
        Ok(RoundQuantities {
            i,
            x: self.time(i),
            big_phi: bp,
            phi: p,
            x_ij,
            z_ij,
            gamma: self.gamma(i)?,
            big_gamma: self.big_gamma(i)?,
        })
    }
}
