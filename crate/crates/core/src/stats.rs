//! Small statistical helpers for ensemble comparisons.

use serde::Serialize;

use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, Serialize)]
pub struct KsResult {
    /// Supremum distance between the two empirical CDFs.
    pub d: f64,
    /// Asymptotic p-value.
    pub p_value: f64,
}

/// Two-sample Kolmogorov–Smirnov test. Ties across samples are stepped
/// together, so discrete data gives a conservative p-value.
pub fn ks_two_sample(a: &[f64], b: &[f64]) -> Result<KsResult> {
    if a.is_empty() || b.is_empty() {
        return Err(Error::Precondition(
            "KS test needs two nonempty samples".into(),
        ));
    }
    if a.iter().chain(b).any(|x| x.is_nan()) {
        return Err(Error::Numeric("NaN in KS sample".into()));
    }
    let mut a = a.to_vec();
    let mut b = b.to_vec();
    a.sort_by(f64::total_cmp);
    b.sort_by(f64::total_cmp);
    let (na, nb) = (a.len(), b.len());
    let (mut i, mut j) = (0, 0);
    let mut d = 0.0f64;
    while i < na && j < nb {
        let x = a[i].min(b[j]);
        while i < na && a[i] <= x {
            i += 1;
        }
        while j < nb && b[j] <= x {
            j += 1;
        }
        d = d.max((i as f64 / na as f64 - j as f64 / nb as f64).abs());
    }
    let ne = (na * nb) as f64 / (na + nb) as f64;
    let lambda = (ne.sqrt() + 0.12 + 0.11 / ne.sqrt()) * d;
    Ok(KsResult {
        d,
        p_value: kolmogorov_q(lambda),
    })
}

/// Survival function of the Kolmogorov distribution,
/// `Q(λ) = 2 Σ_{k≥1} (−1)^{k−1} exp(−2k²λ²)`.
pub fn kolmogorov_q(lambda: f64) -> f64 {
    if lambda < 1e-3 {
        return 1.0;
    }
    let mut sum = 0.0;
    let mut sign = 1.0;
    for k in 1..=200 {
        let kf = k as f64;
        let term = (-2.0 * kf * kf * lambda * lambda).exp();
        sum += sign * term;
        if term < 1e-16 * sum.abs() {
            break;
        }
        sign = -sign;
    }
    (2.0 * sum).clamp(0.0, 1.0)
}

/// Per-bin z-scores of observed multinomial counts against exact bin
/// probabilities.
pub fn multinomial_z(counts: &[u64], probs: &[f64]) -> Result<Vec<f64>> {
    if counts.len() != probs.len() {
        return Err(Error::Precondition(
            "counts and probabilities differ in length".into(),
        ));
    }
    let total: u64 = counts.iter().sum();
    let t = total as f64;
    Ok(counts
        .iter()
        .zip(probs)
        .map(|(&c, &p)| {
            let sd = (t * p * (1.0 - p)).sqrt();
            let diff = c as f64 - t * p;
            if sd == 0.0 {
                if diff == 0.0 {
                    0.0
                } else {
                    f64::INFINITY
                }
            } else {
                diff / sd
            }
        })
        .collect())
}

/// Mean and sample standard deviation.
pub fn mean_sd(xs: &[f64]) -> (f64, f64) {
    let n = xs.len();
    if n == 0 {
        return (f64::NAN, f64::NAN);
    }
    let mean = xs.iter().sum::<f64>() / n as f64;
    if n == 1 {
        return (mean, 0.0);
    }
    let var = xs.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / (n - 1) as f64;
    (mean, var.sqrt())
}

/// Ordinary least squares `y = a + b x`; returns `(a, b)`.
pub fn linear_fit(x: &[f64], y: &[f64]) -> Result<(f64, f64)> {
    if x.len() != y.len() || x.len() < 2 {
        return Err(Error::Precondition(
            "linear fit needs at least two paired points".into(),
        ));
    }
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxx: f64 = x.iter().map(|v| (v - mx) * (v - mx)).sum();
    if sxx == 0.0 {
        return Err(Error::Precondition(
            "linear fit needs distinct abscissae".into(),
        ));
    }
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let b = sxy / sxx;
    Ok((my - b * mx, b))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;

    #[test]
    fn kolmogorov_reference_values() {
        // Q(1.36) ≈ 0.0494, Q(1.63) ≈ 0.0098
        assert!((kolmogorov_q(1.36) - 0.04945).abs() < 2e-4);
        assert!((kolmogorov_q(1.628) - 0.0100).abs() < 2e-4);
        assert_eq!(kolmogorov_q(0.0), 1.0);
    }

    #[test]
    fn ks_identical_and_shifted() {
        let a: Vec<f64> = (0..1000).map(|i| i as f64).collect();
        let r = ks_two_sample(&a, &a).unwrap();
        assert_eq!(r.d, 0.0);
        assert_eq!(r.p_value, 1.0);
        let b: Vec<f64> = a.iter().map(|x| x + 200.0).collect();
        let r = ks_two_sample(&a, &b).unwrap();
        assert!((r.d - 0.2).abs() < 1e-12);
        assert!(r.p_value < 1e-10);
    }

    #[test]
    fn ks_same_distribution_rarely_rejects() {
        let mut rng = crate::rng::stream(7, &[]);
        let mut rejections = 0;
        for _ in 0..200 {
            let a: Vec<f64> = (0..300).map(|_| rng.random_range(0..20) as f64).collect();
            let b: Vec<f64> = (0..300).map(|_| rng.random_range(0..20) as f64).collect();
            if ks_two_sample(&a, &b).unwrap().p_value < 0.05 {
                rejections += 1;
            }
        }
        assert!(rejections <= 20, "{rejections}");
    }

    #[test]
    fn ks_ties_across_samples() {
        let r = ks_two_sample(&[1.0, 1.0, 2.0], &[1.0, 2.0, 2.0]).unwrap();
        assert!((r.d - 1.0 / 3.0).abs() < 1e-12);
    }

    #[test]
    fn fits() {
        let x = [1.0, 2.0, 3.0, 4.0];
        let y: Vec<f64> = x.iter().map(|v| 2.0 - 0.5 * v).collect();
        let (a, b) = linear_fit(&x, &y).unwrap();
        assert!((a - 2.0).abs() < 1e-12 && (b + 0.5).abs() < 1e-12);
        let (m, s) = mean_sd(&[1.0, 3.0]);
        assert_eq!(m, 2.0);
        assert!((s - 2f64.sqrt()).abs() < 1e-12);
        let z = multinomial_z(&[10, 90], &[0.1, 0.9]).unwrap();
        assert_eq!(z, vec![0.0, 0.0]);
    }
}
