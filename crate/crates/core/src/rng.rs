//! Deterministic seeding.
//!
//! Every random decision in the crate is a pure function of a key tuple.
//! Sequential streams (edge permutations, sampling) come from ChaCha8 seeded
//! by [`derive_seed`]; per-edge coin flips in the staged process use
//! [`keyed_u64`], a stateless hash of `(seed, round, edge, tag)`, so the
//! outcome for an edge does not depend on the order edges are visited in.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Master seed used when a configuration does not provide one.
pub const DEFAULT_MASTER_SEED: u64 = 0xC0FFEE;

const GOLDEN: u64 = 0x9E37_79B9_7F4A_7C15;

#[inline(always)]
fn fmix(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Hash an ordered tuple of words into one 64-bit value.
///
/// The tuple length and each word's position are absorbed, using the
/// SplitMix64 finalizer as the mixing step.
#[inline]
pub fn keyed(words: &[u64]) -> u64 {
    let mut h = fmix(GOLDEN ^ words.len() as u64);
    for (i, &w) in words.iter().enumerate() {
        h = fmix(h.wrapping_add(GOLDEN.wrapping_mul(i as u64 + 1)) ^ fmix(w.wrapping_add(GOLDEN)));
    }
    h
}

/// Seed of an independent stream identified by `(master, parts...)`.
pub fn derive_seed(master: u64, parts: &[u64]) -> u64 {
    let mut words = Vec::with_capacity(parts.len() + 1);
    words.push(master);
    words.extend_from_slice(parts);
    keyed(&words)
}

/// Sequential generator for the stream `(master, parts...)`.
pub fn stream(master: u64, parts: &[u64]) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(derive_seed(master, parts))
}

/// Stateless 64-bit draw for one `(seed, round, edge, tag)` key.
#[inline(always)]
pub fn keyed_u64(seed: u64, round: u64, edge: u64, tag: u64) -> u64 {
    RoundKey::new(seed, round).draw(edge, tag)
}

/// The `(seed, round)` prefix of a key, hashed once per round.
#[derive(Clone, Copy, Debug)]
pub struct RoundKey(u64);

impl RoundKey {
    #[inline(always)]
    pub fn new(seed: u64, round: u64) -> Self {
        RoundKey(fmix(
            fmix(seed ^ GOLDEN) ^ round.wrapping_mul(0xD1B5_4A32_D192_ED03),
        ))
    }

    /// Same value as [`keyed_u64`] for the full key.
    #[inline(always)]
    pub fn draw(self, edge: u64, tag: u64) -> u64 {
        fmix(self.0 ^ edge.wrapping_mul(0xAEF1_7502_108E_F2D9) ^ tag.rotate_left(32))
    }

    #[inline(always)]
    pub fn uniform(self, edge: u64, tag: u64) -> f64 {
        to_open_unit(self.draw(edge, tag))
    }
}

/// Uniform draw in the open interval (0, 1) for a key.
#[inline(always)]
pub fn keyed_uniform(seed: u64, round: u64, edge: u64, tag: u64) -> f64 {
    to_open_unit(keyed_u64(seed, round, edge, tag))
}

/// Map 64 random bits to (0, 1) using the top 52 bits, offset by half a step.
#[inline(always)]
pub fn to_open_unit(bits: u64) -> f64 {
    ((bits >> 12) as f64 + 0.5) * (1.0 / (1u64 << 52) as f64)
}

/// Integer threshold such that `keyed_u64(..) < threshold` happens with
/// probability `p` (up to 2^-64).
#[inline]
pub fn bernoulli_threshold(p: f64) -> Option<u64> {
    if p >= 1.0 {
        None
    } else if p <= 0.0 {
        Some(0)
    } else {
        Some((p * 18_446_744_073_709_551_616.0) as u64)
    }
}

/// Bernoulli decision against a threshold from [`bernoulli_threshold`];
/// `None` means probability one.
#[inline(always)]
pub fn accept(bits: u64, threshold: Option<u64>) -> bool {
    match threshold {
        None => true,
        Some(t) => bits < t,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn keyed_is_order_sensitive() {
        assert_ne!(keyed(&[1, 2]), keyed(&[2, 1]));
        assert_ne!(keyed(&[0]), keyed(&[0, 0]));
        assert_eq!(keyed(&[7, 8, 9]), keyed(&[7, 8, 9]));
    }

    #[test]
    fn keyed_uniform_in_open_interval() {
        for e in 0..10_000u64 {
            let u = keyed_uniform(3, 1, e, 2);
            assert!(u > 0.0 && u < 1.0);
        }
        assert!(to_open_unit(0) > 0.0);
        assert!(to_open_unit(u64::MAX) < 1.0);
    }

    #[test]
    fn keyed_uniform_mean_and_tags_differ() {
        let n = 200_000u64;
        let mean: f64 = (0..n).map(|e| keyed_uniform(11, 0, e, 0)).sum::<f64>() / n as f64;
        // sd of the mean is 1/sqrt(12 n) ~ 6.5e-4
        assert!((mean - 0.5).abs() < 4e-3, "mean {mean}");
        let same = (0..1000u64)
            .filter(|&e| keyed_u64(11, 0, e, 0) == keyed_u64(11, 0, e, 1))
            .count();
        assert_eq!(same, 0);
    }

    #[test]
    fn thresholds() {
        assert_eq!(bernoulli_threshold(1.0), None);
        assert_eq!(bernoulli_threshold(0.0), Some(0));
        assert!(accept(0, None));
        assert!(!accept(0, Some(0)));
        let t = bernoulli_threshold(0.25);
        let hits = (0..100_000u64)
            .filter(|&e| accept(keyed_u64(5, 0, e, 0), t))
            .count();
        assert!((hits as f64 / 1e5 - 0.25).abs() < 0.01);
    }
}
