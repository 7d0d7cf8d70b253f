//! Counter-based deterministic random stream with labeled forking.
//!
//! The stream is a keyed finalizer applied to an incrementing counter, so the
//! i-th draw depends only on `(key, i)`. Forking hashes a text label into a
//! child key; identical `(seed, fork labels, call sequence)` always reproduce
//! identical outputs, and parallel consumers with distinct labels cannot
//! perturb each other.

use crate::error::{AcrError, Result};
use crate::Real;

const GOLDEN: u64 = 0x9E37_79B9_7F4A_7C15;

/// SplitMix64 finalizer: a bijective avalanche mix on 64 bits.
fn mix(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

fn hash_label(label: &str) -> u64 {
    // FNV-1a over the label bytes, then avalanched.
    let mut h: u64 = 0xCBF2_9CE4_8422_2325;
    for &b in label.as_bytes() {
        h ^= u64::from(b);
        h = h.wrapping_mul(0x0000_0100_0000_01B3);
    }
    mix(h)
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RandomStream {
    key: u64,
    counter: u64,
}

impl RandomStream {
    pub fn new(seed: u64) -> Self {
        Self {
            key: mix(seed.wrapping_add(GOLDEN)),
            counter: 0,
        }
    }

    /// Child stream derived from this stream's key and a label. Forking does
    /// not advance the parent, and the same label always yields the same
    /// child, so callers must use distinct labels for independent consumers.
    pub fn fork(&self, label: &str) -> Self {
        Self {
            key: mix(self.key ^ hash_label(label)),
            counter: 0,
        }
    }

    pub fn next_u64(&mut self) -> u64 {
        self.counter = self.counter.wrapping_add(1);
        mix(self.key.wrapping_add(self.counter.wrapping_mul(GOLDEN)))
    }

    /// Uniform integer in the inclusive range `[lo, hi]`, bias-free via
    /// rejection sampling.
    pub fn uniform_int(&mut self, lo: i64, hi: i64) -> Result<i64> {
        if lo > hi {
            return Err(AcrError::invalid_input(format!(
                "uniform_int range is empty: lo={lo} > hi={hi}"
            )));
        }
        let span = (hi as i128 - lo as i128 + 1) as u128;
        if span == 1 << 64 {
            return Ok(self.next_u64() as i64);
        }
        let span = span as u64;
        let zone = u64::MAX - (u64::MAX % span);
        loop {
            let draw = self.next_u64();
            if draw < zone {
                return Ok(lo.wrapping_add((draw % span) as i64));
            }
        }
    }

    pub fn uniform_usize(&mut self, lo: usize, hi: usize) -> Result<usize> {
        Ok(self.uniform_int(lo as i64, hi as i64)? as usize)
    }

    /// Uniform scalar in `[0, 1)` with 53 random mantissa bits.
    pub fn unit<T: Real>(&mut self) -> T {
        let u = (self.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64);
        crate::real(u)
    }

    /// Standard normal via Box-Muller; consumes exactly two draws.
    pub fn normal<T: Real>(&mut self) -> T {
        // First uniform is mapped into (0, 1] so the log stays finite.
        let u1 = ((self.next_u64() >> 11) + 1) as f64 / (1u64 << 53) as f64;
        let u2 = (self.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64);
        let z = (-2.0 * u1.ln()).sqrt() * (2.0 * std::f64::consts::PI * u2).cos();
        crate::real(z)
    }

    /// In-place Fisher-Yates shuffle.
    pub fn shuffle<X>(&mut self, items: &mut [X]) {
        for i in (1..items.len()).rev() {
            let j = self
                .uniform_int(0, i as i64)
                .expect("non-empty range")
                as usize;
            items.swap(i, j);
        }
    }

    /// `count` distinct indices from `[0, upper)` via a partial Fisher-Yates
    /// pass, returned in draw order.
    pub fn sample_distinct(&mut self, count: usize, upper: usize) -> Result<Vec<usize>> {
        if count > upper {
            return Err(AcrError::invalid_input(format!(
                "cannot sample {count} distinct indices from [0, {upper})"
            )));
        }
        let mut pool: Vec<usize> = (0..upper).collect();
        for t in 0..count {
            let j = self.uniform_usize(t, upper - 1)?;
            pool.swap(t, j);
        }
        pool.truncate(count);
        Ok(pool)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn degenerate_range() {
        let mut rng = RandomStream::new(7);
        assert_eq!(rng.uniform_int(5, 5).unwrap(), 5);
    }

    #[test]
    fn empty_range_is_error() {
        let mut rng = RandomStream::new(7);
        assert!(rng.uniform_int(3, 2).is_err());
    }

    #[test]
    fn same_seed_same_sequence() {
        let mut a = RandomStream::new(42);
        let mut b = RandomStream::new(42);
        for _ in 0..100 {
            assert_eq!(a.next_u64(), b.next_u64());
        }
        let mut a = a.fork("child");
        let mut b = b.fork("child");
        for _ in 0..100 {
            assert_eq!(a.uniform_int(0, 9).unwrap(), b.uniform_int(0, 9).unwrap());
        }
    }

    #[test]
    fn forked_labels_diverge() {
        let root = RandomStream::new(0);
        let mut a = root.fork("alpha");
        let mut b = root.fork("beta");
        let same = (0..32).filter(|_| a.next_u64() == b.next_u64()).count();
        assert_eq!(same, 0);
    }

    #[test]
    fn uniform_int_empirical_distribution() {
        // 1e5 draws over {0,1,2,3}: each frequency within 0.25 ± 0.01.
        let mut rng = RandomStream::new(123);
        let mut counts = [0usize; 4];
        let n = 100_000;
        for _ in 0..n {
            counts[rng.uniform_int(0, 3).unwrap() as usize] += 1;
        }
        for &c in &counts {
            let f = c as f64 / n as f64;
            assert!((f - 0.25).abs() < 0.01, "frequency {f} outside 0.25±0.01");
        }
        // Chi-square sanity: 3 degrees of freedom, 99.9% quantile ≈ 16.27.
        let expected = n as f64 / 4.0;
        let chi2: f64 = counts
            .iter()
            .map(|&c| (c as f64 - expected).powi(2) / expected)
            .sum();
        assert!(chi2 < 16.27, "chi-square statistic too large: {chi2}");
    }

    #[test]
    fn normal_moments() {
        let mut rng = RandomStream::new(9);
        let n = 100_000;
        let mut sum = 0.0;
        let mut sumsq = 0.0;
        for _ in 0..n {
            let z: f64 = rng.normal();
            sum += z;
            sumsq += z * z;
        }
        let mean = sum / n as f64;
        let var = sumsq / n as f64 - mean * mean;
        assert!(mean.abs() < 0.02, "mean {mean}");
        assert!((var - 1.0).abs() < 0.03, "variance {var}");
    }

    #[test]
    fn unit_range() {
        let mut rng = RandomStream::new(11);
        for _ in 0..1000 {
            let u: f64 = rng.unit();
            assert!((0.0..1.0).contains(&u));
        }
    }

    #[test]
    fn sample_distinct_is_distinct_and_in_range() {
        let mut rng = RandomStream::new(3);
        let picks = rng.sample_distinct(10, 25).unwrap();
        assert_eq!(picks.len(), 10);
        let mut sorted = picks.clone();
        sorted.sort_unstable();
        sorted.dedup();
        assert_eq!(sorted.len(), 10);
        assert!(picks.iter().all(|&i| i < 25));
        assert!(rng.sample_distinct(5, 4).is_err());
    }
}
