//! Configuration and the per-level geometry.

use crate::periods::weight::WeightKind;
use crate::sketch::{K_MAX, N_MAX};

/// Which per-level pipeline may produce results.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum PathChoice {
    /// Non-periodic result unless it gave up, then the periodic one.
    #[default]
    Auto,
    NonPeriodic,
    /// Periodic result wherever that pipeline completes, else the non-periodic one.
    Periodic,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct StreamConfig {
    pub n: u64,
    pub k: usize,
    pub delta: u64,
    pub seed: u64,
    pub weight: WeightKind,
    pub retry_limit: u32,
    /// Run-length compression of matcher queues above `576 k` candidates.
    pub compression: bool,
    /// Replaces the table capacity `576 k`.
    pub capacity: Option<usize>,
    pub path: PathChoice,
    /// Hand inputs with `n <= 64 (k + 1)` to the quadratic oracle.
    pub small_input_oracle: bool,
    /// Track live bytes and per-character time.
    pub instrument: bool,
}

impl StreamConfig {
    pub fn new(n: u64, k: usize) -> StreamConfig {
        StreamConfig {
            n,
            k,
            delta: 0,
            seed: 0,
            weight: WeightKind::Zero,
            retry_limit: 3,
            compression: false,
            capacity: None,
            path: PathChoice::Auto,
            small_input_oracle: true,
            instrument: false,
        }
    }

    pub fn with_delta(mut self, delta: u64) -> Self {
        self.delta = delta;
        self
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn with_weight(mut self, weight: WeightKind) -> Self {
        self.weight = weight;
        self
    }

    pub fn validate(&self) -> Result<(), String> {
        if self.n == 0 || self.n > N_MAX {
            return Err(format!("n must lie in [1..{N_MAX}]"));
        }
        if 8 * self.k.max(1) > K_MAX {
            return Err(format!("k must be at most {}", K_MAX / 8));
        }
        if self.delta > self.n - self.n / 2 {
            return Err(format!("delta must be at most n - floor(n/2) = {}", self.n - self.n / 2));
        }
        Ok(())
    }

    /// Structural constant: the periodic machinery needs at least one mismatch.
    pub fn kk(&self) -> usize {
        self.k.max(1)
    }

    pub fn capacity(&self) -> usize {
        self.capacity.unwrap_or(576 * self.kk())
    }

    /// Last reported period.
    pub fn last_period(&self) -> u64 {
        self.n / 2 + self.delta
    }
}

/// `floor(n / 1.5^j)`.
pub fn ell(n: u64, j: u32) -> u64 {
    let mut num = n as u128;
    let mut den = 1u128;
    for _ in 0..j {
        num *= 2;
        den *= 3;
        if num / den == 0 {
            return 0;
        }
    }
    (num / den) as u64
}

/// Number of levels: smallest `J` with `1.5^J >= n`.
pub fn level_count(n: u64) -> u32 {
    let mut j = 0;
    let (mut num, mut den) = (1u128, 1u128);
    while num < den * n as u128 {
        num *= 3;
        den *= 2;
        j += 1;
    }
    j
}

/// Geometry of level `j`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct LevelPlan {
    pub j: u32,
    pub ell: u64,
    pub ell_next: u64,
    /// Candidate periods, after clipping to `[2..h-1]`; empty when `lo > hi`.
    pub lo: u64,
    pub hi: u64,
    /// Last text position any level-`j` window touches.
    pub text_end: u64,
}

impl LevelPlan {
    pub fn is_empty(&self) -> bool {
        self.lo > self.hi
    }

    /// Raw interval `[h - ell_j .. h - ell_{j+1} - 1]` before clipping.
    pub fn raw_interval(n: u64, j: u32) -> (i64, i64) {
        let h = (n / 2) as i64;
        (h - ell(n, j) as i64, h - ell(n, j + 1) as i64 - 1)
    }
}

/// All levels of a text of length `n`. Period 1 is excluded from every
/// level (it is always a period and reported directly).
pub fn level_plans(n: u64) -> Vec<LevelPlan> {
    let h = n / 2;
    (1..=level_count(n))
        .map(|j| {
            let (a, b) = LevelPlan::raw_interval(n, j);
            let lo = a.max(2) as u64;
            let hi = b.min(h as i64 - 1).max(0) as u64;
            let l = ell(n, j);
            let l1 = ell(n, j + 1);
            LevelPlan { j, ell: l, ell_next: l1, lo, hi, text_end: (h + l).saturating_sub(l1 + 2).min(n) }
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ell_values() {
        assert_eq!(ell(101, 1), 67);
        assert_eq!(ell(101, 2), 44);
        assert_eq!(ell(9, 2), 4);
        assert_eq!(level_count(1), 0);
        assert_eq!(level_count(2), 2);
        assert_eq!(level_count(101), 12);
    }

    #[test]
    fn levels_tile_small() {
        for n in 2..200u64 {
            let h = n / 2;
            let mut covered = vec![0u32; h as usize + 1];
            for lv in level_plans(n) {
                for p in lv.lo..=lv.hi {
                    covered[p as usize] += 1;
                }
            }
            for p in 2..h {
                assert_eq!(covered[p as usize], 1, "n={n} p={p}");
            }
        }
    }
}
