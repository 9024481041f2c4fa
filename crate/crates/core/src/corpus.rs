//! Deterministic test and fixture generators.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;

/// `a^40 b a^60`: every `p <= 50` is a 2-mismatch period.
pub fn appendix_c() -> Vec<u8> {
    let mut t = vec![b'a'; 40];
    t.push(b'b');
    t.extend(std::iter::repeat(b'a').take(60));
    t
}

fn letter(rng: &mut impl Rng, sigma: u8) -> u8 {
    b'a' + rng.gen_range(0..sigma.clamp(1, 26))
}

/// Replaces up to `k` random positions by random letters.
pub fn perturb(t: &mut [u8], k: usize, sigma: u8, rng: &mut impl Rng) {
    if t.is_empty() {
        return;
    }
    for _ in 0..k {
        let i = rng.gen_range(0..t.len());
        t[i] = letter(rng, sigma);
    }
}

pub fn uniform(n: usize, sigma: u8, seed: u64) -> Vec<u8> {
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    (0..n).map(|_| letter(&mut rng, sigma)).collect()
}

/// A random block of length `q` repeated, then `k` substitutions.
pub fn periodic_noise(n: usize, q: usize, sigma: u8, k: usize, seed: u64) -> Vec<u8> {
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    let block: Vec<u8> = (0..q.max(1)).map(|_| letter(&mut rng, sigma)).collect();
    let mut t: Vec<u8> = (0..n).map(|i| block[i % block.len()]).collect();
    perturb(&mut t, k, sigma, &mut rng);
    t
}

/// A random string forced to have exact period `p` (`T[i] = T[i + p - 1]`),
/// then `k` substitutions. `p = 0` picks one in `[2..n/2]`.
pub fn planted_period(n: usize, p: usize, sigma: u8, k: usize, seed: u64) -> (Vec<u8>, usize) {
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    let p = if p == 0 { rng.gen_range(2..=(n / 2).max(2)) } else { p };
    let mut t: Vec<u8> = (0..n).map(|_| letter(&mut rng, sigma)).collect();
    let shift = p - 1;
    if shift > 0 {
        for i in shift..n {
            t[i] = t[i - shift];
        }
    }
    perturb(&mut t, k, sigma, &mut rng);
    (t, p)
}

/// `(ab)^(n/2)` with `subs` random flips.
pub fn ab_with_flips(n: usize, subs: usize, seed: u64) -> Vec<u8> {
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    let mut t: Vec<u8> = (0..n).map(|i| b"ab"[i % 2]).collect();
    for _ in 0..subs {
        let i = rng.gen_range(0..n);
        t[i] = if t[i] == b'a' { b'b' } else { b'a' };
    }
    t
}

/// Overwrites `w` distinct random positions with `wildcard`.
pub fn with_wildcards(t: &mut [u8], w: usize, wildcard: u8, seed: u64) {
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    let w = w.min(t.len());
    for i in rand::seq::index::sample(&mut rng, t.len(), w) {
        t[i] = wildcard;
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::oracle::naive_kmismatch_periods;

    #[test]
    fn fixtures() {
        let c = appendix_c();
        assert_eq!(c.len(), 101);
        assert_eq!(c[40], b'b');
        assert_eq!(uniform(50, 4, 9), uniform(50, 4, 9));
        let (t, p) = planted_period(200, 0, 3, 0, 4);
        assert!(naive_kmismatch_periods(&t, 0).iter().any(|(q, _)| *q == p as u64));
        let mut w = b"aaaaaaaa".to_vec();
        with_wildcards(&mut w, 3, b'?', 1);
        assert_eq!(w.iter().filter(|&&b| b == b'?').count(), 3);
    }
}
