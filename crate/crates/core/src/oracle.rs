//! Brute-force reference implementations. All quadratic; meant for tests,
//! fixtures and small inputs.

use crate::sketch::MismatchInfo;

/// Largest text the quadratic oracles accept through the CLI.
pub const ORACLE_MAX: usize = 100_000;

/// Everything the oracles know about one input.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct OracleReport {
    pub periods: Vec<(u64, MismatchInfo)>,
    pub occurrences: Vec<(u64, MismatchInfo)>,
    pub approx_period: Option<(Vec<u8>, usize)>,
}

/// Mismatches of `a` against `b`, or `None` as soon as more than `k` appear.
fn bounded_mi(a: &[u8], b: &[u8], k: usize) -> Option<MismatchInfo> {
    let mut count = 0;
    for (x, y) in a.iter().zip(b) {
        if x != y {
            count += 1;
            if count > k {
                return None;
            }
        }
    }
    Some(MismatchInfo::between(a, b))
}

/// Every `p` in `[1..n]` with `hd(T[p..n], T[1..n-p+1]) <= k`, with
/// `MI(T[p..], T[..n-p+1])`.
pub fn naive_kmismatch_periods(t: &[u8], k: usize) -> Vec<(u64, MismatchInfo)> {
    let n = t.len();
    (1..=n)
        .filter_map(|p| bounded_mi(&t[p - 1..], &t[..n - p + 1], k).map(|mi| (p as u64, mi)))
        .collect()
}

/// Every endpoint `p` with `hd(T[p-|P|+1..p], P) <= k`, with the window-vs-pattern mismatches.
pub fn naive_occurrences(pat: &[u8], t: &[u8], k: usize) -> Vec<(u64, MismatchInfo)> {
    let m = pat.len();
    if m == 0 || m > t.len() {
        return Vec::new();
    }
    (m..=t.len())
        .filter_map(|p| bounded_mi(&t[p - m..p], pat, k).map(|mi| (p as u64, mi)))
        .collect()
}

/// True iff `s` occurs in `ss` only at the two trivial offsets.
pub fn is_primitive(s: &[u8]) -> bool {
    let n = s.len();
    assert!(n > 0, "primitivity of the empty string");
    (1..n).all(|d| n % d != 0 || (0..n).any(|i| s[i] != s[i % d]))
}

/// Column-majority string of period `q` over `p`.
pub fn column_majority(p: &[u8], q: usize) -> Vec<u8> {
    (0..q)
        .map(|c| {
            let mut counts = [0usize; 256];
            for &b in p.iter().skip(c).step_by(q) {
                counts[b as usize] += 1;
            }
            let mut best = 0;
            for b in 1..256 {
                if counts[b] > counts[best] {
                    best = b;
                }
            }
            best as u8
        })
        .collect()
}

/// Hamming distance between `p` and the periodic extension of `q`.
pub fn hd_periodic(p: &[u8], q: &[u8]) -> usize {
    p.iter().enumerate().filter(|(i, &c)| c != q[i % q.len()]).count()
}

/// Smallest `q <= |P|/(128k)` whose column-majority string `Q` is primitive
/// and satisfies `hd(P, Q*) <= 2k`.
pub fn naive_approx_period(p: &[u8], k: usize) -> Option<(Vec<u8>, usize)> {
    let kk = k.max(1);
    let limit = p.len() / (128 * kk);
    (1..=limit).find_map(|q| {
        let cand = column_majority(p, q);
        (is_primitive(&cand) && hd_periodic(p, &cand) <= 2 * kk).then_some((cand, q))
    })
}

/// Every `p` in `[1..n]` such that each aligned pair `T[i], T[i+p-1]` is equal
/// or involves the wildcard.
pub fn naive_wildcard_periods(t: &[u8], wildcard: u8) -> Vec<u64> {
    let n = t.len();
    (1..=n)
        .filter(|&p| (0..n + 1 - p).all(|i| t[i] == t[i + p - 1] || t[i] == wildcard || t[i + p - 1] == wildcard))
        .map(|p| p as u64)
        .collect()
}

/// Runs every oracle that applies to a text and an optional pattern.
pub fn oracle_report(t: &[u8], pattern: Option<&[u8]>, k: usize) -> OracleReport {
    OracleReport {
        periods: naive_kmismatch_periods(t, k),
        occurrences: pattern.map(|p| naive_occurrences(p, t, k)).unwrap_or_default(),
        approx_period: naive_approx_period(t, k),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn periods(t: &str, k: usize, upto: u64) -> Vec<u64> {
        naive_kmismatch_periods(t.as_bytes(), k).into_iter().map(|(p, _)| p).filter(|&p| p <= upto).collect()
    }

    #[test]
    fn period_examples() {
        assert_eq!(periods("abcabcab", 0, 4), vec![1, 4]);
        let mut s = vec![b'a'; 40];
        s.push(b'b');
        s.extend(vec![b'a'; 60]);
        let got: Vec<u64> = naive_kmismatch_periods(&s, 2).into_iter().map(|(p, _)| p).collect();
        assert!((1..=50).all(|p| got.contains(&p)));
        assert!(naive_kmismatch_periods(b"xyzzy", 0)[0].1.is_empty());
    }

    #[test]
    fn occurrence_examples() {
        let occ = naive_occurrences(b"aba", b"ababa", 0);
        assert_eq!(occ.iter().map(|o| o.0).collect::<Vec<_>>(), vec![3, 5]);
        let occ = naive_occurrences(b"aa", b"ab", 1);
        assert_eq!(occ.len(), 1);
        assert_eq!(occ[0].0, 2);
        assert_eq!(occ[0].1, MismatchInfo::between(b"ab", b"aa"));
    }

    #[test]
    fn primitive_examples() {
        assert!(is_primitive(b"ab"));
        assert!(!is_primitive(b"abab"));
        assert!(is_primitive(b"aab"));
        assert!(is_primitive(b"a"));
    }

    #[test]
    fn approx_period_examples() {
        let p = vec![b'a'; 1024];
        assert_eq!(naive_approx_period(&p, 1), Some((b"a".to_vec(), 1)));
        let mut p: Vec<u8> = b"ab".repeat(512);
        p[100] = b'b';
        p[701] = b'a';
        assert_eq!(naive_approx_period(&p, 2), Some((b"ab".to_vec(), 2)));
    }

    #[test]
    fn wildcard_examples() {
        let got: Vec<u64> = naive_wildcard_periods(b"a?aaa", b'?').into_iter().filter(|&p| p <= 2).collect();
        assert_eq!(got, vec![1, 2]);
        let got: Vec<u64> = naive_wildcard_periods(b"ab?ab", b'?').into_iter().filter(|&p| p <= 2).collect();
        assert_eq!(got, vec![1]);
    }
}
