mod common;

use common::{matcher_instance, matcher_matches_oracle, rng};
use kperiods::corpus;
use kperiods::matcher::{majority_vote, StreamingMatcher};
use kperiods::oracle::naive_occurrences;
use kperiods::sketch::Epoch;
use rand::Rng;

#[test]
fn random_triples_match_naive_occurrences() {
    for i in 1000..1040 {
        let (p, t, k) = matcher_instance(i, 1500, 6);
        matcher_matches_oracle(&p, &t, k, i).unwrap();
    }
}

#[test]
fn spec_examples() {
    matcher_matches_oracle(b"aba", b"ababa", 0, 1).unwrap();
    matcher_matches_oracle(b"aaa", b"aab", 1, 1).unwrap();
    matcher_matches_oracle(b"x", b"xyxxy", 0, 1).unwrap();
}

/// Endpoints reported with compression on, and the largest number of
/// sketches held by any one verification level.
fn compressed_run(p: &[u8], t: &[u8], k: usize, threshold: u64) -> (Vec<u64>, usize) {
    let mut m = StreamingMatcher::new(k, 1, t.len() as u64, Epoch::from_seed(4))
        .unwrap()
        .with_compression(Some(threshold));
    for &c in p {
        m.feed_pattern_char(c).unwrap();
    }
    let mut ends = Vec::new();
    let mut worst = 0;
    for &c in t {
        ends.extend(m.feed_text_char(c).unwrap().into_iter().map(|o| o.endpoint));
        worst = worst.max(m.stored_counts().iter().map(|x| x.1).max().unwrap_or(0));
    }
    (ends, worst)
}

#[test]
fn compressed_levels_stay_bounded() {
    let k = 1;
    let bound = 2 * 576 * k + 3;
    let n = 12_000;
    let cases: Vec<(Vec<u8>, Vec<u8>)> = vec![
        (vec![b'a'; 3000], vec![b'a'; n]),
        (corpus::ab_with_flips(3000, 0, 1), corpus::ab_with_flips(n, 1, 2)),
        (corpus::periodic_noise(2500, 3, 3, 0, 5), corpus::periodic_noise(n, 3, 3, 0, 5)),
    ];
    for (p, t) in cases {
        let want: Vec<u64> = naive_occurrences(&p, &t, k).into_iter().map(|o| o.0).collect();
        let (got, worst) = compressed_run(&p, &t, k, 576 * k as u64);
        assert_eq!(got, want);
        assert!(worst <= bound, "{worst} sketches on one level");
    }
}

#[test]
fn compression_keeps_occurrences() {
    let mut r = rng(8);
    for i in 0..20 {
        let t = corpus::periodic_noise(2000, r.gen_range(1..4), 2, r.gen_range(0..3), i);
        let p = t[..r.gen_range(1..700)].to_vec();
        let k = r.gen_range(0..3);
        let want: Vec<u64> = naive_occurrences(&p, &t, k).into_iter().map(|o| o.0).collect();
        assert_eq!(compressed_run(&p, &t, k, 8).0, want);
    }
}

#[test]
fn majority_vote_finds_forced_majority() {
    let mut r = rng(12);
    for _ in 0..1000 {
        let len = r.gen_range(1..60);
        let winner = r.gen_range(0..5u8);
        let forced = len / 2 + 1;
        let mut items: Vec<u8> = (0..len).map(|i| if i < forced { winner } else { r.gen_range(0..5) }).collect();
        for i in (1..items.len()).rev() {
            items.swap(i, r.gen_range(0..=i));
        }
        assert_eq!(majority_vote(items), Ok(winner));
    }
}
