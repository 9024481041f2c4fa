mod common;

use common::{border_periods, collect_in_scope, fact_3_6_instance, lemma_3_7_instance, letters, rng};
use kperiods::corpus;
use kperiods::oracle::*;
use rand::Rng;

#[test]
fn many_occurrences_force_an_approximate_period() {
    collect_in_scope(15, 600, fact_3_6_instance).unwrap();
}

#[test]
fn approximate_period_is_inherited_by_extensions() {
    collect_in_scope(15, 600, lemma_3_7_instance).unwrap();
}

#[test]
fn exact_periods_match_border_array() {
    let mut r = rng(31);
    for i in 0..100 {
        let n = r.gen_range(1..300);
        let t = match i % 3 {
            0 => letters(&mut r, n, 2),
            1 => corpus::periodic_noise(n, r.gen_range(1..6), 3, 0, i),
            _ => corpus::planted_period(n.max(4), 0, 2, 0, i).0,
        };
        let naive: Vec<u64> = naive_kmismatch_periods(&t, 0).into_iter().map(|x| x.0).collect();
        assert_eq!(naive, border_periods(&t), "{:?}", String::from_utf8_lossy(&t));
    }
}

#[test]
fn approximate_period_examples() {
    assert_eq!(naive_approx_period(&[b'a'; 1024], 1), Some((b"a".to_vec(), 1)));
    let mut p = corpus::ab_with_flips(1024, 0, 0);
    p[100] = b'a';
    p[701] = b'a';
    assert_eq!(naive_approx_period(&p, 2).map(|x| x.0), Some(b"ab".to_vec()));
    assert_eq!(naive_approx_period(&corpus::uniform(1024, 26, 3), 1), None);
}

#[test]
fn wildcard_oracle_without_wildcards_is_exact_periods() {
    let mut r = rng(32);
    for _ in 0..50 {
        let n = r.gen_range(1..120);
        let t = letters(&mut r, n, 2);
        let exact: Vec<u64> = naive_kmismatch_periods(&t, 0).into_iter().map(|x| x.0).collect();
        assert_eq!(naive_wildcard_periods(&t, b'?'), exact);
    }
}
