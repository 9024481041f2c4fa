#![allow(dead_code)]

use kperiods::corpus;
use kperiods::matcher::StreamingMatcher;
use kperiods::oracle::{
    hd_periodic, is_primitive, naive_approx_period, naive_kmismatch_periods, naive_occurrences, naive_wildcard_periods,
};
use kperiods::periods::{detect_in_slice, StreamConfig, WeightKind};
use kperiods::sketch::{sketch_string, Epoch, MismatchInfo, SketchBuilder};
use kperiods::wildcards::{detect_wildcards_in_slice, WildcardConfig};
use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha20Rng;

pub fn rng(seed: u64) -> ChaCha20Rng {
    ChaCha20Rng::seed_from_u64(seed)
}

pub type Expected = Vec<(u64, Option<i64>, MismatchInfo)>;

/// Oracle answer for `detect_kmismatch_periods` under `cfg`.
pub fn expected_periods(t: &[u8], cfg: &StreamConfig) -> Expected {
    let plugin = cfg.weight.plugin();
    let last = cfg.last_period();
    naive_kmismatch_periods(t, cfg.k)
        .into_iter()
        .filter(|(p, _)| *p <= last)
        .map(|(p, mi)| (p, plugin.of_str(&t[p as usize - 1..]), mi))
        .collect()
}

pub fn check_periods(t: &[u8], cfg: &StreamConfig, want: &Expected) -> Result<(), String> {
    let d = detect_in_slice(t, cfg).map_err(|e| format!("n={} k={}: {e}", t.len(), cfg.k))?;
    let got: Expected = d.periods.into_iter().map(|r| (r.period, r.weight, r.mi)).collect();
    if &got == want {
        Ok(())
    } else {
        let gp: Vec<u64> = got.iter().map(|x| x.0).collect();
        let wp: Vec<u64> = want.iter().map(|x| x.0).collect();
        Err(format!("n={} k={} delta={} seed={}: got {gp:?}, want {wp:?}", t.len(), cfg.k, cfg.delta, cfg.seed))
    }
}

/// A failing case must pass on three fresh seeds.
pub fn with_reruns(seed: u64, mut run: impl FnMut(u64) -> Result<(), String>) -> Result<(), String> {
    let Err(first) = run(seed) else {
        return Ok(());
    };
    let mut fresh = rng(seed ^ 0x5eed);
    for _ in 0..3 {
        run(fresh.next_u64()).map_err(|e| format!("{first}; rerun: {e}"))?;
    }
    Ok(())
}

pub fn periods_match_oracle(t: &[u8], cfg: &StreamConfig) -> Result<(), String> {
    let want = expected_periods(t, cfg);
    with_reruns(cfg.seed, |s| check_periods(t, &cfg.clone().with_seed(s), &want))
}

/// One random end-to-end instance: `(text, config)`.
pub fn random_instance(i: u64, n_range: (usize, usize), max_k: usize) -> (Vec<u8>, StreamConfig) {
    let mut r = rng(1000 + i);
    let n = r.gen_range(n_range.0..=n_range.1);
    let sigma = [2u8, 4, 26][(i % 3) as usize];
    let k = r.gen_range(0..=max_k);
    let seed = r.next_u64();
    let t = match (i / 3) % 3 {
        0 => corpus::uniform(n, sigma, seed),
        1 => {
            let q = r.gen_range(1..=6);
            corpus::periodic_noise(n, q, sigma, r.gen_range(0..=2 * k + 2), seed)
        }
        _ => {
            let p = r.gen_range(2..=(n / 2).max(2));
            corpus::planted_period(n, p, sigma, r.gen_range(0..=k + 1), seed).0
        }
    };
    let delta = [0u64, 5][(i % 2) as usize].min((n - n / 2) as u64);
    let mut cfg = StreamConfig::new(n as u64, k).with_delta(delta).with_seed(i).with_weight(WeightKind::CharSum);
    cfg.small_input_oracle = false;
    (t, cfg)
}

pub fn random_wildcard_instance(i: u64, max_n: usize) -> (Vec<u8>, usize) {
    let mut r = rng(5000 + i);
    let n = r.gen_range(8..=max_n);
    let w = r.gen_range(1..=6);
    let sigma = r.gen_range(2..=4u8);
    let mut t = match i % 3 {
        0 => corpus::uniform(n, sigma, r.next_u64()),
        1 => corpus::periodic_noise(n, r.gen_range(1..=5), sigma, 0, r.next_u64()),
        _ => corpus::planted_period(n, r.gen_range(2..=n / 2), sigma, 0, r.next_u64()).0,
    };
    corpus::with_wildcards(&mut t, w, b'?', r.next_u64());
    (t, w)
}

pub fn wildcards_match_oracle(t: &[u8], w: usize, seed: u64, streaming: bool) -> Result<(), String> {
    let half = t.len() as u64 / 2;
    let want: Vec<u64> = naive_wildcard_periods(t, b'?').into_iter().filter(|&p| p <= half).collect();
    with_reruns(seed, |s| {
        let mut cfg = WildcardConfig::new(t.len() as u64, w).with_seed(s);
        cfg.small_input_oracle = !streaming;
        let d = detect_wildcards_in_slice(t, &cfg).map_err(|e| e.to_string())?;
        let got: Vec<u64> = d.periods.iter().map(|r| r.period).collect();
        if got != want {
            return Err(format!("n={} w={w}: got {got:?}, want {want:?}", t.len()));
        }
        for r in &d.periods {
            if !r.mi.iter().all(|m| m.left == b'#' || m.right == b'#') {
                return Err(format!("period {} kept a hard mismatch", r.period));
            }
        }
        Ok(())
    })
}

/// A pattern/text pair for the matcher, biased towards having occurrences.
pub fn matcher_instance(i: u64, max_t: usize, max_k: usize) -> (Vec<u8>, Vec<u8>, usize) {
    let mut r = rng(9000 + i);
    let n = r.gen_range(1..=max_t);
    let k = r.gen_range(0..=max_k);
    let sigma = [2u8, 3, 26][(i % 3) as usize];
    let t = if i % 2 == 0 {
        corpus::uniform(n, sigma, r.next_u64())
    } else {
        corpus::periodic_noise(n, r.gen_range(1..=4), sigma, r.gen_range(0..=k), r.next_u64())
    };
    let m = r.gen_range(1..=n.min(600));
    let at = r.gen_range(0..=n - m);
    let mut p = t[at..at + m].to_vec();
    corpus::perturb(&mut p, r.gen_range(0..=k), sigma, &mut r);
    (p, t, k)
}

pub fn matcher_matches_oracle(p: &[u8], t: &[u8], k: usize, seed: u64) -> Result<(), String> {
    let want = naive_occurrences(p, t, k);
    with_reruns(seed, |s| {
        let ep = Epoch::from_seed(s);
        let plugin = WeightKind::CharSum.plugin();
        let mut m = StreamingMatcher::new(k, 1, t.len() as u64, ep).map_err(|e| e.to_string())?.with_weight(plugin.clone());
        for &c in p {
            m.feed_pattern_char(c).map_err(|e| e.to_string())?;
        }
        let mut prefixes = std::collections::HashMap::new();
        let mut b = SketchBuilder::new(k, ep).map_err(|e| e.to_string())?;
        let starts: std::collections::HashSet<usize> = want.iter().map(|(e, _)| *e as usize - p.len()).collect();
        for (i, &c) in t.iter().enumerate() {
            if starts.contains(&i) {
                prefixes.insert(i, b.snapshot());
            }
            b.append(c).map_err(|e| e.to_string())?;
        }
        let mut got = Vec::new();
        for &c in t {
            for o in m.feed_text_char(c).map_err(|e| e.to_string())? {
                let start = o.endpoint as usize - p.len();
                if prefixes.get(&start) != Some(&o.prefix_sketch) {
                    return Err(format!("prefix sketch at endpoint {}", o.endpoint));
                }
                if o.prefix_weight != plugin.of_str(&t[..start]) {
                    return Err(format!("prefix weight at endpoint {}", o.endpoint));
                }
                got.push((o.endpoint, o.mi));
            }
        }
        if got != want {
            let g: Vec<u64> = got.iter().map(|x| x.0).collect();
            let w: Vec<u64> = want.iter().map(|x| x.0).collect();
            return Err(format!("|P|={} |T|={} k={k}: got {g:?}, want {w:?}", p.len(), t.len()));
        }
        Ok(())
    })
}

/// Exact periods from the border array, shifted to the `p = shift + 1` convention.
pub fn border_periods(t: &[u8]) -> Vec<u64> {
    let n = t.len();
    let mut fail = vec![0usize; n + 1];
    let mut b = 0;
    for i in 1..n {
        while b > 0 && t[i] != t[b] {
            b = fail[b];
        }
        if t[i] == t[b] {
            b += 1;
        }
        fail[i + 1] = b;
    }
    let mut out = vec![1u64];
    let mut b = if n > 0 { fail[n] } else { 0 };
    let mut shifts = Vec::new();
    while b > 0 {
        shifts.push((n - b) as u64);
        b = fail[b];
    }
    shifts.sort_unstable();
    out.extend(shifts.into_iter().map(|s| s + 1));
    out
}

fn primitive_block(r: &mut ChaCha20Rng, q: usize, sigma: u8) -> Vec<u8> {
    loop {
        let b: Vec<u8> = (0..q).map(|_| b'a' + r.gen_range(0..sigma)).collect();
        if is_primitive(&b) {
            return b;
        }
    }
}

fn periodic(block: &[u8], n: usize) -> Vec<u8> {
    (0..n).map(|i| block[i % block.len()]).collect()
}

/// Occurrence structure of a pattern with many occurrences. `None` when the
/// generated pair has too few occurrences to be in scope.
pub fn fact_3_6_instance(i: u64) -> Option<Result<(), String>> {
    let mut r = rng(20_000 + i);
    let k = r.gen_range(1..=2usize);
    let q = r.gen_range(1..=3usize);
    let m = r.gen_range(1800 * k * q..=2400 * k * q);
    let n = m + m / 2;
    let block = primitive_block(&mut r, q, 3);
    let on_pattern = r.gen_range(0..=k);
    let mut t = periodic(&block, n);
    corpus::perturb(&mut t, k - on_pattern, 3, &mut r);
    let mut p = periodic(&block, m);
    corpus::perturb(&mut p, on_pattern, 3, &mut r);
    let occ = naive_occurrences(&p, &t, k);
    if (occ.len() as f64) <= 576.0 * (n as f64 / m as f64) * k as f64 {
        return None;
    }
    let Some((qq, ql)) = naive_approx_period(&p, k) else {
        return Some(Err(format!("no approximate period for |P|={m} k={k}")));
    };
    if ql > m / (128 * k) || hd_periodic(&p, &qq) > 2 * k {
        return Some(Err(format!("approximate period out of bounds: |Q|={ql}")));
    }
    let first = occ[0].0;
    if let Some((bad, _)) = occ.iter().find(|(e, _)| (e - first) % ql as u64 != 0) {
        return Some(Err(format!("occurrences {first} and {bad} not |Q|={ql} apart")));
    }
    Some(Ok(()))
}

/// Approximate periods of a prefix and of a longer string agree.
pub fn lemma_3_7_instance(i: u64) -> Option<Result<(), String>> {
    let mut r = rng(30_000 + i);
    let k = r.gen_range(1..=2usize);
    let q = r.gen_range(1..=4usize);
    let x_len = 128 * k * q + r.gen_range(0..1500);
    let y_len = x_len + r.gen_range(0..=(3 * x_len) / 2);
    let block = primitive_block(&mut r, q, 3);
    let mut y = periodic(&block, y_len);
    corpus::perturb(&mut y, r.gen_range(0..=2 * k), 3, &mut r);
    let x = &y[..x_len];
    let (Some(qx), Some(qy)) = (naive_approx_period(x, k), naive_approx_period(&y, k)) else {
        return None;
    };
    if qx != qy {
        return Some(Err(format!("|X|={x_len} |Y|={y_len}: Q_X={:?} Q_Y={:?}", qx.0, qy.0)));
    }
    Some(Ok(()))
}

/// Runs instance generators until `want` in-scope instances are collected.
pub fn collect_in_scope(
    want: usize,
    max_tries: u64,
    gen: impl Fn(u64) -> Option<Result<(), String>>,
) -> Result<usize, String> {
    let mut seen = 0;
    for i in 0..max_tries {
        if let Some(res) = gen(i) {
            res?;
            seen += 1;
            if seen == want {
                return Ok(seen);
            }
        }
    }
    Err(format!("only {seen} in-scope instances in {max_tries} tries"))
}

/// Random string over the first `sigma` letters.
pub fn letters(r: &mut ChaCha20Rng, n: usize, sigma: u8) -> Vec<u8> {
    (0..n).map(|_| b'a' + r.gen_range(0..sigma)).collect()
}

/// `u` with exactly `d` positions changed to a different letter.
pub fn with_exact_edits(r: &mut ChaCha20Rng, u: &[u8], d: usize) -> Vec<u8> {
    let mut v = u.to_vec();
    for i in rand::seq::index::sample(r, u.len(), d.min(u.len())) {
        v[i] = if u[i] == b'z' { b'a' } else { u[i] + 1 + r.gen_range(0..(b'z' - u[i])) };
    }
    v
}

/// Sketch homomorphism checks; each returns the number of cases run.
pub mod algebra_suites {
    use super::*;
    use kperiods::sketch::{KMismatchSketch, Side};

    fn case(r: &mut ChaCha20Rng) -> (usize, Epoch) {
        (r.gen_range(0..=8), Epoch::from_seed(r.next_u64()))
    }

    fn sk(u: &[u8], k: usize, ep: Epoch) -> KMismatchSketch {
        sketch_string(u, k, ep).expect("short string")
    }

    pub fn concat(cases: u64, seed: u64) -> Result<(), String> {
        let mut r = rng(seed);
        for i in 0..cases {
            let (k, ep) = case(&mut r);
            let (a, b) = (r.gen_range(0..300), r.gen_range(0..300));
            let u = letters(&mut r, a, 4);
            let v = letters(&mut r, b, 4);
            let uv = [u.clone(), v.clone()].concat();
            if sk(&u, k, ep).concat(&sk(&v, k, ep)).map_err(|e| e.to_string())? != sk(&uv, k, ep) {
                return Err(format!("concat case {i}"));
            }
        }
        Ok(())
    }

    pub fn split(cases: u64, seed: u64) -> Result<(), String> {
        let mut r = rng(seed);
        for i in 0..cases {
            let (k, ep) = case(&mut r);
            let (a, b) = (r.gen_range(0..300), r.gen_range(0..300));
            let u = letters(&mut r, a, 4);
            let v = letters(&mut r, b, 4);
            let whole = sk(&[u.clone(), v.clone()].concat(), k, ep);
            let left = KMismatchSketch::split(&whole, &sk(&u, k, ep), Side::Left).map_err(|e| e.to_string())?;
            let right = KMismatchSketch::split(&whole, &sk(&v, k, ep), Side::Right).map_err(|e| e.to_string())?;
            if left != sk(&v, k, ep) || right != sk(&u, k, ep) {
                return Err(format!("split case {i}"));
            }
        }
        Ok(())
    }

    pub fn power(cases: u64, seed: u64) -> Result<(), String> {
        let mut r = rng(seed);
        for i in 0..cases {
            let (k, ep) = case(&mut r);
            let a = r.gen_range(0..40);
            let m = r.gen_range(0..12);
            let u = letters(&mut r, a, 3);
            if sk(&u, k, ep).power(m).map_err(|e| e.to_string())? != sk(&u.repeat(m as usize), k, ep) {
                return Err(format!("power case {i}"));
            }
        }
        Ok(())
    }

    pub fn apply_mi(cases: u64, seed: u64) -> Result<(), String> {
        let mut r = rng(seed);
        for i in 0..cases {
            let (k, ep) = case(&mut r);
            let a = r.gen_range(1..400);
            let u = letters(&mut r, a, 4);
            let d = r.gen_range(0..=3 * k.max(1));
            let v = with_exact_edits(&mut r, &u, d);
            let mi = MismatchInfo::between(&u, &v);
            if sk(&u, k, ep).apply_mi(&mi).map_err(|e| e.to_string())? != sk(&v, k, ep) {
                return Err(format!("apply_mi case {i}"));
            }
        }
        Ok(())
    }

    pub fn builder(cases: u64, seed: u64) -> Result<(), String> {
        let mut r = rng(seed);
        for i in 0..cases {
            let (k, ep) = case(&mut r);
            let a = r.gen_range(0..300);
            let u = letters(&mut r, a, 26);
            let mut b = SketchBuilder::new(k, ep).map_err(|e| e.to_string())?;
            for &c in &u {
                b.append(c).map_err(|e| e.to_string())?;
            }
            if b.snapshot() != sk(&u, k, ep) {
                return Err(format!("builder case {i}"));
            }
        }
        Ok(())
    }

    pub fn truncate(cases: u64, seed: u64) -> Result<(), String> {
        let mut r = rng(seed);
        for i in 0..cases {
            let (k, ep) = case(&mut r);
            let big = k + r.gen_range(1..=8);
            let a = r.gen_range(0..300);
            let u = letters(&mut r, a, 4);
            if sk(&u, big, ep).truncate(k) != sk(&u, k, ep) {
                return Err(format!("truncate case {i}"));
            }
        }
        Ok(())
    }

    /// `(completeness failures, soundness false accepts)` over `trials` each.
    pub fn compare(trials: u64, seed: u64) -> Result<(u64, u64), String> {
        use kperiods::sketch::Comparison;
        let mut r = rng(seed);
        let (mut missed, mut accepted) = (0, 0);
        let mut base: Option<(Vec<u8>, usize, Epoch, KMismatchSketch)> = None;
        for i in 0..2 * trials {
            if i % 25 == 0 {
                let k = r.gen_range(1..=8);
                let ep = Epoch::from_seed(r.next_u64());
                let m = r.gen_range(3 * k..=4096);
                let sigma = [2u8, 4, 26][r.gen_range(0..3)];
                let u = letters(&mut r, m, sigma);
                let s = sk(&u, k, ep);
                base = Some((u, k, ep, s));
            }
            let (u, k, _, s) = base.as_ref().expect("set above");
            let (u, k) = (u.as_slice(), *k);
            let complete = i % 2 == 0;
            let d = if complete { r.gen_range(0..=k) } else { r.gen_range(k + 1..=3 * k) };
            let v = with_exact_edits(&mut r, u, d);
            let mi = MismatchInfo::between(u, &v);
            let sv = s.apply_mi(&mi).map_err(|e| e.to_string())?;
            match (complete, s.compare(&sv).map_err(|e| e.to_string())?) {
                (true, Comparison::Within(got)) if got == mi => {}
                (true, _) => missed += 1,
                (false, Comparison::Within(_)) => accepted += 1,
                (false, _) => {}
            }
        }
        Ok((missed, accepted))
    }
}
