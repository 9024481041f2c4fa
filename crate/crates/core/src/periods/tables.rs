//! Candidate tables and the final per-candidate test.

use std::collections::HashMap;

use crate::periods::weight::{WeightPlugin, WeightValue};
use crate::sketch::{Comparison, KMismatchSketch, MismatchInfo, Side, SketchError};

/// One reported period.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PeriodReport {
    pub period: u64,
    /// `w(T[p..])`.
    pub weight: WeightValue,
    /// `MI(T[p..], T[..n-p+1])`.
    pub mi: MismatchInfo,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum CandidateOutcome {
    Within(MismatchInfo),
    NotPeriod,
}

/// Decides whether `p` is a period from `sk(T)`, `sk(T[1..p-1])` and
/// `sk(T[1..n-p+1])`.
pub fn candidate_test(
    sk_t: &KMismatchSketch,
    sk_pre: &KMismatchSketch,
    sk_suf: &KMismatchSketch,
    p: u64,
    n: u64,
) -> Result<CandidateOutcome, SketchError> {
    if sk_t.len() != n || sk_pre.len() + 1 != p || sk_suf.len() + p != n + 1 {
        return Err(SketchError::LengthMismatch { part: sk_pre.len(), whole: sk_t.len() });
    }
    let tail = KMismatchSketch::split(sk_t, sk_pre, Side::Left)?;
    Ok(match tail.compare(sk_suf)? {
        Comparison::Within(mi) => CandidateOutcome::Within(mi),
        _ => CandidateOutcome::NotPeriod,
    })
}

/// `pref`: candidate `t` with `sk(T[1..t])` and `w(T[1..t])`; `suf`: `t`
/// with `sk(T[1..n-t])`. Candidate `t` stands for period `t + 1`.
#[derive(Debug, Clone)]
pub(crate) struct CandidateTables {
    capacity: usize,
    pref: HashMap<u64, (KMismatchSketch, WeightValue)>,
    suf: HashMap<u64, KMismatchSketch>,
    bottom: bool,
}

impl CandidateTables {
    pub fn new(capacity: usize) -> CandidateTables {
        CandidateTables { capacity, pref: HashMap::new(), suf: HashMap::new(), bottom: false }
    }

    pub fn is_bottom(&self) -> bool {
        self.bottom
    }

    fn overflow(&mut self) {
        self.bottom = true;
        self.pref = HashMap::new();
        self.suf = HashMap::new();
    }

    pub fn insert_pref(&mut self, t: u64, sk: KMismatchSketch, w: WeightValue) {
        if self.bottom {
            return;
        }
        self.pref.insert(t, (sk, w));
        if self.pref.len() > self.capacity {
            self.overflow();
        }
    }

    pub fn wants_suf(&self, t: u64) -> bool {
        self.pref.contains_key(&t) && !self.suf.contains_key(&t)
    }

    pub fn insert_suf(&mut self, t: u64, sk: KMismatchSketch) {
        if self.bottom {
            return;
        }
        self.suf.insert(t, sk);
        if self.suf.len() > self.capacity {
            self.overflow();
        }
    }

    /// Sorted keys of both tables.
    pub fn keys(&self) -> (Vec<u64>, Vec<u64>) {
        let mut p: Vec<u64> = self.pref.keys().copied().collect();
        let mut s: Vec<u64> = self.suf.keys().copied().collect();
        p.sort_unstable();
        s.sort_unstable();
        (p, s)
    }

    pub fn heap_bytes(&self) -> usize {
        let p: usize = self.pref.values().map(|(s, _)| s.heap_bytes() + 32).sum();
        let s: usize = self.suf.values().map(|s| s.heap_bytes() + 16).sum();
        p + s
    }

    /// Tests every candidate with both sketches present. `None` after overflow.
    pub fn finalize(
        &self,
        sk_t: &KMismatchSketch,
        w_t: WeightValue,
        plugin: &dyn WeightPlugin,
    ) -> Result<Option<Vec<PeriodReport>>, SketchError> {
        if self.bottom {
            return Ok(None);
        }
        let n = sk_t.len();
        let mut out = Vec::new();
        for (&t, (pre, w)) in &self.pref {
            let Some(suf) = self.suf.get(&t) else { continue };
            if let CandidateOutcome::Within(mi) = candidate_test(sk_t, pre, suf, t + 1, n)? {
                out.push(PeriodReport { period: t + 1, weight: plugin.subtract(w_t, *w), mi });
            }
        }
        out.sort_by_key(|r| r.period);
        Ok(Some(out))
    }
}
