//! Per-position testing of a contiguous period range.

use std::collections::HashMap;

use crate::periods::tables::{candidate_test, CandidateOutcome, PeriodReport};
use crate::periods::text::TextState;
use crate::periods::weight::WeightValue;
use crate::sketch::{KMismatchSketch, SketchError};

/// Snapshots `sk(T[1..p-1])` at `p - 1` and `sk(T[1..n-p+1])` at `n - p + 1`
/// for every `p` in `[lo..hi]`.
pub(crate) struct DirectRange {
    lo: u64,
    hi: u64,
    n: u64,
    k: usize,
    pre: HashMap<u64, (KMismatchSketch, WeightValue)>,
    suf: HashMap<u64, KMismatchSketch>,
}

impl DirectRange {
    pub fn new(lo: u64, hi: u64, n: u64, k: usize) -> DirectRange {
        DirectRange { lo, hi, n, k, pre: HashMap::new(), suf: HashMap::new() }
    }

    fn contains(&self, p: u64) -> bool {
        self.lo <= p && p <= self.hi
    }

    pub fn step(&mut self, text: &TextState) {
        let pos = text.pos();
        if self.contains(pos + 1) {
            self.pre.insert(pos + 1, (text.snapshot(self.k), text.weight()));
        }
        if pos >= 1 && self.contains(self.n + 1 - pos) {
            self.suf.insert(self.n + 1 - pos, text.snapshot(self.k));
        }
    }

    pub fn heap_bytes(&self) -> usize {
        let a: usize = self.pre.values().map(|(s, _)| s.heap_bytes() + 32).sum();
        let b: usize = self.suf.values().map(|s| s.heap_bytes() + 16).sum();
        a + b
    }

    pub fn finalize(&self, text: &TextState) -> Result<Vec<PeriodReport>, SketchError> {
        let sk_t = text.snapshot(self.k);
        let mut out = Vec::new();
        for p in self.lo..=self.hi {
            let (Some((pre, w)), Some(suf)) = (self.pre.get(&p), self.suf.get(&p)) else {
                continue;
            };
            if let CandidateOutcome::Within(mi) = candidate_test(&sk_t, pre, suf, p, self.n)? {
                out.push(PeriodReport { period: p, weight: text.plugin().subtract(text.weight(), *w), mi });
            }
        }
        Ok(out)
    }
}
