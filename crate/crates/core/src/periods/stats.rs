//! Instrumentation of a detector run.

use serde::Serialize;

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize)]
pub struct ModuleBytes {
    /// The shared text sketch and the prefix ladder.
    pub sketch: usize,
    /// Verification cascades: candidate queues and target sketches.
    pub matcher: usize,
    /// Candidate tables, periodic-path state and the direct range.
    pub periods: usize,
    /// Peak of the sum, not the sum of peaks.
    pub total: usize,
}

impl ModuleBytes {
    pub(crate) fn record(&mut self, sketch: usize, matcher: usize, periods: usize) {
        self.sketch = self.sketch.max(sketch);
        self.matcher = self.matcher.max(matcher);
        self.periods = self.periods.max(periods);
        self.total = self.total.max(sketch + matcher + periods);
    }
}

/// Per-character processing time in power-of-two nanosecond buckets.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct TimeHistogram {
    /// `buckets[i]` counts characters that took `[2^i, 2^(i+1))` ns.
    pub buckets: Vec<u64>,
    pub max_ns: u64,
}

impl TimeHistogram {
    pub(crate) fn record(&mut self, ns: u64) {
        let i = 63 - ns.max(1).leading_zeros() as usize;
        if self.buckets.len() <= i {
            self.buckets.resize(i + 1, 0);
        }
        self.buckets[i] += 1;
        self.max_ns = self.max_ns.max(ns);
    }

    /// Upper bucket bound below which a fraction `q` of characters fall.
    pub fn percentile(&self, q: f64) -> u64 {
        let total: u64 = self.buckets.iter().sum();
        let mut acc = 0;
        for (i, c) in self.buckets.iter().enumerate() {
            acc += c;
            if total > 0 && acc as f64 >= q * total as f64 {
                return 1u64 << (i + 1);
            }
        }
        0
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct LevelSummary {
    pub j: u32,
    pub ell: u64,
    pub lo: u64,
    pub hi: u64,
    /// Tested position by position instead of by pattern matching.
    pub direct: bool,
    /// `Some(true)` when the bounded candidate table overflowed.
    pub nonperiodic_bottom: Option<bool>,
    /// Prefix and suffix table keys at the end of the stream, when instrumented.
    pub pref_keys: Vec<u64>,
    pub suf_keys: Vec<u64>,
    pub q: Option<u64>,
    /// Extended prefix length and whether it stopped early.
    pub extension: Option<(u64, bool)>,
    pub periodic_failure: Option<String>,
    /// Which pipeline produced the level's periods.
    pub used: String,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct RunStats {
    pub n: u64,
    pub k: usize,
    pub seed: u64,
    pub retries: u32,
    pub peak_bytes: ModuleBytes,
    pub char_time: TimeHistogram,
    pub levels: Vec<LevelSummary>,
}

impl RunStats {
    /// The stats with wall-clock measurements removed.
    pub fn without_timing(&self) -> RunStats {
        RunStats { char_time: TimeHistogram::default(), ..self.clone() }
    }
}
