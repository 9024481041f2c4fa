//! Exact periods of texts containing wildcards.
//!
//! Each wildcard is replaced by a sentinel byte while streaming. A true
//! period of the original text becomes a k-mismatch period of the rewritten
//! one whose mismatches all involve the sentinel, for a budget of twice the
//! wildcard count: one wildcard can sit on either side of an alignment.

use std::cell::Cell;
use std::io;
use std::rc::Rc;

use thiserror::Error;

use crate::periods::{detect_kmismatch_periods, CharSource, PeriodError, PeriodReport, RunStats, StreamConfig};

pub const DEFAULT_WILDCARD: u8 = b'?';
pub const SENTINEL: u8 = b'#';

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct WildcardConfig {
    pub n: u64,
    pub wildcard: u8,
    /// Largest number of wildcards the stream may contain.
    pub max_wildcards: usize,
    pub seed: u64,
    pub retry_limit: u32,
    pub compression: bool,
    pub small_input_oracle: bool,
}

impl WildcardConfig {
    pub fn new(n: u64, max_wildcards: usize) -> WildcardConfig {
        WildcardConfig { n, wildcard: DEFAULT_WILDCARD, max_wildcards, seed: 0, retry_limit: 3, compression: false, small_input_oracle: true }
    }

    pub fn with_wildcard(mut self, b: u8) -> Self {
        self.wildcard = b;
        self
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    /// Configuration of the underlying mismatch detector.
    pub fn stream_config(&self) -> StreamConfig {
        let mut cfg = StreamConfig::new(self.n, 2 * self.max_wildcards).with_seed(self.seed);
        cfg.retry_limit = self.retry_limit;
        cfg.compression = self.compression;
        cfg.small_input_oracle = self.small_input_oracle;
        cfg
    }
}

#[derive(Debug, Error)]
pub enum WildcardError {
    #[error("byte {byte:#04x} at position {pos} equals the sentinel")]
    SentinelCollision { pos: u64, byte: u8 },
    #[error("more than {max} wildcards in the stream")]
    TooManyWildcards { max: usize },
    #[error("wildcard byte must differ from the sentinel")]
    SentinelWildcard,
    #[error(transparent)]
    Period(#[from] PeriodError),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct WildcardDetection {
    /// Ascending; every mismatch entry has the sentinel on one side.
    pub periods: Vec<PeriodReport>,
    pub wildcards: usize,
    pub stats: RunStats,
    pub warning: bool,
}

#[derive(Debug, Clone, Copy)]
enum Abort {
    Collision { pos: u64, byte: u8 },
    TooMany,
}

struct Substitute<'a> {
    inner: &'a mut dyn CharSource,
    wildcard: u8,
    max: usize,
    pos: u64,
    count: usize,
    abort: Rc<Cell<Option<Abort>>>,
}

impl Substitute<'_> {
    fn fail(&self, a: Abort) -> io::Error {
        self.abort.set(Some(a));
        io::Error::new(io::ErrorKind::InvalidData, "wildcard stream rejected")
    }
}

impl CharSource for Substitute<'_> {
    fn next_byte(&mut self) -> io::Result<Option<u8>> {
        let Some(b) = self.inner.next_byte()? else {
            return Ok(None);
        };
        self.pos += 1;
        if b == self.wildcard {
            self.count += 1;
            if self.count > self.max {
                return Err(self.fail(Abort::TooMany));
            }
            return Ok(Some(SENTINEL));
        }
        if b == SENTINEL {
            return Err(self.fail(Abort::Collision { pos: self.pos, byte: b }));
        }
        Ok(Some(b))
    }

    fn rewind(&mut self) -> io::Result<bool> {
        self.pos = 0;
        self.count = 0;
        self.inner.rewind()
    }
}

/// All periods `p` in `[1..n/2]` of a text whose wildcard positions match
/// any character.
pub fn detect_wildcard_periods(
    source: &mut dyn CharSource,
    cfg: &WildcardConfig,
) -> Result<WildcardDetection, WildcardError> {
    if cfg.wildcard == SENTINEL {
        return Err(WildcardError::SentinelWildcard);
    }
    let abort = Rc::new(Cell::new(None));
    let mut sub =
        Substitute { inner: source, wildcard: cfg.wildcard, max: cfg.max_wildcards, pos: 0, count: 0, abort: abort.clone() };
    let res = detect_kmismatch_periods(&mut sub, &cfg.stream_config());
    let det = match (res, abort.get()) {
        (_, Some(Abort::TooMany)) => return Err(WildcardError::TooManyWildcards { max: cfg.max_wildcards }),
        (_, Some(Abort::Collision { pos, byte })) => return Err(WildcardError::SentinelCollision { pos, byte }),
        (r, None) => r?,
    };
    let half = cfg.n / 2;
    let periods = det
        .periods
        .into_iter()
        .filter(|r| r.period <= half && r.mi.entries().iter().all(|m| m.left == SENTINEL || m.right == SENTINEL))
        .collect();
    Ok(WildcardDetection { periods, wildcards: sub.count, stats: det.stats, warning: det.warning })
}

/// Convenience wrapper over an in-memory text.
pub fn detect_wildcards_in_slice(t: &[u8], cfg: &WildcardConfig) -> Result<WildcardDetection, WildcardError> {
    let mut src = crate::periods::SliceSource::new(t);
    detect_wildcard_periods(&mut src, cfg)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn periods(t: &[u8], max: usize) -> Vec<u64> {
        let d = detect_wildcards_in_slice(t, &WildcardConfig::new(t.len() as u64, max)).unwrap();
        d.periods.iter().map(|r| r.period).collect()
    }

    #[test]
    fn small_examples() {
        assert_eq!(periods(b"a?aaa", 1), vec![1, 2]);
        assert_eq!(periods(b"ab?ab", 1), vec![1]);
        assert_eq!(periods(b"abcabcab", 0), vec![1, 4]);
    }

    #[test]
    fn rejects_bad_streams() {
        let cfg = WildcardConfig::new(5, 1);
        assert!(matches!(
            detect_wildcards_in_slice(b"a??aa", &cfg),
            Err(WildcardError::TooManyWildcards { max: 1 })
        ));
        assert!(matches!(
            detect_wildcards_in_slice(b"ab#aa", &cfg),
            Err(WildcardError::SentinelCollision { pos: 3, .. })
        ));
        assert!(matches!(
            detect_wildcards_in_slice(b"aaaaa", &WildcardConfig::new(5, 1).with_wildcard(SENTINEL)),
            Err(WildcardError::SentinelWildcard)
        ));
    }
}
