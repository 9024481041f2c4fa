//! Runs every level pipeline and the direct range over one pass of the text.

use std::collections::BTreeSet;
use std::io;
use std::time::Instant;

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha20Rng;
use thiserror::Error;

use crate::matcher::Cascade;
use crate::oracle::naive_kmismatch_periods;
use crate::periods::direct::DirectRange;
use crate::periods::nonperiodic::NonPeriodic;
use crate::periods::periodic::{PeriodicParams, PeriodicPath};
use crate::periods::plan::{level_plans, LevelPlan, PathChoice, StreamConfig};
use crate::periods::source::CharSource;
use crate::periods::stats::{LevelSummary, RunStats};
use crate::periods::tables::PeriodReport;
use crate::periods::text::TextState;
use crate::periods::weight::WeightValue;
use crate::sketch::{Epoch, MismatchInfo, SketchError};

#[derive(Debug, Error)]
pub enum PeriodError {
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error("stream yielded {got} characters, expected {expected}")]
    LengthMismatch { expected: u64, got: u64 },
    #[error("detection failed on {attempts} seeds")]
    RetryExhausted { attempts: u32 },
    #[error(transparent)]
    Io(#[from] io::Error),
    #[error(transparent)]
    Sketch(#[from] SketchError),
}

/// Result of a detector run.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Detection {
    /// Ascending, one entry per period.
    pub periods: Vec<PeriodReport>,
    pub stats: RunStats,
    /// A single-shot source failed internally; `periods` may be incomplete.
    pub warning: bool,
}

struct Level {
    plan: LevelPlan,
    k: usize,
    cascade: Cascade,
    w_ell: WeightValue,
    np: Option<NonPeriodic>,
    per: Option<PeriodicPath>,
    prefer_periodic: bool,
}

impl Level {
    fn new(plan: LevelPlan, cfg: &StreamConfig) -> Level {
        let kk = cfg.kk();
        let mut cascade = Cascade::new(cfg.k, plan.lo, plan.hi, cfg.n);
        cascade.set_compression(cfg.compression.then_some(576 * kk as u64));
        let per = match cfg.path {
            PathChoice::NonPeriodic => None,
            _ => PeriodicPath::new(PeriodicParams {
                n: cfg.n,
                k: cfg.k,
                kk,
                j: plan.j,
                ell: plan.ell,
                lo: plan.lo,
                hi: plan.hi,
                capacity: cfg.capacity(),
            }),
        };
        let np = Some(NonPeriodic::new(plan.ell, cfg.n, cfg.k, cfg.capacity()));
        Level { plan, k: cfg.k, cascade, w_ell: None, np, per, prefer_periodic: cfg.path == PathChoice::Periodic }
    }

    fn sync_targets(&mut self, text: &TextState) {
        let pos = text.pos();
        let mut want = BTreeSet::new();
        if self.np.as_ref().is_some_and(|np| !np.is_bottom()) {
            want.insert(self.plan.ell);
        }
        if let Some(per) = &self.per {
            want.extend(per.targets());
        }
        let have: Vec<u64> = self.cascade.targets().collect();
        for len in &have {
            if !want.contains(len) {
                self.cascade.remove_target(*len);
            }
        }
        for &len in want.range(pos..) {
            if len == pos {
                if !self.cascade.has_pattern(len) {
                    self.cascade.add_target(len, text.snapshot(self.k));
                }
            } else {
                self.cascade.announce_target(len);
            }
        }
    }

    fn step(&mut self, text: &TextState) {
        let pos = text.pos();
        if pos == self.plan.ell {
            self.w_ell = text.weight();
        }
        if let Some(per) = &mut self.per {
            per.pre_step(text);
        }
        self.sync_targets(text);
        let hits = self.cascade.advance(pos, text);
        if let Some(np) = &mut self.np {
            for h in &hits {
                np.on_hit(h, self.w_ell, text);
            }
            np.step(text);
        }
        if let Some(per) = &mut self.per {
            per.on_hits(&hits, text);
            per.post_step(text);
        }
    }

    fn budgets(&self) -> (usize, usize) {
        self.per.as_ref().map_or((0, 0), PeriodicPath::budgets)
    }

    /// The level's periods, or `None` when no pipeline could vouch for them.
    fn finalize(
        &self,
        text: &TextState,
        summary: &mut LevelSummary,
        instrument: bool,
    ) -> Result<Option<Vec<PeriodReport>>, SketchError> {
        summary.nonperiodic_bottom = self.np.as_ref().map(NonPeriodic::is_bottom);
        if let (true, Some(np)) = (instrument, &self.np) {
            (summary.pref_keys, summary.suf_keys) = np.tables().keys();
        }
        if let Some(per) = &self.per {
            summary.q = per.q();
            summary.extension = per.extension();
        }
        if self.prefer_periodic {
            if let Some(Ok(res)) = self.per.as_ref().map(|p| p.finalize(text)) {
                summary.used = "periodic".into();
                return Ok(Some(res));
            }
        }
        if let Some(np) = &self.np {
            if let Some(res) = np.finalize(text)? {
                summary.used = "nonperiodic".into();
                return Ok(Some(res));
            }
        }
        let Some(per) = &self.per else {
            summary.used = "none".into();
            return Ok(None);
        };
        match per.finalize(text) {
            Ok(res) => {
                summary.used = "periodic".into();
                Ok(Some(res))
            }
            Err(f) => {
                summary.periodic_failure = Some(format!("{f:?}"));
                summary.used = "none".into();
                Ok(None)
            }
        }
    }
}

struct Outcome {
    periods: Vec<PeriodReport>,
    failed: bool,
    stats: RunStats,
}

fn read_exact_n(source: &mut dyn CharSource, n: u64) -> Result<Vec<u8>, PeriodError> {
    let mut t = Vec::with_capacity(n as usize);
    while let Some(b) = source.next_byte()? {
        t.push(b);
        if t.len() as u64 > n {
            return Err(PeriodError::LengthMismatch { expected: n, got: t.len() as u64 });
        }
    }
    if (t.len() as u64) < n {
        return Err(PeriodError::LengthMismatch { expected: n, got: t.len() as u64 });
    }
    Ok(t)
}

fn run_naive(source: &mut dyn CharSource, cfg: &StreamConfig) -> Result<Outcome, PeriodError> {
    let t = read_exact_n(source, cfg.n)?;
    let plugin = cfg.weight.plugin();
    let periods = naive_kmismatch_periods(&t, cfg.k)
        .into_iter()
        .filter(|(p, _)| *p <= cfg.last_period())
        .map(|(p, mi)| PeriodReport { period: p, weight: plugin.of_str(&t[p as usize - 1..]), mi })
        .collect();
    Ok(Outcome { periods, failed: false, stats: RunStats { n: cfg.n, k: cfg.k, ..RunStats::default() } })
}

/// One pass with a fixed seed.
fn run_once(source: &mut dyn CharSource, cfg: &StreamConfig, seed: u64) -> Result<Outcome, PeriodError> {
    let (n, k) = (cfg.n, cfg.k);
    let h = n / 2;
    if cfg.small_input_oracle && n <= 64 * (k as u64 + 1) {
        return run_naive(source, cfg);
    }
    let plugin = cfg.weight.plugin();
    let direct_limit = 8 * (2 * k as u64 + 2);
    let mut summaries = Vec::new();
    let mut levels = Vec::new();
    let mut direct_lo = h.max(2);
    for plan in level_plans(n) {
        if plan.is_empty() {
            continue;
        }
        let direct = plan.ell <= direct_limit;
        summaries.push(LevelSummary {
            j: plan.j,
            ell: plan.ell,
            lo: plan.lo,
            hi: plan.hi,
            direct,
            ..LevelSummary::default()
        });
        if direct {
            direct_lo = direct_lo.min(plan.lo);
        } else {
            levels.push(Level::new(plan, cfg));
        }
    }
    let mut direct = DirectRange::new(direct_lo, cfg.last_period(), n, k);
    let budget = levels.iter().map(|l| l.budgets().0).max().unwrap_or(0).max(k);
    let mut text = TextState::new(budget, Epoch::from_seed(seed), plugin.clone())?;
    let mut stats = RunStats { n, k, seed, ..RunStats::default() };

    let step_all = |text: &TextState, levels: &mut Vec<Level>, direct: &mut DirectRange| {
        direct.step(text);
        for lv in levels.iter_mut() {
            lv.step(text);
        }
    };
    step_all(&text, &mut levels, &mut direct);
    let mut read = 0u64;
    while let Some(c) = source.next_byte()? {
        read += 1;
        if read > n {
            return Err(PeriodError::LengthMismatch { expected: n, got: read });
        }
        let started = cfg.instrument.then(Instant::now);
        text.push(c)?;
        step_all(&text, &mut levels, &mut direct);
        let (bb, lb) = levels.iter().fold((k, k), |(a, b), l| {
            let (x, y) = l.budgets();
            (a.max(x), b.max(y))
        });
        if bb < text.budget() {
            text.shrink(bb, lb);
        }
        if let Some(t0) = started {
            stats.char_time.record(t0.elapsed().as_nanos() as u64);
            let matcher: usize = levels.iter().map(|l| l.cascade.live_bytes()).sum();
            let periods: usize = levels
                .iter()
                .map(|l| {
                    l.np.as_ref().map_or(0, NonPeriodic::heap_bytes) + l.per.as_ref().map_or(0, PeriodicPath::heap_bytes)
                })
                .sum::<usize>()
                + direct.heap_bytes();
            stats.peak_bytes.record(text.heap_bytes(), matcher, periods);
        }
    }
    if read < n {
        return Err(PeriodError::LengthMismatch { expected: n, got: read });
    }

    let mut periods = Vec::new();
    if cfg.last_period() >= 1 {
        periods.push(PeriodReport { period: 1, weight: text.weight(), mi: MismatchInfo::empty() });
    }
    periods.extend(direct.finalize(&text)?);
    let mut failed = false;
    for lv in &levels {
        let summary = summaries.iter_mut().find(|s| s.j == lv.plan.j).expect("summary per level");
        match lv.finalize(&text, summary, cfg.instrument)? {
            Some(res) => periods.extend(res),
            None => failed = true,
        }
    }
    for s in summaries.iter_mut().filter(|s| s.direct) {
        s.used = "direct".into();
    }
    periods.sort_by_key(|r| r.period);
    periods.dedup_by_key(|r| r.period);
    stats.levels = summaries;
    Ok(Outcome { periods, failed, stats })
}

/// Seeds for successive attempts: the configured one first.
fn attempt_seeds(seed: u64) -> impl Iterator<Item = u64> {
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    std::iter::once(seed).chain(std::iter::repeat_with(move || rng.next_u64()))
}

/// All k-mismatch periods `p` in `[1..n/2 + delta]` of the streamed text,
/// with `w(T[p..])` and `MI(T[p..], T[..n-p+1])`.
pub fn detect_kmismatch_periods(source: &mut dyn CharSource, cfg: &StreamConfig) -> Result<Detection, PeriodError> {
    cfg.validate().map_err(PeriodError::InvalidConfig)?;
    let attempts = cfg.retry_limit + 1;
    for (i, seed) in attempt_seeds(cfg.seed).take(attempts as usize).enumerate() {
        let mut out = run_once(source, cfg, seed)?;
        out.stats.retries = i as u32;
        if !out.failed {
            return Ok(Detection { periods: out.periods, stats: out.stats, warning: false });
        }
        if !source.rewind()? {
            return Ok(Detection { periods: out.periods, stats: out.stats, warning: true });
        }
    }
    Err(PeriodError::RetryExhausted { attempts })
}

/// Convenience wrapper over an in-memory text.
pub fn detect_in_slice(t: &[u8], cfg: &StreamConfig) -> Result<Detection, PeriodError> {
    let mut src = crate::periods::source::SliceSource::new(t);
    detect_kmismatch_periods(&mut src, cfg)
}
