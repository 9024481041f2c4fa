//! The level pipeline for texts whose level pattern is close to a periodic
//! string `Q*` with a short primitive `Q`.
//!
//! Phases: find `|Q|` by matching `P[1..ell/2]` against the text, recover
//! `sk(Q)` and `w(Q)` by majority vote over blocks of length `|Q|`, extend
//! the prefix `T[1..ell']` while it stays within `2k` of `Q*`, then collect
//! candidates either through a bounded table (the extension stopped early)
//! or as an arithmetic progression (it did not).

use std::collections::BTreeMap;

use crate::matcher::{Cascade, Hit, MajorityVote};
use crate::periods::tables::{candidate_test, CandidateOutcome, CandidateTables, PeriodReport};
use crate::periods::text::TextState;
use crate::periods::weight::WeightValue;
use crate::sketch::{Comparison, KMismatchSketch, MismatchInfo, Side, SketchError};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) enum PeriodicFailure {
    /// No approximate period was found in time.
    NotFound,
    /// Too many candidates in the early-stop case.
    Bottom,
    /// The recovered structure contradicts itself; only a bad sketch does this.
    Inconsistent,
}

impl From<SketchError> for PeriodicFailure {
    fn from(_: SketchError) -> Self {
        PeriodicFailure::Inconsistent
    }
}

/// Static parameters of one level.
#[derive(Debug, Clone, Copy)]
pub(crate) struct PeriodicParams {
    pub n: u64,
    pub k: usize,
    pub kk: usize,
    pub j: u32,
    pub ell: u64,
    pub lo: u64,
    pub hi: u64,
    pub capacity: usize,
}

struct FindQ {
    cascade: Cascade,
    half: u64,
    deadline: u64,
}

struct Vote {
    q: u64,
    lambda: u64,
    next: u64,
    prev: Option<(KMismatchSketch, WeightValue)>,
    vote: MajorityVote<(KMismatchSketch, WeightValue)>,
    remaining: usize,
}

/// Speculative sketch of the `r` characters after an occurrence of `P[..lambda]`.
struct Spec {
    start: u64,
    end: u64,
    r: u64,
    prefix: KMismatchSketch,
    w_prefix: WeightValue,
    window: Option<(KMismatchSketch, WeightValue)>,
}

/// An occurrence of the shorter extension pattern, waiting for the longer one.
struct Held {
    t: u64,
    len: u64,
    due: u64,
    prefix: KMismatchSketch,
    w_t: WeightValue,
    mi: MismatchInfo,
    suf: Option<KMismatchSketch>,
}

struct FirstOcc {
    start: u64,
    prefix: KMismatchSketch,
    w_prefix: WeightValue,
    mi: MismatchInfo,
}

enum Ext {
    Waiting,
    Running,
    /// `T[1..l1]` exceeded `2k` mismatches with `Q*`; `T[1..l2]` did not.
    Early { l1: u64, l2: u64, mi2: MismatchInfo },
    /// Reached the loop bound at `l1`.
    Full { l1: u64, mi1: MismatchInfo },
}

struct Active {
    q: u64,
    lambda: u64,
    bound: u64,
    sk_q3: KMismatchSketch,
    sk_q: KMismatchSketch,
    w_q: WeightValue,
    ext: Ext,
    cur: u64,
    pow3: KMismatchSketch,
    mi_cur: MismatchInfo,
    w_cur: WeightValue,
    mi_pq: Option<MismatchInfo>,
    lambda_snap: Option<(KMismatchSketch, WeightValue)>,
    rho_snap: Option<(KMismatchSketch, WeightValue)>,
    /// `Q[..n mod q]`.
    q_rho: Option<(KMismatchSketch, WeightValue)>,
    /// `Q[..r]` with `r` fixed by the first full-pattern occurrence.
    q_r: Option<(KMismatchSketch, WeightValue)>,
    block_snap: Option<(u64, KMismatchSketch)>,
    spec: Vec<Spec>,
    held: Vec<Held>,
    tables: CandidateTables,
    pending: Vec<Held>,
    first: Option<FirstOcc>,
    last_start: u64,
    scheduled: BTreeMap<u64, Option<KMismatchSketch>>,
}

enum Phase {
    FindQ(FindQ),
    Vote(Vote),
    Active(Box<Active>),
    Failed(PeriodicFailure),
}

pub(crate) struct PeriodicPath {
    par: PeriodicParams,
    phase: Phase,
}

fn times(w: WeightValue, m: u64) -> WeightValue {
    w.map(|x| x * m as i64)
}

impl PeriodicPath {
    /// `None` when the level pattern is too short to have an approximate period.
    pub fn new(par: PeriodicParams) -> Option<PeriodicPath> {
        let half = par.ell / 2;
        let limit = par.ell / (128 * par.kk as u64);
        if limit == 0 || half == 0 {
            return None;
        }
        let last = limit + 1;
        let mut cascade = Cascade::new(8 * par.kk, 2, last, half + last - 1);
        cascade.announce_target(half);
        Some(PeriodicPath { par, phase: Phase::FindQ(FindQ { cascade, half, deadline: half + limit }) })
    }

    /// `|Q|`, once known.
    pub fn q(&self) -> Option<u64> {
        match &self.phase {
            Phase::Vote(v) => Some(v.q),
            Phase::Active(a) => Some(a.q),
            _ => None,
        }
    }

    /// `(ell', exceeded)` once the extension has stopped.
    pub fn extension(&self) -> Option<(u64, bool)> {
        match &self.phase {
            Phase::Active(a) => match a.ext {
                Ext::Early { l1, .. } => Some((l1, true)),
                Ext::Full { l1, .. } => Some((l1, false)),
                _ => None,
            },
            _ => None,
        }
    }

    /// Sketch budgets still read from the text builder and the ladder.
    pub fn budgets(&self) -> (usize, usize) {
        let kk = self.par.kk;
        match &self.phase {
            Phase::FindQ(_) => (8 * kk, 8 * kk),
            Phase::Vote(_) => (3 * kk, 0),
            Phase::Active(a) if matches!(a.ext, Ext::Waiting | Ext::Running) => (3 * kk, 0),
            _ => (0, 0),
        }
    }

    /// Lengths that must be reported by the level cascade, including the
    /// next extension length while it is still unknown whether it is needed.
    pub fn targets(&self) -> Vec<u64> {
        match &self.phase {
            Phase::FindQ(_) | Phase::Vote(_) => vec![self.par.ell],
            Phase::Failed(_) => Vec::new(),
            Phase::Active(a) => {
                let mut out = Vec::new();
                if a.q_r.is_none() {
                    out.push(self.par.ell);
                    out.push(a.lambda);
                }
                match &a.ext {
                    Ext::Waiting => out.extend([a.lambda, a.lambda + a.q]),
                    Ext::Running => out.extend([a.cur, a.cur + a.q]),
                    Ext::Early { l1, l2, .. } => {
                        out.push(*l1);
                        out.push(*l2);
                    }
                    Ext::Full { l1, .. } => out.push(*l1),
                }
                out
            }
        }
    }

    fn fail(&mut self, f: PeriodicFailure) {
        self.phase = Phase::Failed(f);
    }

    /// Runs before the level cascade at each position.
    pub fn pre_step(&mut self, text: &TextState) {
        if let Err(f) = self.try_pre_step(text) {
            self.fail(f);
        }
    }

    fn try_pre_step(&mut self, text: &TextState) -> Result<(), PeriodicFailure> {
        let pos = text.pos();
        let par = self.par;
        if let Phase::FindQ(fq) = &mut self.phase {
            if pos == fq.half {
                fq.cascade.add_target(fq.half, text.snapshot(8 * par.kk));
            }
            let hits = fq.cascade.advance(pos, text);
            if let Some(hit) = hits.first() {
                let q = hit.start - 1;
                if par.ell / q < 3 {
                    return Err(PeriodicFailure::NotFound);
                }
                self.phase = Phase::Vote(Vote {
                    q,
                    lambda: (par.ell / q - 2) * q,
                    next: pos.div_ceil(q) * q,
                    prev: None,
                    vote: MajorityVote::new(),
                    remaining: 12 * par.kk,
                });
            } else if pos >= fq.deadline {
                return Err(PeriodicFailure::NotFound);
            } else {
                return Ok(());
            }
        }
        if let Phase::Vote(v) = &mut self.phase {
            if pos != v.next {
                return Ok(());
            }
            let snap = text.snapshot(3 * par.kk);
            let w = text.weight();
            if let Some((prev, pw)) = v.prev.take() {
                let block = KMismatchSketch::split(&snap, &prev, Side::Left)?;
                v.vote.push((block, text.plugin().subtract(w, pw)));
                v.remaining -= 1;
            }
            v.prev = Some((snap, w));
            v.next += v.q;
            if v.remaining > 0 {
                return Ok(());
            }
            if pos > v.lambda {
                return Err(PeriodicFailure::NotFound);
            }
            let (q, lambda) = (v.q, v.lambda);
            let vote = std::mem::take(&mut v.vote);
            let (sk_q3, w_q) = vote.finish().map_err(|_| PeriodicFailure::NotFound)?;
            let bound = if par.j >= 3 { 2 * par.ell } else { (2 * par.ell).min(par.n + 1 - q) };
            let epoch = sk_q3.epoch();
            self.phase = Phase::Active(Box::new(Active {
                q,
                lambda,
                bound,
                sk_q: sk_q3.truncate(par.k),
                sk_q3,
                w_q,
                ext: Ext::Waiting,
                cur: 0,
                pow3: KMismatchSketch::empty(3 * par.kk, epoch),
                mi_cur: MismatchInfo::empty(),
                w_cur: None,
                mi_pq: None,
                lambda_snap: None,
                rho_snap: None,
                q_rho: None,
                q_r: None,
                block_snap: None,
                spec: Vec::new(),
                held: Vec::new(),
                tables: CandidateTables::new(par.capacity),
                pending: Vec::new(),
                first: None,
                last_start: 0,
                scheduled: BTreeMap::new(),
            }));
        }
        if let Phase::Active(a) = &mut self.phase {
            a.extend(&par, text)?;
        }
        Ok(())
    }

    /// Consumes the level cascade's hits at the current position.
    pub fn on_hits(&mut self, hits: &[Hit], text: &TextState) {
        let par = self.par;
        let res = match &mut self.phase {
            Phase::Active(a) => hits.iter().try_for_each(|h| a.on_hit(&par, h, text)),
            _ => Ok(()),
        };
        if let Err(f) = res {
            self.fail(f);
        }
    }

    /// Runs after the hits at each position.
    pub fn post_step(&mut self, text: &TextState) {
        let par = self.par;
        let res = match &mut self.phase {
            Phase::Active(a) => a.post_step(&par, text),
            _ => Ok(()),
        };
        if let Err(f) = res {
            self.fail(f);
        }
    }

    pub fn heap_bytes(&self) -> usize {
        match &self.phase {
            Phase::FindQ(fq) => fq.cascade.live_bytes(),
            Phase::Vote(v) => {
                2 * KMismatchSketch::bytes_for_budget(3 * self.par.kk)
                    + v.prev.as_ref().map_or(0, |(s, _)| s.heap_bytes())
            }
            Phase::Active(a) => a.heap_bytes(),
            Phase::Failed(_) => 0,
        }
    }

    pub fn finalize(&self, text: &TextState) -> Result<Vec<PeriodReport>, PeriodicFailure> {
        match &self.phase {
            Phase::Failed(f) => Err(*f),
            Phase::FindQ(_) | Phase::Vote(_) => Err(PeriodicFailure::NotFound),
            Phase::Active(a) => a.finalize(&self.par, text),
        }
    }
}

impl Active {
    fn extend(&mut self, par: &PeriodicParams, text: &TextState) -> Result<(), PeriodicFailure> {
        let pos = text.pos();
        let q = self.q;
        let rho = par.n % q;
        match self.ext {
            Ext::Waiting => {
                if pos == self.lambda {
                    self.cur = pos;
                    self.pow3 = self.sk_q3.power(pos / q)?;
                    self.w_cur = text.weight();
                    self.lambda_snap = Some((text.snapshot(par.k), text.weight()));
                    self.ext = Ext::Running;
                    if rho == 0 {
                        self.q_rho = Some((KMismatchSketch::empty(par.k, self.sk_q.epoch()), text.plugin().identity()));
                    }
                }
                Ok(())
            }
            Ext::Running => {
                if rho > 0 && pos == self.lambda + rho {
                    self.rho_snap = Some((text.snapshot(par.k), text.weight()));
                }
                if pos > self.cur && pos < self.cur + q && pos % q == rho {
                    self.block_snap = Some((pos, text.snapshot(par.k)));
                }
                if pos != self.cur + q {
                    return Ok(());
                }
                self.pow3 = self.pow3.concat(&self.sk_q3)?;
                let within = match text.snapshot(3 * par.kk).compare(&self.pow3)? {
                    Comparison::Within(mi) if mi.len() <= 2 * par.kk => Some(mi),
                    _ => None,
                };
                let Some(mi) = within else {
                    if self.cur == self.lambda {
                        return Err(PeriodicFailure::Inconsistent);
                    }
                    self.ext = Ext::Early { l1: pos, l2: self.cur, mi2: std::mem::take(&mut self.mi_cur) };
                    self.pow3 = KMismatchSketch::empty(0, self.pow3.epoch());
                    return Ok(());
                };
                if pos == self.lambda + q {
                    self.recover_rho(par, &mi, text)?;
                    self.mi_pq = Some(mi.clone());
                }
                self.cur = pos;
                self.mi_cur = mi;
                self.w_cur = text.weight();
                self.block_snap = None;
                self.held.clear();
                if self.cur >= self.bound || self.cur + q > par.n {
                    self.ext = Ext::Full { l1: self.cur, mi1: std::mem::take(&mut self.mi_cur) };
                    self.pow3 = KMismatchSketch::empty(0, self.pow3.epoch());
                }
                Ok(())
            }
            _ => Ok(()),
        }
    }

    /// `sk(Q[..n mod q])` from `T[lambda+1..lambda+rho]` and its mismatches with `Q*`.
    fn recover_rho(&mut self, par: &PeriodicParams, mi_pq: &MismatchInfo, text: &TextState) -> Result<(), PeriodicFailure> {
        let (Some((a, wa)), Some((b, wb))) = (self.lambda_snap.take(), self.rho_snap.take()) else {
            return Ok(());
        };
        let rho = par.n % self.q;
        let mi = mi_pq.window(self.lambda + 1, rho);
        let seg = KMismatchSketch::split(&b, &a, Side::Left)?;
        let w = text.plugin().update_from_mi(text.plugin().subtract(wb, wa), &mi).ok();
        self.q_rho = Some((seg.apply_mi(&mi)?, w));
        Ok(())
    }

    fn on_hit(&mut self, par: &PeriodicParams, hit: &Hit, text: &TextState) -> Result<(), PeriodicFailure> {
        let pos = text.pos();
        let plugin = text.plugin();
        if self.q_r.is_none() && hit.len == self.lambda {
            let r = (par.n - 2 * (hit.start - 1)) % self.q;
            let window = (r == 0).then(|| (KMismatchSketch::empty(par.k, self.sk_q.epoch()), plugin.identity()));
            self.spec.push(Spec {
                start: hit.start,
                end: pos,
                r,
                prefix: text.snapshot(par.k),
                w_prefix: text.weight(),
                window,
            });
        }
        if self.q_r.is_none() && hit.len == par.ell {
            if let Some(sp) = self.spec.iter().find(|s| s.start == hit.start) {
                if let (Some((win, ww)), Some(mi_pq)) = (&sp.window, &self.mi_pq) {
                    let occ = hit.mi.window(self.lambda + 1, sp.r);
                    let pq = mi_pq.window(self.lambda + 1, sp.r);
                    let mi = MismatchInfo::chain(&occ, &pq);
                    let w = plugin.update_from_mi(*ww, &mi).ok();
                    self.q_r = Some((win.apply_mi(&mi)?, w));
                    self.spec.clear();
                }
            }
        }
        let (short, long) = match &self.ext {
            Ext::Running => (Some(self.cur), None),
            Ext::Early { l1, l2, .. } => (Some(*l2), Some(*l1)),
            Ext::Full { l1, .. } => {
                if hit.len == *l1 {
                    self.on_full_hit(par, hit, *l1, text);
                }
                return Ok(());
            }
            Ext::Waiting => return Ok(()),
        };
        if Some(hit.len) == short {
            let window = plugin.update_from_mi(self.w_cur, &hit.mi.swapped()).ok();
            self.held.push(Held {
                t: hit.start - 1,
                len: hit.len,
                due: pos + self.q,
                prefix: hit.prefix.clone(),
                w_t: plugin.subtract(text.weight(), window),
                mi: hit.mi.clone(),
                suf: None,
            });
        }
        if Some(hit.len) == long {
            let t = hit.start - 1;
            let l2 = short.expect("early case has both lengths");
            let Some(i) = self.held.iter().position(|h| h.t == t && h.len == l2) else {
                return Ok(());
            };
            let rec = self.held.swap_remove(i);
            self.tables.insert_pref(t, rec.prefix.clone(), rec.w_t);
            if let Some(s) = &rec.suf {
                self.tables.insert_suf(t, s.clone());
            } else if par.n - t <= t + l2 {
                self.pending.push(rec);
            }
        }
        Ok(())
    }

    fn on_full_hit(&mut self, par: &PeriodicParams, hit: &Hit, l1: u64, text: &TextState) {
        self.last_start = hit.start;
        if self.first.is_some() {
            return;
        }
        let plugin = text.plugin();
        let window = plugin.update_from_mi(self.w_cur, &hit.mi.swapped()).ok();
        self.first = Some(FirstOcc {
            start: hit.start,
            prefix: hit.prefix.clone(),
            w_prefix: plugin.subtract(text.weight(), window),
            mi: hit.mi.clone(),
        });
        let covered = hit.start + l1 - 1;
        let last = par.hi.min((par.n + 1).saturating_sub(l1));
        let mut t = hit.start;
        while t <= last {
            let y = par.n + 1 - t;
            if y > covered {
                self.scheduled.insert(y, None);
            }
            t += self.q;
        }
    }

    fn post_step(&mut self, par: &PeriodicParams, text: &TextState) -> Result<(), PeriodicFailure> {
        let pos = text.pos();
        for sp in &mut self.spec {
            if sp.window.is_none() && pos == sp.end + sp.r {
                let seg = KMismatchSketch::split(&text.snapshot(par.k), &sp.prefix, Side::Left)?;
                sp.window = Some((seg, text.plugin().subtract(text.weight(), sp.w_prefix)));
            }
        }
        self.spec.retain(|s| s.start + par.ell - 1 > pos);
        for h in &mut self.held {
            if h.suf.is_none() && par.n - h.t == pos {
                h.suf = Some(text.snapshot(par.k));
            }
        }
        self.held.retain(|h| h.due > pos);
        if pos <= par.n && self.tables.wants_suf(par.n - pos) {
            self.tables.insert_suf(par.n - pos, text.snapshot(par.k));
        }
        if !self.pending.is_empty() {
            if let Ext::Early { mi2, .. } = &self.ext {
                let mi2 = mi2.clone();
                let mut keep = Vec::new();
                for rec in std::mem::take(&mut self.pending) {
                    let len = par.n - 2 * rec.t;
                    if len % self.q != 0 && self.q_part(len % self.q).is_none() {
                        keep.push(rec);
                        continue;
                    }
                    let mi = MismatchInfo::chain(&rec.mi, &mi2).window(1, len);
                    let seg = self.synth(len, &mi)?;
                    self.tables.insert_suf(rec.t, rec.prefix.concat(&seg)?);
                }
                self.pending = keep;
            }
        }
        if let Some(slot) = self.scheduled.get_mut(&pos) {
            *slot = Some(text.snapshot(par.k));
        }
        Ok(())
    }

    /// A stored `Q[..rem]`.
    fn q_part(&self, rem: u64) -> Option<(&KMismatchSketch, WeightValue)> {
        [&self.q_r, &self.q_rho]
            .into_iter()
            .flatten()
            .find(|(s, _)| s.len() == rem)
            .map(|(s, w)| (s, *w))
    }

    /// `sk(Q*[1..len])`.
    fn q_string(&self, len: u64) -> Result<KMismatchSketch, PeriodicFailure> {
        let rem = len % self.q;
        let body = self.sk_q.power(len / self.q)?;
        if rem == 0 {
            return Ok(body);
        }
        let (part, _) = self.q_part(rem).ok_or(PeriodicFailure::Inconsistent)?;
        Ok(body.concat(part)?)
    }

    /// Sketch of the string of length `len` whose mismatches with `Q*` are `mi`.
    fn synth(&self, len: u64, mi: &MismatchInfo) -> Result<KMismatchSketch, PeriodicFailure> {
        Ok(self.q_string(len)?.apply_mi(&mi.swapped())?)
    }

    /// Weight of the string of length `len` (a multiple of `q`) whose mismatches with `Q*` are `mi`.
    fn synth_weight(&self, len: u64, mi: &MismatchInfo, text: &TextState) -> WeightValue {
        debug_assert_eq!(len % self.q, 0);
        text.plugin().update_from_mi(times(self.w_q, len / self.q), &mi.swapped()).ok()
    }

    fn finalize(&self, par: &PeriodicParams, text: &TextState) -> Result<Vec<PeriodReport>, PeriodicFailure> {
        let sk_t = text.snapshot(par.k);
        let w_t = text.weight();
        let plugin = text.plugin();
        let mut out = Vec::new();
        let test = |p: u64, pre: &KMismatchSketch, w_pre: WeightValue, suf: &KMismatchSketch| -> Result<Option<PeriodReport>, PeriodicFailure> {
            Ok(match candidate_test(&sk_t, pre, suf, p, par.n)? {
                CandidateOutcome::Within(mi) => Some(PeriodReport { period: p, weight: plugin.subtract(w_t, w_pre), mi }),
                CandidateOutcome::NotPeriod => None,
            })
        };
        let (l1, e, mi_e) = match &self.ext {
            Ext::Early { l1, l2, mi2 } => {
                if self.tables.is_bottom() {
                    return Err(PeriodicFailure::Bottom);
                }
                if !self.pending.is_empty() {
                    return Err(PeriodicFailure::Inconsistent);
                }
                for r in self.tables.finalize(&sk_t, w_t, plugin)?.unwrap_or_default() {
                    out.push(r);
                }
                (*l1, *l2, mi2)
            }
            Ext::Full { l1, mi1 } => {
                if let Some(f) = &self.first {
                    let mi_w = MismatchInfo::chain(&f.mi, mi1);
                    let mut t = f.start;
                    while t <= self.last_start {
                        let d = t - f.start;
                        let wm = mi_w.window(1, d);
                        let pre = f.prefix.concat(&self.synth(d, &wm)?)?;
                        let w_pre = plugin.combine(f.w_prefix, self.synth_weight(d, &wm, text));
                        let y = par.n + 1 - t;
                        let suf = match self.scheduled.get(&y) {
                            Some(Some(s)) => s.clone(),
                            Some(None) => return Err(PeriodicFailure::Inconsistent),
                            None => {
                                let len = (y + 1).checked_sub(f.start).ok_or(PeriodicFailure::Inconsistent)?;
                                f.prefix.concat(&self.synth(len, &mi_w.window(1, len))?)?
                            }
                        };
                        out.extend(test(t, &pre, w_pre, &suf)?);
                        t += self.q;
                    }
                }
                (*l1, *l1, mi1)
            }
            _ => return Err(PeriodicFailure::Inconsistent),
        };
        // Periods whose alignment no longer fits an occurrence of T[1..l1].
        let first_tail = (par.n + 2).saturating_sub(l1).max(par.lo);
        let mut t = first_tail + (self.q - (first_tail - 1) % self.q) % self.q;
        while t <= par.hi {
            let d = t - 1;
            if d > e {
                return Err(PeriodicFailure::Inconsistent);
            }
            let wm = mi_e.window(1, d);
            let pre = self.synth(d, &wm)?;
            let w_pre = self.synth_weight(d, &wm, text);
            let y = par.n + 1 - t;
            let suf = if y <= e {
                self.synth(y, &mi_e.window(1, y))?
            } else {
                match &self.block_snap {
                    Some((p, s)) if *p == y => s.clone(),
                    _ => return Err(PeriodicFailure::Inconsistent),
                }
            };
            out.extend(test(t, &pre, w_pre, &suf)?);
            t += self.q;
        }
        out.sort_by_key(|r| r.period);
        out.dedup_by_key(|r| r.period);
        Ok(out)
    }

    fn heap_bytes(&self) -> usize {
        let sk = |s: &KMismatchSketch| s.heap_bytes();
        let opt = |o: &Option<(KMismatchSketch, WeightValue)>| o.as_ref().map_or(0, |(s, _)| sk(s));
        let mut b = sk(&self.sk_q3) + sk(&self.sk_q) + sk(&self.pow3);
        b += opt(&self.lambda_snap) + opt(&self.rho_snap) + opt(&self.q_rho) + opt(&self.q_r);
        b += self.block_snap.as_ref().map_or(0, |(_, s)| sk(s));
        b += self.mi_cur.len() * 16 + self.mi_pq.as_ref().map_or(0, |m| m.len() * 16);
        b += self.spec.iter().map(|s| sk(&s.prefix) + s.window.as_ref().map_or(0, |(w, _)| sk(w)) + 64).sum::<usize>();
        let held = |h: &Held| sk(&h.prefix) + h.suf.as_ref().map_or(0, sk) + h.mi.len() * 16 + 64;
        b += self.held.iter().map(held).sum::<usize>() + self.pending.iter().map(held).sum::<usize>();
        b += self.tables.heap_bytes();
        b += self.first.as_ref().map_or(0, |f| sk(&f.prefix) + f.mi.len() * 16);
        b += self.scheduled.values().map(|s| s.as_ref().map_or(8, sk)).sum::<usize>();
        b
    }
}
