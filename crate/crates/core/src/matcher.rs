//! Streaming k-mismatch pattern matching by a power-of-two verification
//! cascade, and the Boyer-Moore majority vote.
//!
//! A candidate start `s` is checked at text positions `s + L - 1` for a
//! growing sequence of checkpoint lengths `L` (powers of two, plus the
//! pattern lengths that should be reported). Each check splits the live text
//! sketch against the candidate's stored prefix sketch `sk(T[1..s-1])` and
//! compares the window with the pattern prefix of length `L`.

use std::collections::{BTreeMap, VecDeque};
use std::sync::Arc;

use thiserror::Error;

use crate::periods::weight::{WeightPlugin, WeightValue, ZeroWeight};
use crate::sketch::{Comparison, Epoch, KMismatchSketch, MismatchInfo, Side, SketchBuilder, SketchError};

/// Where a cascade reads the text sketch and the pattern prefix ladder.
pub trait TextView {
    /// Number of text characters read so far.
    fn position(&self) -> u64;
    /// `sk(T[1..position])` truncated to budget `k`.
    fn prefix_snapshot(&self, k: usize) -> KMismatchSketch;
    /// Sketch of the pattern prefix of length `len`, a power of two.
    fn pattern_prefix(&self, len: u64) -> Option<&KMismatchSketch>;
}

/// A checkpoint passed at a reporting length.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Hit {
    pub len: u64,
    pub start: u64,
    /// `MI(T[start..start+len-1], P[1..len])`.
    pub mi: MismatchInfo,
    /// `sk(T[1..start-1])`.
    pub prefix: KMismatchSketch,
}

impl Hit {
    pub fn endpoint(&self) -> u64 {
        self.start + self.len - 1
    }
}

#[derive(Debug, Clone)]
struct Candidate {
    start: u64,
    prefix: KMismatchSketch,
}

/// Members `first, first + step, ...` whose consecutive prefix sketches
/// differ by the same block.
#[derive(Debug, Clone)]
struct Run {
    first: u64,
    step: u64,
    count: u64,
    head: KMismatchSketch,
    block: KMismatchSketch,
    tail: KMismatchSketch,
}

impl Run {
    fn last_start(&self) -> u64 {
        self.first + (self.count - 1) * self.step
    }
}

#[derive(Debug, Clone)]
enum Entry {
    One(Candidate),
    Run(Run),
}

impl Entry {
    fn front_start(&self) -> u64 {
        match self {
            Entry::One(c) => c.start,
            Entry::Run(r) => r.first,
        }
    }
}

#[derive(Debug, Clone, Default)]
struct Queue {
    entries: VecDeque<Entry>,
    members: u64,
    sketches: usize,
    compressed: bool,
}

fn block_between(later: &KMismatchSketch, earlier: &KMismatchSketch) -> KMismatchSketch {
    KMismatchSketch::split(later, earlier, Side::Left).expect("prefix sketches share an epoch")
}

impl Queue {
    fn front_start(&self) -> Option<u64> {
        self.entries.front().map(Entry::front_start)
    }

    fn push(&mut self, c: Candidate, compress_at: Option<u64>) {
        self.members += 1;
        if !self.compressed && compress_at.map_or(false, |th| self.members > th) {
            self.compress();
        }
        if self.compressed && self.try_merge(&c) {
            return;
        }
        self.entries.push_back(Entry::One(c));
        self.sketches += 1;
    }

    fn try_merge(&mut self, c: &Candidate) -> bool {
        let len = self.entries.len();
        if let Some(Entry::Run(run)) = self.entries.back_mut() {
            if c.start == run.last_start() + run.step && block_between(&c.prefix, &run.tail) == run.block {
                run.count += 1;
                run.tail = c.prefix.clone();
                return true;
            }
            return false;
        }
        if len < 2 {
            return false;
        }
        let (Entry::One(a), Entry::One(b)) = (&self.entries[len - 2], &self.entries[len - 1]) else {
            return false;
        };
        if c.start - b.start != b.start - a.start {
            return false;
        }
        let block = block_between(&c.prefix, &b.prefix);
        if block_between(&b.prefix, &a.prefix) != block {
            return false;
        }
        let run = Run {
            first: a.start,
            step: b.start - a.start,
            count: 3,
            head: a.prefix.clone(),
            block,
            tail: c.prefix.clone(),
        };
        self.entries.truncate(len - 2);
        self.entries.push_back(Entry::Run(run));
        self.sketches += 1;
        true
    }

    fn compress(&mut self) {
        let old: Vec<Entry> = self.entries.drain(..).collect();
        self.compressed = true;
        self.sketches = 0;
        for e in old {
            match e {
                Entry::One(c) => {
                    if !self.try_merge(&c) {
                        self.entries.push_back(Entry::One(c));
                        self.sketches += 1;
                    }
                }
                Entry::Run(r) => {
                    self.entries.push_back(Entry::Run(r));
                    self.sketches += 3;
                }
            }
        }
    }

    fn pop_front(&mut self) -> Option<Candidate> {
        let entry = self.entries.front_mut()?;
        self.members -= 1;
        match entry {
            Entry::One(_) => {
                self.sketches -= 1;
                match self.entries.pop_front() {
                    Some(Entry::One(c)) => Some(c),
                    _ => unreachable!(),
                }
            }
            Entry::Run(run) => {
                let out = Candidate { start: run.first, prefix: run.head.clone() };
                run.head = run.head.concat(&run.block).expect("run sketches share an epoch");
                run.first += run.step;
                run.count -= 1;
                if run.count == 1 {
                    let last = Candidate { start: run.first, prefix: run.tail.clone() };
                    *entry = Entry::One(last);
                    self.sketches -= 2;
                }
                Some(out)
            }
        }
    }
}

/// The verification cascade for prefixes of one pattern over a range of
/// candidate starts.
#[derive(Debug, Clone)]
pub struct Cascade {
    budget: usize,
    first_start: u64,
    last_start: u64,
    text_end: u64,
    cap: u64,
    targets: BTreeMap<u64, Option<KMismatchSketch>>,
    queues: BTreeMap<u64, Queue>,
    compress_at: Option<u64>,
    sketch_bytes: usize,
}

impl Cascade {
    /// Candidates start in `[first_start..last_start]`; text positions past
    /// `text_end` are never examined.
    pub fn new(budget: usize, first_start: u64, last_start: u64, text_end: u64) -> Cascade {
        Cascade {
            budget,
            first_start,
            last_start,
            text_end,
            cap: 0,
            targets: BTreeMap::new(),
            queues: BTreeMap::new(),
            compress_at: None,
            sketch_bytes: KMismatchSketch::bytes_for_budget(budget),
        }
    }

    pub fn budget(&self) -> usize {
        self.budget
    }

    /// Store a queue as runs once it holds more than `threshold` candidates.
    pub fn set_compression(&mut self, threshold: Option<u64>) {
        self.compress_at = threshold;
    }

    /// Report every candidate whose prefix of length `len` matches `pattern`.
    /// Must be called no later than text position `len`, and before any
    /// candidate could skip past `len` unless the length was announced.
    pub fn add_target(&mut self, len: u64, pattern: KMismatchSketch) {
        debug_assert_eq!(pattern.len(), len);
        self.targets.insert(len, Some(pattern.truncate(self.budget)));
    }

    /// Declares a target whose sketch arrives through `add_target` by position `len`.
    pub fn announce_target(&mut self, len: u64) {
        self.targets.entry(len).or_insert(None);
    }

    pub fn has_pattern(&self, len: u64) -> bool {
        self.targets.get(&len).is_some_and(Option::is_some)
    }

    pub fn remove_target(&mut self, len: u64) {
        self.targets.remove(&len);
        self.prune();
    }

    pub fn targets(&self) -> impl Iterator<Item = u64> + '_ {
        self.targets.keys().copied()
    }

    /// Keep verifying at powers of two up to `cap` even beyond the largest target.
    pub fn set_cap(&mut self, cap: u64) {
        self.cap = cap;
        self.prune();
    }

    /// Stop creating new candidates after `last`.
    pub fn set_last_start(&mut self, last: u64) {
        self.last_start = last;
    }

    fn effective_cap(&self) -> u64 {
        self.cap.max(self.targets.keys().next_back().copied().unwrap_or(0))
    }

    fn next_len(&self, verified: u64) -> Option<u64> {
        let cap = self.effective_cap();
        let pow = (verified + 1).next_power_of_two();
        let pow = (pow <= cap).then_some(pow);
        let tgt = self.targets.range(verified + 1..).next().map(|(l, _)| *l);
        match (pow, tgt) {
            (Some(a), Some(b)) => Some(a.min(b)),
            (a, b) => a.or(b),
        }
    }

    fn prune(&mut self) {
        let dead: Vec<u64> = self.queues.keys().copied().filter(|&v| self.next_len(v).is_none()).collect();
        for v in dead {
            self.queues.remove(&v);
        }
    }

    /// Drops every candidate and stops creating new ones.
    pub fn clear(&mut self) {
        self.queues.clear();
        self.last_start = 0;
        self.first_start = 1;
    }

    /// Processes text position `pos` (already appended to the view), then
    /// creates the candidate starting at `pos + 1`. Call with `pos = 0`
    /// before the first character.
    pub fn advance(&mut self, pos: u64, view: &dyn TextView) -> Vec<Hit> {
        let mut hits = Vec::new();
        let mut promoted: Vec<(u64, Candidate)> = Vec::new();
        let mut snap: Option<KMismatchSketch> = None;
        let keys: Vec<u64> = self.queues.keys().copied().collect();
        for v in keys {
            let Some(len) = self.next_len(v) else {
                self.queues.remove(&v);
                continue;
            };
            loop {
                let queue = self.queues.get_mut(&v).expect("queue present");
                match queue.front_start() {
                    Some(s) if s + len - 1 <= pos => {}
                    _ => break,
                }
                let cand = queue.pop_front().expect("nonempty queue");
                if cand.start + len - 1 < pos {
                    continue;
                }
                let text = snap.get_or_insert_with(|| view.prefix_snapshot(self.budget));
                let pattern = match self.targets.get(&len) {
                    Some(p) => p.as_ref().expect("announced target filled by its length"),
                    None => view.pattern_prefix(len).expect("pattern prefix available"),
                };
                let window = KMismatchSketch::split(text, &cand.prefix, Side::Left).expect("text sketches share an epoch");
                if let Ok(Comparison::Within(mi)) = window.compare(pattern) {
                    if self.targets.contains_key(&len) {
                        hits.push(Hit { len, start: cand.start, mi, prefix: cand.prefix.clone() });
                    }
                    promoted.push((len, cand));
                }
            }
            if self.queues.get(&v).map_or(false, |q| q.entries.is_empty()) {
                self.queues.remove(&v);
            }
        }
        for (len, cand) in promoted {
            if let Some(next) = self.next_len(len) {
                if cand.start + next - 1 <= self.text_end {
                    self.queues.entry(len).or_default().push(cand, self.compress_at);
                }
            }
        }
        let s = pos + 1;
        if s >= self.first_start && s <= self.last_start && s <= self.text_end && self.next_len(0).is_some() {
            let prefix = match snap {
                Some(p) => p,
                None => view.prefix_snapshot(self.budget),
            };
            self.queues.entry(0).or_default().push(Candidate { start: s, prefix }, self.compress_at);
        }
        hits
    }

    /// Candidates currently alive, per verified length.
    pub fn candidate_counts(&self) -> Vec<(u64, u64)> {
        self.queues.iter().map(|(v, q)| (*v, q.members)).collect()
    }

    pub fn live_candidates(&self) -> u64 {
        self.queues.values().map(|q| q.members).sum()
    }

    /// Sketches held per verified length; runs count three.
    pub fn stored_counts(&self) -> Vec<(u64, usize)> {
        self.queues.iter().map(|(v, q)| (*v, q.sketches)).collect()
    }

    /// Sketches physically stored for candidates.
    pub fn stored_sketches(&self) -> usize {
        self.queues.values().map(|q| q.sketches).sum()
    }

    pub fn live_bytes(&self) -> usize {
        let queues: usize = self
            .queues
            .values()
            .map(|q| q.sketches * self.sketch_bytes + q.entries.len() * 48 + std::mem::size_of::<Queue>())
            .sum();
        let targets: usize = self.targets.values().flatten().map(|s| s.heap_bytes()).sum();
        std::mem::size_of::<Self>() + queues + targets
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum MatcherError {
    #[error("pattern characters must precede text characters")]
    PatternSealed,
    #[error("the pattern is empty")]
    EmptyPattern,
    #[error("text position {0} lies beyond the configured range")]
    OutOfRange(u64),
    #[error(transparent)]
    Sketch(#[from] SketchError),
}

/// A k-mismatch occurrence of the pattern.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Occurrence {
    pub endpoint: u64,
    /// `MI(T[p-l+1..p], P)`.
    pub mi: MismatchInfo,
    /// `sk(T[1..p-l])`.
    pub prefix_sketch: KMismatchSketch,
    pub prefix_weight: WeightValue,
}

struct SplitView<'a> {
    text: &'a SketchBuilder,
    ladder: &'a BTreeMap<u64, KMismatchSketch>,
}

impl TextView for SplitView<'_> {
    fn position(&self) -> u64 {
        self.text.len()
    }

    fn prefix_snapshot(&self, k: usize) -> KMismatchSketch {
        self.text.snapshot_budget(k)
    }

    fn pattern_prefix(&self, len: u64) -> Option<&KMismatchSketch> {
        self.ladder.get(&len)
    }
}

/// Two-phase matcher: the pattern is fed first, then the text from position 1.
/// Occurrences are reported for endpoints `p` with `i + l - 1 <= p <= j`.
pub struct StreamingMatcher {
    k: usize,
    range: (u64, u64),
    pattern: SketchBuilder,
    pattern_weight: WeightValue,
    ladder: BTreeMap<u64, KMismatchSketch>,
    text: SketchBuilder,
    text_weight: WeightValue,
    cascade: Option<Cascade>,
    weight: Arc<dyn WeightPlugin>,
    compress_at: Option<u64>,
}

impl StreamingMatcher {
    pub fn new(k: usize, first: u64, last: u64, epoch: Epoch) -> Result<StreamingMatcher, MatcherError> {
        let weight: Arc<dyn WeightPlugin> = Arc::new(ZeroWeight);
        Ok(StreamingMatcher {
            k,
            range: (first.max(1), last),
            pattern: SketchBuilder::new(k, epoch)?,
            pattern_weight: weight.identity(),
            ladder: BTreeMap::new(),
            text: SketchBuilder::new(k, epoch)?,
            text_weight: weight.identity(),
            cascade: None,
            weight,
            compress_at: None,
        })
    }

    pub fn with_weight(mut self, weight: Arc<dyn WeightPlugin>) -> StreamingMatcher {
        self.pattern_weight = weight.identity();
        self.text_weight = weight.identity();
        self.weight = weight;
        self
    }

    pub fn with_compression(mut self, threshold: Option<u64>) -> StreamingMatcher {
        self.compress_at = threshold;
        self
    }

    pub fn feed_pattern_char(&mut self, c: u8) -> Result<(), MatcherError> {
        if self.cascade.is_some() {
            return Err(MatcherError::PatternSealed);
        }
        self.pattern.append(c)?;
        self.pattern_weight = self.weight.feed(self.pattern_weight, c);
        let len = self.pattern.len();
        if len.is_power_of_two() {
            self.ladder.insert(len, self.pattern.snapshot());
        }
        Ok(())
    }

    /// Lengths of the stored pattern prefix sketches.
    pub fn ladder_lengths(&self) -> Vec<u64> {
        let mut out: Vec<u64> = self.ladder.keys().copied().collect();
        let l = self.pattern.len();
        if l > 0 && !out.contains(&l) {
            out.push(l);
        }
        out
    }

    fn seal(&mut self) -> Result<(), MatcherError> {
        let l = self.pattern.len();
        if l == 0 {
            return Err(MatcherError::EmptyPattern);
        }
        let (first, last) = self.range;
        let last_start = last.saturating_sub(l - 1);
        let mut cascade = Cascade::new(self.k, first, last_start, last);
        cascade.add_target(l, self.pattern.snapshot());
        cascade.set_cap(l);
        cascade.set_compression(self.compress_at);
        let view = SplitView { text: &self.text, ladder: &self.ladder };
        cascade.advance(0, &view);
        self.cascade = Some(cascade);
        Ok(())
    }

    pub fn feed_text_char(&mut self, c: u8) -> Result<Vec<Occurrence>, MatcherError> {
        if self.cascade.is_none() {
            self.seal()?;
        }
        if self.text.len() >= self.range.1 {
            return Err(MatcherError::OutOfRange(self.text.len() + 1));
        }
        self.text.append(c)?;
        self.text_weight = self.weight.feed(self.text_weight, c);
        let pos = self.text.len();
        let view = SplitView { text: &self.text, ladder: &self.ladder };
        let hits = self.cascade.as_mut().expect("sealed").advance(pos, &view);
        Ok(hits
            .into_iter()
            .map(|h| {
                let window = self.weight.update_from_mi(self.pattern_weight, &h.mi.swapped()).ok();
                Occurrence {
                    endpoint: h.endpoint(),
                    prefix_weight: self.weight.subtract(self.text_weight, window),
                    mi: h.mi,
                    prefix_sketch: h.prefix,
                }
            })
            .collect())
    }

    pub fn live_candidates(&self) -> u64 {
        self.cascade.as_ref().map_or(0, Cascade::live_candidates)
    }

    pub fn candidate_counts(&self) -> Vec<(u64, u64)> {
        self.cascade.as_ref().map_or_else(Vec::new, Cascade::candidate_counts)
    }

    pub fn stored_counts(&self) -> Vec<(u64, usize)> {
        self.cascade.as_ref().map_or_else(Vec::new, Cascade::stored_counts)
    }

    pub fn stored_sketches(&self) -> usize {
        self.cascade.as_ref().map_or(0, Cascade::stored_sketches)
    }

    pub fn live_bytes(&self) -> usize {
        let ladder: usize = self.ladder.values().map(|s| s.heap_bytes()).sum();
        ladder
            + self.pattern.heap_bytes()
            + self.text.heap_bytes()
            + self.cascade.as_ref().map_or(0, Cascade::live_bytes)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Error)]
#[error("majority vote over an empty stream")]
pub struct EmptyStream;

/// Boyer-Moore majority vote: returns the majority item if one exists.
#[derive(Debug, Clone)]
pub struct MajorityVote<T> {
    candidate: Option<T>,
    count: u64,
}

impl<T: PartialEq> Default for MajorityVote<T> {
    fn default() -> Self {
        MajorityVote { candidate: None, count: 0 }
    }
}

impl<T: PartialEq> MajorityVote<T> {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn push(&mut self, item: T) {
        if self.count == 0 {
            self.candidate = Some(item);
            self.count = 1;
        } else if self.candidate.as_ref() == Some(&item) {
            self.count += 1;
        } else {
            self.count -= 1;
        }
    }

    pub fn finish(self) -> Result<T, EmptyStream> {
        self.candidate.ok_or(EmptyStream)
    }
}

pub fn majority_vote<T: PartialEq>(items: impl IntoIterator<Item = T>) -> Result<T, EmptyStream> {
    let mut vote = MajorityVote::new();
    items.into_iter().for_each(|x| vote.push(x));
    vote.finish()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sketch::sketch_string;

    fn run(p: &str, t: &str, k: usize) -> Vec<Occurrence> {
        let ep = Epoch::from_seed(3);
        let mut m = StreamingMatcher::new(k, 1, t.len() as u64, ep).unwrap();
        for c in p.bytes() {
            m.feed_pattern_char(c).unwrap();
        }
        let mut out = Vec::new();
        for c in t.bytes() {
            out.extend(m.feed_text_char(c).unwrap());
        }
        out
    }

    #[test]
    fn exact_occurrences() {
        let occ = run("aba", "ababa", 0);
        assert_eq!(occ.iter().map(|o| o.endpoint).collect::<Vec<_>>(), vec![3, 5]);
        let ep = Epoch::from_seed(3);
        assert_eq!(occ[1].prefix_sketch, sketch_string(b"ab", 0, ep).unwrap());
    }

    #[test]
    fn one_mismatch() {
        let occ = run("aaa", "aab", 1);
        assert_eq!(occ.len(), 1);
        assert_eq!(occ[0].endpoint, 3);
        assert_eq!(occ[0].mi, MismatchInfo::between(b"aab", b"aaa"));
    }

    #[test]
    fn ladder_shape() {
        let ep = Epoch::from_seed(1);
        let mut m = StreamingMatcher::new(0, 1, 10, ep).unwrap();
        for c in b"aba" {
            m.feed_pattern_char(*c).unwrap();
        }
        assert_eq!(m.ladder_lengths(), vec![1, 2, 3]);
        let mut m = StreamingMatcher::new(0, 1, 10, ep).unwrap();
        for i in 0..100u8 {
            m.feed_pattern_char(b'a' + i % 7).unwrap();
        }
        assert_eq!(m.ladder_lengths(), vec![1, 2, 4, 8, 16, 32, 64, 100]);
    }

    #[test]
    fn votes() {
        assert_eq!(majority_vote(vec!['x', 'y', 'x']), Ok('x'));
        assert!(majority_vote(vec!['x', 'y']).is_ok());
        assert_eq!(majority_vote(Vec::<u8>::new()), Err(EmptyStream));
    }

    #[test]
    fn compressed_runs_on_unary_text() {
        let ep = Epoch::from_seed(5);
        let mut m = StreamingMatcher::new(1, 1, 3000, ep).unwrap().with_compression(Some(8));
        for _ in 0..1000 {
            m.feed_pattern_char(b'a').unwrap();
        }
        let mut count = 0;
        let mut max_stored = 0;
        for _ in 0..3000 {
            count += m.feed_text_char(b'a').unwrap().len();
            max_stored = max_stored.max(m.stored_sketches());
        }
        assert_eq!(count, 2001);
        assert!(max_stored < 200, "stored {max_stored}");
    }
}
