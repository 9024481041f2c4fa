//! The level pipeline for texts with few occurrences of the level pattern.

use crate::matcher::Hit;
use crate::periods::tables::{CandidateTables, PeriodReport};
use crate::periods::text::TextState;
use crate::periods::weight::WeightValue;
use crate::sketch::SketchError;

/// Every occurrence of `P = T[1..ell]` starting at `t + 1` in the level
/// interval puts `t` into `pref`; `suf` is filled when the text reaches `n - t`.
pub(crate) struct NonPeriodic {
    ell: u64,
    n: u64,
    k: usize,
    tables: CandidateTables,
}

impl NonPeriodic {
    pub fn new(ell: u64, n: u64, k: usize, capacity: usize) -> NonPeriodic {
        NonPeriodic { ell, n, k, tables: CandidateTables::new(capacity) }
    }

    pub fn is_bottom(&self) -> bool {
        self.tables.is_bottom()
    }

    /// `w_p` is `w(T[1..ell])`.
    pub fn on_hit(&mut self, hit: &Hit, w_p: WeightValue, text: &TextState) {
        if hit.len != self.ell || self.tables.is_bottom() {
            return;
        }
        let plugin = text.plugin();
        let window = plugin.update_from_mi(w_p, &hit.mi.swapped()).ok();
        let w_t = plugin.subtract(text.weight(), window);
        self.tables.insert_pref(hit.start - 1, hit.prefix.clone(), w_t);
    }

    pub fn step(&mut self, text: &TextState) {
        let pos = text.pos();
        if pos <= self.n && self.tables.wants_suf(self.n - pos) {
            self.tables.insert_suf(self.n - pos, text.snapshot(self.k));
        }
    }

    pub fn heap_bytes(&self) -> usize {
        self.tables.heap_bytes()
    }

    pub fn tables(&self) -> &CandidateTables {
        &self.tables
    }

    pub fn finalize(&self, text: &TextState) -> Result<Option<Vec<PeriodReport>>, SketchError> {
        self.tables.finalize(&text.snapshot(self.k), text.weight(), text.plugin())
    }
}
