//! The text sketch shared by every pipeline of a run.

use std::collections::BTreeMap;
use std::sync::Arc;

use crate::matcher::TextView;
use crate::periods::weight::{WeightPlugin, WeightValue};
use crate::sketch::{Epoch, KMismatchSketch, SketchBuilder, SketchError};

/// Running `sk(T[1..pos])`, `w(T[1..pos])`, and sketches of the prefixes of
/// power-of-two length (every level's pattern is a prefix of `T`).
pub(crate) struct TextState {
    builder: SketchBuilder,
    plugin: Arc<dyn WeightPlugin>,
    weight: WeightValue,
    ladder: BTreeMap<u64, KMismatchSketch>,
    ladder_budget: usize,
}

impl TextState {
    pub fn new(budget: usize, epoch: Epoch, plugin: Arc<dyn WeightPlugin>) -> Result<TextState, SketchError> {
        Ok(TextState {
            builder: SketchBuilder::new(budget, epoch)?,
            weight: plugin.identity(),
            plugin,
            ladder: BTreeMap::new(),
            ladder_budget: budget,
        })
    }

    pub fn push(&mut self, c: u8) -> Result<(), SketchError> {
        self.builder.append(c)?;
        self.weight = self.plugin.feed(self.weight, c);
        let len = self.builder.len();
        if len.is_power_of_two() {
            self.ladder.insert(len, self.builder.snapshot_budget(self.ladder_budget));
        }
        Ok(())
    }

    pub fn pos(&self) -> u64 {
        self.builder.len()
    }

    pub fn weight(&self) -> WeightValue {
        self.weight
    }

    pub fn plugin(&self) -> &dyn WeightPlugin {
        self.plugin.as_ref()
    }

    pub fn snapshot(&self, k: usize) -> KMismatchSketch {
        debug_assert!(k <= self.builder.k());
        self.builder.snapshot_budget(k)
    }

    pub fn budget(&self) -> usize {
        self.builder.k()
    }

    /// Drops sums no remaining consumer reads.
    pub fn shrink(&mut self, builder_budget: usize, ladder_budget: usize) {
        self.builder.shrink(builder_budget);
        if ladder_budget < self.ladder_budget {
            self.ladder_budget = ladder_budget;
            for s in self.ladder.values_mut() {
                *s = s.truncate(ladder_budget);
            }
        }
    }

    pub fn heap_bytes(&self) -> usize {
        self.builder.heap_bytes() + self.ladder.values().map(KMismatchSketch::heap_bytes).sum::<usize>()
    }
}

impl TextView for TextState {
    fn position(&self) -> u64 {
        self.builder.len()
    }

    fn prefix_snapshot(&self, k: usize) -> KMismatchSketch {
        self.builder.snapshot_budget(k)
    }

    fn pattern_prefix(&self, len: u64) -> Option<&KMismatchSketch> {
        self.ladder.get(&len)
    }
}
