//! The streaming k-mismatch period detector.
//!
//! The candidate periods `[2..n/2 - 1]` are split into levels; level `j`
//! looks for occurrences of `T[1..ell_j]`, `ell_j = floor(n / 1.5^j)`, and
//! tests each candidate with three sketches at the end of the stream. A level
//! with too many occurrences switches to a pipeline that exploits the
//! approximate periodicity those occurrences force.

mod direct;
mod driver;
mod nonperiodic;
mod periodic;
pub mod plan;
pub mod source;
pub mod stats;
mod tables;
mod text;
pub mod weight;

pub use driver::{detect_in_slice, detect_kmismatch_periods, Detection, PeriodError};
pub use plan::{level_plans, LevelPlan, PathChoice, StreamConfig};
pub use source::{CharSource, SeekSource, SliceSource, StreamSource};
pub use stats::{LevelSummary, ModuleBytes, RunStats, TimeHistogram};
pub use tables::{candidate_test, CandidateOutcome, PeriodReport};
pub use weight::{CharSumWeight, WeightKind, WeightPlugin, WeightValue, ZeroWeight};
