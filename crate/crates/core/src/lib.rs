//! Streaming detection of k-mismatch periods.
//!
//! A k-mismatch period of a text `T` of length `n` is an integer `p` such that
//! `T[p..n]` and `T[1..n-p+1]` differ in at most `k` positions. Period `p`
//! corresponds to the alignment shift `p - 1`, so `p = 1` always qualifies.
//!
//! The detector reads the text once, left to right, and keeps only small
//! algebraic summaries ([`sketch::KMismatchSketch`]) of selected substrings.

pub mod algebra;
pub mod corpus;
pub mod sketch;
pub mod matcher;
pub mod oracle;
pub mod periods;
pub mod wildcards;
