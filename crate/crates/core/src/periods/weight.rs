//! Additive weight functions that can be updated from mismatch information.

use std::fmt;
use std::sync::Arc;

use thiserror::Error;

use crate::sketch::{enc, MismatchInfo};

/// A weight, or `None` where the function is undefined.
pub type WeightValue = Option<i64>;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Error)]
#[error("weight of a required operand is undefined")]
pub struct UndefinedWeight;

/// `w(XY) = w(X) + w(Y)`, computable in a stream, and updatable from
/// `MI(X, Y)` for equal-length `X`, `Y`.
pub trait WeightPlugin: fmt::Debug + Send + Sync {
    fn name(&self) -> &'static str;

    /// Weight of the empty string.
    fn identity(&self) -> WeightValue {
        Some(0)
    }

    /// `w(Xc)` from `w(X)`.
    fn feed(&self, acc: WeightValue, c: u8) -> WeightValue;

    fn combine(&self, x: WeightValue, y: WeightValue) -> WeightValue {
        Some(x? + y?)
    }

    /// The weight of the remaining factor when `part` is cut off `whole`.
    fn subtract(&self, whole: WeightValue, part: WeightValue) -> WeightValue {
        Some(whole? - part?)
    }

    /// `w(Y)` from `w(X)` and `MI(X, Y)`.
    fn update_from_mi(&self, wx: WeightValue, mi: &MismatchInfo) -> Result<i64, UndefinedWeight>;

    fn of_str(&self, s: &[u8]) -> WeightValue {
        s.iter().fold(self.identity(), |acc, &c| self.feed(acc, c))
    }
}

/// Constant zero: plain Hamming use.
#[derive(Debug, Clone, Copy, Default)]
pub struct ZeroWeight;

impl WeightPlugin for ZeroWeight {
    fn name(&self) -> &'static str {
        "zero"
    }

    fn feed(&self, _acc: WeightValue, _c: u8) -> WeightValue {
        Some(0)
    }

    fn update_from_mi(&self, wx: WeightValue, _mi: &MismatchInfo) -> Result<i64, UndefinedWeight> {
        wx.ok_or(UndefinedWeight)
    }
}

/// Sum of character encodings (`byte + 1`).
#[derive(Debug, Clone, Copy, Default)]
pub struct CharSumWeight;

impl WeightPlugin for CharSumWeight {
    fn name(&self) -> &'static str {
        "charsum"
    }

    fn feed(&self, acc: WeightValue, c: u8) -> WeightValue {
        Some(acc? + enc(c).value() as i64)
    }

    fn update_from_mi(&self, wx: WeightValue, mi: &MismatchInfo) -> Result<i64, UndefinedWeight> {
        let w = wx.ok_or(UndefinedWeight)?;
        Ok(w + mi.iter().map(|e| e.right as i64 - e.left as i64).sum::<i64>())
    }
}

/// Selector used by configuration and the CLI.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum WeightKind {
    #[default]
    Zero,
    CharSum,
}

impl WeightKind {
    pub fn plugin(self) -> Arc<dyn WeightPlugin> {
        match self {
            WeightKind::Zero => Arc::new(ZeroWeight),
            WeightKind::CharSum => Arc::new(CharSumWeight),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sketch::Mismatch;

    #[test]
    fn charsum_examples() {
        let w = CharSumWeight;
        assert_eq!(w.of_str(b"abc"), Some(297));
        assert_eq!(w.combine(w.of_str(b"ab"), w.of_str(b"c")), w.of_str(b"abc"));
        let mi = MismatchInfo::new(vec![Mismatch { pos: 3, left: b'c', right: b'b' }]).unwrap();
        assert_eq!(w.update_from_mi(w.of_str(b"abca"), &mi), Ok(w.of_str(b"abba").unwrap()));
        assert_eq!(w.update_from_mi(None, &mi), Err(UndefinedWeight));
        assert_eq!(w.subtract(w.of_str(b"abc"), w.of_str(b"a")), w.of_str(b"bc"));
    }

    #[test]
    fn zero_examples() {
        let w = ZeroWeight;
        assert_eq!(w.of_str(b"anything"), Some(0));
        assert_eq!(w.update_from_mi(Some(0), &MismatchInfo::empty()), Ok(0));
    }
}
