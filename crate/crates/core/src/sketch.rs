//! Composable k-mismatch sketches.
//!
//! A sketch of `U` with budget `k` holds `2k+2` power sums of the character
//! encodings (`sum enc(U[i]) * i^j`), the same number of power sums of the
//! squared encodings, and a Karp-Rabin fingerprint. Two sketches of equal
//! length can be compared: if the strings differ in at most `k` positions the
//! full mismatch information is recovered.

use std::fmt;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use thiserror::Error;

use crate::algebra::{
    berlekamp_massey, binomial_convolve, powers, range_power_sums, roots_in_range,
    solve_transposed_vandermonde, Fe, MAX_SUMS, P_FIELD,
};

/// Longest string a sketch may summarize.
pub const N_MAX: u64 = 1 << 30;

/// Largest supported mismatch budget.
pub const K_MAX: usize = MAX_SUMS / 2 - 1;

const DUMP_MAGIC: &[u8; 4] = b"KMS1";

/// Field encoding of a byte: `byte + 1`.
#[inline]
pub fn enc(c: u8) -> Fe {
    Fe::new(c as u64 + 1)
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SketchError {
    #[error("string length exceeds {N_MAX}")]
    CapacityExceeded,
    #[error("sketches come from different randomness epochs")]
    EpochMismatch,
    #[error("length mismatch: part has {part} characters, whole has {whole}")]
    LengthMismatch { part: u64, whole: u64 },
    #[error("mismatch position {pos} outside a string of length {len}")]
    PositionOutOfRange { pos: u64, len: u64 },
    #[error("mismatch budget {0} is not supported")]
    BudgetTooLarge(usize),
    #[error("malformed sketch dump")]
    BadDump,
}

/// The run-global randomness shared by every sketch of one computation.
#[derive(Clone, Copy, PartialEq, Eq, Hash)]
pub struct Epoch {
    id: u64,
    base: Fe,
    base_inv: Fe,
}

impl Epoch {
    pub fn from_seed(seed: u64) -> Epoch {
        let mut rng = ChaCha20Rng::seed_from_u64(seed);
        let id = rng.gen::<u64>();
        let base = Fe::new(rng.gen_range(2..P_FIELD - 1));
        Epoch::with_base(id, base)
    }

    pub fn with_base(id: u64, base: Fe) -> Epoch {
        Epoch { id, base, base_inv: base.inv() }
    }

    pub fn id(&self) -> u64 {
        self.id
    }

    pub fn base(&self) -> Fe {
        self.base
    }
}

impl fmt::Debug for Epoch {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Epoch({:#x})", self.id)
    }
}

/// One differing position.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Mismatch {
    pub pos: u64,
    pub left: u8,
    pub right: u8,
}

/// Sorted mismatch information `MI(S, T)` of two equal-length strings.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Default)]
pub struct MismatchInfo {
    entries: Vec<Mismatch>,
}

impl MismatchInfo {
    pub fn empty() -> MismatchInfo {
        MismatchInfo::default()
    }

    /// Builds from entries, checking order and that every entry is a real mismatch.
    pub fn new(entries: Vec<Mismatch>) -> Option<MismatchInfo> {
        let sorted = entries.windows(2).all(|w| w[0].pos < w[1].pos);
        let valid = entries.iter().all(|e| e.left != e.right && e.pos >= 1);
        (sorted && valid).then_some(MismatchInfo { entries })
    }

    /// Position-wise comparison of two equal-length strings.
    pub fn between(a: &[u8], b: &[u8]) -> MismatchInfo {
        assert_eq!(a.len(), b.len(), "strings must have equal length");
        let entries = a
            .iter()
            .zip(b)
            .enumerate()
            .filter(|(_, (x, y))| x != y)
            .map(|(i, (&left, &right))| Mismatch { pos: i as u64 + 1, left, right })
            .collect();
        MismatchInfo { entries }
    }

    pub fn entries(&self) -> &[Mismatch] {
        &self.entries
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = &Mismatch> {
        self.entries.iter()
    }

    /// `MI(T, S)` from `MI(S, T)`.
    pub fn swapped(&self) -> MismatchInfo {
        MismatchInfo {
            entries: self
                .entries
                .iter()
                .map(|e| Mismatch { pos: e.pos, left: e.right, right: e.left })
                .collect(),
        }
    }

    /// Entries with positions in `[from, from + len)`, renumbered to start at 1.
    pub fn window(&self, from: u64, len: u64) -> MismatchInfo {
        let entries = self
            .entries
            .iter()
            .filter(|e| e.pos >= from && e.pos < from + len)
            .map(|e| Mismatch { pos: e.pos - from + 1, ..*e })
            .collect();
        MismatchInfo { entries }
    }

    /// Adds `offset` to every position.
    pub fn shifted(&self, offset: u64) -> MismatchInfo {
        MismatchInfo {
            entries: self.entries.iter().map(|e| Mismatch { pos: e.pos + offset, ..*e }).collect(),
        }
    }

    /// Mismatches of `XY` against `X'Y'` from those of the two halves.
    pub fn concat(&self, left_len: u64, other: &MismatchInfo) -> MismatchInfo {
        debug_assert!(self.entries.last().map_or(true, |e| e.pos <= left_len));
        let mut entries = self.entries.clone();
        entries.extend(other.entries.iter().map(|e| Mismatch { pos: e.pos + left_len, ..*e }));
        MismatchInfo { entries }
    }

    /// `MI(X, Z)` from `MI(X, Y)` and `MI(Y, Z)`.
    pub fn chain(xy: &MismatchInfo, yz: &MismatchInfo) -> MismatchInfo {
        let (a, b) = (&xy.entries, &yz.entries);
        let mut out = Vec::with_capacity(a.len() + b.len());
        let (mut i, mut j) = (0, 0);
        while i < a.len() || j < b.len() {
            let take_a = j >= b.len() || (i < a.len() && a[i].pos < b[j].pos);
            let take_b = i >= a.len() || (j < b.len() && b[j].pos < a[i].pos);
            let e = if take_a {
                i += 1;
                a[i - 1]
            } else if take_b {
                j += 1;
                b[j - 1]
            } else {
                let (x, y) = (a[i], b[j]);
                debug_assert_eq!(x.right, y.left);
                i += 1;
                j += 1;
                Mismatch { pos: x.pos, left: x.left, right: y.right }
            };
            if e.left != e.right {
                out.push(e);
            }
        }
        MismatchInfo { entries: out }
    }

    /// Applies the mismatches to the left string, producing the right one.
    pub fn apply_to(&self, s: &mut [u8]) {
        for e in &self.entries {
            debug_assert_eq!(s[e.pos as usize - 1], e.left);
            s[e.pos as usize - 1] = e.right;
        }
    }
}

/// Which side of a concatenation the known part summarizes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Side {
    /// The part is the left factor `U` of `UV`; the result summarizes `V`.
    Left,
    /// The part is the right factor `V` of `UV`; the result summarizes `U`.
    Right,
}

/// Outcome of comparing two sketches.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Comparison {
    Within(MismatchInfo),
    Exceeds,
    LengthMismatch,
}

impl Comparison {
    pub fn within(self) -> Option<MismatchInfo> {
        match self {
            Comparison::Within(mi) => Some(mi),
            _ => None,
        }
    }
}

#[derive(Clone, PartialEq, Eq, Hash)]
pub struct KMismatchSketch {
    k: usize,
    len: u64,
    s: Vec<Fe>,
    t: Vec<Fe>,
    fp: Fe,
    epoch: Epoch,
}

impl fmt::Debug for KMismatchSketch {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("KMismatchSketch")
            .field("k", &self.k)
            .field("len", &self.len)
            .field("fp", &self.fp)
            .finish()
    }
}

fn check_budget(k: usize) -> Result<(), SketchError> {
    if k > K_MAX {
        Err(SketchError::BudgetTooLarge(k))
    } else {
        Ok(())
    }
}

/// Direct construction from a whole string.
pub fn sketch_string(u: &[u8], k: usize, epoch: Epoch) -> Result<KMismatchSketch, SketchError> {
    let mut b = SketchBuilder::new(k, epoch)?;
    for &c in u {
        b.append(c)?;
    }
    Ok(b.snapshot())
}

impl KMismatchSketch {
    /// Sketch of the empty string.
    pub fn empty(k: usize, epoch: Epoch) -> KMismatchSketch {
        let n = 2 * k + 2;
        KMismatchSketch { k, len: 0, s: vec![Fe::ZERO; n], t: vec![Fe::ZERO; n], fp: Fe::ZERO, epoch }
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn len(&self) -> u64 {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn epoch(&self) -> Epoch {
        self.epoch
    }

    pub fn s_sums(&self) -> &[Fe] {
        &self.s
    }

    pub fn t_sums(&self) -> &[Fe] {
        &self.t
    }

    pub fn fingerprint(&self) -> Fe {
        self.fp
    }

    /// Bytes retained by this value.
    pub fn heap_bytes(&self) -> usize {
        std::mem::size_of::<Self>() + (self.s.capacity() + self.t.capacity()) * 8
    }

    /// Bytes retained by a sketch of budget `k`.
    pub fn bytes_for_budget(k: usize) -> usize {
        std::mem::size_of::<Self>() + (4 * k + 4) * 8
    }

    /// The same sketch with a smaller budget.
    pub fn truncate(&self, k: usize) -> KMismatchSketch {
        if k >= self.k {
            return self.clone();
        }
        let n = 2 * k + 2;
        KMismatchSketch {
            k,
            len: self.len,
            s: self.s[..n].to_vec(),
            t: self.t[..n].to_vec(),
            fp: self.fp,
            epoch: self.epoch,
        }
    }

    fn aligned<'a>(
        a: &'a KMismatchSketch,
        b: &'a KMismatchSketch,
    ) -> Result<(usize, &'a [Fe], &'a [Fe], &'a [Fe], &'a [Fe]), SketchError> {
        if a.epoch != b.epoch {
            return Err(SketchError::EpochMismatch);
        }
        let k = a.k.min(b.k);
        let n = 2 * k + 2;
        Ok((k, &a.s[..n], &a.t[..n], &b.s[..n], &b.t[..n]))
    }

    /// Sketch of `UV` from sketches of `U` (self) and `V`.
    pub fn concat(&self, v: &KMismatchSketch) -> Result<KMismatchSketch, SketchError> {
        let (k, su, tu, sv, tv) = Self::aligned(self, v)?;
        let len = self.len + v.len;
        if len > N_MAX {
            return Err(SketchError::CapacityExceeded);
        }
        let d = powers(Fe::new(self.len), su.len());
        let sv = binomial_convolve(sv, &d);
        let tv = binomial_convolve(tv, &d);
        Ok(KMismatchSketch {
            k,
            len,
            s: su.iter().zip(&sv).map(|(a, b)| *a + *b).collect(),
            t: tu.iter().zip(&tv).map(|(a, b)| *a + *b).collect(),
            fp: self.fp + self.epoch.base.pow(self.len) * v.fp,
            epoch: self.epoch,
        })
    }

    /// Recovers one factor of `whole = UV` given a sketch of the other.
    pub fn split(whole: &KMismatchSketch, part: &KMismatchSketch, side: Side) -> Result<KMismatchSketch, SketchError> {
        let (k, sw, tw, sp, tp) = Self::aligned(whole, part)?;
        if part.len > whole.len {
            return Err(SketchError::LengthMismatch { part: part.len, whole: whole.len });
        }
        let rest = whole.len - part.len;
        let epoch = whole.epoch;
        match side {
            Side::Left => {
                let d = powers(-Fe::new(part.len), sw.len());
                let ds: Vec<Fe> = sw.iter().zip(sp).map(|(a, b)| *a - *b).collect();
                let dt: Vec<Fe> = tw.iter().zip(tp).map(|(a, b)| *a - *b).collect();
                Ok(KMismatchSketch {
                    k,
                    len: rest,
                    s: binomial_convolve(&ds, &d),
                    t: binomial_convolve(&dt, &d),
                    fp: (whole.fp - part.fp) * epoch.base_inv.pow(part.len),
                    epoch,
                })
            }
            Side::Right => {
                let d = powers(Fe::new(rest), sw.len());
                let ss = binomial_convolve(sp, &d);
                let ts = binomial_convolve(tp, &d);
                Ok(KMismatchSketch {
                    k,
                    len: rest,
                    s: sw.iter().zip(&ss).map(|(a, b)| *a - *b).collect(),
                    t: tw.iter().zip(&ts).map(|(a, b)| *a - *b).collect(),
                    fp: whole.fp - epoch.base.pow(rest) * part.fp,
                    epoch,
                })
            }
        }
    }

    /// Sketch of `U^m`.
    pub fn power(&self, m: u64) -> Result<KMismatchSketch, SketchError> {
        if m.checked_mul(self.len).map_or(true, |l| l > N_MAX) {
            return Err(SketchError::CapacityExceeded);
        }
        if m == 0 || self.len == 0 {
            return Ok(KMismatchSketch::empty(self.k, self.epoch));
        }
        let n = self.s.len();
        let sums = range_power_sums(n - 1, m);
        let lp = powers(Fe::new(self.len), n);
        let coef: Vec<Fe> = sums.iter().zip(&lp).map(|(a, b)| *a * *b).collect();
        let rl = self.epoch.base.pow(self.len);
        let geom = if rl == Fe::ONE {
            Fe::new(m)
        } else {
            (rl.pow(m) - Fe::ONE) * (rl - Fe::ONE).inv()
        };
        Ok(KMismatchSketch {
            k: self.k,
            len: self.len * m,
            s: binomial_convolve(&self.s, &coef),
            t: binomial_convolve(&self.t, &coef),
            fp: self.fp * geom,
            epoch: self.epoch,
        })
    }

    /// Sketch of `V` from this sketch of `U` and `MI(U, V)`.
    pub fn apply_mi(&self, mi: &MismatchInfo) -> Result<KMismatchSketch, SketchError> {
        let mut out = self.clone();
        for e in mi.iter() {
            if e.pos == 0 || e.pos > self.len {
                return Err(SketchError::PositionOutOfRange { pos: e.pos, len: self.len });
            }
            let (l, r) = (enc(e.left), enc(e.right));
            let d = r - l;
            let d2 = r * r - l * l;
            let x = Fe::new(e.pos);
            let mut pw = Fe::ONE;
            for j in 0..out.s.len() {
                out.s[j] += d * pw;
                out.t[j] += d2 * pw;
                pw *= x;
            }
            out.fp += d * self.epoch.base.pow(e.pos);
        }
        Ok(out)
    }

    /// Decides whether the summarized strings are within the smaller of the
    /// two budgets and, if so, recovers their mismatch information.
    pub fn compare(&self, other: &KMismatchSketch) -> Result<Comparison, SketchError> {
        let (k, su, tu, sv, tv) = Self::aligned(self, other)?;
        if self.len != other.len {
            return Ok(Comparison::LengthMismatch);
        }
        let ds: Vec<Fe> = su.iter().zip(sv).map(|(a, b)| *a - *b).collect();
        let dfp = self.fp - other.fp;
        if ds.iter().all(|x| x.is_zero()) {
            let same = dfp.is_zero() && tu == tv;
            return Ok(if same { Comparison::Within(MismatchInfo::empty()) } else { Comparison::Exceeds });
        }
        let dt: Vec<Fe> = tu.iter().zip(tv).map(|(a, b)| *a - *b).collect();
        Ok(decode(k, self.len, &ds, &dt, dfp, self.epoch).map_or(Comparison::Exceeds, Comparison::Within))
    }

    /// Little-endian dump: magic, then k, length, sums, fingerprint and epoch.
    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(4 + 8 * (self.s.len() * 2 + 5));
        out.extend_from_slice(DUMP_MAGIC);
        let mut put = |v: u64| out.extend_from_slice(&v.to_le_bytes());
        put(self.k as u64);
        put(self.len);
        self.s.iter().for_each(|x| put(x.value()));
        self.t.iter().for_each(|x| put(x.value()));
        put(self.fp.value());
        put(self.epoch.id);
        put(self.epoch.base.value());
        out
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<KMismatchSketch, SketchError> {
        if bytes.len() < 4 + 16 || &bytes[..4] != DUMP_MAGIC {
            return Err(SketchError::BadDump);
        }
        let words: Vec<u64> = bytes[4..]
            .chunks(8)
            .map(|c| c.try_into().map(u64::from_le_bytes).map_err(|_| SketchError::BadDump))
            .collect::<Result<_, _>>()?;
        let k = words[0] as usize;
        check_budget(k)?;
        let n = 2 * k + 2;
        if words.len() != 2 + 2 * n + 3 {
            return Err(SketchError::BadDump);
        }
        let field = |v: u64| if v < P_FIELD { Ok(Fe::new(v)) } else { Err(SketchError::BadDump) };
        let s = words[2..2 + n].iter().map(|&v| field(v)).collect::<Result<_, _>>()?;
        let t = words[2 + n..2 + 2 * n].iter().map(|&v| field(v)).collect::<Result<_, _>>()?;
        let base = field(words[2 + 2 * n + 2])?;
        if base.is_zero() {
            return Err(SketchError::BadDump);
        }
        Ok(KMismatchSketch {
            k,
            len: words[1],
            s,
            t,
            fp: field(words[2 + 2 * n])?,
            epoch: Epoch::with_base(words[2 + 2 * n + 1], base),
        })
    }
}

fn decode(k: usize, len: u64, ds: &[Fe], dt: &[Fe], dfp: Fe, epoch: Epoch) -> Option<MismatchInfo> {
    let rec = berlekamp_massey(ds);
    let l = rec.length;
    if l == 0 || l > k {
        return None;
    }
    let positions = roots_in_range(&rec.locator(), len).ok()?;
    let nodes: Vec<Fe> = positions.iter().map(|&p| Fe::new(p)).collect();
    let d = solve_transposed_vandermonde(&nodes, ds).ok()?;
    let c = solve_transposed_vandermonde(&nodes, dt).ok()?;
    if !consistent(&nodes, &d, ds) || !consistent(&nodes, &c, dt) {
        return None;
    }
    let half = Fe::new(2).inv();
    let mut entries = Vec::with_capacity(l);
    let mut fp_check = Fe::ZERO;
    for i in 0..l {
        if d[i].is_zero() {
            return None;
        }
        let sum = c[i] * d[i].inv();
        let left = char_of((sum + d[i]) * half)?;
        let right = char_of((sum - d[i]) * half)?;
        fp_check += d[i] * epoch.base.pow(positions[i]);
        entries.push(Mismatch { pos: positions[i], left, right });
    }
    (fp_check == dfp).then(|| MismatchInfo { entries })
}

fn consistent(nodes: &[Fe], mags: &[Fe], rhs: &[Fe]) -> bool {
    let mut pw: Vec<Fe> = mags.to_vec();
    for r in rhs {
        let acc = pw.iter().fold(Fe::ZERO, |a, b| a + *b);
        if acc != *r {
            return false;
        }
        for (p, x) in pw.iter_mut().zip(nodes) {
            *p *= *x;
        }
    }
    true
}

fn char_of(e: Fe) -> Option<u8> {
    let v = e.value();
    (1..=256).contains(&v).then(|| (v - 1) as u8)
}

/// Streaming construction: one character at a time, `O(k)` work each.
#[derive(Clone, Debug)]
pub struct SketchBuilder {
    k: usize,
    len: u64,
    s: Vec<Fe>,
    t: Vec<Fe>,
    fp: Fe,
    rpow: Fe,
    epoch: Epoch,
}

impl SketchBuilder {
    pub fn new(k: usize, epoch: Epoch) -> Result<SketchBuilder, SketchError> {
        check_budget(k)?;
        let n = 2 * k + 2;
        Ok(SketchBuilder {
            k,
            len: 0,
            s: vec![Fe::ZERO; n],
            t: vec![Fe::ZERO; n],
            fp: Fe::ZERO,
            rpow: Fe::ONE,
            epoch,
        })
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn len(&self) -> u64 {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn epoch(&self) -> Epoch {
        self.epoch
    }

    pub fn append(&mut self, c: u8) -> Result<(), SketchError> {
        if self.len >= N_MAX {
            return Err(SketchError::CapacityExceeded);
        }
        self.len += 1;
        let x = Fe::new(self.len);
        let e = enc(c);
        let e2 = e * e;
        let mut pw = Fe::ONE;
        for j in 0..self.s.len() {
            self.s[j] += e * pw;
            self.t[j] += e2 * pw;
            pw *= x;
        }
        self.rpow *= self.epoch.base;
        self.fp += e * self.rpow;
        Ok(())
    }

    pub fn snapshot(&self) -> KMismatchSketch {
        self.snapshot_budget(self.k)
    }

    /// Snapshot truncated to a smaller budget.
    pub fn snapshot_budget(&self, k: usize) -> KMismatchSketch {
        let n = 2 * k.min(self.k) + 2;
        KMismatchSketch {
            k: k.min(self.k),
            len: self.len,
            s: self.s[..n].to_vec(),
            t: self.t[..n].to_vec(),
            fp: self.fp,
            epoch: self.epoch,
        }
    }

    /// Lowers the budget in place; later snapshots are limited to `k`.
    pub fn shrink(&mut self, k: usize) {
        if k < self.k {
            self.k = k;
            self.s.truncate(2 * k + 2);
            self.t.truncate(2 * k + 2);
            self.s.shrink_to_fit();
            self.t.shrink_to_fit();
        }
    }

    pub fn heap_bytes(&self) -> usize {
        std::mem::size_of::<Self>() + (self.s.capacity() + self.t.capacity()) * 8
    }
}
