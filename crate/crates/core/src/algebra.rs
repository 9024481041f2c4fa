//! Arithmetic over the Mersenne prime field 2^61 - 1 and the decoding
//! primitives used by the sketches: power sums, shortest linear recurrences,
//! root finding restricted to a position range and transposed Vandermonde
//! solving.

use std::fmt;
use std::ops::{Add, AddAssign, Mul, MulAssign, Neg, Sub, SubAssign};
use std::sync::OnceLock;

use thiserror::Error;

/// The field modulus.
pub const P_FIELD: u64 = (1u64 << 61) - 1;

/// An element of the prime field of order `P_FIELD`.
#[derive(Clone, Copy, PartialEq, Eq, Hash, Default, PartialOrd, Ord)]
pub struct Fe(u64);

impl Fe {
    pub const ZERO: Fe = Fe(0);
    pub const ONE: Fe = Fe(1);

    /// Reduces an arbitrary `u64` into the field.
    #[inline]
    pub fn new(v: u64) -> Fe {
        let r = (v & P_FIELD) + (v >> 61);
        Fe(if r >= P_FIELD { r - P_FIELD } else { r })
    }

    /// Field element for a signed integer.
    pub fn from_i64(v: i64) -> Fe {
        if v >= 0 {
            Fe::new(v as u64)
        } else {
            -Fe::new(v.unsigned_abs())
        }
    }

    #[inline]
    pub fn value(self) -> u64 {
        self.0
    }

    #[inline]
    pub fn is_zero(self) -> bool {
        self.0 == 0
    }

    /// Reduces any value below 2^127.
    #[inline]
    fn reduce128(x: u128) -> Fe {
        let p = P_FIELD as u128;
        let x1 = (x & p) + (x >> 61);
        let x2 = (x1 & p) + (x1 >> 61);
        Fe::new(x2 as u64)
    }

    pub fn pow(self, mut e: u64) -> Fe {
        let mut base = self;
        let mut acc = Fe::ONE;
        while e > 0 {
            if e & 1 == 1 {
                acc *= base;
            }
            base *= base;
            e >>= 1;
        }
        acc
    }

    /// Multiplicative inverse. Panics on zero.
    pub fn inv(self) -> Fe {
        assert!(!self.is_zero(), "inverse of zero");
        self.pow(P_FIELD - 2)
    }
}

impl fmt::Debug for Fe {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

impl fmt::Display for Fe {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

impl From<u64> for Fe {
    fn from(v: u64) -> Fe {
        Fe::new(v)
    }
}

impl Add for Fe {
    type Output = Fe;
    #[inline]
    fn add(self, o: Fe) -> Fe {
        let s = self.0 + o.0;
        Fe(if s >= P_FIELD { s - P_FIELD } else { s })
    }
}

impl Sub for Fe {
    type Output = Fe;
    #[inline]
    fn sub(self, o: Fe) -> Fe {
        if self.0 >= o.0 {
            Fe(self.0 - o.0)
        } else {
            Fe(self.0 + P_FIELD - o.0)
        }
    }
}

impl Neg for Fe {
    type Output = Fe;
    #[inline]
    fn neg(self) -> Fe {
        if self.0 == 0 {
            self
        } else {
            Fe(P_FIELD - self.0)
        }
    }
}

impl Mul for Fe {
    type Output = Fe;
    #[inline]
    fn mul(self, o: Fe) -> Fe {
        Fe::reduce128(self.0 as u128 * o.0 as u128)
    }
}

impl AddAssign for Fe {
    #[inline]
    fn add_assign(&mut self, o: Fe) {
        *self = *self + o;
    }
}

impl SubAssign for Fe {
    #[inline]
    fn sub_assign(&mut self, o: Fe) {
        *self = *self - o;
    }
}

impl MulAssign for Fe {
    #[inline]
    fn mul_assign(&mut self, o: Fe) {
        *self = *self * o;
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Error)]
#[error("locator does not split into distinct in-range roots")]
pub struct DecodeReject;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Error)]
#[error("Vandermonde nodes are not pairwise distinct")]
pub struct SingularSystem;

const FACT_LEN: usize = 8192;

struct Factorials {
    fact: Vec<Fe>,
    inv_fact: Vec<Fe>,
}

fn factorials() -> &'static Factorials {
    static TABLE: OnceLock<Factorials> = OnceLock::new();
    TABLE.get_or_init(|| {
        let mut fact = vec![Fe::ONE; FACT_LEN];
        for i in 1..FACT_LEN {
            fact[i] = fact[i - 1] * Fe::new(i as u64);
        }
        let mut inv_fact = vec![Fe::ONE; FACT_LEN];
        inv_fact[FACT_LEN - 1] = fact[FACT_LEN - 1].inv();
        for i in (1..FACT_LEN).rev() {
            inv_fact[i - 1] = inv_fact[i] * Fe::new(i as u64);
        }
        Factorials { fact, inv_fact }
    })
}

/// Largest number of power sums per family any sketch may carry.
pub const MAX_SUMS: usize = FACT_LEN / 2;

pub fn factorial(i: usize) -> Fe {
    factorials().fact[i]
}

pub fn inv_factorial(i: usize) -> Fe {
    factorials().inv_fact[i]
}

pub fn binomial(n: usize, r: usize) -> Fe {
    if r > n {
        return Fe::ZERO;
    }
    let f = factorials();
    f.fact[n] * f.inv_fact[r] * f.inv_fact[n - r]
}

/// Computes `out[j] = sum_a C(j, a) * coef[a] * vals[j - a]` for every `j`.
///
/// This is the common shape of re-basing power sums: shifting positions by
/// `d` uses `coef[a] = d^a`, repeating a block uses `coef[a] = L^a * S_a(m)`.
pub fn binomial_convolve(vals: &[Fe], coef: &[Fe]) -> Vec<Fe> {
    let n = vals.len();
    debug_assert!(coef.len() >= n);
    let f = factorials();
    let scaled: Vec<Fe> = (0..n).map(|i| vals[i] * f.inv_fact[i]).collect();
    let wc: Vec<Fe> = (0..n).map(|a| coef[a] * f.inv_fact[a]).collect();
    let mut out = Vec::with_capacity(n);
    for j in 0..n {
        let mut acc: u128 = 0;
        let mut acc_fe = Fe::ZERO;
        for a in 0..=j {
            acc += wc[a].0 as u128 * scaled[j - a].0 as u128;
            if a & 31 == 31 {
                acc_fe += Fe::reduce128(acc);
                acc = 0;
            }
        }
        acc_fe += Fe::reduce128(acc);
        out.push(acc_fe * f.fact[j]);
    }
    out
}

/// `[1, x, x^2, ..., x^(n-1)]`.
pub fn powers(x: Fe, n: usize) -> Vec<Fe> {
    let mut out = Vec::with_capacity(n);
    let mut cur = Fe::ONE;
    for _ in 0..n {
        out.push(cur);
        cur *= x;
    }
    out
}

/// Sum of `r^s` for `r` in `0..m`, with `0^0 = 1`.
pub fn range_power_sum(s: usize, m: u64) -> Fe {
    range_power_sums(s, m)[s]
}

/// All of `range_power_sum(0..=max_s, m)` in one pass.
pub fn range_power_sums(max_s: usize, m: u64) -> Vec<Fe> {
    let mf = Fe::new(m);
    let mut out: Vec<Fe> = Vec::with_capacity(max_s + 1);
    let mut mpow = mf;
    for s in 0..=max_s {
        mpow *= if s == 0 { Fe::ONE } else { mf };
        // sum_{t<=s} C(s+1,t) S_t = m^(s+1)
        let mut acc = mpow;
        for (t, st) in out.iter().enumerate() {
            acc -= binomial(s + 1, t) * *st;
        }
        out.push(acc * factorial(s) * inv_factorial(s + 1));
    }
    out
}

/// Shortest linear recurrence `s_j = sum_{i=1..L} c_i * s_{j-i}`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RecurrenceResult {
    /// `c_1..c_L`.
    pub coefficients: Vec<Fe>,
    pub length: usize,
}

impl RecurrenceResult {
    /// Monic characteristic polynomial `x^L - c_1 x^(L-1) - ... - c_L`,
    /// low degree first. Its roots are the spike positions.
    pub fn locator(&self) -> Vec<Fe> {
        let l = self.length;
        let mut poly = vec![Fe::ZERO; l + 1];
        poly[l] = Fe::ONE;
        for (i, c) in self.coefficients.iter().enumerate() {
            poly[l - 1 - i] = -*c;
        }
        poly
    }
}

pub fn berlekamp_massey(seq: &[Fe]) -> RecurrenceResult {
    let mut c = vec![Fe::ONE];
    let mut b = vec![Fe::ONE];
    let mut l = 0usize;
    let mut shift = 1usize;
    let mut bd = Fe::ONE;
    for n in 0..seq.len() {
        let mut d = seq[n];
        for i in 1..=l.min(c.len() - 1) {
            d += c[i] * seq[n - i];
        }
        if d.is_zero() {
            shift += 1;
            continue;
        }
        let coef = d * bd.inv();
        let prev = c.clone();
        if c.len() < b.len() + shift {
            c.resize(b.len() + shift, Fe::ZERO);
        }
        for (i, bi) in b.iter().enumerate() {
            c[i + shift] -= coef * *bi;
        }
        if 2 * l <= n {
            l = n + 1 - l;
            b = prev;
            bd = d;
            shift = 1;
        } else {
            shift += 1;
        }
    }
    c.resize(l + 1, Fe::ZERO);
    RecurrenceResult {
        coefficients: c[1..].iter().map(|x| -*x).collect(),
        length: l,
    }
}

// Polynomials are coefficient vectors, low degree first, without trailing zeros.

fn trim(p: &mut Vec<Fe>) {
    while p.last().map_or(false, |c| c.is_zero()) {
        p.pop();
    }
}

fn make_monic(p: &mut [Fe]) {
    let lead = *p.last().expect("nonzero polynomial");
    if lead != Fe::ONE {
        let inv = lead.inv();
        for c in p.iter_mut() {
            *c *= inv;
        }
    }
}

fn poly_divrem(a: &[Fe], b: &[Fe]) -> (Vec<Fe>, Vec<Fe>) {
    let mut r = a.to_vec();
    trim(&mut r);
    let db = b.len() - 1;
    if r.len() < b.len() {
        return (Vec::new(), r);
    }
    let inv_lead = b[db].inv();
    let mut q = vec![Fe::ZERO; r.len() - db];
    for i in (0..q.len()).rev() {
        let coef = r[i + db] * inv_lead;
        q[i] = coef;
        if !coef.is_zero() {
            for (j, bj) in b.iter().enumerate() {
                r[i + j] -= coef * *bj;
            }
        }
    }
    r.truncate(db);
    trim(&mut r);
    (q, r)
}

fn poly_mulmod(a: &[Fe], b: &[Fe], m: &[Fe]) -> Vec<Fe> {
    if a.is_empty() || b.is_empty() {
        return Vec::new();
    }
    let mut prod = vec![Fe::ZERO; a.len() + b.len() - 1];
    for (i, ai) in a.iter().enumerate() {
        if ai.is_zero() {
            continue;
        }
        for (j, bj) in b.iter().enumerate() {
            prod[i + j] += *ai * *bj;
        }
    }
    poly_divrem(&prod, m).1
}

fn poly_powmod(base: &[Fe], mut e: u64, m: &[Fe]) -> Vec<Fe> {
    let mut acc = vec![Fe::ONE];
    let mut b = poly_divrem(base, m).1;
    while e > 0 {
        if e & 1 == 1 {
            acc = poly_mulmod(&acc, &b, m);
        }
        e >>= 1;
        if e > 0 {
            b = poly_mulmod(&b, &b, m);
        }
    }
    acc
}

fn poly_gcd(a: &[Fe], b: &[Fe]) -> Vec<Fe> {
    let mut x = a.to_vec();
    let mut y = b.to_vec();
    trim(&mut x);
    trim(&mut y);
    while !y.is_empty() {
        let r = poly_divrem(&x, &y).1;
        x = y;
        y = r;
    }
    if !x.is_empty() {
        make_monic(&mut x);
    }
    x
}

fn sqrt(a: Fe) -> Option<Fe> {
    // P_FIELD = 3 (mod 4)
    let r = a.pow((P_FIELD + 1) / 4);
    if r * r == a {
        Some(r)
    } else {
        None
    }
}

fn split_roots(f: &[Fe], out: &mut Vec<Fe>, shift: &mut u64) -> Result<(), DecodeReject> {
    match f.len() {
        0 | 1 => Ok(()),
        2 => {
            out.push(-f[0] * f[1].inv());
            Ok(())
        }
        3 => {
            let inv = f[2].inv();
            let (b, c) = (f[1] * inv, f[0] * inv);
            let disc = b * b - Fe::new(4) * c;
            let sq = sqrt(disc).ok_or(DecodeReject)?;
            if sq.is_zero() {
                return Err(DecodeReject);
            }
            let half = Fe::new(2).inv();
            out.push((-b + sq) * half);
            out.push((-b - sq) * half);
            Ok(())
        }
        _ => loop {
            *shift += 1;
            let base = [Fe::new(*shift), Fe::ONE];
            let mut h = poly_powmod(&base, (P_FIELD - 1) / 2, f);
            if h.is_empty() {
                h.push(Fe::ZERO);
            }
            h[0] -= Fe::ONE;
            trim(&mut h);
            let g = poly_gcd(f, &h);
            if g.len() > 1 && g.len() < f.len() {
                let (q, _) = poly_divrem(f, &g);
                split_roots(&g, out, shift)?;
                return split_roots(&q, out, shift);
            }
        },
    }
}

/// All roots of `poly` in `[1..m]`, provided the polynomial splits into
/// distinct linear factors whose roots all lie in that range.
pub fn roots_in_range(poly: &[Fe], m: u64) -> Result<Vec<u64>, DecodeReject> {
    let mut f = poly.to_vec();
    trim(&mut f);
    if f.is_empty() {
        return Err(DecodeReject);
    }
    make_monic(&mut f);
    let deg = f.len() - 1;
    if deg > m as usize {
        return Err(DecodeReject);
    }
    if m <= 128 * (deg as u64 + 1) {
        return roots_by_scan(&f, m);
    }
    let mut roots = Vec::with_capacity(deg);
    if deg >= 3 {
        // keep only the product of distinct linear factors
        let xp = poly_powmod(&[Fe::ZERO, Fe::ONE], P_FIELD, &f);
        let mut xp_minus_x = xp;
        if xp_minus_x.len() < 2 {
            xp_minus_x.resize(2, Fe::ZERO);
        }
        xp_minus_x[1] -= Fe::ONE;
        trim(&mut xp_minus_x);
        let g = poly_gcd(&f, &xp_minus_x);
        if g.len() != f.len() {
            return Err(DecodeReject);
        }
    }
    let mut shift = 0u64;
    split_roots(&f, &mut roots, &mut shift)?;
    let mut out: Vec<u64> = Vec::with_capacity(roots.len());
    for r in roots {
        let v = r.value();
        if v == 0 || v > m {
            return Err(DecodeReject);
        }
        out.push(v);
    }
    out.sort_unstable();
    if out.windows(2).any(|w| w[0] == w[1]) || out.len() != deg {
        return Err(DecodeReject);
    }
    Ok(out)
}

fn roots_by_scan(f: &[Fe], m: u64) -> Result<Vec<u64>, DecodeReject> {
    let deg = f.len() - 1;
    let mut out = Vec::with_capacity(deg);
    if deg == 0 {
        return Ok(out);
    }
    for x in 1..=m {
        let xe = Fe::new(x);
        let v = f.iter().rev().fold(Fe::ZERO, |acc, c| acc * xe + *c);
        if v.is_zero() {
            out.push(x);
            if out.len() == deg {
                return Ok(out);
            }
        }
    }
    Err(DecodeReject)
}

/// Solves `sum_i c_i * nodes_i^j = rhs_j` for `j < nodes.len()`.
pub fn solve_transposed_vandermonde(nodes: &[Fe], rhs: &[Fe]) -> Result<Vec<Fe>, SingularSystem> {
    let l = nodes.len();
    assert!(rhs.len() >= l, "not enough right-hand sides");
    let mut sorted = nodes.to_vec();
    sorted.sort_unstable();
    if sorted.windows(2).any(|w| w[0] == w[1]) {
        return Err(SingularSystem);
    }
    // master polynomial M(x) = prod (x - x_i)
    let mut master = vec![Fe::ONE];
    for &x in nodes {
        let mut next = vec![Fe::ZERO; master.len() + 1];
        for (i, c) in master.iter().enumerate() {
            next[i + 1] += *c;
            next[i] -= *c * x;
        }
        master = next;
    }
    let mut out = Vec::with_capacity(l);
    let mut q = vec![Fe::ZERO; l];
    for &x in nodes {
        // q = M / (x - node), synthetic division from the top
        let mut carry = Fe::ZERO;
        for d in (0..l).rev() {
            carry = master[d + 1] + carry * x;
            q[d] = carry;
        }
        let mut num = Fe::ZERO;
        let mut den = Fe::ZERO;
        let mut xp = Fe::ONE;
        for d in 0..l {
            num += q[d] * rhs[d];
            den += q[d] * xp;
            xp *= x;
        }
        out.push(num * den.inv());
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn fes(v: &[u64]) -> Vec<Fe> {
        v.iter().map(|&x| Fe::new(x)).collect()
    }

    #[test]
    fn field_basics() {
        let a = Fe::new(P_FIELD - 1);
        assert_eq!(a + Fe::ONE, Fe::ZERO);
        assert_eq!(Fe::from_i64(-1), a);
        assert_eq!(a * a, Fe::ONE);
        let x = Fe::new(123_456_789_012);
        assert_eq!(x * x.inv(), Fe::ONE);
        assert_eq!(Fe::new(u64::MAX).value(), u64::MAX % P_FIELD);
    }

    #[test]
    fn bm_examples() {
        let r = berlekamp_massey(&fes(&[1, 1, 1, 1]));
        assert_eq!(r.length, 1);
        assert_eq!(r.coefficients, fes(&[1]));
        let r = berlekamp_massey(&fes(&[3, 15, 75, 375]));
        assert_eq!(r.length, 1);
        assert_eq!(r.coefficients, fes(&[5]));
        let r = berlekamp_massey(&fes(&[0, 0, 0, 0]));
        assert_eq!(r.length, 0);
        assert!(r.coefficients.is_empty());
    }

    #[test]
    fn roots_examples() {
        // (x-3)(x-7) = x^2 - 10x + 21
        let p = vec![Fe::new(21), -Fe::new(10), Fe::ONE];
        assert_eq!(roots_in_range(&p, 10), Ok(vec![3, 7]));
        // (x-2)^2 = x^2 - 4x + 4
        let p = vec![Fe::new(4), -Fe::new(4), Fe::ONE];
        assert_eq!(roots_in_range(&p, 10), Err(DecodeReject));
        let p = vec![Fe::ONE, Fe::ZERO, Fe::ONE];
        assert_eq!(roots_in_range(&p, 10), Err(DecodeReject));
    }

    #[test]
    fn vandermonde_examples() {
        let c = solve_transposed_vandermonde(&fes(&[2, 5]), &fes(&[7, 26, 112, 554])).unwrap();
        assert_eq!(c, fes(&[3, 4]));
        let c = solve_transposed_vandermonde(&fes(&[1]), &fes(&[9, 9])).unwrap();
        assert_eq!(c, fes(&[9]));
        assert_eq!(
            solve_transposed_vandermonde(&fes(&[4, 4]), &fes(&[1, 2])),
            Err(SingularSystem)
        );
    }

    #[test]
    fn power_sum_examples() {
        assert_eq!(range_power_sum(0, 5), Fe::new(5));
        assert_eq!(range_power_sum(1, 5), Fe::new(10));
        assert_eq!(range_power_sum(2, 5), Fe::new(30));
        assert_eq!(range_power_sum(0, 0), Fe::ZERO);
        assert_eq!(range_power_sum(3, 1), Fe::ZERO);
        assert_eq!(range_power_sum(0, 1), Fe::ONE);
    }

    #[test]
    fn convolve_matches_shift() {
        let vals = fes(&[4, 9, 20, 51]);
        let d = Fe::new(3);
        let out = binomial_convolve(&vals, &powers(d, 4));
        for j in 0..4 {
            let mut acc = Fe::ZERO;
            for a in 0..=j {
                acc += binomial(j, a) * d.pow(a as u64) * vals[j - a];
            }
            assert_eq!(out[j], acc);
        }
    }
}
