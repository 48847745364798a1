//! Ranks, rank-differences and the potential functions built on them.
//!
//! Everything here is exact. [`Rational`] wraps an arbitrary-precision
//! fraction; categories and parameters are derived with integer powers only.
//! [`AnalysisParams::phi_scaled`] gives the node potential as an integer
//! numerator over the fixed denominator [`AnalysisParams::phi_denominator`],
//! which is what the accounting engine sums on its hot path.

use std::cmp::Ordering;
use std::fmt;
use std::iter::Sum;
use std::ops::{Add, AddAssign, Div, Mul, Neg, Sub};

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{Signed, ToPrimitive, Zero};
use thiserror::Error;

use crate::heap::{Handle, Heap, HeapError};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum PotentialError {
    #[error("key {0} has no rank in the table")]
    KeyNotInTable(i64),
    #[error("duplicate key {0} in rank universe")]
    DuplicateKey(i64),
    #[error("capacity n = {0} is below the minimum of 4")]
    CapacityTooSmall(u64),
    #[error("scaling factor q = {q} must satisfy 1 < q < n = {n}")]
    InvalidScaling { n: u64, q: u64 },
    #[error(transparent)]
    Heap(#[from] HeapError),
}

/// Exact rational number in canonical form.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Default)]
pub struct Rational(BigRational);

impl Rational {
    pub fn new(numer: impl Into<BigInt>, denom: impl Into<BigInt>) -> Self {
        Rational(BigRational::new(numer.into(), denom.into()))
    }

    pub fn from_integer(v: impl Into<BigInt>) -> Self {
        Rational(BigRational::from_integer(v.into()))
    }

    pub fn zero() -> Self {
        Rational(BigRational::zero())
    }

    pub fn numer(&self) -> &BigInt {
        self.0.numer()
    }

    pub fn denom(&self) -> &BigInt {
        self.0.denom()
    }

    pub fn is_negative(&self) -> bool {
        self.0.is_negative()
    }

    pub fn to_f64(&self) -> f64 {
        self.0.to_f64().unwrap_or(f64::NAN)
    }
}

impl fmt::Display for Rational {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.0.is_integer() {
            write!(f, "{}", self.0.numer())
        } else {
            write!(f, "{}/{}", self.0.numer(), self.0.denom())
        }
    }
}

macro_rules! forward_binop {
    ($trait:ident, $method:ident) => {
        impl $trait for Rational {
            type Output = Rational;
            fn $method(self, rhs: Rational) -> Rational {
                Rational(self.0.$method(rhs.0))
            }
        }
        impl<'a> $trait<&'a Rational> for &'a Rational {
            type Output = Rational;
            fn $method(self, rhs: &'a Rational) -> Rational {
                Rational((&self.0).$method(&rhs.0))
            }
        }
    };
}

forward_binop!(Add, add);
forward_binop!(Sub, sub);
forward_binop!(Mul, mul);
forward_binop!(Div, div);

impl Neg for Rational {
    type Output = Rational;
    fn neg(self) -> Rational {
        Rational(-self.0)
    }
}

impl AddAssign for Rational {
    fn add_assign(&mut self, rhs: Rational) {
        self.0 += rhs.0;
    }
}

impl Sum for Rational {
    fn sum<I: Iterator<Item = Rational>>(iter: I) -> Rational {
        iter.fold(Rational::zero(), |a, b| a + b)
    }
}

/// `base^exp`, or `None` on overflow.
pub(crate) fn checked_pow(base: u64, exp: u32) -> Option<u64> {
    base.checked_pow(exp)
}

/// Smallest `r >= 1` with `r^e >= x`.
fn ceil_root(x: u64, e: u32) -> u64 {
    if x <= 1 {
        return 1;
    }
    let (mut lo, mut hi) = (1u64, x);
    while lo < hi {
        let mid = lo + (hi - lo) / 2;
        match checked_pow(mid, e) {
            Some(v) if v < x => lo = mid + 1,
            _ => hi = mid,
        }
    }
    lo
}

/// Largest `e` with `base^e <= x`, for `x >= 1` and `base >= 2`.
fn floor_log(x: u64, base: u64) -> u32 {
    let mut e = 0u32;
    let mut p = 1u64;
    while let Some(next) = p.checked_mul(base) {
        if next > x {
            break;
        }
        p = next;
        e += 1;
    }
    e
}

/// `floor(sqrt(log2 n))`: the largest `s` with `2^(s*s) <= n`.
fn floor_sqrt_log2(n: u64) -> u32 {
    let mut s = 0u32;
    while (s + 1) * (s + 1) < 64 && (1u64 << ((s + 1) * (s + 1))) <= n {
        s += 1;
    }
    s
}

/// The unique `c` with `q^c <= rd < q^(c+1)`.
pub fn category(rd: u64, q: u64) -> u32 {
    assert!(rd >= 1 && q >= 2, "category needs rd >= 1 and q >= 2");
    floor_log(rd, q)
}

/// Capacity `n`, scaling factor `q` and category count `t` of one epoch.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct AnalysisParams {
    pub n: u64,
    pub t: u32,
    pub q: u64,
}

impl AnalysisParams {
    /// Picks `t_target = max(2, floor(sqrt(log2 n)))`, the smallest `q >= 2`
    /// with `q^t_target >= n - 1`, then recomputes `t = floor(log_q(n-1)) + 1`.
    pub fn derive(n: u64) -> Result<Self, PotentialError> {
        if n < 4 {
            return Err(PotentialError::CapacityTooSmall(n));
        }
        let t_target = floor_sqrt_log2(n).max(2);
        let q = ceil_root(n - 1, t_target).max(2);
        Self::with_scaling(n, q)
    }

    pub fn with_scaling(n: u64, q: u64) -> Result<Self, PotentialError> {
        if n < 4 {
            return Err(PotentialError::CapacityTooSmall(n));
        }
        if q <= 1 || q >= n {
            return Err(PotentialError::InvalidScaling { n, q });
        }
        let t = floor_log(n - 1, q) + 1;
        Ok(AnalysisParams { n, t, q })
    }

    /// `T = 2^t - 1`, the size of a freshly created box.
    pub fn max_box_size(&self) -> u64 {
        (1u64 << self.t) - 1
    }

    /// Denominator `q^(t-2) * (q - 1)` that clears every node potential.
    pub fn phi_denominator(&self) -> i128 {
        (self.q as i128).pow(self.t - 2) * (self.q as i128 - 1)
    }

    /// Node potential times [`phi_denominator`](Self::phi_denominator).
    pub fn phi_scaled(&self, rd: u64) -> i128 {
        if rd == 0 {
            return 0;
        }
        let q = self.q as i128;
        let c = category(rd, self.q);
        debug_assert!(c < self.t, "rd {rd} exceeds capacity of {self:?}");
        let rd = rd as i128;
        if c == 0 {
            (rd - 1) * q.pow(self.t - 1)
        } else {
            (rd - q.pow(c)) * q.pow(self.t - 1 - c) + c as i128 * q * self.phi_denominator()
        }
    }

    pub fn category(&self, rd: u64) -> u32 {
        category(rd, self.q)
    }
}

/// Node potential `(rd - q^c) / (q^c - q^(c-1)) + c*q`, with `c` the
/// category of `rd`. A root (`rd = 0`) has potential zero.
pub fn phi_node(rd: u64, params: &AnalysisParams) -> Rational {
    if rd == 0 {
        return Rational::zero();
    }
    let c = category(rd, params.q);
    let q = BigRational::from_integer(BigInt::from(params.q));
    let qc = BigRational::from_integer(BigInt::from(params.q).pow(c));
    let qc_prev = &qc / &q;
    let rd = BigRational::from_integer(BigInt::from(rd));
    let c_big = BigRational::from_integer(BigInt::from(c));
    Rational((rd - &qc) / (&qc - qc_prev) + c_big * q)
}

/// Sorted key universe; a key's rank is the number of smaller keys.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct RankTable {
    sorted: Vec<i64>,
}

impl RankTable {
    pub fn build(universe: impl IntoIterator<Item = i64>) -> Result<Self, PotentialError> {
        let mut sorted: Vec<i64> = universe.into_iter().collect();
        sorted.sort_unstable();
        if let Some(w) = sorted.windows(2).find(|w| w[0] == w[1]) {
            return Err(PotentialError::DuplicateKey(w[0]));
        }
        Ok(RankTable { sorted })
    }

    pub fn rank(&self, key: i64) -> Option<u64> {
        self.sorted.binary_search(&key).ok().map(|r| r as u64)
    }

    pub fn len(&self) -> usize {
        self.sorted.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sorted.is_empty()
    }

    pub fn contains(&self, key: i64) -> bool {
        self.rank(key).is_some()
    }

    pub fn universe(&self) -> &[i64] {
        &self.sorted
    }

    fn rank_of(&self, key: i64) -> Result<u64, PotentialError> {
        self.rank(key).ok_or(PotentialError::KeyNotInTable(key))
    }
}

/// `r(x) - r(parent(x))`, or 0 for the root.
pub fn rank_diff(h: &Heap, rt: &RankTable, x: Handle) -> Result<u64, PotentialError> {
    let rx = rt.rank_of(h.key(x)?)?;
    match h.parent(x)? {
        None => Ok(0),
        Some(p) => {
            let rp = rt.rank_of(h.key(p)?)?;
            Ok(rx - rp)
        }
    }
}

fn rank_diffs(h: &Heap, rt: &RankTable) -> Result<Vec<u64>, PotentialError> {
    h.reachable()
        .into_iter()
        .map(|x| rank_diff(h, rt, x))
        .collect()
}

/// Total node potential over the heap; the root contributes zero.
pub fn phi_n(
    h: &Heap,
    rt: &RankTable,
    params: &AnalysisParams,
) -> Result<Rational, PotentialError> {
    Ok(rank_diffs(h, rt)?
        .into_iter()
        .map(|rd| phi_node(rd, params))
        .sum())
}

/// Sum of rank-differences.
pub fn phi_simple(h: &Heap, rt: &RankTable) -> Result<u128, PotentialError> {
    Ok(rank_diffs(h, rt)?.into_iter().map(u128::from).sum())
}

/// Integer stand-in for `sqrt(n)` used by the light/heavy potential.
pub fn sqrt_threshold(n: u64) -> u64 {
    n.isqrt()
}

/// Heavy nodes have `rd >= s`; light ones `rd <= s - 1`.
pub fn is_heavy(rd: u64, n: u64) -> bool {
    rd >= sqrt_threshold(n)
}

/// `rd` for light nodes, `s - 1 + rd / s` for heavy ones, `s = floor(sqrt n)`.
pub fn phi_sqrt_node(rd: u64, n: u64) -> Rational {
    let s = sqrt_threshold(n);
    if !is_heavy(rd, n) {
        Rational::from_integer(rd)
    } else {
        Rational::from_integer(s as i64 - 1) + Rational::new(rd, s)
    }
}

pub fn phi_sqrt(h: &Heap, rt: &RankTable, n: u64) -> Result<Rational, PotentialError> {
    Ok(rank_diffs(h, rt)?
        .into_iter()
        .map(|rd| phi_sqrt_node(rd, n))
        .sum())
}

/// Exact test of `value < 2 n sqrt(n)` for nonnegative `value`.
pub fn below_two_n_sqrt_n(value: &Rational, n: u64) -> bool {
    if value.is_negative() {
        return true;
    }
    // value = a/b < 2 n sqrt(n)  <=>  a^2 < 4 n^3 b^2
    let a = value.numer();
    let b = value.denom();
    let n = BigInt::from(n);
    (a * a).cmp(&(BigInt::from(4) * &n * &n * &n * b * b)) == Ordering::Less
}
